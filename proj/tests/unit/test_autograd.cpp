// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#include "gradcheck.hpp"

#include "lagm/error.hpp"
#include "lagm/nn.hpp"

#include <doctest.h>

#include <array>

using namespace lagm;
using lagm::testing::check_input_gradients;
using lagm::testing::check_param_gradients;

namespace {

Matrix random_matrix(Index r, Index c, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    return gaussian(r, c, scale, rng);
}

// Contracts an arbitrary output against fixed weights so every entry matters.
Var weighted_sum(Tape& tape, Var y, std::uint64_t seed = 99) {
    return ag::sum(ag::mul(y, tape.constant(random_matrix(y.rows(), y.cols(), seed))));
}

void expect_ok(const lagm::testing::GradCheckResult& r) {
    INFO(r.worst);
    CHECK(r.checked > 0);
    CHECK(r.max_relative_error < 1e-4);
}

}  // namespace

TEST_CASE("elementwise and matrix ops match finite differences") {
    const Matrix a = random_matrix(3, 4, 1);
    const Matrix b = random_matrix(4, 5, 2);
    const Matrix c = random_matrix(3, 4, 3);
    const Matrix row = random_matrix(1, 4, 4);

    expect_ok(check_input_gradients({a, b}, [](Tape& t, auto v) { return weighted_sum(t, ag::matmul(v[0], v[1])); }));
    expect_ok(check_input_gradients({a, c}, [](Tape& t, auto v) { return weighted_sum(t, ag::matmul_nt(v[0], v[1])); }));
    expect_ok(check_input_gradients({a}, [](Tape& t, auto v) { return weighted_sum(t, ag::transpose(v[0])); }));
    expect_ok(check_input_gradients({a, c}, [](Tape& t, auto v) { return weighted_sum(t, ag::sub(v[0], v[1])); }));
    expect_ok(check_input_gradients({a, c}, [](Tape& t, auto v) { return weighted_sum(t, ag::mul(v[0], v[1])); }));
    expect_ok(check_input_gradients({a, row}, [](Tape& t, auto v) { return weighted_sum(t, ag::add_row(v[0], v[1])); }));
    expect_ok(check_input_gradients({a, row}, [](Tape& t, auto v) { return weighted_sum(t, ag::mul_row(v[0], v[1])); }));
    expect_ok(check_input_gradients({a}, [](Tape& t, auto v) { return weighted_sum(t, ag::gelu(v[0])); }));
    expect_ok(check_input_gradients({a}, [](Tape& t, auto v) { return weighted_sum(t, ag::elu(v[0])); }));
    expect_ok(check_input_gradients({a}, [](Tape& t, auto v) { return weighted_sum(t, ag::leaky_relu(v[0], 0.2)); }));
    expect_ok(check_input_gradients({a}, [](Tape& t, auto v) { return weighted_sum(t, ag::tanh(v[0])); }));
    expect_ok(check_input_gradients({a}, [](Tape& t, auto v) { return weighted_sum(t, ag::exp(v[0])); }));
    expect_ok(check_input_gradients({a}, [](Tape& t, auto v) { return weighted_sum(t, ag::softmax_rows(v[0])); }));
    expect_ok(check_input_gradients({a}, [](Tape& t, auto v) { return weighted_sum(t, ag::log_softmax_rows(v[0])); }));
    expect_ok(check_input_gradients({a}, [](Tape& t, auto v) { return weighted_sum(t, ag::l2_normalize_rows(v[0])); }));
    expect_ok(check_input_gradients({a}, [](Tape& t, auto v) { return weighted_sum(t, ag::mean_rows(v[0])); }));
    expect_ok(check_input_gradients({a}, [](Tape& t, auto v) { return weighted_sum(t, ag::reshape(v[0], 2, 6)); }));
    expect_ok(check_input_gradients({a}, [](Tape& t, auto v) { return weighted_sum(t, ag::slice_cols(v[0], 1, 2)); }));
    expect_ok(check_input_gradients({a}, [](Tape& t, auto v) { return weighted_sum(t, ag::slice_rows(v[0], 1, 2)); }));
    expect_ok(check_input_gradients({row}, [](Tape& t, auto v) { return weighted_sum(t, ag::broadcast_rows(v[0], 3)); }));
    expect_ok(check_input_gradients({a}, [](Tape&, auto v) { return ag::sum_squares(v[0]); }));
    expect_ok(check_input_gradients({random_matrix(5, 1, 7)}, [](Tape& t, auto v) {
        const std::array<int, 5> groups{0, 2, 0, 2, 1};
        return weighted_sum(t, ag::segment_softmax(v[0], groups));
    }));
    expect_ok(check_input_gradients({a}, [](Tape&, auto v) { return ag::mean(v[0]); }));
    expect_ok(check_input_gradients({a}, [](Tape& t, auto v) {
        const std::array<Index, 4> rows{2, 0, 2, 1};
        return weighted_sum(t, ag::gather_rows(v[0], rows));
    }));
    expect_ok(check_input_gradients({a, c}, [](Tape& t, auto v) {
        const std::array<Var, 2> parts{v[0], v[1]};
        return weighted_sum(t, ag::concat_rows(parts));
    }));
    expect_ok(check_input_gradients({a, c}, [](Tape& t, auto v) {
        const std::array<Var, 2> parts{v[0], v[1]};
        return weighted_sum(t, ag::concat_cols(parts));
    }));
    expect_ok(check_input_gradients({a, row, row}, [](Tape& t, auto v) {
        return weighted_sum(t, ag::layer_norm_rows(v[0], ag::add_scalar(v[1], 1.0), v[2]));
    }));
}

TEST_CASE("loss ops match finite differences") {
    const Matrix a = random_matrix(3, 4, 5);
    const Matrix b = random_matrix(3, 4, 6);
    expect_ok(check_input_gradients({a, b}, [](Tape&, auto v) { return ag::mse(v[0], v[1]); }));
    expect_ok(check_input_gradients({a, b}, [](Tape&, auto v) { return ag::smooth_l1(v[0], v[1], 0.5); }));
    expect_ok(check_input_gradients({a, b}, [](Tape&, auto v) { return ag::gaussian_kl(v[0], v[1]); }));
    expect_ok(check_input_gradients({a}, [](Tape&, auto v) {
        const std::array<Index, 3> targets{1, 3, 0};
        return ag::cross_entropy_rows(v[0], targets);
    }));
}

TEST_CASE("loss op values") {
    Tape tape;
    Matrix zero = Matrix::Zero(2, 3);
    CHECK(ag::gaussian_kl(tape.constant(zero), tape.constant(zero)).scalar() == doctest::Approx(0.0));
    Matrix a(1, 2), b(1, 2);
    a << 0.0, 3.0;
    b << 0.25, 0.0;
    // |d| = 0.25 < beta: 0.5 d^2 / beta; |d| = 3: |d| - beta / 2
    CHECK(ag::smooth_l1(tape.constant(a), tape.constant(b), 1.0).scalar() ==
          doctest::Approx((0.5 * 0.0625 + 2.5) / 2.0));
    Matrix logits = Matrix::Zero(2, 4);
    const std::array<Index, 2> targets{0, 3};
    CHECK(ag::cross_entropy_rows(tape.constant(logits), targets).scalar() == doctest::Approx(std::log(4.0)));
}

TEST_CASE("segment softmax normalizes within groups") {
    Tape tape;
    Matrix x(4, 1);
    x << 1.0, 2.0, 3.0, -1.0;
    const std::array<int, 4> groups{5, 5, 7, 5};
    const Matrix y = ag::segment_softmax(tape.constant(x), groups).value();
    CHECK(y(0, 0) + y(1, 0) + y(3, 0) == doctest::Approx(1.0));
    CHECK(y(2, 0) == 1.0);
}

TEST_CASE("shape mismatches are rejected") {
    Tape tape;
    Var a = tape.constant(Matrix::Zero(2, 3));
    Var b = tape.constant(Matrix::Zero(3, 2));
    CHECK_THROWS_AS(ag::add(a, b), InvalidArgument);
    CHECK_THROWS_AS(ag::matmul(a, a), InvalidArgument);
}

TEST_CASE("f32 precision rounds recorded values") {
    Tape tape(Precision::f32);
    Matrix m(1, 1);
    m << 1.0 + 1e-12;
    CHECK(tape.constant(m).scalar() == 1.0);
}

TEST_CASE("transformer stack parameters match finite differences") {
    std::mt19937_64 rng(11);
    ParameterSet params;
    auto stack = nn::TransformerStack::create(params, "enc", 2, 8, 2, 12, true, rng);
    auto proj = nn::Linear::create(params, "proj", 8, 3, rng);
    const Matrix x = random_matrix(4, 8, 12);
    const Matrix memory = random_matrix(3, 8, 13);
    auto r = check_param_gradients(params, [&](Tape& tape, const ParameterSet& p) {
        nn::Scope s{tape, p};
        Var y = proj(s, stack(s, tape.constant(x), tape.constant(memory)));
        return weighted_sum(tape, y);
    });
    expect_ok(r);
}

TEST_CASE("AdamW moves parameters against the gradient and clips") {
    ParameterSet params;
    Matrix init(1, 2);
    init << 1.0, -1.0;
    const auto id = params.add("w", init);
    AdamW opt(params, AdamWConfig{.learning_rate = 0.1, .clip_norm = 1.0});
    GradientSet g(params);
    Matrix grad(1, 2);
    grad << 100.0, -100.0;
    g.accumulate(id, grad);
    opt.step(params, g);
    // the first bias-corrected Adam step has magnitude lr per coordinate
    CHECK(params.value(id)(0, 0) == doctest::Approx(0.9));
    CHECK(params.value(id)(0, 1) == doctest::Approx(-0.9));
    CHECK(opt.steps_taken() == 1);
}

TEST_CASE("sinusoidal table rows are unit-bounded and distinct") {
    const Matrix t = nn::sinusoidal_table(5, 8);
    CHECK(t.rows() == 5);
    CHECK(t.cwiseAbs().maxCoeff() <= 1.0);
    CHECK((t.row(1) - t.row(2)).norm() > 0.0);
    CHECK((nn::sinusoidal_row(3.0, 8) - t.row(3)).norm() < 1e-12);
}
