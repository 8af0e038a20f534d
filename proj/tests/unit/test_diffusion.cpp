// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lagm/diffusion.hpp"
#include "lagm/error.hpp"
#include "lagm/params.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace lagm;

namespace {

Matrix random_matrix(Index r, Index c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return gaussian(r, c, 1.0, rng);
}

}  // namespace

TEST_CASE("default schedule endpoints and invariants") {
    const NoiseSchedule s = make_schedule();
    CHECK(s.T == 1000);
    CHECK(s.beta(1) == 8.5e-4);
    CHECK(s.beta(1000) == 0.012);
    for (int t = 2; t <= s.T; ++t) {
        CHECK(s.beta(t) > s.beta(t - 1));
        CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
    }
    CHECK(s.alpha_bar(s.T) > 0.0);
    CHECK(s.alpha_bar(0) == 1.0);
}

TEST_CASE("two-step schedule holds the endpoints exactly") {
    const NoiseSchedule s = make_schedule(2, 8.5e-4, 0.012);
    CHECK(s.betas == std::vector<double>{8.5e-4, 0.012});
}

TEST_CASE("cumulative products match an independent oracle") {
    const NoiseSchedule s = make_schedule();
    long double log_bar = 0.0L;
    for (int t = 1; t <= 1000; ++t) {
        const long double beta = 8.5e-4L + (0.012L - 8.5e-4L) * static_cast<long double>(t - 1) / 999.0L;
        log_bar += std::log1p(-beta);
        CHECK(s.alpha_bar(t) == doctest::Approx(static_cast<double>(std::exp(log_bar))).epsilon(1e-12));
    }
}

TEST_CASE("schedule rejects invalid ranges") {
    CHECK_THROWS_AS(make_schedule(1), InvalidArgument);
    CHECK_THROWS_AS(make_schedule(10, 0.0, 0.1), InvalidArgument);
    CHECK_THROWS_AS(make_schedule(10, 0.2, 0.1), InvalidArgument);
    CHECK_THROWS_AS(make_schedule(10, 0.1, 1.0), InvalidArgument);
    const NoiseSchedule s = make_schedule(10);
    CHECK_THROWS_AS(s.beta(0), InvalidArgument);
    CHECK_THROWS_AS(s.alpha_bar(11), InvalidArgument);
}

TEST_CASE("q_sample branches") {
    const NoiseSchedule s = make_schedule();
    const Matrix z0 = random_matrix(4, 6, 1);
    const Matrix eps = random_matrix(4, 6, 2);
    const Matrix zero = Matrix::Zero(4, 6);
    CHECK((q_sample(z0, 300, zero, s) - std::sqrt(s.alpha_bar(300)) * z0).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((q_sample(z0, s.T, eps, s) - eps).norm() <=
          std::sqrt(s.alpha_bar(s.T)) * z0.norm() + (1.0 - std::sqrt(1.0 - s.alpha_bar(s.T))) * eps.norm() + 1e-15);
    for (int t : {1, 17, 500, 1000}) {
        const Matrix z = q_sample(z0, t, eps, s);
        for (Index i = 0; i < z.size(); ++i) {
            const double oracle =
                std::sqrt(s.alpha_bar(t)) * z0.data()[i] + std::sqrt(1.0 - s.alpha_bar(t)) * eps.data()[i];
            CHECK(z.data()[i] == doctest::Approx(oracle).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(q_sample(z0, 1001, eps, s), InvalidArgument);
    CHECK_THROWS_AS(q_sample(z0, 5, Matrix::Zero(3, 6), s), InvalidArgument);
}

TEST_CASE("timestep grid is even and includes both ends") {
    const NoiseSchedule s = make_schedule();
    const auto g = timestep_grid(s, 50);
    REQUIRE(g.size() == 50);
    CHECK(g.front() == 1000);
    CHECK(g.back() == 1);
    for (std::size_t i = 1; i < g.size(); ++i) {
        const int gap = g[i - 1] - g[i];
        CHECK(gap >= 20);
        CHECK(gap <= 21);
    }
    const auto full = timestep_grid(s, 1000);
    for (int i = 0; i < 1000; ++i) CHECK(full[static_cast<std::size_t>(i)] == 1000 - i);
    CHECK(timestep_grid(s, 1) == std::vector<int>{1000});
    CHECK_THROWS_AS(timestep_grid(s, 0), InvalidArgument);
    CHECK_THROWS_AS(timestep_grid(s, 1001), InvalidArgument);
}

TEST_CASE("deterministic steps invert the forward process exactly") {
    const NoiseSchedule s = make_schedule();
    const Matrix z0 = random_matrix(4, 8, 3);
    const Matrix eps = random_matrix(4, 8, 4);
    const Matrix unused = Matrix::Zero(4, 8);
    for (int steps : {1000, 50, 7}) {
        const auto grid = timestep_grid(s, steps);
        Matrix z = q_sample(z0, s.T, eps, s);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const int t = grid[i];
            const int prev = i + 1 < grid.size() ? grid[i + 1] : 0;
            // Linear toy denoiser: the exact noise implied by z and the known z0.
            const Matrix eps_hat = (z - std::sqrt(s.alpha_bar(t)) * z0) / std::sqrt(1.0 - s.alpha_bar(t));
            z = reverse_step(z, eps_hat, t, prev, s, StepMode::deterministic, unused);
        }
        CHECK((z - z0).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("deterministic steps are repeatable and ignore noise") {
    const NoiseSchedule s = make_schedule();
    const Matrix z = random_matrix(2, 5, 5);
    const Matrix e = random_matrix(2, 5, 6);
    const Matrix a = reverse_step(z, e, 400, 380, s, StepMode::deterministic, random_matrix(2, 5, 7));
    const Matrix b = reverse_step(z, e, 400, 380, s, StepMode::deterministic, random_matrix(2, 5, 8));
    CHECK(a == b);
}

TEST_CASE("ancestral step mean and noise scale") {
    const NoiseSchedule s = make_schedule();
    const Matrix z = random_matrix(3, 4, 9);
    const Matrix e = random_matrix(3, 4, 10);
    const Matrix n = random_matrix(3, 4, 11);
    const int t = 250;
    const Matrix mean = reverse_step(z, e, t, s, StepMode::ancestral, Matrix::Zero(3, 4));
    for (Index i = 0; i < z.size(); ++i) {
        const double oracle = (z.data()[i] - s.beta(t) / std::sqrt(1.0 - s.alpha_bar(t)) * e.data()[i]) /
                              std::sqrt(1.0 - s.beta(t));
        CHECK(mean.data()[i] == doctest::Approx(oracle).epsilon(1e-12));
    }
    const Matrix noisy = reverse_step(z, e, t, s, StepMode::ancestral, n);
    CHECK(((noisy - mean) - std::sqrt(s.beta(t)) * n).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(reverse_step(z, e, 1, s, StepMode::ancestral, n) == reverse_step(z, e, 1, s, StepMode::ancestral, 0 * n));
}

TEST_CASE("reverse step rejects t = 0 and bad shapes") {
    const NoiseSchedule s = make_schedule();
    const Matrix z = Matrix::Zero(2, 2);
    CHECK_THROWS_AS(reverse_step(z, z, 0, s, StepMode::deterministic, z), InvalidArgument);
    CHECK_THROWS_AS(reverse_step(z, Matrix::Zero(2, 3), 5, s, StepMode::deterministic, z), InvalidArgument);
    CHECK_THROWS_AS(reverse_step(z, z, 5, 5, s, StepMode::deterministic, z), InvalidArgument);
}

TEST_CASE("classifier-free combination") {
    const Matrix a = random_matrix(2, 3, 12);
    const Matrix b = random_matrix(2, 3, 13);
    CHECK((cfg_combine(a, a, 7.5) - a).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(cfg_combine(a, b, 1.0) == a);
    CHECK(cfg_combine(Matrix::Ones(1, 1), Matrix::Zero(1, 1), kDefaultCfgAlpha)(0, 0) == 7.5);
}

TEST_CASE("energy values and monotonicity") {
    const Matrix c = random_matrix(4, 8, 14);
    CHECK(energy(c, c) == 0.0);
    Matrix z = c;
    z(2, 5) += 1.0;
    CHECK(energy(c, z) == doctest::Approx(1.0).epsilon(1e-14));
    const Matrix r = random_matrix(4, 8, 15);
    double oracle = 0.0;
    for (Index i = 0; i < 4; ++i)
        for (Index j = 0; j < 8; ++j) oracle += (r(i, j) - c(i, j)) * (r(i, j) - c(i, j));
    CHECK(energy(c, r) == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(energy(c, r, EnergyNorm::plain) == doctest::Approx(std::sqrt(oracle)).epsilon(1e-12));
    CHECK(energy(c, c + 0.5 * (r - c)) < energy(c, r));
    CHECK_THROWS_AS(energy(c, Matrix::Zero(4, 7)), InvalidArgument);
}

TEST_CASE("energy gradients match finite differences") {
    const Matrix c = random_matrix(2, 3, 16);
    const Matrix z = random_matrix(2, 3, 17);
    for (EnergyNorm norm : {EnergyNorm::squared, EnergyNorm::plain}) {
        const Matrix g = energy_gradient(c, z, norm);
        for (Index i = 0; i < z.size(); ++i) {
            Matrix p = z, m = z;
            p.data()[i] += 1e-6;
            m.data()[i] -= 1e-6;
            CHECK(g.data()[i] == doctest::Approx((energy(c, p, norm) - energy(c, m, norm)) / 2e-6).epsilon(1e-6));
        }
    }
    CHECK(energy_gradient(c, c, EnergyNorm::plain) == Matrix::Zero(2, 3));
}

TEST_CASE("guidance without references reduces to reverse_step bitwise") {
    const NoiseSchedule s = make_schedule();
    const Matrix z = random_matrix(4, 8, 18);
    const Matrix e = random_matrix(4, 8, 19);
    const Matrix n = random_matrix(4, 8, 20);
    for (StepMode mode : {StepMode::ancestral, StepMode::deterministic})
        CHECK(guided_step(z, e, 600, 580, s, GuidanceSpec{}, mode, n) == reverse_step(z, e, 600, 580, s, mode, n));
}

TEST_CASE("guidance-only update contracts the quadratic energy") {
    const NoiseSchedule s = make_schedule();
    GuidanceSpec g;
    g.references = {Matrix::Zero(1, 2)};
    g.weights = {0.1};
    Matrix z(1, 2);
    z << 1.0, 1.0;
    const Matrix next = z - guidance_gradient(z, Matrix::Zero(1, 2), 500, s, g);
    CHECK(next(0, 0) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(next(0, 1) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(energy(Matrix::Zero(1, 2), z) == 2.0);
    CHECK(energy(Matrix::Zero(1, 2), next) == doctest::Approx(1.28).epsilon(1e-15));

    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> unit(0.01, 0.99);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix c = random_matrix(4, 8, 100 + static_cast<std::uint64_t>(trial));
        const Matrix zt = random_matrix(4, 8, 200 + static_cast<std::uint64_t>(trial));
        const int t = 1 + trial * 40;
        GuidanceSpec one;
        one.references = {c};
        one.weights = {unit(rng)};
        const double lambda = one.weights[0];
        const Matrix target = std::sqrt(s.alpha_bar(t)) * c;
        const Matrix moved = zt - guidance_gradient(zt, Matrix::Zero(4, 8), t, s, one);
        const double ratio = energy(target, moved) / energy(target, zt);
        CHECK(ratio == doctest::Approx((1 - 2 * lambda) * (1 - 2 * lambda)).epsilon(1e-10));
    }
}

TEST_CASE("guidance terms add linearly") {
    const NoiseSchedule s = make_schedule();
    const Matrix z = random_matrix(4, 8, 22);
    const Matrix e = random_matrix(4, 8, 23);
    const Matrix c1 = random_matrix(4, 8, 24);
    const Matrix c2 = random_matrix(4, 8, 25);
    const int t = 420;
    GuidanceSpec both;
    both.references = {c1, c2};
    both.weights = {0.005, 0.005};
    const Matrix base = reverse_step(z, e, t, 400, s, StepMode::deterministic, z);
    const Matrix guided = guided_step(z, e, t, 400, s, both, StepMode::deterministic, z);
    const double sab = std::sqrt(s.alpha_bar(t));
    for (Index i = 0; i < z.size(); ++i) {
        const double oracle = base.data()[i] - 0.005 * 2.0 * (z.data()[i] - sab * c1.data()[i]) -
                              0.005 * 2.0 * (z.data()[i] - sab * c2.data()[i]);
        CHECK(guided.data()[i] == doctest::Approx(oracle).epsilon(1e-12));
    }
    GuidanceSpec first{{c1}, {0.005}}, second{{c2}, {0.005}};
    const Matrix summed = guidance_gradient(z, e, t, s, first) + guidance_gradient(z, e, t, s, second);
    CHECK((summed - guidance_gradient(z, e, t, s, both)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("clean-estimate guidance chains through the x0 estimate") {
    const NoiseSchedule s = make_schedule();
    const Matrix z = random_matrix(2, 4, 26);
    const Matrix e = random_matrix(2, 4, 27);
    const Matrix c = random_matrix(2, 4, 28);
    const int t = 300;
    GuidanceSpec g{{c}, {1.0}, GuidanceMode::clean_estimate};
    const Matrix grad = guidance_gradient(z, e, t, s, g);
    for (Index i = 0; i < z.size(); ++i) {
        Matrix p = z, m = z;
        p.data()[i] += 1e-6;
        m.data()[i] -= 1e-6;
        const double fd = (energy(c, predict_x0(p, e, t, s)) - energy(c, predict_x0(m, e, t, s))) / 2e-6;
        CHECK(grad.data()[i] == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("guidance spec validation") {
    const NoiseSchedule s = make_schedule();
    const Matrix z = Matrix::Zero(2, 2);
    GuidanceSpec g{{z}, {}};
    CHECK_THROWS_AS(guided_step(z, z, 5, 4, s, g, StepMode::deterministic, z), InvalidArgument);
    g.weights = {-0.1};
    CHECK_THROWS_AS(guided_step(z, z, 5, 4, s, g, StepMode::deterministic, z), InvalidArgument);
    GuidanceSpec mixed{{z, Matrix::Zero(3, 2)}, {0.1, 0.1}};
    CHECK_THROWS_AS(guidance_gradient(z, z, 5, s, mixed), InvalidArgument);
    GuidanceSpec wrong{{Matrix::Zero(3, 2)}, {0.1}};
    CHECK_THROWS_AS(guidance_gradient(z, z, 5, s, wrong), InvalidArgument);
    CHECK(guidance_mode_from_string(to_string(GuidanceMode::clean_estimate)) == GuidanceMode::clean_estimate);
    CHECK(step_mode_from_string(to_string(StepMode::ancestral)) == StepMode::ancestral);
}
