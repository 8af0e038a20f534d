// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lagm/autograd.hpp"

#include "lagm/error.hpp"

#include <cmath>
#include <memory>
#include <numbers>

namespace lagm {

const Matrix& Var::value() const { return tape_->value(id_); }

Var Tape::push(Node node) {
    round_to(precision_, node.value);
    nodes_.push_back(std::move(node));
    return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::constant(Matrix value) {
    Node n;
    n.value = std::move(value);
    return push(std::move(n));
}

Var Tape::input(Matrix value) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = true;
    return push(std::move(n));
}

Var Tape::param(const ParameterSet& params, ParamId id) {
    if (bound_params_ != nullptr && bound_params_ != &params)
        throw InvalidArgument("a tape may only bind parameters from one ParameterSet");
    bound_params_ = &params;
    if (auto it = param_nodes_.find(id); it != param_nodes_.end()) return Var(this, it->second);
    Node n;
    n.value = params.value(id);
    n.requires_grad = true;
    n.param = id;
    Var v = push(std::move(n));
    param_nodes_.emplace(id, v.id());
    return v;
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward) {
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
}

Var Tape::record(Matrix value, std::span<const Var> inputs, BackwardFn backward) {
    Node n;
    n.value = std::move(value);
    for (const auto& in : inputs) {
        if (in.tape() != this) throw InvalidArgument("operands recorded on different tapes");
        if (requires_grad(in.id())) n.requires_grad = true;
    }
    if (n.requires_grad) n.backward = std::move(backward);
    return push(std::move(n));
}

void Tape::accumulate(int id, const Matrix& g) { accumulate_expr(id, g); }

void Tape::backward(Var scalar_out, GradientSet* param_grads) {
    if (scalar_out.rows() != 1 || scalar_out.cols() != 1)
        throw InvalidArgument("backward(scalar) requires a 1x1 output");
    backward(scalar_out, Matrix::Ones(1, 1), param_grads);
}

void Tape::backward(Var out, const Matrix& seed, GradientSet* param_grads) {
    if (out.tape() != this) throw InvalidArgument("backward on foreign variable");
    for (auto& n : nodes_) n.grad.resize(0, 0);
    auto& root = nodes_[static_cast<std::size_t>(out.id())];
    if (!root.requires_grad) return;
    root.grad = seed;
    for (int i = out.id(); i >= 0; --i) {
        auto& node = nodes_[static_cast<std::size_t>(i)];
        if (node.grad.size() == 0) continue;
        if (node.param >= 0 && param_grads != nullptr) param_grads->accumulate(node.param, node.grad);
        if (node.backward) node.backward(*this, node.grad);
    }
}

const Matrix& Tape::grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id())].grad; }

namespace ag {
namespace {

void require_same_shape(Var a, Var b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw InvalidArgument(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                              std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                              std::to_string(b.cols()));
}

template <typename Fwd, typename Deriv>
Var unary(Var a, Fwd fwd, Deriv deriv) {
    Tape& t = *a.tape();
    Matrix y = a.value().unaryExpr(fwd);
    const int ia = a.id();
    return t.record(std::move(y), {a}, [ia, deriv](Tape& tp, const Matrix& g) {
        tp.accumulate_expr(ia, g.cwiseProduct(tp.value(ia).unaryExpr(deriv)));
    });
}

}  // namespace

Var matmul(Var a, Var b) {
    if (a.cols() != b.rows()) throw InvalidArgument("matmul: inner dimension mismatch");
    Tape& t = *a.tape();
    const int ia = a.id(), ib = b.id();
    Matrix y = a.value() * b.value();
    return t.record(std::move(y), {a, b}, [ia, ib](Tape& tp, const Matrix& g) {
        if (tp.requires_grad(ia)) tp.accumulate_expr(ia, g * tp.value(ib).transpose());
        if (tp.requires_grad(ib)) tp.accumulate_expr(ib, tp.value(ia).transpose() * g);
    });
}

Var matmul_nt(Var a, Var b) {
    if (a.cols() != b.cols()) throw InvalidArgument("matmul_nt: inner dimension mismatch");
    Tape& t = *a.tape();
    const int ia = a.id(), ib = b.id();
    Matrix y = a.value() * b.value().transpose();
    return t.record(std::move(y), {a, b}, [ia, ib](Tape& tp, const Matrix& g) {
        if (tp.requires_grad(ia)) tp.accumulate_expr(ia, g * tp.value(ib));
        if (tp.requires_grad(ib)) tp.accumulate_expr(ib, g.transpose() * tp.value(ia));
    });
}

Var transpose(Var a) {
    Tape& t = *a.tape();
    const int ia = a.id();
    Matrix y = a.value().transpose();
    return t.record(std::move(y), {a}, [ia](Tape& tp, const Matrix& g) { tp.accumulate_expr(ia, g.transpose()); });
}

Var add(Var a, Var b) {
    require_same_shape(a, b, "add");
    const int ia = a.id(), ib = b.id();
    return a.tape()->record(a.value() + b.value(), {a, b}, [ia, ib](Tape& tp, const Matrix& g) {
        tp.accumulate_expr(ia, g);
        tp.accumulate_expr(ib, g);
    });
}

Var sub(Var a, Var b) {
    require_same_shape(a, b, "sub");
    const int ia = a.id(), ib = b.id();
    return a.tape()->record(a.value() - b.value(), {a, b}, [ia, ib](Tape& tp, const Matrix& g) {
        tp.accumulate_expr(ia, g);
        tp.accumulate_expr(ib, -g);
    });
}

Var mul(Var a, Var b) {
    require_same_shape(a, b, "mul");
    const int ia = a.id(), ib = b.id();
    return a.tape()->record(a.value().cwiseProduct(b.value()), {a, b}, [ia, ib](Tape& tp, const Matrix& g) {
        if (tp.requires_grad(ia)) tp.accumulate_expr(ia, g.cwiseProduct(tp.value(ib)));
        if (tp.requires_grad(ib)) tp.accumulate_expr(ib, g.cwiseProduct(tp.value(ia)));
    });
}

Var add_row(Var a, Var row) {
    if (row.rows() != 1 || row.cols() != a.cols()) throw InvalidArgument("add_row: row shape mismatch");
    const int ia = a.id(), ir = row.id();
    Matrix y = a.value().rowwise() + row.value().row(0);
    return a.tape()->record(std::move(y), {a, row}, [ia, ir](Tape& tp, const Matrix& g) {
        tp.accumulate_expr(ia, g);
        if (tp.requires_grad(ir)) tp.accumulate(ir, g.colwise().sum());
    });
}

Var mul_row(Var a, Var row) {
    if (row.rows() != 1 || row.cols() != a.cols()) throw InvalidArgument("mul_row: row shape mismatch");
    const int ia = a.id(), ir = row.id();
    Matrix y = a.value().array().rowwise() * row.value().row(0).array();
    return a.tape()->record(std::move(y), {a, row}, [ia, ir](Tape& tp, const Matrix& g) {
        if (tp.requires_grad(ia)) {
            Matrix ga = g.array().rowwise() * tp.value(ir).row(0).array();
            tp.accumulate(ia, ga);
        }
        if (tp.requires_grad(ir)) tp.accumulate(ir, g.cwiseProduct(tp.value(ia)).colwise().sum());
    });
}

Var scale(Var a, double s) {
    const int ia = a.id();
    return a.tape()->record(a.value() * s, {a}, [ia, s](Tape& tp, const Matrix& g) { tp.accumulate_expr(ia, g * s); });
}

Var add_scalar(Var a, double s) {
    const int ia = a.id();
    Matrix y = a.value().array() + s;
    return a.tape()->record(std::move(y), {a}, [ia](Tape& tp, const Matrix& g) { tp.accumulate_expr(ia, g); });
}

Var neg(Var a) { return scale(a, -1.0); }

Var gelu(Var a) {
    constexpr double k = 0.7978845608028654;  // sqrt(2/pi)
    constexpr double c = 0.044715;
    return unary(
        a,
        [](double x) { return 0.5 * x * (1.0 + std::tanh(k * (x + c * x * x * x))); },
        [](double x) {
            const double th = std::tanh(k * (x + c * x * x * x));
            return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * k * (1.0 + 3.0 * c * x * x);
        });
}

Var elu(Var a) {
    return unary(
        a, [](double x) { return x > 0.0 ? x : std::expm1(x); }, [](double x) { return x > 0.0 ? 1.0 : std::exp(x); });
}

Var leaky_relu(Var a, double slope) {
    return unary(
        a, [slope](double x) { return x > 0.0 ? x : slope * x; }, [slope](double x) { return x > 0.0 ? 1.0 : slope; });
}

Var tanh(Var a) {
    const int ia = a.id();
    Matrix y = a.value().array().tanh();
    auto y_keep = std::make_shared<Matrix>(y);
    return a.tape()->record(std::move(y), {a}, [ia, y_keep](Tape& tp, const Matrix& g) {
        tp.accumulate_expr(ia, g.cwiseProduct((1.0 - y_keep->array().square()).matrix()));
    });
}

Var exp(Var a) {
    return unary(a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Var clamp(Var a, double lo, double hi) {
    return unary(
        a, [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
        [lo, hi](double x) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

namespace {
Matrix softmax_rows_value(const Matrix& x) {
    Matrix y(x.rows(), x.cols());
    for (Index r = 0; r < x.rows(); ++r) {
        const double m = x.row(r).maxCoeff();
        y.row(r) = (x.row(r).array() - m).exp();
        y.row(r) /= y.row(r).sum();
    }
    return y;
}
}  // namespace

Var softmax_rows(Var a) {
    Tape& t = *a.tape();
    const int ia = a.id();
    Matrix y = softmax_rows_value(a.value());
    round_to(t.precision(), y);
    auto y_keep = std::make_shared<Matrix>(y);
    return t.record(std::move(y), {a}, [ia, y_keep](Tape& tp, const Matrix& g) {
        const Matrix& s = *y_keep;
        Vector dot = g.cwiseProduct(s).rowwise().sum();
        Matrix gx = s.array() * (g.colwise() - dot).array();
        tp.accumulate(ia, gx);
    });
}

Var segment_softmax(Var logits, std::span<const int> groups) {
    if (logits.cols() != 1 || static_cast<std::size_t>(logits.rows()) != groups.size())
        throw InvalidArgument("segment_softmax: expects a column with one group id per row");
    Tape& t = *logits.tape();
    const int ia = logits.id();
    const Matrix& x = logits.value();
    std::unordered_map<int, double> peak, total;
    for (Index r = 0; r < x.rows(); ++r) {
        const int g = groups[static_cast<std::size_t>(r)];
        auto it = peak.find(g);
        if (it == peak.end() || x(r, 0) > it->second) peak[g] = x(r, 0);
    }
    Matrix y(x.rows(), 1);
    for (Index r = 0; r < x.rows(); ++r) {
        const int g = groups[static_cast<std::size_t>(r)];
        y(r, 0) = std::exp(x(r, 0) - peak[g]);
        total[g] += y(r, 0);
    }
    for (Index r = 0; r < x.rows(); ++r) y(r, 0) /= total[groups[static_cast<std::size_t>(r)]];
    round_to(t.precision(), y);
    auto y_keep = std::make_shared<Matrix>(y);
    std::vector<int> group_copy(groups.begin(), groups.end());
    return t.record(std::move(y), {logits}, [ia, y_keep, group_copy](Tape& tp, const Matrix& g) {
        const Matrix& s = *y_keep;
        std::unordered_map<int, double> dot;
        for (Index r = 0; r < s.rows(); ++r) dot[group_copy[static_cast<std::size_t>(r)]] += g(r, 0) * s(r, 0);
        Matrix gx(s.rows(), 1);
        for (Index r = 0; r < s.rows(); ++r) gx(r, 0) = s(r, 0) * (g(r, 0) - dot[group_copy[static_cast<std::size_t>(r)]]);
        tp.accumulate(ia, gx);
    });
}

Var log_softmax_rows(Var a) {
    Tape& t = *a.tape();
    const int ia = a.id();
    const Matrix& x = a.value();
    Matrix y(x.rows(), x.cols());
    for (Index r = 0; r < x.rows(); ++r) {
        const double m = x.row(r).maxCoeff();
        const double lse = m + std::log((x.row(r).array() - m).exp().sum());
        y.row(r) = x.row(r).array() - lse;
    }
    return t.record(std::move(y), {a}, [ia](Tape& tp, const Matrix& g) {
        Matrix s = softmax_rows_value(tp.value(ia));
        Vector gs = g.rowwise().sum();
        Matrix gx = g - (s.array().colwise() * gs.array()).matrix();
        tp.accumulate(ia, gx);
    });
}

Var layer_norm_rows(Var a, Var gain, Var bias, double eps) {
    const Index n = a.cols();
    if (gain.rows() != 1 || gain.cols() != n || bias.rows() != 1 || bias.cols() != n)
        throw InvalidArgument("layer_norm_rows: affine shape mismatch");
    Tape& t = *a.tape();
    const Matrix& x = a.value();
    auto xhat = std::make_shared<Matrix>(x.rows(), n);
    auto inv_std = std::make_shared<Vector>(x.rows());
    for (Index r = 0; r < x.rows(); ++r) {
        const double mu = x.row(r).mean();
        const double var = (x.row(r).array() - mu).square().mean();
        (*inv_std)(r) = 1.0 / std::sqrt(var + eps);
        xhat->row(r) = (x.row(r).array() - mu) * (*inv_std)(r);
    }
    Matrix y = (xhat->array().rowwise() * gain.value().row(0).array()).rowwise() + bias.value().row(0).array();
    const int ia = a.id(), ig = gain.id(), ib = bias.id();
    return t.record(std::move(y), {a, gain, bias}, [ia, ig, ib, xhat, inv_std, n](Tape& tp, const Matrix& g) {
        if (tp.requires_grad(ig)) tp.accumulate(ig, g.cwiseProduct(*xhat).colwise().sum());
        if (tp.requires_grad(ib)) tp.accumulate(ib, g.colwise().sum());
        if (tp.requires_grad(ia)) {
            Matrix dxhat = g.array().rowwise() * tp.value(ig).row(0).array();
            Matrix dx(g.rows(), n);
            for (Index r = 0; r < g.rows(); ++r) {
                const double m1 = dxhat.row(r).mean();
                const double m2 = dxhat.row(r).cwiseProduct(xhat->row(r)).mean();
                dx.row(r) = (*inv_std)(r) * (dxhat.row(r).array() - m1 - xhat->row(r).array() * m2);
            }
            tp.accumulate(ia, dx);
        }
    });
}

Var l2_normalize_rows(Var a, double eps) {
    Tape& t = *a.tape();
    const Matrix& x = a.value();
    auto norms = std::make_shared<Vector>((x.rowwise().squaredNorm().array() + eps).sqrt());
    Matrix y = x.array().colwise() / norms->array();
    auto y_keep = std::make_shared<Matrix>(y);
    const int ia = a.id();
    return t.record(std::move(y), {a}, [ia, norms, y_keep](Tape& tp, const Matrix& g) {
        const Matrix& yy = *y_keep;
        Vector dot = g.cwiseProduct(yy).rowwise().sum();
        Matrix gx = (g - (yy.array().colwise() * dot.array()).matrix()).array().colwise() / norms->array();
        tp.accumulate(ia, gx);
    });
}

Var concat_rows(std::span<const Var> parts) {
    if (parts.empty()) throw InvalidArgument("concat_rows: no parts");
    const Index cols = parts[0].cols();
    Index rows = 0;
    for (const auto& p : parts) {
        if (p.cols() != cols) throw InvalidArgument("concat_rows: column mismatch");
        rows += p.rows();
    }
    Matrix y(rows, cols);
    std::vector<std::pair<int, Index>> layout;
    Index offset = 0;
    for (const auto& p : parts) {
        y.middleRows(offset, p.rows()) = p.value();
        layout.emplace_back(p.id(), offset);
        offset += p.rows();
    }
    return parts[0].tape()->record(std::move(y), parts, [layout](Tape& tp, const Matrix& g) {
        for (const auto& [id, off] : layout)
            if (tp.requires_grad(id)) tp.accumulate(id, g.middleRows(off, tp.value(id).rows()));
    });
}

Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw InvalidArgument("concat_cols: no parts");
    const Index rows = parts[0].rows();
    Index cols = 0;
    for (const auto& p : parts) {
        if (p.rows() != rows) throw InvalidArgument("concat_cols: row mismatch");
        cols += p.cols();
    }
    Matrix y(rows, cols);
    std::vector<std::pair<int, Index>> layout;
    Index offset = 0;
    for (const auto& p : parts) {
        y.middleCols(offset, p.cols()) = p.value();
        layout.emplace_back(p.id(), offset);
        offset += p.cols();
    }
    return parts[0].tape()->record(std::move(y), parts, [layout](Tape& tp, const Matrix& g) {
        for (const auto& [id, off] : layout)
            if (tp.requires_grad(id)) tp.accumulate(id, g.middleCols(off, tp.value(id).cols()));
    });
}

Var slice_rows(Var a, Index start, Index count) {
    if (start < 0 || count < 0 || start + count > a.rows()) throw InvalidArgument("slice_rows: out of range");
    const int ia = a.id();
    const Index rows = a.rows(), cols = a.cols();
    return a.tape()->record(a.value().middleRows(start, count), {a},
                            [ia, start, count, rows, cols](Tape& tp, const Matrix& g) {
                                Matrix full = Matrix::Zero(rows, cols);
                                full.middleRows(start, count) = g;
                                tp.accumulate(ia, full);
                            });
}

Var slice_cols(Var a, Index start, Index count) {
    if (start < 0 || count < 0 || start + count > a.cols()) throw InvalidArgument("slice_cols: out of range");
    const int ia = a.id();
    const Index rows = a.rows(), cols = a.cols();
    return a.tape()->record(a.value().middleCols(start, count), {a},
                            [ia, start, count, rows, cols](Tape& tp, const Matrix& g) {
                                Matrix full = Matrix::Zero(rows, cols);
                                full.middleCols(start, count) = g;
                                tp.accumulate(ia, full);
                            });
}

Var gather_rows(Var table, std::span<const Index> rows) {
    Matrix y(static_cast<Index>(rows.size()), table.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] < 0 || rows[i] >= table.rows()) throw InvalidArgument("gather_rows: index out of range");
        y.row(static_cast<Index>(i)) = table.value().row(rows[i]);
    }
    const int it = table.id();
    std::vector<Index> idx(rows.begin(), rows.end());
    const Index tr = table.rows(), tc = table.cols();
    return table.tape()->record(std::move(y), {table}, [it, idx, tr, tc](Tape& tp, const Matrix& g) {
        Matrix full = Matrix::Zero(tr, tc);
        for (std::size_t i = 0; i < idx.size(); ++i) full.row(idx[i]) += g.row(static_cast<Index>(i));
        tp.accumulate(it, full);
    });
}

Var reshape(Var a, Index rows, Index cols) {
    if (rows * cols != a.value().size()) throw InvalidArgument("reshape: element count mismatch");
    const int ia = a.id();
    const Index r0 = a.rows(), c0 = a.cols();
    Matrix y = Eigen::Map<const Matrix>(a.value().data(), rows, cols);
    return a.tape()->record(std::move(y), {a}, [ia, r0, c0](Tape& tp, const Matrix& g) {
        tp.accumulate(ia, Eigen::Map<const Matrix>(g.data(), r0, c0));
    });
}

Var mean_rows(Var a) {
    const int ia = a.id();
    const Index n = a.rows();
    return a.tape()->record(a.value().colwise().mean(), {a}, [ia, n](Tape& tp, const Matrix& g) {
        Matrix full = g.replicate(n, 1) / static_cast<double>(n);
        tp.accumulate(ia, full);
    });
}

Var broadcast_rows(Var row, Index rows) {
    if (row.rows() != 1) throw InvalidArgument("broadcast_rows: expects a single row");
    const int ir = row.id();
    return row.tape()->record(row.value().replicate(rows, 1), {row},
                              [ir](Tape& tp, const Matrix& g) { tp.accumulate(ir, g.colwise().sum()); });
}

Var sum(Var a) {
    const int ia = a.id();
    const Index r = a.rows(), c = a.cols();
    return a.tape()->record(Matrix::Constant(1, 1, a.value().sum()), {a}, [ia, r, c](Tape& tp, const Matrix& g) {
        tp.accumulate(ia, Matrix::Constant(r, c, g(0, 0)));
    });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var sum_squares(Var a) {
    const int ia = a.id();
    return a.tape()->record(Matrix::Constant(1, 1, a.value().squaredNorm()), {a},
                            [ia](Tape& tp, const Matrix& g) { tp.accumulate_expr(ia, 2.0 * g(0, 0) * tp.value(ia)); });
}

Var mse(Var a, Var b) {
    require_same_shape(a, b, "mse");
    const int ia = a.id(), ib = b.id();
    const double n = static_cast<double>(a.value().size());
    Matrix d = a.value() - b.value();
    Matrix y = Matrix::Constant(1, 1, d.squaredNorm() / n);
    auto diff = std::make_shared<Matrix>(std::move(d));
    return a.tape()->record(std::move(y), {a, b}, [ia, ib, diff, n](Tape& tp, const Matrix& g) {
        const double s = 2.0 * g(0, 0) / n;
        tp.accumulate_expr(ia, s * *diff);
        tp.accumulate_expr(ib, -s * *diff);
    });
}

Var smooth_l1(Var a, Var b, double beta) {
    require_same_shape(a, b, "smooth_l1");
    const int ia = a.id(), ib = b.id();
    const double n = static_cast<double>(a.value().size());
    auto diff = std::make_shared<Matrix>(a.value() - b.value());
    const double total = diff->unaryExpr([beta](double d) {
                                  const double ad = std::abs(d);
                                  return ad < beta ? 0.5 * d * d / beta : ad - 0.5 * beta;
                              })
                             .sum();
    return a.tape()->record(Matrix::Constant(1, 1, total / n), {a, b}, [ia, ib, diff, n, beta](Tape& tp, const Matrix& g) {
        Matrix d = diff->unaryExpr([beta](double x) {
            return std::abs(x) < beta ? x / beta : (x > 0.0 ? 1.0 : -1.0);
        }) * (g(0, 0) / n);
        tp.accumulate(ia, d);
        tp.accumulate_expr(ib, -d);
    });
}

Var gaussian_kl(Var mean_v, Var logvar) {
    require_same_shape(mean_v, logvar, "gaussian_kl");
    const int im = mean_v.id(), il = logvar.id();
    const double n = static_cast<double>(mean_v.value().size());
    const Matrix& mu = mean_v.value();
    const Matrix& lv = logvar.value();
    const double total = 0.5 * (mu.array().square() + lv.array().exp() - 1.0 - lv.array()).sum();
    return mean_v.tape()->record(Matrix::Constant(1, 1, total / n), {mean_v, logvar},
                                 [im, il, n](Tape& tp, const Matrix& g) {
                                     const double s = g(0, 0) / n;
                                     tp.accumulate_expr(im, s * tp.value(im));
                                     if (tp.requires_grad(il))
                                         tp.accumulate(il, (0.5 * s * (tp.value(il).array().exp() - 1.0)).matrix());
                                 });
}

Var cross_entropy_rows(Var logits, std::span<const Index> targets) {
    if (static_cast<Index>(targets.size()) != logits.rows())
        throw InvalidArgument("cross_entropy_rows: one target per row required");
    const Matrix& x = logits.value();
    auto probs = std::make_shared<Matrix>(softmax_rows_value(x));
    double total = 0.0;
    for (Index r = 0; r < x.rows(); ++r) {
        const double m = x.row(r).maxCoeff();
        const double lse = m + std::log((x.row(r).array() - m).exp().sum());
        total += lse - x(r, targets[static_cast<std::size_t>(r)]);
    }
    const double rows = static_cast<double>(x.rows());
    std::vector<Index> tg(targets.begin(), targets.end());
    const int il = logits.id();
    return logits.tape()->record(Matrix::Constant(1, 1, total / rows), {logits},
                                 [il, probs, tg, rows](Tape& tp, const Matrix& g) {
                                     Matrix d = *probs;
                                     for (std::size_t r = 0; r < tg.size(); ++r) d(static_cast<Index>(r), tg[r]) -= 1.0;
                                     d *= g(0, 0) / rows;
                                     tp.accumulate(il, d);
                                 });
}

}  // namespace ag
}  // namespace lagm
