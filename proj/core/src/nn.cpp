// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lagm/nn.hpp"

#include "lagm/error.hpp"

#include <cmath>

namespace lagm::nn {

Linear Linear::create(ParameterSet& params, const std::string& name, Index in, Index out, std::mt19937_64& rng,
                      bool with_bias) {
    Linear l;
    l.in = in;
    l.out = out;
    l.weight = params.add(name + ".weight", glorot(in, out, rng));
    if (with_bias) l.bias = params.add(name + ".bias", Matrix::Zero(1, out));
    return l;
}

Var Linear::operator()(const Scope& s, Var x) const {
    if (x.cols() != in) throw InvalidArgument("linear: expected " + std::to_string(in) + " input features");
    Var y = ag::matmul(x, s.p(weight));
    if (bias >= 0) y = ag::add_row(y, s.p(bias));
    return y;
}

LayerNorm LayerNorm::create(ParameterSet& params, const std::string& name, Index width) {
    LayerNorm n;
    n.gain = params.add(name + ".gain", Matrix::Ones(1, width));
    n.bias = params.add(name + ".bias", Matrix::Zero(1, width));
    return n;
}

Var LayerNorm::operator()(const Scope& s, Var x) const {
    return ag::layer_norm_rows(x, s.p(gain), s.p(bias));
}

MultiHeadAttention MultiHeadAttention::create(ParameterSet& params, const std::string& name, Index width, int heads,
                                              std::mt19937_64& rng) {
    LAGM_CHECK(heads > 0 && width % heads == 0, "attention width must divide evenly into heads");
    MultiHeadAttention a;
    a.heads = heads;
    a.query = Linear::create(params, name + ".q", width, width, rng, false);
    a.key = Linear::create(params, name + ".k", width, width, rng, false);
    a.value = Linear::create(params, name + ".v", width, width, rng, false);
    a.output = Linear::create(params, name + ".o", width, width, rng);
    return a;
}

Var MultiHeadAttention::operator()(const Scope& s, Var x, Var memory) const {
    Var q = query(s, x);
    Var k = key(s, memory);
    Var v = value(s, memory);
    const Index head_width = q.cols() / heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_width));
    std::vector<Var> outs;
    outs.reserve(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
        const Index start = h * head_width;
        Var qh = ag::slice_cols(q, start, head_width);
        Var kh = ag::slice_cols(k, start, head_width);
        Var vh = ag::slice_cols(v, start, head_width);
        Var weights = ag::softmax_rows(ag::scale(ag::matmul_nt(qh, kh), inv_sqrt));
        outs.push_back(ag::matmul(weights, vh));
    }
    Var merged = heads == 1 ? outs.front() : ag::concat_cols(outs);
    return output(s, merged);
}

TransformerLayer TransformerLayer::create(ParameterSet& params, const std::string& name, Index width, int heads,
                                          Index ff_width, bool cross, std::mt19937_64& rng) {
    TransformerLayer l;
    l.norm_self = LayerNorm::create(params, name + ".norm_self", width);
    l.self_attention = MultiHeadAttention::create(params, name + ".self", width, heads, rng);
    if (cross) {
        l.norm_cross = LayerNorm::create(params, name + ".norm_cross", width);
        l.cross_attention = MultiHeadAttention::create(params, name + ".cross", width, heads, rng);
    }
    l.norm_ff = LayerNorm::create(params, name + ".norm_ff", width);
    l.ff_in = Linear::create(params, name + ".ff_in", width, ff_width, rng);
    l.ff_out = Linear::create(params, name + ".ff_out", ff_width, width, rng);
    return l;
}

Var TransformerLayer::operator()(const Scope& s, Var x, std::optional<Var> memory) const {
    Var h = norm_self(s, x);
    x = ag::add(x, self_attention(s, h, h));
    if (cross_attention) {
        if (!memory) throw InvalidArgument("cross-attention layer requires a memory sequence");
        x = ag::add(x, (*cross_attention)(s, norm_cross(s, x), *memory));
    }
    Var f = ff_out(s, ag::gelu(ff_in(s, norm_ff(s, x))));
    return ag::add(x, f);
}

TransformerStack TransformerStack::create(ParameterSet& params, const std::string& name, int depth, Index width,
                                          int heads, Index ff_width, bool cross, std::mt19937_64& rng) {
    TransformerStack st;
    for (int i = 0; i < depth; ++i)
        st.layers.push_back(
            TransformerLayer::create(params, name + ".layer" + std::to_string(i), width, heads, ff_width, cross, rng));
    st.final_norm = LayerNorm::create(params, name + ".final_norm", width);
    return st;
}

Var TransformerStack::operator()(const Scope& s, Var x, std::optional<Var> memory) const {
    for (const auto& layer : layers) x = layer(s, x, memory);
    return final_norm(s, x);
}

Matrix sinusoidal_row(double position, Index width, double base) {
    Matrix row(1, width);
    for (Index i = 0; i < width; ++i) {
        const double freq = std::pow(base, -static_cast<double>(2 * (i / 2)) / static_cast<double>(width));
        row(0, i) = (i % 2 == 0) ? std::sin(position * freq) : std::cos(position * freq);
    }
    return row;
}

Matrix sinusoidal_table(Index positions, Index width, double base) {
    Matrix table(positions, width);
    for (Index p = 0; p < positions; ++p) table.row(p) = sinusoidal_row(static_cast<double>(p), width, base);
    return table;
}

Matrix patchify(const Matrix& frames, int patch) {
    LAGM_CHECK(frames.rows() >= 1 && patch >= 1, "patchify needs frames and a positive patch size");
    const Index tokens = (frames.rows() + patch - 1) / patch;
    Matrix padded(tokens * patch, frames.cols());
    padded.topRows(frames.rows()) = frames;
    for (Index r = frames.rows(); r < padded.rows(); ++r) padded.row(r) = frames.row(frames.rows() - 1);
    return Eigen::Map<const Matrix>(padded.data(), tokens, patch * frames.cols());
}

}  // namespace lagm::nn
