// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lagm/autograd.hpp"

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace lagm::nn {

/// Binds a tape to the parameter table that a forward pass reads from.
struct Scope {
    Tape& tape;
    const ParameterSet& params;

    Var p(ParamId id) const { return tape.param(params, id); }
    Var constant(Matrix m) const { return tape.constant(std::move(m)); }
};

struct Linear {
    ParamId weight = -1;
    ParamId bias = -1;  // -1 when the layer has no bias
    Index in = 0;
    Index out = 0;

    static Linear create(ParameterSet& params, const std::string& name, Index in, Index out,
                         std::mt19937_64& rng, bool with_bias = true);
    Var operator()(const Scope& s, Var x) const;
};

struct LayerNorm {
    ParamId gain = -1;
    ParamId bias = -1;

    static LayerNorm create(ParameterSet& params, const std::string& name, Index width);
    Var operator()(const Scope& s, Var x) const;
};

struct MultiHeadAttention {
    Linear query, key, value, output;
    int heads = 1;

    static MultiHeadAttention create(ParameterSet& params, const std::string& name, Index width, int heads,
                                     std::mt19937_64& rng);
    /// Attends rows of `x` over rows of `memory`.
    Var operator()(const Scope& s, Var x, Var memory) const;
};

/// Pre-norm transformer layer; the cross-attention block is present only
/// when the layer was created with `cross = true`.
struct TransformerLayer {
    LayerNorm norm_self, norm_cross, norm_ff;
    MultiHeadAttention self_attention;
    std::optional<MultiHeadAttention> cross_attention;
    Linear ff_in, ff_out;

    static TransformerLayer create(ParameterSet& params, const std::string& name, Index width, int heads,
                                   Index ff_width, bool cross, std::mt19937_64& rng);
    Var operator()(const Scope& s, Var x, std::optional<Var> memory = std::nullopt) const;
};

struct TransformerStack {
    std::vector<TransformerLayer> layers;
    LayerNorm final_norm;

    static TransformerStack create(ParameterSet& params, const std::string& name, int depth, Index width,
                                   int heads, Index ff_width, bool cross, std::mt19937_64& rng);
    Var operator()(const Scope& s, Var x, std::optional<Var> memory = std::nullopt) const;
};

/// Groups consecutive frames into tokens of `patch` frames; the last frame
/// is repeated to fill the final patch.
Matrix patchify(const Matrix& frames, int patch);

/// Fixed sinusoidal table, one row per position.
Matrix sinusoidal_table(Index positions, Index width, double base = 10000.0);
/// Sinusoidal encoding of a single (possibly large) integer position.
Matrix sinusoidal_row(double position, Index width, double base = 10000.0);

}  // namespace lagm::nn
