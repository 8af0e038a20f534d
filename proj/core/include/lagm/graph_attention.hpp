// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lagm/nn.hpp"
#include "lagm/semantic_graph.hpp"

#include <optional>
#include <vector>

namespace lagm {

inline constexpr double kGatLeakySlope = 0.2;

/// Single-head relational graph attention layer. Neighborhoods are the
/// incoming edges of each node.
struct GraphAttention {
    ParamId W = -1;   // D x D shared projection
    ParamId M = -1;   // 2D x 1 shared edge transform
    ParamId Mr = -1;  // 2D x 12 relation embeddings
    Index width = 0;

    static GraphAttention create(ParameterSet& params, const std::string& name, Index width, std::mt19937_64& rng);

    struct Output {
        Var projected;     // h = W v, nodes x D
        Var coefficients;  // E x 1, aligned with graph.edges
        Var updated;       // V, nodes x D
    };
    Output operator()(const nn::Scope& s, Var nodes, const SemanticGraph& graph) const;
};

/// Rows [W v_i, W v_j] for every edge j -> i (i is the edge target).
Matrix project_pairs(const Matrix& W, const Matrix& nodes, const std::vector<GraphEdge>& edges);

/// Softmax over each target's incoming edges of
/// LeakyReLU(M^T h~) + LeakyReLU(M_r[:, type]^T h~). Aligned with `edges`.
std::vector<double> attention_coefficients(const Matrix& M, const Matrix& Mr, const Matrix& pairs,
                                           const std::vector<GraphEdge>& edges);

/// V_i = ELU(sum_j e~_ij h_j) + v_i; nodes without incoming edges pass through.
Matrix update_nodes(const Matrix& nodes, const Matrix& projected, const std::vector<double>& coefficients,
                    const std::vector<GraphEdge>& edges);

struct AttentionResult {
    std::vector<double> coefficients;  // aligned with graph.edges
    Matrix updated;
};

AttentionResult run_attention(const ParameterSet& params, const GraphAttention& gat, const Matrix& nodes,
                              const SemanticGraph& graph, Precision precision = Precision::f64);

/// Coefficients of the motion node over its action neighbors, in action order.
std::vector<double> motion_coefficients(const std::vector<double>& coefficients, const SemanticGraph& graph);

/// lambda_k = rho * e~_k, then multiplied by optional non-negative per-action
/// multipliers (not renormalized).
std::vector<double> guiding_weights(const std::vector<double>& motion_coefficients, double rho,
                                    const std::optional<std::vector<double>>& multipliers = std::nullopt);

}  // namespace lagm
