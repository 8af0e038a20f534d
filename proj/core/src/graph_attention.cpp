// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lagm/graph_attention.hpp"

#include "lagm/error.hpp"

#include <array>

namespace lagm {

namespace {

void require_edges_in_range(const std::vector<GraphEdge>& edges, Index nodes) {
    for (const auto& e : edges)
        LAGM_CHECK(e.from >= 0 && e.to >= 0 && e.from < nodes && e.to < nodes, "edge endpoint out of range");
}

double leaky(double x) { return x > 0.0 ? x : kGatLeakySlope * x; }

}  // namespace

GraphAttention GraphAttention::create(ParameterSet& params, const std::string& name, Index width,
                                      std::mt19937_64& rng) {
    LAGM_CHECK(width > 0, "graph attention width must be positive");
    GraphAttention g;
    g.width = width;
    g.W = params.add(name + ".W", glorot(width, width, rng));
    g.M = params.add(name + ".M", glorot(2 * width, 1, rng));
    g.Mr = params.add(name + ".Mr", glorot(2 * width, kEdgeTypeCount, rng));
    return g;
}

GraphAttention::Output GraphAttention::operator()(const nn::Scope& s, Var nodes, const SemanticGraph& graph) const {
    LAGM_CHECK(nodes.cols() == width, "node features do not match the attention width");
    LAGM_CHECK(nodes.rows() == static_cast<Index>(graph.nodes.size()), "node feature count does not match the graph");
    require_edges_in_range(graph.edges, nodes.rows());
    Output out;
    out.projected = ag::matmul_nt(nodes, s.p(W));
    if (graph.edges.empty()) {
        out.coefficients = s.constant(Matrix::Zero(0, 1));
        out.updated = nodes;
        return out;
    }
    const auto n_edges = static_cast<Index>(graph.edges.size());
    std::vector<Index> targets, sources;
    std::vector<int> groups;
    Matrix onehot = Matrix::Zero(n_edges, kEdgeTypeCount);
    Matrix scatter = Matrix::Zero(nodes.rows(), n_edges);
    for (Index k = 0; k < n_edges; ++k) {
        const auto& e = graph.edges[static_cast<std::size_t>(k)];
        targets.push_back(e.to);
        sources.push_back(e.from);
        groups.push_back(e.to);
        onehot(k, static_cast<Index>(e.type)) = 1.0;
        scatter(e.to, k) = 1.0;
    }
    const std::array<Var, 2> halves{ag::gather_rows(out.projected, targets), ag::gather_rows(out.projected, sources)};
    Var pairs = ag::concat_cols(halves);
    Var shared = ag::leaky_relu(ag::matmul(pairs, s.p(M)), kGatLeakySlope);
    Var relation = ag::matmul(ag::mul(ag::matmul(pairs, s.p(Mr)), s.constant(onehot)),
                              s.constant(Matrix::Ones(kEdgeTypeCount, 1)));
    Var logits = ag::add(shared, ag::leaky_relu(relation, kGatLeakySlope));
    out.coefficients = ag::segment_softmax(logits, groups);
    Var spread = ag::matmul(out.coefficients, s.constant(Matrix::Ones(1, width)));
    Var messages = ag::mul(spread, ag::gather_rows(out.projected, sources));
    Var aggregate = ag::matmul(s.constant(scatter), messages);
    out.updated = ag::add(ag::elu(aggregate), nodes);
    return out;
}

Matrix project_pairs(const Matrix& W, const Matrix& nodes, const std::vector<GraphEdge>& edges) {
    LAGM_CHECK(W.rows() == W.cols() && W.cols() == nodes.cols(), "projection does not match node width");
    require_edges_in_range(edges, nodes.rows());
    const Matrix h = nodes * W.transpose();
    Matrix out(static_cast<Index>(edges.size()), 2 * W.rows());
    for (std::size_t k = 0; k < edges.size(); ++k) {
        out.row(static_cast<Index>(k)) << h.row(edges[k].to), h.row(edges[k].from);
    }
    return out;
}

std::vector<double> attention_coefficients(const Matrix& M, const Matrix& Mr, const Matrix& pairs,
                                           const std::vector<GraphEdge>& edges) {
    LAGM_CHECK(pairs.rows() == static_cast<Index>(edges.size()), "one pair row per edge is required");
    LAGM_CHECK(M.rows() == pairs.cols() && M.cols() == 1, "edge transform does not match pair width");
    LAGM_CHECK(Mr.rows() == pairs.cols() && Mr.cols() == kEdgeTypeCount, "relation matrix has the wrong shape");
    Tape tape;
    Matrix logits(pairs.rows(), 1);
    std::vector<int> groups;
    for (Index k = 0; k < pairs.rows(); ++k) {
        const auto type = static_cast<Index>(edges[static_cast<std::size_t>(k)].type);
        logits(k, 0) = leaky(pairs.row(k).dot(M.col(0))) + leaky(pairs.row(k).dot(Mr.col(type)));
        groups.push_back(edges[static_cast<std::size_t>(k)].to);
    }
    const Matrix y = ag::segment_softmax(tape.constant(logits), groups).value();
    return {y.data(), y.data() + y.size()};
}

Matrix update_nodes(const Matrix& nodes, const Matrix& projected, const std::vector<double>& coefficients,
                    const std::vector<GraphEdge>& edges) {
    LAGM_CHECK(nodes.rows() == projected.rows() && nodes.cols() == projected.cols(), "projected shape mismatch");
    LAGM_CHECK(coefficients.size() == edges.size(), "one coefficient per edge is required");
    require_edges_in_range(edges, nodes.rows());
    Matrix aggregate = Matrix::Zero(nodes.rows(), nodes.cols());
    for (std::size_t k = 0; k < edges.size(); ++k)
        aggregate.row(edges[k].to) += coefficients[k] * projected.row(edges[k].from);
    const Matrix activated = aggregate.unaryExpr([](double x) { return x > 0.0 ? x : std::expm1(x); });
    return activated + nodes;
}

AttentionResult run_attention(const ParameterSet& params, const GraphAttention& gat, const Matrix& nodes,
                              const SemanticGraph& graph, Precision precision) {
    Tape tape(precision);
    nn::Scope s{tape, params};
    const auto out = gat(s, tape.constant(nodes), graph);
    const Matrix& c = out.coefficients.value();
    return {std::vector<double>(c.data(), c.data() + c.size()), out.updated.value()};
}

std::vector<double> motion_coefficients(const std::vector<double>& coefficients, const SemanticGraph& graph) {
    LAGM_CHECK(coefficients.size() == graph.edges.size(), "one coefficient per edge is required");
    const int motion = graph.motion_node();
    std::vector<double> out;
    for (int a : graph.action_nodes()) {
        bool found = false;
        for (std::size_t k = 0; k < graph.edges.size(); ++k)
            if (graph.edges[k].from == a && graph.edges[k].to == motion) {
                out.push_back(coefficients[k]);
                found = true;
                break;
            }
        LAGM_CHECK(found, "action node has no edge to the motion node");
    }
    return out;
}

std::vector<double> guiding_weights(const std::vector<double>& motion_coefficients, double rho,
                                    const std::optional<std::vector<double>>& multipliers) {
    LAGM_CHECK(rho > 0.0, "rho must be positive");
    if (multipliers) LAGM_CHECK(multipliers->size() == motion_coefficients.size(), "one multiplier per action is required");
    std::vector<double> out;
    for (std::size_t k = 0; k < motion_coefficients.size(); ++k) {
        double l = rho * motion_coefficients[k];
        if (multipliers) {
            LAGM_CHECK((*multipliers)[k] >= 0.0, "weight multipliers must be non-negative");
            l *= (*multipliers)[k];
        }
        out.push_back(l);
    }
    return out;
}

}  // namespace lagm
