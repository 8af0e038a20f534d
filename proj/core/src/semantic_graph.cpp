// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lagm/semantic_graph.hpp"

#include "lagm/error.hpp"
#include "lagm/tokenizer.hpp"

#include <algorithm>

namespace lagm {

namespace {

constexpr std::array<std::string_view, kEdgeTypeCount> kEdgeNames = {
    "ARG0", "ARG1", "ARG2", "ARG3", "ARG4", "ARGM-LOC", "ARGM-MNR", "ARGM-TMP", "ARGM-DIR", "ARGM-ADV", "ARGM-MA", "OTHERS",
};

}  // namespace

std::string_view to_string(EdgeType type) { return kEdgeNames.at(static_cast<std::size_t>(type)); }

EdgeType edge_type_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kEdgeNames.size(); ++i)
        if (kEdgeNames[i] == name) return static_cast<EdgeType>(i);
    throw InvalidArgument("unknown edge type: " + std::string(name));
}

std::string_view to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::motion: return "motion";
        case NodeKind::action: return "action";
        case NodeKind::specific: return "specific";
    }
    return "specific";
}

NodeKind node_kind_from_string(std::string_view name) {
    if (name == "motion") return NodeKind::motion;
    if (name == "action") return NodeKind::action;
    if (name == "specific") return NodeKind::specific;
    throw InvalidArgument("unknown node kind: " + std::string(name));
}

int SemanticGraph::motion_node() const {
    for (const auto& n : nodes)
        if (n.kind == NodeKind::motion) return n.id;
    throw InvalidArgument("graph has no motion node");
}

std::vector<int> SemanticGraph::action_nodes() const {
    std::vector<int> out;
    for (const auto& n : nodes)
        if (n.kind == NodeKind::action) out.push_back(n.id);
    return out;
}

std::vector<int> SemanticGraph::specific_nodes() const {
    std::vector<int> out;
    for (const auto& n : nodes)
        if (n.kind == NodeKind::specific) out.push_back(n.id);
    return out;
}

std::vector<int> SemanticGraph::specifics_of(int action) const {
    std::vector<int> out;
    for (const auto& e : edges)
        if (e.to == action && nodes.at(static_cast<std::size_t>(e.from)).kind == NodeKind::specific)
            out.push_back(e.from);
    std::stable_sort(out.begin(), out.end(), [&](int a, int b) {
        return nodes[static_cast<std::size_t>(a)].span.begin < nodes[static_cast<std::size_t>(b)].span.begin;
    });
    return out;
}

std::optional<EdgeType> SemanticGraph::edge_between(int from, int to) const {
    for (const auto& e : edges)
        if (e.from == from && e.to == to) return e.type;
    return std::nullopt;
}

std::vector<int> SemanticGraph::incoming(int node) const {
    std::vector<int> out;
    for (const auto& e : edges)
        if (e.to == node) out.push_back(e.from);
    return out;
}

std::vector<std::string> validate(const SemanticGraph& graph) {
    std::vector<std::string> violations;
    const auto n = static_cast<int>(graph.nodes.size());
    int motions = 0;
    int actions = 0;
    for (int i = 0; i < n; ++i) {
        const auto& node = graph.nodes[static_cast<std::size_t>(i)];
        if (node.id != i) violations.push_back("node id " + std::to_string(node.id) + " does not match its index");
        if (node.kind == NodeKind::motion) ++motions;
        if (node.kind == NodeKind::action) ++actions;
    }
    if (motions == 0) violations.emplace_back("missing motion node");
    if (motions > 1) violations.emplace_back("multiple motion nodes");
    if (actions == 0) violations.emplace_back("no action nodes");

    auto kind_of = [&](int id) -> std::optional<NodeKind> {
        if (id < 0 || id >= n) return std::nullopt;
        return graph.nodes[static_cast<std::size_t>(id)].kind;
    };
    std::vector<int> motion_edges(static_cast<std::size_t>(std::max(n, 0)), 0);
    std::vector<int> action_edges(static_cast<std::size_t>(std::max(n, 0)), 0);
    for (const auto& e : graph.edges) {
        auto from = kind_of(e.from);
        auto to = kind_of(e.to);
        if (!from || !to) {
            violations.push_back("edge " + std::to_string(e.from) + "->" + std::to_string(e.to) +
                                 " references a missing node");
            continue;
        }
        if (*from == NodeKind::action && *to == NodeKind::motion) {
            ++motion_edges[static_cast<std::size_t>(e.from)];
        } else if (*from == NodeKind::specific && *to == NodeKind::action) {
            ++action_edges[static_cast<std::size_t>(e.from)];
        } else {
            violations.push_back("edge " + std::to_string(e.from) + "->" + std::to_string(e.to) +
                                 " connects " + std::string(to_string(*from)) + " to " + std::string(to_string(*to)));
        }
    }
    for (int i = 0; i < n; ++i) {
        const auto kind = graph.nodes[static_cast<std::size_t>(i)].kind;
        const auto idx = static_cast<std::size_t>(i);
        if (kind == NodeKind::action && motion_edges[idx] == 0)
            violations.push_back("action " + std::to_string(i) + " has no edge to the motion node");
        if (kind == NodeKind::specific && action_edges[idx] == 0)
            violations.push_back("orphan specific " + std::to_string(i));
        if (kind == NodeKind::specific && action_edges[idx] > 1)
            violations.push_back("specific " + std::to_string(i) + " attached to multiple actions");
    }
    return violations;
}

nlohmann::json to_json(const SemanticGraph& graph) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : graph.nodes)
        nodes.push_back({{"id", n.id},
                         {"kind", std::string(to_string(n.kind))},
                         {"text", n.text},
                         {"token_span", {n.span.begin, n.span.end}}});
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : graph.edges)
        edges.push_back({{"from", e.from}, {"to", e.to}, {"type", std::string(to_string(e.type))}});
    return {{"tokens", graph.tokens}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

SemanticGraph graph_from_json(const nlohmann::json& j) {
    SemanticGraph g;
    g.tokens = j.at("tokens").get<std::vector<std::string>>();
    for (const auto& n : j.at("nodes")) {
        GraphNode node;
        node.id = n.at("id").get<int>();
        node.kind = node_kind_from_string(n.at("kind").get<std::string>());
        node.text = n.at("text").get<std::string>();
        node.span = {n.at("token_span").at(0).get<int>(), n.at("token_span").at(1).get<int>()};
        g.nodes.push_back(std::move(node));
    }
    for (const auto& e : j.at("edges"))
        g.edges.push_back({e.at("from").get<int>(), e.at("to").get<int>(),
                           edge_type_from_string(e.at("type").get<std::string>())});
    return g;
}

std::vector<std::string> local_action_descriptions(const SemanticGraph& graph) {
    std::vector<std::string> out;
    for (int action : graph.action_nodes()) {
        const auto specifics = graph.specifics_of(action);
        std::string subject;
        std::string rest;
        for (int s : specifics) {
            const auto& node = graph.nodes[static_cast<std::size_t>(s)];
            if (graph.edge_between(s, action) == EdgeType::arg0) {
                if (subject.empty()) subject = node.text;
            } else {
                rest += " " + node.text;
            }
        }
        if (subject.empty()) subject = "a person";
        out.push_back(subject + " " + graph.nodes[static_cast<std::size_t>(action)].text + rest);
    }
    return out;
}

}  // namespace lagm
