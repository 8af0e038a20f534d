// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace lagm {

enum class NodeKind { motion, action, specific };

/// Semantic-role edge types. The order is the one-hot index used by the
/// relational attention.
enum class EdgeType {
    arg0,
    arg1,
    arg2,
    arg3,
    arg4,
    argm_loc,
    argm_mnr,
    argm_tmp,
    argm_dir,
    argm_adv,
    argm_ma,
    others,
};

inline constexpr int kEdgeTypeCount = 12;

std::string_view to_string(EdgeType type);
EdgeType edge_type_from_string(std::string_view name);
std::string_view to_string(NodeKind kind);
NodeKind node_kind_from_string(std::string_view name);

/// Half-open range [begin, end) over normalized tokens.
struct TokenSpan {
    int begin = 0;
    int end = 0;
    bool operator==(const TokenSpan&) const = default;
};

struct GraphNode {
    int id = 0;
    NodeKind kind = NodeKind::motion;
    std::string text;
    TokenSpan span;
    bool operator==(const GraphNode&) const = default;
};

struct GraphEdge {
    int from = 0;
    int to = 0;
    EdgeType type = EdgeType::others;
    bool operator==(const GraphEdge&) const = default;
};

/// Three-level description graph. Node ids equal their index in `nodes`.
/// Canonical order: the motion node, then for each action in surface order
/// the action node followed by its specific nodes in surface order.
struct SemanticGraph {
    std::vector<std::string> tokens;
    std::vector<GraphNode> nodes;
    std::vector<GraphEdge> edges;

    int motion_node() const;
    std::vector<int> action_nodes() const;
    std::vector<int> specific_nodes() const;
    /// Specific nodes attached to an action, in surface order.
    std::vector<int> specifics_of(int action) const;
    std::optional<EdgeType> edge_between(int from, int to) const;
    /// Ids of nodes with an edge into `node`.
    std::vector<int> incoming(int node) const;

    bool operator==(const SemanticGraph&) const = default;
};

/// Every invariant violation found; empty when the graph is valid.
std::vector<std::string> validate(const SemanticGraph& graph);

nlohmann::json to_json(const SemanticGraph& graph);
SemanticGraph graph_from_json(const nlohmann::json& j);

/// Verb, role and function-word tables driving the parser.
struct Lexicon {
    std::map<std::string, std::string> verbs;                 // surface form -> lemma
    std::map<std::string, EdgeType> prepositions;             // opens a prepositional phrase
    std::set<std::string> manner_adverbs;                     // ARGM-MNR
    std::set<std::string> direction_words;                    // ARGM-DIR
    std::set<std::string> temporal_words;                     // ARGM-TMP
    std::set<std::string> adverbials;                         // ARGM-ADV
    std::set<std::string> connectors;                         // clause boundaries
    std::set<std::string> determiners;                        // open a noun phrase

    static const Lexicon& standard();
    bool is_verb(std::string_view token) const { return verbs.contains(std::string(token)); }
};

/// Grammar-first semantic parse. Throws NoActionFound when no verb matches.
SemanticGraph parse(std::string_view description, const Lexicon& lexicon = Lexicon::standard());

/// One description per action: subject phrase (or "a person"), verb, then
/// the action's remaining specifics in surface order.
std::vector<std::string> local_action_descriptions(const SemanticGraph& graph);

}  // namespace lagm
