// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lagm/error.hpp"
#include "lagm/semantic_graph.hpp"
#include "lagm/tokenizer.hpp"

#include <algorithm>

namespace lagm {

namespace {

Lexicon build_standard_lexicon() {
    Lexicon lx;
    const std::vector<std::pair<std::string, std::string>> verb_forms = {
        {"walk", "walks"},   {"run", "runs"},       {"jog", "jogs"},       {"turn", "turns"},   {"raise", "raises"},
        {"lift", "lifts"},   {"wave", "waves"},     {"crouch", "crouches"}, {"squat", "squats"}, {"jump", "jumps"},
        {"hop", "hops"},     {"kick", "kicks"},     {"step", "steps"},     {"spin", "spins"},   {"lower", "lowers"},
        {"sit", "sits"},     {"stand", "stands"},   {"clap", "claps"},     {"bend", "bends"},   {"look", "looks"},
        {"move", "moves"},   {"sway", "sways"},     {"swing", "swings"},   {"throw", "throws"}, {"dance", "dances"},
        {"stretch", "stretches"}, {"climb", "climbs"}, {"punch", "punches"}, {"stumble", "stumbles"},
        {"pace", "paces"},   {"shuffle", "shuffles"}, {"march", "marches"}, {"skip", "skips"}, {"crawl", "crawls"},
    };
    for (const auto& [lemma, third] : verb_forms) {
        lx.verbs.emplace(lemma, lemma);
        lx.verbs.emplace(third, lemma);
    }
    lx.prepositions = {
        {"to", EdgeType::arg4},        {"towards", EdgeType::arg4},   {"toward", EdgeType::arg4},
        {"into", EdgeType::arg4},      {"onto", EdgeType::arg4},      {"from", EdgeType::arg3},
        {"with", EdgeType::arg2},      {"in", EdgeType::argm_loc},    {"on", EdgeType::argm_loc},
        {"around", EdgeType::argm_loc}, {"at", EdgeType::argm_loc},   {"across", EdgeType::argm_loc},
        {"along", EdgeType::argm_loc}, {"through", EdgeType::argm_loc}, {"for", EdgeType::argm_tmp},
        {"during", EdgeType::argm_tmp},
    };
    lx.manner_adverbs = {"slowly",  "quickly", "briskly",     "carefully", "gently",   "energetically", "happily",
                         "lazily",  "casually", "vigorously", "rapidly",   "steadily", "fast",          "slightly",
                         "sadly",   "angrily", "aimlessly",   "lethargically"};
    lx.direction_words = {"forward", "forwards",  "backward",         "backwards", "left",   "right",  "up",
                          "down",    "sideways",  "clockwise",        "counterclockwise", "upward", "downward",
                          "away",    "back",      "ahead"};
    lx.temporal_words = {"twice", "thrice", "once", "again", "repeatedly", "briefly", "now"};
    lx.adverbials = {"together", "simultaneously", "also", "still"};
    lx.connectors = {"and", "then", "but", "while", "before", "after", "finally", "next", "afterwards"};
    lx.determiners = {"a", "an", "the", "both", "his", "her", "their", "its", "one", "two", "three", "each", "some"};
    return lx;
}

struct Phrase {
    int begin;
    int end;
    EdgeType role;
};

class ClauseChunker {
public:
    ClauseChunker(const std::vector<std::string>& tokens, const Lexicon& lx) : tokens_(tokens), lx_(lx) {}

    bool is_boundary(int i) const {
        const auto& t = tok(i);
        return lx_.connectors.contains(t) || lx_.prepositions.contains(t) || lx_.manner_adverbs.contains(t) ||
               lx_.temporal_words.contains(t) || lx_.adverbials.contains(t) || lx_.is_verb(t);
    }

    /// Argument phrases in [begin, end) following a verb.
    std::vector<Phrase> chunk(int begin, int end) const {
        std::vector<Phrase> out;
        bool have_object = false;
        int i = begin;
        while (i < end) {
            const auto& t = tok(i);
            if (lx_.connectors.contains(t)) {
                ++i;
                continue;
            }
            if (auto prep = lx_.prepositions.find(t); prep != lx_.prepositions.end()) {
                const int j = extend(i + 1, end);
                out.push_back({i, j, prep->second});
                i = j;
            } else if (lx_.manner_adverbs.contains(t)) {
                out.push_back({i, i + 1, EdgeType::argm_mnr});
                ++i;
            } else if (lx_.temporal_words.contains(t)) {
                out.push_back({i, i + 1, EdgeType::argm_tmp});
                ++i;
            } else if (lx_.adverbials.contains(t)) {
                out.push_back({i, i + 1, EdgeType::argm_adv});
                ++i;
            } else if (lx_.direction_words.contains(t)) {
                out.push_back({i, i + 1, EdgeType::argm_dir});
                ++i;
            } else {
                const int j = extend(i + 1, end);
                out.push_back({i, j, have_object ? EdgeType::others : EdgeType::arg1});
                have_object = true;
                i = j;
            }
        }
        return out;
    }

private:
    const std::string& tok(int i) const { return tokens_[static_cast<std::size_t>(i)]; }

    // A direction word continues a phrase when it follows a determiner
    // ("the left") or modifies a following word ("left arm").
    int extend(int j, int end) const {
        while (j < end && !is_boundary(j)) {
            if (lx_.direction_words.contains(tok(j))) {
                const bool after_det = lx_.determiners.contains(tok(j - 1));
                const bool modifies_next = j + 1 < end && !is_boundary(j + 1) &&
                                           !lx_.direction_words.contains(tok(j + 1));
                if (!after_det && !modifies_next) break;
            }
            ++j;
        }
        return j;
    }

    const std::vector<std::string>& tokens_;
    const Lexicon& lx_;
};

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    for (char c : text) {
        if (c == '.' || c == '!' || c == '?' || c == ';') {
            out.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    out.push_back(std::move(current));
    return out;
}

}  // namespace

const Lexicon& Lexicon::standard() {
    static const Lexicon lx = build_standard_lexicon();
    return lx;
}

SemanticGraph parse(std::string_view description, const Lexicon& lexicon) {
    SemanticGraph g;
    std::vector<std::pair<int, int>> sentences;
    for (const auto& sentence : split_sentences(description)) {
        auto toks = tokenize(sentence);
        if (toks.empty()) continue;
        const int begin = static_cast<int>(g.tokens.size());
        g.tokens.insert(g.tokens.end(), toks.begin(), toks.end());
        sentences.emplace_back(begin, static_cast<int>(g.tokens.size()));
    }
    if (g.tokens.empty()) throw InvalidArgument("empty_text", "description is empty");

    const int total = static_cast<int>(g.tokens.size());
    g.nodes.push_back({0, NodeKind::motion, join_tokens(g.tokens, 0, g.tokens.size()), {0, total}});

    ClauseChunker chunker(g.tokens, lexicon);
    auto add_node = [&](NodeKind kind, int b, int e) {
        const int id = static_cast<int>(g.nodes.size());
        g.nodes.push_back({id, kind, join_tokens(g.tokens, static_cast<std::size_t>(b), static_cast<std::size_t>(e)),
                           {b, e}});
        return id;
    };

    for (const auto& [sb, se] : sentences) {
        std::vector<int> verbs;
        for (int i = sb; i < se; ++i)
            if (lexicon.is_verb(g.tokens[static_cast<std::size_t>(i)])) verbs.push_back(i);
        if (verbs.empty()) continue;

        auto subject_in = [&](int b, int e) -> std::optional<std::pair<int, int>> {
            while (b < e && lexicon.connectors.contains(g.tokens[static_cast<std::size_t>(b)])) ++b;
            if (b >= e) return std::nullopt;
            return std::make_pair(b, e);
        };
        std::optional<std::pair<int, int>> subject = subject_in(sb, verbs.front());

        for (std::size_t k = 0; k < verbs.size(); ++k) {
            const int v = verbs[k];
            int region_end = k + 1 < verbs.size() ? verbs[k + 1] : se;
            // Words after the last connector that precede the next verb name a new subject.
            std::optional<std::pair<int, int>> next_subject;
            if (k + 1 < verbs.size()) {
                int last_conn = -1;
                for (int i = v + 1; i < region_end; ++i)
                    if (lexicon.connectors.contains(g.tokens[static_cast<std::size_t>(i)])) last_conn = i;
                if (last_conn >= 0 && last_conn + 1 < region_end) {
                    next_subject = std::make_pair(last_conn + 1, region_end);
                    region_end = last_conn + 1;
                }
            }

            const int action = add_node(NodeKind::action, v, v + 1);
            g.edges.push_back({action, 0, EdgeType::argm_ma});
            if (subject) {
                const int s = add_node(NodeKind::specific, subject->first, subject->second);
                g.edges.push_back({s, action, EdgeType::arg0});
            }
            for (const auto& ph : chunker.chunk(v + 1, region_end)) {
                const int s = add_node(NodeKind::specific, ph.begin, ph.end);
                g.edges.push_back({s, action, ph.role});
            }
            if (next_subject) subject = next_subject;
        }
    }
    if (g.action_nodes().empty()) throw NoActionFound(std::string(description));
    return g;
}

}  // namespace lagm
