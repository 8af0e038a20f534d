// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lagm/corpus.hpp"

#include "lagm/error.hpp"
#include "lagm/params.hpp"
#include "lagm/tokenizer.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace lagm {

namespace {

constexpr std::array<std::string_view, 10> kPrimitiveNames = {
    "walk-forward", "walk-backward", "walk-circle", "turn", "raise-arms",
    "wave",         "crouch",        "jump",        "kick", "sidestep",
};

constexpr double kRootHeight = 0.9;
constexpr int kGaitPeriod = 20;

double ease(double tau) {
    tau = std::clamp(tau, 0.0, 1.0);
    return 0.5 * (1.0 - std::cos(std::numbers::pi * tau));
}

struct Frame {
    Eigen::Vector3d root;
    double yaw = 0.0;
    Matrix local;  // N x 3 root-relative offsets in the body frame
};

struct ClauseArg {
    std::vector<std::string> words;
    EdgeType role;
};

struct Clause {
    std::string verb;
    std::vector<ClauseArg> args;
};

class PrimitiveEmitter {
public:
    PrimitiveEmitter(std::mt19937_64& rng, Frame start, Matrix rest)
        : rng_(rng), state_(std::move(start)), rest_(std::move(rest)) {}

    Clause emit(const PrimitiveConfig& cfg, int frames, std::vector<Frame>& out) {
        const double amp = uniform(cfg.min_amplitude, cfg.max_amplitude);
        switch (cfg.kind) {
            case PrimitiveKind::walk_forward: return walk(frames, amp, 0.0, out, true);
            case PrimitiveKind::walk_backward: return walk(frames, -amp, 0.0, out, false);
            case PrimitiveKind::walk_circle: return walk_circle(frames, amp, out);
            case PrimitiveKind::turn: return turn(frames, amp, out);
            case PrimitiveKind::raise_arms: return raise_arms(frames, amp, out);
            case PrimitiveKind::wave: return wave(frames, amp, out);
            case PrimitiveKind::crouch: return crouch(frames, amp, out);
            case PrimitiveKind::jump: return jump(frames, amp, out);
            case PrimitiveKind::kick: return kick(frames, amp, out);
            case PrimitiveKind::sidestep: return sidestep(frames, amp, out);
        }
        throw InvalidArgument("unknown primitive");
    }

    const Frame& state() const { return state_; }

private:
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    bool coin() { return std::uniform_int_distribution<int>(0, 1)(rng_) == 1; }

    Matrix rest_pose(double root_height) const {
        Matrix local = rest_;
        for (int foot : {4, 5, 6, 7}) local(foot, 1) = -root_height;
        return local;
    }

    void push(std::vector<Frame>& out, Matrix local) {
        state_.local = std::move(local);
        out.push_back(state_);
    }

    // Feet alternate stance (planted) and swing over a fixed gait period.
    void gait_feet(Matrix& local, double speed_per_frame, int k) {
        const int half = kGaitPeriod / 2;
        const double amplitude = speed_per_frame * half / 2.0;
        for (int side = 0; side < 2; ++side) {
            const int phase = (gait_phase_ + k + side * half) % kGaitPeriod;
            const bool swing = phase < half;
            const double tau = static_cast<double>(phase % half) / half;
            const double rel = swing ? -amplitude + 2.0 * amplitude * tau : amplitude - 2.0 * amplitude * tau;
            const double lift = swing ? 0.06 * std::sin(std::numbers::pi * tau) : 0.0;
            const int heel = 4 + side, toe = 6 + side;
            local(heel, 2) += rel;
            local(toe, 2) += rel;
            local(heel, 1) += lift;
            local(toe, 1) += lift;
            local(2 + side, 2) -= 0.5 * rel;  // arms counter-swing
        }
    }

    Clause walk(int frames, double speed, double yaw_rate, std::vector<Frame>& out, bool forward) {
        for (int k = 1; k <= frames; ++k) {
            state_.root += rotate_yaw({0.0, 0.0, speed}, state_.yaw);
            state_.yaw += yaw_rate;
            Matrix local = rest_pose(state_.root.y());
            gait_feet(local, speed, k);
            push(out, std::move(local));
        }
        gait_phase_ = (gait_phase_ + frames) % kGaitPeriod;
        Clause c{"walks", {}};
        const double s = std::abs(speed);
        if (forward) {
            c.args.push_back({{"forward"}, EdgeType::argm_dir});
            if (s < 0.045) c.args.push_back({{"slowly"}, EdgeType::argm_mnr});
            if (s > 0.065) c.args.push_back({{"quickly"}, EdgeType::argm_mnr});
        } else {
            c.args.push_back({{"backward"}, EdgeType::argm_dir});
            if (s < 0.035) c.args.push_back({{"slowly"}, EdgeType::argm_mnr});
        }
        return c;
    }

    Clause walk_circle(int frames, double speed, std::vector<Frame>& out) {
        const bool small = coin();
        const bool clockwise = coin();
        const double radius = small ? uniform(0.6, 1.0) : uniform(1.4, 2.2);
        const double rate = (clockwise ? -1.0 : 1.0) * speed / radius;
        walk(frames, speed, rate, out, true);
        return Clause{"walks",
                      {{{"in", "a", small ? "small" : "large", "circle"}, EdgeType::argm_loc},
                       {{clockwise ? "clockwise" : "counterclockwise"}, EdgeType::argm_dir}}};
    }

    Clause turn(int frames, double angle, std::vector<Frame>& out) {
        const bool left = coin();
        const double start = state_.yaw;
        const double sign = left ? 1.0 : -1.0;
        for (int k = 1; k <= frames; ++k) {
            state_.yaw = start + sign * angle * ease(static_cast<double>(k) / frames);
            push(out, rest_pose(state_.root.y()));
        }
        return Clause{"turns", {{{left ? "left" : "right"}, EdgeType::argm_dir}}};
    }

    Clause raise_arms(int frames, double height, std::vector<Frame>& out) {
        const int which = std::uniform_int_distribution<int>(0, 2)(rng_);  // both, left, right
        for (int k = 1; k <= frames; ++k) {
            const double p = ease(static_cast<double>(k) / (0.6 * frames));
            Matrix local = rest_pose(state_.root.y());
            for (int side = 0; side < 2; ++side) {
                if (which != 0 && which != side + 1) continue;
                const int hand = 2 + side;
                const double sx = side == 0 ? 1.0 : -1.0;
                local(hand, 0) = (1.0 - p) * local(hand, 0) + p * 0.2 * sx;
                local(hand, 1) = (1.0 - p) * local(hand, 1) + p * height;
            }
            push(out, std::move(local));
        }
        Clause c{"raises", {}};
        if (which == 0)
            c.args.push_back({{"both", "arms"}, EdgeType::arg1});
        else
            c.args.push_back({{"the", which == 1 ? "left" : "right", "arm"}, EdgeType::arg1});
        return c;
    }

    Clause wave(int frames, double swing, std::vector<Frame>& out) {
        const int side = coin() ? 0 : 1;
        const int cycles = coin() ? 2 : 3;
        const int hand = 2 + side;
        const double sx = side == 0 ? 1.0 : -1.0;
        for (int k = 1; k <= frames; ++k) {
            const double tau = static_cast<double>(k) / frames;
            double p = 1.0;
            if (tau < 0.25) p = ease(tau / 0.25);
            if (tau > 0.85) p = 1.0 - ease((tau - 0.85) / 0.15);
            double osc = 0.0;
            if (tau >= 0.25 && tau <= 0.85) osc = swing * std::sin(2.0 * std::numbers::pi * cycles * (tau - 0.25) / 0.6);
            Matrix local = rest_pose(state_.root.y());
            local(hand, 0) = (1.0 - p) * local(hand, 0) + p * (0.3 * sx + osc);
            local(hand, 1) = (1.0 - p) * local(hand, 1) + p * 0.65;
            local(hand, 2) = (1.0 - p) * local(hand, 2) + p * 0.15;
            push(out, std::move(local));
        }
        Clause c{"waves", {{{"the", side == 0 ? "left" : "right", "hand"}, EdgeType::arg1}}};
        if (cycles == 2) c.args.push_back({{"twice"}, EdgeType::argm_tmp});
        return c;
    }

    Clause crouch(int frames, double depth, std::vector<Frame>& out) {
        for (int k = 1; k <= frames; ++k) {
            state_.root.y() = kRootHeight - depth * std::sin(std::numbers::pi * static_cast<double>(k) / frames);
            push(out, rest_pose(state_.root.y()));
        }
        return Clause{"crouches", {{{"down"}, EdgeType::argm_dir}}};
    }

    Clause jump(int frames, double height, std::vector<Frame>& out) {
        const bool forward = coin();
        const double distance = forward ? uniform(0.4, 0.8) : 0.0;
        double travelled = 0.0;
        for (int k = 1; k <= frames; ++k) {
            const double tau = static_cast<double>(k) / frames;
            const double s = std::clamp((tau - 0.3) / 0.4, 0.0, 1.0);
            const double lift = height * 4.0 * s * (1.0 - s);
            const double target = distance * ease(s);
            state_.root += rotate_yaw({0.0, 0.0, target - travelled}, state_.yaw);
            travelled = target;
            state_.root.y() = kRootHeight + lift;
            Matrix local = rest_pose(state_.root.y());
            for (int foot : {4, 5, 6, 7}) local(foot, 1) += lift;
            push(out, std::move(local));
        }
        if (forward) return Clause{"jumps", {{{"forward"}, EdgeType::argm_dir}}};
        return Clause{"jumps", {{{"in", "place"}, EdgeType::argm_loc}}};
    }

    Clause kick(int frames, double height, std::vector<Frame>& out) {
        const int side = coin() ? 0 : 1;
        for (int k = 1; k <= frames; ++k) {
            const double bump = std::sin(std::numbers::pi * static_cast<double>(k) / frames);
            Matrix local = rest_pose(state_.root.y());
            for (int j : {4 + side, 6 + side}) {
                local(j, 2) += 0.4 * bump;
                local(j, 1) += height * bump;
            }
            push(out, std::move(local));
        }
        return Clause{"kicks", {{{"with", "the", side == 0 ? "left" : "right", "foot"}, EdgeType::arg2}}};
    }

    Clause sidestep(int frames, double distance, std::vector<Frame>& out) {
        const bool left = coin();
        const double sign = left ? 1.0 : -1.0;
        double travelled = 0.0;
        for (int k = 1; k <= frames; ++k) {
            const double target = distance * ease(static_cast<double>(k) / frames);
            state_.root += rotate_yaw({sign * (target - travelled), 0.0, 0.0}, state_.yaw);
            travelled = target;
            push(out, rest_pose(state_.root.y()));
        }
        return Clause{"steps", {{{"to", "the", left ? "left" : "right"}, EdgeType::arg4}}};
    }

    std::mt19937_64& rng_;
    Frame state_;
    Matrix rest_;
    int gait_phase_ = 0;
};

struct DescriptionBuilder {
    SemanticGraph graph;
    std::vector<std::pair<int, int>> clause_token_ranges;

    void build(const std::vector<std::string>& subject, const std::vector<Clause>& clauses) {
        auto& toks = graph.tokens;
        toks.insert(toks.end(), subject.begin(), subject.end());
        const TokenSpan subject_span{0, static_cast<int>(subject.size())};
        struct Pending {
            int verb;
            std::vector<TokenSpan> spans;
            std::vector<EdgeType> roles;
        };
        std::vector<Pending> pending;
        for (std::size_t i = 0; i < clauses.size(); ++i) {
            if (i > 0) toks.push_back(i + 1 == clauses.size() ? "and" : "then");
            Pending p;
            const int clause_begin = static_cast<int>(toks.size());
            p.verb = clause_begin;
            toks.push_back(clauses[i].verb);
            for (const auto& arg : clauses[i].args) {
                const int b = static_cast<int>(toks.size());
                toks.insert(toks.end(), arg.words.begin(), arg.words.end());
                p.spans.push_back({b, static_cast<int>(toks.size())});
                p.roles.push_back(arg.role);
            }
            clause_token_ranges.emplace_back(clause_begin, static_cast<int>(toks.size()));
            pending.push_back(std::move(p));
        }
        const int total = static_cast<int>(toks.size());
        graph.nodes.push_back({0, NodeKind::motion, join_tokens(toks, 0, toks.size()), {0, total}});
        auto add = [&](NodeKind kind, TokenSpan span) {
            const int id = static_cast<int>(graph.nodes.size());
            graph.nodes.push_back({id, kind,
                                   join_tokens(toks, static_cast<std::size_t>(span.begin),
                                               static_cast<std::size_t>(span.end)),
                                   span});
            return id;
        };
        for (const auto& p : pending) {
            const int action = add(NodeKind::action, {p.verb, p.verb + 1});
            graph.edges.push_back({action, 0, EdgeType::argm_ma});
            if (subject_span.end > subject_span.begin) {
                const int s = add(NodeKind::specific, subject_span);
                graph.edges.push_back({s, action, EdgeType::arg0});
            }
            for (std::size_t k = 0; k < p.spans.size(); ++k) {
                const int s = add(NodeKind::specific, p.spans[k]);
                graph.edges.push_back({s, action, p.roles[k]});
            }
        }
    }
};

nlohmann::json entry_to_json(const CorpusEntry& e) {
    nlohmann::json frames = nlohmann::json::array();
    for (Index t = 0; t < e.motion.frames.rows(); ++t)
        frames.push_back(std::vector<double>(e.motion.frames.row(t).data(),
                                             e.motion.frames.row(t).data() + e.motion.frames.cols()));
    nlohmann::json segments = nlohmann::json::array();
    for (const auto& s : e.local_actions)
        segments.push_back({{"description", s.description}, {"start", s.start}, {"length", s.length}});
    return {{"id", e.id},
            {"description", e.description},
            {"gold_graph", to_json(e.gold_graph)},
            {"fps", e.motion.fps},
            {"joints", e.motion.joints},
            {"frames", std::move(frames)},
            {"local_actions", std::move(segments)}};
}

CorpusEntry entry_from_json(const nlohmann::json& j) {
    CorpusEntry e;
    e.id = j.at("id").get<std::string>();
    e.description = j.at("description").get<std::string>();
    e.gold_graph = graph_from_json(j.at("gold_graph"));
    e.motion.fps = j.at("fps").get<double>();
    e.motion.joints = j.at("joints").get<int>();
    const auto& frames = j.at("frames");
    const auto dim = static_cast<Index>(feature_dim(e.motion.joints));
    e.motion.frames.resize(static_cast<Index>(frames.size()), dim);
    for (std::size_t t = 0; t < frames.size(); ++t) {
        const auto& row = frames[t];
        if (static_cast<Index>(row.size()) != dim) throw InvalidArgument("frame width does not match joint count");
        for (Index c = 0; c < dim; ++c) e.motion.frames(static_cast<Index>(t), c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    for (const auto& s : j.at("local_actions")) {
        LocalActionSegment seg;
        seg.description = s.at("description").get<std::string>();
        seg.start = s.at("start").get<Index>();
        seg.length = s.at("length").get<Index>();
        seg.motion = e.motion.slice(seg.start, seg.length);
        e.local_actions.push_back(std::move(seg));
    }
    return e;
}

}  // namespace

std::string_view to_string(PrimitiveKind kind) { return kPrimitiveNames.at(static_cast<std::size_t>(kind)); }

PrimitiveKind primitive_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kPrimitiveNames.size(); ++i)
        if (kPrimitiveNames[i] == name) return static_cast<PrimitiveKind>(i);
    throw InvalidArgument("unknown primitive: " + std::string(name));
}

GrammarConfig GrammarConfig::desk() {
    GrammarConfig g;
    g.primitives = {
        {PrimitiveKind::walk_forward, 40, 60, 0.03, 0.08}, {PrimitiveKind::walk_backward, 40, 60, 0.02, 0.05},
        {PrimitiveKind::walk_circle, 40, 60, 0.03, 0.06},  {PrimitiveKind::turn, 40, 60, 1.0, 2.6},
        {PrimitiveKind::raise_arms, 40, 60, 0.7, 0.9},     {PrimitiveKind::wave, 40, 60, 0.1, 0.2},
        {PrimitiveKind::crouch, 40, 60, 0.2, 0.4},         {PrimitiveKind::jump, 40, 60, 0.15, 0.35},
        {PrimitiveKind::kick, 40, 60, 0.2, 0.35},          {PrimitiveKind::sidestep, 40, 60, 0.4, 1.0},
    };
    return g;
}

GrammarConfig GrammarConfig::only(std::initializer_list<PrimitiveKind> kinds) {
    const GrammarConfig all = desk();
    GrammarConfig g = all;
    g.primitives.clear();
    for (auto k : kinds)
        for (const auto& p : all.primitives)
            if (p.kind == k) g.primitives.push_back(p);
    return g;
}

void GrammarConfig::validate() const {
    LAGM_CHECK(!primitives.empty(), "grammar has no primitives");
    LAGM_CHECK(min_actions >= 1 && min_actions <= max_actions, "invalid action-count range");
    LAGM_CHECK(crossfade_frames >= 0, "crossfade must be non-negative");
    LAGM_CHECK(fps > 0.0 && contact_threshold > 0.0, "fps and contact threshold must be positive");
    for (const auto& p : primitives) {
        LAGM_CHECK(p.min_frames >= 1 && p.min_frames <= p.max_frames,
                   "invalid frame range for " + std::string(to_string(p.kind)));
        LAGM_CHECK(p.min_amplitude <= p.max_amplitude && p.min_amplitude >= 0.0,
                   "invalid amplitude range for " + std::string(to_string(p.kind)));
    }
}

CorpusEntry generate_entry(std::uint64_t seed, std::size_t index, const GrammarConfig& config) {
    config.validate();
    std::mt19937_64 rng(stream_seed(seed, index));
    const SkeletonSpec skeleton = SkeletonSpec::desk();
    const Matrix rest = skeleton.rest_offsets();

    Frame start;
    start.root = {0.0, kRootHeight, 0.0};
    start.local = rest;
    for (int foot : {4, 5, 6, 7}) start.local(foot, 1) = -kRootHeight;

    std::vector<Frame> frames{start};
    PrimitiveEmitter emitter(rng, start, rest);
    const int actions = std::uniform_int_distribution<int>(config.min_actions, config.max_actions)(rng);
    std::vector<Clause> clauses;
    std::vector<std::pair<Index, Index>> segments;
    for (int a = 0; a < actions; ++a) {
        const auto& prim = config.primitives[std::uniform_int_distribution<std::size_t>(0, config.primitives.size() - 1)(rng)];
        const int n = std::uniform_int_distribution<int>(prim.min_frames, prim.max_frames)(rng);
        const Matrix previous = frames.back().local;
        const auto first = frames.size();
        clauses.push_back(emitter.emit(prim, n, frames));
        for (int k = 0; k < config.crossfade_frames && first + static_cast<std::size_t>(k) < frames.size(); ++k) {
            const double w = static_cast<double>(k + 1) / (config.crossfade_frames + 1);
            auto& f = frames[first + static_cast<std::size_t>(k)];
            f.local = (1.0 - w) * previous + w * f.local;
        }
        segments.emplace_back(static_cast<Index>(first - 1), n);
    }

    PositionTrack positions(static_cast<Index>(frames.size()), 3 * skeleton.joint_count());
    for (std::size_t t = 0; t < frames.size(); ++t)
        for (int j = 0; j < skeleton.joint_count(); ++j) {
            const Eigen::Vector3d local = frames[t].local.row(j).transpose();
            const Eigen::Vector3d world = frames[t].root + rotate_yaw(local, frames[t].yaw);
            for (int k = 0; k < 3; ++k) positions(static_cast<Index>(t), 3 * j + k) = world(k);
        }

    DescriptionBuilder builder;
    builder.build({"a", "person"}, clauses);

    CorpusEntry entry;
    entry.id = "s" + std::to_string(seed) + "-" + std::to_string(index);
    entry.gold_graph = std::move(builder.graph);
    entry.description = entry.gold_graph.nodes.front().text;
    entry.motion = extract_features(positions, skeleton, config.contact_threshold, config.fps);
    const auto descriptions = local_action_descriptions(entry.gold_graph);
    for (std::size_t a = 0; a < segments.size(); ++a) {
        LocalActionSegment seg;
        seg.description = descriptions[a];
        seg.start = segments[a].first;
        seg.length = segments[a].second;
        seg.motion = entry.motion.slice(seg.start, seg.length);
        entry.local_actions.push_back(std::move(seg));
    }
    return entry;
}

std::vector<CorpusEntry> generate_corpus(std::uint64_t seed, std::size_t size, const GrammarConfig& config) {
    LAGM_CHECK(size >= 1, "corpus size must be at least 1");
    config.validate();
    std::vector<CorpusEntry> out;
    out.reserve(size);
    for (std::size_t i = 0; i < size; ++i) out.push_back(generate_entry(seed, i, config));
    return out;
}

std::string serialize_corpus(const std::vector<CorpusEntry>& entries) {
    std::string out = nlohmann::json{{"format", "lagm-corpus"}, {"version", kCorpusSchemaVersion},
                                     {"entries", entries.size()}}
                          .dump();
    out.push_back('\n');
    for (const auto& e : entries) {
        out += entry_to_json(e).dump();
        out.push_back('\n');
    }
    return out;
}

std::vector<CorpusEntry> deserialize_corpus(std::string_view content) {
    std::vector<CorpusEntry> entries;
    std::size_t offset = 0;
    std::size_t expected = 0;
    bool have_header = false;
    while (offset < content.size()) {
        std::size_t end = content.find('\n', offset);
        if (end == std::string_view::npos) end = content.size();
        const std::string_view line = content.substr(offset, end - offset);
        if (!line.empty()) {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw ParseError("malformed corpus record: " + std::string(e.what()),
                                 offset + (e.byte > 0 ? e.byte - 1 : 0));
            }
            try {
                if (!have_header) {
                    if (j.value("format", std::string()) != "lagm-corpus")
                        throw ParseError("missing corpus header", offset);
                    const int version = j.at("version").get<int>();
                    if (version != kCorpusSchemaVersion)
                        throw VersionError("corpus schema version " + std::to_string(version) +
                                           " is not supported (expected " + std::to_string(kCorpusSchemaVersion) + ")");
                    expected = j.at("entries").get<std::size_t>();
                    have_header = true;
                } else {
                    entries.push_back(entry_from_json(j));
                }
            } catch (const nlohmann::json::exception& e) {
                throw ParseError("invalid corpus record: " + std::string(e.what()), offset);
            } catch (const InvalidArgument& e) {
                throw ParseError("invalid corpus record: " + std::string(e.what()), offset);
            }
        }
        offset = end + 1;
    }
    if (!have_header) throw ParseError("empty corpus file", 0);
    if (entries.size() != expected)
        throw ParseError("truncated corpus: expected " + std::to_string(expected) + " entries, found " +
                             std::to_string(entries.size()),
                         content.size());
    return entries;
}

void save_corpus(const std::vector<CorpusEntry>& entries, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io_error", "cannot open " + path.string() + " for writing");
    const std::string data = serialize_corpus(entries);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error("io_error", "failed writing " + path.string());
}

std::vector<CorpusEntry> load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io_error", "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize_corpus(ss.str());
}

bool is_validation_entry(const std::string& id, int validation_percent) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : id) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return static_cast<int>(stream_seed(h, 0) % 100) < validation_percent;
}

}  // namespace lagm
