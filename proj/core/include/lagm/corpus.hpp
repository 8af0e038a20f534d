// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lagm/motion.hpp"
#include "lagm/semantic_graph.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lagm {

enum class PrimitiveKind {
    walk_forward,
    walk_backward,
    walk_circle,
    turn,
    raise_arms,
    wave,
    crouch,
    jump,
    kick,
    sidestep,
};

std::string_view to_string(PrimitiveKind kind);
PrimitiveKind primitive_from_string(std::string_view name);

/// Procedural local-action generator settings. `amplitude` is the
/// primitive's main magnitude (speed, angle, height or depth).
struct PrimitiveConfig {
    PrimitiveKind kind = PrimitiveKind::walk_forward;
    int min_frames = 40;
    int max_frames = 60;
    double min_amplitude = 0.0;
    double max_amplitude = 1.0;
};

struct GrammarConfig {
    std::vector<PrimitiveConfig> primitives;
    int min_actions = 1;
    int max_actions = 4;
    int crossfade_frames = 5;
    double fps = kDefaultFps;
    double contact_threshold = kDefaultContactThreshold;

    /// All ten primitives with desk frame and amplitude ranges.
    static GrammarConfig desk();
    /// Same ranges restricted to the named primitives.
    static GrammarConfig only(std::initializer_list<PrimitiveKind> kinds);
    void validate() const;
};

struct LocalActionSegment {
    std::string description;
    Index start = 0;
    Index length = 0;
    MotionSequence motion;

    bool operator==(const LocalActionSegment&) const = default;
};

struct CorpusEntry {
    std::string id;
    std::string description;
    SemanticGraph gold_graph;
    MotionSequence motion;
    std::vector<LocalActionSegment> local_actions;

    bool operator==(const CorpusEntry&) const = default;
};

/// Pure function of (seed, size, config); entry i draws from stream_seed(seed, i).
std::vector<CorpusEntry> generate_corpus(std::uint64_t seed, std::size_t size,
                                         const GrammarConfig& config = GrammarConfig::desk());

/// One entry; exposed for sharded generation.
CorpusEntry generate_entry(std::uint64_t seed, std::size_t index, const GrammarConfig& config);

inline constexpr int kCorpusSchemaVersion = 1;

void save_corpus(const std::vector<CorpusEntry>& entries, const std::filesystem::path& path);
/// Throws ParseError (with byte offset) on malformed input and VersionError
/// on an unknown schema version; never returns a partial corpus.
std::vector<CorpusEntry> load_corpus(const std::filesystem::path& path);

std::string serialize_corpus(const std::vector<CorpusEntry>& entries);
std::vector<CorpusEntry> deserialize_corpus(std::string_view content);

/// Deterministic train/validation split by id hash; `validation_percent` in [0, 100].
bool is_validation_entry(const std::string& id, int validation_percent = 20);

}  // namespace lagm
