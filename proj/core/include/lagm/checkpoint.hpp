// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lagm/params.hpp"
#include "lagm/tensor.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lagm {

inline constexpr std::string_view kCheckpointMagic = "LAGMCKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary container: magic, schema version, config JSON, a named tensor
/// table of row-major little-endian f64 payloads, and a trailing CRC-32.
struct Checkpoint {
    std::string kind;  // e.g. "embedder", "vae", "diffusion"
    nlohmann::json config = nlohmann::json::object();
    std::vector<std::pair<std::string, Matrix>> tensors;

    void add(std::string name, Matrix value) { tensors.emplace_back(std::move(name), std::move(value)); }
    const Matrix& tensor(std::string_view name) const;
    bool has(std::string_view name) const;

    /// Appends every parameter under `prefix`.
    void add_parameters(const ParameterSet& params, const std::string& prefix = "");
    /// Overwrites parameters from tensors under `prefix`; every name must be present with matching shape.
    void load_parameters(ParameterSet& params, const std::string& prefix = "") const;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
/// Throws ParseError on truncation or checksum mismatch and VersionError on unknown versions.
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lagm
