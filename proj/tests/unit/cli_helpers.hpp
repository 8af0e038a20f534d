// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "cli.hpp"
#include "tiny_models.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace lagm::testing {

struct CliRun {
    int code = 0;
    std::string out;
    std::string err;
};

inline CliRun run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "lagm");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = interface::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Fresh directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    std::random_device rd;
    const auto dir = std::filesystem::temp_directory_path() / ("lagm_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(dir);
    return dir;
}

/// tiny_bundle() saved once per process.
inline const std::filesystem::path& tiny_models_dir() {
    static const std::filesystem::path dir = [] {
        auto d = scratch_dir("models");
        tiny_bundle().save(d);
        return d;
    }();
    return dir;
}

}  // namespace lagm::testing
