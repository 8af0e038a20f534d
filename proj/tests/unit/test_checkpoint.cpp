// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lagm/checkpoint.hpp"
#include "lagm/error.hpp"

#include <doctest.h>

#include <filesystem>

using namespace lagm;

namespace {

Checkpoint sample() {
    Checkpoint c;
    c.kind = "test";
    c.config = {{"width", 4}, {"rate", 0.1}};
    std::mt19937_64 rng(1);
    c.add("a", gaussian(2, 3, 1.0, rng));
    c.add("b", gaussian(1, 5, 1.0, rng));
    return c;
}

}  // namespace

TEST_CASE("checkpoint save/load/save is byte-identical") {
    const auto path = std::filesystem::temp_directory_path() / "lagm_test.ckpt";
    save_checkpoint(sample(), path);
    const Checkpoint loaded = load_checkpoint(path);
    CHECK(loaded.kind == "test");
    CHECK(loaded.config == sample().config);
    CHECK(loaded.tensor("a") == sample().tensor("a"));
    CHECK(serialize_checkpoint(loaded) == serialize_checkpoint(sample()));
    std::filesystem::remove(path);
}

TEST_CASE("corrupted checkpoints are rejected") {
    std::string bytes = serialize_checkpoint(sample());
    std::string flipped = bytes;
    flipped[flipped.size() / 2] ^= 0x5a;
    CHECK_THROWS_AS(deserialize_checkpoint(flipped), ParseError);
    CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 7)), ParseError);
    CHECK_THROWS_AS(deserialize_checkpoint("garbage"), ParseError);
    std::string future = bytes;
    future[8] = 7;
    CHECK_THROWS_AS(deserialize_checkpoint(future), VersionError);
}

TEST_CASE("parameter tables load by name and shape") {
    ParameterSet p;
    std::mt19937_64 rng(2);
    p.add("w", gaussian(2, 2, 1.0, rng));
    Checkpoint c;
    c.add_parameters(p, "m.");
    ParameterSet q;
    q.add("w", Matrix::Zero(2, 2));
    c.load_parameters(q, "m.");
    CHECK(q == p);
    ParameterSet wrong;
    wrong.add("w", Matrix::Zero(3, 2));
    CHECK_THROWS_AS(c.load_parameters(wrong, "m."), InvalidArgument);
    CHECK_THROWS_AS(c.tensor("missing"), InvalidArgument);
}
