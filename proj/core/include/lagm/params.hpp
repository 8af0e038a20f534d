// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lagm/tensor.hpp"

#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lagm {

using ParamId = int;

/// Ordered, named table of trainable tensors. Insertion order is the
/// serialization order and the order in which gradients are reduced.
class ParameterSet {
public:
    ParamId add(std::string name, Matrix init);

    ParamId id(std::string_view name) const;
    std::optional<ParamId> find(std::string_view name) const;

    Matrix& value(ParamId id) { return values_.at(static_cast<std::size_t>(id)); }
    const Matrix& value(ParamId id) const { return values_.at(static_cast<std::size_t>(id)); }
    const std::string& name(ParamId id) const { return names_.at(static_cast<std::size_t>(id)); }

    std::size_t size() const { return values_.size(); }
    std::size_t scalar_count() const;
    bool all_finite() const;

    bool operator==(const ParameterSet& other) const;

private:
    std::vector<std::string> names_;
    std::vector<Matrix> values_;
    std::unordered_map<std::string, ParamId> index_;
};

/// Sparse-by-tensor gradient buffer matching a ParameterSet's layout.
class GradientSet {
public:
    GradientSet() = default;
    explicit GradientSet(const ParameterSet& params) : grads_(params.size()) {}

    void accumulate(ParamId id, const Matrix& g);
    bool has(ParamId id) const { return grads_.at(static_cast<std::size_t>(id)).size() > 0; }
    const Matrix& get(ParamId id) const { return grads_.at(static_cast<std::size_t>(id)); }

    /// Adds `other` tensor by tensor, in parameter order.
    void add(const GradientSet& other);
    void scale(double factor);
    double norm() const;
    std::size_t size() const { return grads_.size(); }

private:
    std::vector<Matrix> grads_;
};

struct AdamWConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;
    /// Global gradient-norm clip; non-positive disables clipping.
    double clip_norm = 1.0;
};

class AdamW {
public:
    AdamW(const ParameterSet& params, AdamWConfig config);

    /// Applies one update to every parameter that received a gradient.
    void step(ParameterSet& params, GradientSet grads);

    long steps_taken() const { return step_; }

private:
    AdamWConfig config_;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
    long step_ = 0;
};

/// Glorot-uniform initialization.
Matrix glorot(Index rows, Index cols, std::mt19937_64& rng);
Matrix gaussian(Index rows, Index cols, double stddev, std::mt19937_64& rng);

/// Derives an independent 64-bit stream seed from (seed, index).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace lagm
