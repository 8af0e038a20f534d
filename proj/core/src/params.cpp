// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lagm/params.hpp"

#include "lagm/error.hpp"

#include <cmath>

namespace lagm {

ParamId ParameterSet::add(std::string name, Matrix init) {
    LAGM_CHECK(!index_.contains(name), "duplicate parameter name: " + name);
    const auto id = static_cast<ParamId>(values_.size());
    index_.emplace(name, id);
    names_.push_back(std::move(name));
    values_.push_back(std::move(init));
    return id;
}

ParamId ParameterSet::id(std::string_view name) const {
    auto found = find(name);
    if (!found) throw InvalidArgument("unknown parameter: " + std::string(name));
    return *found;
}

std::optional<ParamId> ParameterSet::find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
    return n;
}

bool ParameterSet::all_finite() const {
    for (const auto& v : values_)
        if (!v.allFinite()) return false;
    return true;
}

bool ParameterSet::operator==(const ParameterSet& other) const {
    if (names_ != other.names_) return false;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (values_[i].rows() != other.values_[i].rows() || values_[i].cols() != other.values_[i].cols())
            return false;
        if (values_[i] != other.values_[i]) return false;
    }
    return true;
}

void GradientSet::accumulate(ParamId id, const Matrix& g) {
    auto& slot = grads_.at(static_cast<std::size_t>(id));
    if (slot.size() == 0)
        slot = g;
    else
        slot += g;
}

void GradientSet::add(const GradientSet& other) {
    if (grads_.empty()) grads_.resize(other.grads_.size());
    for (std::size_t i = 0; i < other.grads_.size(); ++i)
        if (other.grads_[i].size() > 0) accumulate(static_cast<ParamId>(i), other.grads_[i]);
}

void GradientSet::scale(double factor) {
    for (auto& g : grads_)
        if (g.size() > 0) g *= factor;
}

double GradientSet::norm() const {
    double sq = 0.0;
    for (const auto& g : grads_)
        if (g.size() > 0) sq += g.squaredNorm();
    return std::sqrt(sq);
}

AdamW::AdamW(const ParameterSet& params, AdamWConfig config) : config_(config) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& p = params.value(static_cast<ParamId>(i));
        m_[i] = Matrix::Zero(p.rows(), p.cols());
        v_[i] = Matrix::Zero(p.rows(), p.cols());
    }
}

void AdamW::step(ParameterSet& params, GradientSet grads) {
    if (config_.clip_norm > 0.0) {
        const double n = grads.norm();
        if (n > config_.clip_norm) grads.scale(config_.clip_norm / n);
    }
    ++step_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto id = static_cast<ParamId>(i);
        if (!grads.has(id)) continue;
        const Matrix& g = grads.get(id);
        Matrix& p = params.value(id);
        m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
        v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g.cwiseProduct(g);
        if (config_.weight_decay > 0.0) p *= (1.0 - config_.learning_rate * config_.weight_decay);
        p.array() -= config_.learning_rate * (m_[i].array() / bc1) /
                     ((v_[i].array() / bc2).sqrt() + config_.epsilon);
    }
}

Matrix glorot(Index rows, Index cols, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    return m;
}

Matrix gaussian(Index rows, Index cols, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    return m;
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 finalizer over the combined key
    std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + index + 0x632BE59BD9B4E019ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace lagm
