// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string_view>

namespace lagm {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using Vector = Eigen::VectorXd;

/// Arithmetic precision of a forward pass. `f32` rounds every intermediate
/// value to single precision; storage stays double either way.
enum class Precision { f32, f64 };

inline Precision precision_from_bits(int bits) {
    return bits == 32 ? Precision::f32 : Precision::f64;
}

inline int precision_bits(Precision p) { return p == Precision::f32 ? 32 : 64; }

inline void round_to(Precision p, Matrix& m) {
    if (p == Precision::f32) m = m.cast<float>().cast<double>();
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace lagm
