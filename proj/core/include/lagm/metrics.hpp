// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lagm/tensor.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace lagm {

enum class FeatureKind { text, motion };

/// Rows of evaluation features with per-row identifiers.
struct FeatureSet {
    Matrix features;  // N x D_e
    std::vector<std::string> ids;
    FeatureKind kind = FeatureKind::motion;

    Index size() const { return features.rows(); }
    /// Throws InvalidArgument or NumericError on broken invariants.
    void validate() const;
};

struct GaussianMoments {
    RowVector mean;
    Matrix covariance;
};

/// Sample mean and unbiased covariance; adds 1e-6 I when N <= D.
GaussianMoments moments(const Matrix& features);

/// Frechet distance between Gaussian fits of two feature sets.
double fid(const Matrix& a, const Matrix& b);
double fid(const GaussianMoments& a, const GaussianMoments& b);

struct TopK {
    double top1 = 0.0;
    double top2 = 0.0;
    double top3 = 0.0;
};

/// Each motion ranks its own text among `pool_size` candidates (itself plus
/// pool_size-1 distinct others drawn per repeat) by Euclidean distance. The
/// true text wins ties. Returns one value per repeat.
std::vector<TopK> r_precision(const Matrix& text, const Matrix& motion, int pool_size, int repeats,
                              std::uint64_t seed);
std::vector<TopK> r_precision(const FeatureSet& text, const FeatureSet& motion, int pool_size, int repeats,
                              std::uint64_t seed);

/// Mean Euclidean distance over aligned rows.
double mm_dist(const Matrix& text, const Matrix& motion);
double mm_dist(const FeatureSet& text, const FeatureSet& motion);

/// Mean distance between two disjoint seeded subsets of `subset_size` rows.
double diversity(const Matrix& features, int subset_size, std::uint64_t seed);

/// Mean distance over pairs (row 2i, row 2i+1) of every group.
double multimodality(const std::vector<Matrix>& groups, int pairs_per_group);

struct Statistic {
    double mean = 0.0;
    double ci95 = 0.0;  // half-width, 1.96 * sd / sqrt(n)
    std::vector<double> values;
};

Statistic summarize(std::vector<double> values);

struct MetricReport {
    Statistic r_precision_top1, r_precision_top2, r_precision_top3;
    Statistic fid, mm_dist, diversity, multimodality;

    nlohmann::json to_json() const;
    /// Fixed-width table: R-Precision 1/2/3, FID, MM-Dist, Diversity, MModality.
    std::string table(const std::string& row_label) const;
    static std::string header();
    /// One table line; statistics without values print as "-".
    std::string row(const std::string& row_label) const;
};

}  // namespace lagm
