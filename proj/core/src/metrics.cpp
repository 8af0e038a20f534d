// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lagm/metrics.hpp"

#include "lagm/error.hpp"
#include "lagm/params.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

namespace lagm {

namespace {

void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) throw NumericError(std::string(what) + " contains non-finite values");
}

void require_aligned(const FeatureSet& a, const FeatureSet& b) {
    a.validate();
    b.validate();
    LAGM_CHECK(a.ids == b.ids, "feature sets are not aligned by id");
}

Matrix symmetric_sqrt(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(0.5 * (m + m.transpose())));
    const Eigen::VectorXd roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

void FeatureSet::validate() const {
    LAGM_CHECK(features.rows() >= 1, "feature set is empty");
    LAGM_CHECK(static_cast<Index>(ids.size()) == features.rows(), "feature ids do not match row count");
    require_finite(features, "feature set");
}

GaussianMoments moments(const Matrix& features) {
    LAGM_CHECK(features.rows() >= 2, "moments need at least two rows");
    require_finite(features, "features");
    GaussianMoments m;
    m.mean = features.colwise().mean();
    const Matrix centered = features.rowwise() - m.mean;
    m.covariance = centered.transpose() * centered / static_cast<double>(features.rows() - 1);
    if (features.rows() <= features.cols()) m.covariance += 1e-6 * Matrix::Identity(features.cols(), features.cols());
    return m;
}

double fid(const GaussianMoments& a, const GaussianMoments& b) {
    LAGM_CHECK(a.mean.size() == b.mean.size(), "fid: feature widths differ");
    const Matrix sa = symmetric_sqrt(a.covariance);
    const Matrix cross = symmetric_sqrt(sa * b.covariance * sa);
    const double d = (a.mean - b.mean).squaredNorm();
    return d + a.covariance.trace() + b.covariance.trace() - 2.0 * cross.trace();
}

double fid(const Matrix& a, const Matrix& b) { return fid(moments(a), moments(b)); }

std::vector<TopK> r_precision(const Matrix& text, const Matrix& motion, int pool_size, int repeats,
                              std::uint64_t seed) {
    LAGM_CHECK(text.rows() == motion.rows() && text.cols() == motion.cols(), "r_precision: misaligned features");
    LAGM_CHECK(pool_size >= 1 && repeats >= 1, "r_precision: pool size and repeats must be positive");
    LAGM_CHECK(text.rows() >= pool_size, "r_precision: fewer rows than the candidate pool");
    require_finite(text, "text features");
    require_finite(motion, "motion features");
    const Index n = text.rows();
    std::vector<TopK> out;
    std::vector<Index> others(static_cast<std::size_t>(n - 1));
    for (int r = 0; r < repeats; ++r) {
        std::mt19937_64 rng(stream_seed(seed, static_cast<std::uint64_t>(r)));
        TopK acc;
        for (Index i = 0; i < n; ++i) {
            std::size_t k = 0;
            for (Index j = 0; j < n; ++j)
                if (j != i) others[k++] = j;
            // partial Fisher-Yates for pool_size-1 distinct mismatches
            for (int s = 0; s < pool_size - 1; ++s) {
                std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(s), others.size() - 1);
                std::swap(others[static_cast<std::size_t>(s)], others[pick(rng)]);
            }
            const double own = (text.row(i) - motion.row(i)).norm();
            int rank = 1;
            for (int s = 0; s < pool_size - 1; ++s)
                if ((text.row(others[static_cast<std::size_t>(s)]) - motion.row(i)).norm() < own) ++rank;
            acc.top1 += rank <= 1 ? 1.0 : 0.0;
            acc.top2 += rank <= 2 ? 1.0 : 0.0;
            acc.top3 += rank <= 3 ? 1.0 : 0.0;
        }
        const double inv = 1.0 / static_cast<double>(n);
        out.push_back({acc.top1 * inv, acc.top2 * inv, acc.top3 * inv});
    }
    return out;
}

std::vector<TopK> r_precision(const FeatureSet& text, const FeatureSet& motion, int pool_size, int repeats,
                              std::uint64_t seed) {
    require_aligned(text, motion);
    return r_precision(text.features, motion.features, pool_size, repeats, seed);
}

double mm_dist(const Matrix& text, const Matrix& motion) {
    LAGM_CHECK(text.rows() >= 1 && text.rows() == motion.rows() && text.cols() == motion.cols(),
               "mm_dist: misaligned features");
    require_finite(text, "text features");
    require_finite(motion, "motion features");
    return (text - motion).rowwise().norm().mean();
}

double mm_dist(const FeatureSet& text, const FeatureSet& motion) {
    require_aligned(text, motion);
    return mm_dist(text.features, motion.features);
}

double diversity(const Matrix& features, int subset_size, std::uint64_t seed) {
    LAGM_CHECK(subset_size >= 1, "diversity: subset size must be positive");
    LAGM_CHECK(features.rows() >= 2 * subset_size, "diversity: need at least 2 * subset_size rows");
    require_finite(features, "features");
    std::vector<Index> order(static_cast<std::size_t>(features.rows()));
    std::iota(order.begin(), order.end(), Index{0});
    std::mt19937_64 rng(stream_seed(seed, 0));
    for (std::size_t s = 0; s < static_cast<std::size_t>(2 * subset_size); ++s) {
        std::uniform_int_distribution<std::size_t> pick(s, order.size() - 1);
        std::swap(order[s], order[pick(rng)]);
    }
    double total = 0.0;
    for (int i = 0; i < subset_size; ++i)
        total += (features.row(order[static_cast<std::size_t>(i)]) -
                  features.row(order[static_cast<std::size_t>(subset_size + i)]))
                     .norm();
    return total / subset_size;
}

double multimodality(const std::vector<Matrix>& groups, int pairs_per_group) {
    LAGM_CHECK(!groups.empty() && pairs_per_group >= 1, "multimodality: need groups and pairs");
    double total = 0.0;
    for (const auto& g : groups) {
        LAGM_CHECK(g.rows() == 2 * pairs_per_group, "multimodality: every group needs exactly 2 * X_m rows");
        require_finite(g, "features");
        for (int i = 0; i < pairs_per_group; ++i) total += (g.row(2 * i) - g.row(2 * i + 1)).norm();
    }
    return total / (static_cast<double>(groups.size()) * pairs_per_group);
}

Statistic summarize(std::vector<double> values) {
    LAGM_CHECK(!values.empty(), "summarize: no values");
    Statistic s;
    const double n = static_cast<double>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.ci95 = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    s.values = std::move(values);
    return s;
}

nlohmann::json MetricReport::to_json() const {
    auto stat = [](const Statistic& s) {
        return nlohmann::json{{"mean", s.mean}, {"ci95", s.ci95}, {"values", s.values}};
    };
    return {{"r_precision_top1", stat(r_precision_top1)},
            {"r_precision_top2", stat(r_precision_top2)},
            {"r_precision_top3", stat(r_precision_top3)},
            {"fid", stat(fid)},
            {"mm_dist", stat(mm_dist)},
            {"diversity", stat(diversity)},
            {"multimodality", stat(multimodality)},
            {"repeats", fid.values.size()}};
}

std::string MetricReport::header() {
    char line[256];
    std::snprintf(line, sizeof line, "%-12s %-14s %-14s %-14s %-14s %-14s %-14s %-14s\n", "Method", "R-Prec Top1",
                  "R-Prec Top2", "R-Prec Top3", "FID", "MM-Dist", "Diversity", "MModality");
    return line;
}

std::string MetricReport::row(const std::string& row_label) const {
    auto cell = [](const Statistic& s) {
        if (s.values.empty()) return std::string("-");
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3f±%.3f", s.mean, s.ci95);
        return std::string(buf);
    };
    char line[512];
    std::snprintf(line, sizeof line, "%-12s %-14s %-14s %-14s %-14s %-14s %-14s %-14s\n", row_label.c_str(),
                  cell(r_precision_top1).c_str(), cell(r_precision_top2).c_str(), cell(r_precision_top3).c_str(),
                  cell(fid).c_str(), cell(mm_dist).c_str(), cell(diversity).c_str(), cell(multimodality).c_str());
    return line;
}

std::string MetricReport::table(const std::string& row_label) const { return header() + row(row_label); }

}  // namespace lagm
