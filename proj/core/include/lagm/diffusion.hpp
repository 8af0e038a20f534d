// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lagm/tensor.hpp"

#include <string_view>
#include <vector>

namespace lagm {

/// Linear beta schedule indexed by t in [1, T]; t = 0 denotes clean data.
struct NoiseSchedule {
    int T = 0;
    std::vector<double> betas;       // betas[t - 1]
    std::vector<double> alphas;      // 1 - beta
    std::vector<double> alpha_bars;  // cumulative products

    double beta(int t) const;
    double alpha_bar(int t) const;  // 1 at t = 0
};

inline constexpr int kDefaultDiffusionSteps = 1000;
inline constexpr double kDefaultBetaStart = 8.5e-4;
inline constexpr double kDefaultBetaEnd = 0.012;
inline constexpr double kDefaultCfgAlpha = 7.5;

NoiseSchedule make_schedule(int T = kDefaultDiffusionSteps, double beta_start = kDefaultBetaStart,
                            double beta_end = kDefaultBetaEnd);

/// sqrt(abar_t) z0 + sqrt(1 - abar_t) eps.
Matrix q_sample(const Matrix& z0, int t, const Matrix& eps, const NoiseSchedule& schedule);

/// Descending timesteps, evenly spaced, starting at T and ending at 1.
std::vector<int> timestep_grid(const NoiseSchedule& schedule, int steps);

enum class StepMode { ancestral, deterministic };
std::string_view to_string(StepMode mode);
StepMode step_mode_from_string(std::string_view name);

/// Clean estimate implied by an epsilon prediction.
Matrix predict_x0(const Matrix& z_t, const Matrix& eps_hat, int t, const NoiseSchedule& schedule);

/// One step from t to t_prev (t_prev < t). Ancestral mode uses the effective
/// beta between the two grid points and adds sqrt(beta)-scaled `noise`;
/// deterministic mode is DDIM with eta = 0 and ignores `noise`.
Matrix reverse_step(const Matrix& z_t, const Matrix& eps_hat, int t, int t_prev, const NoiseSchedule& schedule,
                    StepMode mode, const Matrix& noise);
inline Matrix reverse_step(const Matrix& z_t, const Matrix& eps_hat, int t, const NoiseSchedule& schedule,
                           StepMode mode, const Matrix& noise) {
    return reverse_step(z_t, eps_hat, t, t - 1, schedule, mode, noise);
}

/// alpha * eps_cond + (1 - alpha) * eps_uncond.
Matrix cfg_combine(const Matrix& eps_cond, const Matrix& eps_uncond, double alpha);

enum class EnergyNorm { squared, plain };

/// Squared l2 distance over all entries, or plain l2 when requested.
double energy(const Matrix& c_ref, const Matrix& z, EnergyNorm norm = EnergyNorm::squared);
/// Gradient of `energy` with respect to z (zero at z = c_ref for the plain norm).
Matrix energy_gradient(const Matrix& c_ref, const Matrix& z, EnergyNorm norm = EnergyNorm::squared);

enum class GuidanceMode { scaled_reference, clean_estimate };
std::string_view to_string(GuidanceMode mode);
GuidanceMode guidance_mode_from_string(std::string_view name);

struct GuidanceSpec {
    std::vector<Matrix> references;
    std::vector<double> weights;
    GuidanceMode mode = GuidanceMode::scaled_reference;
    EnergyNorm norm = EnergyNorm::squared;

    std::size_t size() const { return references.size(); }
    /// Throws InvalidArgument on length, sign or shape violations.
    void validate() const;
};

/// sum_k lambda_k * d E(c_k, .) / d z_t. Scaled-reference mode compares z_t
/// with sqrt(abar_t) c_k; clean-estimate mode compares the x0 estimate with c_k
/// and chains through it with eps_hat held fixed.
Matrix guidance_gradient(const Matrix& z_t, const Matrix& eps_hat, int t, const NoiseSchedule& schedule,
                         const GuidanceSpec& guidance);

/// reverse_step followed by the energy correction; equals reverse_step when K = 0.
Matrix guided_step(const Matrix& z_t, const Matrix& eps_hat, int t, int t_prev, const NoiseSchedule& schedule,
                   const GuidanceSpec& guidance, StepMode mode, const Matrix& noise);

}  // namespace lagm
