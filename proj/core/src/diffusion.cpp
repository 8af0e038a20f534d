// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lagm/diffusion.hpp"

#include "lagm/error.hpp"

#include <cmath>
#include <string>

namespace lagm {

namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidArgument(std::string(what) + ": shape mismatch");
}

void check_t(const NoiseSchedule& s, int t) {
    if (t < 1 || t > s.T) throw InvalidArgument("timestep " + std::to_string(t) + " outside [1, T]");
}

}  // namespace

double NoiseSchedule::beta(int t) const {
    check_t(*this, t);
    return betas[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::alpha_bar(int t) const {
    if (t == 0) return 1.0;
    check_t(*this, t);
    return alpha_bars[static_cast<std::size_t>(t - 1)];
}

NoiseSchedule make_schedule(int T, double beta_start, double beta_end) {
    LAGM_CHECK(T >= 2, "schedule needs at least two steps");
    LAGM_CHECK(beta_start > 0.0 && beta_start < beta_end && beta_end < 1.0, "beta range must satisfy 0 < start < end < 1");
    NoiseSchedule s;
    s.T = T;
    double bar = 1.0;
    for (int i = 0; i < T; ++i) {
        const double beta = i == T - 1 ? beta_end : beta_start + (beta_end - beta_start) * i / (T - 1);
        s.betas.push_back(beta);
        s.alphas.push_back(1.0 - beta);
        bar *= 1.0 - beta;
        s.alpha_bars.push_back(bar);
    }
    return s;
}

Matrix q_sample(const Matrix& z0, int t, const Matrix& eps, const NoiseSchedule& schedule) {
    check_same_shape(z0, eps, "q_sample");
    const double ab = schedule.alpha_bar(t);
    if (t == 0) return z0;
    return std::sqrt(ab) * z0 + std::sqrt(1.0 - ab) * eps;
}

std::vector<int> timestep_grid(const NoiseSchedule& schedule, int steps) {
    LAGM_CHECK(steps >= 1 && steps <= schedule.T, "step count must lie in [1, T]");
    if (steps == 1) return {schedule.T};
    std::vector<int> grid;
    for (int i = 0; i < steps; ++i) {
        const double pos = static_cast<double>(schedule.T) -
                           static_cast<double>(schedule.T - 1) * i / static_cast<double>(steps - 1);
        grid.push_back(static_cast<int>(std::lround(pos)));
    }
    return grid;
}

std::string_view to_string(StepMode mode) { return mode == StepMode::ancestral ? "ancestral" : "deterministic"; }

StepMode step_mode_from_string(std::string_view name) {
    if (name == "ancestral") return StepMode::ancestral;
    if (name == "deterministic" || name == "ddim") return StepMode::deterministic;
    throw InvalidArgument("unknown step mode: " + std::string(name));
}

Matrix predict_x0(const Matrix& z_t, const Matrix& eps_hat, int t, const NoiseSchedule& schedule) {
    check_same_shape(z_t, eps_hat, "predict_x0");
    const double ab = schedule.alpha_bar(t);
    return (z_t - std::sqrt(1.0 - ab) * eps_hat) / std::sqrt(ab);
}

Matrix reverse_step(const Matrix& z_t, const Matrix& eps_hat, int t, int t_prev, const NoiseSchedule& schedule,
                    StepMode mode, const Matrix& noise) {
    if (t == 0) throw InvalidArgument("cannot step below t = 0");
    check_t(schedule, t);
    LAGM_CHECK(t_prev >= 0 && t_prev < t, "t_prev must lie in [0, t)");
    check_same_shape(z_t, eps_hat, "reverse_step");
    const double ab = schedule.alpha_bar(t);
    const double ab_prev = schedule.alpha_bar(t_prev);
    if (mode == StepMode::deterministic) {
        const Matrix x0 = predict_x0(z_t, eps_hat, t, schedule);
        return std::sqrt(ab_prev) * x0 + std::sqrt(1.0 - ab_prev) * eps_hat;
    }
    check_same_shape(z_t, noise, "reverse_step noise");
    const double alpha = ab / ab_prev;
    const double beta = 1.0 - alpha;
    Matrix mean = (z_t - (beta / std::sqrt(1.0 - ab)) * eps_hat) / std::sqrt(alpha);
    if (t_prev == 0) return mean;
    return mean + std::sqrt(beta) * noise;
}

Matrix cfg_combine(const Matrix& eps_cond, const Matrix& eps_uncond, double alpha) {
    check_same_shape(eps_cond, eps_uncond, "cfg_combine");
    return alpha * eps_cond + (1.0 - alpha) * eps_uncond;
}

double energy(const Matrix& c_ref, const Matrix& z, EnergyNorm norm) {
    check_same_shape(c_ref, z, "energy");
    const double sq = (z - c_ref).squaredNorm();
    return norm == EnergyNorm::squared ? sq : std::sqrt(sq);
}

Matrix energy_gradient(const Matrix& c_ref, const Matrix& z, EnergyNorm norm) {
    check_same_shape(c_ref, z, "energy_gradient");
    const Matrix diff = z - c_ref;
    if (norm == EnergyNorm::squared) return 2.0 * diff;
    const double n = diff.norm();
    if (n == 0.0) return Matrix::Zero(z.rows(), z.cols());
    return diff / n;
}

std::string_view to_string(GuidanceMode mode) {
    return mode == GuidanceMode::scaled_reference ? "scaled-reference" : "clean-estimate";
}

GuidanceMode guidance_mode_from_string(std::string_view name) {
    if (name == "scaled-reference") return GuidanceMode::scaled_reference;
    if (name == "clean-estimate") return GuidanceMode::clean_estimate;
    throw InvalidArgument("unknown guidance mode: " + std::string(name));
}

void GuidanceSpec::validate() const {
    if (weights.size() != references.size())
        throw InvalidArgument("guidance needs one weight per reference");
    for (double w : weights)
        if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("guidance weights must be finite and non-negative");
    for (const auto& r : references) {
        check_same_shape(references.front(), r, "guidance references");
        if (!r.allFinite()) throw InvalidArgument("guidance reference is not finite");
    }
}

Matrix guidance_gradient(const Matrix& z_t, const Matrix& eps_hat, int t, const NoiseSchedule& schedule,
                         const GuidanceSpec& guidance) {
    guidance.validate();
    Matrix total = Matrix::Zero(z_t.rows(), z_t.cols());
    if (guidance.references.empty()) return total;
    check_same_shape(z_t, guidance.references.front(), "guidance reference");
    const double sab = std::sqrt(schedule.alpha_bar(t));
    const Matrix x0 = guidance.mode == GuidanceMode::clean_estimate ? predict_x0(z_t, eps_hat, t, schedule) : Matrix();
    for (std::size_t k = 0; k < guidance.size(); ++k) {
        const Matrix& c = guidance.references[k];
        if (guidance.mode == GuidanceMode::scaled_reference)
            total += guidance.weights[k] * energy_gradient(sab * c, z_t, guidance.norm);
        else
            total += (guidance.weights[k] / sab) * energy_gradient(c, x0, guidance.norm);
    }
    return total;
}

Matrix guided_step(const Matrix& z_t, const Matrix& eps_hat, int t, int t_prev, const NoiseSchedule& schedule,
                   const GuidanceSpec& guidance, StepMode mode, const Matrix& noise) {
    Matrix next = reverse_step(z_t, eps_hat, t, t_prev, schedule, mode, noise);
    if (guidance.references.empty()) {
        guidance.validate();
        return next;
    }
    next -= guidance_gradient(z_t, eps_hat, t, schedule, guidance);
    return next;
}

}  // namespace lagm
