// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lagm/pipeline.hpp"

#include <nlohmann/json.hpp>

namespace lagm::interface {

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

nlohmann::json latent_to_json(const LatentEmbedding& z);
LatentEmbedding latent_from_json(const nlohmann::json& j);

/// Accepts either {"references": [...]} or a bare array of latents.
std::vector<LatentEmbedding> references_from_json(const nlohmann::json& j);

/// Skeleton, fps and joint positions for playback.
nlohmann::json motion_document(const MotionSequence& motion);

/// Full generation output: motion, plan, diagnostics, latents and references.
nlohmann::json generation_document(const SampleResult& result, const SamplingPlan& plan);

/// Graph plus per-action guiding-weight preview when models are available.
nlohmann::json parse_document(std::string_view text, const ModelBundle* models, double rho,
                              const std::optional<std::vector<double>>& multipliers, Precision precision);

/// Overrides plan fields present in a request object: rho, steps, seed,
/// weight_multipliers, cfg_alpha, step_mode, guidance_mode, rho_decay,
/// length, precision.
SamplingPlan plan_from_request(const nlohmann::json& request, SamplingPlan base);

}  // namespace lagm::interface
