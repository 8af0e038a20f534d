// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#include "documents.hpp"

#include "lagm/error.hpp"

namespace lagm::interface {

nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.empty() || !j.front().is_array())
        throw InvalidArgument("malformed_request", "matrix must be a non-empty array of rows");
    const auto rows = static_cast<Index>(j.size());
    const auto cols = static_cast<Index>(j.front().size());
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols)
            throw InvalidArgument("malformed_request", "matrix rows must have equal length");
        for (Index c = 0; c < cols; ++c) {
            const auto& v = row[static_cast<std::size_t>(c)];
            if (!v.is_number()) throw InvalidArgument("malformed_request", "matrix entries must be numbers");
            m(r, c) = v.get<double>();
        }
    }
    return m;
}

nlohmann::json latent_to_json(const LatentEmbedding& z) {
    return {{"level", to_string(z.level)}, {"tokens", matrix_to_json(z.tokens)}};
}

LatentEmbedding latent_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("tokens"))
        throw InvalidArgument("malformed_request", "latent must be an object with tokens");
    return {level_from_string(j.value("level", std::string("action"))), matrix_from_json(j.at("tokens"))};
}

std::vector<LatentEmbedding> references_from_json(const nlohmann::json& j) {
    const nlohmann::json& list = j.is_object() ? j.at("references") : j;
    if (!list.is_array()) throw InvalidArgument("malformed_request", "references must be an array");
    std::vector<LatentEmbedding> out;
    for (const auto& item : list) out.push_back(latent_from_json(item));
    return out;
}

nlohmann::json motion_document(const MotionSequence& motion) {
    return motion_export(motion, SkeletonSpec::desk());
}

nlohmann::json generation_document(const SampleResult& result, const SamplingPlan& plan) {
    nlohmann::json refs = nlohmann::json::array();
    for (const auto& r : result.references) refs.push_back(latent_to_json(r));
    nlohmann::json latents = nlohmann::json::array();
    for (const auto& z : result.latents) latents.push_back(latent_to_json(z));
    return {{"motion", motion_document(result.motion)},
            {"plan", plan.to_json()},
            {"graph", to_json(result.graph)},
            {"diagnostics", result.diagnostics.to_json()},
            {"latents", latents},
            {"references", refs}};
}

nlohmann::json parse_document(std::string_view text, const ModelBundle* models, double rho,
                              const std::optional<std::vector<double>>& multipliers, Precision precision) {
    const SemanticGraph graph = parse(text);
    nlohmann::json doc = {{"graph", to_json(graph)},
                          {"local_actions", local_action_descriptions(graph)},
                          {"edge_coefficients", nullptr},
                          {"motion_coefficients", nullptr},
                          {"lambdas", nullptr},
                          {"rho", rho}};
    if (models != nullptr) {
        const Matrix nodes = models->embedder.init_graph_nodes(graph, text, precision);
        const auto att = run_attention(models->diffusion.params(), models->diffusion.gat(), nodes, graph, precision);
        const auto coeffs = motion_coefficients(att.coefficients, graph);
        if (multipliers && multipliers->size() != coeffs.size())
            throw InvalidArgument("expected one weight multiplier per action");
        doc["edge_coefficients"] = att.coefficients;
        doc["motion_coefficients"] = coeffs;
        doc["lambdas"] = rho > 0.0 ? nlohmann::json(guiding_weights(coeffs, rho, multipliers))
                                   : nlohmann::json(std::vector<double>(coeffs.size(), 0.0));
    }
    return doc;
}

SamplingPlan plan_from_request(const nlohmann::json& request, SamplingPlan base) {
    if (!request.is_object()) throw InvalidArgument("malformed_request", "request body must be a JSON object");
    try {
        if (request.contains("rho")) base.rho = request.at("rho").get<double>();
        if (request.contains("steps")) {
            const auto& s = request.at("steps");
            if (s.is_number_integer())
                base.steps = {s.get<int>(), s.get<int>(), s.get<int>()};
            else
                base.steps = s.get<std::array<int, 3>>();
        }
        if (request.contains("seed")) base.seed = request.at("seed").get<std::uint64_t>();
        if (request.contains("weight_multipliers") && !request.at("weight_multipliers").is_null())
            base.multipliers = request.at("weight_multipliers").get<std::vector<double>>();
        if (request.contains("cfg_alpha")) base.cfg_alpha = request.at("cfg_alpha").get<double>();
        if (request.contains("step_mode"))
            base.step_mode = step_mode_from_string(request.at("step_mode").get<std::string>());
        if (request.contains("guidance_mode"))
            base.guidance_mode = guidance_mode_from_string(request.at("guidance_mode").get<std::string>());
        if (request.contains("rho_decay")) base.rho_decay = request.at("rho_decay").get<bool>();
        if (request.contains("length")) base.length = request.at("length").get<Index>();
        if (request.contains("precision")) {
            const int bits = request.at("precision").get<int>();
            if (bits != 32 && bits != 64) throw InvalidArgument("malformed_request", "precision must be 32 or 64");
            base.precision = precision_from_bits(bits);
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("malformed_request", e.what());
    }
    return base;
}

}  // namespace lagm::interface
