#pragma once

#include <lbo/assembly.hpp>
#include <lbo/head.hpp>
#include <lbo/shapes.hpp>
#include <lbo/train.hpp>

#include <json.hpp>

#include <filesystem>
#include <string>

namespace lbo {

/// Fields: mode (direct|mlp), modules [riemann, albo, albo_plus, voronoi],
/// k, widths, slope, normalize_features, aggregation (max|mean).
HeadConfig head_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const HeadConfig& c);

/// Fields mirror TrainConfig; "band": [first, last].
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& c);

/// A mesh given either as a path (string, or {"path": ..., "format": ...,
/// "labels": path}) relative to `base`, or as a generator:
/// {"shape": name, ...shape arguments, "jitter": a, "jitter_seed": s,
///  "project": bool, "scale": [sx, sy, sz]}; jitter is applied before scaling. Labels are empty unless the
/// shape or a labels file provides them.
shapes::LabeledMesh mesh_from_spec(const nlohmann::json& spec, const std::filesystem::path& base = {});

/// Per-element parameters from CSV. The header names the family:
/// "edge_log_scale" (one row per edge), "vertex_log_weight" (per vertex) or
/// "a1,a2,theta" (per face). Overwrites that family in `params`.
void read_params_csv(const std::string& path, const Mesh& mesh, OperatorParams& params);
void write_params_csv(const std::string& path, const OperatorParams& params, const std::string& family);

} // namespace lbo
