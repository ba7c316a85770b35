#pragma once

#include <string>

#include <json.hpp>

#include "fmflow/diffusion.hpp"
#include "fmflow/formal_mapping.hpp"
#include "fmflow/multilinear_map.hpp"

// JSON literals:
//   tensor:     {"degree": k, "dy": dY, "dz": dZ, "entries": [...]}   (flat, output index slowest)
//   mapping:    {"order": N, "components": [tensor, ...]}
//               {"order": N, "scalar": [c_1, ..., c_M]}              (dY = dZ = 1, zero-padded to N)
//   diffusion:  {"degree": k, "dy": dY, "noise_dim": m, "entries": [...]}
//   family:     {"order": N, "components": [diffusion, ...]}
//
// Parsers throw DomainError naming the offending field; `where` is prepended
// to that name.

namespace fmflow {

nlohmann::json to_json(const MultilinearMap& map);
nlohmann::json to_json(const FormalMapping& mapping);
nlohmann::json to_json(const DiffusionTensor& tensor);
nlohmann::json to_json(const DiffusionFamily& family);

MultilinearMap multilinear_map_from_json(const nlohmann::json& j, const std::string& where = "tensor");
FormalMapping formal_mapping_from_json(const nlohmann::json& j, const std::string& where = "mapping");
DiffusionTensor diffusion_tensor_from_json(const nlohmann::json& j, const std::string& where = "diffusion");
DiffusionFamily diffusion_family_from_json(const nlohmann::json& j, const std::string& where = "diffusion");

}  // namespace fmflow
