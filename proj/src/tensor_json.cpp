#include "fmflow/tensor_json.hpp"

#include "fmflow/errors.hpp"

namespace fmflow {

using nlohmann::json;

namespace {

const json& field(const json& j, const char* key, const std::string& where) {
    if (!j.is_object()) throw DomainError(where + ": expected a JSON object");
    auto it = j.find(key);
    if (it == j.end()) throw DomainError(where + "." + key + ": missing");
    return *it;
}

int positive_int(const json& j, const char* key, const std::string& where) {
    const auto& v = field(j, key, where);
    if (!v.is_number_integer() || v.get<long long>() < 1)
        throw DomainError(where + "." + key + ": expected a positive integer");
    return v.get<int>();
}

std::vector<double> number_array(const json& j, const char* key, const std::string& where) {
    const auto& v = field(j, key, where);
    if (!v.is_array()) throw DomainError(where + "." + key + ": expected an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& e : v) {
        if (!e.is_number()) throw DomainError(where + "." + key + ": expected an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

template <class Fn>
auto rethrow_with_context(const std::string& where, Fn&& fn) {
    try {
        return fn();
    } catch (const DomainError& e) {
        const std::string msg = e.what();
        if (msg.rfind(where, 0) == 0) throw;
        throw DomainError(where + ": " + msg);
    }
}

}  // namespace

json to_json(const MultilinearMap& map) {
    return json{{"degree", map.degree()},
                {"dy", map.domain_dim()},
                {"dz", map.codomain_dim()},
                {"entries", std::vector<double>(map.entries().begin(), map.entries().end())}};
}

json to_json(const FormalMapping& mapping) {
    json comps = json::array();
    for (const auto& c : mapping.components()) comps.push_back(to_json(c));
    return json{{"order", mapping.order()}, {"components", std::move(comps)}};
}

json to_json(const DiffusionTensor& tensor) {
    return json{{"degree", tensor.degree()},
                {"dy", tensor.dim()},
                {"noise_dim", tensor.noise_dim()},
                {"entries", std::vector<double>(tensor.entries().begin(), tensor.entries().end())}};
}

json to_json(const DiffusionFamily& family) {
    json comps = json::array();
    for (const auto& c : family.components()) comps.push_back(to_json(c));
    return json{{"order", family.order()}, {"components", std::move(comps)}};
}

MultilinearMap multilinear_map_from_json(const json& j, const std::string& where) {
    const int degree = positive_int(j, "degree", where);
    const int dy = positive_int(j, "dy", where);
    const int dz = positive_int(j, "dz", where);
    auto entries = number_array(j, "entries", where);
    return rethrow_with_context(where, [&] { return MultilinearMap(degree, dy, dz, std::move(entries)); });
}

FormalMapping formal_mapping_from_json(const json& j, const std::string& where) {
    const int order = positive_int(j, "order", where);
    if (j.contains("scalar")) {
        const auto coeffs = number_array(j, "scalar", where);
        if (coeffs.empty() || static_cast<int>(coeffs.size()) > order)
            throw DomainError(where + ".scalar: expected between 1 and order coefficients");
        return rethrow_with_context(where, [&] { return with_order(scalar_mapping(coeffs), order); });
    }
    const auto& comps = field(j, "components", where);
    if (!comps.is_array() || static_cast<int>(comps.size()) != order)
        throw DomainError(where + ".components: expected an array of " + std::to_string(order) + " tensors");
    std::vector<MultilinearMap> maps;
    for (std::size_t i = 0; i < comps.size(); ++i)
        maps.push_back(multilinear_map_from_json(comps[i], where + ".components[" + std::to_string(i) + "]"));
    return rethrow_with_context(where, [&] { return FormalMapping(std::move(maps)); });
}

DiffusionTensor diffusion_tensor_from_json(const json& j, const std::string& where) {
    const int degree = positive_int(j, "degree", where);
    const int dy = positive_int(j, "dy", where);
    if (j.contains("dz") && positive_int(j, "dz", where) != dy)
        throw DomainError(where + ".dz: diffusion tensors map into Y, so dz must equal dy");
    const int m = positive_int(j, "noise_dim", where);
    auto entries = number_array(j, "entries", where);
    return rethrow_with_context(where, [&] { return DiffusionTensor(degree, dy, m, std::move(entries)); });
}

DiffusionFamily diffusion_family_from_json(const json& j, const std::string& where) {
    const int order = positive_int(j, "order", where);
    const auto& comps = field(j, "components", where);
    if (!comps.is_array() || static_cast<int>(comps.size()) != order)
        throw DomainError(where + ".components: expected an array of " + std::to_string(order) + " tensors");
    std::vector<DiffusionTensor> tensors;
    for (std::size_t i = 0; i < comps.size(); ++i)
        tensors.push_back(diffusion_tensor_from_json(comps[i], where + ".components[" + std::to_string(i) + "]"));
    return rethrow_with_context(where, [&] { return DiffusionFamily(std::move(tensors)); });
}

}  // namespace fmflow
