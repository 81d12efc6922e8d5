// serialize.hpp — JSON schema for specs, models, and run configs
#pragma once

#include <json.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "qtb/ensemble.hpp"
#include "qtb/supersystem.hpp"
#include "qtb/toy_models.hpp"
#include "qtb/weisskopf_wigner.hpp"

namespace qtb {

using json = nlohmann::json;

// Configuration problems carry the offending field name; the CLI maps them
// to the usage-error exit code.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline const json& require_field(const json& j, const char* name) {
    const auto it = j.find(name);
    if (it == j.end()) throw ConfigError(std::string("missing field '") + name + "'");
    return *it;
}

inline double as_double(const json& j, const char* name) {
    if (!j.is_number()) throw ConfigError(std::string("field '") + name + "' must be a number");
    return j.get<double>();
}

inline double get_double(const json& j, const char* name) {
    return as_double(require_field(j, name), name);
}

inline double get_double_or(const json& j, const char* name, double fallback) {
    const auto it = j.find(name);
    return it == j.end() ? fallback : as_double(*it, name);
}

inline std::size_t get_size(const json& j, const char* name) {
    const json& f = require_field(j, name);
    if (!f.is_number_integer() || f.get<long long>() < 0)
        throw ConfigError(std::string("field '") + name + "' must be a nonnegative integer");
    return f.get<std::size_t>();
}

inline std::size_t get_size_or(const json& j, const char* name, std::size_t fallback) {
    return j.contains(name) ? get_size(j, name) : fallback;
}

inline std::string get_string(const json& j, const char* name) {
    const json& f = require_field(j, name);
    if (!f.is_string()) throw ConfigError(std::string("field '") + name + "' must be a string");
    return f.get<std::string>();
}

inline std::vector<double> as_double_vector(const json& j, const char* name) {
    if (!j.is_array()) throw ConfigError(std::string("field '") + name + "' must be an array");
    std::vector<double> out;
    out.reserve(j.size());
    for (const json& v : j) out.push_back(as_double(v, name));
    return out;
}

}  // namespace detail

// ---- scalar pieces ----

// kT serializes as a number, or the string "inf" for the uniform limit.
inline json temperature_to_json(double kt) {
    if (std::isinf(kt)) return json("inf");
    return json(kt);
}

inline double temperature_from_json(const json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
        throw ConfigError("field 'kT' must be a positive number or \"inf\"");
    }
    return detail::as_double(j, "kT");
}

// ---- matrices: row-major nested arrays of [re, im] pairs ----

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const json& j, const char* name) {
    if (!j.is_array() || j.empty())
        throw ConfigError(std::string("field '") + name + "' must be a nonempty array of rows");
    const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
    if (cols == 0) throw ConfigError(std::string("field '") + name + "' has an empty row");
    Matrix m(Eigen::Index(j.size()), Eigen::Index(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        const json& row = j[r];
        if (!row.is_array() || row.size() != cols)
            throw ConfigError(std::string("field '") + name + "' has ragged rows");
        for (std::size_t c = 0; c < cols; ++c) {
            const json& e = row[c];
            if (!e.is_array() || e.size() != 2)
                throw ConfigError(std::string("field '") + name +
                                  "' entries must be [re, im] pairs");
            m(Eigen::Index(r), Eigen::Index(c)) =
                Complex(detail::as_double(e[0], name), detail::as_double(e[1], name));
        }
    }
    return m;
}

inline json real_matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Eigen::MatrixXd real_matrix_from_json(const json& j, const char* name) {
    if (!j.is_array() || j.empty())
        throw ConfigError(std::string("field '") + name + "' must be a nonempty array of rows");
    const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
    if (cols == 0) throw ConfigError(std::string("field '") + name + "' has an empty row");
    Eigen::MatrixXd m(Eigen::Index(j.size()), Eigen::Index(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        const json& row = j[r];
        if (!row.is_array() || row.size() != cols)
            throw ConfigError(std::string("field '") + name + "' has ragged rows");
        for (std::size_t c = 0; c < cols; ++c)
            m(Eigen::Index(r), Eigen::Index(c)) = detail::as_double(row[c], name);
    }
    return m;
}

// ---- supersystem spec ----

inline json supersystem_to_json(const SupersystemSpec& spec) {
    json j;
    j["dim_S"] = spec.dim_s();
    j["bath_energies"] = spec.bath_energies;
    j["kT"] = temperature_to_json(spec.temperature);
    j["H_S"] = matrix_to_json(spec.system_hamiltonian.entries);
    json blocks = json::array();
    for (const Operator& h : spec.interaction_blocks) blocks.push_back(matrix_to_json(h.entries));
    j["interaction_blocks"] = std::move(blocks);
    return j;
}

inline SupersystemSpec supersystem_from_json(const json& j) {
    const std::size_t dim = detail::get_size(j, "dim_S");
    const std::vector<double> eb =
        detail::as_double_vector(detail::require_field(j, "bath_energies"), "bath_energies");
    const double kt = temperature_from_json(detail::require_field(j, "kT"));
    Matrix hs = matrix_from_json(detail::require_field(j, "H_S"), "H_S");
    if (std::size_t(hs.rows()) != dim || std::size_t(hs.cols()) != dim)
        throw ConfigError("field 'H_S' must be a dim_S x dim_S matrix");

    std::vector<Operator> blocks;
    const json& jb = detail::require_field(j, "interaction_blocks");
    if (!jb.is_array()) throw ConfigError("field 'interaction_blocks' must be an array");
    blocks.reserve(jb.size());
    for (const json& b : jb) {
        Matrix m = matrix_from_json(b, "interaction_blocks");
        if (std::size_t(m.rows()) != dim || std::size_t(m.cols()) != dim)
            throw ConfigError("field 'interaction_blocks' entries must be dim_S x dim_S");
        blocks.emplace_back(std::move(m), true);
    }
    try {
        return SupersystemSpec(Operator(std::move(hs), true), eb, kt, std::move(blocks));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

// ---- decay model spec ----

inline const char* to_string(EpsilonMode mode) {
    return mode == EpsilonMode::finite ? "finite" : "limit";
}

inline EpsilonMode eps_mode_from_string(const std::string& s) {
    if (s == "finite") return EpsilonMode::finite;
    if (s == "limit") return EpsilonMode::limit;
    throw ConfigError("field 'eps_mode' must be \"finite\" or \"limit\"");
}

inline json symmetry_map_to_json(const SymmetryMap& sym) { return json(sym.bar); }

inline SymmetryMap symmetry_map_from_json(const json& j, std::size_t n_initial,
                                          std::size_t n_states) {
    try {
        if (j.is_string()) {
            const std::string s = j.get<std::string>();
            if (s == "identity") return SymmetryMap::identity(n_states);
            if (s == "paired")
                return SymmetryMap::paired_for_decay(n_initial, n_states - n_initial);
            throw ConfigError("field 'map' must be \"identity\", \"paired\", or an index array");
        }
        if (!j.is_array())
            throw ConfigError("field 'map' must be \"identity\", \"paired\", or an index array");
        std::vector<std::size_t> bar;
        bar.reserve(j.size());
        for (const json& v : j) {
            if (!v.is_number_integer() || v.get<long long>() < 0)
                throw ConfigError("field 'map' entries must be nonnegative indices");
            bar.push_back(v.get<std::size_t>());
        }
        return SymmetryMap(std::move(bar));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("field 'map': ") + e.what());
    }
}

// Fully resolved form: every default filled in, so the echoed config pins the
// numbers that actually ran.
inline json decay_spec_to_json(const DecayModelSpec& spec) {
    json j;
    j["n_initial"] = spec.n_initial;
    j["initial_energy"] = spec.initial_energy;
    j["final_energies"] = spec.final_energies;
    j["h1"] = matrix_to_json(spec.h1_block);
    j["eps_mode"] = to_string(spec.epsilon_mode);
    j["epsilon"] = spec.epsilon;
    j["on_shell_window"] = spec.on_shell_window;
    j["dos_weight"] = spec.dos_weight;
    j["final_weights"] = spec.final_weights;
    if (!spec.interaction_blocks.empty()) {
        json blocks = json::array();
        for (const Matrix& m : spec.interaction_blocks) blocks.push_back(matrix_to_json(m));
        j["interaction_blocks"] = std::move(blocks);
    }
    return j;
}

// Accepts the explicit form above or a named builder. The returned model
// carries the conjugation map: builders bring their own, explicit specs read
// an optional "map" key (default: identity).
inline ToyDecayModel decay_model_from_json(const json& j, EpsilonMode* mode_override = nullptr) {
    if (!j.is_object()) throw ConfigError("field 'decay' must be an object");
    try {
        if (j.contains("builder")) {
            const std::string b = detail::get_string(j, "builder");
            EpsilonMode mode = mode_override
                                   ? *mode_override
                                   : eps_mode_from_string(j.contains("eps_mode")
                                                              ? detail::get_string(j, "eps_mode")
                                                              : "finite");
            const double eps = detail::get_double_or(j, "epsilon", -1.0);
            const double window = detail::get_double_or(j, "on_shell_window", -1.0);
            if (b == "golden_rule")
                return golden_rule_model(detail::get_double(j, "g"),
                                         detail::get_double(j, "width"),
                                         detail::get_size(j, "n_final"), mode, eps, window);
            if (b == "kaon")
                return kaon_model(detail::get_size(j, "n_pairs"), detail::get_double(j, "spacing"),
                                  detail::get_double(j, "g"), detail::get_double(j, "delta"),
                                  detail::get_double(j, "r"), mode, eps, window,
                                  detail::get_double_or(j, "offset_frac", 0.0));
            throw ConfigError("field 'builder' must be \"golden_rule\" or \"kaon\"");
        }

        EpsilonMode mode = mode_override ? *mode_override
                                         : eps_mode_from_string(detail::get_string(j, "eps_mode"));
        const std::size_t n_initial = detail::get_size(j, "n_initial");
        std::vector<double> finals =
            detail::as_double_vector(detail::require_field(j, "final_energies"),
                                     "final_energies");
        Matrix h1 = matrix_from_json(detail::require_field(j, "h1"), "h1");
        std::vector<double> weights;
        if (j.contains("final_weights"))
            weights = detail::as_double_vector(j["final_weights"], "final_weights");
        std::vector<Matrix> blocks;
        if (j.contains("interaction_blocks")) {
            const json& jb = j["interaction_blocks"];
            if (!jb.is_array())
                throw ConfigError("field 'interaction_blocks' must be an array");
            for (const json& b : jb) blocks.push_back(matrix_from_json(b, "interaction_blocks"));
        }
        DecayModelSpec spec = DecayModelSpec::make(
            n_initial, detail::get_double(j, "initial_energy"), std::move(finals), std::move(h1),
            mode, detail::get_double_or(j, "epsilon", -1.0),
            detail::get_double_or(j, "on_shell_window", -1.0),
            detail::get_double_or(j, "dos_weight", -1.0), std::move(weights), std::move(blocks));
        SymmetryMap map = j.contains("map")
                              ? symmetry_map_from_json(j["map"], spec.n_initial, spec.n_states())
                              : SymmetryMap::identity(spec.n_states());
        return ToyDecayModel{std::move(spec), std::move(map)};
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("field 'decay': ") + e.what());
    }
}

// ---- interaction model ----

inline const char* to_string(InteractionKind kind) {
    switch (kind) {
        case InteractionKind::gaussian_hermitian_cp: return "gaussian-hermitian-CP";
        case InteractionKind::two_point: return "two-point";
        default: return "explicit";
    }
}

inline json interaction_model_to_json(const InteractionModel& model) {
    json j;
    j["kind"] = to_string(model.kind);
    j["scale"] = model.scale;
    j["map"] = symmetry_map_to_json(model.cp_map);
    j["on_shell_enhancement"] = model.on_shell_enhancement;
    j["enhancement_window"] = model.enhancement_window;
    if (!model.bath_energies.empty()) {
        j["bath_energies"] = model.bath_energies;
        j["kT"] = temperature_to_json(model.temperature);
    }
    return j;
}

inline InteractionModel interaction_model_from_json(const json& j, const ToyDecayModel& decay) {
    if (!j.is_object()) throw ConfigError("field 'interaction' must be an object");
    InteractionModel model{InteractionKind::gaussian_hermitian_cp, 0.0, decay.map, 1.0, -1.0,
                           {}, std::numeric_limits<double>::infinity()};
    const std::string kind = detail::get_string(j, "kind");
    if (kind == "gaussian-hermitian-CP")
        model.kind = InteractionKind::gaussian_hermitian_cp;
    else if (kind == "two-point")
        model.kind = InteractionKind::two_point;
    else if (kind == "explicit")
        model.kind = InteractionKind::explicit_blocks;
    else
        throw ConfigError(
            "field 'kind' must be \"gaussian-hermitian-CP\", \"two-point\", or \"explicit\"");
    if (model.kind != InteractionKind::explicit_blocks)
        model.scale = detail::get_double(j, "scale");
    if (j.contains("map"))
        model.cp_map =
            symmetry_map_from_json(j["map"], decay.spec.n_initial, decay.spec.n_states());
    model.on_shell_enhancement = detail::get_double_or(j, "on_shell_enhancement", 1.0);
    model.enhancement_window = detail::get_double_or(j, "enhancement_window", -1.0);
    if (j.contains("bath_energies")) {
        model.bath_energies = detail::as_double_vector(j["bath_energies"], "bath_energies");
        if (j.contains("kT")) model.temperature = temperature_from_json(j["kT"]);
    }
    return model;
}

}  // namespace qtb
