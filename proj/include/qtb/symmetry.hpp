// symmetry.hpp — charge-parity index maps and CP/T/CPT predicates
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qtb/linalg.hpp"

namespace qtb {

// ---- conjugation map ----
//
// Charge-parity conjugation acts as an involution s <-> sbar on system state
// indices. Bath indices are always fixed (radiation is self-conjugate), so
// the map never appears on the bath side.

struct SymmetryMap {
    std::vector<std::size_t> bar;

    // default state is "no map chosen"; size() == 0 fails every size check
    SymmetryMap() = default;

    explicit SymmetryMap(std::vector<std::size_t> b) : bar(std::move(b)) {
        for (std::size_t s = 0; s < bar.size(); ++s) {
            if (bar[s] >= bar.size())
                throw std::invalid_argument("SymmetryMap: index out of range");
            if (bar[bar[s]] != s)
                throw std::invalid_argument("SymmetryMap: bar must be an involution");
        }
        if (bar.empty()) throw std::invalid_argument("SymmetryMap: empty map");
    }

    std::size_t size() const { return bar.size(); }

    static SymmetryMap identity(std::size_t n) {
        std::vector<std::size_t> b(n);
        for (std::size_t s = 0; s < n; ++s) b[s] = s;
        return SymmetryMap(std::move(b));
    }

    // Adjacent-pair involution within each partition: initial states
    // [0, n_initial) pair as (0 1)(2 3)..., finals likewise. Both counts even.
    static SymmetryMap paired_for_decay(std::size_t n_initial, std::size_t n_final) {
        if (n_initial % 2 || n_final % 2)
            throw std::invalid_argument("SymmetryMap: paired map needs even state counts");
        std::vector<std::size_t> b(n_initial + n_final);
        for (std::size_t s = 0; s < b.size(); ++s) b[s] = s ^ 1u;
        return SymmetryMap(std::move(b));
    }
};

// A map is compatible with a decay layout when it preserves the
// initial/final partition and the state energies.
inline bool map_preserves_partition(const SymmetryMap& sym, std::size_t n_initial) {
    for (std::size_t s = 0; s < sym.size(); ++s)
        if ((s < n_initial) != (sym.bar[s] < n_initial)) return false;
    return true;
}

inline double map_energy_residual(const SymmetryMap& sym, const std::vector<double>& energies) {
    if (sym.size() != energies.size())
        throw std::invalid_argument("map_energy_residual: size mismatch");
    double r = 0.0;
    for (std::size_t s = 0; s < sym.size(); ++s)
        r = std::max(r, std::abs(energies[s] - energies[sym.bar[s]]));
    return r;
}

// ---- predicates ----
//
// All three matrix predicates pass at an absolute residual of 1e-12; the
// models here live at order-one energy scales.

inline constexpr double symmetry_tolerance = 1e-12;

struct SymmetryCheck {
    bool pass = true;
    double residual = 0.0;
    std::size_t worst_row = 0;
    std::size_t worst_col = 0;
};

namespace detail {

// max_{q,s} |m(q,s) - m(qbar, sbar)|
inline SymmetryCheck bar_pair_residual(const Matrix& m, const SymmetryMap& sym) {
    if (m.rows() != m.cols() || std::size_t(m.rows()) != sym.size())
        throw std::invalid_argument("symmetry check: matrix and map sizes differ");
    SymmetryCheck out;
    for (std::size_t q = 0; q < sym.size(); ++q)
        for (std::size_t s = 0; s < sym.size(); ++s) {
            const double r = std::abs(m(Eigen::Index(q), Eigen::Index(s)) -
                                      m(Eigen::Index(sym.bar[q]), Eigen::Index(sym.bar[s])));
            if (r > out.residual) {
                out.residual = r;
                out.worst_row = q;
                out.worst_col = s;
            }
        }
    out.pass = out.residual <= symmetry_tolerance;
    return out;
}

}  // namespace detail

// Interaction CP invariance: h_qs = h_{qbar sbar}.
inline SymmetryCheck check_cp_interaction(const Matrix& h, const SymmetryMap& sym) {
    return detail::bar_pair_residual(h, sym);
}

// System CP invariance: H_kf = H_{kbar fbar}; identical pairing rule.
inline SymmetryCheck check_cp_system(const Matrix& h_system, const SymmetryMap& sym) {
    return detail::bar_pair_residual(h_system, sym);
}

// System CPT invariance: H_kf = H_{fbar kbar} (the conjugated transpose pair).
inline SymmetryCheck check_cpt_system(const Matrix& h_system, const SymmetryMap& sym) {
    if (h_system.rows() != h_system.cols() || std::size_t(h_system.rows()) != sym.size())
        throw std::invalid_argument("check_cpt_system: matrix and map sizes differ");
    SymmetryCheck out;
    for (std::size_t k = 0; k < sym.size(); ++k)
        for (std::size_t f = 0; f < sym.size(); ++f) {
            const double r = std::abs(h_system(Eigen::Index(k), Eigen::Index(f)) -
                                      h_system(Eigen::Index(sym.bar[f]), Eigen::Index(sym.bar[k])));
            if (r > out.residual) {
                out.residual = r;
                out.worst_row = k;
                out.worst_col = f;
            }
        }
    out.pass = out.residual <= symmetry_tolerance;
    return out;
}

// T violation: Delta_h = h - h^T. For Hermitian h this is 2i Im(h), purely
// imaginary; a nonzero Delta_h is the time-asymmetry of the interaction.
struct TViolation {
    Matrix delta;
    bool t_violating = false;
    double max_abs_delta = 0.0;
    double max_real_part = 0.0;
};

inline TViolation check_t_violation(const Matrix& h) {
    if (h.rows() != h.cols())
        throw std::invalid_argument("check_t_violation: matrix must be square");
    TViolation out;
    out.delta = h - h.transpose();
    out.max_abs_delta = max_abs(out.delta);
    out.max_real_part = out.delta.size() ? out.delta.real().cwiseAbs().maxCoeff() : 0.0;
    out.t_violating = out.max_abs_delta > symmetry_tolerance;
    return out;
}

// ---- classification ----

enum class SystemSymmetryCase { cp_invariant, cp_violating_cpt_invariant, unclassified };

struct ClassificationReport {
    SystemSymmetryCase system_case = SystemSymmetryCase::unclassified;
    SymmetryCheck cp_system;
    SymmetryCheck cpt_system;
    SymmetryCheck cp_interaction;
    TViolation t_violation;
    bool map_compatible = true;
    // standing assumption of the whole analysis: the bath interaction is CP-invariant
    bool interaction_assumption_ok = false;
    // downstream predictions
    bool predicts_zero_delta_lambda = false;    // Lambda_KK = Lambda_KbarKbar exactly
    bool predicts_symmetric_offdiagonal = false;  // Lambda_KKbar = Lambda_KbarK
    bool predicts_closed_form = false;          // apparent violation given by the closed form
};

inline const char* to_string(SystemSymmetryCase c) {
    switch (c) {
        case SystemSymmetryCase::cp_invariant: return "CP-invariant";
        case SystemSymmetryCase::cp_violating_cpt_invariant:
            return "CP-violating, CPT-invariant";
        default: return "unclassified";
    }
}

inline ClassificationReport classify_matrices(const Matrix& h1_full, const Matrix& h,
                                              const SymmetryMap& sym,
                                              const std::vector<double>& energies,
                                              std::size_t n_initial) {
    ClassificationReport rep;
    rep.map_compatible = map_preserves_partition(sym, n_initial) &&
                         map_energy_residual(sym, energies) <= symmetry_tolerance;
    rep.cp_system = check_cp_system(h1_full, sym);
    rep.cpt_system = check_cpt_system(h1_full, sym);
    rep.cp_interaction = check_cp_interaction(h, sym);
    rep.t_violation = check_t_violation(h);
    rep.interaction_assumption_ok = rep.cp_interaction.pass;
    if (!rep.map_compatible) {
        rep.system_case = SystemSymmetryCase::unclassified;
        return rep;
    }
    if (rep.cp_system.pass) {
        rep.system_case = SystemSymmetryCase::cp_invariant;
        rep.predicts_zero_delta_lambda = rep.interaction_assumption_ok;
        rep.predicts_symmetric_offdiagonal = rep.interaction_assumption_ok;
    } else if (rep.cpt_system.pass) {
        rep.system_case = SystemSymmetryCase::cp_violating_cpt_invariant;
        rep.predicts_closed_form =
            rep.interaction_assumption_ok && rep.t_violation.t_violating;
    } else {
        rep.system_case = SystemSymmetryCase::unclassified;
    }
    return rep;
}

}  // namespace qtb
