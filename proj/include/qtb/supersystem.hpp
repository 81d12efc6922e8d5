// supersystem.hpp — system (x) bath Hamiltonians, thermal weights, per-branch dynamics
#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qtb/linalg.hpp"
#include "qtb/random_phase.hpp"

namespace qtb {

// ---- spec ----
//
// H = H_S (x) I_B + I_S (x) diag(E_beta) + sum_beta h^(beta) (x) |beta><beta|.
// The interaction never moves the bath between its eigenstates, so each bath
// sector evolves autonomously under H_S + h^(beta).

struct SupersystemSpec {
    Operator system_hamiltonian;
    std::vector<double> bath_energies;
    double temperature = std::numeric_limits<double>::infinity();  // k_B T, > 0 or inf
    std::vector<Operator> interaction_blocks;                      // one h^(beta) per beta

    SupersystemSpec(Operator h_s, std::vector<double> e_bath, double k_t,
                    std::vector<Operator> blocks)
        : system_hamiltonian(std::move(h_s)),
          bath_energies(std::move(e_bath)),
          temperature(k_t),
          interaction_blocks(std::move(blocks)) {
        if (!system_hamiltonian.hermitian_hint)
            throw std::invalid_argument("SupersystemSpec: H_S must be Hermitian");
        if (bath_energies.empty())
            throw std::invalid_argument("SupersystemSpec: need at least one bath state");
        for (double e : bath_energies)
            if (!std::isfinite(e))
                throw std::invalid_argument("SupersystemSpec: bath energies must be finite");
        if (std::isnan(temperature) || temperature <= 0.0)
            throw std::invalid_argument("SupersystemSpec: temperature must be > 0 or infinite");
        if (interaction_blocks.size() != bath_energies.size())
            throw std::invalid_argument("SupersystemSpec: one interaction block per bath state");
        for (const Operator& h : interaction_blocks) {
            if (h.dim() != dim_s())
                throw std::invalid_argument("SupersystemSpec: interaction block dimension mismatch");
            if (!h.hermitian_hint)
                throw std::invalid_argument("SupersystemSpec: interaction blocks must be Hermitian");
        }
    }

    Eigen::Index dim_s() const { return system_hamiltonian.dim(); }
    std::size_t n_bath() const { return bath_energies.size(); }

    static SupersystemSpec zero_interaction(Operator h_s, std::vector<double> e_bath, double k_t) {
        const Eigen::Index d = h_s.dim();
        std::vector<Operator> blocks(e_bath.size(), Operator(Matrix::Zero(d, d), true));
        return SupersystemSpec(std::move(h_s), std::move(e_bath), k_t, std::move(blocks));
    }
};

// ---- builders ----

inline Operator build_full_hamiltonian(const SupersystemSpec& spec,
                                       std::size_t entry_cap = default_entry_cap) {
    const Eigen::Index ds = spec.dim_s();
    const Eigen::Index db = Eigen::Index(spec.n_bath());
    const std::size_t total = std::size_t(ds) * std::size_t(db);
    if (total * total > entry_cap)
        throw std::length_error("build_full_hamiltonian: supersystem exceeds entry cap");
    Matrix h = Matrix::Zero(ds * db, ds * db);
    for (Eigen::Index s = 0; s < ds; ++s)
        for (Eigen::Index q = 0; q < ds; ++q)
            for (Eigen::Index b = 0; b < db; ++b) {
                Complex v = spec.system_hamiltonian.entries(s, q) +
                            spec.interaction_blocks[std::size_t(b)].entries(s, q);
                if (s == q) v += spec.bath_energies[std::size_t(b)];
                h(s * db + b, q * db + b) = v;
            }
    return Operator(std::move(h), true);
}

inline Operator bath_hamiltonian_full(const SupersystemSpec& spec,
                                      std::size_t entry_cap = default_entry_cap) {
    const Eigen::Index ds = spec.dim_s();
    const Eigen::Index db = Eigen::Index(spec.n_bath());
    const std::size_t total = std::size_t(ds) * std::size_t(db);
    if (total * total > entry_cap)
        throw std::length_error("bath_hamiltonian_full: supersystem exceeds entry cap");
    Matrix h = Matrix::Zero(ds * db, ds * db);
    for (Eigen::Index s = 0; s < ds; ++s)
        for (Eigen::Index b = 0; b < db; ++b)
            h(s * db + b, s * db + b) = spec.bath_energies[std::size_t(b)];
    return Operator(std::move(h), true);
}

// p_beta = exp(-E_beta / kT) / Z, stabilized by shifting out the largest
// exponent. kT = inf gives the uniform limit.
inline std::vector<double> boltzmann_weights(const std::vector<double>& energies,
                                             double temperature) {
    const std::size_t n = energies.size();
    if (n == 0) throw std::invalid_argument("boltzmann_weights: empty spectrum");
    if (std::isnan(temperature) || temperature <= 0.0)
        throw std::invalid_argument("boltzmann_weights: temperature must be positive");
    std::vector<double> p(n);
    if (std::isinf(temperature)) {
        for (double& v : p) v = 1.0 / double(n);
        return p;
    }
    double xmax = -std::numeric_limits<double>::infinity();
    for (double e : energies) xmax = std::max(xmax, -e / temperature);
    double z = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
        p[b] = std::exp(-energies[b] / temperature - xmax);
        z += p[b];
    }
    if (!(z > 0.0) || !std::isfinite(z))
        throw std::runtime_error("boltzmann_weights: all weights underflow; "
                                 "raise temperature or shift energies");
    for (double& v : p) v /= z;
    return p;
}

inline std::vector<double> boltzmann_weights(const SupersystemSpec& spec) {
    return boltzmann_weights(spec.bath_energies, spec.temperature);
}

// H^(beta) = <beta|H|beta> - E_beta I = H_S + h^(beta).
inline Operator effective_hamiltonian(const SupersystemSpec& spec, std::size_t beta) {
    if (beta >= spec.n_bath())
        throw std::out_of_range("effective_hamiltonian: bath index out of range");
    return Operator(spec.system_hamiltonian.entries + spec.interaction_blocks[beta].entries,
                    true);
}

// ---- thermal mixtures ----

// |Psi(0)} = sum_beta sqrt(p_beta) [beta] |psi^(beta)> (x) |beta>, one system
// state per bath sector (pass copies of one state for a product start).
inline PhaseMixture thermal_supersystem_mixture(const SupersystemSpec& spec,
                                                const std::vector<PureState>& system_states) {
    if (system_states.size() != spec.n_bath())
        throw std::invalid_argument("thermal_supersystem_mixture: one system state per bath state");
    const std::vector<double> p = boltzmann_weights(spec);
    const Eigen::Index db = Eigen::Index(spec.n_bath());
    std::vector<PureState> branches;
    branches.reserve(p.size());
    for (std::size_t b = 0; b < p.size(); ++b) {
        if (system_states[b].dim() != spec.dim_s())
            throw std::invalid_argument("thermal_supersystem_mixture: state dimension mismatch");
        branches.push_back(tensor(system_states[b], PureState::basis(db, Eigen::Index(b))));
    }
    return reduce_supersystem_mixture(branches, p);
}

// Per-branch evolution through the effective Hamiltonians: returns the system
// states psi^(beta)(t) whose phase mixture is the reduced wave function at t.
// The bath phase factor exp(-i E_beta t) is a fixed phase on the branch and
// does not affect any density built from the result.
inline std::vector<PureState> evolve_branches(const SupersystemSpec& spec,
                                              const std::vector<PureState>& system_states,
                                              double t) {
    if (system_states.size() != spec.n_bath())
        throw std::invalid_argument("evolve_branches: one system state per bath state");
    std::vector<PureState> out;
    out.reserve(system_states.size());
    for (std::size_t b = 0; b < system_states.size(); ++b)
        out.push_back(evolve(effective_hamiltonian(spec, b), system_states[b], t));
    return out;
}

}  // namespace qtb
