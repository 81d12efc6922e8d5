// decoherence.hpp — diagonal system-bath coupling and the decoherence factor
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qtb/linalg.hpp"
#include "qtb/rng.hpp"
#include "qtb/supersystem.hpp"

namespace qtb {

// ---- spec ----
//
// The pointer-basis model: every h^(beta) is diagonal in the system energy
// eigenbasis, so populations are frozen and only off-diagonal coherences
// evolve, through A_sq(t) = sum_beta p_beta exp(-i (h_s^(beta) - h_q^(beta)) t).

struct DiagonalInteractionSpec {
    SupersystemSpec base;
    RealVector system_energies;

    DiagonalInteractionSpec(SupersystemSpec b, RealVector e_sys)
        : base(std::move(b)), system_energies(std::move(e_sys)) {
        if (system_energies.size() != base.dim_s())
            throw std::invalid_argument("DiagonalInteractionSpec: system energy count mismatch");
        const Matrix hs_diag = Matrix(system_energies.cast<Complex>().asDiagonal());
        if (max_abs(Matrix(base.system_hamiltonian.entries - hs_diag)) >
            1e-12 * std::max(1.0, max_abs(hs_diag)))
            throw std::invalid_argument(
                "DiagonalInteractionSpec: H_S must be diagonal with the given energies");
        for (const Operator& h : base.interaction_blocks) {
            Matrix off = h.entries;
            off.diagonal().setZero();
            if (max_abs(off) > 1e-14)
                throw std::invalid_argument(
                    "DiagonalInteractionSpec: interaction blocks must be diagonal");
            Matrix comm = base.system_hamiltonian.entries * h.entries -
                          h.entries * base.system_hamiltonian.entries;
            if (max_abs(comm) > 1e-12 * std::max(1.0, max_abs(base.system_hamiltonian.entries) *
                                                          max_abs(h.entries)))
                throw std::invalid_argument(
                    "DiagonalInteractionSpec: [H_S, h] must vanish");
        }
    }

    // couplings(s, beta) = h_s^(beta); real because h^(beta) is Hermitian diagonal
    double coupling(Eigen::Index s, std::size_t beta) const {
        return base.interaction_blocks[beta].entries(s, s).real();
    }

    Eigen::Index dim_s() const { return base.dim_s(); }
    std::size_t n_bath() const { return base.n_bath(); }

    static DiagonalInteractionSpec make(RealVector system_energies,
                                        std::vector<double> bath_energies, double k_t,
                                        const Eigen::MatrixXd& couplings) {
        const Eigen::Index ds = system_energies.size();
        if (couplings.rows() != ds || couplings.cols() != Eigen::Index(bath_energies.size()))
            throw std::invalid_argument("DiagonalInteractionSpec: couplings must be dim_S x N_B");
        std::vector<Operator> blocks;
        blocks.reserve(bath_energies.size());
        for (Eigen::Index b = 0; b < couplings.cols(); ++b)
            blocks.push_back(Operator::diagonal(couplings.col(b)));
        SupersystemSpec base(Operator::diagonal(system_energies), std::move(bath_energies), k_t,
                             std::move(blocks));
        return DiagonalInteractionSpec(std::move(base), std::move(system_energies));
    }
};

// ---- decoherence factor ----

inline Complex decoherence_factor(const DiagonalInteractionSpec& spec, Eigen::Index s,
                                  Eigen::Index q, double t) {
    if (s < 0 || q < 0 || s >= spec.dim_s() || q >= spec.dim_s())
        throw std::out_of_range("decoherence_factor: state index out of range");
    if (s == q) return Complex(1.0);
    const std::vector<double> p = boltzmann_weights(spec.base);
    Complex a(0.0);
    for (std::size_t b = 0; b < p.size(); ++b)
        a += p[b] * std::exp(-iunit * (spec.coupling(s, b) - spec.coupling(q, b)) * t);
    return a;
}

// (rho_S)_sq(t) for the initial state (|s> + |q>)/sqrt(2) with a thermal bath.
inline Complex reduced_density_offdiagonal(const DiagonalInteractionSpec& spec, Eigen::Index s,
                                           Eigen::Index q, double t) {
    const Complex a = decoherence_factor(spec, s, q, t);
    const double de = spec.system_energies(s) - spec.system_energies(q);
    return 0.5 * a * std::exp(-iunit * de * t);
}

// ---- recurrence scan ----

struct RecurrencePoint {
    double t = 0.0;
    Complex a;
};

struct RecurrenceScan {
    std::vector<RecurrencePoint> trajectory;
    double t_burn = 0.0;
    double max_after_burn = 0.0;  // max |A_sq| over t in (t_burn, t_max]
    double t_at_max = 0.0;
};

// Weighted standard deviation of the coupling gaps h_s - h_q; sets the
// default burn-in 5/sigma that skips the initial coherent peak.
inline double gap_sigma(const DiagonalInteractionSpec& spec, Eigen::Index s, Eigen::Index q) {
    const std::vector<double> p = boltzmann_weights(spec.base);
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t b = 0; b < p.size(); ++b) {
        const double g = spec.coupling(s, b) - spec.coupling(q, b);
        m1 += p[b] * g;
        m2 += p[b] * g * g;
    }
    return std::sqrt(std::max(0.0, m2 - m1 * m1));
}

inline RecurrenceScan recurrence_scan(const DiagonalInteractionSpec& spec, Eigen::Index s,
                                      Eigen::Index q, double t_max, std::size_t n_steps,
                                      double t_burn = -1.0) {
    if (n_steps < 2) throw std::invalid_argument("recurrence_scan: n_steps must be >= 2");
    if (t_max < 0.0) throw std::invalid_argument("recurrence_scan: t_max must be >= 0");
    RecurrenceScan out;
    if (t_burn < 0.0) {
        const double sigma = gap_sigma(spec, s, q);
        out.t_burn = sigma > 0.0 ? 5.0 / sigma : 0.0;
    } else {
        out.t_burn = t_burn;
    }
    if (t_max == 0.0) {
        out.trajectory.push_back({0.0, decoherence_factor(spec, s, q, 0.0)});
        return out;
    }
    out.trajectory.reserve(n_steps);
    for (std::size_t i = 0; i < n_steps; ++i) {
        const double t = t_max * double(i) / double(n_steps - 1);
        const Complex a = decoherence_factor(spec, s, q, t);
        out.trajectory.push_back({t, a});
        if (t > out.t_burn && std::abs(a) > out.max_after_burn) {
            out.max_after_burn = std::abs(a);
            out.t_at_max = t;
        }
    }
    return out;
}

// ---- coupling generators ----
//
// scale is the standard deviation of every generated coupling: gaussian draws
// N(0, scale^2), uniform draws U(-scale*sqrt(3), scale*sqrt(3)), two_point
// draws +-scale. two_point couplings are commensurate, so recurrences return.

enum class CouplingKind { gaussian, uniform, two_point };

inline Eigen::MatrixXd generate_couplings(CouplingKind kind, Eigen::Index n_s, Eigen::Index n_b,
                                          double scale, std::uint64_t seed) {
    if (n_s < 1 || n_b < 1)
        throw std::invalid_argument("generate_couplings: dimensions must be >= 1");
    if (!(scale >= 0.0) || !std::isfinite(scale))
        throw std::invalid_argument("generate_couplings: scale must be finite and >= 0");
    std::mt19937_64 eng = substream(seed, 0);
    Eigen::MatrixXd h(n_s, n_b);
    const double root3 = 1.7320508075688772935274463415059;
    for (Eigen::Index b = 0; b < n_b; ++b)
        for (Eigen::Index s = 0; s < n_s; ++s) {
            switch (kind) {
                case CouplingKind::gaussian: h(s, b) = scale * gaussian(eng); break;
                case CouplingKind::uniform: h(s, b) = uniform_symmetric(eng, scale * root3); break;
                case CouplingKind::two_point: h(s, b) = two_point(eng, scale); break;
            }
        }
    return h;
}

}  // namespace qtb
