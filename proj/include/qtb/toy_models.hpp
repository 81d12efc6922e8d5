// toy_models.hpp — small decay models with known symmetry structure: a
// flat golden-rule band, a two-state paired-band model with tunable CP
// violation, and randomized generators for property tests.
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qtb/linalg.hpp"
#include "qtb/rng.hpp"
#include "qtb/symmetry.hpp"
#include "qtb/weisskopf_wigner.hpp"

namespace qtb {

struct ToyDecayModel {
    DecayModelSpec spec;
    SymmetryMap map;
};

// Uniform grid of n energies with the given spacing, centered on zero and
// optionally shifted by offset_frac of a spacing. Built from exact integer
// (or half-integer) multiples so that +/-d partners are bitwise negatives
// and the principal-value pairing cancels exactly.
inline std::vector<double> centered_grid(std::size_t n, double spacing,
                                         double offset_frac = 0.0) {
    if (n == 0) throw std::invalid_argument("centered_grid: empty grid");
    if (!(spacing > 0.0)) throw std::invalid_argument("centered_grid: spacing must be positive");
    const double c = 0.5 * double(n - 1) - offset_frac;
    std::vector<double> e(n);
    for (std::size_t j = 0; j < n; ++j) e[j] = (double(j) - c) * spacing;
    return e;
}

// Single initial state at E0 = 0 coupled with constant strength g to a flat
// band of n_final states across [-width, width]. The classic rate for this
// model is 2 pi g^2 rho with rho = n_final / (2 width).
inline ToyDecayModel golden_rule_model(double g, double width, std::size_t n_final,
                                       EpsilonMode mode, double epsilon = -1.0,
                                       double on_shell_window = -1.0) {
    if (n_final < 2) throw std::invalid_argument("golden_rule_model: need at least 2 finals");
    if (!(width > 0.0)) throw std::invalid_argument("golden_rule_model: width must be positive");
    const double spacing = 2.0 * width / double(n_final - 1);
    Matrix h1(1, Eigen::Index(n_final));
    for (std::size_t f = 0; f < n_final; ++f) h1(0, Eigen::Index(f)) = Complex(g, 0.0);
    DecayModelSpec spec = DecayModelSpec::make(1, 0.0, centered_grid(n_final, spacing), h1,
                                               mode, epsilon, on_shell_window);
    return {std::move(spec), SymmetryMap::identity(n_final + 1)};
}

// Two initial states K (index 0) and Kbar (index 1) at E0 = 0 over n_pairs
// conjugate final pairs (f_j, fbar_j) sharing energy E_j. Couplings:
//   <K|H1|f_j>    = g (1 + i delta)      <K|H1|fbar_j>    = g r
//   <Kbar|H1|fbar_j> = g (1 - i delta)   <Kbar|H1|f_j>    = g r
// CPT-invariant for every delta; CP-invariant only at delta = 0. The real
// cross coupling r makes the off-diagonal Lambda entries nonzero so the
// Lambda_KKbar vs Lambda_KbarK comparison is nontrivial.
inline ToyDecayModel kaon_model(std::size_t n_pairs, double spacing, double g, double delta,
                                double r, EpsilonMode mode, double epsilon = -1.0,
                                double on_shell_window = -1.0, double offset_frac = 0.0) {
    if (n_pairs < 2) throw std::invalid_argument("kaon_model: need at least 2 final pairs");
    const std::vector<double> band = centered_grid(n_pairs, spacing, offset_frac);
    std::vector<double> finals(2 * n_pairs);
    for (std::size_t j = 0; j < n_pairs; ++j) finals[2 * j] = finals[2 * j + 1] = band[j];

    Matrix h1 = Matrix::Zero(2, Eigen::Index(2 * n_pairs));
    for (std::size_t j = 0; j < n_pairs; ++j) {
        const Eigen::Index f = Eigen::Index(2 * j), fb = f + 1;
        h1(0, f) = g * Complex(1.0, delta);
        h1(1, fb) = g * Complex(1.0, -delta);
        h1(0, fb) = Complex(g * r, 0.0);
        h1(1, f) = Complex(g * r, 0.0);
    }
    DecayModelSpec spec = DecayModelSpec::make(2, 0.0, std::move(finals), std::move(h1), mode,
                                               epsilon, on_shell_window);
    return {std::move(spec), SymmetryMap::paired_for_decay(2, 2 * n_pairs)};
}

namespace detail {

struct RandomPairedBase {
    std::size_t n_pairs = 0;
    std::vector<double> finals;
    EpsilonMode mode = EpsilonMode::finite;
    double epsilon = -1.0;
};

// shared scaffolding: pair count, paired energies (sometimes exactly on
// shell), and an epsilon mode that alternates with the seed
inline RandomPairedBase random_paired_base(std::uint64_t seed, std::mt19937_64& eng) {
    RandomPairedBase base;
    base.n_pairs = 4 + std::size_t(eng() % 5);
    std::vector<double> band(base.n_pairs);
    for (double& e : band) e = uniform_symmetric(eng, 1.0);
    if (seed % 2 == 0) band[0] = 0.0;  // half the seeds exercise the on-shell residue
    base.finals.resize(2 * base.n_pairs);
    for (std::size_t j = 0; j < base.n_pairs; ++j)
        base.finals[2 * j] = base.finals[2 * j + 1] = band[j];
    base.mode = (seed % 4 < 2) ? EpsilonMode::finite : EpsilonMode::limit;
    base.epsilon = base.mode == EpsilonMode::finite ? 0.05 + 0.1 * uniform01(eng) : -1.0;
    return base;
}

}  // namespace detail

// Random paired-band model that is CPT-invariant by construction and CP-
// violating generically: per pair, <K|H1|f> = a, <Kbar|H1|fbar> = conj(a),
// <K|H1|fbar> = b, <Kbar|H1|f> = conj(b) with complex a, b.
inline ToyDecayModel random_cpt_model(std::uint64_t seed) {
    std::mt19937_64 eng = substream(seed, 0);
    detail::RandomPairedBase base = detail::random_paired_base(seed, eng);

    Matrix h1 = Matrix::Zero(2, Eigen::Index(2 * base.n_pairs));
    for (std::size_t j = 0; j < base.n_pairs; ++j) {
        const Complex a(0.3 * uniform_symmetric(eng, 1.0), 0.3 * uniform_symmetric(eng, 1.0));
        const Complex b(0.3 * uniform_symmetric(eng, 1.0), 0.3 * uniform_symmetric(eng, 1.0));
        const Eigen::Index f = Eigen::Index(2 * j), fb = f + 1;
        h1(0, f) = a;
        h1(1, fb) = std::conj(a);
        h1(0, fb) = b;
        h1(1, f) = std::conj(b);
    }
    DecayModelSpec spec = DecayModelSpec::make(2, 0.0, base.finals, std::move(h1), base.mode,
                                               base.epsilon);
    return {std::move(spec), SymmetryMap::paired_for_decay(2, 2 * base.n_pairs)};
}

// Random paired-band model that is CP-invariant by construction (and
// generically CPT-violating, which the cancellation does not need):
// <K|H1|f> = <Kbar|H1|fbar> = a, <K|H1|fbar> = <Kbar|H1|f> = b.
inline ToyDecayModel random_cp_model(std::uint64_t seed) {
    std::mt19937_64 eng = substream(seed, 0);
    detail::RandomPairedBase base = detail::random_paired_base(seed, eng);

    Matrix h1 = Matrix::Zero(2, Eigen::Index(2 * base.n_pairs));
    for (std::size_t j = 0; j < base.n_pairs; ++j) {
        const Complex a(0.3 * uniform_symmetric(eng, 1.0), 0.3 * uniform_symmetric(eng, 1.0));
        const Complex b(0.3 * uniform_symmetric(eng, 1.0), 0.3 * uniform_symmetric(eng, 1.0));
        const Eigen::Index f = Eigen::Index(2 * j), fb = f + 1;
        h1(0, f) = a;
        h1(1, fb) = a;
        h1(0, fb) = b;
        h1(1, f) = b;
    }
    DecayModelSpec spec = DecayModelSpec::make(2, 0.0, base.finals, std::move(h1), base.mode,
                                               base.epsilon);
    return {std::move(spec), SymmetryMap::paired_for_decay(2, 2 * base.n_pairs)};
}

}  // namespace qtb
