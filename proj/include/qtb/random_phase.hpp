// random_phase.hpp — phase-tagged mixtures and phase-averaged densities
#pragma once

#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qtb/linalg.hpp"
#include "qtb/rng.hpp"

namespace qtb {

// ---- random phase ----
//
// A RandomPhase stands for exp(-i theta) with theta uniform on [0, 2pi).
// Averaging over phases obeys <conj([a]) [b]> = 1 if the labels match, 0
// otherwise. A derived phase exp(-i phi)[b] keeps the label and accumulates
// phi in fixed_offset; it averages exactly like [b].

struct RandomPhase {
    std::uint64_t label = 0;
    double fixed_offset = 0.0;

    static RandomPhase fresh() {
        static std::atomic<std::uint64_t> counter{1};
        return RandomPhase{counter.fetch_add(1, std::memory_order_relaxed), 0.0};
    }

    RandomPhase shifted(double phi) const { return RandomPhase{label, fixed_offset + phi}; }
};

// Product of two independent phases is again a uniform random phase.
inline RandomPhase product(const RandomPhase& a, const RandomPhase& b) {
    if (a.label == b.label)
        throw std::invalid_argument("RandomPhase product: phases must be independent");
    RandomPhase out = RandomPhase::fresh();
    out.fixed_offset = a.fixed_offset + b.fixed_offset;
    return out;
}

// ---- phase mixture ----
//
// |Psi} = sum_b sqrt(p_b) [b] |psi_b>. Branches stay factored; summing
// amplitudes across different random phases is not a defined operation, the
// only consumers are the density constructors below.

struct Branch {
    double weight = 0.0;
    RandomPhase phase;
    PureState state;
};

struct PhaseMixture {
    std::vector<Branch> branches;

    explicit PhaseMixture(std::vector<Branch> in) : branches(std::move(in)) {
        if (branches.empty())
            throw std::invalid_argument("PhaseMixture: needs at least one branch");
        const Eigen::Index d = branches.front().state.dim();
        double wsum = 0.0;
        for (const Branch& b : branches) {
            if (b.state.dim() != d)
                throw std::invalid_argument("PhaseMixture: branch dimensions differ");
            if (!(b.weight >= 0.0))
                throw std::invalid_argument("PhaseMixture: negative branch weight");
            wsum += b.weight;
        }
        if (std::abs(wsum - 1.0) > 1e-12)
            throw std::invalid_argument("PhaseMixture: weights sum to " + std::to_string(wsum));
        merge_equal_branches();
        for (std::size_t i = 0; i < branches.size(); ++i)
            for (std::size_t j = i + 1; j < branches.size(); ++j)
                if (branches[i].phase.label == branches[j].phase.label)
                    throw std::invalid_argument("PhaseMixture: duplicate phase label");
        // renormalize so downstream densities carry unit trace to roundoff
        double w = 0.0;
        for (const Branch& b : branches) w += b.weight;
        for (Branch& b : branches) b.weight /= w;
    }

    Eigen::Index dim() const { return branches.front().state.dim(); }

  private:
    // Degenerate-mixture convention: branches whose states coincide up to a
    // global fixed phase describe one branch; their weights add.
    void merge_equal_branches() {
        std::vector<Branch> kept;
        for (Branch& b : branches) {
            bool merged = false;
            for (Branch& k : kept) {
                if (states_equal_up_to_phase(k.state, b.state)) {
                    k.weight += b.weight;
                    merged = true;
                    break;
                }
            }
            if (!merged) kept.push_back(std::move(b));
        }
        branches = std::move(kept);
    }

    static bool states_equal_up_to_phase(const PureState& a, const PureState& b) {
        Eigen::Index m = 0;
        a.amplitudes.cwiseAbs().maxCoeff(&m);
        if (std::abs(b.amplitudes(m)) < 0.5 * std::abs(a.amplitudes(m))) return false;
        const Complex phase = a.amplitudes(m) / b.amplitudes(m);
        if (std::abs(std::abs(phase) - 1.0) > 1e-12) return false;
        return max_abs(Vector(a.amplitudes - phase * b.amplitudes)) <= 1e-12;
    }
};

// ---- densities ----

// Analytic phase averaging: cross terms vanish, rho = sum_b p_b |psi_b><psi_b|.
inline DensityMatrix density_of_mixture(const PhaseMixture& m) {
    Matrix rho = Matrix::Zero(m.dim(), m.dim());
    for (const Branch& b : m.branches)
        rho.noalias() += b.weight * (b.state.amplitudes * b.state.amplitudes.adjoint());
    return DensityMatrix(std::move(rho));
}

// Stochastic check of the averaging rule: draw explicit angles, average the
// projectors of the phase-summed vectors. Converges to density_of_mixture at
// O(n^{-1/2}) in max-entry norm. The empirical average is trace-normalized
// (its trace is 1 only in expectation when branch states overlap), which
// perturbs entries at the same O(n^{-1/2}) order.
inline DensityMatrix sample_density(const PhaseMixture& m, std::size_t n_samples,
                                    std::uint64_t seed) {
    if (n_samples < 1)
        throw std::invalid_argument("sample_density: n_samples must be >= 1");
    const double two_pi = 6.283185307179586476925286766559;
    std::mt19937_64 eng = substream(seed, 0);
    Matrix acc = Matrix::Zero(m.dim(), m.dim());
    Vector v(m.dim());
    for (std::size_t n = 0; n < n_samples; ++n) {
        v.setZero();
        for (const Branch& b : m.branches) {
            const double theta = two_pi * uniform01(eng) + b.phase.fixed_offset;
            v += std::sqrt(b.weight) * std::exp(-iunit * theta) * b.state.amplitudes;
        }
        acc.noalias() += v * v.adjoint();
    }
    acc /= double(n_samples);
    const double tr = acc.trace().real();
    if (!(tr > 0.0))
        throw std::runtime_error("sample_density: degenerate sample trace");
    acc /= tr;
    acc = 0.5 * (acc + acc.adjoint()).eval();
    return DensityMatrix(std::move(acc));
}

// |Psi_S} = sum_b sqrt(p_b) [b] |psi^(b)>, the reduced wave function of a
// supersystem branch list. Fresh independent phases per branch.
inline PhaseMixture reduce_supersystem_mixture(const std::vector<PureState>& psi_beta,
                                               const std::vector<double>& p) {
    if (psi_beta.empty() || psi_beta.size() != p.size())
        throw std::invalid_argument("reduce_supersystem_mixture: need matching nonempty lists");
    std::vector<Branch> branches;
    branches.reserve(p.size());
    for (std::size_t b = 0; b < p.size(); ++b)
        branches.push_back(Branch{p[b], RandomPhase::fresh(), psi_beta[b]});
    return PhaseMixture(std::move(branches));
}

}  // namespace qtb
