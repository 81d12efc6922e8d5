// weisskopf_wigner.hpp — effective decay matrix for a few initial states
// coupled to a dense band of final states, and the CP asymmetry of its
// diagonal, computed two independent ways.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qtb/linalg.hpp"
#include "qtb/symmetry.hpp"

namespace qtb {

enum class EpsilonMode { finite, limit };

// ---- model spec ----
//
// States are ordered [initials | finals]: k in [0, n_initial), final f at
// flat index n_initial + f. All initial states sit at the common energy E0;
// finals carry their own energies. The static coupling H1 only connects
// initials to finals (given as its upper block), and the perturbation h is
// a full Hermitian matrix on the same state space.

struct DecayModelSpec {
    std::size_t n_initial = 0;
    double initial_energy = 0.0;
    std::vector<double> final_energies;
    Matrix h1_block;                       // n_initial x n_final
    std::vector<Matrix> interaction_blocks;  // optional, one per bath level
    EpsilonMode epsilon_mode = EpsilonMode::finite;
    double epsilon = 0.0;          // resolved; used in finite mode only
    double on_shell_window = 0.0;  // resolved; half-width around E0
    double dos_weight = 0.0;       // resolved density of states at E0
    std::vector<double> final_weights;  // resolved, one per final state

    std::size_t n_final() const { return final_energies.size(); }
    std::size_t n_states() const { return n_initial + final_energies.size(); }

    double energy_of(std::size_t s) const {
        if (s < n_initial) return initial_energy;
        if (s < n_states()) return final_energies[s - n_initial];
        throw std::out_of_range("DecayModelSpec::energy_of");
    }

    std::vector<double> all_energies() const {
        std::vector<double> e(n_states());
        for (std::size_t s = 0; s < e.size(); ++s) e[s] = energy_of(s);
        return e;
    }

    // Hermitian completion of the block coupling on the full state space.
    Matrix h1_full() const {
        Matrix m = Matrix::Zero(Eigen::Index(n_states()), Eigen::Index(n_states()));
        for (std::size_t k = 0; k < n_initial; ++k)
            for (std::size_t f = 0; f < n_final(); ++f) {
                m(Eigen::Index(k), Eigen::Index(n_initial + f)) = h1_block(Eigen::Index(k), Eigen::Index(f));
                m(Eigen::Index(n_initial + f), Eigen::Index(k)) =
                    std::conj(h1_block(Eigen::Index(k), Eigen::Index(f)));
            }
        return m;
    }

    Matrix h0_full() const {
        Matrix m = Matrix::Zero(Eigen::Index(n_states()), Eigen::Index(n_states()));
        for (std::size_t s = 0; s < n_states(); ++s)
            m(Eigen::Index(s), Eigen::Index(s)) = energy_of(s);
        return m;
    }

    // Mean spacing of the distinct final energies; the natural coarse scale
    // of the band. Needs at least two distinct values.
    static double grid_spacing(const std::vector<double>& finals) {
        std::set<double> uniq(finals.begin(), finals.end());
        if (uniq.size() < 2) return 0.0;
        return (*uniq.rbegin() - *uniq.begin()) / double(uniq.size() - 1);
    }

    // Build with defaults resolved. Negative epsilon/window/dos select the
    // defaults eps = dE/10, window = dE/2, dos = n_final/span; empty weights
    // mean unit weight per final state.
    static DecayModelSpec make(std::size_t n_initial, double initial_energy,
                               std::vector<double> final_energies, Matrix h1_block,
                               EpsilonMode mode, double epsilon = -1.0,
                               double on_shell_window = -1.0, double dos_weight = -1.0,
                               std::vector<double> final_weights = {},
                               std::vector<Matrix> interaction_blocks = {}) {
        DecayModelSpec spec;
        spec.n_initial = n_initial;
        spec.initial_energy = initial_energy;
        spec.final_energies = std::move(final_energies);
        spec.h1_block = std::move(h1_block);
        spec.epsilon_mode = mode;
        spec.interaction_blocks = std::move(interaction_blocks);

        if (spec.n_initial == 0) throw std::invalid_argument("decay model: no initial states");
        if (spec.final_energies.empty())
            throw std::invalid_argument("decay model: no final states");
        if (!std::isfinite(spec.initial_energy))
            throw std::invalid_argument("decay model: initial energy must be finite");
        for (double e : spec.final_energies)
            if (!std::isfinite(e)) throw std::invalid_argument("decay model: final energy must be finite");
        if (std::size_t(spec.h1_block.rows()) != spec.n_initial ||
            std::size_t(spec.h1_block.cols()) != spec.n_final())
            throw std::invalid_argument("decay model: coupling block has wrong shape");
        if (!spec.h1_block.allFinite())
            throw std::invalid_argument("decay model: coupling block must be finite");

        const double de = grid_spacing(spec.final_energies);
        const auto resolve = [&](double given, double scale, const char* what) {
            if (given >= 0.0) return given;
            if (de <= 0.0)
                throw std::invalid_argument(std::string("decay model: cannot default ") + what +
                                            " with fewer than two distinct final energies");
            return scale * de;
        };
        spec.on_shell_window = resolve(on_shell_window, 0.5, "on-shell window");
        if (mode == EpsilonMode::finite) {
            spec.epsilon = resolve(epsilon, 0.1, "epsilon");
            if (spec.epsilon <= 0.0)
                throw std::invalid_argument("decay model: epsilon must be positive in finite mode");
        } else {
            spec.epsilon = 0.0;
        }
        if (dos_weight >= 0.0) {
            spec.dos_weight = dos_weight;
        } else {
            const auto [lo, hi] =
                std::minmax_element(spec.final_energies.begin(), spec.final_energies.end());
            const double span = *hi - *lo;
            if (span > 0.0) {
                spec.dos_weight = double(spec.n_final()) / span;
            } else if (mode == EpsilonMode::limit) {
                throw std::invalid_argument(
                    "decay model: cannot default density of states for a degenerate band");
            } else {
                spec.dos_weight = 0.0;
            }
        }

        if (final_weights.empty()) {
            spec.final_weights.assign(spec.n_final(), 1.0);
        } else {
            if (final_weights.size() != spec.n_final())
                throw std::invalid_argument("decay model: weight count must match final states");
            for (double w : final_weights)
                if (!(w >= 0.0) || !std::isfinite(w))
                    throw std::invalid_argument("decay model: weights must be finite and nonnegative");
            spec.final_weights = std::move(final_weights);
        }

        const Eigen::Index n = Eigen::Index(spec.n_states());
        for (const Matrix& blk : spec.interaction_blocks) {
            if (blk.rows() != n || blk.cols() != n)
                throw std::invalid_argument("decay model: interaction block has wrong shape");
            const double scale = std::max(1.0, max_abs(blk));
            if (max_abs(blk - blk.adjoint()) > 1e-12 * scale)
                throw std::invalid_argument("decay model: interaction block must be Hermitian");
        }
        return spec;
    }
};

namespace detail {

// Summation order over final states is fixed: ascending |E0 - E_f|, ties by
// index. Keeps every accumulated quantity reproducible bit for bit.
inline std::vector<std::size_t> final_sum_order(const DecayModelSpec& spec) {
    std::vector<std::size_t> order(spec.n_final());
    for (std::size_t f = 0; f < order.size(); ++f) order[f] = f;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double da = std::abs(spec.initial_energy - spec.final_energies[a]);
        const double db = std::abs(spec.initial_energy - spec.final_energies[b]);
        if (da != db) return da < db;
        return a < b;
    });
    return order;
}

// Split an ordered index list into runs of bit-equal |E0 - E_f|. On a grid
// built symmetrically around E0 the two members of a +/-d pair land in one
// run, and summing the run before touching the accumulator cancels the odd
// 1/(E0 - E_f) part exactly. On a generic grid runs are singletons and this
// reduces to the plain ordered sum.
template <typename Group>
inline void for_each_distance_run(const DecayModelSpec& spec,
                                  const std::vector<std::size_t>& ordered, Group&& group) {
    std::size_t i = 0;
    while (i < ordered.size()) {
        const double d = std::abs(spec.initial_energy - spec.final_energies[ordered[i]]);
        std::size_t j = i + 1;
        while (j < ordered.size() &&
               std::abs(spec.initial_energy - spec.final_energies[ordered[j]]) == d)
            ++j;
        group(i, j);
        i = j;
    }
}

inline void require_square_interaction(const DecayModelSpec& spec, const Matrix& h) {
    const Eigen::Index n = Eigen::Index(spec.n_states());
    if (h.rows() != n || h.cols() != n)
        throw std::invalid_argument("interaction matrix has wrong shape");
    const double scale = std::max(1.0, max_abs(h));
    if (max_abs(h - h.adjoint()) > 1e-12 * scale)
        throw std::invalid_argument("interaction matrix must be Hermitian");
}

}  // namespace detail

// ---- effective decay matrix ----

struct EffectiveDecayModel {
    Matrix lambda;      // n_initial x n_initial, Lambda = M - (i/2) Gamma
    Matrix mass;        // M  = (Lambda + Lambda^dagger)/2
    Matrix decay;       // Gamma = i (Lambda - Lambda^dagger)
    Matrix first_term;  // E0 I + h restricted to the initial block
    std::vector<std::size_t> on_shell;   // finals with |E0 - E_f| <= window
    std::vector<std::size_t> off_shell;  // the rest, in summation order
    bool empty_on_shell_window = false;
    double epsilon_used = 0.0;
    double on_shell_window_used = 0.0;
};

// Second-order effective Hamiltonian on the initial subspace:
//   Lambda_jk = E0 d_jk + h_jk + sum_f w_f <j|H2|f><f|H2|k> / (E0 - E_f + i eps)
// with H2 = H1 + h. In limit mode the sum is evaluated as eps -> 0+: a
// principal-value sum over off-shell states plus -i pi rho g2(E0) from the
// on-shell window, where g2(E0) is the weighted window average of the
// numerator product.
inline EffectiveDecayModel wwa_matrix_with(const DecayModelSpec& spec, const Matrix& h) {
    detail::require_square_interaction(spec, h);
    const std::size_t nk = spec.n_initial;
    const std::size_t nf = spec.n_final();
    const Eigen::Index nki = Eigen::Index(nk);

    EffectiveDecayModel out;
    out.epsilon_used = spec.epsilon_mode == EpsilonMode::finite ? spec.epsilon : 0.0;
    out.on_shell_window_used = spec.on_shell_window;
    out.first_term = Matrix::Zero(nki, nki);
    for (std::size_t j = 0; j < nk; ++j)
        for (std::size_t k = 0; k < nk; ++k)
            out.first_term(Eigen::Index(j), Eigen::Index(k)) =
                (j == k ? Complex(spec.initial_energy) : Complex(0.0)) +
                h(Eigen::Index(j), Eigen::Index(k));

    // <j|H2|f> and <f|H2|k> with H2 = H1 + h
    Matrix bra(nki, Eigen::Index(nf));   // initial -> final
    Matrix ket(Eigen::Index(nf), nki);   // final -> initial
    for (std::size_t j = 0; j < nk; ++j)
        for (std::size_t f = 0; f < nf; ++f) {
            const Eigen::Index fi = Eigen::Index(nk + f);
            bra(Eigen::Index(j), Eigen::Index(f)) =
                spec.h1_block(Eigen::Index(j), Eigen::Index(f)) + h(Eigen::Index(j), fi);
            ket(Eigen::Index(f), Eigen::Index(j)) =
                std::conj(spec.h1_block(Eigen::Index(j), Eigen::Index(f))) +
                h(fi, Eigen::Index(j));
        }

    const auto order = detail::final_sum_order(spec);
    for (std::size_t f : order) {
        if (std::abs(spec.initial_energy - spec.final_energies[f]) <= spec.on_shell_window)
            out.on_shell.push_back(f);
        else
            out.off_shell.push_back(f);
    }

    Matrix second = Matrix::Zero(nki, nki);
    if (spec.epsilon_mode == EpsilonMode::finite) {
        for (std::size_t f : order) {
            const Complex den(spec.initial_energy - spec.final_energies[f], spec.epsilon);
            const double w = spec.final_weights[f];
            for (std::size_t j = 0; j < nk; ++j)
                for (std::size_t k = 0; k < nk; ++k)
                    second(Eigen::Index(j), Eigen::Index(k)) +=
                        w * bra(Eigen::Index(j), Eigen::Index(f)) *
                        ket(Eigen::Index(f), Eigen::Index(k)) / den;
        }
    } else {
        detail::for_each_distance_run(spec, out.off_shell, [&](std::size_t lo, std::size_t hi) {
            Matrix run = Matrix::Zero(nki, nki);
            for (std::size_t i = lo; i < hi; ++i) {
                const std::size_t f = out.off_shell[i];
                const double den = spec.initial_energy - spec.final_energies[f];
                const double w = spec.final_weights[f];
                for (std::size_t j = 0; j < nk; ++j)
                    for (std::size_t k = 0; k < nk; ++k)
                        run(Eigen::Index(j), Eigen::Index(k)) +=
                            w * bra(Eigen::Index(j), Eigen::Index(f)) *
                            ket(Eigen::Index(f), Eigen::Index(k)) / den;
            }
            second += run;
        });
        if (out.on_shell.empty()) {
            out.empty_on_shell_window = true;
        } else {
            Matrix num = Matrix::Zero(nki, nki);
            double wsum = 0.0;
            for (std::size_t f : out.on_shell) {
                const double w = spec.final_weights[f];
                wsum += w;
                for (std::size_t j = 0; j < nk; ++j)
                    for (std::size_t k = 0; k < nk; ++k)
                        num(Eigen::Index(j), Eigen::Index(k)) +=
                            w * bra(Eigen::Index(j), Eigen::Index(f)) *
                            ket(Eigen::Index(f), Eigen::Index(k));
            }
            if (wsum > 0.0)
                second += Complex(0.0, -M_PI) * spec.dos_weight * (num / wsum);
            else
                out.empty_on_shell_window = true;
        }
    }

    out.lambda = out.first_term + second;
    out.mass = 0.5 * (out.lambda + out.lambda.adjoint());
    out.decay = iunit * (out.lambda - out.lambda.adjoint());
    return out;
}

inline EffectiveDecayModel wwa_matrix(const DecayModelSpec& spec, std::size_t beta = 0) {
    if (spec.interaction_blocks.empty()) {
        if (beta != 0) throw std::out_of_range("wwa_matrix: no interaction blocks");
        const Eigen::Index n = Eigen::Index(spec.n_states());
        return wwa_matrix_with(spec, Matrix::Zero(n, n));
    }
    if (beta >= spec.interaction_blocks.size())
        throw std::out_of_range("wwa_matrix: bath index out of range");
    return wwa_matrix_with(spec, spec.interaction_blocks[beta]);
}

// ---- CP asymmetry of the effective diagonal ----

class symmetry_error : public std::runtime_error {
  public:
    SymmetryCheck cpt_system;
    SymmetryCheck cp_interaction;
    symmetry_error(std::string msg, SymmetryCheck cpt, SymmetryCheck cp)
        : std::runtime_error(std::move(msg)), cpt_system(cpt), cp_interaction(cp) {}
};

struct DeltaLambda {
    Complex value;       // Lambda_kk - Lambda_kbar,kbar
    double delta_m = 0.0;      // Re part: mass splitting
    double delta_gamma = 0.0;  // -2 Im part: width splitting
    Complex first_term;  // contribution of E0 + h alone (zero when h is CP-even)
};

namespace detail {

inline void require_decay_map(const DecayModelSpec& spec, const SymmetryMap& sym,
                              std::size_t k) {
    if (sym.size() != spec.n_states())
        throw std::invalid_argument("conjugation map size must match state count");
    if (k >= spec.n_initial) throw std::out_of_range("initial state index out of range");
    if (!map_preserves_partition(sym, spec.n_initial))
        throw std::invalid_argument("conjugation map must preserve the initial/final split");
    if (map_energy_residual(sym, spec.all_energies()) > symmetry_tolerance)
        throw std::invalid_argument("conjugation map must preserve state energies");
    for (std::size_t f = 0; f < spec.n_final(); ++f) {
        const std::size_t fb = sym.bar[spec.n_initial + f] - spec.n_initial;
        if (std::abs(spec.final_weights[f] - spec.final_weights[fb]) > symmetry_tolerance)
            throw std::invalid_argument("conjugation map must preserve final-state weights");
    }
}

}  // namespace detail

// Direct route: build Lambda from the full second-order sum and subtract the
// two diagonal entries.
inline DeltaLambda delta_lambda_direct_with(const DecayModelSpec& spec, const Matrix& h,
                                            std::size_t k, const SymmetryMap& sym) {
    detail::require_decay_map(spec, sym, k);
    const std::size_t kb = sym.bar[k];
    const EffectiveDecayModel eff = wwa_matrix_with(spec, h);
    DeltaLambda out;
    out.value = eff.lambda(Eigen::Index(k), Eigen::Index(k)) -
                eff.lambda(Eigen::Index(kb), Eigen::Index(kb));
    out.first_term = eff.first_term(Eigen::Index(k), Eigen::Index(k)) -
                     eff.first_term(Eigen::Index(kb), Eigen::Index(kb));
    out.delta_m = out.value.real();
    out.delta_gamma = -2.0 * out.value.imag();
    return out;
}

inline DeltaLambda delta_lambda_direct(const DecayModelSpec& spec, std::size_t k,
                                       const SymmetryMap& sym, std::size_t beta = 0) {
    if (spec.interaction_blocks.empty()) {
        if (beta != 0) throw std::out_of_range("delta_lambda_direct: no interaction blocks");
        const Eigen::Index n = Eigen::Index(spec.n_states());
        return delta_lambda_direct_with(spec, Matrix::Zero(n, n), k, sym);
    }
    if (beta >= spec.interaction_blocks.size())
        throw std::out_of_range("delta_lambda_direct: bath index out of range");
    return delta_lambda_direct_with(spec, spec.interaction_blocks[beta], k, sym);
}

// Closed form, valid only for a CPT-invariant system with a CP-even
// interaction:
//   Delta Lambda = - sum_f w_f DH'_kf Dh_kf / (E0 - E_f + i eps)
// where DH'_kf = H1_kf - H1_fk and Dh_kf = h_kf - h_fk are the
// time-asymmetries of the two couplings. Refuses to run when the
// preconditions fail rather than returning an invalid number.
inline DeltaLambda delta_lambda_closed_form_with(const DecayModelSpec& spec, const Matrix& h,
                                                 std::size_t k, const SymmetryMap& sym) {
    detail::require_decay_map(spec, sym, k);
    detail::require_square_interaction(spec, h);
    const Matrix h1 = spec.h1_full();
    const SymmetryCheck cpt = check_cpt_system(h1, sym);
    const SymmetryCheck cpi = check_cp_interaction(h, sym);
    if (!cpt.pass || !cpi.pass) {
        std::string msg = "closed form requires a CPT-invariant system and CP-even interaction";
        msg += " (CPT residual " + std::to_string(cpt.residual) + ", CP residual " +
               std::to_string(cpi.residual) + ")";
        throw symmetry_error(std::move(msg), cpt, cpi);
    }

    const std::size_t kb = sym.bar[k];
    const auto order = detail::final_sum_order(spec);
    const auto pair_product = [&](std::size_t f) {
        const Eigen::Index ki = Eigen::Index(k), fi = Eigen::Index(spec.n_initial + f);
        const Complex dh1 = h1(ki, fi) - h1(fi, ki);
        const Complex dh = h(ki, fi) - h(fi, ki);
        return dh1 * dh;
    };

    Complex sum(0.0, 0.0);
    if (spec.epsilon_mode == EpsilonMode::finite) {
        for (std::size_t f : order) {
            const Complex den(spec.initial_energy - spec.final_energies[f], spec.epsilon);
            sum += spec.final_weights[f] * pair_product(f) / den;
        }
    } else {
        Complex num(0.0, 0.0);
        double wsum = 0.0;
        std::vector<std::size_t> off;
        for (std::size_t f : order) {
            if (std::abs(spec.initial_energy - spec.final_energies[f]) <= spec.on_shell_window) {
                num += spec.final_weights[f] * pair_product(f);
                wsum += spec.final_weights[f];
            } else {
                off.push_back(f);
            }
        }
        detail::for_each_distance_run(spec, off, [&](std::size_t lo, std::size_t hi) {
            Complex run(0.0, 0.0);
            for (std::size_t i = lo; i < hi; ++i) {
                const std::size_t f = off[i];
                run += spec.final_weights[f] * pair_product(f) /
                       (spec.initial_energy - spec.final_energies[f]);
            }
            sum += run;
        });
        if (wsum > 0.0) sum += Complex(0.0, -M_PI) * spec.dos_weight * (num / wsum);
    }

    DeltaLambda out;
    out.value = -sum;
    out.delta_m = out.value.real();
    out.delta_gamma = -2.0 * out.value.imag();
    // first-order piece h_kk - h_kbar,kbar vanishes under the CP assumption
    out.first_term = h(Eigen::Index(k), Eigen::Index(k)) -
                     h(Eigen::Index(kb), Eigen::Index(kb));
    return out;
}

// ---- diagonal perturbations lifted to the coupled basis ----
//
// A perturbation diagonal in the uncoupled basis acquires off-diagonal
// matrix elements in the basis that diagonalizes H0 + H1:
//   <q~|h|s~> ~= h_s d_qs + (h_s - h_q) H1_qs / (E_s - E_q)  for q != s.
// Pairs within `window` of degeneracy with a direct coupling are reported
// instead of divided by a near-zero gap.

struct CorrectedInteraction {
    Matrix matrix;
    std::vector<std::pair<std::size_t, std::size_t>> divergent_pairs;
};

inline CorrectedInteraction corrected_interaction(const DecayModelSpec& spec,
                                                  const RealVector& h_diagonal,
                                                  double window = -1.0) {
    const std::size_t n = spec.n_states();
    if (std::size_t(h_diagonal.size()) != n)
        throw std::invalid_argument("corrected_interaction: diagonal has wrong length");
    const double w = window >= 0.0 ? window : spec.on_shell_window;
    const Matrix h1 = spec.h1_full();

    CorrectedInteraction out;
    out.matrix = Matrix::Zero(Eigen::Index(n), Eigen::Index(n));
    for (std::size_t s = 0; s < n; ++s)
        out.matrix(Eigen::Index(s), Eigen::Index(s)) = h_diagonal[Eigen::Index(s)];
    for (std::size_t q = 0; q < n; ++q)
        for (std::size_t s = 0; s < n; ++s) {
            if (q == s) continue;
            const Complex coupling = h1(Eigen::Index(q), Eigen::Index(s));
            if (coupling == Complex(0.0, 0.0)) continue;
            const double gap = spec.energy_of(s) - spec.energy_of(q);
            if (std::abs(gap) <= w) {
                if (q < s) out.divergent_pairs.emplace_back(q, s);
                continue;
            }
            out.matrix(Eigen::Index(q), Eigen::Index(s)) +=
                (h_diagonal[Eigen::Index(s)] - h_diagonal[Eigen::Index(q)]) * coupling / gap;
        }
    return out;
}

// ---- effective vs exact evolution ----

struct SurvivalCurve {
    std::size_t initial = 0;
    std::vector<double> times;
    std::vector<double> exact;      // |P_initial U(t) e_k|^2 under the full H
    std::vector<double> effective;  // same under exp(-i Lambda t)
    double fitted_rate_exact = 0.0;
    double fitted_rate_effective = 0.0;
    double max_amplitude_deviation = 0.0;  // max_t max_j |a_exact - a_eff|
};

struct WwaComparison {
    EffectiveDecayModel effective;
    std::vector<SurvivalCurve> curves;
    RealVector gamma_eigenvalues;   // eigenvalues of Gamma, ascending
    bool propagator_fallback = false;
};

namespace detail {

// least-squares slope of ln(p) against t, ignoring points below `floor`
inline double log_slope(const std::vector<double>& t, const std::vector<double>& p,
                        double floor = 1e-12) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(p[i] > floor)) continue;
        const double y = std::log(p[i]);
        sx += t[i];
        sy += y;
        sxx += t[i] * t[i];
        sxy += t[i] * y;
        ++n;
    }
    if (n < 2) return 0.0;
    const double det = double(n) * sxx - sx * sx;
    if (det == 0.0) return 0.0;
    return (double(n) * sxy - sx * sy) / det;
}

}  // namespace detail

inline WwaComparison wwa_vs_exact_with(const DecayModelSpec& spec, const Matrix& h,
                                       const std::vector<double>& times) {
    if (times.empty()) throw std::invalid_argument("wwa_vs_exact: empty time grid");
    for (double t : times)
        if (!(t >= 0.0)) throw std::invalid_argument("wwa_vs_exact: times must be nonnegative");
    detail::require_square_interaction(spec, h);

    WwaComparison out;
    out.effective = wwa_matrix_with(spec, h);

    const std::size_t n = spec.n_states();
    const std::size_t nk = spec.n_initial;
    Matrix full = spec.h0_full() + spec.h1_full() + h;
    const SpectralDecomposition sd(Operator(std::move(full), true));
    const NonHermitianPropagator prop(out.effective.lambda);
    out.propagator_fallback = !prop.diagonalizable;

    Eigen::SelfAdjointEigenSolver<Matrix> gsolve(out.effective.decay);
    out.gamma_eigenvalues = gsolve.eigenvalues();

    for (std::size_t k0 = 0; k0 < nk; ++k0) {
        SurvivalCurve c;
        c.initial = k0;
        c.times = times;
        c.exact.resize(times.size());
        c.effective.resize(times.size());
        const PureState start = PureState::basis(n, k0);
        Vector a0 = Vector::Zero(Eigen::Index(nk));
        a0(Eigen::Index(k0)) = Complex(1.0);
        for (std::size_t i = 0; i < times.size(); ++i) {
            const Vector full_t = sd.apply(start.amplitudes, times[i]);
            const Vector eff_t = prop.apply(a0, times[i]).amplitudes;
            double pex = 0.0, pef = 0.0, dev = 0.0;
            for (std::size_t j = 0; j < nk; ++j) {
                const Complex ae = full_t(Eigen::Index(j));
                const Complex aw = eff_t(Eigen::Index(j));
                pex += std::norm(ae);
                pef += std::norm(aw);
                dev = std::max(dev, std::abs(ae - aw));
            }
            c.exact[i] = pex;
            c.effective[i] = pef;
            c.max_amplitude_deviation = std::max(c.max_amplitude_deviation, dev);
        }
        c.fitted_rate_exact = -detail::log_slope(c.times, c.exact);
        c.fitted_rate_effective = -detail::log_slope(c.times, c.effective);
        out.curves.push_back(std::move(c));
    }
    return out;
}

inline WwaComparison wwa_vs_exact(const DecayModelSpec& spec, const std::vector<double>& times,
                                  std::size_t beta = 0) {
    if (spec.interaction_blocks.empty()) {
        if (beta != 0) throw std::out_of_range("wwa_vs_exact: no interaction blocks");
        const Eigen::Index n = Eigen::Index(spec.n_states());
        return wwa_vs_exact_with(spec, Matrix::Zero(n, n), times);
    }
    if (beta >= spec.interaction_blocks.size())
        throw std::out_of_range("wwa_vs_exact: bath index out of range");
    return wwa_vs_exact_with(spec, spec.interaction_blocks[beta], times);
}

// Spec-level classification wrapper.
inline ClassificationReport classify(const DecayModelSpec& spec, const Matrix& h,
                                     const SymmetryMap& sym) {
    detail::require_square_interaction(spec, h);
    if (sym.size() != spec.n_states())
        throw std::invalid_argument("classify: conjugation map size must match state count");
    return classify_matrices(spec.h1_full(), h, sym, spec.all_energies(), spec.n_initial);
}

}  // namespace qtb
