// ensemble.hpp — Monte Carlo over bath interaction realizations and the
// weighted (dGamma, dM) scatter with confidence ellipses.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "qtb/linalg.hpp"
#include "qtb/rng.hpp"
#include "qtb/supersystem.hpp"
#include "qtb/symmetry.hpp"
#include "qtb/weisskopf_wigner.hpp"

namespace qtb {

// ---- interaction model ----

enum class InteractionKind { gaussian_hermitian_cp, two_point, explicit_blocks };

// Random Hermitian interaction, CP-even by construction. The scale is the
// root-mean-square magnitude of an individual matrix element before the
// CP-averaging. on_shell_enhancement multiplies every entry that touches a
// final state within the enhancement window of E0 (default: the model's
// on-shell window), expressing that near-resonant matrix elements carry the
// fluctuations that matter.
struct InteractionModel {
    InteractionKind kind = InteractionKind::gaussian_hermitian_cp;
    double scale = 0.0;
    SymmetryMap cp_map;
    double on_shell_enhancement = 1.0;
    double enhancement_window = -1.0;  // < 0: use spec.on_shell_window
    std::vector<double> bath_energies;  // optional strata for thermal weights
    double temperature = std::numeric_limits<double>::infinity();
};

namespace detail {

inline bool near_shell_final(const DecayModelSpec& spec, std::size_t s, double window) {
    return s >= spec.n_initial &&
           std::abs(spec.initial_energy - spec.energy_of(s)) <= window;
}

}  // namespace detail

// One draw: fill the upper triangle (diagonal real, off-diagonal complex,
// per-entry rms = scale), Hermitian-complete, CP-average with the
// bar-conjugated matrix, then apply the enhancement mask. Both the averaging
// and the mask are exact under the bar map, so check_cp_interaction passes
// identically, not just within tolerance.
inline Matrix draw_interaction(const DecayModelSpec& spec, const InteractionModel& model,
                               std::mt19937_64& eng) {
    if (model.kind == InteractionKind::explicit_blocks)
        throw std::invalid_argument("draw_interaction: explicit model has no sampler");
    const std::size_t n = spec.n_states();
    if (model.cp_map.size() != n)
        throw std::invalid_argument("draw_interaction: conjugation map size mismatch");
    if (!(model.scale >= 0.0) || !std::isfinite(model.scale))
        throw std::invalid_argument("draw_interaction: scale must be finite and nonnegative");
    if (!(model.on_shell_enhancement >= 0.0))
        throw std::invalid_argument("draw_interaction: enhancement must be nonnegative");

    const double rms = model.scale;
    const double part = rms / std::sqrt(2.0);
    Matrix h = Matrix::Zero(Eigen::Index(n), Eigen::Index(n));
    for (std::size_t q = 0; q < n; ++q)
        for (std::size_t s = q; s < n; ++s) {
            Complex v;
            if (model.kind == InteractionKind::gaussian_hermitian_cp) {
                if (q == s)
                    v = Complex(rms * gaussian(eng), 0.0);
                else
                    v = Complex(part * gaussian(eng), part * gaussian(eng));
            } else {
                if (q == s)
                    v = Complex(two_point(eng, rms), 0.0);
                else
                    v = Complex(two_point(eng, part), two_point(eng, part));
            }
            h(Eigen::Index(q), Eigen::Index(s)) = v;
            h(Eigen::Index(s), Eigen::Index(q)) = std::conj(v);
        }

    Matrix avg = Matrix::Zero(Eigen::Index(n), Eigen::Index(n));
    for (std::size_t q = 0; q < n; ++q)
        for (std::size_t s = 0; s < n; ++s)
            avg(Eigen::Index(q), Eigen::Index(s)) =
                0.5 * (h(Eigen::Index(q), Eigen::Index(s)) +
                       h(Eigen::Index(model.cp_map.bar[q]), Eigen::Index(model.cp_map.bar[s])));

    if (model.on_shell_enhancement != 1.0) {
        const double w =
            model.enhancement_window >= 0.0 ? model.enhancement_window : spec.on_shell_window;
        for (std::size_t q = 0; q < n; ++q)
            for (std::size_t s = 0; s < n; ++s)
                if (detail::near_shell_final(spec, q, w) || detail::near_shell_final(spec, s, w))
                    avg(Eigen::Index(q), Eigen::Index(s)) *= model.on_shell_enhancement;
    }
    return avg;
}

// ---- scatter statistics ----

struct SamplePoint {
    std::size_t id = 0;
    double weight = 0.0;
    double dm = 0.0;
    double dgamma = 0.0;
};

struct EllipseFit {
    double level = 0.0;
    double center_dgamma = 0.0;
    double center_dm = 0.0;
    double semi_major = 0.0;
    double semi_minor = 0.0;
    double angle = 0.0;  // major axis vs the dGamma axis, radians
    bool degenerate = false;
};

struct ScatterResult {
    std::vector<SamplePoint> samples;
    std::size_t k_index = 0;
    std::size_t rejected = 0;
    double mean_dm = 0.0;
    double mean_dgamma = 0.0;
    double cov_mm = 0.0;  // var(dM)
    double cov_mg = 0.0;  // cov(dM, dGamma)
    double cov_gg = 0.0;  // var(dGamma)
    double regression_slope = 0.0;  // dM against dGamma
    EllipseFit ellipse65;
    EllipseFit ellipse95;
};

namespace detail {

struct WeightedMoments {
    double mean_dm = 0.0, mean_dgamma = 0.0;
    double cov_mm = 0.0, cov_mg = 0.0, cov_gg = 0.0;
};

// two-pass weighted moments over samples in list order
inline WeightedMoments weighted_moments(const std::vector<SamplePoint>& samples) {
    WeightedMoments m;
    double wsum = 0.0;
    for (const SamplePoint& s : samples) {
        wsum += s.weight;
        m.mean_dm += s.weight * s.dm;
        m.mean_dgamma += s.weight * s.dgamma;
    }
    if (wsum <= 0.0) throw std::invalid_argument("weighted_moments: nonpositive total weight");
    m.mean_dm /= wsum;
    m.mean_dgamma /= wsum;
    for (const SamplePoint& s : samples) {
        const double dm = s.dm - m.mean_dm;
        const double dg = s.dgamma - m.mean_dgamma;
        m.cov_mm += s.weight * dm * dm;
        m.cov_mg += s.weight * dm * dg;
        m.cov_gg += s.weight * dg * dg;
    }
    m.cov_mm /= wsum;
    m.cov_mg /= wsum;
    m.cov_gg /= wsum;
    return m;
}

}  // namespace detail

// chi-squared(2 dof) quantile: P(chi2 <= q) = level gives q = -2 ln(1-level).
inline double chi_squared_2_quantile(double level) {
    if (!(level > 0.0) || !(level < 1.0))
        throw std::invalid_argument("chi_squared_2_quantile: level must be in (0,1)");
    return -2.0 * std::log1p(-level);
}

// Confidence ellipse of the weighted 2d cloud with x = dGamma, y = dM:
// center at the mean, semi-axes sqrt(q * cov eigenvalues).
inline EllipseFit ellipse_fit(const ScatterResult& result, double level) {
    if (result.samples.size() < 3)
        throw std::invalid_argument("ellipse_fit: need at least 3 samples");
    EllipseFit e;
    e.level = level;
    e.center_dgamma = result.mean_dgamma;
    e.center_dm = result.mean_dm;
    const double q = chi_squared_2_quantile(level);
    // 2x2 symmetric eigen problem in (dGamma, dM) coordinates
    const double a = result.cov_gg, b = result.cov_mg, c = result.cov_mm;
    const double tr = a + c;
    const double disc = std::sqrt(std::max(0.0, (a - c) * (a - c) + 4.0 * b * b));
    const double l1 = 0.5 * (tr + disc);  // major
    const double l2 = 0.5 * (tr - disc);  // minor
    e.semi_major = std::sqrt(q * std::max(0.0, l1));
    e.semi_minor = std::sqrt(q * std::max(0.0, l2));
    e.angle = (b == 0.0 && a >= c) ? 0.0 : std::atan2(l1 - a, b);
    e.degenerate = l2 <= 1e-12 * std::max(1.0, l1);
    return e;
}

inline ScatterResult make_scatter_result(std::vector<SamplePoint> samples, std::size_t k_index,
                                         std::size_t rejected) {
    if (samples.size() < 2)
        throw std::invalid_argument("scatter result needs at least 2 samples");
    ScatterResult r;
    r.samples = std::move(samples);
    r.k_index = k_index;
    r.rejected = rejected;

    double wsum = 0.0;
    for (const SamplePoint& s : r.samples) {
        if (!(s.weight >= 0.0) || !std::isfinite(s.weight))
            throw std::invalid_argument("scatter result: weights must be finite, nonnegative");
        wsum += s.weight;
    }
    if (!(wsum > 0.0)) throw std::invalid_argument("scatter result: total weight is zero");
    for (SamplePoint& s : r.samples) s.weight /= wsum;

    const detail::WeightedMoments m = detail::weighted_moments(r.samples);
    r.mean_dm = m.mean_dm;
    r.mean_dgamma = m.mean_dgamma;
    r.cov_mm = m.cov_mm;
    r.cov_mg = m.cov_mg;
    r.cov_gg = m.cov_gg;
    r.regression_slope = m.cov_gg > 0.0 ? m.cov_mg / m.cov_gg : 0.0;
    if (r.samples.size() >= 3) {
        r.ellipse65 = ellipse_fit(r, 0.65);
        r.ellipse95 = ellipse_fit(r, 0.95);
    } else {
        r.ellipse65.degenerate = r.ellipse95.degenerate = true;
    }
    return r;
}

// ---- the ensemble driver ----
//
// Each sample draws h from its own substream(seed, sample index), so samples
// are order-independent and the whole result is a pure function of
// (spec, model, n, seed). With bath strata attached, samples are allocated
// to levels by largest remainder of n * p_beta and each sample carries its
// stratum weight split evenly; otherwise weights are uniform. Draws that
// fail the CP predicate are rejected and counted (the constructive sampler
// never trips this; the check guards explicit inputs and future models).

namespace detail {

inline std::vector<std::size_t> largest_remainder_counts(const std::vector<double>& p,
                                                         std::size_t n) {
    std::vector<std::size_t> counts(p.size());
    std::vector<std::pair<double, std::size_t>> frac(p.size());
    std::size_t assigned = 0;
    for (std::size_t b = 0; b < p.size(); ++b) {
        const double target = double(n) * p[b];
        counts[b] = std::size_t(std::floor(target));
        frac[b] = {target - std::floor(target), b};
        assigned += counts[b];
    }
    std::stable_sort(frac.begin(), frac.end(), [](const auto& x, const auto& y) {
        if (x.first != y.first) return x.first > y.first;
        return x.second < y.second;
    });
    for (std::size_t i = 0; assigned < n && i < frac.size(); ++i, ++assigned)
        ++counts[frac[i].second];
    // n >= strata is not required; leftover means some strata get nothing
    return counts;
}

}  // namespace detail

inline ScatterResult run_ensemble(const DecayModelSpec& spec, const InteractionModel& model,
                                  std::size_t n_samples, std::uint64_t seed,
                                  std::size_t k_index = 0) {
    if (model.cp_map.size() != spec.n_states())
        throw std::invalid_argument("run_ensemble: conjugation map size mismatch");
    if (k_index >= spec.n_initial)
        throw std::out_of_range("run_ensemble: initial state index out of range");

    std::vector<SamplePoint> samples;
    std::size_t rejected = 0;

    if (model.kind == InteractionKind::explicit_blocks) {
        if (spec.interaction_blocks.size() < 2)
            throw std::invalid_argument("run_ensemble: explicit model needs at least 2 blocks");
        if (n_samples != spec.interaction_blocks.size())
            throw std::invalid_argument(
                "run_ensemble: explicit model runs one sample per interaction block");
        std::vector<double> w;
        if (!model.bath_energies.empty()) {
            if (model.bath_energies.size() != n_samples)
                throw std::invalid_argument(
                    "run_ensemble: bath energies must match interaction blocks");
            w = boltzmann_weights(model.bath_energies, model.temperature);
        } else {
            w.assign(n_samples, 1.0 / double(n_samples));
        }
        for (std::size_t i = 0; i < n_samples; ++i) {
            const Matrix& h = spec.interaction_blocks[i];
            if (!check_cp_interaction(h, model.cp_map).pass) {
                ++rejected;
                continue;
            }
            const DeltaLambda dl = delta_lambda_direct_with(spec, h, k_index, model.cp_map);
            samples.push_back({i, w[i], dl.delta_m, dl.delta_gamma});
        }
        return make_scatter_result(std::move(samples), k_index, rejected);
    }

    if (n_samples < 2) throw std::invalid_argument("run_ensemble: need at least 2 samples");

    std::vector<double> sample_weight(n_samples, 1.0 / double(n_samples));
    if (!model.bath_energies.empty()) {
        const std::vector<double> p =
            boltzmann_weights(model.bath_energies, model.temperature);
        const std::vector<std::size_t> counts = detail::largest_remainder_counts(p, n_samples);
        std::size_t i = 0;
        for (std::size_t b = 0; b < counts.size(); ++b)
            for (std::size_t c = 0; c < counts[b]; ++c, ++i)
                sample_weight[i] = p[b] / double(counts[b]);
    }

    for (std::size_t i = 0; i < n_samples; ++i) {
        std::mt19937_64 eng = substream(seed, i);
        const Matrix h = draw_interaction(spec, model, eng);
        if (!check_cp_interaction(h, model.cp_map).pass) {
            ++rejected;
            continue;
        }
        const DeltaLambda dl = delta_lambda_direct_with(spec, h, k_index, model.cp_map);
        samples.push_back({i, sample_weight[i], dl.delta_m, dl.delta_gamma});
    }
    return make_scatter_result(std::move(samples), k_index, rejected);
}

// ---- conditioning ----

struct ConditionalSlice {
    double gamma_tol = 0.0;
    std::size_t count = 0;
    bool sufficient = false;  // at least 10 samples in the slice
    double weight = 0.0;      // total (normalized) weight captured
    double mean_dm = 0.0;
    double sd_dm = 0.0;
    double mean_abs_dm = 0.0;
};

// Statistics of dM over the slice |dGamma| <= gamma_tol. An empty or thin
// slice is reported, never thrown.
inline ConditionalSlice conditional_slice(const ScatterResult& result, double gamma_tol) {
    if (!(gamma_tol >= 0.0)) throw std::invalid_argument("conditional_slice: negative tolerance");
    ConditionalSlice out;
    out.gamma_tol = gamma_tol;
    double wsum = 0.0;
    for (const SamplePoint& s : result.samples) {
        if (std::abs(s.dgamma) > gamma_tol) continue;
        ++out.count;
        wsum += s.weight;
        out.mean_dm += s.weight * s.dm;
        out.mean_abs_dm += s.weight * std::abs(s.dm);
    }
    out.sufficient = out.count >= 10;
    out.weight = wsum;
    if (wsum > 0.0) {
        out.mean_dm /= wsum;
        out.mean_abs_dm /= wsum;
        double var = 0.0;
        for (const SamplePoint& s : result.samples) {
            if (std::abs(s.dgamma) > gamma_tol) continue;
            const double d = s.dm - out.mean_dm;
            var += s.weight * d * d;
        }
        out.sd_dm = std::sqrt(var / wsum);
    }
    return out;
}

}  // namespace qtb
