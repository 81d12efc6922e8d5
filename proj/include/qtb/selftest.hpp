// selftest.hpp — acceptance checks behind `qtb selftest`
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "qtb/decoherence.hpp"
#include "qtb/random_phase.hpp"
#include "qtb/runner.hpp"
#include "qtb/toy_models.hpp"

namespace qtb {

struct CheckResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

namespace selftest {

inline std::string fmt(double v) { return format_double(v); }

struct Failures {
    int count = 0;
    std::string first;
    void add(const std::string& what) {
        ++count;
        if (first.empty()) first = what;
    }
};

inline Matrix random_hermitian(Eigen::Index n, std::mt19937_64& eng, double scale = 1.0) {
    Matrix a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            a(i, j) = scale * Complex(gaussian(eng), gaussian(eng));
    return 0.5 * (a + a.adjoint()).eval();
}

inline PureState random_state(Eigen::Index n, std::mt19937_64& eng) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = Complex(gaussian(eng), gaussian(eng));
    return PureState::normalized(std::move(v));
}

inline SupersystemSpec random_spec(Eigen::Index ds, std::size_t nb, std::mt19937_64& eng,
                                   double kt, double h_scale = 0.4) {
    Operator hs(random_hermitian(ds, eng, 0.5), true);
    std::vector<double> eb(nb);
    for (double& e : eb) e = uniform01(eng);
    std::vector<Operator> blocks;
    for (std::size_t b = 0; b < nb; ++b)
        blocks.emplace_back(random_hermitian(ds, eng, h_scale), true);
    return SupersystemSpec(std::move(hs), std::move(eb), kt, std::move(blocks));
}

// 1. golden two-level densities from the four standard mixtures
inline CheckResult check_golden_densities() {
    CheckResult r{1, "golden two-level densities", false, "", 0.0};
    const auto one = [](double sign) {
        Vector v(2);
        v << 1.0, sign;
        return PhaseMixture({Branch{1.0, RandomPhase::fresh(), PureState::normalized(v)}});
    };
    const PhaseMixture psi2({Branch{0.5, RandomPhase::fresh(), PureState::basis(2, 0)},
                             Branch{0.5, RandomPhase::fresh(), PureState::basis(2, 1)}});
    Vector vp(2), vm(2);
    vp << 1.0, 1.0;
    vm << 1.0, -1.0;
    const PhaseMixture psi3({Branch{0.5, RandomPhase::fresh(), PureState::normalized(vp)},
                             Branch{0.5, RandomPhase::fresh(), PureState::normalized(vm)}});

    Matrix half_ones(2, 2), half_alt(2, 2);
    half_ones << 0.5, 0.5, 0.5, 0.5;
    half_alt << 0.5, -0.5, -0.5, 0.5;
    const Matrix half_id = 0.5 * Matrix::Identity(2, 2);

    double worst = 0.0;
    worst = std::max(worst, max_abs(Matrix(density_of_mixture(one(+1.0)).entries - half_ones)));
    worst = std::max(worst, max_abs(Matrix(density_of_mixture(one(-1.0)).entries - half_alt)));
    worst = std::max(worst, max_abs(Matrix(density_of_mixture(psi2).entries - half_id)));
    worst = std::max(worst, max_abs(Matrix(density_of_mixture(psi3).entries - half_id)));
    r.pass = worst <= 1e-15;
    r.detail = "max entry deviation " + fmt(worst) + " (bound 1e-15)";
    return r;
}

// 2. reduced density: phase-averaged branches vs the traced supersystem
inline CheckResult check_reduced_density() {
    CheckResult r{2, "reduced density equals traced supersystem", false, "", 0.0};
    std::mt19937_64 eng = substream(101, 0);
    Failures bad;
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const Eigen::Index ds = 1 + Eigen::Index(eng() % 4);
        const std::size_t nb = 1 + std::size_t(eng() % 16);
        const double kt = (rep % 3 == 0) ? std::numeric_limits<double>::infinity()
                                         : 0.5 + 2.0 * uniform01(eng);
        const SupersystemSpec spec = random_spec(ds, nb, eng, kt);
        const std::vector<double> p = boltzmann_weights(spec);
        std::vector<PureState> starts;
        for (std::size_t b = 0; b < nb; ++b) starts.push_back(random_state(ds, eng));

        SpectralDecomposition sd(build_full_hamiltonian(spec));
        const Eigen::Index db = Eigen::Index(nb);
        for (int it = 0; it < 10; ++it) {
            const double t = 8.0 * uniform01(eng);
            const Matrix rho_a =
                density_of_mixture(reduce_supersystem_mixture(evolve_branches(spec, starts, t), p))
                    .entries;
            Matrix rho_full = Matrix::Zero(ds * db, ds * db);
            for (std::size_t b = 0; b < nb; ++b) {
                const Vector v =
                    sd.apply(tensor(starts[b], PureState::basis(db, Eigen::Index(b))).amplitudes, t);
                rho_full.noalias() += p[b] * (v * v.adjoint());
            }
            const double dev = max_abs(Matrix(rho_a - partial_trace_bath_raw(rho_full, ds, db)));
            worst = std::max(worst, dev);
            if (dev > 1e-12)
                bad.add("rep " + std::to_string(rep) + " t " + fmt(t) + " dev " + fmt(dev));
        }
    }
    r.pass = bad.count == 0;
    r.detail = "100 supersystems x 10 times, max deviation " + fmt(worst) + " (bound 1e-12)";
    if (!r.pass) r.detail += "; first failure: " + bad.first;
    return r;
}

// 3. bath-sector structure: commutation, autonomy, and a negative control
inline CheckResult check_sector_structure() {
    CheckResult r{3, "bath-sector commutation and autonomy", false, "", 0.0};
    std::mt19937_64 eng = substream(102, 0);
    double worst_comm = 0.0, worst_leak = 0.0;
    for (int rep = 0; rep < 25; ++rep) {
        const Eigen::Index ds = 1 + Eigen::Index(eng() % 4);
        const std::size_t nb = 2 + std::size_t(eng() % 15);
        const SupersystemSpec spec = random_spec(ds, nb, eng, 1.0);
        const Matrix h = build_full_hamiltonian(spec).entries;
        const Matrix hb = bath_hamiltonian_full(spec).entries;
        const double scale = std::max(1.0, max_abs(h) * max_abs(hb));
        worst_comm = std::max(worst_comm, max_abs(Matrix(h * hb - hb * h)) / scale);

        // a state launched in one bath sector stays there
        SpectralDecomposition sd(build_full_hamiltonian(spec));
        const std::size_t beta = std::size_t(eng() % nb);
        const Vector v0 =
            tensor(random_state(ds, eng), PureState::basis(Eigen::Index(nb), Eigen::Index(beta)))
                .amplitudes;
        const Vector vt = sd.apply(v0, 3.0 + 5.0 * uniform01(eng));
        for (Eigen::Index i = 0; i < vt.size(); ++i)
            if (std::size_t(i) % nb != beta) worst_leak = std::max(worst_leak, std::abs(vt(i)));
    }

    // negative control: a cross-sector entry must trip both checks
    std::vector<double> eb{0.0, 0.7, 1.4};
    SupersystemSpec good(Operator(random_hermitian(2, eng, 0.5), true), eb, 1.0,
                         {Operator(random_hermitian(2, eng), true),
                          Operator(random_hermitian(2, eng), true),
                          Operator(random_hermitian(2, eng), true)});
    Matrix bad_h = build_full_hamiltonian(good).entries;
    bad_h(0, 1) += Complex(0.05, 0.02);  // couples bath sectors 0 and 1
    bad_h(1, 0) += Complex(0.05, -0.02);
    const Matrix hb = bath_hamiltonian_full(good).entries;
    const double bad_comm = max_abs(Matrix(bad_h * hb - hb * bad_h));
    SpectralDecomposition bad_sd{Operator(bad_h, true)};
    const Vector leak_v =
        bad_sd.apply(tensor(PureState::basis(2, 0), PureState::basis(3, 0)).amplitudes, 4.0);
    double bad_leak = 0.0;
    for (Eigen::Index i = 0; i < leak_v.size(); ++i)
        if (std::size_t(i) % 3 != 0) bad_leak = std::max(bad_leak, std::abs(leak_v(i)));

    const bool control_ok = bad_comm > 1e-6 && bad_leak > 1e-6;
    r.pass = worst_comm <= 1e-12 && worst_leak <= 1e-12 && control_ok;
    r.detail = "max commutator " + fmt(worst_comm) + ", max leakage " + fmt(worst_leak) +
               " (bounds 1e-12); control commutator " + fmt(bad_comm) + ", control leakage " +
               fmt(bad_leak) + (control_ok ? " both flagged" : " NOT flagged");
    return r;
}

// 4. analytic decoherence factor vs exact evolution, and the Gaussian law
inline CheckResult check_decoherence_factor() {
    CheckResult r{4, "decoherence factor vs exact evolution", false, "", 0.0};
    const Eigen::Index nb = 64;
    std::mt19937_64 eng = substream(103, 0);
    Eigen::MatrixXd c = generate_couplings(CouplingKind::gaussian, 2, nb, 0.5, 103);
    RealVector es(2);
    es << 0.0, 1.1;
    std::vector<double> eb(static_cast<std::size_t>(nb));
    for (std::size_t b = 0; b < std::size_t(nb); ++b) eb[b] = 0.03 * double(b);
    const DiagonalInteractionSpec spec = DiagonalInteractionSpec::make(es, eb, 2.0, c);

    const std::vector<double> p = boltzmann_weights(spec.base);
    Vector plus(2);
    plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    const PureState plus_state(plus);
    SpectralDecomposition sd(build_full_hamiltonian(spec.base));
    double worst = 0.0;
    for (int it = 0; it < 20; ++it) {
        const double t = 0.6 * double(it);
        Matrix rho_full = Matrix::Zero(2 * nb, 2 * nb);
        for (std::size_t b = 0; b < std::size_t(nb); ++b) {
            const Vector v = sd.apply(
                tensor(plus_state, PureState::basis(nb, Eigen::Index(b))).amplitudes, t);
            rho_full.noalias() += p[b] * (v * v.adjoint());
        }
        const Matrix rho_s = partial_trace_bath_raw(rho_full, 2, nb);
        worst = std::max(worst, std::abs(reduced_density_offdiagonal(spec, 0, 1, t) - rho_s(0, 1)));
    }

    // Gaussian gap statistics: |A| tracks exp(-sigma^2 t^2 / 2)
    const double sigma = 0.6;
    const Eigen::Index big = 512;
    Eigen::MatrixXd cg =
        generate_couplings(CouplingKind::gaussian, 2, big, sigma / std::sqrt(2.0), 2024);
    RealVector es2 = RealVector::Zero(2);
    const DiagonalInteractionSpec gspec = DiagonalInteractionSpec::make(
        es2, std::vector<double>(std::size_t(big), 0.0), std::numeric_limits<double>::infinity(),
        cg);
    const double bound = 3.0 / std::sqrt(double(big));
    double worst_gauss = 0.0;
    for (double st = 0.25; st <= 3.0; st += 0.25) {
        const double t = st / sigma;
        const double got = std::abs(decoherence_factor(gspec, 0, 1, t));
        worst_gauss = std::max(worst_gauss, std::abs(got - std::exp(-0.5 * sigma * sigma * t * t)));
    }
    r.pass = worst <= 1e-10 && worst_gauss <= bound;
    r.detail = "exact-evolution deviation " + fmt(worst) + " (bound 1e-10); Gaussian-law deviation " +
               fmt(worst_gauss) + " (bound " + fmt(bound) + ")";
    return r;
}

// 5. golden-rule width and survival agreement for the single-k spec
inline CheckResult check_golden_rule_survival() {
    CheckResult r{5, "golden-rule width and survival agreement", false, "", 0.0};
    const double g = 0.01, width = 1.0;
    const std::size_t n_final = 201;

    // dense early points catch the short-time transient, the uniform tail
    // covers the rest of the window
    const auto grid = [&](double t_end) {
        std::vector<double> t;
        for (int i = 0; i <= 40; ++i) t.push_back(std::min(0.5 * double(i) / width, t_end));
        for (int i = 0; i <= 30; ++i) t.push_back(t_end * double(i) / 30.0);
        std::sort(t.begin(), t.end());
        return t;
    };
    struct Window {
        double sup = 0.0;      // over the whole window
        double sup_late = 0.0; // restricted to Gamma t >= 0.6
        double gamma = 0.0;
    };
    const auto survey = [&](double gh, double t_end_factor_of_own_gamma, double fixed_end) {
        const ToyDecayModel toy = golden_rule_model(gh, width, n_final, EpsilonMode::limit);
        Window w;
        w.gamma = wwa_matrix(toy.spec).decay(0, 0).real();
        const double t_end =
            fixed_end > 0.0 ? fixed_end : t_end_factor_of_own_gamma / w.gamma;
        const std::vector<double> times = grid(t_end);
        const WwaComparison cmp = wwa_vs_exact(toy.spec, times);
        for (std::size_t i = 0; i < times.size(); ++i) {
            const double dev = std::abs(cmp.curves[0].exact[i] - cmp.curves[0].effective[i]);
            w.sup = std::max(w.sup, dev);
            if (w.gamma * times[i] >= 0.6) w.sup_late = std::max(w.sup_late, dev);
        }
        return w;
    };

    const Window base = survey(g, 3.0, -1.0);
    const double rho = double(n_final) / (2.0 * width);
    const double target = 2.0 * M_PI * g * g * rho;
    const double rel = std::abs(base.gamma - target) / target;

    // halve the coupling twice, keeping each window at Gamma t <= 3 with the
    // halved coupling's own width
    std::string devs = fmt(base.sup);
    bool monotone = true;
    double prev = base.sup;
    bool crossed_recurrence = false;
    const double t_heisenberg = 2.0 * M_PI / DecayModelSpec::grid_spacing(
        golden_rule_model(g, width, n_final, EpsilonMode::limit).spec.final_energies);
    for (double gh : {g / 2.0, g / 4.0}) {
        const Window w = survey(gh, 3.0, -1.0);
        if (3.0 / w.gamma > t_heisenberg) crossed_recurrence = true;
        monotone = monotone && w.sup < prev;
        prev = w.sup;
        devs += " -> " + fmt(w.sup);
    }

    // diagnostic: the same halvings over the fixed window of the base spec
    // isolate the transient, which does shrink like g^2
    std::string fixed_devs;
    bool fixed_monotone = true;
    double fixed_prev = std::numeric_limits<double>::infinity();
    for (double gh : {g, g / 2.0, g / 4.0}) {
        const Window w = survey(gh, -1.0, 3.0 / base.gamma);
        fixed_monotone = fixed_monotone && w.sup < fixed_prev;
        fixed_prev = w.sup;
        fixed_devs += (fixed_devs.empty() ? "" : " -> ") + fmt(w.sup);
    }

    const bool width_ok = rel <= 0.03;
    const bool survival_ok = base.sup < 0.02;
    r.pass = width_ok && survival_ok && monotone;
    r.detail = "Gamma " + fmt(base.gamma) + " vs 2 pi g^2 rho " + fmt(target) + " (rel " +
               fmt(rel) + ", bound 0.03); survival sup deviation " + fmt(base.sup) +
               " on Gamma t <= 3 (bound 0.02)";
    if (!survival_ok)
        r.detail += " EXCEEDED: the short-time quadratic transient peaks near 0.8 Gamma/W "
                    "before the exponential regime takes over; past Gamma t >= 0.6 the sup is " +
                    fmt(base.sup_late);
    r.detail += "; halving g twice (each window Gamma t <= 3): " + devs +
                (monotone ? " (monotone)" : " (NOT monotone)");
    if (crossed_recurrence)
        r.detail += "; the smallest coupling's window passes the grid recurrence time 2 pi / dE"
                    " = " + fmt(t_heisenberg) + ", where the discrete band revives; over the"
                    " fixed window t <= " + fmt(3.0 / base.gamma) +
                    " the transient does shrink with g: " + fixed_devs +
                    (fixed_monotone ? " (monotone)" : " (NOT monotone)");
    return r;
}

// 6. CP-invariant specs keep Lambda symmetric and the splitting at zero
inline CheckResult check_cp_invariant_null() {
    CheckResult r{6, "CP-invariant specs give zero splitting", false, "", 0.0};
    Failures bad;
    double worst_delta = 0.0, worst_offdiag = 0.0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const ToyDecayModel toy = random_cp_model(seed);
        InteractionModel model;
        model.scale = 0.15;
        model.cp_map = toy.map;
        std::mt19937_64 eng = substream(seed, 11);
        const Matrix h = draw_interaction(toy.spec, model, eng);

        const EffectiveDecayModel eff = wwa_matrix_with(toy.spec, h);
        const double scale = std::max(1.0, max_abs(eff.lambda));
        const DeltaLambda dl = delta_lambda_direct_with(toy.spec, h, 0, toy.map);
        const double asym = std::abs(eff.lambda(0, 1) - eff.lambda(1, 0));
        worst_delta = std::max(worst_delta, std::abs(dl.value) / scale);
        worst_offdiag = std::max(worst_offdiag, asym / scale);
        if (std::abs(dl.value) > 1e-12 * scale || asym > 1e-12 * scale)
            bad.add("seed " + std::to_string(seed));
    }
    r.pass = bad.count == 0;
    r.detail = "100 specs, max |dLambda|/scale " + fmt(worst_delta) +
               ", max offdiagonal asymmetry/scale " + fmt(worst_offdiag) + " (bounds 1e-12)";
    if (!r.pass) r.detail += "; first failure: " + bad.first;
    return r;
}

// 7. CPT-invariant CP-violating specs: direct vs closed form
inline CheckResult check_closed_form() {
    CheckResult r{7, "closed-form splitting matches the direct route", false, "", 0.0};
    Failures bad;
    double worst_rel = 0.0, worst_imag = 0.0, worst_first = 0.0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const ToyDecayModel toy = random_cpt_model(seed);
        InteractionModel model;
        model.scale = 0.1;
        model.cp_map = toy.map;
        std::mt19937_64 eng = substream(seed, 7);
        const Matrix h = draw_interaction(toy.spec, model, eng);

        const DeltaLambda direct = delta_lambda_direct_with(toy.spec, h, 0, toy.map);
        const DeltaLambda closed = delta_lambda_closed_form_with(toy.spec, h, 0, toy.map);
        const double scale = std::max(std::abs(closed.value), 1e-12);
        const double rel = std::abs(direct.value - closed.value) / scale;
        worst_rel = std::max(worst_rel, rel);
        if (rel > 1e-8) bad.add("seed " + std::to_string(seed) + " rel " + fmt(rel));

        // both asymmetry factors are imaginary, so every product is real and
        // dM comes from the principal value alone, dGamma from the window
        const Matrix h1 = toy.spec.h1_full();
        for (std::size_t f = 0; f < toy.spec.n_final(); ++f) {
            const Eigen::Index fi = Eigen::Index(2 + f);
            const Complex prod = (h1(0, fi) - h1(fi, 0)) * (h(0, fi) - h(fi, 0));
            const double im = std::abs(prod.imag()) / std::max(1.0, std::abs(prod));
            worst_imag = std::max(worst_imag, im);
            if (im > 1e-12) bad.add("seed " + std::to_string(seed) + " complex product");
        }

        worst_first = std::max(worst_first, std::abs(direct.first_term));
        if (std::abs(direct.first_term) > 1e-12)
            bad.add("seed " + std::to_string(seed) + " first-order term leaks");
    }
    r.pass = bad.count == 0;
    r.detail = "100 specs, max relative gap " + fmt(worst_rel) +
               " (bound 1e-8); max product imag part " + fmt(worst_imag) +
               ", max first-order term " + fmt(worst_first) + " (bounds 1e-12)";
    if (!r.pass) r.detail += "; first failure: " + bad.first;
    return r;
}

// 8. ensemble statistics: linearity, conditional collapse, ellipse calibration
inline CheckResult check_ensemble_statistics() {
    CheckResult r{8, "ensemble linearity, conditioning, ellipse calibration", false, "", 0.0};
    const ToyDecayModel toy =
        kaon_model(20, 0.1, 0.05, 0.4, 0.2, EpsilonMode::finite, 0.05, -1.0, 0.25);
    InteractionModel model;
    model.scale = 0.02;
    model.cp_map = toy.map;
    model.on_shell_enhancement = 40.0;

    const std::size_t n = 2000;
    const ScatterResult base = run_ensemble(toy.spec, model, n, 515);
    InteractionModel doubled = model;
    doubled.scale *= 2.0;
    const ScatterResult twice = run_ensemble(toy.spec, doubled, n, 515);
    double worst_lin = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ref =
            std::max(std::abs(twice.samples[i].dm) + std::abs(twice.samples[i].dgamma), 1e-300);
        worst_lin = std::max(worst_lin,
                             std::abs(twice.samples[i].dm - 2.0 * base.samples[i].dm) / ref);
        worst_lin = std::max(
            worst_lin, std::abs(twice.samples[i].dgamma - 2.0 * base.samples[i].dgamma) / ref);
    }

    const double sd_m = std::sqrt(base.cov_mm), sd_g = std::sqrt(base.cov_gg);
    const ConditionalSlice slice = conditional_slice(base, 0.1 * sd_g);
    const double ratio = sd_m > 0.0 ? slice.sd_dm / sd_m : 1.0;

    // isotropic unit Gaussian: the 95% ellipse has radius sqrt of the
    // two-dof quantile in both directions
    std::mt19937_64 eng = substream(808, 0);
    std::vector<SamplePoint> cloud(n);
    for (std::size_t i = 0; i < n; ++i)
        cloud[i] = SamplePoint{i, 1.0 / double(n), gaussian(eng), gaussian(eng)};
    const ScatterResult iso = make_scatter_result(std::move(cloud), 0, 0);
    const double want = std::sqrt(chi_squared_2_quantile(0.95));
    const double rel_major = std::abs(iso.ellipse95.semi_major - want) / want;
    const double rel_minor = std::abs(iso.ellipse95.semi_minor - want) / want;

    const bool lin_ok = worst_lin <= 1e-10;
    const bool cond_ok = slice.sufficient && ratio <= 0.5;
    const bool ellipse_ok = rel_major <= 0.03 && rel_minor <= 0.03;
    r.pass = lin_ok && cond_ok && ellipse_ok;
    r.detail = "linearity max rel deviation " + fmt(worst_lin) +
               " (bound 1e-10); conditional sd ratio " + fmt(ratio) + " over " +
               std::to_string(slice.count) + " samples (bound 0.5); ellipse axes " +
               fmt(iso.ellipse95.semi_major) + ", " + fmt(iso.ellipse95.semi_minor) + " vs " +
               fmt(want) + " (rel " + fmt(rel_major) + ", " + fmt(rel_minor) + ", bound 0.03)";
    return r;
}

// 9. identical config and seed reproduce identical output bytes
inline CheckResult check_cli_determinism(const std::filesystem::path& scratch) {
    CheckResult r{9, "repeated runs are byte-identical", false, "", 0.0};
    const auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };

    const json ens_cfg = {
        {"seed", 77},
        {"n_samples", 300},
        {"decay",
         {{"builder", "kaon"}, {"n_pairs", 12}, {"spacing", 0.1}, {"g", 0.05}, {"delta", 0.4},
          {"r", 0.2}, {"offset_frac", 0.25}, {"eps_mode", "finite"}, {"epsilon", 0.05}}},
        {"interaction", {{"kind", "gaussian-hermitian-CP"}, {"scale", 0.02}}},
    };
    const json dec_cfg = {
        {"seed", 31},
        {"system_energies", {0.0, 1.0}},
        {"n_bath", 64},
        {"kT", 1.5},
        {"couplings", {{"kind", "gaussian"}, {"scale", 0.3}}},
        {"times", {{"t_max", 20.0}, {"n", 101}}},
    };

    std::string mismatch;
    for (const auto& [name, cfg, file] :
         {std::tuple{std::string("ensemble"), ens_cfg, std::string("scatter.csv")},
          std::tuple{std::string("decohere"), dec_cfg, std::string("trajectory.csv")}}) {
        const std::filesystem::path cfg_path = scratch / (name + ".json");
        write_file_atomic(cfg_path, cfg.dump(2) + "\n");
        RunOptions opt;
        opt.config_path = cfg_path.string();
        std::string bytes[2];
        for (int run = 0; run < 2; ++run) {
            const std::filesystem::path out = scratch / (name + "-run" + std::to_string(run));
            opt.out_dir = out.string();
            std::ostringstream err;
            if (run_command(name, opt, err) != exit_ok) {
                mismatch = name + " run failed: " + err.str();
                break;
            }
            bytes[run] = slurp(out / file);
        }
        if (!mismatch.empty()) break;
        if (bytes[0].empty() || bytes[0] != bytes[1]) {
            mismatch = name + "/" + file + " differs between runs";
            break;
        }
    }
    r.pass = mismatch.empty();
    r.detail = mismatch.empty()
                   ? "ensemble scatter.csv and decohere trajectory.csv identical across reruns "
                     "(different output directories)"
                   : mismatch;
    return r;
}

// 10. corrected-interaction weight grows like the inverse grid spacing
inline CheckResult check_inverse_spacing() {
    CheckResult r{10, "correction weight scales as inverse spacing", false, "", 0.0};
    std::vector<double> log_spacing, log_sum;
    for (std::size_t n : {33u, 65u, 129u}) {
        const double spacing = 2.0 / double(n - 1);
        const ToyDecayModel toy =
            golden_rule_model(0.2 * std::sqrt(spacing), 1.0, n, EpsilonMode::finite);
        RealVector h_diag = RealVector::Zero(Eigen::Index(n + 1));
        h_diag[0] = 0.3;
        const CorrectedInteraction corr = corrected_interaction(toy.spec, h_diag);
        double s = 0.0;
        for (Eigen::Index q = 1; q < Eigen::Index(n) + 1; ++q) s += std::norm(corr.matrix(q, 0));
        log_spacing.push_back(std::log(spacing));
        log_sum.push_back(std::log(s));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        sx += log_spacing[i];
        sy += log_sum[i];
        sxx += log_spacing[i] * log_spacing[i];
        sxy += log_spacing[i] * log_sum[i];
    }
    const double slope = (3.0 * sxy - sx * sy) / (3.0 * sxx - sx * sx);
    r.pass = std::abs(slope + 1.0) <= 0.15;
    r.detail = "fitted exponent " + fmt(slope) + " over 3 refinements (want -1 +- 0.15)";
    return r;
}

}  // namespace selftest

inline std::vector<CheckResult> run_acceptance_checks() {
    namespace fs = std::filesystem;
    const fs::path scratch =
        fs::temp_directory_path() / ("qtb-selftest-" + std::to_string(::getpid()));
    fs::create_directories(scratch);

    std::vector<CheckResult> out;
    const auto timed = [&out](CheckResult (*fn)()) {
        const auto t0 = std::chrono::steady_clock::now();
        CheckResult r = fn();
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.push_back(std::move(r));
    };
    timed(selftest::check_golden_densities);
    timed(selftest::check_reduced_density);
    timed(selftest::check_sector_structure);
    timed(selftest::check_decoherence_factor);
    timed(selftest::check_golden_rule_survival);
    timed(selftest::check_cp_invariant_null);
    timed(selftest::check_closed_form);
    timed(selftest::check_ensemble_statistics);
    {
        const auto t0 = std::chrono::steady_clock::now();
        CheckResult r = selftest::check_cli_determinism(scratch);
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.push_back(std::move(r));
    }
    timed(selftest::check_inverse_spacing);

    std::error_code ec;
    fs::remove_all(scratch, ec);
    return out;
}

inline int print_acceptance_report(const std::vector<CheckResult>& results, std::ostream& os) {
    int failures = 0;
    for (const CheckResult& r : results) {
        os << (r.pass ? "PASS" : "FAIL") << "  " << r.id << ". " << r.name << " ["
           << selftest::fmt(r.seconds) << "s]\n      " << r.detail << "\n";
        if (!r.pass) ++failures;
    }
    os << (failures == 0 ? "all checks passed"
                         : std::to_string(failures) + " check(s) failed")
       << "\n";
    return failures == 0 ? exit_ok : exit_check;
}

}  // namespace qtb
