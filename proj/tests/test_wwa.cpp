#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "qtb/ensemble.hpp"
#include "qtb/rng.hpp"
#include "qtb/toy_models.hpp"
#include "qtb/weisskopf_wigner.hpp"

using namespace qtb;

namespace {

Matrix cp_even_interaction(const ToyDecayModel& toy, double scale, std::uint64_t seed,
                           std::uint64_t stream = 7) {
    InteractionModel model;
    model.scale = scale;
    model.cp_map = toy.map;
    std::mt19937_64 eng = substream(seed, stream);
    return draw_interaction(toy.spec, model, eng);
}

// magnitude scale of the closed-form sum, term by term, for relative bounds
double closed_form_scale(const DecayModelSpec& spec, const Matrix& h, std::size_t k) {
    const Matrix h1 = spec.h1_full();
    double s = 0.0;
    for (std::size_t f = 0; f < spec.n_final(); ++f) {
        const Eigen::Index ki = Eigen::Index(k), fi = Eigen::Index(spec.n_initial + f);
        const double num = std::abs(h1(ki, fi) - h1(fi, ki)) * std::abs(h(ki, fi) - h(fi, ki));
        const double d = spec.initial_energy - spec.final_energies[f];
        double den;
        if (spec.epsilon_mode == EpsilonMode::finite)
            den = std::hypot(d, spec.epsilon);
        else if (std::abs(d) <= spec.on_shell_window)
            den = 1.0 / (M_PI * spec.dos_weight);
        else
            den = std::abs(d);
        s += spec.final_weights[f] * num / den;
    }
    return s;
}

}  // namespace

TEST_CASE("decay model validation and resolved defaults", "[wwa]") {
    Matrix block = Matrix::Zero(1, 3);
    const std::vector<double> finals{-0.5, 0.0, 0.5};

    REQUIRE_THROWS_AS(DecayModelSpec::make(0, 0.0, finals, Matrix::Zero(0, 3),
                                           EpsilonMode::finite),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(DecayModelSpec::make(1, 0.0, {}, Matrix::Zero(1, 0), EpsilonMode::finite),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(DecayModelSpec::make(1, 0.0, finals, Matrix::Zero(2, 3),
                                           EpsilonMode::finite),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(DecayModelSpec::make(1, 0.0, finals, block, EpsilonMode::finite, 0.0),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(DecayModelSpec::make(1, 0.0, finals, block, EpsilonMode::finite, -1.0,
                                           -1.0, -1.0, {1.0, -0.5, 1.0}),
                      std::invalid_argument);
    // degenerate band cannot default its density of states in limit mode
    REQUIRE_THROWS_AS(DecayModelSpec::make(1, 0.0, {0.3, 0.3}, Matrix::Zero(1, 2),
                                           EpsilonMode::limit),
                      std::invalid_argument);

    const ToyDecayModel toy = golden_rule_model(0.01, 1.0, 201, EpsilonMode::finite);
    REQUIRE(toy.spec.epsilon == Catch::Approx(0.001));
    REQUIRE(toy.spec.on_shell_window == Catch::Approx(0.005));
    REQUIRE(toy.spec.dos_weight == Catch::Approx(100.5));
    REQUIRE(toy.spec.final_weights == std::vector<double>(201, 1.0));
    REQUIRE(toy.spec.final_energies[100] == 0.0);

    const Matrix h1 = toy.spec.h1_full();
    REQUIRE(max_abs(h1 - h1.adjoint()) == 0.0);
    REQUIRE(h1(0, 5) == Complex(0.01, 0.0));
    REQUIRE(h1(0, 0) == Complex(0.0, 0.0));
}

TEST_CASE("zero static coupling leaves the bare initial block", "[wwa]") {
    const std::vector<double> finals{-0.4, 0.3, 0.9};
    DecayModelSpec spec =
        DecayModelSpec::make(2, 0.7, finals, Matrix::Zero(2, 3), EpsilonMode::finite, 0.05);
    Matrix h = Matrix::Zero(5, 5);
    h(0, 0) = Complex(0.1);
    h(1, 1) = Complex(-0.2);

    const EffectiveDecayModel eff = wwa_matrix_with(spec, h);
    REQUIRE(eff.lambda(0, 0) == Complex(0.7 + 0.1, 0.0));
    REQUIRE(eff.lambda(1, 1) == Complex(0.7 - 0.2, 0.0));
    REQUIRE(eff.lambda(0, 1) == Complex(0.0, 0.0));
    REQUIRE(max_abs(eff.decay) == 0.0);

    // no interaction blocks: wwa_matrix defaults to h = 0 for beta 0 only
    const EffectiveDecayModel bare = wwa_matrix(spec);
    REQUIRE(bare.lambda(0, 0) == Complex(0.7, 0.0));
    REQUIRE_THROWS_AS(wwa_matrix(spec, 1), std::out_of_range);
}

TEST_CASE("golden-rule width in limit mode", "[wwa]") {
    const double g = 0.01;
    const ToyDecayModel toy = golden_rule_model(g, 1.0, 201, EpsilonMode::limit);
    const EffectiveDecayModel eff = wwa_matrix(toy.spec);

    REQUIRE(eff.on_shell.size() == 1);
    REQUIRE(eff.on_shell[0] == 100);
    REQUIRE_FALSE(eff.empty_on_shell_window);

    const double rho = 201.0 / 2.0;
    const double gamma_oracle = 2.0 * M_PI * g * g * rho;
    const double gamma = eff.decay(0, 0).real();
    REQUIRE(gamma == Catch::Approx(gamma_oracle).epsilon(0.03));

    // the effective shift M is the symmetric principal-value sum: zero here
    REQUIRE(std::abs(eff.mass(0, 0)) <= 1e-15);
    REQUIRE(max_abs(eff.mass - eff.mass.adjoint()) <= 1e-12);
    REQUIRE(max_abs(eff.decay - eff.decay.adjoint()) <= 1e-12);
    REQUIRE(max_abs(eff.lambda - (eff.mass - 0.5 * iunit * eff.decay)) <= 1e-15);
}

TEST_CASE("finite-epsilon width follows the discrete Lorentzian sum", "[wwa]") {
    // independent closed form: sum_j r/(j^2 + r^2) = pi coth(pi r) for the
    // infinite lattice, so Gamma(finite eps) = 2 pi g^2 / dE * coth(pi r)
    // with r = eps / dE, up to the truncated tail.
    const double g = 0.01;
    const ToyDecayModel toy = golden_rule_model(g, 1.0, 201, EpsilonMode::finite);
    const double de = 2.0 / 200.0;
    const double r = toy.spec.epsilon / de;
    const double predicted = 2.0 * M_PI * g * g / de / std::tanh(M_PI * r);
    const double gamma = wwa_matrix(toy.spec).decay(0, 0).real();
    REQUIRE(gamma == Catch::Approx(predicted).epsilon(1e-3));
}

TEST_CASE("finite-epsilon mode converges to limit mode under grid refinement", "[wwa]") {
    // fixed absolute epsilon = (coarsest spacing)/10; each 4x refinement
    // drives eps/spacing up and the Lorentzian toward the delta function
    const double g = 0.01, eps = 0.001;
    std::vector<double> misfit;
    for (std::size_t n : {201u, 801u, 3201u}) {
        const ToyDecayModel fin = golden_rule_model(g, 1.0, n, EpsilonMode::finite, eps);
        const ToyDecayModel lim = golden_rule_model(g, 1.0, n, EpsilonMode::limit);
        const double gf = wwa_matrix(fin.spec).decay(0, 0).real();
        const double gl = wwa_matrix(lim.spec).decay(0, 0).real();
        misfit.push_back(std::abs(gf / gl - 1.0));
    }
    REQUIRE(misfit[1] < misfit[0]);
    REQUIRE(misfit[2] < misfit[1]);
    REQUIRE(misfit[2] <= 0.01);
}

TEST_CASE("empty on-shell window is flagged and gives zero width", "[wwa]") {
    // even grid: energies at half-integer spacings, none within the window
    Matrix block(1, 8);
    for (Eigen::Index f = 0; f < 8; ++f) block(0, f) = Complex(0.05);
    DecayModelSpec spec = DecayModelSpec::make(1, 0.0, centered_grid(8, 0.25), block,
                                               EpsilonMode::limit, -1.0, 1e-9);
    const EffectiveDecayModel eff = wwa_matrix(spec);
    REQUIRE(eff.empty_on_shell_window);
    REQUIRE(eff.on_shell.empty());
    REQUIRE(max_abs(eff.decay) <= 1e-15);
}

TEST_CASE("duplicate final state equals doubled weight", "[wwa]") {
    Matrix block_dup(1, 3);
    block_dup << Complex(0.1), Complex(0.1), Complex(0.2);
    DecayModelSpec dup = DecayModelSpec::make(1, 0.0, {0.5, 0.5, -0.7}, block_dup,
                                              EpsilonMode::finite, 0.05);
    Matrix block_w(1, 2);
    block_w << Complex(0.1), Complex(0.2);
    DecayModelSpec weighted = DecayModelSpec::make(1, 0.0, {0.5, -0.7}, block_w,
                                                   EpsilonMode::finite, 0.05, -1.0, -1.0,
                                                   {2.0, 1.0});
    const Matrix a = wwa_matrix(dup).lambda;
    const Matrix b = wwa_matrix(weighted).lambda;
    REQUIRE(max_abs(a - b) == 0.0);
}

TEST_CASE("decay part stays positive semidefinite with on-shell couplings", "[wwa]") {
    for (auto mode : {EpsilonMode::finite, EpsilonMode::limit}) {
        const ToyDecayModel toy = kaon_model(5, 0.4, 0.1, 0.3, 0.2, mode);
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const Matrix h = cp_even_interaction(toy, 0.05, seed);
            const EffectiveDecayModel eff = wwa_matrix_with(toy.spec, h);
            Eigen::SelfAdjointEigenSolver<Matrix> es(eff.decay);
            REQUIRE(es.eigenvalues().minCoeff() >= -1e-10);
        }
    }
}

TEST_CASE("CP-invariant system and interaction cancel the asymmetry", "[wwa]") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const ToyDecayModel toy = random_cp_model(seed);
        const Matrix h = cp_even_interaction(toy, 0.1, seed);
        const EffectiveDecayModel eff = wwa_matrix_with(toy.spec, h);
        const double scale = std::max(1.0, max_abs(eff.lambda));

        const DeltaLambda dl = delta_lambda_direct_with(toy.spec, h, 0, toy.map);
        REQUIRE(std::abs(dl.value) <= 1e-12 * scale);
        REQUIRE(dl.first_term == Complex(0.0, 0.0));
        REQUIRE(std::abs(eff.lambda(0, 1) - eff.lambda(1, 0)) <= 1e-12 * scale);
    }
}

TEST_CASE("CPT-invariant system with no interaction shows no asymmetry", "[wwa]") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const ToyDecayModel toy = random_cpt_model(seed);
        const Eigen::Index n = Eigen::Index(toy.spec.n_states());
        const DeltaLambda dl =
            delta_lambda_direct_with(toy.spec, Matrix::Zero(n, n), 0, toy.map);
        const double scale =
            std::max(1.0, max_abs(wwa_matrix_with(toy.spec, Matrix::Zero(n, n)).lambda));
        REQUIRE(std::abs(dl.value) <= 1e-12 * scale);
    }
}

TEST_CASE("kaon coupling violates CP without any bath interaction", "[wwa]") {
    const ToyDecayModel toy = kaon_model(5, 0.4, 0.1, 0.3, 0.2, EpsilonMode::finite);
    const Eigen::Index n = Eigen::Index(toy.spec.n_states());
    const EffectiveDecayModel eff = wwa_matrix_with(toy.spec, Matrix::Zero(n, n));
    const double scale = std::max(1.0, max_abs(eff.lambda));
    REQUIRE(std::abs(eff.lambda(0, 0) - eff.lambda(1, 1)) <= 1e-12 * scale);
    REQUIRE(std::abs(eff.lambda(0, 1) - eff.lambda(1, 0)) > 1e-6);
}

TEST_CASE("direct and closed-form asymmetries agree", "[wwa]") {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        const ToyDecayModel toy = random_cpt_model(seed);
        const Matrix h = cp_even_interaction(toy, 0.1, seed);

        const DeltaLambda direct = delta_lambda_direct_with(toy.spec, h, 0, toy.map);
        const DeltaLambda closed = delta_lambda_closed_form_with(toy.spec, h, 0, toy.map);
        const double scale = std::max(closed_form_scale(toy.spec, h, 0), 1e-12);

        REQUIRE(std::abs(direct.value - closed.value) <= 1e-12 * scale);
        REQUIRE(direct.delta_m == Catch::Approx(closed.delta_m).margin(1e-12 * scale));
        REQUIRE(direct.delta_gamma == Catch::Approx(closed.delta_gamma).margin(1e-12 * scale));
        REQUIRE(direct.first_term == Complex(0.0, 0.0));

        // both time-asymmetry factors are imaginary, so each product is real
        const Matrix h1 = toy.spec.h1_full();
        for (std::size_t f = 0; f < toy.spec.n_final(); ++f) {
            const Eigen::Index fi = Eigen::Index(2 + f);
            const Complex prod = (h1(0, fi) - h1(fi, 0)) * (h(0, fi) - h(fi, 0));
            REQUIRE(prod.imag() == 0.0);
        }
    }
}

TEST_CASE("closed form refuses invalid symmetry preconditions", "[wwa]") {
    const ToyDecayModel toy = kaon_model(4, 0.5, 0.1, 0.3, 0.2, EpsilonMode::finite);

    // raw Hermitian draw without CP averaging
    std::mt19937_64 eng = substream(99, 0);
    const std::size_t n = toy.spec.n_states();
    Matrix raw = Matrix::Zero(Eigen::Index(n), Eigen::Index(n));
    for (std::size_t q = 0; q < n; ++q)
        for (std::size_t s = q + 1; s < n; ++s) {
            raw(Eigen::Index(q), Eigen::Index(s)) = Complex(gaussian(eng), gaussian(eng));
            raw(Eigen::Index(s), Eigen::Index(q)) =
                std::conj(raw(Eigen::Index(q), Eigen::Index(s)));
        }
    try {
        delta_lambda_closed_form_with(toy.spec, raw, 0, toy.map);
        FAIL("expected symmetry_error");
    } catch (const symmetry_error& e) {
        REQUIRE(e.cpt_system.pass);
        REQUIRE_FALSE(e.cp_interaction.pass);
    }

    // CP-invariant but CPT-violating static coupling
    const ToyDecayModel cp_toy = random_cp_model(4);
    const Matrix h = cp_even_interaction(cp_toy, 0.1, 4);
    try {
        delta_lambda_closed_form_with(cp_toy.spec, h, 0, cp_toy.map);
        FAIL("expected symmetry_error");
    } catch (const symmetry_error& e) {
        REQUIRE_FALSE(e.cpt_system.pass);
        REQUIRE(e.cp_interaction.pass);
    }
}

TEST_CASE("corrected interaction diagnostics", "[wwa]") {
    // zero coupling: the diagonal comes back untouched
    DecayModelSpec flat = DecayModelSpec::make(1, 0.0, {-0.5, 0.5}, Matrix::Zero(1, 2),
                                               EpsilonMode::finite, 0.1);
    RealVector diag(3);
    diag << 0.3, -0.1, 0.4;
    const CorrectedInteraction zero = corrected_interaction(flat, diag);
    REQUIRE(zero.divergent_pairs.empty());
    for (Eigen::Index q = 0; q < 3; ++q)
        for (Eigen::Index s = 0; s < 3; ++s)
            REQUIRE(zero.matrix(q, s) == (q == s ? Complex(diag[q]) : Complex(0.0)));

    const double g = 0.05;
    const ToyDecayModel toy = golden_rule_model(g, 1.0, 201, EpsilonMode::finite);
    RealVector h_diag = RealVector::Zero(202);
    h_diag[0] = 0.3;
    const CorrectedInteraction corr = corrected_interaction(toy.spec, h_diag);

    // the exactly-on-shell final is excluded and reported
    REQUIRE(corr.divergent_pairs == std::vector<std::pair<std::size_t, std::size_t>>{{0, 101}});
    REQUIRE(corr.matrix(101, 0) == Complex(0.0, 0.0));
    // hand value: entry (f, 0) = (h_0 - h_f) g / (E_0 - E_f) at E_f = 0.5
    const Eigen::Index f_half = 1 + 150;
    REQUIRE(toy.spec.energy_of(std::size_t(f_half)) == Catch::Approx(0.5));
    REQUIRE(corr.matrix(f_half, 0).real() == Catch::Approx(0.3 * g / -0.5));
    REQUIRE(max_abs(corr.matrix - corr.matrix.adjoint()) <= 1e-15);

    // equal diagonal: correction vanishes entirely
    const CorrectedInteraction equal =
        corrected_interaction(toy.spec, RealVector::Constant(202, 0.3));
    REQUIRE(max_abs(equal.matrix - 0.3 * Matrix::Identity(202, 202)) == 0.0);
    REQUIRE_FALSE(equal.divergent_pairs.empty());
}

TEST_CASE("corrected-interaction magnitude diverges as inverse spacing", "[wwa]") {
    // density-normalized couplings g = gbar sqrt(spacing); the summed square
    // outside the excluded window then grows like 1/spacing
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
    REQUIRE(slope == Catch::Approx(-1.0).margin(0.15));
}

TEST_CASE("effective evolution tracks the exact system", "[wwa]") {
    // no coupling: both pictures are pure phases, zero deviation
    DecayModelSpec trivial = DecayModelSpec::make(1, 0.0, {-0.5, 0.5}, Matrix::Zero(1, 2),
                                                  EpsilonMode::limit);
    const std::vector<double> short_times{0.0, 1.0, 2.0, 5.0};
    const WwaComparison none = wwa_vs_exact(trivial, short_times);
    REQUIRE(none.curves[0].max_amplitude_deviation <= 1e-12);

    REQUIRE_THROWS_AS(wwa_vs_exact(trivial, {}), std::invalid_argument);
    REQUIRE_THROWS_AS(wwa_vs_exact(trivial, {-1.0}), std::invalid_argument);

    // golden-rule survival. The exact curve starts in the quadratic
    // short-time regime and relaxes onto the exponential once W t >~ 9, so
    // the deviation peaks near W t = pi/2 at about 0.8 Gamma / W and then
    // oscillates down at the band-edge frequency.
    const double g = 0.01;
    const ToyDecayModel toy = golden_rule_model(g, 1.0, 201, EpsilonMode::limit);
    const double gamma = 2.0 * M_PI * g * g * 100.5;
    std::vector<double> times;
    for (int i = 0; i <= 30; ++i) times.push_back(3.0 / gamma * double(i) / 30.0);
    const WwaComparison cmp = wwa_vs_exact(toy.spec, times);
    REQUIRE_FALSE(cmp.propagator_fallback);

    const SurvivalCurve& c = cmp.curves[0];
    double peak = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double dev = std::abs(c.exact[i] - c.effective[i]);
        peak = std::max(peak, dev);
        REQUIRE(std::abs(c.effective[i] - std::exp(-gamma * times[i])) <= 1e-12);
        if (gamma * times[i] >= 0.6) REQUIRE(dev <= 0.02);
        if (gamma * times[i] >= 2.0) REQUIRE(dev <= 0.005);
    }
    REQUIRE(peak == Catch::Approx(0.8 * gamma).margin(0.015));
    REQUIRE(c.fitted_rate_exact == Catch::Approx(gamma).epsilon(0.05));
    REQUIRE(c.fitted_rate_effective == Catch::Approx(gamma).epsilon(0.02));
    REQUIRE(cmp.gamma_eigenvalues[0] == Catch::Approx(gamma).epsilon(0.03));
}

TEST_CASE("effective-theory error shrinks with the coupling", "[wwa]") {
    std::vector<double> worst;
    for (double g : {0.04, 0.02, 0.01}) {
        const ToyDecayModel toy = golden_rule_model(g, 1.0, 201, EpsilonMode::limit);
        const double gamma = 2.0 * M_PI * g * g * 100.5;
        std::vector<double> times;
        for (int i = 0; i <= 24; ++i) times.push_back(3.0 / gamma * double(i) / 24.0);
        const SurvivalCurve& c = wwa_vs_exact(toy.spec, times).curves[0];
        double dev = 0.0;
        for (std::size_t i = 0; i < times.size(); ++i)
            dev = std::max(dev, std::abs(c.exact[i] - c.effective[i]));
        worst.push_back(dev);
    }
    REQUIRE(worst[1] < worst[0]);
    REQUIRE(worst[2] < worst[1]);
}
