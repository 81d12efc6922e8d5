#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qtb/decoherence.hpp"
#include "qtb/rng.hpp"

using namespace qtb;

namespace {

DiagonalInteractionSpec two_level_spec(const Eigen::MatrixXd& couplings, double kt = 1.0,
                                       double e1 = 1.0) {
    RealVector es(2);
    es << 0.0, e1;
    std::vector<double> eb(std::size_t(couplings.cols()), 0.0);
    return DiagonalInteractionSpec::make(es, eb, kt, couplings);
}

}  // namespace

TEST_CASE("diagonal spec validation", "[decoherence]") {
    RealVector es(2);
    es << 0.0, 1.0;
    Eigen::MatrixXd c(2, 3);
    c << 0.1, -0.2, 0.3, 0.0, 0.4, -0.1;
    CHECK_NOTHROW(DiagonalInteractionSpec::make(es, {0.0, 0.5, 1.0}, 2.0, c));
    CHECK_THROWS_AS(DiagonalInteractionSpec::make(es, {0.0, 0.5}, 2.0, c),
                    std::invalid_argument);

    // a non-diagonal block must be rejected
    Matrix sx(2, 2);
    sx << 0.0, 1.0, 1.0, 0.0;
    SupersystemSpec bad(Operator::diagonal(es), {0.0}, 1.0, {Operator(sx, true)});
    CHECK_THROWS_AS(DiagonalInteractionSpec(bad, es), std::invalid_argument);

    // H_S must match the declared energies
    Matrix hs(2, 2);
    hs << 0.0, 0.5, 0.5, 1.0;
    SupersystemSpec bad2(Operator(hs, true), {0.0}, 1.0,
                         {Operator(Matrix::Zero(2, 2), true)});
    CHECK_THROWS_AS(DiagonalInteractionSpec(bad2, es), std::invalid_argument);
}

TEST_CASE("decoherence factor basics", "[decoherence]") {
    Eigen::MatrixXd c(2, 1);
    c << 0.7, -0.4;
    DiagonalInteractionSpec spec = two_level_spec(c);

    SECTION("A_ss = 1 exactly") {
        for (double t : {0.0, 1.3, 100.0}) {
            CHECK(decoherence_factor(spec, 0, 0, t) == Complex(1.0));
            CHECK(decoherence_factor(spec, 1, 1, t) == Complex(1.0));
        }
    }
    SECTION("single bath state has unit modulus") {
        for (double t : {0.2, 2.9, 40.0})
            CHECK(std::abs(std::abs(decoherence_factor(spec, 0, 1, t)) - 1.0) <= 1e-14);
    }
    SECTION("conjugation under index swap") {
        Eigen::MatrixXd c4(2, 4);
        c4 << 0.1, -0.5, 0.8, 0.05, -0.3, 0.2, 0.6, -0.9;
        DiagonalInteractionSpec s4 = two_level_spec(c4);
        for (double t : {0.7, 5.1}) {
            const Complex a = decoherence_factor(s4, 0, 1, t);
            const Complex b = decoherence_factor(s4, 1, 0, t);
            CHECK(std::abs(a - std::conj(b)) <= 1e-15);
        }
    }
    SECTION("|A| <= 1 always") {
        Eigen::MatrixXd cg = generate_couplings(CouplingKind::gaussian, 2, 64, 0.5, 7);
        RealVector es(2);
        es << 0.0, 1.0;
        std::vector<double> eb(64);
        for (std::size_t b = 0; b < 64; ++b) eb[b] = 0.01 * double(b);
        DiagonalInteractionSpec spec_g = DiagonalInteractionSpec::make(es, eb, 2.0, cg);
        for (double t = 0.0; t < 30.0; t += 0.37)
            CHECK(std::abs(decoherence_factor(spec_g, 0, 1, t)) <= 1.0 + 1e-12);
    }
}

TEST_CASE("gaussian couplings track the characteristic function", "[decoherence]") {
    // gaps h_0 - h_1 i.i.d. N(0, sigma^2), uniform weights: |A(t)| tracks
    // exp(-sigma^2 t^2 / 2) within 3/sqrt(N_B). Oracle computed from scratch.
    const double sigma = 0.6;
    const Eigen::Index nb = 512;
    Eigen::MatrixXd c = generate_couplings(CouplingKind::gaussian, 2, nb, sigma / std::sqrt(2.0),
                                           2024);
    DiagonalInteractionSpec spec = two_level_spec(c, std::numeric_limits<double>::infinity());
    const double bound = 3.0 / std::sqrt(double(nb));
    for (double st = 0.25; st <= 3.0; st += 0.25) {
        const double t = st / sigma;
        const double got = std::abs(decoherence_factor(spec, 0, 1, t));
        const double want = std::exp(-0.5 * sigma * sigma * t * t);
        CHECK(std::abs(got - want) <= bound);
    }
}

TEST_CASE("reduced off-diagonal matches exact supersystem evolution", "[decoherence]") {
    const Eigen::Index nb = 16;
    Eigen::MatrixXd c = generate_couplings(CouplingKind::uniform, 2, nb, 0.4, 5);
    RealVector es(2);
    es << 0.0, 1.3;
    std::vector<double> eb(static_cast<std::size_t>(nb));
    for (std::size_t b = 0; b < std::size_t(nb); ++b) eb[b] = 0.05 * double(b);
    DiagonalInteractionSpec spec = DiagonalInteractionSpec::make(es, eb, 1.5, c);

    // oracle: build the full supersystem, evolve the thermal mixture exactly,
    // trace out the bath, read the (0,1) entry
    std::vector<double> p = boltzmann_weights(spec.base);
    Vector plus(2);
    plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    const PureState plus_state(plus);
    std::vector<PureState> starts(static_cast<std::size_t>(nb), plus_state);
    SpectralDecomposition sd(build_full_hamiltonian(spec.base));
    for (double t : {0.0, 0.9, 3.7, 11.0}) {
        Matrix rho_full = Matrix::Zero(2 * nb, 2 * nb);
        for (std::size_t b = 0; b < std::size_t(nb); ++b) {
            Vector v = sd.apply(
                tensor(starts[b], PureState::basis(nb, Eigen::Index(b))).amplitudes, t);
            rho_full.noalias() += p[b] * (v * v.adjoint());
        }
        Matrix rho_s = partial_trace_bath_raw(rho_full, 2, nb);
        const Complex got = reduced_density_offdiagonal(spec, 0, 1, t);
        CHECK(std::abs(got - rho_s(0, 1)) <= 1e-10);
        // diagonal entries frozen by the diagonal interaction
        CHECK(std::abs(rho_s(0, 0) - Complex(0.5)) <= 1e-12);
        CHECK(std::abs(rho_s(1, 1) - Complex(0.5)) <= 1e-12);
        if (t == 0.0) CHECK(std::abs(got - Complex(0.5)) <= 1e-15);
    }
}

TEST_CASE("long-time average of |A| stays near the purity floor", "[decoherence]") {
    const Eigen::Index nb = 256;
    Eigen::MatrixXd c = generate_couplings(CouplingKind::gaussian, 2, nb, 0.5, 31);
    DiagonalInteractionSpec spec = two_level_spec(c, std::numeric_limits<double>::infinity());
    // time average of |A|^2 tends to sum p^2 = 1/N_B for non-degenerate gaps
    double acc = 0.0;
    int count = 0;
    for (double t = 20.0; t <= 220.0; t += 0.5) {
        const double a = std::abs(decoherence_factor(spec, 0, 1, t));
        acc += a;
        ++count;
    }
    CHECK(acc / count <= 2.0 / std::sqrt(double(nb)));
}

TEST_CASE("recurrence scan", "[decoherence]") {
    SECTION("two bath states recur at the known period") {
        Eigen::MatrixXd c(2, 2);
        c << 0.3, 0.3 + 0.25, 0.0, 0.0;  // gap difference 0.25
        DiagonalInteractionSpec spec =
            two_level_spec(c, std::numeric_limits<double>::infinity());
        const double period = 2.0 * 3.14159265358979323846 / 0.25;
        RecurrenceScan scan = recurrence_scan(spec, 0, 1, 1.2 * period, 4001, 0.5 * period);
        CHECK(scan.max_after_burn > 0.99);
        CHECK(std::abs(scan.t_at_max - period) <= 1.2 * period / 4000.0 + 1e-12);
    }
    SECTION("incommensurate couplings show no recurrence") {
        const Eigen::Index nb = 512;
        const double sigma = 0.5;
        Eigen::MatrixXd c =
            generate_couplings(CouplingKind::gaussian, 2, nb, sigma / std::sqrt(2.0), 77);
        DiagonalInteractionSpec spec =
            two_level_spec(c, std::numeric_limits<double>::infinity());
        RecurrenceScan scan = recurrence_scan(spec, 0, 1, 1000.0 / sigma, 20000);
        CHECK(scan.t_burn == Catch::Approx(5.0 / gap_sigma(spec, 0, 1)));
        CHECK(scan.max_after_burn < 0.5);
    }
    SECTION("t_max = 0 edge") {
        Eigen::MatrixXd c(2, 1);
        c << 0.1, -0.1;
        DiagonalInteractionSpec spec = two_level_spec(c);
        RecurrenceScan scan = recurrence_scan(spec, 0, 1, 0.0, 5);
        REQUIRE(scan.trajectory.size() == 1);
        CHECK(scan.trajectory[0].t == 0.0);
        CHECK(std::abs(scan.trajectory[0].a - Complex(1.0)) <= 1e-15);
    }
    SECTION("argument validation") {
        Eigen::MatrixXd c(2, 1);
        c << 0.1, -0.1;
        DiagonalInteractionSpec spec = two_level_spec(c);
        CHECK_THROWS_AS(recurrence_scan(spec, 0, 1, 1.0, 1), std::invalid_argument);
        CHECK_THROWS_AS(recurrence_scan(spec, 0, 1, -1.0, 10), std::invalid_argument);
    }
}

TEST_CASE("coupling generators are deterministic and scaled", "[decoherence]") {
    Eigen::MatrixXd a = generate_couplings(CouplingKind::gaussian, 3, 200, 0.4, 11);
    Eigen::MatrixXd b = generate_couplings(CouplingKind::gaussian, 3, 200, 0.4, 11);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);

    Eigen::MatrixXd u = generate_couplings(CouplingKind::uniform, 1, 4000, 1.0, 12);
    CHECK(u.cwiseAbs().maxCoeff() <= std::sqrt(3.0));
    const double sd = std::sqrt(u.array().square().mean());
    CHECK(std::abs(sd - 1.0) < 0.05);

    Eigen::MatrixXd tp = generate_couplings(CouplingKind::two_point, 1, 100, 0.3, 13);
    for (Eigen::Index i = 0; i < tp.cols(); ++i)
        CHECK(std::abs(std::abs(tp(0, i)) - 0.3) <= 1e-15);
}
