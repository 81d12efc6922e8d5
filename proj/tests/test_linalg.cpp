#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "qtb/linalg.hpp"
#include "qtb/rng.hpp"

using namespace qtb;

namespace {

Matrix random_complex_matrix(Eigen::Index n, std::mt19937_64& eng) {
    Matrix a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) a(i, j) = Complex(gaussian(eng), gaussian(eng));
    return a;
}

Matrix random_hermitian(Eigen::Index n, std::mt19937_64& eng) {
    Matrix a = random_complex_matrix(n, eng);
    return 0.5 * (a + a.adjoint()).eval();
}

Matrix random_density_entries(Eigen::Index n, std::mt19937_64& eng) {
    Matrix a = random_complex_matrix(n, eng);
    Matrix rho = a * a.adjoint();
    rho /= rho.trace().real();
    return 0.5 * (rho + rho.adjoint()).eval();
}

Vector random_state_vector(Eigen::Index n, std::mt19937_64& eng) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = Complex(gaussian(eng), gaussian(eng));
    return v / v.norm();
}

// Independent oracle: classical RK4 on i dpsi/dt = H psi.
Vector rk4_evolve(const Matrix& h, Vector psi, double t, int steps) {
    const double dt = t / steps;
    auto f = [&](const Vector& y) { return Vector(-iunit * (h * y)); };
    for (int i = 0; i < steps; ++i) {
        Vector k1 = f(psi);
        Vector k2 = f(Vector(psi + 0.5 * dt * k1));
        Vector k3 = f(Vector(psi + 0.5 * dt * k2));
        Vector k4 = f(Vector(psi + dt * k3));
        psi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return psi;
}

}  // namespace

TEST_CASE("Operator validation", "[linalg]") {
    CHECK_THROWS_AS(Operator(Matrix::Zero(2, 3)), std::invalid_argument);
    Matrix m(2, 2);
    m << 0.0, Complex(0.0, 1.0), Complex(0.0, 1.0), 0.0;  // not Hermitian
    CHECK_THROWS_AS(Operator(m, true), std::invalid_argument);
    CHECK_NOTHROW(Operator(m, false));
    Matrix ok(2, 2);
    ok << 1.0, Complex(0.0, 1.0), Complex(0.0, -1.0), -1.0;
    CHECK_NOTHROW(Operator(ok, true));
    CHECK(Operator::identity(3).dim() == 3);
}

TEST_CASE("PureState constructor normalizes or rejects", "[linalg]") {
    Vector v(2);
    v << 0.6, 0.8;
    CHECK_NOTHROW(PureState(v));
    v << 1.0, 1.0;
    CHECK_THROWS_AS(PureState(v), std::invalid_argument);
    PureState p = PureState::normalized(v);
    CHECK(std::abs(p.amplitudes.norm() - 1.0) <= 1e-12);
    CHECK_THROWS_AS(PureState::normalized(Vector::Zero(2)), std::invalid_argument);
    CHECK(PureState::basis(4, 2).amplitudes(2) == Complex(1.0));
}

TEST_CASE("DensityMatrix validation", "[linalg]") {
    std::mt19937_64 eng = substream(11, 0);
    CHECK_NOTHROW(DensityMatrix(random_density_entries(4, eng)));
    Matrix bad = Matrix::Identity(2, 2);  // trace 2
    CHECK_THROWS_AS(DensityMatrix(bad), std::invalid_argument);
    Matrix neg(2, 2);
    neg << 1.5, 0.0, 0.0, -0.5;  // trace 1 but not PSD
    CHECK_THROWS_AS(DensityMatrix(neg), std::invalid_argument);
    Matrix nh = random_density_entries(3, eng);
    nh(0, 1) += 0.2;
    CHECK_THROWS_AS(DensityMatrix(nh), std::invalid_argument);
}

TEST_CASE("tensor identities and ordering", "[linalg]") {
    Operator i2 = Operator::identity(2);
    Operator i3 = Operator::identity(3);
    CHECK(max_abs(Matrix(tensor(i2, i3).entries - Matrix::Identity(6, 6))) == 0.0);

    RealVector d(2);
    d << 2.0, 5.0;
    Operator ab = Operator::diagonal(d);
    Matrix expect = Matrix::Zero(4, 4);
    expect(0, 0) = 2.0;
    expect(1, 1) = 2.0;
    expect(2, 2) = 5.0;
    expect(3, 3) = 5.0;
    CHECK(max_abs(Matrix(tensor(ab, i2).entries - expect)) == 0.0);

    // system-major flat index: (s, b) -> s * dim_B + b
    std::mt19937_64 eng = substream(12, 0);
    Matrix a = random_complex_matrix(2, eng);
    Matrix b = random_complex_matrix(3, eng);
    Matrix k = tensor(Operator(a), Operator(b)).entries;
    for (Eigen::Index s = 0; s < 2; ++s)
        for (Eigen::Index q = 0; q < 2; ++q)
            for (Eigen::Index al = 0; al < 3; ++al)
                for (Eigen::Index be = 0; be < 3; ++be)
                    CHECK(std::abs(k(s * 3 + al, q * 3 + be) - a(s, q) * b(al, be)) <= 1e-15);
}

TEST_CASE("tensor cap", "[linalg]") {
    Operator big = Operator::identity(40);
    CHECK_THROWS_AS(tensor(big, big), std::length_error);  // 1600^2 > 2^20
    CHECK_NOTHROW(tensor(big, big, std::size_t(1) << 22));
}

TEST_CASE("H_S x I + I x H_B commutes with I x H_B", "[linalg]") {
    std::mt19937_64 eng = substream(13, 0);
    Operator hs(random_hermitian(3, eng), true);
    RealVector eb(4);
    eb << 0.1, 0.5, 0.9, 1.4;
    Operator hb = Operator::diagonal(eb);
    Matrix h = tensor(hs, Operator::identity(4)).entries +
               tensor(Operator::identity(3), hb).entries;
    Matrix ib_hb = tensor(Operator::identity(3), hb).entries;
    CHECK(max_abs(Matrix(h * ib_hb - ib_hb * h)) <= 1e-12 * max_abs(h) * max_abs(ib_hb));
}

TEST_CASE("evolve basics", "[linalg]") {
    std::mt19937_64 eng = substream(14, 0);
    Operator h(random_hermitian(4, eng), true);
    PureState psi(random_state_vector(4, eng));

    SECTION("t = 0 is the identity") {
        CHECK(max_abs(Vector(evolve(h, psi, 0.0).amplitudes - psi.amplitudes)) <= 1e-12);
    }
    SECTION("eigenstate picks up a phase") {
        RealVector e(3);
        e << 0.3, 1.1, 2.7;
        Operator hd = Operator::diagonal(e);
        PureState ek = PureState::basis(3, 1);
        Vector got = evolve(hd, ek, 2.5).amplitudes;
        Vector want = Vector::Zero(3);
        want(1) = std::exp(-iunit * 1.1 * 2.5);
        CHECK(max_abs(Vector(got - want)) <= 1e-12);
    }
    SECTION("norm preserved and semigroup") {
        for (double t : {0.7, 3.9, 17.0}) {
            PureState a = evolve(h, psi, t);
            CHECK(std::abs(a.amplitudes.norm() - 1.0) <= 1e-12);
        }
        Vector two_step = evolve(h, evolve(h, psi, 1.3), 2.1).amplitudes;
        Vector one_step = evolve(h, psi, 3.4).amplitudes;
        CHECK(max_abs(Vector(two_step - one_step)) <= 1e-10);
    }
    SECTION("non-Hermitian rejected") {
        Operator bad(random_complex_matrix(3, eng), false);
        CHECK_THROWS_AS(evolve(bad, PureState::basis(3, 0), 1.0), std::invalid_argument);
    }
}

TEST_CASE("Rabi oscillation matches closed form and an RK4 oracle", "[linalg]") {
    const double g = 0.7;
    Matrix hm(2, 2);
    hm << 0.0, g, g, 0.0;
    Operator h(hm, true);
    PureState psi0 = PureState::basis(2, 0);
    for (double t : {0.3, 1.1, 2.4, 3.7}) {
        Vector psi_t = evolve(h, psi0, t).amplitudes;
        const double survival = std::norm(psi_t(0));
        const double closed = std::cos(g * t) * std::cos(g * t);
        CHECK(std::abs(survival - closed) <= 1e-12);
        Vector oracle = rk4_evolve(hm, psi0.amplitudes, t, 4000);
        CHECK(max_abs(Vector(psi_t - oracle)) <= 1e-10);
    }
}

TEST_CASE("spectral decomposition reconstructs the operator", "[linalg]") {
    std::mt19937_64 eng = substream(15, 0);
    Operator h(random_hermitian(5, eng), true);
    SpectralDecomposition sd(h);
    Matrix rebuilt = sd.eigenvectors * sd.eigenvalues.asDiagonal().toDenseMatrix().cast<Complex>() *
                     sd.eigenvectors.adjoint();
    CHECK(max_abs(Matrix(rebuilt - h.entries)) <= 1e-12 * std::max(1.0, max_abs(h.entries)));
}

TEST_CASE("evolve_nonhermitian pure decay and unitary limit", "[linalg]") {
    SECTION("1x1 pure decay") {
        const double gamma = 0.8;
        Matrix l(1, 1);
        l(0, 0) = Complex(0.0, -0.5 * gamma);
        Vector a0(1);
        a0 << 1.0;
        for (double t : {0.0, 1.0, 3.5}) {
            NonHermitianEvolution r = evolve_nonhermitian(l, a0, t);
            CHECK_FALSE(r.used_fallback);
            CHECK(std::abs(r.amplitudes(0) - std::exp(-0.5 * gamma * t)) <= 1e-12);
        }
    }
    SECTION("Hermitian L preserves length") {
        std::mt19937_64 eng = substream(16, 0);
        Matrix l = random_hermitian(3, eng);
        Vector a0 = random_state_vector(3, eng);
        NonHermitianEvolution r = evolve_nonhermitian(l, a0, 2.2);
        CHECK(std::abs(r.amplitudes.norm() - 1.0) <= 1e-12);
    }
    SECTION("negative time rejected") {
        Matrix l = Matrix::Identity(2, 2);
        CHECK_THROWS_AS(evolve_nonhermitian(l, Vector::Ones(2), -1.0), std::invalid_argument);
    }
}

TEST_CASE("evolve_nonhermitian norm non-increasing for PSD decay part", "[linalg]") {
    std::mt19937_64 eng = substream(17, 0);
    for (int rep = 0; rep < 5; ++rep) {
        Matrix m = random_hermitian(3, eng);
        Matrix b = random_complex_matrix(3, eng);
        Matrix gm = b * b.adjoint();  // PSD
        Matrix l = m - 0.5 * iunit * gm;
        Vector a0 = random_state_vector(3, eng);
        NonHermitianPropagator prop(l);
        double prev = 1.0;
        for (double t : {0.0, 0.5, 1.5, 4.0}) {
            const double n = prop.apply(a0, t).amplitudes.norm();
            CHECK(n <= prev + 1e-10);
            prev = n;
        }
    }
}

TEST_CASE("evolve_nonhermitian falls back for ill-conditioned eigenbases", "[linalg]") {
    Matrix l(2, 2);  // Jordan block: exp(-iLt) = [[1, -it], [0, 1]]
    l << 0.0, 1.0, 0.0, 0.0;
    Vector a0(2);
    a0 << 0.3, 0.7;
    NonHermitianEvolution r = evolve_nonhermitian(l, a0, 1.7);
    CHECK(r.used_fallback);
    CHECK(r.eigenvector_condition > 1e8);
    Vector want(2);
    want << a0(0) - iunit * 1.7 * a0(1), a0(1);
    CHECK(max_abs(Vector(r.amplitudes - want)) <= 1e-12);
    // cross-check the fallback against the RK4 oracle as well
    Vector oracle = rk4_evolve(l, a0, 1.7, 4000);
    CHECK(max_abs(Vector(r.amplitudes - oracle)) <= 1e-10);
}

TEST_CASE("partial trace of a product state factorizes", "[linalg]") {
    std::mt19937_64 eng = substream(18, 0);
    Matrix rho_s = random_density_entries(2, eng);
    Matrix rho_b = random_density_entries(5, eng);
    Matrix prod = Eigen::kroneckerProduct(rho_s, rho_b);
    DensityMatrix reduced = partial_trace_bath(DensityMatrix(prod), 2, 5);
    CHECK(max_abs(Matrix(reduced.entries - rho_s)) <= 1e-13);
}

TEST_CASE("partial trace of a Bell state is maximally mixed", "[linalg]") {
    Vector bell = Vector::Zero(4);
    bell(0) = 1.0 / std::sqrt(2.0);
    bell(3) = 1.0 / std::sqrt(2.0);
    DensityMatrix rho(bell * bell.adjoint());
    DensityMatrix reduced = partial_trace_bath(rho, 2, 2);
    CHECK(max_abs(Matrix(reduced.entries - 0.5 * Matrix::Identity(2, 2))) <= 1e-15);
}

TEST_CASE("partial trace preserves trace and validity on random densities", "[linalg]") {
    std::mt19937_64 eng = substream(19, 0);
    for (int rep = 0; rep < 100; ++rep) {
        DensityMatrix rho(random_density_entries(12, eng));
        DensityMatrix red = partial_trace_bath(rho, 3, 4);  // ctor re-validates
        CHECK(std::abs(red.entries.trace() - Complex(1.0)) <= 1e-12);
    }
}

TEST_CASE("partial trace is linear", "[linalg]") {
    std::mt19937_64 eng = substream(20, 0);
    Matrix r1 = random_density_entries(6, eng);
    Matrix r2 = random_density_entries(6, eng);
    const double a = 0.3;
    Matrix lhs = partial_trace_bath_raw(a * r1 + (1.0 - a) * r2, 2, 3);
    Matrix rhs = a * partial_trace_bath_raw(r1, 2, 3) + (1.0 - a) * partial_trace_bath_raw(r2, 2, 3);
    CHECK(max_abs(Matrix(lhs - rhs)) <= 1e-14);
    CHECK_THROWS_AS(partial_trace_bath_raw(r1, 4, 3), std::invalid_argument);
}
