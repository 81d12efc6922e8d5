// linalg.hpp — operators, states, density matrices, evolution, partial trace
#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace qtb {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex iunit{0.0, 1.0};

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& a) {
    return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

// Combined tensor-product entry budget. Guards against accidentally
// requesting a supersystem too large for dense storage.
inline constexpr std::size_t default_entry_cap = std::size_t(1) << 20;

// ---- operator ----

struct Operator {
    Matrix entries;
    bool hermitian_hint = false;

    explicit Operator(Matrix m, bool hermitian = false)
        : entries(std::move(m)), hermitian_hint(hermitian) {
        if (entries.rows() != entries.cols())
            throw std::invalid_argument("Operator: matrix must be square");
        if (entries.rows() < 1)
            throw std::invalid_argument("Operator: dimension must be >= 1");
        if (!entries.allFinite())
            throw std::invalid_argument("Operator: entries must be finite");
        if (hermitian_hint) {
            const double scale = max_abs(entries);
            const double resid = max_abs(Matrix(entries - entries.adjoint()));
            if (resid > 1e-12 * scale)
                throw std::invalid_argument(
                    "Operator: hermitian_hint set but max|A - A^dag| = " +
                    std::to_string(resid) + " exceeds 1e-12 * max|A|");
        }
    }

    Eigen::Index dim() const { return entries.rows(); }

    static Operator identity(Eigen::Index n) {
        return Operator(Matrix::Identity(n, n), true);
    }

    static Operator diagonal(const RealVector& d) {
        Matrix m = Matrix::Zero(d.size(), d.size());
        for (Eigen::Index i = 0; i < d.size(); ++i) m(i, i) = d(i);
        return Operator(std::move(m), true);
    }
};

// ---- pure state ----

struct PureState {
    Vector amplitudes;

    // Rejects vectors that are not already unit norm; use normalized() to
    // rescale an arbitrary nonzero vector.
    explicit PureState(Vector v) : amplitudes(std::move(v)) {
        if (amplitudes.size() < 1)
            throw std::invalid_argument("PureState: dimension must be >= 1");
        if (!amplitudes.allFinite())
            throw std::invalid_argument("PureState: amplitudes must be finite");
        const double n = amplitudes.norm();
        if (std::abs(n - 1.0) > 1e-12)
            throw std::invalid_argument("PureState: norm deviates from 1 by " +
                                        std::to_string(std::abs(n - 1.0)));
    }

    static PureState normalized(Vector v) {
        const double n = v.norm();
        if (!(n > 0.0) || !std::isfinite(n))
            throw std::invalid_argument("PureState: cannot normalize zero or non-finite vector");
        v /= n;
        // renormalize once more; for badly scaled inputs a single division can
        // miss the 1e-12 window
        v /= v.norm();
        return PureState(std::move(v));
    }

    static PureState basis(Eigen::Index dim, Eigen::Index i) {
        if (i < 0 || i >= dim)
            throw std::out_of_range("PureState::basis: index out of range");
        Vector v = Vector::Zero(dim);
        v(i) = 1.0;
        return PureState(std::move(v));
    }

    Eigen::Index dim() const { return amplitudes.size(); }
};

// ---- density matrix ----

struct DensityMatrix {
    Matrix entries;

    explicit DensityMatrix(Matrix m) : entries(std::move(m)) {
        if (entries.rows() != entries.cols() || entries.rows() < 1)
            throw std::invalid_argument("DensityMatrix: matrix must be square, dim >= 1");
        if (!entries.allFinite())
            throw std::invalid_argument("DensityMatrix: entries must be finite");
        const double scale = max_abs(entries);
        const double herm = max_abs(Matrix(entries - entries.adjoint()));
        if (herm > 1e-12 * scale)
            throw std::invalid_argument("DensityMatrix: not Hermitian, residual " +
                                        std::to_string(herm));
        const double tr_dev = std::abs(entries.trace() - Complex(1.0));
        if (tr_dev > 1e-12)
            throw std::invalid_argument("DensityMatrix: trace deviates from 1 by " +
                                        std::to_string(tr_dev));
        Eigen::SelfAdjointEigenSolver<Matrix> es(
            Matrix(0.5 * (entries + entries.adjoint())), Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("DensityMatrix: eigenvalue check failed to converge");
        if (es.eigenvalues().minCoeff() < -1e-10)
            throw std::invalid_argument("DensityMatrix: negative eigenvalue " +
                                        std::to_string(es.eigenvalues().minCoeff()));
    }

    Eigen::Index dim() const { return entries.rows(); }

    static DensityMatrix pure(const PureState& psi) {
        return DensityMatrix(psi.amplitudes * psi.amplitudes.adjoint());
    }
};

// ---- tensor products ----
//
// Index convention is system-major throughout: the flat index of
// (system s, bath beta) is s * dim_B + beta.

inline Operator tensor(const Operator& a, const Operator& b,
                       std::size_t entry_cap = default_entry_cap) {
    const std::size_t d = std::size_t(a.dim()) * std::size_t(b.dim());
    if (d * d > entry_cap)
        throw std::length_error("tensor: result would hold " + std::to_string(d * d) +
                                " entries, cap is " + std::to_string(entry_cap));
    Matrix m = Eigen::kroneckerProduct(a.entries, b.entries);
    return Operator(std::move(m), a.hermitian_hint && b.hermitian_hint);
}

inline PureState tensor(const PureState& a, const PureState& b) {
    Vector v(a.dim() * b.dim());
    for (Eigen::Index i = 0; i < a.dim(); ++i)
        for (Eigen::Index j = 0; j < b.dim(); ++j)
            v(i * b.dim() + j) = a.amplitudes(i) * b.amplitudes(j);
    return PureState::normalized(std::move(v));
}

// ---- unitary evolution ----
//
// psi(t) = exp(-i H t) psi(0), via the spectral decomposition of H.
// Units: hbar = 1, so t carries inverse energy.

struct SpectralDecomposition {
    RealVector eigenvalues;
    Matrix eigenvectors;

    explicit SpectralDecomposition(const Operator& h) {
        if (!h.hermitian_hint)
            throw std::invalid_argument("SpectralDecomposition: operator must be Hermitian");
        Eigen::SelfAdjointEigenSolver<Matrix> es(h.entries);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("SpectralDecomposition: eigensolver did not converge");
        eigenvalues = es.eigenvalues();
        eigenvectors = es.eigenvectors();
    }

    Vector apply(const Vector& psi0, double t) const {
        if (psi0.size() != eigenvectors.rows())
            throw std::invalid_argument("SpectralDecomposition::apply: dimension mismatch");
        Vector c = eigenvectors.adjoint() * psi0;
        for (Eigen::Index k = 0; k < c.size(); ++k)
            c(k) *= std::exp(-iunit * eigenvalues(k) * t);
        return eigenvectors * c;
    }
};

inline PureState evolve(const Operator& h, const PureState& psi0, double t) {
    SpectralDecomposition sd(h);
    return PureState::normalized(sd.apply(psi0.amplitudes, t));
}

// ---- non-Hermitian evolution ----
//
// a(t) = exp(-i L t) a(0) for an effective (generally non-Hermitian) L.
// Diagonalization is used when the eigenvector basis is well conditioned;
// otherwise a scaled Taylor expansion with repeated squaring takes over and
// the result carries a warning flag.

struct NonHermitianEvolution {
    Vector amplitudes;
    bool used_fallback = false;
    double eigenvector_condition = 0.0;
};

namespace detail {

inline Matrix expm_taylor(const Matrix& m) {
    const double norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    double scale = 1.0;
    while (norm1 * scale > 0.5) {
        scale *= 0.5;
        ++squarings;
        if (squarings > 64)
            throw std::runtime_error("expm_taylor: norm too large to scale");
    }
    const Eigen::Index n = m.rows();
    Matrix a = scale * m;
    Matrix result = Matrix::Identity(n, n);
    Matrix term = Matrix::Identity(n, n);
    for (int k = 1; k <= 20; ++k) {
        term = (term * a) / double(k);
        result += term;
    }
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

}  // namespace detail

struct NonHermitianPropagator {
    Matrix generator;
    Vector eigenvalues;
    Matrix eigenvectors;
    Eigen::PartialPivLU<Matrix> basis_lu;
    double eigenvector_condition = 0.0;
    bool diagonalizable = false;

    explicit NonHermitianPropagator(Matrix l) : generator(std::move(l)) {
        if (generator.rows() != generator.cols() || generator.rows() < 1)
            throw std::invalid_argument("NonHermitianPropagator: matrix must be square");
        if (!generator.allFinite())
            throw std::invalid_argument("NonHermitianPropagator: entries must be finite");
        Eigen::ComplexEigenSolver<Matrix> es(generator, true);
        if (es.info() == Eigen::Success) {
            Eigen::JacobiSVD<Matrix> svd(es.eigenvectors());
            const double smin = svd.singularValues().minCoeff();
            const double smax = svd.singularValues().maxCoeff();
            eigenvector_condition = smin > 0.0 ? smax / smin
                                               : std::numeric_limits<double>::infinity();
            if (eigenvector_condition <= 1e8) {
                eigenvalues = es.eigenvalues();
                eigenvectors = es.eigenvectors();
                basis_lu.compute(eigenvectors);
                diagonalizable = true;
            }
        } else {
            eigenvector_condition = std::numeric_limits<double>::infinity();
        }
    }

    NonHermitianEvolution apply(const Vector& a0, double t) const {
        if (t < 0.0)
            throw std::invalid_argument("NonHermitianPropagator::apply: t must be >= 0");
        if (a0.size() != generator.rows())
            throw std::invalid_argument("NonHermitianPropagator::apply: dimension mismatch");
        NonHermitianEvolution out;
        out.eigenvector_condition = eigenvector_condition;
        if (diagonalizable) {
            Vector c = basis_lu.solve(a0);
            for (Eigen::Index k = 0; k < c.size(); ++k)
                c(k) *= std::exp(-iunit * eigenvalues(k) * t);
            out.amplitudes = eigenvectors * c;
        } else {
            out.used_fallback = true;
            out.amplitudes = detail::expm_taylor(Matrix(-iunit * t * generator)) * a0;
        }
        return out;
    }
};

inline NonHermitianEvolution evolve_nonhermitian(const Matrix& l, const Vector& a0, double t) {
    return NonHermitianPropagator(l).apply(a0, t);
}

// ---- partial trace over the bath ----

inline Matrix partial_trace_bath_raw(const Matrix& rho, Eigen::Index dim_s, Eigen::Index dim_b) {
    if (dim_s < 1 || dim_b < 1 || rho.rows() != dim_s * dim_b || rho.cols() != rho.rows())
        throw std::invalid_argument("partial_trace_bath: dimensions do not factor the input");
    Matrix out = Matrix::Zero(dim_s, dim_s);
    for (Eigen::Index s = 0; s < dim_s; ++s)
        for (Eigen::Index q = 0; q < dim_s; ++q) {
            Complex acc(0.0, 0.0);
            for (Eigen::Index b = 0; b < dim_b; ++b)
                acc += rho(s * dim_b + b, q * dim_b + b);
            out(s, q) = acc;
        }
    return out;
}

inline DensityMatrix partial_trace_bath(const DensityMatrix& rho, Eigen::Index dim_s,
                                        Eigen::Index dim_b) {
    return DensityMatrix(partial_trace_bath_raw(rho.entries, dim_s, dim_b));
}

}  // namespace qtb
