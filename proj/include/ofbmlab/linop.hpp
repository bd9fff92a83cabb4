#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace ofbmlab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Min / max real parts over the spectrum of a real operator.
struct SpectralBounds {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
};

namespace detail {

inline void require_square_finite(const Matrix& a, const char* who) {
    if (a.rows() < 1 || a.rows() != a.cols())
        throw std::invalid_argument(std::string(who) + ": matrix must be square and nonempty");
    if (!a.allFinite())
        throw std::invalid_argument(std::string(who) + ": matrix has non-finite entries");
}

}  // namespace detail

// Adjoint of a real operator: the transpose.
inline Matrix adjoint(const Matrix& a) {
    detail::require_square_finite(a, "adjoint");
    return a.transpose();
}

// c^D = exp((log c) D), evaluated by scaling-and-squaring on the exponential
// series: the argument is halved until its Frobenius norm is below 1/2, the
// series is summed to machine tolerance, and the result squared back up.
// No eigendecomposition, so non-diagonalizable D is fine.
inline Matrix mat_pow(double c, const Matrix& d) {
    detail::require_square_finite(d, "mat_pow");
    if (!(c > 0.0) || !std::isfinite(c))
        throw std::domain_error("mat_pow: base must be positive and finite");

    const long n = d.rows();
    Matrix b = std::log(c) * d;

    int squarings = 0;
    double norm = b.norm();
    while (norm > 0.5 && squarings < 64) {
        b *= 0.5;
        norm *= 0.5;
        ++squarings;
    }

    Matrix sum = Matrix::Identity(n, n);
    Matrix term = Matrix::Identity(n, n);
    for (int k = 1; k <= 40; ++k) {
        term = (term * b) / static_cast<double>(k);
        sum += term;
        if (term.norm() <= 1e-18 * sum.norm()) break;
    }
    for (int k = 0; k < squarings; ++k) sum = sum * sum;
    return sum;
}

// Operator norm ||A|| = max_{|x|=1} |Ax|_2, i.e. the largest singular value,
// computed from the top eigenvalue of A^T A (d stays small by configuration).
inline double operator_norm(const Matrix& a) {
    detail::require_square_finite(a, "operator_norm");
    Eigen::SelfAdjointEigenSolver<Matrix> es(a.transpose() * a);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("operator_norm: eigensolve failed");
    const double top = es.eigenvalues().maxCoeff();
    return top <= 0.0 ? 0.0 : std::sqrt(top);
}

// lambda_A = min Re sigma(A), Lambda_A = max Re sigma(A). Complex pairs are
// handled by the dense (real Schur based) eigensolver; only real parts are
// exposed.
inline SpectralBounds spectral_bounds(const Matrix& a) {
    detail::require_square_finite(a, "spectral_bounds");
    Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("spectral_bounds: eigensolve failed");
    SpectralBounds out;
    out.lambda_min = es.eigenvalues().real().minCoeff();
    out.lambda_max = es.eigenvalues().real().maxCoeff();
    return out;
}

}  // namespace ofbmlab
