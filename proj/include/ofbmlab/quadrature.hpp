#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace ofbmlab {

// Gauss-Hermite rule for the standard normal weight phi(x) = exp(-x^2/2)/sqrt(2*pi),
// normalized so that sum(w) = 1 and sum(w_i f(x_i)) ~ E[f(Z)].
//
// Nodes come from Golub-Welsch on the probabilists' Jacobi matrix, then each is
// polished by Newton steps on He_n in extended precision; weights use
//   w_i = n! / (n^2 * He_{n-1}(x_i)^2).
// The polish matters: downstream checks compare moments as large as 10! at
// absolute tolerances near one ulp of the result.
struct GaussHermiteRule {
    std::vector<long double> nodes;
    std::vector<long double> weights;

    double node(std::size_t i) const { return static_cast<double>(nodes[i]); }
    double weight(std::size_t i) const { return static_cast<double>(weights[i]); }
    std::size_t size() const { return nodes.size(); }
};

namespace detail {

inline long double hermite_he_ld(int l, long double x) {
    long double h0 = 1.0L, h1 = x;
    if (l == 0) return h0;
    for (int k = 1; k < l; ++k) {
        const long double h2 = x * h1 - static_cast<long double>(k) * h0;
        h0 = h1;
        h1 = h2;
    }
    return h1;
}

}  // namespace detail

inline GaussHermiteRule gauss_hermite(int n) {
    if (n < 1) throw std::domain_error("gauss_hermite: need at least one node");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = std::sqrt(static_cast<double>(k));
        jacobi(k, k - 1) = b;
        jacobi(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    if (es.info() != Eigen::Success) throw std::runtime_error("gauss_hermite: eigensolve failed");

    GaussHermiteRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));

    long double log_nfact = 0.0L;
    for (int k = 2; k <= n; ++k) log_nfact += std::log(static_cast<long double>(k));

    for (int i = 0; i < n; ++i) {
        long double x = static_cast<long double>(es.eigenvalues()(i));
        for (int it = 0; it < 4; ++it) {
            const long double f = detail::hermite_he_ld(n, x);
            const long double df = static_cast<long double>(n) * detail::hermite_he_ld(n - 1, x);
            if (df == 0.0L) break;
            x -= f / df;
        }
        const long double hm1 = detail::hermite_he_ld(n - 1, x);
        const long double log_w = log_nfact
            - 2.0L * std::log(static_cast<long double>(n))
            - 2.0L * std::log(std::abs(hm1));
        rule.nodes[static_cast<std::size_t>(i)] = x;
        rule.weights[static_cast<std::size_t>(i)] = std::exp(log_w);
    }
    return rule;
}

// Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    std::size_t size() const { return nodes.size(); }
};

inline GaussLegendreRule gauss_legendre(int n) {
    if (n < 1) throw std::domain_error("gauss_legendre: need at least one node");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double kk = static_cast<double>(k);
        const double b = kk / std::sqrt(4.0 * kk * kk - 1.0);
        jacobi(k, k - 1) = b;
        jacobi(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    if (es.info() != Eigen::Success) throw std::runtime_error("gauss_legendre: eigensolve failed");

    GaussLegendreRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        // Newton polish on P_n via the recurrence.
        double x = es.eigenvalues()(i);
        for (int it = 0; it < 3; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 1; k < n; ++k) {
                const double kk = static_cast<double>(k);
                const double p2 = ((2.0 * kk + 1.0) * x * p1 - kk * p0) / (kk + 1.0);
                p0 = p1;
                p1 = p2;
            }
            const double dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            if (dp == 0.0) break;
            x -= p1 / dp;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 1; k < n; ++k) {
            const double kk = static_cast<double>(k);
            const double p2 = ((2.0 * kk + 1.0) * x * p1 - kk * p0) / (kk + 1.0);
            p0 = p1;
            p1 = p2;
        }
        const double dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
        rule.nodes[static_cast<std::size_t>(i)] = x;
        rule.weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

}  // namespace ofbmlab
