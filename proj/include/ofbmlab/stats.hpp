#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ofbmlab/approx.hpp"
#include "ofbmlab/linop.hpp"
#include "ofbmlab/parallel.hpp"
#include "ofbmlab/rng.hpp"

namespace ofbmlab {

struct VerificationReport {
    std::string test;
    double statistic = 0.0;
    double threshold = 0.0;
    bool pass = false;
    double standard_error = 0.0;
    long replicates = 0;
    std::string config_hash;
    std::string note;
};

struct CovEstimate {
    Matrix cov;         // unbiased sample covariance of path values at t
    Matrix se;          // entrywise delete-one jackknife standard errors
    long replicates = 0;
};

inline CovEstimate cov_estimate(const PathEnsemble& ens, double t) {
    if (ens.replicates < 2) throw std::invalid_argument("cov_estimate: need at least two replicates");
    const Eigen::MatrixXd v = ens.values_at(t);
    const long r = v.rows();
    const int d = static_cast<int>(v.cols());

    const Eigen::VectorXd s1 = v.colwise().sum();
    Eigen::MatrixXd s2 = v.transpose() * v;

    const Eigen::VectorXd mean = s1 / static_cast<double>(r);
    CovEstimate out;
    out.replicates = r;
    out.cov = (s2 - static_cast<double>(r) * mean * mean.transpose()) / static_cast<double>(r - 1);
    out.se = Matrix::Constant(d, d, std::numeric_limits<double>::quiet_NaN());
    if (r < 3) return out;

    // Jackknife from the shared sums: dropping row i costs O(d^2).
    Eigen::MatrixXd jk_mean = Eigen::MatrixXd::Zero(d, d);
    std::vector<Eigen::MatrixXd> jk(static_cast<std::size_t>(r));
    for (long i = 0; i < r; ++i) {
        const Eigen::VectorXd vi = v.row(i).transpose();
        const Eigen::VectorXd mean_i = (s1 - vi) / static_cast<double>(r - 1);
        Eigen::MatrixXd cov_i = (s2 - vi * vi.transpose() -
                                 static_cast<double>(r - 1) * mean_i * mean_i.transpose()) /
                                static_cast<double>(r - 2);
        jk_mean += cov_i;
        jk[static_cast<std::size_t>(i)] = std::move(cov_i);
    }
    jk_mean /= static_cast<double>(r);
    Eigen::MatrixXd var = Eigen::MatrixXd::Zero(d, d);
    for (const auto& cov_i : jk) var += (cov_i - jk_mean).cwiseProduct(cov_i - jk_mean);
    out.se = (var * (static_cast<double>(r - 1) / static_cast<double>(r))).cwiseSqrt();
    return out;
}

struct MomentRatio {
    double ratio = 0.0;               // MC estimate of E|v|^(2a) / |E[v v^T]|^a
    double gaussian_reference = 0.0;  // same ratio for a Gaussian with the fitted covariance
    double standard_error = 0.0;      // MC error of the numerator only
    double alpha = 1.0;
    bool degenerate = false;
};

inline MomentRatio moment_ratio(const PathEnsemble& ens, double t, double alpha) {
    if (alpha < 1.0) throw std::invalid_argument("moment_ratio: alpha must be >= 1");
    if (ens.replicates < 2) throw std::invalid_argument("moment_ratio: need at least two replicates");
    const Eigen::MatrixXd v = ens.values_at(t);
    const long r = v.rows();
    const int d = static_cast<int>(v.cols());

    const Matrix m2 = (v.transpose() * v) / static_cast<double>(r);  // uncentered: the paths are mean-zero
    const double opn = operator_norm(m2);

    MomentRatio out;
    out.alpha = alpha;
    if (opn <= 1e-300) {
        out.degenerate = true;
        out.ratio = std::numeric_limits<double>::infinity();
        return out;
    }
    const double denom = std::pow(opn, alpha);
    long double acc = 0.0L, acc2 = 0.0L;
    for (long i = 0; i < r; ++i) {
        const double term = std::pow(v.row(i).squaredNorm(), alpha) / denom;
        acc += term;
        acc2 += static_cast<long double>(term) * term;
    }
    out.ratio = static_cast<double>(acc / r);
    const double var = std::max(0.0, static_cast<double>(acc2 / r) - out.ratio * out.ratio);
    out.standard_error = std::sqrt(var / static_cast<double>(r));

    // Gaussian comparison constant: closed form for integer alpha in {1, 2},
    // fixed-seed MC otherwise (deterministic reports either way).
    if (alpha == 1.0) {
        out.gaussian_reference = m2.trace() / opn;
    } else if (alpha == 2.0) {
        const double tr = m2.trace();
        out.gaussian_reference = (tr * tr + 2.0 * (m2 * m2).trace()) / (opn * opn);
    } else {
        Eigen::SelfAdjointEigenSolver<Matrix> es(m2);
        const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
        NormalStream rng(0x0FB31AB5EEDULL);
        const long mc = 100000;
        long double gacc = 0.0L;
        for (long i = 0; i < mc; ++i) {
            double q = 0.0;
            for (int k = 0; k < d; ++k) {
                const double z = rng.next();
                q += lam(k) * z * z;
            }
            gacc += std::pow(q, alpha);
        }
        out.gaussian_reference = static_cast<double>(gacc / mc) / denom;
    }
    return out;
}

struct TightnessFit {
    double slope = 0.0;
    double intercept = 0.0;
    double ci_half_width = 0.0;  // 1.96 * OLS slope standard error
    double alpha = 1.0;
    std::vector<double> log_dt;
    std::vector<double> log_moment;

    // Pass rule: slope >= 2 a (lambda_D - delta) minus the CI half width.
    bool passes(double lambda_min, double delta = 0.05) const {
        return slope >= 2.0 * alpha * (lambda_min - delta) - ci_half_width;
    }
};

// Least-squares slope of log E|Z_N(t) - Z_N(s)|^(2a) against log(t - s).
inline TightnessFit tightness_exponent(const PathEnsemble& ens,
                                       const std::vector<std::pair<double, double>>& pairs, double alpha) {
    if (pairs.size() < 3) throw std::invalid_argument("tightness_exponent: need at least three pairs");
    TightnessFit fit;
    fit.alpha = alpha;
    for (const auto& [s, t] : pairs) {
        if (!(s < t)) throw std::invalid_argument("tightness_exponent: pairs must satisfy s < t");
        if (static_cast<double>(ens.meta.n) * (t - s) < 1.0 - 1e-9)
            throw std::invalid_argument("tightness_exponent: need N (t - s) >= 1");
        const std::size_t si = ens.time_index(s), ti = ens.time_index(t);
        long double acc = 0.0L;
        for (long r = 0; r < ens.replicates; ++r) {
            const Eigen::VectorXd diff = ens.at(r, ti) - ens.at(r, si);
            acc += std::pow(diff.squaredNorm(), alpha);
        }
        fit.log_dt.push_back(std::log(t - s));
        fit.log_moment.push_back(std::log(static_cast<double>(acc / ens.replicates)));
    }
    const std::size_t k = pairs.size();
    const double xbar = std::accumulate(fit.log_dt.begin(), fit.log_dt.end(), 0.0) / k;
    const double ybar = std::accumulate(fit.log_moment.begin(), fit.log_moment.end(), 0.0) / k;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sxx += (fit.log_dt[i] - xbar) * (fit.log_dt[i] - xbar);
        sxy += (fit.log_dt[i] - xbar) * (fit.log_moment[i] - ybar);
    }
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * xbar;
    double rss = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double resid = fit.log_moment[i] - (fit.intercept + fit.slope * fit.log_dt[i]);
        rss += resid * resid;
    }
    fit.ci_half_width = 1.96 * std::sqrt(rss / static_cast<double>(k - 2) / sxx);
    return fit;
}

// Rows are samples; maps x -> C^{-1/2} x with the symmetric inverse square
// root of the stated reference covariance.
inline Eigen::MatrixXd whiten(const Eigen::MatrixXd& samples, const Matrix& reference) {
    if (reference.rows() != reference.cols() || reference.rows() != samples.cols())
        throw std::invalid_argument("whiten: reference must be square and match sample dimension");
    if (reference.isIdentity(0.0)) return samples;
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (reference + reference.transpose()));
    if (es.info() != Eigen::Success) throw std::runtime_error("whiten: eigensolve failed");
    const Eigen::VectorXd lam = es.eigenvalues();
    if (lam.minCoeff() <= 1e-10 * std::max(1.0, lam.maxCoeff()))
        throw std::runtime_error("whiten: reference is singular beyond tolerance");
    const Matrix inv_sqrt =
        es.eigenvectors() * lam.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    return samples * inv_sqrt;  // symmetric, so right-multiplying rows applies it to each sample
}

struct EnergyResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int permutations = 0;
};

// Two-sample energy statistic (V-statistic form, >= 0, zero iff the samples
// coincide) with a label-permutation p-value.
inline EnergyResult energy_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                    int permutations = 200, std::uint64_t seed = 0xE7E26U,
                                    int threads = 0) {
    if (a.cols() != b.cols()) throw std::invalid_argument("energy_distance: dimension mismatch");
    if (a.rows() < 1 || b.rows() < 1) throw std::invalid_argument("energy_distance: empty sample set");
    if (permutations < 0) throw std::invalid_argument("energy_distance: negative permutation count");
    const long na = a.rows(), nb = b.rows(), n = na + nb;

    Eigen::MatrixXd pooled(n, a.cols());
    pooled.topRows(na) = a;
    pooled.bottomRows(nb) = b;
    std::vector<double> dist(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    for (long i = 0; i < n; ++i)
        for (long j = i + 1; j < n; ++j) {
            const double dv = (pooled.row(i) - pooled.row(j)).norm();
            dist[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] = dv;
            dist[static_cast<std::size_t>(j) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] = dv;
        }
    std::vector<double> row_sum(static_cast<std::size_t>(n), 0.0);
    long double total = 0.0L;
    for (long i = 0; i < n; ++i) {
        long double s = 0.0L;
        for (long j = 0; j < n; ++j) s += dist[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)];
        row_sum[static_cast<std::size_t>(i)] = static_cast<double>(s);
        total += s;
    }

    // statistic from a subset A of size na: S_aa directly, S_ab via row sums.
    auto stat_for = [&](const std::vector<long>& group_a) {
        long double s_aa = 0.0L, rows_a = 0.0L;
        for (std::size_t ii = 0; ii < group_a.size(); ++ii) {
            rows_a += row_sum[static_cast<std::size_t>(group_a[ii])];
            const double* row = &dist[static_cast<std::size_t>(group_a[ii]) * static_cast<std::size_t>(n)];
            for (std::size_t jj = 0; jj < group_a.size(); ++jj) s_aa += row[group_a[jj]];
        }
        const long double s_ab = rows_a - s_aa;
        const long double s_bb = total - 2.0L * s_ab - s_aa;
        return static_cast<double>(2.0L * s_ab / (static_cast<long double>(na) * nb) -
                                   s_aa / (static_cast<long double>(na) * na) -
                                   s_bb / (static_cast<long double>(nb) * nb));
    };

    std::vector<long> identity_group(static_cast<std::size_t>(na));
    for (long i = 0; i < na; ++i) identity_group[static_cast<std::size_t>(i)] = i;

    EnergyResult out;
    out.statistic = stat_for(identity_group);
    out.permutations = permutations;
    if (permutations == 0) {
        out.p_value = 1.0;
        return out;
    }

    std::vector<int> exceed(static_cast<std::size_t>(permutations), 0);
    parallel_for(permutations, threads, [&](long p) {
        CounterRng rng(derive_stream_seed(seed, static_cast<std::uint64_t>(p)));
        std::vector<long> idx(static_cast<std::size_t>(n));
        for (long i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
        for (long i = n - 1; i > 0; --i) {
            const long j = static_cast<long>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
            std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        }
        std::vector<long> group(idx.begin(), idx.begin() + na);
        if (stat_for(group) >= out.statistic) exceed[static_cast<std::size_t>(p)] = 1;
    });
    const int count = std::accumulate(exceed.begin(), exceed.end(), 0);
    out.p_value = (1.0 + count) / (1.0 + permutations);
    return out;
}

}  // namespace ofbmlab
