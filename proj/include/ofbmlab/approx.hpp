#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ofbmlab/corr.hpp"
#include "ofbmlab/gaussgen.hpp"
#include "ofbmlab/hermite.hpp"
#include "ofbmlab/linop.hpp"
#include "ofbmlab/parallel.hpp"

namespace ofbmlab {

enum class Band { full, head, tail };

inline const char* band_name(Band b) {
    switch (b) {
        case Band::full: return "full";
        case Band::head: return "head";
        case Band::tail: return "tail";
    }
    return "?";
}

struct EnsembleMeta {
    long n = 0;
    Matrix d_exponent;
    Band band = Band::full;
    int band_from = 0;
    int band_to = 0;
    std::string model_id;
    std::string g_id;
    std::uint64_t master_seed = 0;
    std::vector<std::uint64_t> seeds;
};

// Replicated cadlag step paths on a grid in [0, 1]; every path starts at the
// zero vector (empty-sum convention) and is constant between consecutive
// multiples of 1/N.
struct PathEnsemble {
    std::vector<double> times;
    long replicates = 0;
    int dim = 0;
    std::vector<double> data;  // [replicate][time][coordinate]
    EnsembleMeta meta;

    double value(long rep, std::size_t ti, int coord) const {
        return data[(static_cast<std::size_t>(rep) * times.size() + ti) * static_cast<std::size_t>(dim) +
                    static_cast<std::size_t>(coord)];
    }

    Eigen::VectorXd at(long rep, std::size_t ti) const {
        Eigen::VectorXd v(dim);
        for (int k = 0; k < dim; ++k) v(k) = value(rep, ti, k);
        return v;
    }

    std::size_t time_index(double t) const {
        for (std::size_t i = 0; i < times.size(); ++i)
            if (std::abs(times[i] - t) <= 1e-12) return i;
        throw std::domain_error("PathEnsemble: time not on the stored grid");
    }

    // All replicate values at one grid time, as an R x d matrix.
    Eigen::MatrixXd values_at(double t) const {
        const std::size_t ti = time_index(t);
        Eigen::MatrixXd out(replicates, dim);
        for (long r = 0; r < replicates; ++r)
            for (int k = 0; k < dim; ++k) out(r, k) = value(r, ti, k);
        return out;
    }
};

namespace detail {

inline void require_times(const std::vector<double>& times) {
    if (times.empty()) throw std::invalid_argument("path: empty time grid");
    for (double t : times)
        if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("path: times must lie in [0, 1]");
}

inline void require_mean_zero(const NonlinearFunctional& g) {
    if (g.has_table()) {
        const auto& table = g.table();
        const double tol = default_rank_tol(table);
        for (const auto& [l, v] : table.entries())
            if (multi_index_order(l) == 0 && v.cwiseAbs().maxCoeff() > tol)
                throw std::invalid_argument("path: functional is not mean-zero (order-0 coefficient)");
        return;
    }
    // Closed-form evaluator: cheap quadrature estimate of the mean.
    const auto mean_table = extract_coeffs(g, 1, 24);
    const MultiIndex zero(static_cast<std::size_t>(g.dim()), 0);
    for (int k = 0; k < g.dim(); ++k)
        if (std::abs(mean_table.coeff(zero, k)) > 1e-6 * (1.0 + std::sqrt(l2_norm_sq(g, 24))))
            throw std::invalid_argument("path: functional is not mean-zero (quadrature mean)");
}

// Shared core: value at t is N^{-D} sum_{i <= floor(N t)} f(X_i).
template <typename RowFn>
Eigen::MatrixXd normalized_partial_sums(const GaussianSequence& seq, const Matrix& d_exponent,
                                        const std::vector<double>& times, RowFn&& f) {
    require_times(times);
    const long n = seq.n();
    const int d = seq.dim();
    if (d_exponent.rows() != d) throw std::invalid_argument("path: exponent dimension mismatch");
    const Matrix norm = mat_pow(static_cast<double>(n), Matrix(-d_exponent));

    std::vector<long> cuts(times.size());
    for (std::size_t i = 0; i < times.size(); ++i)
        cuts[i] = static_cast<long>(std::floor(static_cast<double>(n) * times[i]));

    std::vector<std::size_t> order(times.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cuts[a] < cuts[b]; });

    Eigen::MatrixXd out(static_cast<long>(times.size()), d);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(d);
    long i = 0;
    for (std::size_t oi : order) {
        const long cut = std::min(cuts[oi], n);
        for (; i < cut; ++i) acc += f(seq.values.row(i).transpose());
        out.row(static_cast<long>(oi)) = (norm * acc).transpose();
    }
    return out;
}

}  // namespace detail

// Z_N(t) = N^{-D} sum_{i=1..floor(Nt)} G(X_i), as a T x d matrix over the grid.
inline Eigen::MatrixXd partial_sum_path(const NonlinearFunctional& g, const GaussianSequence& seq,
                                        const Matrix& d_exponent, const std::vector<double>& times) {
    if (g.dim() != seq.dim()) throw std::invalid_argument("partial_sum_path: dimension mismatch");
    detail::require_mean_zero(g);
    return detail::normalized_partial_sums(seq, d_exponent, times,
                                           [&](const Eigen::VectorXd& x) { return g(x); });
}

// Z_{N,m}(t): the order-m band of the expansion only.
inline Eigen::MatrixXd reduced_path(const HermiteCoefficientTable& table, int m, const GaussianSequence& seq,
                                    const Matrix& d_exponent, const std::vector<double>& times) {
    if (m < 1 || m > table.max_order()) throw std::domain_error("reduced_path: band outside table");
    if (table.dim() != seq.dim()) throw std::invalid_argument("reduced_path: dimension mismatch");
    return detail::normalized_partial_sums(seq, d_exponent, times, [&](const Eigen::VectorXd& x) {
        return table.evaluate_band(x, m, m);
    });
}

// Z~_{N,m}(t): orders m+1 .. max_order. A table with nothing above order m
// has an identically zero tail.
inline Eigen::MatrixXd tail_path(const HermiteCoefficientTable& table, int m, const GaussianSequence& seq,
                                 const Matrix& d_exponent, const std::vector<double>& times) {
    if (m < 1) throw std::domain_error("tail_path: m must be >= 1");
    if (table.dim() != seq.dim()) throw std::invalid_argument("tail_path: dimension mismatch");
    detail::require_times(times);
    if (m >= table.max_order())
        return Eigen::MatrixXd::Zero(static_cast<long>(times.size()), table.dim());
    return detail::normalized_partial_sums(seq, d_exponent, times, [&](const Eigen::VectorXd& x) {
        return table.evaluate_band(x, m + 1, table.max_order());
    });
}

struct EnsembleSpec {
    NonlinearFunctional g;
    CorrelationModel model;
    Matrix d_exponent;
    long n = 0;
    std::vector<double> times;
    long replicates = 1;
    std::uint64_t master_seed = 0;
    Band band = Band::full;
    int band_order = -1;  // head/tail band order m; -1 means hermite_rank(table)
    int threads = 0;
    std::string g_id = "g";
};

// Monte Carlo driver: independent replicates via seeds derived from the
// master seed, so the result is identical for any thread count.
inline PathEnsemble ensemble(const EnsembleSpec& spec) {
    if (spec.replicates < 1) throw std::invalid_argument("ensemble: need at least one replicate");
    if (spec.band != Band::full && !spec.g.has_table())
        throw std::invalid_argument("ensemble: band selection requires a coefficient table");

    int m = spec.band_order;
    if (spec.band != Band::full && m < 0) m = hermite_rank(spec.g.table());
    if (spec.band == Band::full) detail::require_mean_zero(spec.g);

    const GaussianSynthesizer synth(spec.model, spec.n);

    PathEnsemble out;
    out.times = spec.times;
    out.replicates = spec.replicates;
    out.dim = spec.g.dim();
    out.data.assign(static_cast<std::size_t>(spec.replicates) * spec.times.size() * static_cast<std::size_t>(out.dim), 0.0);
    out.meta.n = spec.n;
    out.meta.d_exponent = spec.d_exponent;
    out.meta.band = spec.band;
    out.meta.band_from = spec.band == Band::full ? 0 : (spec.band == Band::head ? m : m + 1);
    out.meta.band_to = spec.band == Band::full
                           ? (spec.g.has_table() ? spec.g.table().max_order() : -1)
                           : (spec.band == Band::head ? m : spec.g.table().max_order());
    out.meta.model_id = spec.model.id();
    out.meta.g_id = spec.g_id;
    out.meta.master_seed = spec.master_seed;
    out.meta.seeds.resize(static_cast<std::size_t>(spec.replicates));
    for (long r = 0; r < spec.replicates; ++r)
        out.meta.seeds[static_cast<std::size_t>(r)] = derive_stream_seed(spec.master_seed, static_cast<std::uint64_t>(r));

    parallel_for(spec.replicates, spec.threads, [&](long r) {
        const GaussianSequence seq = synth.sample(out.meta.seeds[static_cast<std::size_t>(r)]);
        Eigen::MatrixXd path;
        switch (spec.band) {
            case Band::full:
                path = detail::normalized_partial_sums(seq, spec.d_exponent, spec.times,
                                                       [&](const Eigen::VectorXd& x) { return spec.g(x); });
                break;
            case Band::head:
                path = reduced_path(spec.g.table(), m, seq, spec.d_exponent, spec.times);
                break;
            case Band::tail:
                path = tail_path(spec.g.table(), m, seq, spec.d_exponent, spec.times);
                break;
        }
        for (std::size_t ti = 0; ti < spec.times.size(); ++ti)
            for (int k = 0; k < out.dim; ++k)
                out.data[(static_cast<std::size_t>(r) * spec.times.size() + ti) * static_cast<std::size_t>(out.dim) +
                         static_cast<std::size_t>(k)] = path(static_cast<long>(ti), k);
    });
    return out;
}

// CSV export: replicate, t, x1..xd. "%.17g" keeps round trips exact and the
// byte stream reproducible.
inline void write_ensemble_csv(std::ostream& os, const PathEnsemble& ens) {
    os << "replicate,t";
    for (int k = 1; k <= ens.dim; ++k) os << ",x" << k;
    os << "\n";
    char buf[64];
    for (long r = 0; r < ens.replicates; ++r) {
        for (std::size_t ti = 0; ti < ens.times.size(); ++ti) {
            os << r;
            std::snprintf(buf, sizeof(buf), ",%.17g", ens.times[ti]);
            os << buf;
            for (int k = 0; k < ens.dim; ++k) {
                std::snprintf(buf, sizeof(buf), ",%.17g", ens.value(r, ti, k));
                os << buf;
            }
            os << "\n";
        }
    }
}

}  // namespace ofbmlab
