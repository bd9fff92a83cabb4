#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ofbmlab/quadrature.hpp"

namespace ofbmlab {

// Probabilists' Hermite polynomial He_l by the three-term recurrence
//   He_{l+1}(x) = x He_l(x) - l He_{l-1}(x),  He_0 = 1, He_1 = x.
inline double hermite_eval(int l, double x) {
    if (l < 0) throw std::domain_error("hermite_eval: degree must be nonnegative");
    if (!std::isfinite(x)) throw std::invalid_argument("hermite_eval: x must be finite");
    double h0 = 1.0, h1 = x;
    if (l == 0) return h0;
    for (int k = 1; k < l; ++k) {
        const double h2 = x * h1 - static_cast<double>(k) * h0;
        h0 = h1;
        h1 = h2;
    }
    return h1;
}

// Multi-index L = (l_1, ..., l_d); its order is l_1 + ... + l_d.
using MultiIndex = std::vector<int>;

inline int multi_index_order(const MultiIndex& l) {
    int sum = 0;
    for (int v : l) {
        if (v < 0) throw std::domain_error("multi_index_order: entries must be nonnegative");
        sum += v;
    }
    return sum;
}

inline long double factorial_product(const MultiIndex& l) {
    long double p = 1.0L;
    for (int v : l)
        for (int k = 2; k <= v; ++k) p *= static_cast<long double>(k);
    return p;
}

// e_L-style tensor basis vector: coordinate `coord` (0-based) carries
// prod_n He_{l_n}(x_n), every other coordinate is zero. coord = 0 is the
// paper's e_L, coord = 1 its tilde companion, extended to d slots.
inline Eigen::VectorXd basis_eval(const MultiIndex& l, const Eigen::VectorXd& x, int coord) {
    const int d = static_cast<int>(x.size());
    if (static_cast<int>(l.size()) != d)
        throw std::invalid_argument("basis_eval: multi-index size must match vector dimension");
    if (coord < 0 || coord >= d) throw std::domain_error("basis_eval: coordinate out of range");
    double prod = 1.0;
    for (int n = 0; n < d; ++n) prod *= hermite_eval(l[static_cast<std::size_t>(n)], x(n));
    Eigen::VectorXd out = Eigen::VectorXd::Zero(d);
    out(coord) = prod;
    return out;
}

// Finite tensor-Hermite expansion of a vector functional G : R^d -> R^d.
// entries maps L to the d coefficients (slot k multiplies prod He_{l_n} in
// output coordinate k). For d = 2, slots 0 and 1 hold C_L and its tilde twin.
class HermiteCoefficientTable {
public:
    HermiteCoefficientTable(int dim, int max_order) : dim_(dim), max_order_(max_order) {
        if (dim < 1) throw std::invalid_argument("HermiteCoefficientTable: dim must be positive");
        if (max_order < 0) throw std::invalid_argument("HermiteCoefficientTable: max_order must be nonnegative");
    }

    int dim() const { return dim_; }
    int max_order() const { return max_order_; }

    void set(const MultiIndex& l, int slot, double value) {
        check_index(l, slot);
        auto it = entries_.find(l);
        if (it == entries_.end()) {
            if (value == 0.0) return;
            it = entries_.emplace(l, Eigen::VectorXd::Zero(dim_)).first;
        }
        it->second(slot) = value;
    }

    double coeff(const MultiIndex& l, int slot) const {
        check_index(l, slot);
        const auto it = entries_.find(l);
        return it == entries_.end() ? 0.0 : it->second(slot);
    }

    const std::map<MultiIndex, Eigen::VectorXd>& entries() const { return entries_; }

    // C_G = sum_L (sum_k coeff_k(L)^2) l_1! ... l_d!; also E|G|^2 by Parseval
    // when the table is G's exact expansion.
    double weighted_norm_sq() const {
        long double acc = 0.0L;
        for (const auto& [l, v] : entries_) {
            long double s = 0.0L;
            for (int k = 0; k < dim_; ++k) s += static_cast<long double>(v(k)) * v(k);
            acc += s * factorial_product(l);
        }
        return static_cast<double>(acc);
    }

    // Sum of the expansion restricted to from_order <= |L| <= to_order.
    Eigen::VectorXd evaluate_band(const Eigen::VectorXd& x, int from_order, int to_order) const {
        if (static_cast<int>(x.size()) != dim_)
            throw std::invalid_argument("evaluate_band: dimension mismatch");
        if (from_order < 0 || from_order > to_order || to_order > max_order_)
            throw std::domain_error("evaluate_band: band outside table");
        // He values per coordinate up to max_order, shared by all indices.
        Eigen::MatrixXd he(max_order_ + 1, dim_);
        for (int n = 0; n < dim_; ++n) {
            he(0, n) = 1.0;
            if (max_order_ >= 1) he(1, n) = x(n);
            for (int k = 1; k < max_order_; ++k)
                he(k + 1, n) = x(n) * he(k, n) - static_cast<double>(k) * he(k - 1, n);
        }
        Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_);
        for (const auto& [l, v] : entries_) {
            const int order = multi_index_order(l);
            if (order < from_order || order > to_order) continue;
            double prod = 1.0;
            for (int n = 0; n < dim_; ++n) prod *= he(l[static_cast<std::size_t>(n)], n);
            out += prod * v;
        }
        return out;
    }

private:
    void check_index(const MultiIndex& l, int slot) const {
        if (static_cast<int>(l.size()) != dim_)
            throw std::invalid_argument("HermiteCoefficientTable: multi-index size mismatch");
        if (slot < 0 || slot >= dim_)
            throw std::domain_error("HermiteCoefficientTable: slot out of range");
        if (multi_index_order(l) > max_order_)
            throw std::domain_error("HermiteCoefficientTable: index order beyond max_order");
    }

    int dim_;
    int max_order_;
    std::map<MultiIndex, Eigen::VectorXd> entries_;
};

// A nonlinear functional G : R^d -> R^d, either a closed-form evaluator or a
// coefficient table read as an exact finite expansion.
class NonlinearFunctional {
public:
    static NonlinearFunctional from_table(HermiteCoefficientTable table) {
        NonlinearFunctional g;
        g.dim_ = table.dim();
        g.table_ = std::make_shared<HermiteCoefficientTable>(std::move(table));
        return g;
    }

    static NonlinearFunctional from_function(int dim, std::function<Eigen::VectorXd(const Eigen::VectorXd&)> fn) {
        if (dim < 1) throw std::invalid_argument("NonlinearFunctional: dim must be positive");
        NonlinearFunctional g;
        g.dim_ = dim;
        g.fn_ = std::move(fn);
        return g;
    }

    int dim() const { return dim_; }
    bool has_table() const { return table_ != nullptr; }

    const HermiteCoefficientTable& table() const {
        if (!table_) throw std::logic_error("NonlinearFunctional: no table attached");
        return *table_;
    }

    Eigen::VectorXd operator()(const Eigen::VectorXd& x) const {
        if (table_) return table_->evaluate_band(x, 0, table_->max_order());
        Eigen::VectorXd out = fn_(x);
        if (static_cast<int>(out.size()) != dim_)
            throw std::runtime_error("NonlinearFunctional: evaluator returned wrong dimension");
        return out;
    }

private:
    NonlinearFunctional() = default;
    int dim_ = 0;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> fn_;
    std::shared_ptr<const HermiteCoefficientTable> table_;
};

// Identity functional as a table: G(x) = x, one order-1 entry per slot.
inline HermiteCoefficientTable identity_table(int dim) {
    HermiteCoefficientTable t(dim, 1);
    for (int k = 0; k < dim; ++k) {
        MultiIndex l(static_cast<std::size_t>(dim), 0);
        l[static_cast<std::size_t>(k)] = 1;
        t.set(l, k, 1.0);
    }
    return t;
}

namespace detail {

inline void enumerate_indices(int dim, int max_order, std::vector<MultiIndex>& out) {
    MultiIndex cur(static_cast<std::size_t>(dim), 0);
    std::function<void(int, int)> rec = [&](int pos, int remaining) {
        if (pos == dim - 1) {
            for (int v = 0; v <= remaining; ++v) {
                cur[static_cast<std::size_t>(pos)] = v;
                out.push_back(cur);
            }
            cur[static_cast<std::size_t>(pos)] = 0;
            return;
        }
        for (int v = 0; v <= remaining; ++v) {
            cur[static_cast<std::size_t>(pos)] = v;
            rec(pos + 1, remaining - v);
        }
        cur[static_cast<std::size_t>(pos)] = 0;
    };
    rec(0, max_order);
}

}  // namespace detail

// Projects G onto the tensor Hermite basis by full tensor Gauss-Hermite
// quadrature: coeff(L, k) = E[G_k(X) prod_n He_{l_n}(X^n)] / prod_n l_n!.
// Exact for polynomial G of joint degree < 2*quad_nodes - max_order.
inline HermiteCoefficientTable extract_coeffs(const NonlinearFunctional& g, int max_order,
                                              int quad_nodes = 64) {
    if (max_order < 1) throw std::invalid_argument("extract_coeffs: max_order must be >= 1");
    if (quad_nodes < max_order + 1)
        throw std::invalid_argument("extract_coeffs: need quad_nodes >= max_order + 1");
    const int d = g.dim();
    const GaussHermiteRule rule = gauss_hermite(quad_nodes);
    const std::size_t nn = rule.size();

    // He_l at every node, per degree.
    std::vector<std::vector<double>> he(nn, std::vector<double>(static_cast<std::size_t>(max_order) + 1));
    for (std::size_t i = 0; i < nn; ++i) {
        const double x = rule.node(i);
        he[i][0] = 1.0;
        if (max_order >= 1) he[i][1] = x;
        for (int k = 1; k < max_order; ++k)
            he[i][static_cast<std::size_t>(k) + 1] =
                x * he[i][static_cast<std::size_t>(k)] - static_cast<double>(k) * he[i][static_cast<std::size_t>(k) - 1];
    }

    std::vector<MultiIndex> indices;
    detail::enumerate_indices(d, max_order, indices);
    std::vector<std::vector<long double>> acc(indices.size(),
                                              std::vector<long double>(static_cast<std::size_t>(d), 0.0L));

    // Walk the tensor grid once, accumulating every coefficient.
    std::vector<std::size_t> grid(static_cast<std::size_t>(d), 0);
    Eigen::VectorXd x(d);
    for (;;) {
        long double w = 1.0L;
        for (int n = 0; n < d; ++n) {
            w *= rule.weights[grid[static_cast<std::size_t>(n)]];
            x(n) = rule.node(grid[static_cast<std::size_t>(n)]);
        }
        const Eigen::VectorXd gx = g(x);
        if (!gx.allFinite())
            throw std::runtime_error("extract_coeffs: functional returned non-finite values at a quadrature node");
        for (std::size_t j = 0; j < indices.size(); ++j) {
            long double prod = w;
            for (int n = 0; n < d; ++n)
                prod *= he[grid[static_cast<std::size_t>(n)]][static_cast<std::size_t>(indices[j][static_cast<std::size_t>(n)])];
            for (int k = 0; k < d; ++k)
                acc[j][static_cast<std::size_t>(k)] += prod * static_cast<long double>(gx(k));
        }
        int pos = 0;
        while (pos < d) {
            if (++grid[static_cast<std::size_t>(pos)] < nn) break;
            grid[static_cast<std::size_t>(pos)] = 0;
            ++pos;
        }
        if (pos == d) break;
    }

    HermiteCoefficientTable out(d, max_order);
    for (std::size_t j = 0; j < indices.size(); ++j) {
        const long double fact = factorial_product(indices[j]);
        for (int k = 0; k < d; ++k) {
            const double v = static_cast<double>(acc[j][static_cast<std::size_t>(k)] / fact);
            if (v != 0.0) out.set(indices[j], k, v);
        }
    }
    return out;
}

// Default tolerance separating parity zeros from quadrature noise.
inline double default_rank_tol(const HermiteCoefficientTable& table) {
    return 1e-8 * (1.0 + std::sqrt(std::max(0.0, table.weighted_norm_sq())));
}

// Hermite rank: smallest order r >= 1 with a coefficient above tol.
// Requires the order-0 (mean) coefficients to sit below tol already.
inline int hermite_rank(const HermiteCoefficientTable& table, double tol) {
    for (const auto& [l, v] : table.entries()) {
        if (multi_index_order(l) == 0 && v.cwiseAbs().maxCoeff() > tol)
            throw std::invalid_argument("hermite_rank: functional is not mean-zero at this tolerance");
    }
    int best = -1;
    for (const auto& [l, v] : table.entries()) {
        const int order = multi_index_order(l);
        if (order < 1) continue;
        if (v.cwiseAbs().maxCoeff() > tol && (best < 0 || order < best)) best = order;
    }
    if (best < 0)
        throw std::runtime_error("hermite_rank: rank undetermined at this truncation");
    return best;
}

inline int hermite_rank(const HermiteCoefficientTable& table) {
    return hermite_rank(table, default_rank_tol(table));
}

// Order-band evaluation, free-function form.
inline Eigen::VectorXd evaluate_truncated(const HermiteCoefficientTable& table, const Eigen::VectorXd& x,
                                          int from_order, int to_order) {
    return table.evaluate_band(x, from_order, to_order);
}

// Quadrature E[G_k(X) ...] helpers used by validation code.

// E|G(X)|^2 for independent standard normal coordinates.
inline double l2_norm_sq(const NonlinearFunctional& g, int quad_nodes = 64) {
    const int d = g.dim();
    const GaussHermiteRule rule = gauss_hermite(quad_nodes);
    const std::size_t nn = rule.size();
    std::vector<std::size_t> grid(static_cast<std::size_t>(d), 0);
    Eigen::VectorXd x(d);
    long double acc = 0.0L;
    for (;;) {
        long double w = 1.0L;
        for (int n = 0; n < d; ++n) {
            w *= rule.weights[grid[static_cast<std::size_t>(n)]];
            x(n) = rule.node(grid[static_cast<std::size_t>(n)]);
        }
        const Eigen::VectorXd gx = g(x);
        acc += w * static_cast<long double>(gx.squaredNorm());
        int pos = 0;
        while (pos < d) {
            if (++grid[static_cast<std::size_t>(pos)] < nn) break;
            grid[static_cast<std::size_t>(pos)] = 0;
            ++pos;
        }
        if (pos == d) break;
    }
    return static_cast<double>(acc);
}

// max_{k,l <= kmax} |quad E[He_k(Z) He_l(Z)] - delta_{kl} k!|, accumulated in
// extended precision; the diagonal values reach 10! so double accumulation
// would already cost more than the tolerance.
inline double hermite_orthogonality_max_error(int kmax, int quad_nodes = 64) {
    const GaussHermiteRule rule = gauss_hermite(quad_nodes);
    const std::size_t nn = rule.size();
    std::vector<std::vector<long double>> he(nn, std::vector<long double>(static_cast<std::size_t>(kmax) + 1));
    for (std::size_t i = 0; i < nn; ++i) {
        const long double x = rule.nodes[i];
        he[i][0] = 1.0L;
        if (kmax >= 1) he[i][1] = x;
        for (int k = 1; k < kmax; ++k)
            he[i][static_cast<std::size_t>(k) + 1] =
                x * he[i][static_cast<std::size_t>(k)] - static_cast<long double>(k) * he[i][static_cast<std::size_t>(k) - 1];
    }
    long double worst = 0.0L;
    for (int k = 0; k <= kmax; ++k) {
        for (int l = k; l <= kmax; ++l) {
            long double s = 0.0L;
            for (std::size_t i = 0; i < nn; ++i) s += rule.weights[i] * he[i][static_cast<std::size_t>(k)] * he[i][static_cast<std::size_t>(l)];
            long double expect = 0.0L;
            if (k == l) {
                expect = 1.0L;
                for (int j = 2; j <= k; ++j) expect *= static_cast<long double>(j);
            }
            const long double err = std::abs(s - expect);
            if (err > worst) worst = err;
        }
    }
    return static_cast<double>(worst);
}

}  // namespace ofbmlab
