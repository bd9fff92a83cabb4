#pragma once

#include <Eigen/Dense>

#include <bit>
#include <complex>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ofbmlab/corr.hpp"
#include "ofbmlab/fft.hpp"
#include "ofbmlab/rng.hpp"

namespace ofbmlab {

enum class SynthesisMethod { circulant, cholesky };

struct GaussianSequence {
    Eigen::MatrixXd values;  // N x d, row i = X_{i+1}
    std::string model_id;
    std::uint64_t seed = 0;
    SynthesisMethod method = SynthesisMethod::circulant;
    double clipped_mass_fraction = 0.0;

    long n() const { return values.rows(); }
    int dim() const { return static_cast<int>(values.cols()); }
};

// Factorizes the target covariance once per (model, N); sample() is then a
// cheap, seed-deterministic draw. Exact in distribution: the block circulant
// extension c(k) = r(k)^T (k <= M/2), c(M-k) = r(k) is diagonalized by the
// DFT into Hermitian blocks Lambda(j); with B(j) B(j)* = Lambda(j) and
// complex standard normals W(j),
//   y(k) = M^{-1/2} sum_j exp(+2 pi i j k / M) B(j) W(j)
// has Re y(0..N-1) distributed exactly as the model (up to clipped mass).
class GaussianSynthesizer {
public:
    GaussianSynthesizer(const CorrelationModel& model, long n) : model_id_(model.id()), n_(n), dim_(model.dim()) {
        if (n < 1) throw std::invalid_argument("GaussianSynthesizer: N must be >= 1");
        if (n_ == 1 || !try_circulant(model)) build_cholesky(model);
    }

    long n() const { return n_; }
    int dim() const { return dim_; }
    SynthesisMethod method() const { return method_; }
    double clipped_mass_fraction() const { return clipped_mass_; }

    GaussianSequence sample(std::uint64_t seed) const {
        GaussianSequence out;
        out.model_id = model_id_;
        out.seed = seed;
        out.method = method_;
        out.clipped_mass_fraction = clipped_mass_;
        out.values = method_ == SynthesisMethod::circulant ? sample_circulant(seed) : sample_cholesky(seed);
        return out;
    }

private:
    bool try_circulant(const CorrelationModel& model) {
        const std::size_t m = next_pow2(static_cast<std::size_t>(2 * n_ - 1));
        const long half = static_cast<long>(m) / 2;
        const auto lags = model.lags_upto(half);
        const int d = dim_;

        // Channel-wise DFT of the block circulant first column.
        std::vector<Eigen::MatrixXcd> lambda(m, Eigen::MatrixXcd::Zero(d, d));
        std::vector<std::complex<double>> chan(m);
        for (int p = 0; p < d; ++p) {
            for (int q = 0; q < d; ++q) {
                for (std::size_t k = 0; k < m; ++k) {
                    const long kk = static_cast<long>(k);
                    double v;
                    if (kk < half) {
                        v = lags[static_cast<std::size_t>(kk)](q, p);  // r(k)^T
                    } else if (kk == half) {
                        v = 0.5 * (lags[static_cast<std::size_t>(half)](q, p) + lags[static_cast<std::size_t>(half)](p, q));
                    } else {
                        v = lags[static_cast<std::size_t>(m - k)](p, q);  // r(M-k)
                    }
                    chan[k] = v;
                }
                fft_inplace(chan);
                for (std::size_t j = 0; j < m; ++j) lambda[j](p, q) = chan[j];
            }
        }

        // Hermitian factor per frequency, clipping roundoff negatives.
        factors_.assign(m, Eigen::MatrixXcd());
        double lam_max = 0.0, lam_min = 0.0;
        long double clipped = 0.0L, total = 0.0L;
        std::vector<Eigen::VectorXd> eigvals(m);
        std::vector<Eigen::MatrixXcd> eigvecs(m);
        for (std::size_t j = 0; j < m; ++j) {
            const Eigen::MatrixXcd herm = 0.5 * (lambda[j] + lambda[j].adjoint());
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm);
            if (es.info() != Eigen::Success) return false;
            eigvals[j] = es.eigenvalues();
            eigvecs[j] = es.eigenvectors();
            lam_max = std::max(lam_max, es.eigenvalues().maxCoeff());
            lam_min = std::min(lam_min, es.eigenvalues().minCoeff());
            for (int i = 0; i < d; ++i) total += std::abs(es.eigenvalues()(i));
        }
        if (lam_min < -1e-8 * std::max(1.0, lam_max)) return false;  // not embeddable; fall back

        for (std::size_t j = 0; j < m; ++j) {
            Eigen::VectorXd sq(d);
            for (int i = 0; i < d; ++i) {
                const double lam = eigvals[j](i);
                if (lam < 0.0) {
                    clipped += -lam;
                    sq(i) = 0.0;
                } else {
                    sq(i) = std::sqrt(lam);
                }
            }
            factors_[j] = eigvecs[j] * sq.asDiagonal();
        }
        clipped_mass_ = total > 0.0L ? static_cast<double>(clipped / total) : 0.0;
        if (clipped_mass_ > 1e-6)
            throw std::runtime_error("GaussianSynthesizer: clipped spectral mass exceeds 1e-6 of total");
        m_ = m;
        method_ = SynthesisMethod::circulant;
        return true;
    }

    void build_cholesky(const CorrelationModel& model) {
        const long dn = n_ * dim_;
        if (dn > 8192)
            throw std::runtime_error("GaussianSynthesizer: embedding failed and N too large for dense Cholesky");
        const auto lags = model.lags_upto(n_ - 1);
        Eigen::MatrixXd cov(dn, dn);
        for (long i = 0; i < n_; ++i) {
            for (long j = 0; j < n_; ++j) {
                const Matrix block = j >= i ? lags[static_cast<std::size_t>(j - i)]
                                            : lags[static_cast<std::size_t>(i - j)].transpose();
                cov.block(i * dim_, j * dim_, dim_, dim_) = block;
            }
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
        if (ldlt.info() != Eigen::Success)
            throw std::invalid_argument("GaussianSynthesizer: covariance is not positive semi-definite");
        Eigen::VectorXd dvec = ldlt.vectorD();
        const double dmax = dvec.maxCoeff();
        for (long i = 0; i < dn; ++i) {
            if (dvec(i) < -1e-8 * std::max(1.0, dmax))
                throw std::invalid_argument("GaussianSynthesizer: covariance is not positive semi-definite");
            dvec(i) = dvec(i) > 0.0 ? std::sqrt(dvec(i)) : 0.0;
        }
        // cov = P^T L D L^T P  =>  transform = P^T L sqrt(D).
        Eigen::MatrixXd t = ldlt.matrixL();
        t = t * dvec.asDiagonal();
        chol_transform_ = ldlt.transpositionsP().transpose() * t;
        method_ = SynthesisMethod::cholesky;
    }

    Eigen::MatrixXd sample_circulant(std::uint64_t seed) const {
        NormalStream rng(seed);
        const int d = dim_;
        std::vector<std::vector<std::complex<double>>> buf(
            static_cast<std::size_t>(d), std::vector<std::complex<double>>(m_));
        Eigen::VectorXcd w(d), y(d);
        for (std::size_t j = 0; j < m_; ++j) {
            for (int p = 0; p < d; ++p) {
                const double re = rng.next();
                const double im = rng.next();
                w(p) = std::complex<double>(re, im);
            }
            y = factors_[j] * w;
            for (int p = 0; p < d; ++p) buf[static_cast<std::size_t>(p)][j] = y(p);
        }
        const double scale = 1.0 / std::sqrt(static_cast<double>(m_));
        Eigen::MatrixXd values(n_, d);
        for (int p = 0; p < d; ++p) {
            ifft_inplace(buf[static_cast<std::size_t>(p)]);
            for (long k = 0; k < n_; ++k)
                values(k, p) = buf[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)].real() * scale;
        }
        return values;
    }

    Eigen::MatrixXd sample_cholesky(std::uint64_t seed) const {
        NormalStream rng(seed);
        const long dn = n_ * dim_;
        Eigen::VectorXd z(dn);
        for (long i = 0; i < dn; ++i) z(i) = rng.next();
        const Eigen::VectorXd x = chol_transform_ * z;
        Eigen::MatrixXd values(n_, dim_);
        for (long i = 0; i < n_; ++i)
            for (int p = 0; p < dim_; ++p) values(i, p) = x(i * dim_ + p);
        return values;
    }

    std::string model_id_;
    long n_;
    int dim_;
    SynthesisMethod method_ = SynthesisMethod::circulant;
    double clipped_mass_ = 0.0;
    std::size_t m_ = 0;
    std::vector<Eigen::MatrixXcd> factors_;
    Eigen::MatrixXd chol_transform_;
};

// One-shot synthesis; ensembles should hold a GaussianSynthesizer instead.
inline GaussianSequence synthesize(const CorrelationModel& model, long n, std::uint64_t seed) {
    return GaussianSynthesizer(model, n).sample(seed);
}

// (1/(N-lag)) sum_i X_i X_{i+lag}^T, the moment estimator of r(lag).
inline Matrix empirical_corr(const GaussianSequence& seq, long lag) {
    const long n = seq.n();
    if (lag < 0 || lag >= n) throw std::domain_error("empirical_corr: lag out of range");
    const int d = seq.dim();
    Matrix acc = Matrix::Zero(d, d);
    for (long i = 0; i + lag < n; ++i)
        acc += seq.values.row(i).transpose() * seq.values.row(i + lag);
    return acc / static_cast<double>(n - lag);
}

// Binary dump: 16-byte header {magic "OFBMSEQ1", u32 N, u32 d}, then
// little-endian f64, row-major (time x coordinate).
inline void write_sequence_binary(std::ostream& os, const GaussianSequence& seq) {
    static_assert(std::endian::native == std::endian::little,
                  "sequence dump assumes a little-endian host");
    const char magic[8] = {'O', 'F', 'B', 'M', 'S', 'E', 'Q', '1'};
    os.write(magic, 8);
    const std::uint32_t n = static_cast<std::uint32_t>(seq.n());
    const std::uint32_t d = static_cast<std::uint32_t>(seq.dim());
    os.write(reinterpret_cast<const char*>(&n), 4);
    os.write(reinterpret_cast<const char*>(&d), 4);
    for (long i = 0; i < seq.n(); ++i) {
        for (int p = 0; p < seq.dim(); ++p) {
            const double v = seq.values(i, p);
            os.write(reinterpret_cast<const char*>(&v), 8);
        }
    }
}

inline GaussianSequence read_sequence_binary(std::istream& is) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, "OFBMSEQ1", 8) != 0)
        throw std::runtime_error("read_sequence_binary: bad magic");
    std::uint32_t n = 0, d = 0;
    is.read(reinterpret_cast<char*>(&n), 4);
    is.read(reinterpret_cast<char*>(&d), 4);
    if (!is || n == 0 || d == 0) throw std::runtime_error("read_sequence_binary: bad header");
    GaussianSequence seq;
    seq.values.resize(n, d);
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t p = 0; p < d; ++p) {
            double v;
            is.read(reinterpret_cast<char*>(&v), 8);
            if (!is) throw std::runtime_error("read_sequence_binary: truncated payload");
            seq.values(i, p) = v;
        }
    }
    return seq;
}

}  // namespace ofbmlab
