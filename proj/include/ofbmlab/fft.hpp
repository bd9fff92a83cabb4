#pragma once

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace ofbmlab {

namespace detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Twiddle table for one transform size, shared across calls.
inline const std::vector<std::complex<double>>& twiddles(std::size_t n) {
    static std::mutex mu;
    static std::map<std::size_t, std::unique_ptr<std::vector<std::complex<double>>>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[n];
    if (!slot) {
        auto tab = std::make_unique<std::vector<std::complex<double>>>(n / 2);
        const double step = -2.0 * 3.141592653589793238462643383279 / static_cast<double>(n);
        for (std::size_t k = 0; k < n / 2; ++k)
            (*tab)[k] = std::polar(1.0, step * static_cast<double>(k));
        slot = std::move(tab);
    }
    return *slot;
}

}  // namespace detail

// In-place iterative radix-2 DIT transform, forward convention
//   X[j] = sum_k x[k] exp(-2*pi*i*j*k/n).
// Size must be a power of two. Unnormalized.
inline void fft_inplace(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    if (n <= 1) return;
    if (!detail::is_pow2(n)) throw std::invalid_argument("fft_inplace: size must be a power of two");

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const auto& w = detail::twiddles(n);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t stride = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> t = a[i + k + len / 2] * w[k * stride];
                a[i + k + len / 2] = a[i + k] - t;
                a[i + k] += t;
            }
        }
    }
}

// Inverse transform, unnormalized (caller divides by n if needed).
inline void ifft_inplace(std::vector<std::complex<double>>& a) {
    for (auto& z : a) z = std::conj(z);
    fft_inplace(a);
    for (auto& z : a) z = std::conj(z);
}

inline std::size_t next_pow2(std::size_t n) {
    std::size_t m = 1;
    while (m < n) m <<= 1;
    return m;
}

}  // namespace ofbmlab
