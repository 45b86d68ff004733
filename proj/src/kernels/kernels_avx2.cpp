#include "kernels_impl.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace switchvi::kernels::detail {

namespace {

constexpr std::size_t kLanes = 4;

double horizontal_max(__m256d v) {
    alignas(32) double lanes[kLanes];
    _mm256_store_pd(lanes, v);
    return std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
}

} // namespace

// Operand order of the min/max intrinsics mirrors std::min/std::max so ties and
// signed zeros resolve exactly as in the scalar reference.

void stencil_apply_avx2(const double* weights, std::size_t stride, const std::ptrdiff_t* deltas, std::size_t slots,
                        const double* v, double* out, std::size_t begin, std::size_t end) {
    std::size_t n = begin;
    for (; n + kLanes <= end; n += kLanes) {
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t s = 0; s < slots; ++s) {
            const __m256d w = _mm256_loadu_pd(weights + s * stride + n);
            const __m256d x = _mm256_loadu_pd(v + static_cast<std::ptrdiff_t>(n) + deltas[s]);
            acc = _mm256_add_pd(acc, _mm256_mul_pd(w, x));
        }
        _mm256_storeu_pd(out + n, acc);
    }
    stencil_apply_scalar(weights, stride, deltas, slots, v, out, n, end);
}

void multiply_accumulate_avx2(double* out, const double* w, const double* v, std::size_t n) {
    std::size_t k = 0;
    for (; k + kLanes <= n; k += kLanes) {
        const __m256d o = _mm256_loadu_pd(out + k);
        const __m256d p = _mm256_mul_pd(_mm256_loadu_pd(w + k), _mm256_loadu_pd(v + k));
        _mm256_storeu_pd(out + k, _mm256_add_pd(o, p));
    }
    multiply_accumulate_scalar(out + k, w + k, v + k, n - k);
}

void clamp_band_avx2(const double* lo, const double* hi, const double* v, double* out, std::size_t n) {
    std::size_t k = 0;
    for (; k + kLanes <= n; k += kLanes) {
        const __m256d capped = _mm256_min_pd(_mm256_loadu_pd(v + k), _mm256_loadu_pd(hi + k));
        _mm256_storeu_pd(out + k, _mm256_max_pd(capped, _mm256_loadu_pd(lo + k)));
    }
    clamp_band_scalar(lo + k, hi + k, v + k, out + k, n - k);
}

double max_excess_avx2(const double* a, const double* b, std::size_t n) {
    __m256d worst = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + kLanes <= n; k += kLanes) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
        worst = _mm256_max_pd(d, worst);
    }
    return std::max(horizontal_max(worst), max_excess_scalar(a + k, b + k, n - k));
}

double max_abs_diff_avx2(const double* a, const double* b, std::size_t n) {
    const __m256d sign = _mm256_set1_pd(-0.0);
    __m256d worst = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + kLanes <= n; k += kLanes) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
        worst = _mm256_max_pd(_mm256_andnot_pd(sign, d), worst);
    }
    return std::max(horizontal_max(worst), max_abs_diff_scalar(a + k, b + k, n - k));
}

void complementarity_avx2(const double* v, const double* lo, const double* hi, const double* pde, double* out,
                          std::size_t n, bool min_first) {
    std::size_t k = 0;
    for (; k + kLanes <= n; k += kLanes) {
        const __m256d x = _mm256_loadu_pd(v + k);
        const __m256d below = _mm256_sub_pd(x, _mm256_loadu_pd(lo + k));
        const __m256d above = _mm256_sub_pd(x, _mm256_loadu_pd(hi + k));
        const __m256d r = _mm256_loadu_pd(pde + k);
        __m256d res;
        if (min_first) {
            res = _mm256_min_pd(_mm256_max_pd(r, above), below);
        } else {
            res = _mm256_max_pd(_mm256_min_pd(r, below), above);
        }
        _mm256_storeu_pd(out + k, res);
    }
    complementarity_scalar(v + k, lo + k, hi + k, pde + k, out + k, n - k, min_first);
}

} // namespace switchvi::kernels::detail
