#include "kernels_impl.hpp"

#include <algorithm>
#include <cmath>

namespace switchvi::kernels::detail {

void stencil_apply_scalar(const double* weights, std::size_t stride, const std::ptrdiff_t* deltas, std::size_t slots,
                          const double* v, double* out, std::size_t begin, std::size_t end) {
    for (std::size_t n = begin; n < end; ++n) {
        double acc = 0.0;
        for (std::size_t s = 0; s < slots; ++s) {
            acc = acc + weights[s * stride + n] * v[static_cast<std::ptrdiff_t>(n) + deltas[s]];
        }
        out[n] = acc;
    }
}

void multiply_accumulate_scalar(double* out, const double* w, const double* v, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
        out[k] = out[k] + w[k] * v[k];
    }
}

void clamp_band_scalar(const double* lo, const double* hi, const double* v, double* out, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
        out[k] = std::max(lo[k], std::min(hi[k], v[k]));
    }
}

double max_excess_scalar(const double* a, const double* b, std::size_t n) {
    double worst = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        worst = std::max(worst, a[k] - b[k]);
    }
    return worst;
}

double max_abs_diff_scalar(const double* a, const double* b, std::size_t n) {
    double worst = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        worst = std::max(worst, std::fabs(a[k] - b[k]));
    }
    return worst;
}

void complementarity_scalar(const double* v, const double* lo, const double* hi, const double* pde, double* out,
                            std::size_t n, bool min_first) {
    if (min_first) {
        for (std::size_t k = 0; k < n; ++k) {
            out[k] = std::min(v[k] - lo[k], std::max(v[k] - hi[k], pde[k]));
        }
    } else {
        for (std::size_t k = 0; k < n; ++k) {
            out[k] = std::max(v[k] - hi[k], std::min(v[k] - lo[k], pde[k]));
        }
    }
}

} // namespace switchvi::kernels::detail
