#pragma once

#include "switchvi/kernels.hpp"

namespace switchvi::kernels::detail {

void stencil_apply_scalar(const double* weights, std::size_t stride, const std::ptrdiff_t* deltas, std::size_t slots,
                          const double* v, double* out, std::size_t begin, std::size_t end);
void multiply_accumulate_scalar(double* out, const double* w, const double* v, std::size_t n);
void clamp_band_scalar(const double* lo, const double* hi, const double* v, double* out, std::size_t n);
double max_excess_scalar(const double* a, const double* b, std::size_t n);
double max_abs_diff_scalar(const double* a, const double* b, std::size_t n);
void complementarity_scalar(const double* v, const double* lo, const double* hi, const double* pde, double* out,
                            std::size_t n, bool min_first);

#if defined(SWITCHVI_HAVE_AVX2)
void stencil_apply_avx2(const double* weights, std::size_t stride, const std::ptrdiff_t* deltas, std::size_t slots,
                        const double* v, double* out, std::size_t begin, std::size_t end);
void multiply_accumulate_avx2(double* out, const double* w, const double* v, std::size_t n);
void clamp_band_avx2(const double* lo, const double* hi, const double* v, double* out, std::size_t n);
double max_excess_avx2(const double* a, const double* b, std::size_t n);
double max_abs_diff_avx2(const double* a, const double* b, std::size_t n);
void complementarity_avx2(const double* v, const double* lo, const double* hi, const double* pde, double* out,
                          std::size_t n, bool min_first);
#endif

} // namespace switchvi::kernels::detail
