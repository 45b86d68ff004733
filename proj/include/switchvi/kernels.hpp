#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference and, on x86-64,
// an AVX2 variant picked at runtime. Variants perform the same operations in the
// same order (no fused multiply-add), so results agree bit for bit.

#include <cstddef>

namespace switchvi::kernels {

enum class Isa { scalar, avx2 };

const char* to_string(Isa isa);

struct Table {
    Isa isa;

    /// out[n] = sum_s weights[s*stride + n] * v[n + deltas[s]] for n in [begin, end).
    /// Callers guarantee every index n + deltas[s] lies inside v.
    void (*stencil_apply)(const double* weights, std::size_t stride, const std::ptrdiff_t* deltas, std::size_t slots,
                          const double* v, double* out, std::size_t begin, std::size_t end);

    /// out[n] += w[n] * v[n]
    void (*multiply_accumulate)(double* out, const double* w, const double* v, std::size_t n);

    /// out[n] = max(lo[n], min(hi[n], v[n]))
    void (*clamp_band)(const double* lo, const double* hi, const double* v, double* out, std::size_t n);

    /// max(0, max_n (a[n] - b[n]))
    double (*max_excess)(const double* a, const double* b, std::size_t n);

    /// max_n |a[n] - b[n]|
    double (*max_abs_diff)(const double* a, const double* b, std::size_t n);

    /// out[n] = min(v-lo, max(v-hi, pde)) when min_first, else max(v-hi, min(v-lo, pde)).
    void (*complementarity)(const double* v, const double* lo, const double* hi, const double* pde, double* out,
                            std::size_t n, bool min_first);
};

const Table& scalar();

/// nullptr when the AVX2 variant was not compiled in or the CPU lacks AVX2.
const Table* avx2();

/// The table used by the solvers. Defaults to the best supported variant;
/// SWITCHVI_SIMD=scalar in the environment forces the reference path.
const Table& active();

/// Override the active table. Returns false if the requested variant is unavailable.
bool select(Isa isa);

} // namespace switchvi::kernels
