#include "kernels_impl.hpp"

#include <atomic>
#include <cstdlib>
#include <string_view>

namespace switchvi::kernels {

namespace {

constexpr Table kScalar{
    Isa::scalar,
    detail::stencil_apply_scalar,
    detail::multiply_accumulate_scalar,
    detail::clamp_band_scalar,
    detail::max_excess_scalar,
    detail::max_abs_diff_scalar,
    detail::complementarity_scalar,
};

#if defined(SWITCHVI_HAVE_AVX2)
constexpr Table kAvx2{
    Isa::avx2,
    detail::stencil_apply_avx2,
    detail::multiply_accumulate_avx2,
    detail::clamp_band_avx2,
    detail::max_excess_avx2,
    detail::max_abs_diff_avx2,
    detail::complementarity_avx2,
};
#endif

const Table* detect() {
    if (const char* env = std::getenv("SWITCHVI_SIMD"); env != nullptr && std::string_view(env) == "scalar") {
        return &kScalar;
    }
    if (const Table* t = avx2(); t != nullptr) {
        return t;
    }
    return &kScalar;
}

std::atomic<const Table*>& current() {
    static std::atomic<const Table*> table{detect()};
    return table;
}

} // namespace

const char* to_string(Isa isa) {
    switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    }
    return "?";
}

const Table& scalar() {
    return kScalar;
}

const Table* avx2() {
#if defined(SWITCHVI_HAVE_AVX2)
    __builtin_cpu_init();
    if (__builtin_cpu_supports("avx2")) {
        return &kAvx2;
    }
#endif
    return nullptr;
}

const Table& active() {
    return *current().load(std::memory_order_acquire);
}

bool select(Isa isa) {
    const Table* t = isa == Isa::scalar ? &kScalar : avx2();
    if (t == nullptr) {
        return false;
    }
    current().store(t, std::memory_order_release);
    return true;
}

} // namespace switchvi::kernels
