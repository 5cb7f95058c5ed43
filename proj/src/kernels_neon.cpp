#include "srmcts/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>
#include <cstdint>

namespace srmcts::kernels {
namespace {

// 2 doubles per register.

inline bool any_lane(uint64x2_t m) noexcept
{
    return (vgetq_lane_u64(m, 0) | vgetq_lane_u64(m, 1)) != 0;
}

#define SRMCTS_NEON_BINARY(NAME, INTRIN, OP)                                                 \
    void NAME(const double* a, const double* b, double* out, std::size_t n)                  \
    {                                                                                        \
        std::size_t i = 0;                                                                   \
        for (; i + 2 <= n; i += 2) vst1q_f64(out + i, INTRIN(vld1q_f64(a + i), vld1q_f64(b + i))); \
        for (; i < n; ++i) out[i] = a[i] OP b[i];                                            \
    }

SRMCTS_NEON_BINARY(add, vaddq_f64, +)
SRMCTS_NEON_BINARY(sub, vsubq_f64, -)
SRMCTS_NEON_BINARY(mul, vmulq_f64, *)
SRMCTS_NEON_BINARY(div, vdivq_f64, /)

#undef SRMCTS_NEON_BINARY

void square(const double* a, double* out, std::size_t n)
{
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t v = vld1q_f64(a + i);
        vst1q_f64(out + i, vmulq_f64(v, v));
    }
    for (; i < n; ++i) out[i] = a[i] * a[i];
}

void inv(const double* a, double* out, std::size_t n)
{
    const float64x2_t one = vdupq_n_f64(1.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vdivq_f64(one, vld1q_f64(a + i)));
    for (; i < n; ++i) out[i] = 1.0 / a[i];
}

void sqrt_(const double* a, double* out, std::size_t n)
{
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vsqrtq_f64(vld1q_f64(a + i)));
    for (; i < n; ++i) out[i] = std::sqrt(a[i]);
}

void fill(double value, double* out, std::size_t n)
{
    const float64x2_t v = vdupq_n_f64(value);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(out + i, v);
    for (; i < n; ++i) out[i] = value;
}

bool any_nonpositive(const double* a, std::size_t n)
{
    const float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        // NaN compares false, so invert a > 0.
        const uint64x2_t gt = vcgtq_f64(vld1q_f64(a + i), zero);
        if ((vgetq_lane_u64(gt, 0) & vgetq_lane_u64(gt, 1)) != ~std::uint64_t{0}) return true;
    }
    for (; i < n; ++i)
        if (!(a[i] > 0.0)) return true;
    return false;
}

bool any_negative(const double* a, std::size_t n)
{
    const float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        if (any_lane(vcltq_f64(vld1q_f64(a + i), zero))) return true;
    for (; i < n; ++i)
        if (a[i] < 0.0) return true;
    return false;
}

bool any_zero(const double* a, std::size_t n)
{
    const float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        if (any_lane(vceqq_f64(vld1q_f64(a + i), zero))) return true;
    for (; i < n; ++i)
        if (a[i] == 0.0) return true;
    return false;
}

bool all_bounded(const double* a, std::size_t n, double limit)
{
    const float64x2_t lim = vdupq_n_f64(limit);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const uint64x2_t ok = vcleq_f64(vabsq_f64(vld1q_f64(a + i)), lim);
        if ((vgetq_lane_u64(ok, 0) & vgetq_lane_u64(ok, 1)) != ~std::uint64_t{0}) return false;
    }
    for (; i < n; ++i)
        if (!(std::fabs(a[i]) <= limit)) return false;
    return true;
}

double sum(const double* a, std::size_t n)
{
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(a + i));
    double s = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; i < n; ++i) s += a[i];
    return s;
}

double sum_sq_diff(const double* a, const double* b, std::size_t n)
{
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
        acc = vaddq_f64(acc, vmulq_f64(d, d));
    }
    double s = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double sum_sq_dev(const double* a, std::size_t n, double center)
{
    const float64x2_t c = vdupq_n_f64(center);
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t d = vsubq_f64(vld1q_f64(a + i), c);
        acc = vaddq_f64(acc, vmulq_f64(d, d));
    }
    double s = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; i < n; ++i) {
        const double d = a[i] - center;
        s += d * d;
    }
    return s;
}

constexpr KernelTable kNeon{
    "neon", add, sub, mul, div, square, inv, sqrt_, fill,
    any_nonpositive, any_negative, any_zero, all_bounded,
    sum, sum_sq_diff, sum_sq_dev,
};

} // namespace

const KernelTable* neon_table() noexcept { return &kNeon; }

} // namespace srmcts::kernels

#else

namespace srmcts::kernels {
const KernelTable* neon_table() noexcept { return nullptr; }
} // namespace srmcts::kernels

#endif
