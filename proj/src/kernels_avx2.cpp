#include "srmcts/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

namespace srmcts::kernels {
namespace {

// 4 doubles per register; tails fall through to scalar code.

[[gnu::target("avx2")]] inline double hsum(__m256d v) noexcept
{
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    const __m128d shuf = _mm_unpackhi_pd(s, s);
    return _mm_cvtsd_f64(_mm_add_sd(s, shuf));
}

#define SRMCTS_AVX2_BINARY(NAME, INTRIN, OP)                                          \
    [[gnu::target("avx2")]] void NAME(const double* a, const double* b, double* out, \
                                      std::size_t n)                                  \
    {                                                                                 \
        std::size_t i = 0;                                                            \
        for (; i + 4 <= n; i += 4) {                                                  \
            const __m256d va = _mm256_loadu_pd(a + i);                                \
            const __m256d vb = _mm256_loadu_pd(b + i);                                \
            _mm256_storeu_pd(out + i, INTRIN(va, vb));                                \
        }                                                                             \
        for (; i < n; ++i) out[i] = a[i] OP b[i];                                     \
    }

SRMCTS_AVX2_BINARY(add, _mm256_add_pd, +)
SRMCTS_AVX2_BINARY(sub, _mm256_sub_pd, -)
SRMCTS_AVX2_BINARY(mul, _mm256_mul_pd, *)
SRMCTS_AVX2_BINARY(div, _mm256_div_pd, /)

#undef SRMCTS_AVX2_BINARY

[[gnu::target("avx2")]] void square(const double* a, double* out, std::size_t n)
{
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d va = _mm256_loadu_pd(a + i);
        _mm256_storeu_pd(out + i, _mm256_mul_pd(va, va));
    }
    for (; i < n; ++i) out[i] = a[i] * a[i];
}

[[gnu::target("avx2")]] void inv(const double* a, double* out, std::size_t n)
{
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, _mm256_div_pd(one, _mm256_loadu_pd(a + i)));
    for (; i < n; ++i) out[i] = 1.0 / a[i];
}

[[gnu::target("avx2")]] void sqrt_(const double* a, double* out, std::size_t n)
{
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, _mm256_sqrt_pd(_mm256_loadu_pd(a + i)));
    for (; i < n; ++i) out[i] = std::sqrt(a[i]);
}

[[gnu::target("avx2")]] void fill(double value, double* out, std::size_t n)
{
    const __m256d v = _mm256_set1_pd(value);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, v);
    for (; i < n; ++i) out[i] = value;
}

// Predicate kernels OR lane masks and test once per block.

[[gnu::target("avx2")]] bool any_nonpositive(const double* a, std::size_t n)
{
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        // !(a > 0) also catches NaN.
        const __m256d m = _mm256_cmp_pd(_mm256_loadu_pd(a + i), zero, _CMP_NGT_UQ);
        if (_mm256_movemask_pd(m) != 0) return true;
    }
    for (; i < n; ++i)
        if (!(a[i] > 0.0)) return true;
    return false;
}

[[gnu::target("avx2")]] bool any_negative(const double* a, std::size_t n)
{
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d m = _mm256_cmp_pd(_mm256_loadu_pd(a + i), zero, _CMP_LT_OQ);
        if (_mm256_movemask_pd(m) != 0) return true;
    }
    for (; i < n; ++i)
        if (a[i] < 0.0) return true;
    return false;
}

[[gnu::target("avx2")]] bool any_zero(const double* a, std::size_t n)
{
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d m = _mm256_cmp_pd(_mm256_loadu_pd(a + i), zero, _CMP_EQ_OQ);
        if (_mm256_movemask_pd(m) != 0) return true;
    }
    for (; i < n; ++i)
        if (a[i] == 0.0) return true;
    return false;
}

[[gnu::target("avx2")]] bool all_bounded(const double* a, std::size_t n, double limit)
{
    const __m256d sign = _mm256_set1_pd(-0.0);
    const __m256d lim = _mm256_set1_pd(limit);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d mag = _mm256_andnot_pd(sign, _mm256_loadu_pd(a + i));
        // NLE_UQ: true when mag > lim or unordered.
        const __m256d m = _mm256_cmp_pd(mag, lim, _CMP_NLE_UQ);
        if (_mm256_movemask_pd(m) != 0) return false;
    }
    for (; i < n; ++i)
        if (!(std::fabs(a[i]) <= limit)) return false;
    return true;
}

[[gnu::target("avx2")]] double sum(const double* a, std::size_t n)
{
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i];
    return s;
}

[[gnu::target("avx2")]] double sum_sq_diff(const double* a, const double* b, std::size_t n)
{
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

[[gnu::target("avx2")]] double sum_sq_dev(const double* a, std::size_t n, double center)
{
    const __m256d c = _mm256_set1_pd(center);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), c);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        const double d = a[i] - center;
        s += d * d;
    }
    return s;
}

constexpr KernelTable kAvx2{
    "avx2", add, sub, mul, div, square, inv, sqrt_, fill,
    any_nonpositive, any_negative, any_zero, all_bounded,
    sum, sum_sq_diff, sum_sq_dev,
};

} // namespace

const KernelTable* avx2_table() noexcept
{
    static const bool supported = __builtin_cpu_supports("avx2");
    return supported ? &kAvx2 : nullptr;
}

} // namespace srmcts::kernels

#else

namespace srmcts::kernels {
const KernelTable* avx2_table() noexcept { return nullptr; }
} // namespace srmcts::kernels

#endif
