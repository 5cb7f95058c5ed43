#pragma once

// Column kernels used by expression evaluation and fit statistics.
//
// Every table computes the same thing; the scalar table is the reference.
// Element-wise results are bit-identical across tables (IEEE add/sub/mul/div/sqrt
// are correctly rounded in every lane). Reductions may differ in the last few
// ulps because lane-parallel summation reassociates.
//
// All element-wise kernels allow out == a (and out == b).

#include <cstddef>
#include <string_view>

namespace srmcts::kernels {

struct KernelTable {
    const char* name;

    void (*add)(const double* a, const double* b, double* out, std::size_t n);
    void (*sub)(const double* a, const double* b, double* out, std::size_t n);
    void (*mul)(const double* a, const double* b, double* out, std::size_t n);
    void (*div)(const double* a, const double* b, double* out, std::size_t n);

    void (*square)(const double* a, double* out, std::size_t n);
    void (*inv)(const double* a, double* out, std::size_t n);
    void (*sqrt)(const double* a, double* out, std::size_t n);
    void (*fill)(double value, double* out, std::size_t n);

    // Domain predicates.
    bool (*any_nonpositive)(const double* a, std::size_t n);
    bool (*any_negative)(const double* a, std::size_t n);
    bool (*any_zero)(const double* a, std::size_t n);
    // False if some |a[i]| > limit or a[i] is NaN.
    bool (*all_bounded)(const double* a, std::size_t n, double limit);

    double (*sum)(const double* a, std::size_t n);
    double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
    double (*sum_sq_dev)(const double* a, std::size_t n, double center);
};

const KernelTable& scalar_table() noexcept;

/// nullptr when the variant is not compiled in or the CPU lacks the extension.
const KernelTable* avx2_table() noexcept;
const KernelTable* neon_table() noexcept;

/// Best available table. Honours SRMCTS_SIMD=scalar|avx2|neon on first use.
const KernelTable& active() noexcept;

/// Override the active table; returns false if the named variant is unavailable.
bool select(std::string_view name) noexcept;

} // namespace srmcts::kernels
