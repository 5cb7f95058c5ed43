#include "srmcts/kernels.hpp"

#include <cmath>

namespace srmcts::kernels {
namespace {

void add(const double* a, const double* b, double* out, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(const double* a, const double* b, double* out, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(const double* a, const double* b, double* out, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void div(const double* a, const double* b, double* out, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] / b[i];
}

void square(const double* a, double* out, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * a[i];
}

void inv(const double* a, double* out, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) out[i] = 1.0 / a[i];
}

void sqrt_(const double* a, double* out, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) out[i] = std::sqrt(a[i]);
}

void fill(double value, double* out, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) out[i] = value;
}

bool any_nonpositive(const double* a, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i)
        if (!(a[i] > 0.0)) return true;
    return false;
}

bool any_negative(const double* a, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i)
        if (a[i] < 0.0) return true;
    return false;
}

bool any_zero(const double* a, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i)
        if (a[i] == 0.0) return true;
    return false;
}

bool all_bounded(const double* a, std::size_t n, double limit)
{
    for (std::size_t i = 0; i < n; ++i)
        if (!(std::fabs(a[i]) <= limit)) return false;
    return true;
}

double sum(const double* a, std::size_t n)
{
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i];
    return s;
}

double sum_sq_diff(const double* a, const double* b, std::size_t n)
{
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double sum_sq_dev(const double* a, std::size_t n, double center)
{
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - center;
        s += d * d;
    }
    return s;
}

constexpr KernelTable kScalar{
    "scalar", add, sub, mul, div, square, inv, sqrt_, fill,
    any_nonpositive, any_negative, any_zero, all_bounded,
    sum, sum_sq_diff, sum_sq_dev,
};

} // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

} // namespace srmcts::kernels
