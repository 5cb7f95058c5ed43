#include <doctest.h>

#include "helpers.hpp"
#include "srmcts/kernels.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <vector>

using namespace srmcts;

namespace {

std::vector<const kernels::KernelTable*> simd_tables()
{
    std::vector<const kernels::KernelTable*> t;
    if (auto* a = kernels::avx2_table()) t.push_back(a);
    if (auto* n = kernels::neon_table()) t.push_back(n);
    return t;
}

std::vector<double> edgy(Rng& rng, std::size_t n)
{
    std::vector<double> v(n);
    std::normal_distribution<double> z(0.0, 3.0);
    for (auto& x : v) {
        const int pick = uniform_int(rng, 0, 19);
        if (pick == 0) x = 0.0;
        else if (pick == 1) x = -0.0;
        else if (pick == 2) x = 1e31;
        else if (pick == 3) x = -1e30;
        else if (pick == 4) x = std::numeric_limits<double>::quiet_NaN();
        else if (pick == 5) x = std::numeric_limits<double>::infinity();
        else x = z(rng);
    }
    return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b)
{
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::isnan(a[i]) && std::isnan(b[i])) continue;
        if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
    }
    return true;
}

} // namespace

TEST_CASE("simd kernels match the scalar reference")
{
    const auto& ref = kernels::scalar_table();
    const auto tables = simd_tables();
    if (tables.empty()) MESSAGE("no SIMD table on this machine; only the scalar reference is exercised");
    Rng rng = make_rng(11);
    for (const auto* t : tables) {
        CAPTURE(t->name);
        for (std::size_t n = 0; n < 70; ++n) {
            const auto a = edgy(rng, n);
            const auto b = edgy(rng, n);
            std::vector<double> r1(n), r2(n);
            using Bin = void (*)(const double*, const double*, double*, std::size_t);
            for (auto [f, g] : {std::pair<Bin, Bin>{ref.add, t->add}, {ref.sub, t->sub}, {ref.mul, t->mul}, {ref.div, t->div}}) {
                f(a.data(), b.data(), r1.data(), n);
                g(a.data(), b.data(), r2.data(), n);
                CHECK(same_bits(r1, r2));
            }
            using Un = void (*)(const double*, double*, std::size_t);
            for (auto [f, g] : {std::pair<Un, Un>{ref.square, t->square}, {ref.inv, t->inv}, {ref.sqrt, t->sqrt}}) {
                f(a.data(), r1.data(), n);
                g(a.data(), r2.data(), n);
                CHECK(same_bits(r1, r2));
            }
            ref.fill(2.5, r1.data(), n);
            t->fill(2.5, r2.data(), n);
            CHECK(same_bits(r1, r2));

            CHECK(ref.any_nonpositive(a.data(), n) == t->any_nonpositive(a.data(), n));
            CHECK(ref.any_negative(a.data(), n) == t->any_negative(a.data(), n));
            CHECK(ref.any_zero(a.data(), n) == t->any_zero(a.data(), n));
            CHECK(ref.all_bounded(a.data(), n, 1e30) == t->all_bounded(a.data(), n, 1e30));

            // reductions on finite data only; lanes reassociate
            std::vector<double> fa(n), fb(n);
            std::normal_distribution<double> z(1.0, 5.0);
            for (std::size_t i = 0; i < n; ++i) { fa[i] = z(rng); fb[i] = z(rng); }
            auto close = [](double x, double y) { return std::fabs(x - y) <= 1e-12 * (1.0 + std::fabs(x)); };
            CHECK(close(ref.sum(fa.data(), n), t->sum(fa.data(), n)));
            CHECK(close(ref.sum_sq_diff(fa.data(), fb.data(), n), t->sum_sq_diff(fa.data(), fb.data(), n)));
            CHECK(close(ref.sum_sq_dev(fa.data(), n, 0.7), t->sum_sq_dev(fa.data(), n, 0.7)));
        }
    }
}

TEST_CASE("domain predicates on hand-built columns")
{
    for (const auto* t : [] {
             auto v = simd_tables();
             v.push_back(&kernels::scalar_table());
             return v;
         }()) {
        CAPTURE(t->name);
        std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 0.5, 9};
        CHECK_FALSE(t->any_nonpositive(v.data(), v.size()));
        v[8] = 0.0;
        CHECK(t->any_nonpositive(v.data(), v.size()));
        CHECK_FALSE(t->any_negative(v.data(), v.size()));
        CHECK(t->any_zero(v.data(), v.size()));
        v[8] = -0.0;
        CHECK(t->any_zero(v.data(), v.size()));
        CHECK_FALSE(t->any_negative(v.data(), v.size()));
        v[8] = -1e-300;
        CHECK(t->any_negative(v.data(), v.size()));
        v[8] = std::numeric_limits<double>::quiet_NaN();
        CHECK_FALSE(t->all_bounded(v.data(), v.size(), 1e30));
        v[8] = -2e30;
        CHECK_FALSE(t->all_bounded(v.data(), v.size(), 1e30));
        v[8] = 1e30;
        CHECK(t->all_bounded(v.data(), v.size(), 1e30));
    }
}

TEST_CASE("kernel selection")
{
    CHECK(kernels::select("scalar"));
    CHECK(std::string(kernels::active().name) == "scalar");
    CHECK_FALSE(kernels::select("sse9"));
    if (kernels::avx2_table()) {
        CHECK(kernels::select("avx2"));
        CHECK(std::string(kernels::active().name) == "avx2");
    }
}
