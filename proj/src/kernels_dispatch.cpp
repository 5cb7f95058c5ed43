#include "srmcts/kernels.hpp"

#include <atomic>
#include <cstdlib>

namespace srmcts::kernels {
namespace {

const KernelTable* by_name(std::string_view name) noexcept
{
    if (name == "scalar") return &scalar_table();
    if (name == "avx2") return avx2_table();
    if (name == "neon") return neon_table();
    return nullptr;
}

const KernelTable* detect() noexcept
{
    if (const char* env = std::getenv("SRMCTS_SIMD")) {
        if (const KernelTable* t = by_name(env)) return t;
    }
    if (const KernelTable* t = avx2_table()) return t;
    if (const KernelTable* t = neon_table()) return t;
    return &scalar_table();
}

std::atomic<const KernelTable*>& current() noexcept
{
    static std::atomic<const KernelTable*> table{detect()};
    return table;
}

} // namespace

const KernelTable& active() noexcept { return *current().load(std::memory_order_acquire); }

bool select(std::string_view name) noexcept
{
    const KernelTable* t = by_name(name);
    if (t == nullptr) return false;
    current().store(t, std::memory_order_release);
    return true;
}

} // namespace srmcts::kernels
