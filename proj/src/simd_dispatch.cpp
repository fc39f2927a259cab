#include "rkhsid/simd.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace rkhsid::simd {
namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Ops* pick(std::string_view name) {
    if (name == "scalar") return &scalar_ops();
    if (name == "avx2") {
        const Ops* ops = avx2_ops();
        return (ops && cpu_has_avx2_fma()) ? ops : nullptr;
    }
    return nullptr;
}

const Ops* resolve_default() {
    if (const char* env = std::getenv("RKHSID_SIMD")) {
        if (const Ops* ops = pick(env)) return ops;
    }
    if (const Ops* ops = avx2_ops(); ops && cpu_has_avx2_fma()) return ops;
    return &scalar_ops();
}

std::atomic<const Ops*> g_active{nullptr};

}  // namespace

const Ops& active() {
    const Ops* ops = g_active.load(std::memory_order_acquire);
    if (!ops) {
        ops = resolve_default();
        g_active.store(ops, std::memory_order_release);
    }
    return *ops;
}

bool select_backend(std::string_view name) {
    const Ops* ops = pick(name);
    if (!ops) return false;
    g_active.store(ops, std::memory_order_release);
    return true;
}

}  // namespace rkhsid::simd
