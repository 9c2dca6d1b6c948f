#include "tarslab/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace tarslab::kern {

bool cpu_has_avx2() {
#if (defined(__x86_64__) || defined(__i386__)) && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

namespace {

const Kernels& pick() {
    const Kernels* avx2 = cpu_has_avx2() ? avx2_kernels() : nullptr;
    if (const char* env = std::getenv("TARSLAB_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return scalar_kernels();
        if (std::strcmp(env, "avx2") == 0 && avx2) return *avx2;
    }
    return avx2 ? *avx2 : scalar_kernels();
}

}  // namespace

const Kernels& active() {
    static const Kernels& chosen = pick();
    return chosen;
}

}  // namespace tarslab::kern
