#include <atomic>
#include <stdexcept>

#include "mpsgemm/kernels.hpp"

namespace mpsgemm::kernels {
namespace {

std::atomic<const KernelTable*> g_active{nullptr};
std::atomic<KernelArch> g_arch{KernelArch::auto_detect};

const KernelTable* detect() {
    if (const KernelTable* t = avx2_kernels()) return t;
    return &scalar_kernels();
}

} // namespace

void set_kernel_arch(KernelArch arch) {
    switch (arch) {
    case KernelArch::auto_detect:
        g_active.store(detect());
        break;
    case KernelArch::scalar:
        g_active.store(&scalar_kernels());
        break;
    case KernelArch::avx2: {
        const KernelTable* t = avx2_kernels();
        if (!t) throw std::runtime_error("AVX2 kernels not available on this machine");
        g_active.store(t);
        break;
    }
    }
    g_arch.store(arch);
}

KernelArch kernel_arch() { return g_arch.load(); }

const KernelTable& active_kernels() {
    const KernelTable* t = g_active.load();
    if (!t) {
        t = detect();
        g_active.store(t);
    }
    return *t;
}

} // namespace mpsgemm::kernels
