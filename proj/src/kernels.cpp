#include "classdiag/kernels.hpp"

#include "classdiag/errors.hpp"

#include <atomic>
#include <cassert>

namespace classdiag::kernels {

namespace detail {

double dot_scalar(const double* a, const double* b, std::size_t n) noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum_scalar(const double* a, std::size_t n) noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) noexcept {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

} // namespace detail

namespace {

struct Dispatch {
    double (*dot)(const double*, const double*, std::size_t) noexcept;
    double (*sum)(const double*, std::size_t) noexcept;
    void (*axpy)(double, const double*, double*, std::size_t) noexcept;
};

constexpr Dispatch kScalar{detail::dot_scalar, detail::sum_scalar, detail::axpy_scalar};

#ifdef CLASSDIAG_X86_64
constexpr Dispatch kAvx2{detail::dot_avx2, detail::sum_avx2, detail::axpy_avx2};

bool cpu_has_avx2() noexcept {
#if defined(__GNUC__) || defined(__clang__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}
#endif

Backend best_backend() noexcept {
#ifdef CLASSDIAG_X86_64
    if (cpu_has_avx2()) return Backend::avx2;
#endif
    return Backend::scalar;
}

std::atomic<Backend> g_backend{best_backend()};

const Dispatch& table(Backend b) noexcept {
#ifdef CLASSDIAG_X86_64
    if (b == Backend::avx2) return kAvx2;
#endif
    (void)b;
    return kScalar;
}

} // namespace

Backend active_backend() noexcept {
    return g_backend.load(std::memory_order_relaxed);
}

bool backend_available(Backend b) noexcept {
    if (b == Backend::scalar) return true;
#ifdef CLASSDIAG_X86_64
    if (b == Backend::avx2) return cpu_has_avx2();
#endif
    return false;
}

std::string backend_name(Backend b) {
    return b == Backend::avx2 ? "avx2" : "scalar";
}

void force_backend(Backend b) {
    if (!backend_available(b)) {
        throw ConfigError(ErrorKind::invalid_argument,
                          "kernel backend '" + backend_name(b) + "' is not available on this CPU");
    }
    g_backend.store(b, std::memory_order_relaxed);
}

void reset_backend() noexcept {
    g_backend.store(best_backend(), std::memory_order_relaxed);
}

double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    return table(active_backend()).dot(a.data(), b.data(), a.size());
}

double sum(std::span<const double> a) {
    return table(active_backend()).sum(a.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    table(active_backend()).axpy(alpha, x.data(), y.data(), x.size());
}

} // namespace classdiag::kernels
