#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace classdiag::kernels {

/// Data-parallel inner loops behind the statistics code: covariance
/// accumulation, logistic scores/updates and Monte-Carlo classification all
/// reduce to these. A scalar reference implementation always exists; an
/// AVX2 variant is selected at runtime when the CPU supports it. Variants
/// may differ in the last bits (different summation order, FMA), which is
/// why equivalence tests compare against the scalar kernels with a
/// condition-aware tolerance rather than bitwise.
enum class Backend { scalar, avx2 };

Backend active_backend() noexcept;
bool backend_available(Backend b) noexcept;
std::string backend_name(Backend b);

/// Pin a backend (used by the equivalence tests). Throws ConfigError when
/// the requested backend is not available on this machine.
void force_backend(Backend b);

/// Return to the best available backend.
void reset_backend() noexcept;

double dot(std::span<const double> a, std::span<const double> b);
double sum(std::span<const double> a);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

namespace detail {
double dot_scalar(const double* a, const double* b, std::size_t n) noexcept;
double sum_scalar(const double* a, std::size_t n) noexcept;
void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) noexcept;

#if defined(__x86_64__) || defined(_M_X64)
#define CLASSDIAG_X86_64 1
double dot_avx2(const double* a, const double* b, std::size_t n) noexcept;
double sum_avx2(const double* a, std::size_t n) noexcept;
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) noexcept;
#endif
} // namespace detail

} // namespace classdiag::kernels
