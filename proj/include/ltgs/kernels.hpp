#pragma once

#include <cstddef>

// Data-parallel inner loops used by the image and raster paths. Each kernel
// has a scalar reference implementation and an AVX2 variant; dispatch is
// resolved once at startup from CPUID. The scalar versions stay exported so
// equivalence tests can compare both paths on the same inputs.
namespace ltgs::kernels {

struct Dispatch {
    double (*sum_sq_diff)(const float* a, const float* b, std::size_t n);
    double (*sum_abs_diff)(const float* a, const float* b, std::size_t n);
    double (*dot)(const float* a, const float* b, std::size_t n);
    void (*axpy)(float* y, const float* x, float a, std::size_t n);
    const char* name;
};

namespace scalar {
double sum_sq_diff(const float* a, const float* b, std::size_t n);
double sum_abs_diff(const float* a, const float* b, std::size_t n);
double dot(const float* a, const float* b, std::size_t n);
void axpy(float* y, const float* x, float a, std::size_t n);
}  // namespace scalar

// Active dispatch table (AVX2 when the CPU supports it).
const Dispatch& active();

inline double sum_sq_diff(const float* a, const float* b, std::size_t n) {
    return active().sum_sq_diff(a, b, n);
}
inline double sum_abs_diff(const float* a, const float* b, std::size_t n) {
    return active().sum_abs_diff(a, b, n);
}
inline double dot(const float* a, const float* b, std::size_t n) { return active().dot(a, b, n); }
inline void axpy(float* y, const float* x, float a, std::size_t n) { active().axpy(y, x, a, n); }

}  // namespace ltgs::kernels
