/// @file kernels.cpp
/// @brief Scalar and AVX2 implementations of the inner-loop kernels.

#include "scns/kernels.hpp"

#include <atomic>

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define SCNS_HAVE_X86 1
#endif

namespace scns::kernels {

namespace {

// ---------------------------------------------------------------------------
// Scalar reference
// ---------------------------------------------------------------------------

double dot_ref(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

void axpy_ref(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void xpay_ref(const double* x, double a, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + a * y[i];
}

void stencil2_ref(double* out, const double* x, const double* xm, const double* xp, double w,
                  std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] += w * ((x[i] - xm[i]) + (x[i] - xp[i]));
}

void stencil1_ref(double* out, const double* x, const double* xn, double w, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] += w * (x[i] - xn[i]);
}

const Table kScalar{"scalar", dot_ref, axpy_ref, xpay_ref, stencil2_ref, stencil1_ref};

// ---------------------------------------------------------------------------
// AVX2
// ---------------------------------------------------------------------------

#if SCNS_HAVE_X86

__attribute__((target("avx2"))) double dot_avx2(const double* x, const double* y,
                                                std::size_t n) {
    __m256d s0 = _mm256_setzero_pd();
    __m256d s1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        s0 = _mm256_add_pd(s0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
        s1 = _mm256_add_pd(s1,
                           _mm256_mul_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
    }
    for (; i + 4 <= n; i += 4)
        s0 = _mm256_add_pd(s0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    double lanes[4];
    _mm256_storeu_pd(lanes, _mm256_add_pd(s0, s1));
    double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

__attribute__((target("avx2"))) void axpy_avx2(double a, const double* x, double* y,
                                               std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

__attribute__((target("avx2"))) void xpay_avx2(const double* x, double a, double* y,
                                               std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_mul_pd(va, _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(x + i), vy));
    }
    for (; i < n; ++i) y[i] = x[i] + a * y[i];
}

__attribute__((target("avx2"))) void stencil2_avx2(double* out, const double* x,
                                                   const double* xm, const double* xp, double w,
                                                   std::size_t n) {
    const __m256d vw = _mm256_set1_pd(w);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vx = _mm256_loadu_pd(x + i);
        const __m256d d = _mm256_add_pd(_mm256_sub_pd(vx, _mm256_loadu_pd(xm + i)),
                                        _mm256_sub_pd(vx, _mm256_loadu_pd(xp + i)));
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(out + i), _mm256_mul_pd(vw, d)));
    }
    for (; i < n; ++i) out[i] += w * ((x[i] - xm[i]) + (x[i] - xp[i]));
}

__attribute__((target("avx2"))) void stencil1_avx2(double* out, const double* x,
                                                   const double* xn, double w, std::size_t n) {
    const __m256d vw = _mm256_set1_pd(w);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(xn + i));
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(out + i), _mm256_mul_pd(vw, d)));
    }
    for (; i < n; ++i) out[i] += w * (x[i] - xn[i]);
}

const Table kAvx2{"avx2", dot_avx2, axpy_avx2, xpay_avx2, stencil2_avx2, stencil1_avx2};

#endif

const Table* detect() {
#if SCNS_HAVE_X86
    if (avx2_available()) return &kAvx2;
#endif
    return &kScalar;
}

std::atomic<const Table*>& current() {
    static std::atomic<const Table*> t{detect()};
    return t;
}

}  // namespace

const Table& scalar_table() { return kScalar; }

const Table& avx2_table() {
#if SCNS_HAVE_X86
    return kAvx2;
#else
    return kScalar;
#endif
}

bool avx2_available() {
#if SCNS_HAVE_X86
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const Table& active() { return *current().load(std::memory_order_acquire); }

bool select(const std::string& name) {
    if (name == "auto") {
        current().store(detect());
        return true;
    }
    if (name == "scalar") {
        current().store(&kScalar);
        return true;
    }
#if SCNS_HAVE_X86
    if (name == "avx2" && avx2_available()) {
        current().store(&kAvx2);
        return true;
    }
#endif
    return false;
}

std::vector<std::string> available_backends() {
    std::vector<std::string> out{"scalar"};
    if (avx2_available()) out.emplace_back("avx2");
    return out;
}

}  // namespace scns::kernels
