#include "emolab/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define EMOLAB_BUILD_AVX2 1
#else
#define EMOLAB_BUILD_AVX2 0
#endif

#if EMOLAB_BUILD_AVX2

#include <immintrin.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

// No FMA intrinsics anywhere in this file: mul followed by add keeps the
// rounding identical to the scalar reference.

namespace emolab::kernels {
namespace {

inline float combine8(const float* l) {
    return ((l[0] + l[1]) + (l[2] + l[3])) + ((l[4] + l[5]) + (l[6] + l[7]));
}

inline float combine_max8(const float* l) {
    const float a = std::fmax(std::fmax(l[0], l[1]), std::fmax(l[2], l[3]));
    const float b = std::fmax(std::fmax(l[4], l[5]), std::fmax(l[6], l[7]));
    return std::fmax(a, b);
}

float dot_avx2(const float* a, const float* b, std::size_t n) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 va = _mm256_loadu_ps(a + i);
        const __m256 vb = _mm256_loadu_ps(b + i);
        acc = _mm256_add_ps(acc, _mm256_mul_ps(va, vb));
    }
    alignas(32) float lanes[8];
    _mm256_store_ps(lanes, acc);
    for (; i < n; ++i) lanes[i & 7] += a[i] * b[i];
    return combine8(lanes);
}

float sum_avx2(const float* x, std::size_t n) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
    alignas(32) float lanes[8];
    _mm256_store_ps(lanes, acc);
    for (; i < n; ++i) lanes[i & 7] += x[i];
    return combine8(lanes);
}

float max_avx2(const float* x, std::size_t n) {
    __m256 acc = _mm256_set1_ps(-std::numeric_limits<float>::infinity());
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) acc = _mm256_max_ps(acc, _mm256_loadu_ps(x + i));
    alignas(32) float lanes[8];
    _mm256_store_ps(lanes, acc);
    for (; i < n; ++i) lanes[i & 7] = std::fmax(lanes[i & 7], x[i]);
    return combine_max8(lanes);
}

float sq_diff_sum_avx2(const float* x, float c, std::size_t n) {
    const __m256 vc = _mm256_set1_ps(c);
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 d = _mm256_sub_ps(_mm256_loadu_ps(x + i), vc);
        acc = _mm256_add_ps(acc, _mm256_mul_ps(d, d));
    }
    alignas(32) float lanes[8];
    _mm256_store_ps(lanes, acc);
    for (; i < n; ++i) {
        const float d = x[i] - c;
        lanes[i & 7] += d * d;
    }
    return combine8(lanes);
}

void axpy_avx2(float a, const float* x, float* y, std::size_t n) {
    const __m256 va = _mm256_set1_ps(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 vy = _mm256_loadu_ps(y + i);
        const __m256 vx = _mm256_loadu_ps(x + i);
        _mm256_storeu_ps(y + i, _mm256_add_ps(vy, _mm256_mul_ps(va, vx)));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void scale_avx2(float a, float* x, std::size_t n) {
    const __m256 va = _mm256_set1_ps(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) _mm256_storeu_ps(x + i, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
    for (; i < n; ++i) x[i] *= a;
}

// Vector port of exp_f32; same clamp, same nearest-even rounding, same
// Horner order, so each lane matches the scalar result exactly.
inline __m256 exp_ps(__m256 x) {
    const __m256 hi = _mm256_set1_ps(88.3762626647949f);
    const __m256 lo = _mm256_set1_ps(-87.3365478515625f);
    x = _mm256_min_ps(x, hi);
    x = _mm256_max_ps(x, lo);
    const __m256 log2e = _mm256_set1_ps(1.44269504088896341f);
    const __m256 k = _mm256_round_ps(_mm256_mul_ps(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256 r = _mm256_sub_ps(x, _mm256_mul_ps(k, _mm256_set1_ps(0.693359375f)));
    r = _mm256_sub_ps(r, _mm256_mul_ps(k, _mm256_set1_ps(-2.12194440e-4f)));
    __m256 p = _mm256_set1_ps(1.9875691500e-4f);
    p = _mm256_add_ps(_mm256_mul_ps(p, r), _mm256_set1_ps(1.3981999507e-3f));
    p = _mm256_add_ps(_mm256_mul_ps(p, r), _mm256_set1_ps(8.3334519073e-3f));
    p = _mm256_add_ps(_mm256_mul_ps(p, r), _mm256_set1_ps(4.1665795894e-2f));
    p = _mm256_add_ps(_mm256_mul_ps(p, r), _mm256_set1_ps(1.6666665459e-1f));
    p = _mm256_add_ps(_mm256_mul_ps(p, r), _mm256_set1_ps(5.0000001201e-1f));
    const __m256 y = _mm256_add_ps(_mm256_add_ps(_mm256_mul_ps(p, _mm256_mul_ps(r, r)), r), _mm256_set1_ps(1.0f));
    const __m256i ki = _mm256_cvtps_epi32(k);
    const __m256i bits = _mm256_slli_epi32(_mm256_add_epi32(ki, _mm256_set1_epi32(127)), 23);
    return _mm256_mul_ps(y, _mm256_castsi256_ps(bits));
}

void exp_inplace_avx2(float* x, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) _mm256_storeu_ps(x + i, exp_ps(_mm256_loadu_ps(x + i)));
    for (; i < n; ++i) x[i] = exp_f32(x[i]);
}

void gelu_inplace_avx2(float* x, std::size_t n) {
    const __m256 half = _mm256_set1_ps(0.5f);
    const __m256 one = _mm256_set1_ps(1.0f);
    const __m256 two = _mm256_set1_ps(2.0f);
    const __m256 s = _mm256_set1_ps(0.7978845608028654f);
    const __m256 c = _mm256_set1_ps(0.044715f);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 v = _mm256_loadu_ps(x + i);
        const __m256 v3 = _mm256_mul_ps(v, _mm256_mul_ps(v, v));
        const __m256 inner = _mm256_mul_ps(s, _mm256_add_ps(v, _mm256_mul_ps(c, v3)));
        const __m256 e = exp_ps(_mm256_mul_ps(two, inner));
        const __m256 t = _mm256_div_ps(_mm256_sub_ps(e, one), _mm256_add_ps(e, one));
        _mm256_storeu_ps(x + i, _mm256_mul_ps(_mm256_mul_ps(half, v), _mm256_add_ps(one, t)));
    }
    for (; i < n; ++i) {
        const float v = x[i];
        const float v3 = v * (v * v);
        const float inner = 0.7978845608028654f * (v + 0.044715f * v3);
        const float e = exp_f32(2.0f * inner);
        const float t = (e - 1.0f) / (e + 1.0f);
        x[i] = (0.5f * v) * (1.0f + t);
    }
}

const Ops avx2_table = {dot_avx2, sum_avx2,  max_avx2,        sq_diff_sum_avx2,
                        axpy_avx2, scale_avx2, exp_inplace_avx2, gelu_inplace_avx2};

}  // namespace

const Ops* avx2_ops() {
#if defined(__GNUC__) || defined(__clang__)
    static const bool supported = __builtin_cpu_supports("avx2");
    return supported ? &avx2_table : nullptr;
#else
    return nullptr;
#endif
}

}  // namespace emolab::kernels

#else

namespace emolab::kernels {
const Ops* avx2_ops() { return nullptr; }
}  // namespace emolab::kernels

#endif
