#include "emolab/kernels.hpp"

#if defined(__aarch64__) || defined(__ARM_NEON)
#define EMOLAB_BUILD_NEON 1
#else
#define EMOLAB_BUILD_NEON 0
#endif

#if EMOLAB_BUILD_NEON

#include <arm_neon.h>

#include <cmath>
#include <cstdint>
#include <limits>

// NEON is 4-wide; two q registers hold the same 8-lane accumulator
// layout the scalar reference uses, so results stay bit-identical.

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

float dot_neon(const float* a, const float* b, std::size_t n) {
    float32x4_t acc0 = vdupq_n_f32(0.0f);
    float32x4_t acc1 = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = vaddq_f32(acc0, vmulq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
        acc1 = vaddq_f32(acc1, vmulq_f32(vld1q_f32(a + i + 4), vld1q_f32(b + i + 4)));
    }
    float lanes[8];
    vst1q_f32(lanes, acc0);
    vst1q_f32(lanes + 4, acc1);
    for (; i < n; ++i) lanes[i & 7] += a[i] * b[i];
    return combine8(lanes);
}

float sum_neon(const float* x, std::size_t n) {
    float32x4_t acc0 = vdupq_n_f32(0.0f);
    float32x4_t acc1 = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = vaddq_f32(acc0, vld1q_f32(x + i));
        acc1 = vaddq_f32(acc1, vld1q_f32(x + i + 4));
    }
    float lanes[8];
    vst1q_f32(lanes, acc0);
    vst1q_f32(lanes + 4, acc1);
    for (; i < n; ++i) lanes[i & 7] += x[i];
    return combine8(lanes);
}

float max_neon(const float* x, std::size_t n) {
    float32x4_t acc0 = vdupq_n_f32(-std::numeric_limits<float>::infinity());
    float32x4_t acc1 = acc0;
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = vmaxq_f32(acc0, vld1q_f32(x + i));
        acc1 = vmaxq_f32(acc1, vld1q_f32(x + i + 4));
    }
    float lanes[8];
    vst1q_f32(lanes, acc0);
    vst1q_f32(lanes + 4, acc1);
    for (; i < n; ++i) lanes[i & 7] = std::fmax(lanes[i & 7], x[i]);
    return combine_max8(lanes);
}

float sq_diff_sum_neon(const float* x, float c, std::size_t n) {
    const float32x4_t vc = vdupq_n_f32(c);
    float32x4_t acc0 = vdupq_n_f32(0.0f);
    float32x4_t acc1 = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const float32x4_t d0 = vsubq_f32(vld1q_f32(x + i), vc);
        const float32x4_t d1 = vsubq_f32(vld1q_f32(x + i + 4), vc);
        acc0 = vaddq_f32(acc0, vmulq_f32(d0, d0));
        acc1 = vaddq_f32(acc1, vmulq_f32(d1, d1));
    }
    float lanes[8];
    vst1q_f32(lanes, acc0);
    vst1q_f32(lanes + 4, acc1);
    for (; i < n; ++i) {
        const float d = x[i] - c;
        lanes[i & 7] += d * d;
    }
    return combine8(lanes);
}

void axpy_neon(float a, const float* x, float* y, std::size_t n) {
    const float32x4_t va = vdupq_n_f32(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float32x4_t vy = vld1q_f32(y + i);
        vst1q_f32(y + i, vaddq_f32(vy, vmulq_f32(va, vld1q_f32(x + i))));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void scale_neon(float a, float* x, std::size_t n) {
    const float32x4_t va = vdupq_n_f32(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(x + i, vmulq_f32(va, vld1q_f32(x + i)));
    for (; i < n; ++i) x[i] *= a;
}

void exp_inplace_neon(float* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] = exp_f32(x[i]);
}

void gelu_inplace_neon(float* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const float v = x[i];
        const float v3 = v * (v * v);
        const float inner = 0.7978845608028654f * (v + 0.044715f * v3);
        const float e = exp_f32(2.0f * inner);
        const float t = (e - 1.0f) / (e + 1.0f);
        x[i] = (0.5f * v) * (1.0f + t);
    }
}

const Ops neon_table = {dot_neon, sum_neon,  max_neon,        sq_diff_sum_neon,
                        axpy_neon, scale_neon, exp_inplace_neon, gelu_inplace_neon};

}  // namespace

const Ops* neon_ops() { return &neon_table; }

}  // namespace emolab::kernels

#else

namespace emolab::kernels {
const Ops* neon_ops() { return nullptr; }
}  // namespace emolab::kernels

#endif
