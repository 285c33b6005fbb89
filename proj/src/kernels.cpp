#include "emolab/kernels.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace emolab::kernels {

namespace {

// exp coefficients (Cephes expf polynomial on [-ln2/2, ln2/2]).
constexpr float kLog2e = 1.44269504088896341f;
constexpr float kLn2Hi = 0.693359375f;
constexpr float kLn2Lo = -2.12194440e-4f;
constexpr float kExpC0 = 1.9875691500e-4f;
constexpr float kExpC1 = 1.3981999507e-3f;
constexpr float kExpC2 = 8.3334519073e-3f;
constexpr float kExpC3 = 4.1665795894e-2f;
constexpr float kExpC4 = 1.6666665459e-1f;
constexpr float kExpC5 = 5.0000001201e-1f;
constexpr float kExpHi = 88.3762626647949f;
constexpr float kExpLo = -87.3365478515625f;

constexpr float kGeluScale = 0.7978845608028654f;  // sqrt(2/pi)
constexpr float kGeluCubic = 0.044715f;

inline float combine8(const float* l) {
    return ((l[0] + l[1]) + (l[2] + l[3])) + ((l[4] + l[5]) + (l[6] + l[7]));
}

inline float combine_max8(const float* l) {
    const float a = std::fmax(std::fmax(l[0], l[1]), std::fmax(l[2], l[3]));
    const float b = std::fmax(std::fmax(l[4], l[5]), std::fmax(l[6], l[7]));
    return std::fmax(a, b);
}

}  // namespace

float exp_f32(float x) {
    if (x > kExpHi) x = kExpHi;
    if (x < kExpLo) x = kExpLo;
    const float k = std::nearbyintf(x * kLog2e);
    float r = x - k * kLn2Hi;
    r = r - k * kLn2Lo;
    float p = kExpC0;
    p = p * r + kExpC1;
    p = p * r + kExpC2;
    p = p * r + kExpC3;
    p = p * r + kExpC4;
    p = p * r + kExpC5;
    float y = p * (r * r) + r + 1.0f;
    const std::int32_t bits = (static_cast<std::int32_t>(k) + 127) << 23;
    return y * std::bit_cast<float>(bits);
}

namespace {

inline float gelu_f32(float x) {
    const float x3 = x * (x * x);  // association fixed; vector variants mirror it
    const float inner = kGeluScale * (x + kGeluCubic * x3);
    // tanh(t) = (e^{2t} - 1) / (e^{2t} + 1), reusing the shared exp
    const float e = exp_f32(2.0f * inner);
    const float t = (e - 1.0f) / (e + 1.0f);
    return (0.5f * x) * (1.0f + t);
}

}  // namespace

namespace scalar {

float dot(const float* a, const float* b, std::size_t n) {
    float lanes[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        for (std::size_t j = 0; j < 8; ++j) lanes[j] += a[i + j] * b[i + j];
    for (; i < n; ++i) lanes[i & 7] += a[i] * b[i];
    return combine8(lanes);
}

float sum(const float* x, std::size_t n) {
    float lanes[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        for (std::size_t j = 0; j < 8; ++j) lanes[j] += x[i + j];
    for (; i < n; ++i) lanes[i & 7] += x[i];
    return combine8(lanes);
}

float max(const float* x, std::size_t n) {
    float lanes[8];
    for (auto& l : lanes) l = -std::numeric_limits<float>::infinity();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        for (std::size_t j = 0; j < 8; ++j) lanes[j] = std::fmax(lanes[j], x[i + j]);
    for (; i < n; ++i) lanes[i & 7] = std::fmax(lanes[i & 7], x[i]);
    return combine_max8(lanes);
}

float sq_diff_sum(const float* x, float c, std::size_t n) {
    float lanes[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        for (std::size_t j = 0; j < 8; ++j) {
            const float d = x[i + j] - c;
            lanes[j] += d * d;
        }
    for (; i < n; ++i) {
        const float d = x[i] - c;
        lanes[i & 7] += d * d;
    }
    return combine8(lanes);
}

void axpy(float a, const float* x, float* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale(float a, float* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void exp_inplace(float* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] = exp_f32(x[i]);
}

void gelu_inplace(float* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] = gelu_f32(x[i]);
}

const Ops ops = {dot, sum, max, sq_diff_sum, axpy, scale, exp_inplace, gelu_inplace};

}  // namespace scalar

void softmax_inplace(float* x, std::size_t n) {
    if (n == 0) return;
    const float m = active().max(x, n);
    for (std::size_t i = 0; i < n; ++i) x[i] -= m;
    active().exp_inplace(x, n);
    const float s = active().sum(x, n);
    const float inv = 1.0f / s;
    for (std::size_t i = 0; i < n; ++i) x[i] *= inv;
}

namespace {

const Ops* pick_best() {
    if (const Ops* a = avx2_ops()) return a;
    if (const Ops* a = neon_ops()) return a;
    return &scalar::ops;
}

struct Active {
    const Ops* ops;
    std::string_view name;
};

Active& state() {
    static Active a = [] {
        const Ops* best = pick_best();
        std::string_view n = best == &scalar::ops ? "scalar" : (best == avx2_ops() ? "avx2" : "neon");
        return Active{best, n};
    }();
    return a;
}

}  // namespace

const Ops& active() { return *state().ops; }

std::string_view active_name() { return state().name; }

void force(std::string_view name) {
    if (name == "scalar") {
        state() = {&scalar::ops, "scalar"};
        return;
    }
    if (name == "avx2") {
        if (const Ops* a = avx2_ops()) {
            state() = {a, "avx2"};
            return;
        }
        throw std::runtime_error("avx2 kernels unavailable on this cpu/build");
    }
    if (name == "neon") {
        if (const Ops* a = neon_ops()) {
            state() = {a, "neon"};
            return;
        }
        throw std::runtime_error("neon kernels unavailable on this cpu/build");
    }
    throw std::runtime_error("unknown kernel variant: " + std::string(name));
}

}  // namespace emolab::kernels
