#pragma once

#include <cstddef>
#include <string_view>

namespace emolab::kernels {

// Inner-loop kernels for the float32 model runtime.
//
// Every reduction uses a fixed 8-lane accumulator layout with a fixed
// combine tree, and elementwise transcendentals use one shared
// polynomial algorithm. The scalar reference walks the exact same
// operation order as the vector variants, so scalar, AVX2 and NEON
// results are equal bit for bit (tests assert this, not a tolerance).
// FMA contraction is disabled project-wide for the same reason.

struct Ops {
    float (*dot)(const float*, const float*, std::size_t);
    float (*sum)(const float*, std::size_t);
    float (*max)(const float*, std::size_t);
    float (*sq_diff_sum)(const float*, float, std::size_t);  // sum((x - c)^2)
    void (*axpy)(float, const float*, float*, std::size_t);  // y += a * x
    void (*scale)(float, float*, std::size_t);               // x *= a
    void (*exp_inplace)(float*, std::size_t);
    void (*gelu_inplace)(float*, std::size_t);
};

namespace scalar {
float dot(const float* a, const float* b, std::size_t n);
float sum(const float* x, std::size_t n);
float max(const float* x, std::size_t n);
float sq_diff_sum(const float* x, float c, std::size_t n);
void axpy(float a, const float* x, float* y, std::size_t n);
void scale(float a, float* x, std::size_t n);
void exp_inplace(float* x, std::size_t n);
void gelu_inplace(float* x, std::size_t n);
extern const Ops ops;
}  // namespace scalar

// Null when the instruction set is unavailable on this build/CPU.
const Ops* avx2_ops();
const Ops* neon_ops();

// Runtime-selected implementation (best available unless forced).
const Ops& active();
std::string_view active_name();

// Test hook: "scalar", "avx2", "neon". Throws std::runtime_error if the
// requested variant is not available.
void force(std::string_view name);

inline float dot(const float* a, const float* b, std::size_t n) { return active().dot(a, b, n); }
inline float sum(const float* x, std::size_t n) { return active().sum(x, n); }
inline float max(const float* x, std::size_t n) { return active().max(x, n); }
inline float sq_diff_sum(const float* x, float c, std::size_t n) { return active().sq_diff_sum(x, c, n); }
inline void axpy(float a, const float* x, float* y, std::size_t n) { active().axpy(a, x, y, n); }
inline void scale(float a, float* x, std::size_t n) { active().scale(a, x, n); }
inline void exp_inplace(float* x, std::size_t n) { active().exp_inplace(x, n); }
inline void gelu_inplace(float* x, std::size_t n) { active().gelu_inplace(x, n); }

// softmax over x[0..n); composed from max/exp/sum so it inherits the
// bit-stable reduction order.
void softmax_inplace(float* x, std::size_t n);

// Reference exp used by all variants (public for accuracy tests).
float exp_f32(float x);

}  // namespace emolab::kernels
