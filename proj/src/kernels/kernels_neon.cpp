// AArch64 Advanced SIMD variants, two double lanes. Advanced SIMD is part of
// the base AArch64 ISA, so no runtime check is needed there.
//
// Built with FEDMDM_NEON_EMULATION the intrinsics come from a portable
// emulation header instead, so the same code can be checked on other hosts.

#if defined(FEDMDM_NEON_EMULATION)
#include "neon_emulation.hpp"
#else
#include <arm_neon.h>
#endif

#include <cstdint>
#include <cstring>

#include "fedmdm/kernels.hpp"
#include "fedmdm/special_fn.hpp"

namespace fedmdm::kernels {
namespace {

constexpr std::size_t kLanes = 2;

inline float64x2_t splat(double v) { return vdupq_n_f64(v); }

inline float64x2_t mask_and(uint64x2_t mask, float64x2_t v) {
  return vreinterpretq_f64_u64(vandq_u64(mask, vreinterpretq_u64_f64(v)));
}

inline bool any(uint64x2_t mask) {
  return (vgetq_lane_u64(mask, 0) | vgetq_lane_u64(mask, 1)) != 0;
}

// Same fdlibm reduction as the AVX2 variant.
inline float64x2_t log_pd(float64x2_t x) {
  const uint64x2_t bits = vreinterpretq_u64_f64(x);
  float64x2_t e = vsubq_f64(vcvtq_f64_u64(vshrq_n_u64(bits, 52)), splat(1023.0));
  float64x2_t m = vreinterpretq_f64_u64(
      vorrq_u64(vandq_u64(bits, vdupq_n_u64(0x000FFFFFFFFFFFFFULL)),
                vdupq_n_u64(0x3FF0000000000000ULL)));
  const uint64x2_t big = vcgtq_f64(m, splat(1.4142135623730951));
  m = vbslq_f64(big, vmulq_f64(m, splat(0.5)), m);
  e = vaddq_f64(e, mask_and(big, splat(1.0)));

  const float64x2_t f = vsubq_f64(m, splat(1.0));
  const float64x2_t s = vdivq_f64(f, vaddq_f64(splat(2.0), f));
  const float64x2_t z = vmulq_f64(s, s);
  const float64x2_t w = vmulq_f64(z, z);
  float64x2_t t1 = vfmaq_f64(splat(2.222219843214978396e-01), w, splat(1.531383769920937332e-01));
  t1 = vfmaq_f64(splat(3.999999999940941908e-01), w, t1);
  t1 = vmulq_f64(w, t1);
  float64x2_t t2 = vfmaq_f64(splat(1.818357216161805012e-01), w, splat(1.479819860511658591e-01));
  t2 = vfmaq_f64(splat(2.857142874366239149e-01), w, t2);
  t2 = vfmaq_f64(splat(6.666666666666735130e-01), w, t2);
  t2 = vmulq_f64(z, t2);
  const float64x2_t r = vaddq_f64(t1, t2);

  const float64x2_t hfsq = vmulq_f64(splat(0.5), vmulq_f64(f, f));
  const float64x2_t inner =
      vfmaq_f64(vmulq_f64(s, vaddq_f64(hfsq, r)), e, splat(1.90821492927058770002e-10));
  const float64x2_t rest = vsubq_f64(vsubq_f64(hfsq, inner), f);
  return vfmaq_f64(vnegq_f64(rest), e, splat(6.93147180369123816490e-01));
}

inline float64x2_t log_gamma_pd(float64x2_t x) {
  const uint64x2_t near_roots =
      vandq_u64(vcgeq_f64(x, splat(0.5)), vcltq_f64(x, splat(3.0)));
  const float64x2_t x_in = x;
  const float64x2_t one = splat(1.0);
  float64x2_t prod = one;
  for (uint64x2_t small = vcltq_f64(x, splat(10.0)); any(small);
       small = vcltq_f64(x, splat(10.0))) {
    prod = vbslq_f64(small, vmulq_f64(prod, x), prod);
    x = vaddq_f64(x, mask_and(small, one));
  }
  const float64x2_t inv = vdivq_f64(one, x);
  const float64x2_t inv2 = vmulq_f64(inv, inv);
  float64x2_t series = splat(1.0 / 156.0);
  series = vfmaq_f64(splat(-691.0 / 360360.0), inv2, series);
  series = vfmaq_f64(splat(1.0 / 1188.0), inv2, series);
  series = vfmaq_f64(splat(-1.0 / 1680.0), inv2, series);
  series = vfmaq_f64(splat(1.0 / 1260.0), inv2, series);
  series = vfmaq_f64(splat(-1.0 / 360.0), inv2, series);
  series = vfmaq_f64(splat(1.0 / 12.0), inv2, series);
  series = vmulq_f64(inv, series);

  float64x2_t out = vfmaq_f64(vnegq_f64(x), vsubq_f64(x, splat(0.5)), log_pd(x));
  out = vaddq_f64(out, vaddq_f64(splat(0.91893853320467274178), series));
  out = vsubq_f64(out, log_pd(prod));
  if (any(near_roots)) {
    double xs[kLanes];
    double vals[kLanes];
    vst1q_f64(xs, x_in);
    vst1q_f64(vals, out);
    if (vgetq_lane_u64(near_roots, 0)) vals[0] = special_fn::log_gamma(xs[0]);
    if (vgetq_lane_u64(near_roots, 1)) vals[1] = special_fn::log_gamma(xs[1]);
    out = vld1q_f64(vals);
  }
  return out;
}

inline float64x2_t digamma_pd(float64x2_t x) {
  const float64x2_t one = splat(1.0);
  const uint64x2_t tiny = vcltq_f64(x, one);
  const float64x2_t lead = mask_and(tiny, vdivq_f64(one, x));
  const float64x2_t lead_residual =
      mask_and(tiny, vdivq_f64(vfmsq_f64(one, lead, x), x));
  x = vaddq_f64(x, mask_and(tiny, one));
  float64x2_t shift = splat(0.0);
  for (uint64x2_t small = vcltq_f64(x, splat(10.0)); any(small);
       small = vcltq_f64(x, splat(10.0))) {
    shift = vaddq_f64(shift, mask_and(small, vdivq_f64(one, x)));
    x = vaddq_f64(x, mask_and(small, one));
  }
  const float64x2_t inv = vdivq_f64(one, x);
  const float64x2_t inv2 = vmulq_f64(inv, inv);
  float64x2_t tail = splat(-1.0 / 12.0);
  tail = vfmaq_f64(splat(691.0 / 32760.0), inv2, tail);
  tail = vfmaq_f64(splat(-1.0 / 132.0), inv2, tail);
  tail = vfmaq_f64(splat(1.0 / 240.0), inv2, tail);
  tail = vfmaq_f64(splat(-1.0 / 252.0), inv2, tail);
  tail = vfmaq_f64(splat(1.0 / 120.0), inv2, tail);
  tail = vfmaq_f64(splat(-1.0 / 12.0), inv2, tail);
  tail = vmulq_f64(inv2, tail);
  float64x2_t out = vfmsq_f64(log_pd(x), splat(0.5), inv);
  out = vaddq_f64(out, tail);
  out = vsubq_f64(vsubq_f64(out, shift), lead_residual);
  return vsubq_f64(out, lead);
}

inline void load_tail(const double* src, std::size_t rem, double fill,
                      double (&buf)[kLanes]) {
  for (std::size_t l = 0; l < kLanes; ++l) buf[l] = l < rem ? src[l] : fill;
}

inline float64x2_t dm_block(float64x2_t c, float64x2_t a) {
  float64x2_t t = vsubq_f64(log_gamma_pd(vaddq_f64(c, a)), log_gamma_pd(a));
  t = vsubq_f64(t, log_gamma_pd(vaddq_f64(c, splat(1.0))));
  return vbslq_f64(vceqq_f64(c, splat(0.0)), splat(0.0), t);
}

double dm_log_terms_neon(const double* counts, const double* alpha,
                         std::size_t len) {
  float64x2_t acc = splat(0.0);
  std::size_t j = 0;
  for (; j + kLanes <= len; j += kLanes) {
    acc = vaddq_f64(acc, dm_block(vld1q_f64(counts + j), vld1q_f64(alpha + j)));
  }
  if (j < len) {
    double cb[kLanes];
    double ab[kLanes];
    load_tail(counts + j, len - j, 0.0, cb);
    load_tail(alpha + j, len - j, 1.0, ab);
    acc = vaddq_f64(acc, dm_block(vld1q_f64(cb), vld1q_f64(ab)));
  }
  return vaddvq_f64(acc);
}

inline float64x2_t digamma_diff_block(float64x2_t c, float64x2_t a) {
  const float64x2_t d = vsubq_f64(digamma_pd(vaddq_f64(c, a)), digamma_pd(a));
  return vbslq_f64(vceqq_f64(c, splat(0.0)), splat(0.0), d);
}

void digamma_diff_axpy_neon(const double* counts, const double* alpha,
                            double weight, double* out, std::size_t len) {
  const float64x2_t w = splat(weight);
  std::size_t j = 0;
  for (; j + kLanes <= len; j += kLanes) {
    const float64x2_t d = digamma_diff_block(vld1q_f64(counts + j), vld1q_f64(alpha + j));
    vst1q_f64(out + j, vfmaq_f64(vld1q_f64(out + j), w, d));
  }
  if (j < len) {
    const std::size_t rem = len - j;
    double cb[kLanes];
    double ab[kLanes];
    double ob[kLanes];
    load_tail(counts + j, rem, 0.0, cb);
    load_tail(alpha + j, rem, 1.0, ab);
    load_tail(out + j, rem, 0.0, ob);
    const float64x2_t d = digamma_diff_block(vld1q_f64(cb), vld1q_f64(ab));
    vst1q_f64(ob, vfmaq_f64(vld1q_f64(ob), w, d));
    std::memcpy(out + j, ob, rem * sizeof(double));
  }
}

void accumulate_neon(double* dst, const double* src, std::size_t len) {
  std::size_t j = 0;
  for (; j + kLanes <= len; j += kLanes) {
    vst1q_f64(dst + j, vaddq_f64(vld1q_f64(dst + j), vld1q_f64(src + j)));
  }
  for (; j < len; ++j) dst[j] += src[j];
}

template <float64x2_t (*Fn)(float64x2_t)>
void batch(const double* x, double* out, std::size_t len) {
  std::size_t j = 0;
  for (; j + kLanes <= len; j += kLanes) vst1q_f64(out + j, Fn(vld1q_f64(x + j)));
  if (j < len) {
    double xb[kLanes];
    double ob[kLanes];
    load_tail(x + j, len - j, 1.0, xb);
    vst1q_f64(ob, Fn(vld1q_f64(xb)));
    std::memcpy(out + j, ob, (len - j) * sizeof(double));
  }
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable table{
      Isa::neon,
      &dm_log_terms_neon,
      &digamma_diff_axpy_neon,
      &accumulate_neon,
      &batch<log_gamma_pd>,
      &batch<digamma_pd>,
  };
  return table;
}

}  // namespace fedmdm::kernels
