// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma
// and must only be entered after a runtime CPU check (see dispatch.cpp).

#include <immintrin.h>

#include <cstdint>
#include <cstring>

#include "fedmdm/kernels.hpp"
#include "fedmdm/special_fn.hpp"

namespace fedmdm::kernels {
namespace {

constexpr std::size_t kLanes = 4;

// fdlibm log: reduce to m in [sqrt(2)/2, sqrt(2)), then
// log(1+f) = f - hfsq + s*(hfsq + R(s^2)), s = f/(2+f).
// Inputs are positive, finite and normal.
inline __m256d log_pd(__m256d x) {
  const __m256i bits = _mm256_castpd_si256(x);
  const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
  const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000LL);

  // Biased exponent to double via the 2^52 magic-number trick.
  const __m256i biased = _mm256_srli_epi64(bits, 52);
  const __m256d magic = _mm256_set1_pd(4503599627370496.0);  // 2^52
  __m256d e = _mm256_sub_pd(
      _mm256_castsi256_pd(_mm256_or_si256(biased, _mm256_castpd_si256(magic))),
      magic);
  e = _mm256_sub_pd(e, _mm256_set1_pd(1023.0));

  __m256d m = _mm256_castsi256_pd(
      _mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits));
  const __m256d big = _mm256_cmp_pd(m, _mm256_set1_pd(1.4142135623730951), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), big);
  e = _mm256_add_pd(e, _mm256_and_pd(big, _mm256_set1_pd(1.0)));

  const __m256d f = _mm256_sub_pd(m, _mm256_set1_pd(1.0));
  const __m256d s = _mm256_div_pd(f, _mm256_add_pd(_mm256_set1_pd(2.0), f));
  const __m256d z = _mm256_mul_pd(s, s);
  const __m256d w = _mm256_mul_pd(z, z);
  // Split into even/odd chains as fdlibm does.
  __m256d t1 = _mm256_fmadd_pd(w, _mm256_set1_pd(1.531383769920937332e-01),
                               _mm256_set1_pd(2.222219843214978396e-01));
  t1 = _mm256_fmadd_pd(w, t1, _mm256_set1_pd(3.999999999940941908e-01));
  t1 = _mm256_mul_pd(w, t1);
  __m256d t2 = _mm256_fmadd_pd(w, _mm256_set1_pd(1.479819860511658591e-01),
                               _mm256_set1_pd(1.818357216161805012e-01));
  t2 = _mm256_fmadd_pd(w, t2, _mm256_set1_pd(2.857142874366239149e-01));
  t2 = _mm256_fmadd_pd(w, t2, _mm256_set1_pd(6.666666666666735130e-01));
  t2 = _mm256_mul_pd(z, t2);
  const __m256d r = _mm256_add_pd(t1, t2);

  const __m256d hfsq = _mm256_mul_pd(_mm256_set1_pd(0.5), _mm256_mul_pd(f, f));
  const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
  const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
  // e*ln2_hi - ((hfsq - (s*(hfsq+R) + e*ln2_lo)) - f)
  const __m256d inner =
      _mm256_fmadd_pd(e, ln2_lo, _mm256_mul_pd(s, _mm256_add_pd(hfsq, r)));
  return _mm256_fmsub_pd(e, ln2_hi,
                         _mm256_sub_pd(_mm256_sub_pd(hfsq, inner), f));
}

inline bool any(__m256d mask) { return _mm256_movemask_pd(mask) != 0; }

// Shift every lane up to >= 10 accumulating the product, then Stirling.
// Near the zeros at 1 and 2 that difference cancels, so lanes in [0.5, 3)
// are recomputed with the scalar routine.
inline __m256d log_gamma_pd(__m256d x) {
  const __m256d near_roots =
      _mm256_and_pd(_mm256_cmp_pd(x, _mm256_set1_pd(0.5), _CMP_GE_OQ),
                    _mm256_cmp_pd(x, _mm256_set1_pd(3.0), _CMP_LT_OQ));
  const __m256d x_in = x;
  const __m256d ten = _mm256_set1_pd(10.0);
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d prod = one;
  for (__m256d small = _mm256_cmp_pd(x, ten, _CMP_LT_OQ); any(small);
       small = _mm256_cmp_pd(x, ten, _CMP_LT_OQ)) {
    prod = _mm256_blendv_pd(prod, _mm256_mul_pd(prod, x), small);
    x = _mm256_add_pd(x, _mm256_and_pd(small, one));
  }
  const __m256d inv = _mm256_div_pd(one, x);
  const __m256d inv2 = _mm256_mul_pd(inv, inv);
  __m256d series = _mm256_set1_pd(1.0 / 156.0);
  series = _mm256_fmadd_pd(inv2, series, _mm256_set1_pd(-691.0 / 360360.0));
  series = _mm256_fmadd_pd(inv2, series, _mm256_set1_pd(1.0 / 1188.0));
  series = _mm256_fmadd_pd(inv2, series, _mm256_set1_pd(-1.0 / 1680.0));
  series = _mm256_fmadd_pd(inv2, series, _mm256_set1_pd(1.0 / 1260.0));
  series = _mm256_fmadd_pd(inv2, series, _mm256_set1_pd(-1.0 / 360.0));
  series = _mm256_fmadd_pd(inv2, series, _mm256_set1_pd(1.0 / 12.0));
  series = _mm256_mul_pd(inv, series);

  const __m256d half_log_two_pi = _mm256_set1_pd(0.91893853320467274178);
  __m256d out = _mm256_fmsub_pd(_mm256_sub_pd(x, _mm256_set1_pd(0.5)),
                                log_pd(x), x);
  out = _mm256_add_pd(out, _mm256_add_pd(half_log_two_pi, series));
  out = _mm256_sub_pd(out, log_pd(prod));
  const int fix = _mm256_movemask_pd(near_roots);
  if (fix != 0) {
    alignas(32) double xs[kLanes];
    alignas(32) double vals[kLanes];
    _mm256_store_pd(xs, x_in);
    _mm256_store_pd(vals, out);
    for (std::size_t l = 0; l < kLanes; ++l) {
      if (fix & (1 << l)) vals[l] = special_fn::log_gamma(xs[l]);
    }
    out = _mm256_load_pd(vals);
  }
  return out;
}

inline __m256d digamma_pd(__m256d x) {
  const __m256d ten = _mm256_set1_pd(10.0);
  const __m256d one = _mm256_set1_pd(1.0);
  // 1/x for x < 1 is kept apart (with its rounding residual) and added last.
  const __m256d tiny = _mm256_cmp_pd(x, one, _CMP_LT_OQ);
  const __m256d lead = _mm256_and_pd(tiny, _mm256_div_pd(one, x));
  const __m256d lead_residual =
      _mm256_and_pd(tiny, _mm256_div_pd(_mm256_fnmadd_pd(lead, x, one), x));
  x = _mm256_add_pd(x, _mm256_and_pd(tiny, one));
  __m256d shift = _mm256_setzero_pd();
  for (__m256d small = _mm256_cmp_pd(x, ten, _CMP_LT_OQ); any(small);
       small = _mm256_cmp_pd(x, ten, _CMP_LT_OQ)) {
    shift = _mm256_add_pd(shift, _mm256_and_pd(small, _mm256_div_pd(one, x)));
    x = _mm256_add_pd(x, _mm256_and_pd(small, one));
  }
  const __m256d inv = _mm256_div_pd(one, x);
  const __m256d inv2 = _mm256_mul_pd(inv, inv);
  __m256d tail = _mm256_set1_pd(-1.0 / 12.0);
  tail = _mm256_fmadd_pd(inv2, tail, _mm256_set1_pd(691.0 / 32760.0));
  tail = _mm256_fmadd_pd(inv2, tail, _mm256_set1_pd(-1.0 / 132.0));
  tail = _mm256_fmadd_pd(inv2, tail, _mm256_set1_pd(1.0 / 240.0));
  tail = _mm256_fmadd_pd(inv2, tail, _mm256_set1_pd(-1.0 / 252.0));
  tail = _mm256_fmadd_pd(inv2, tail, _mm256_set1_pd(1.0 / 120.0));
  tail = _mm256_fmadd_pd(inv2, tail, _mm256_set1_pd(-1.0 / 12.0));
  tail = _mm256_mul_pd(inv2, tail);  // already carries the minus sign
  __m256d out = _mm256_fnmadd_pd(_mm256_set1_pd(0.5), inv, log_pd(x));
  out = _mm256_add_pd(out, tail);
  out = _mm256_sub_pd(_mm256_sub_pd(out, shift), lead_residual);
  return _mm256_sub_pd(out, lead);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

// Copy a ragged tail into full-width buffers padded with `fill`.
inline void load_tail(const double* src, std::size_t rem, double fill,
                      double (&buf)[kLanes]) {
  for (std::size_t l = 0; l < kLanes; ++l) buf[l] = l < rem ? src[l] : fill;
}

inline __m256d dm_block(__m256d c, __m256d a) {
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d t = _mm256_sub_pd(log_gamma_pd(_mm256_add_pd(c, a)), log_gamma_pd(a));
  t = _mm256_sub_pd(t, log_gamma_pd(_mm256_add_pd(c, one)));
  // zero-count categories contribute exactly 0
  const __m256d nonzero = _mm256_cmp_pd(c, _mm256_setzero_pd(), _CMP_NEQ_OQ);
  return _mm256_and_pd(t, nonzero);
}

double dm_log_terms_avx2(const double* counts, const double* alpha,
                         std::size_t len) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + kLanes <= len; j += kLanes) {
    acc = _mm256_add_pd(
        acc, dm_block(_mm256_loadu_pd(counts + j), _mm256_loadu_pd(alpha + j)));
  }
  if (j < len) {
    double cb[kLanes];
    double ab[kLanes];
    load_tail(counts + j, len - j, 0.0, cb);
    load_tail(alpha + j, len - j, 1.0, ab);
    acc = _mm256_add_pd(acc, dm_block(_mm256_loadu_pd(cb), _mm256_loadu_pd(ab)));
  }
  return hsum(acc);
}

inline __m256d digamma_diff_block(__m256d c, __m256d a) {
  const __m256d d = _mm256_sub_pd(digamma_pd(_mm256_add_pd(c, a)), digamma_pd(a));
  const __m256d nonzero = _mm256_cmp_pd(c, _mm256_setzero_pd(), _CMP_NEQ_OQ);
  return _mm256_and_pd(d, nonzero);
}

void digamma_diff_axpy_avx2(const double* counts, const double* alpha,
                            double weight, double* out, std::size_t len) {
  const __m256d w = _mm256_set1_pd(weight);
  std::size_t j = 0;
  for (; j + kLanes <= len; j += kLanes) {
    const __m256d d = digamma_diff_block(_mm256_loadu_pd(counts + j),
                                         _mm256_loadu_pd(alpha + j));
    _mm256_storeu_pd(out + j, _mm256_fmadd_pd(w, d, _mm256_loadu_pd(out + j)));
  }
  if (j < len) {
    const std::size_t rem = len - j;
    double cb[kLanes];
    double ab[kLanes];
    double ob[kLanes];
    load_tail(counts + j, rem, 0.0, cb);
    load_tail(alpha + j, rem, 1.0, ab);
    load_tail(out + j, rem, 0.0, ob);
    const __m256d d = digamma_diff_block(_mm256_loadu_pd(cb), _mm256_loadu_pd(ab));
    _mm256_storeu_pd(ob, _mm256_fmadd_pd(w, d, _mm256_loadu_pd(ob)));
    std::memcpy(out + j, ob, rem * sizeof(double));
  }
}

void accumulate_avx2(double* dst, const double* src, std::size_t len) {
  std::size_t j = 0;
  for (; j + kLanes <= len; j += kLanes) {
    _mm256_storeu_pd(dst + j, _mm256_add_pd(_mm256_loadu_pd(dst + j),
                                            _mm256_loadu_pd(src + j)));
  }
  for (; j < len; ++j) dst[j] += src[j];
}

template <__m256d (*Fn)(__m256d)>
void batch(const double* x, double* out, std::size_t len) {
  std::size_t j = 0;
  for (; j + kLanes <= len; j += kLanes) {
    _mm256_storeu_pd(out + j, Fn(_mm256_loadu_pd(x + j)));
  }
  if (j < len) {
    double xb[kLanes];
    double ob[kLanes];
    load_tail(x + j, len - j, 1.0, xb);
    _mm256_storeu_pd(ob, Fn(_mm256_loadu_pd(xb)));
    std::memcpy(out + j, ob, (len - j) * sizeof(double));
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{
      Isa::avx2,
      &dm_log_terms_avx2,
      &digamma_diff_axpy_avx2,
      &accumulate_avx2,
      &batch<log_gamma_pd>,
      &batch<digamma_pd>,
  };
  return table;
}

}  // namespace fedmdm::kernels
