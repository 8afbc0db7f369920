/* Twice the summed |divergence| over interior columns 1..w-2 of one row.
 *
 * Four fixed lanes (x - 1) mod 4 are accumulated separately and combined as
 * (s0 + s1) + (s2 + s3). The SSE2 path packs lanes (s0, s1) and (s2, s3)
 * into two registers and performs exactly the same IEEE operations, so both
 * paths return identical bits.
 */
#ifndef VFIQA_DIVROW_H
#define VFIQA_DIVROW_H

#include <math.h>
#include <stddef.h>

#if defined(__SSE2__)
#include <emmintrin.h>

static inline double vfiqa_div_row(const double *um, const double *vp, const double *vm, ptrdiff_t w)
{
    __m128d a = _mm_setzero_pd();
    __m128d b = _mm_setzero_pd();
    const __m128d mask = _mm_castsi128_pd(_mm_set1_epi64x(0x7fffffffffffffffLL));
    ptrdiff_t x = 1;
    ptrdiff_t xe = 1 + ((w - 2) / 4) * 4;
    for (; x < xe; x += 4) {
        __m128d d0 = _mm_add_pd(_mm_sub_pd(_mm_loadu_pd(um + x + 1), _mm_loadu_pd(um + x - 1)),
                                _mm_sub_pd(_mm_loadu_pd(vp + x), _mm_loadu_pd(vm + x)));
        __m128d d1 = _mm_add_pd(_mm_sub_pd(_mm_loadu_pd(um + x + 3), _mm_loadu_pd(um + x + 1)),
                                _mm_sub_pd(_mm_loadu_pd(vp + x + 2), _mm_loadu_pd(vm + x + 2)));
        a = _mm_add_pd(a, _mm_and_pd(d0, mask));
        b = _mm_add_pd(b, _mm_and_pd(d1, mask));
    }
    double lo[2], hi[2];
    _mm_storeu_pd(lo, a);
    _mm_storeu_pd(hi, b);
    double s0 = lo[0];
    for (; x < w - 1; x++)
        s0 = s0 + fabs((um[x + 1] - um[x - 1]) + (vp[x] - vm[x]));
    return (s0 + lo[1]) + (hi[0] + hi[1]);
}

#else

static inline double vfiqa_div_row(const double *um, const double *vp, const double *vm, ptrdiff_t w)
{
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    ptrdiff_t x = 1;
    ptrdiff_t xe = 1 + ((w - 2) / 4) * 4;
    for (; x < xe; x += 4) {
        s0 = s0 + fabs((um[x + 1] - um[x - 1]) + (vp[x] - vm[x]));
        s1 = s1 + fabs((um[x + 2] - um[x]) + (vp[x + 1] - vm[x + 1]));
        s2 = s2 + fabs((um[x + 3] - um[x + 1]) + (vp[x + 2] - vm[x + 2]));
        s3 = s3 + fabs((um[x + 4] - um[x + 2]) + (vp[x + 3] - vm[x + 3]));
    }
    for (; x < w - 1; x++)
        s0 = s0 + fabs((um[x + 1] - um[x - 1]) + (vp[x] - vm[x]));
    return (s0 + s1) + (s2 + s3);
}

#endif
#endif
