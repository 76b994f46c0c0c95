/*
 * Native ristretto255 backend.
 *
 * Field elements use five 51-bit limbs; points are extended twisted Edwards
 * coordinates.  Python sees a point as an opaque 160-byte string (the raw
 * limbs) and vectors of points as concatenations of those strings.  Scalars
 * cross the boundary as 32-byte little-endian strings.
 */
#define PY_SSIZE_T_CLEAN
#include <Python.h>
#include <stdint.h>
#include <string.h>
#include <stdlib.h>

typedef unsigned __int128 u128;
typedef uint64_t fe[5];

typedef struct {
    fe X, Y, Z, T;
} ge;

/* (Y+X, Y-X, 2Z, 2dT): operand form for repeated additions */
typedef struct {
    fe YpX, YmX, Z2, T2d;
} ge_cached;

#define RAW_LEN ((Py_ssize_t)sizeof(ge))
#define MASK51 ((uint64_t)0x7ffffffffffffULL)

static fe FE_D, FE_D2, FE_SQRT_M1, FE_INVSQRT_A_MINUS_D, FE_SQRT_AD_MINUS_ONE,
    FE_ONE_MINUS_D_SQ, FE_D_MINUS_ONE_SQ;

/* ---- field arithmetic -------------------------------------------------- */

static inline void fe_copy(fe h, const fe f) { memcpy(h, f, sizeof(fe)); }

static inline void fe_zero(fe h) { memset(h, 0, sizeof(fe)); }

static inline void fe_one(fe h) {
    fe_zero(h);
    h[0] = 1;
}

static inline void fe_carry(fe h) {
    uint64_t c;
    c = h[0] >> 51; h[0] &= MASK51; h[1] += c;
    c = h[1] >> 51; h[1] &= MASK51; h[2] += c;
    c = h[2] >> 51; h[2] &= MASK51; h[3] += c;
    c = h[3] >> 51; h[3] &= MASK51; h[4] += c;
    c = h[4] >> 51; h[4] &= MASK51; h[0] += c * 19;
}

static inline void fe_add(fe h, const fe f, const fe g) {
    for (int i = 0; i < 5; i++) h[i] = f[i] + g[i];
    fe_carry(h);
}

/* f - g computed as f + 4p - g so limbs never underflow */
static inline void fe_sub(fe h, const fe f, const fe g) {
    h[0] = (f[0] + 0x1fffffffffffb4ULL) - g[0];
    h[1] = (f[1] + 0x1ffffffffffffcULL) - g[1];
    h[2] = (f[2] + 0x1ffffffffffffcULL) - g[2];
    h[3] = (f[3] + 0x1ffffffffffffcULL) - g[3];
    h[4] = (f[4] + 0x1ffffffffffffcULL) - g[4];
    fe_carry(h);
}

static inline void fe_neg(fe h, const fe f) {
    fe z;
    fe_zero(z);
    fe_sub(h, z, f);
}

static inline void fe_mul(fe h, const fe f, const fe g) {
    uint64_t f0 = f[0], f1 = f[1], f2 = f[2], f3 = f[3], f4 = f[4];
    uint64_t g0 = g[0], g1 = g[1], g2 = g[2], g3 = g[3], g4 = g[4];
    uint64_t g1_19 = 19 * g1, g2_19 = 19 * g2, g3_19 = 19 * g3, g4_19 = 19 * g4;
    u128 r0 = (u128)f0 * g0 + (u128)f1 * g4_19 + (u128)f2 * g3_19 + (u128)f3 * g2_19 + (u128)f4 * g1_19;
    u128 r1 = (u128)f0 * g1 + (u128)f1 * g0 + (u128)f2 * g4_19 + (u128)f3 * g3_19 + (u128)f4 * g2_19;
    u128 r2 = (u128)f0 * g2 + (u128)f1 * g1 + (u128)f2 * g0 + (u128)f3 * g4_19 + (u128)f4 * g3_19;
    u128 r3 = (u128)f0 * g3 + (u128)f1 * g2 + (u128)f2 * g1 + (u128)f3 * g0 + (u128)f4 * g4_19;
    u128 r4 = (u128)f0 * g4 + (u128)f1 * g3 + (u128)f2 * g2 + (u128)f3 * g1 + (u128)f4 * g0;
    uint64_t c;
    c = (uint64_t)(r0 >> 51); h[0] = (uint64_t)r0 & MASK51; r1 += c;
    c = (uint64_t)(r1 >> 51); h[1] = (uint64_t)r1 & MASK51; r2 += c;
    c = (uint64_t)(r2 >> 51); h[2] = (uint64_t)r2 & MASK51; r3 += c;
    c = (uint64_t)(r3 >> 51); h[3] = (uint64_t)r3 & MASK51; r4 += c;
    c = (uint64_t)(r4 >> 51); h[4] = (uint64_t)r4 & MASK51;
    h[0] += c * 19;
    c = h[0] >> 51; h[0] &= MASK51; h[1] += c;
}

static inline void fe_sq(fe h, const fe f) {
    uint64_t f0 = f[0], f1 = f[1], f2 = f[2], f3 = f[3], f4 = f[4];
    uint64_t f0_2 = 2 * f0, f1_2 = 2 * f1;
    uint64_t f1_38 = 38 * f1, f2_38 = 38 * f2, f3_38 = 38 * f3;
    uint64_t f3_19 = 19 * f3, f4_19 = 19 * f4;
    u128 r0 = (u128)f0 * f0 + (u128)f1_38 * f4 + (u128)f2_38 * f3;
    u128 r1 = (u128)f0_2 * f1 + (u128)f2_38 * f4 + (u128)f3_19 * f3;
    u128 r2 = (u128)f0_2 * f2 + (u128)f1 * f1 + (u128)f3_38 * f4;
    u128 r3 = (u128)f0_2 * f3 + (u128)f1_2 * f2 + (u128)f4_19 * f4;
    u128 r4 = (u128)f0_2 * f4 + (u128)f1_2 * f3 + (u128)f2 * f2;
    uint64_t c;
    c = (uint64_t)(r0 >> 51); h[0] = (uint64_t)r0 & MASK51; r1 += c;
    c = (uint64_t)(r1 >> 51); h[1] = (uint64_t)r1 & MASK51; r2 += c;
    c = (uint64_t)(r2 >> 51); h[2] = (uint64_t)r2 & MASK51; r3 += c;
    c = (uint64_t)(r3 >> 51); h[3] = (uint64_t)r3 & MASK51; r4 += c;
    c = (uint64_t)(r4 >> 51); h[4] = (uint64_t)r4 & MASK51;
    h[0] += c * 19;
    c = h[0] >> 51; h[0] &= MASK51; h[1] += c;
}

static void fe_frombytes(fe h, const uint8_t s[32]) {
    uint64_t w[4];
    for (int i = 0; i < 4; i++) {
        uint64_t v = 0;
        for (int j = 7; j >= 0; j--) v = (v << 8) | s[8 * i + j];
        w[i] = v;
    }
    h[0] = w[0] & MASK51;
    h[1] = ((w[0] >> 51) | (w[1] << 13)) & MASK51;
    h[2] = ((w[1] >> 38) | (w[2] << 26)) & MASK51;
    h[3] = ((w[2] >> 25) | (w[3] << 39)) & MASK51;
    h[4] = (w[3] >> 12) & MASK51;
}

static void fe_tobytes(uint8_t s[32], const fe f) {
    fe h;
    fe_copy(h, f);
    fe_carry(h);
    fe_carry(h);
    uint64_t q = (h[0] + 19) >> 51;
    q = (h[1] + q) >> 51;
    q = (h[2] + q) >> 51;
    q = (h[3] + q) >> 51;
    q = (h[4] + q) >> 51;
    h[0] += 19 * q;
    uint64_t c;
    c = h[0] >> 51; h[0] &= MASK51; h[1] += c;
    c = h[1] >> 51; h[1] &= MASK51; h[2] += c;
    c = h[2] >> 51; h[2] &= MASK51; h[3] += c;
    c = h[3] >> 51; h[3] &= MASK51; h[4] += c;
    h[4] &= MASK51;
    uint64_t w[4];
    w[0] = h[0] | (h[1] << 51);
    w[1] = (h[1] >> 13) | (h[2] << 38);
    w[2] = (h[2] >> 26) | (h[3] << 25);
    w[3] = (h[3] >> 39) | (h[4] << 12);
    for (int i = 0; i < 4; i++)
        for (int j = 0; j < 8; j++) s[8 * i + j] = (uint8_t)(w[i] >> (8 * j));
}

static int fe_iszero(const fe f) {
    uint8_t s[32];
    uint8_t acc = 0;
    fe_tobytes(s, f);
    for (int i = 0; i < 32; i++) acc |= s[i];
    return acc == 0;
}

static int fe_isnegative(const fe f) {
    uint8_t s[32];
    fe_tobytes(s, f);
    return s[0] & 1;
}

static int fe_eq(const fe f, const fe g) {
    fe d;
    fe_sub(d, f, g);
    return fe_iszero(d);
}

/* f^(2^n) */
static void fe_sqn(fe h, const fe f, int n) {
    fe_sq(h, f);
    for (int i = 1; i < n; i++) fe_sq(h, h);
}

/* f^(2^250 - 1) into t250 and f^11 into f11 */
static void fe_pow_core(fe t250, fe f11, const fe f) {
    fe f2, f9, t5, t10, t20, t40, t50, t100, t200, t;
    fe_sq(f2, f);
    fe_sqn(t, f2, 2);
    fe_mul(f9, t, f);
    fe_mul(f11, f9, f2);
    fe_sq(t, f11);
    fe_mul(t5, t, f9);          /* 2^5 - 1 */
    fe_sqn(t, t5, 5);
    fe_mul(t10, t, t5);         /* 2^10 - 1 */
    fe_sqn(t, t10, 10);
    fe_mul(t20, t, t10);        /* 2^20 - 1 */
    fe_sqn(t, t20, 20);
    fe_mul(t40, t, t20);        /* 2^40 - 1 */
    fe_sqn(t, t40, 10);
    fe_mul(t50, t, t10);        /* 2^50 - 1 */
    fe_sqn(t, t50, 50);
    fe_mul(t100, t, t50);       /* 2^100 - 1 */
    fe_sqn(t, t100, 100);
    fe_mul(t200, t, t100);      /* 2^200 - 1 */
    fe_sqn(t, t200, 50);
    fe_mul(t250, t, t50);       /* 2^250 - 1 */
}

static void fe_pow_p58(fe h, const fe f) {
    fe t250, f11, t;
    fe_pow_core(t250, f11, f);
    fe_sqn(t, t250, 2);
    fe_mul(h, t, f);            /* 2^252 - 3 */
}

static void fe_abs(fe h, const fe f) {
    if (fe_isnegative(f)) fe_neg(h, f);
    else fe_copy(h, f);
}

static int sqrt_ratio_m1(fe r_out, const fe u, const fe v) {
    fe v3, v7, r, check, t, neg_u, neg_u_i;
    fe_sq(t, v);
    fe_mul(v3, t, v);
    fe_sq(t, v3);
    fe_mul(v7, t, v);
    fe_mul(t, u, v7);
    fe_pow_p58(r, t);
    fe_mul(t, u, v3);
    fe_mul(r, r, t);
    fe_sq(t, r);
    fe_mul(check, v, t);
    fe_neg(neg_u, u);
    fe_mul(neg_u_i, neg_u, FE_SQRT_M1);
    int correct = fe_eq(check, u);
    int flipped = fe_eq(check, neg_u);
    int flipped_i = fe_eq(check, neg_u_i);
    if (flipped || flipped_i) fe_mul(r, r, FE_SQRT_M1);
    fe_abs(r_out, r);
    return correct || flipped;
}

/* ---- group arithmetic -------------------------------------------------- */

static void ge_identity(ge *p) {
    fe_zero(p->X);
    fe_one(p->Y);
    fe_one(p->Z);
    fe_zero(p->T);
}

static void ge_to_cached(ge_cached *c, const ge *p) {
    fe_add(c->YpX, p->Y, p->X);
    fe_sub(c->YmX, p->Y, p->X);
    fe_add(c->Z2, p->Z, p->Z);
    fe_mul(c->T2d, p->T, FE_D2);
}

static void cached_neg(ge_cached *r, const ge_cached *c) {
    fe_copy(r->YpX, c->YmX);
    fe_copy(r->YmX, c->YpX);
    fe_copy(r->Z2, c->Z2);
    fe_neg(r->T2d, c->T2d);
}

static void ge_add_cached(ge *r, const ge *p, const ge_cached *q) {
    fe a, b, c, d, e, f, g, h;
    fe_sub(a, p->Y, p->X);
    fe_mul(a, a, q->YmX);
    fe_add(b, p->Y, p->X);
    fe_mul(b, b, q->YpX);
    fe_mul(c, p->T, q->T2d);
    fe_mul(d, p->Z, q->Z2);
    fe_sub(e, b, a);
    fe_sub(f, d, c);
    fe_add(g, d, c);
    fe_add(h, b, a);
    fe_mul(r->X, e, f);
    fe_mul(r->Y, g, h);
    fe_mul(r->Z, f, g);
    fe_mul(r->T, e, h);
}

static void ge_add(ge *r, const ge *p, const ge *q) {
    ge_cached c;
    ge_to_cached(&c, q);
    ge_add_cached(r, p, &c);
}

static void ge_neg(ge *r, const ge *p) {
    fe_neg(r->X, p->X);
    fe_copy(r->Y, p->Y);
    fe_copy(r->Z, p->Z);
    fe_neg(r->T, p->T);
}

static void ge_double(ge *r, const ge *p) {
    fe a, b, c, e, f, g, h, t;
    fe_sq(a, p->X);
    fe_sq(b, p->Y);
    fe_sq(c, p->Z);
    fe_add(c, c, c);
    fe_add(t, p->X, p->Y);
    fe_sq(e, t);
    fe_sub(e, e, a);
    fe_sub(e, e, b);
    fe_sub(g, b, a);
    fe_sub(f, g, c);
    fe_add(h, a, b);
    fe_neg(h, h);
    fe_mul(r->X, e, f);
    fe_mul(r->Y, g, h);
    fe_mul(r->Z, f, g);
    fe_mul(r->T, e, h);
}

/* doubling whose T coordinate is left stale; only valid as input to another doubling */
static void ge_double_partial(ge *r, const ge *p) {
    fe a, b, c, e, f, g, h, t;
    fe_sq(a, p->X);
    fe_sq(b, p->Y);
    fe_sq(c, p->Z);
    fe_add(c, c, c);
    fe_add(t, p->X, p->Y);
    fe_sq(e, t);
    fe_sub(e, e, a);
    fe_sub(e, e, b);
    fe_sub(g, b, a);
    fe_sub(f, g, c);
    fe_add(h, a, b);
    fe_neg(h, h);
    fe_mul(r->X, e, f);
    fe_mul(r->Y, g, h);
    fe_mul(r->Z, f, g);
}

static int ge_eq(const ge *p, const ge *q) {
    fe l, r;
    fe_mul(l, p->X, q->Y);
    fe_mul(r, p->Y, q->X);
    if (fe_eq(l, r)) return 1;
    fe_mul(l, p->Y, q->Y);
    fe_mul(r, p->X, q->X);
    return fe_eq(l, r);
}

static int ge_decode(ge *p, const uint8_t in[32]) {
    /* canonical and non-negative */
    static const uint8_t pbytes[32] = {
        0xed, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff,
        0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff,
        0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0x7f};
    int lt = 0;
    for (int i = 31; i >= 0; i--) {
        if (in[i] < pbytes[i]) { lt = 1; break; }
        if (in[i] > pbytes[i]) break;
    }
    if (!lt || (in[0] & 1)) return 0;

    fe s, ss, u1, u2, u2sq, v, t, invsqrt, den_x, den_y, x, y;
    fe one;
    fe_one(one);
    fe_frombytes(s, in);
    fe_sq(ss, s);
    fe_sub(u1, one, ss);
    fe_add(u2, one, ss);
    fe_sq(u2sq, u2);
    fe_sq(t, u1);
    fe_mul(t, t, FE_D);
    fe_neg(t, t);
    fe_sub(v, t, u2sq);
    fe_mul(t, v, u2sq);
    int was_square = sqrt_ratio_m1(invsqrt, one, t);
    fe_mul(den_x, invsqrt, u2);
    fe_mul(den_y, invsqrt, den_x);
    fe_mul(den_y, den_y, v);
    fe_add(t, s, s);
    fe_mul(t, t, den_x);
    fe_abs(x, t);
    fe_mul(y, u1, den_y);
    fe_mul(t, x, y);
    if (!was_square || fe_isnegative(t) || fe_iszero(y)) return 0;
    fe_copy(p->X, x);
    fe_copy(p->Y, y);
    fe_one(p->Z);
    fe_copy(p->T, t);
    return 1;
}

static void ge_encode(uint8_t out[32], const ge *p) {
    fe u1, u2, t, invsqrt, den1, den2, z_inv, x, y, den_inv, one;
    fe_one(one);
    fe_add(t, p->Z, p->Y);
    fe_sub(u1, p->Z, p->Y);
    fe_mul(u1, u1, t);
    fe_mul(u2, p->X, p->Y);
    fe_sq(t, u2);
    fe_mul(t, t, u1);
    sqrt_ratio_m1(invsqrt, one, t);
    fe_mul(den1, invsqrt, u1);
    fe_mul(den2, invsqrt, u2);
    fe_mul(z_inv, den1, den2);
    fe_mul(z_inv, z_inv, p->T);
    fe_mul(t, p->T, z_inv);
    if (fe_isnegative(t)) {
        fe_mul(x, p->Y, FE_SQRT_M1);
        fe_mul(y, p->X, FE_SQRT_M1);
        fe_mul(den_inv, den1, FE_INVSQRT_A_MINUS_D);
    } else {
        fe_copy(x, p->X);
        fe_copy(y, p->Y);
        fe_copy(den_inv, den2);
    }
    fe_mul(t, x, z_inv);
    if (fe_isnegative(t)) fe_neg(y, y);
    fe_sub(t, p->Z, y);
    fe_mul(t, t, den_inv);
    fe_abs(t, t);
    fe_tobytes(out, t);
}

static void ge_map(ge *p, const fe t) {
    fe r, u, v, s, c, n, w0, w1, w2, w3, tmp, one, s2;
    fe_one(one);
    fe_sq(r, t);
    fe_mul(r, r, FE_SQRT_M1);
    fe_add(u, r, one);
    fe_mul(u, u, FE_ONE_MINUS_D_SQ);
    fe_mul(tmp, r, FE_D);
    fe_add(tmp, tmp, one);
    fe_neg(tmp, tmp);
    fe_add(v, r, FE_D);
    fe_mul(v, v, tmp);
    int was_square = sqrt_ratio_m1(s, u, v);
    if (was_square) {
        fe_neg(c, one);
    } else {
        fe_mul(tmp, s, t);
        fe_abs(tmp, tmp);
        fe_neg(s, tmp);
        fe_copy(c, r);
    }
    fe_sub(tmp, r, one);
    fe_mul(n, c, tmp);
    fe_mul(n, n, FE_D_MINUS_ONE_SQ);
    fe_sub(n, n, v);
    fe_sq(s2, s);
    fe_add(w0, s, s);
    fe_mul(w0, w0, v);
    fe_mul(w1, n, FE_SQRT_AD_MINUS_ONE);
    fe_sub(w2, one, s2);
    fe_add(w3, one, s2);
    fe_mul(p->X, w0, w3);
    fe_mul(p->Y, w2, w1);
    fe_mul(p->Z, w1, w3);
    fe_mul(p->T, w0, w2);
}

static void ge_from_uniform(ge *p, const uint8_t in[64]) {
    uint8_t b[32];
    fe t;
    ge p1, p2;
    memcpy(b, in, 32);
    b[31] &= 0x7f;
    fe_frombytes(t, b);
    ge_map(&p1, t);
    memcpy(b, in + 32, 32);
    b[31] &= 0x7f;
    fe_frombytes(t, b);
    ge_map(&p2, t);
    ge_add(p, &p1, &p2);
}

/* ---- scalar multiplication --------------------------------------------- */

/* signed radix-2^w digits; ndig must cover 256 bits plus a final carry */
static void scalar_digits(int32_t *out, const uint8_t k[32], int w, int ndig) {
    int carry = 0;
    int32_t half = 1 << (w - 1), full = 1 << w;
    for (int i = 0; i < ndig; i++) {
        int bit = i * w;
        int32_t d = 0;
        for (int j = 0; j < w; j++) {
            int b = bit + j;
            if (b < 256) d |= ((k[b >> 3] >> (b & 7)) & 1) << j;
        }
        d += carry;
        if (d >= half) {
            d -= full;
            carry = 1;
        } else {
            carry = 0;
        }
        out[i] = d;
    }
}

#define W4_DIGITS 65

static void table_w4(ge_cached tab[8], const ge *p) {
    ge acc, p2;
    ge_to_cached(&tab[0], p);
    ge_double(&p2, p);
    acc = p2;
    ge_to_cached(&tab[1], &acc);
    for (int i = 2; i < 8; i++) {
        ge_add_cached(&acc, &acc, &tab[0]);
        ge_to_cached(&tab[i], &acc);
    }
}

static inline void add_digit(ge *acc, const ge_cached tab[8], int32_t d) {
    if (d > 0) {
        ge_add_cached(acc, acc, &tab[d - 1]);
    } else if (d < 0) {
        ge_cached n;
        cached_neg(&n, &tab[-d - 1]);
        ge_add_cached(acc, acc, &n);
    }
}

static void ge_scalar_mul(ge *r, const ge *a, const uint8_t x[32]) {
    ge_cached ta[8];
    int32_t dx[W4_DIGITS];
    table_w4(ta, a);
    scalar_digits(dx, x, 4, W4_DIGITS);
    ge acc;
    ge_identity(&acc);
    for (int i = W4_DIGITS - 1; i >= 0; i--) {
        for (int j = 0; j < 3; j++) ge_double_partial(&acc, &acc);
        ge_double(&acc, &acc);
        add_digit(&acc, ta, dx[i]);
    }
    *r = acc;
}

#define W5_DIGITS 53

static void table_w5(ge_cached tab[16], const ge *p) {
    ge acc, p2;
    ge_to_cached(&tab[0], p);
    ge_double(&p2, p);
    acc = p2;
    ge_to_cached(&tab[1], &acc);
    for (int i = 2; i < 16; i++) {
        ge_add_cached(&acc, &acc, &tab[0]);
        ge_to_cached(&tab[i], &acc);
    }
}

/* out[i] = lo[i] + k*hi[i] with the digit recoding shared across i */
static void ge_fold(ge *out, const ge *lo, const ge *hi, const uint8_t k[32], Py_ssize_t n) {
    int32_t dk[W5_DIGITS];
    scalar_digits(dk, k, 5, W5_DIGITS);
    int top = W5_DIGITS - 1;
    while (top > 0 && dk[top] == 0) top--;
    for (Py_ssize_t i = 0; i < n; i++) {
        ge_cached tab[16];
        table_w5(tab, &hi[i]);
        ge acc;
        ge_identity(&acc);
        for (int w = top; w >= 0; w--) {
            if (w != top) {
                for (int j = 0; j < 4; j++) ge_double_partial(&acc, &acc);
                ge_double(&acc, &acc);
            }
            int32_t d = dk[w];
            if (d > 0) {
                ge_add_cached(&acc, &acc, &tab[d - 1]);
            } else if (d < 0) {
                ge_cached ng;
                cached_neg(&ng, &tab[-d - 1]);
                ge_add_cached(&acc, &acc, &ng);
            }
        }
        ge_add(&out[i], &acc, &lo[i]);
    }
}

static int msm_window(Py_ssize_t n) {
    int lg = 0;
    while (((Py_ssize_t)1 << (lg + 1)) <= n) lg++;
    int c = lg - 2;
    if (c < 2) c = 2;
    if (c > 16) c = 16;
    return c;
}

/* Pippenger bucket method with signed digits; returns 0 on allocation failure */
static int ge_msm(ge *r, const ge *pts, const uint8_t *scalars, Py_ssize_t n) {
    ge_identity(r);
    if (n == 0) return 1;
    if (n < 8) {
        for (Py_ssize_t i = 0; i < n; i++) {
            ge t;
            ge_scalar_mul(&t, &pts[i], scalars + 32 * i);
            ge_add(r, r, &t);
        }
        return 1;
    }
    int c = msm_window(n);
    int ndig = (256 + c - 1) / c + 1;
    Py_ssize_t nbuckets = (Py_ssize_t)1 << (c - 1);
    int32_t *digits = malloc(sizeof(int32_t) * (size_t)ndig * (size_t)n);
    ge_cached *cached = malloc(sizeof(ge_cached) * (size_t)n);
    ge *buckets = malloc(sizeof(ge) * (size_t)nbuckets);
    if (!digits || !cached || !buckets) {
        free(digits);
        free(cached);
        free(buckets);
        return 0;
    }
    for (Py_ssize_t i = 0; i < n; i++) {
        scalar_digits(digits + (size_t)i * ndig, scalars + 32 * i, c, ndig);
        ge_to_cached(&cached[i], &pts[i]);
    }
    ge acc;
    ge_identity(&acc);
    for (int w = ndig - 1; w >= 0; w--) {
        for (int j = 0; j + 1 < c; j++) ge_double_partial(&acc, &acc);
        ge_double(&acc, &acc);
        for (Py_ssize_t b = 0; b < nbuckets; b++) ge_identity(&buckets[b]);
        for (Py_ssize_t i = 0; i < n; i++) {
            int32_t d = digits[(size_t)i * ndig + w];
            if (d > 0) {
                ge_add_cached(&buckets[d - 1], &buckets[d - 1], &cached[i]);
            } else if (d < 0) {
                ge_cached neg;
                cached_neg(&neg, &cached[i]);
                ge_add_cached(&buckets[-d - 1], &buckets[-d - 1], &neg);
            }
        }
        ge running, sum;
        ge_identity(&running);
        ge_identity(&sum);
        for (Py_ssize_t b = nbuckets - 1; b >= 0; b--) {
            ge_add(&running, &running, &buckets[b]);
            ge_add(&sum, &sum, &running);
        }
        ge_add(&acc, &acc, &sum);
    }
    *r = acc;
    free(digits);
    free(cached);
    free(buckets);
    return 1;
}

/* ---- Python bindings --------------------------------------------------- */

static int check_raw(Py_buffer *b, Py_ssize_t count) {
    if (b->len != RAW_LEN * count) {
        PyErr_SetString(PyExc_ValueError, "raw point buffer has wrong length");
        return 0;
    }
    return 1;
}

static PyObject *py_decode(PyObject *self, PyObject *args) {
    Py_buffer in;
    if (!PyArg_ParseTuple(args, "y*", &in)) return NULL;
    if (in.len != 32) {
        PyBuffer_Release(&in);
        Py_RETURN_NONE;
    }
    ge p;
    int ok = ge_decode(&p, in.buf);
    PyBuffer_Release(&in);
    if (!ok) Py_RETURN_NONE;
    return PyBytes_FromStringAndSize((const char *)&p, RAW_LEN);
}

static PyObject *py_decode_many(PyObject *self, PyObject *args) {
    Py_buffer in;
    if (!PyArg_ParseTuple(args, "y*", &in)) return NULL;
    if (in.len % 32) {
        PyBuffer_Release(&in);
        PyErr_SetString(PyExc_ValueError, "encoding buffer not a multiple of 32");
        return NULL;
    }
    Py_ssize_t n = in.len / 32;
    PyObject *out = PyBytes_FromStringAndSize(NULL, n * RAW_LEN);
    if (!out) {
        PyBuffer_Release(&in);
        return NULL;
    }
    ge *pts = (ge *)PyBytes_AS_STRING(out);
    const uint8_t *src = in.buf;
    for (Py_ssize_t i = 0; i < n; i++) {
        if (!ge_decode(&pts[i], src + 32 * i)) {
            PyBuffer_Release(&in);
            Py_DECREF(out);
            PyErr_Format(PyExc_ValueError, "invalid point encoding at index %zd", i);
            return NULL;
        }
    }
    PyBuffer_Release(&in);
    return out;
}

static PyObject *py_encode(PyObject *self, PyObject *args) {
    Py_buffer in;
    if (!PyArg_ParseTuple(args, "y*", &in)) return NULL;
    if (in.len % RAW_LEN) {
        PyBuffer_Release(&in);
        PyErr_SetString(PyExc_ValueError, "raw point buffer has wrong length");
        return NULL;
    }
    Py_ssize_t n = in.len / RAW_LEN;
    PyObject *out = PyBytes_FromStringAndSize(NULL, 32 * n);
    if (!out) {
        PyBuffer_Release(&in);
        return NULL;
    }
    uint8_t *dst = (uint8_t *)PyBytes_AS_STRING(out);
    const ge *pts = in.buf;
    for (Py_ssize_t i = 0; i < n; i++) ge_encode(dst + 32 * i, &pts[i]);
    PyBuffer_Release(&in);
    return out;
}

static PyObject *binary_op(PyObject *args, int op) {
    Py_buffer a, b;
    if (!PyArg_ParseTuple(args, "y*y*", &a, &b)) return NULL;
    PyObject *res = NULL;
    if (check_raw(&a, 1) && check_raw(&b, 1)) {
        ge r, nb;
        const ge *pa = a.buf, *pb = b.buf;
        if (op == 0) {
            ge_add(&r, pa, pb);
        } else {
            ge_neg(&nb, pb);
            ge_add(&r, pa, &nb);
        }
        res = PyBytes_FromStringAndSize((const char *)&r, RAW_LEN);
    }
    PyBuffer_Release(&a);
    PyBuffer_Release(&b);
    return res;
}

static PyObject *py_add(PyObject *self, PyObject *args) { return binary_op(args, 0); }

static PyObject *py_sub(PyObject *self, PyObject *args) { return binary_op(args, 1); }

static PyObject *py_neg(PyObject *self, PyObject *args) {
    Py_buffer a;
    if (!PyArg_ParseTuple(args, "y*", &a)) return NULL;
    PyObject *res = NULL;
    if (check_raw(&a, 1)) {
        ge r;
        ge_neg(&r, a.buf);
        res = PyBytes_FromStringAndSize((const char *)&r, RAW_LEN);
    }
    PyBuffer_Release(&a);
    return res;
}

static PyObject *py_eq(PyObject *self, PyObject *args) {
    Py_buffer a, b;
    if (!PyArg_ParseTuple(args, "y*y*", &a, &b)) return NULL;
    PyObject *res = NULL;
    if (check_raw(&a, 1) && check_raw(&b, 1)) res = PyBool_FromLong(ge_eq(a.buf, b.buf));
    PyBuffer_Release(&a);
    PyBuffer_Release(&b);
    return res;
}

static PyObject *py_mul(PyObject *self, PyObject *args) {
    Py_buffer a, k;
    if (!PyArg_ParseTuple(args, "y*y*", &a, &k)) return NULL;
    PyObject *res = NULL;
    if (check_raw(&a, 1)) {
        if (k.len != 32) {
            PyErr_SetString(PyExc_ValueError, "scalar must be 32 bytes");
        } else {
            ge r;
            ge_scalar_mul(&r, a.buf, k.buf);
            res = PyBytes_FromStringAndSize((const char *)&r, RAW_LEN);
        }
    }
    PyBuffer_Release(&a);
    PyBuffer_Release(&k);
    return res;
}

static PyObject *py_msm(PyObject *self, PyObject *args) {
    Py_buffer pts, ks;
    if (!PyArg_ParseTuple(args, "y*y*", &pts, &ks)) return NULL;
    PyObject *res = NULL;
    Py_ssize_t n = ks.len / 32;
    if (ks.len % 32) {
        PyErr_SetString(PyExc_ValueError, "scalar buffer not a multiple of 32");
    } else if (check_raw(&pts, n)) {
        ge r;
        int ok;
        Py_BEGIN_ALLOW_THREADS
        ok = ge_msm(&r, pts.buf, ks.buf, n);
        Py_END_ALLOW_THREADS
        if (ok) res = PyBytes_FromStringAndSize((const char *)&r, RAW_LEN);
        else PyErr_NoMemory();
    }
    PyBuffer_Release(&pts);
    PyBuffer_Release(&ks);
    return res;
}

static PyObject *py_fold(PyObject *self, PyObject *args) {
    Py_buffer lo, hi, k;
    if (!PyArg_ParseTuple(args, "y*y*y*", &lo, &hi, &k)) return NULL;
    PyObject *res = NULL;
    Py_ssize_t n = lo.len / RAW_LEN;
    if (k.len != 32) {
        PyErr_SetString(PyExc_ValueError, "scalar must be 32 bytes");
    } else if (check_raw(&lo, n) && check_raw(&hi, n)) {
        res = PyBytes_FromStringAndSize(NULL, n * RAW_LEN);
        if (res) {
            ge *out = (ge *)PyBytes_AS_STRING(res);
            Py_BEGIN_ALLOW_THREADS
            ge_fold(out, lo.buf, hi.buf, k.buf, n);
            Py_END_ALLOW_THREADS
        }
    }
    PyBuffer_Release(&lo);
    PyBuffer_Release(&hi);
    PyBuffer_Release(&k);
    return res;
}

static PyObject *py_from_uniform(PyObject *self, PyObject *args) {
    Py_buffer in;
    if (!PyArg_ParseTuple(args, "y*", &in)) return NULL;
    PyObject *res = NULL;
    if (in.len != 64) {
        PyErr_SetString(PyExc_ValueError, "uniform input must be 64 bytes");
    } else {
        ge p;
        ge_from_uniform(&p, in.buf);
        res = PyBytes_FromStringAndSize((const char *)&p, RAW_LEN);
    }
    PyBuffer_Release(&in);
    return res;
}

static PyObject *py_from_coords(PyObject *self, PyObject *args) {
    Py_buffer in;
    if (!PyArg_ParseTuple(args, "y*", &in)) return NULL;
    PyObject *res = NULL;
    if (in.len != 128) {
        PyErr_SetString(PyExc_ValueError, "expected four 32-byte coordinates");
    } else {
        ge p;
        const uint8_t *b = in.buf;
        fe_frombytes(p.X, b);
        fe_frombytes(p.Y, b + 32);
        fe_frombytes(p.Z, b + 64);
        fe_frombytes(p.T, b + 96);
        res = PyBytes_FromStringAndSize((const char *)&p, RAW_LEN);
    }
    PyBuffer_Release(&in);
    return res;
}

static PyObject *py_to_coords(PyObject *self, PyObject *args) {
    Py_buffer in;
    if (!PyArg_ParseTuple(args, "y*", &in)) return NULL;
    PyObject *res = NULL;
    if (check_raw(&in, 1)) {
        uint8_t out[128];
        const ge *p = in.buf;
        fe_tobytes(out, p->X);
        fe_tobytes(out + 32, p->Y);
        fe_tobytes(out + 64, p->Z);
        fe_tobytes(out + 96, p->T);
        res = PyBytes_FromStringAndSize((const char *)out, 128);
    }
    PyBuffer_Release(&in);
    return res;
}

static PyMethodDef methods[] = {
    {"decode", py_decode, METH_VARARGS, "Decode one encoding to a raw point or None."},
    {"decode_many", py_decode_many, METH_VARARGS, "Decode concatenated encodings."},
    {"encode", py_encode, METH_VARARGS, "Encode one or more raw points."},
    {"add", py_add, METH_VARARGS, "Point addition."},
    {"sub", py_sub, METH_VARARGS, "Point subtraction."},
    {"neg", py_neg, METH_VARARGS, "Point negation."},
    {"eq", py_eq, METH_VARARGS, "Group equality."},
    {"mul", py_mul, METH_VARARGS, "Scalar multiplication."},
    {"msm", py_msm, METH_VARARGS, "Multi-scalar multiplication."},
    {"fold", py_fold, METH_VARARGS, "Elementwise lo[i] + k*hi[i]."},
    {"from_uniform", py_from_uniform, METH_VARARGS, "Map 64 uniform bytes to a point."},
    {"from_coords", py_from_coords, METH_VARARGS, "Raw point from X, Y, Z, T bytes."},
    {"to_coords", py_to_coords, METH_VARARGS, "X, Y, Z, T bytes of a raw point."},
    {NULL, NULL, 0, NULL},
};

static struct PyModuleDef module = {PyModuleDef_HEAD_INIT, "_ristretto", NULL, -1, methods};

PyMODINIT_FUNC PyInit__ristretto(void) {
    PyObject *m = PyModule_Create(&module);
    if (!m) return NULL;
    PyObject *consts = PyImport_ImportModule("zkaudit._ref25519");
    if (!consts) {
        Py_DECREF(m);
        return NULL;
    }
    const char *names[] = {"D", "D2", "SQRT_M1", "INVSQRT_A_MINUS_D", "SQRT_AD_MINUS_ONE",
                           "ONE_MINUS_D_SQ", "D_MINUS_ONE_SQ"};
    uint64_t *targets[] = {FE_D, FE_D2, FE_SQRT_M1, FE_INVSQRT_A_MINUS_D, FE_SQRT_AD_MINUS_ONE,
                           FE_ONE_MINUS_D_SQ, FE_D_MINUS_ONE_SQ};
    for (int i = 0; i < 7; i++) {
        PyObject *v = PyObject_GetAttrString(consts, names[i]);
        PyObject *hex = v ? PyObject_CallMethod(v, "to_bytes", "is", 32, "little") : NULL;
        Py_XDECREF(v);
        if (!hex) {
            Py_DECREF(consts);
            Py_DECREF(m);
            return NULL;
        }
        fe_frombytes(targets[i], (const uint8_t *)PyBytes_AS_STRING(hex));
        Py_DECREF(hex);
    }
    Py_DECREF(consts);
    return m;
}
