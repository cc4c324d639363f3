#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace dwork {

using u32 = std::uint32_t;
using u64 = std::uint64_t;
using u128 = unsigned __int128;
using i64 = std::int64_t;

/// Thrown when an input fails schema or mathematical validation (CLI exit 3).
struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when a result cannot be certified at the working precision (CLI exit 2).
struct precision_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when an enumeration would exceed the configured point ceiling (CLI exit 3).
struct ceiling_error : validation_error {
    using validation_error::validation_error;
};

inline u64 mulmod(u64 x, u64 y, u64 m) { return static_cast<u64>((u128(x) * y) % m); }

inline u64 addmod(u64 x, u64 y, u64 m) {
    u64 s = x + y;
    if (s >= m || s < x) s -= m;
    return s;
}

inline u64 submod(u64 x, u64 y, u64 m) { return x >= y ? x - y : x + m - y; }

inline u64 powmod(u64 base, u64 e, u64 m) {
    u64 r = 1 % m;
    base %= m;
    while (e) {
        if (e & 1) r = mulmod(r, base, m);
        base = mulmod(base, base, m);
        e >>= 1;
    }
    return r;
}

inline u64 pow_u64_checked(u64 base, unsigned e, const char* what) {
    u64 r = 1;
    for (unsigned i = 0; i < e; ++i) {
        if (base != 0 && r > std::numeric_limits<u64>::max() / base)
            throw validation_error(std::string("overflow computing ") + what);
        r *= base;
    }
    return r;
}

inline bool is_prime_u64(u64 n) {
    if (n < 2) return false;
    for (u64 d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

/// Exact reduced fraction with small integer parts; enough for the parameter b.
struct Rational {
    i64 num = 0;
    i64 den = 1;

    Rational() = default;
    Rational(i64 n, i64 d) : num(n), den(d) { reduce(); }

    void reduce() {
        if (den == 0) throw validation_error("rational with zero denominator");
        if (den < 0) { num = -num; den = -den; }
        i64 a = num < 0 ? -num : num, b = den;
        while (b) { i64 t = a % b; a = b; b = t; }
        if (a > 1) { num /= a; den /= a; }
        if (a == 0) den = 1;
    }

    friend bool operator==(const Rational& x, const Rational& y) {
        return x.num == y.num && x.den == y.den;
    }
    friend bool operator<(const Rational& x, const Rational& y) {
        return x.num * y.den < y.num * x.den;
    }
    std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }
};

// ---------------------------------------------------------------------------
// Packed exponent vectors.
//
// Monomial exponents for up to 8 variables are packed into a u64, 8 bits per
// variable. All series degrees stay far below 255 at desk scale; arithmetic
// helpers check for lane overflow.
// ---------------------------------------------------------------------------

inline constexpr unsigned kMaxVars = 8;
using ExpKey = u64;

inline unsigned exp_get(ExpKey e, unsigned i) { return unsigned(e >> (8 * i)) & 0xffu; }

inline ExpKey exp_set(ExpKey e, unsigned i, unsigned v) {
    if (v > 0xff) throw validation_error("exponent lane overflow");
    return (e & ~(ExpKey(0xff) << (8 * i))) | (ExpKey(v) << (8 * i));
}

inline ExpKey exp_from(const std::vector<u32>& v) {
    if (v.size() > kMaxVars) throw validation_error("too many variables (max 8)");
    ExpKey e = 0;
    for (size_t i = 0; i < v.size(); ++i) e = exp_set(e, unsigned(i), v[i]);
    return e;
}

inline std::vector<u32> exp_to(ExpKey e, unsigned nvars) {
    std::vector<u32> v(nvars);
    for (unsigned i = 0; i < nvars; ++i) v[i] = exp_get(e, i);
    return v;
}

inline unsigned exp_total(ExpKey e, unsigned nvars) {
    unsigned t = 0;
    for (unsigned i = 0; i < nvars; ++i) t += exp_get(e, i);
    return t;
}

inline ExpKey exp_add(ExpKey a, ExpKey b, unsigned nvars) {
    ExpKey r = 0;
    for (unsigned i = 0; i < nvars; ++i) {
        unsigned s = exp_get(a, i) + exp_get(b, i);
        if (s > 0xff) throw validation_error("exponent lane overflow in product");
        r |= ExpKey(s) << (8 * i);
    }
    return r;
}

/// a - b componentwise; false if any lane would go negative.
inline bool exp_sub(ExpKey a, ExpKey b, unsigned nvars, ExpKey& out) {
    ExpKey r = 0;
    for (unsigned i = 0; i < nvars; ++i) {
        unsigned x = exp_get(a, i), y = exp_get(b, i);
        if (x < y) return false;
        r |= ExpKey(x - y) << (8 * i);
    }
    out = r;
    return true;
}

/// a / q componentwise; false unless every lane is divisible.
inline bool exp_divq(ExpKey a, unsigned q, unsigned nvars, ExpKey& out) {
    ExpKey r = 0;
    for (unsigned i = 0; i < nvars; ++i) {
        unsigned x = exp_get(a, i);
        if (x % q) return false;
        r |= ExpKey(x / q) << (8 * i);
    }
    out = r;
    return true;
}

inline ExpKey exp_scale(ExpKey a, unsigned c, unsigned nvars) {
    ExpKey r = 0;
    for (unsigned i = 0; i < nvars; ++i) {
        unsigned s = exp_get(a, i) * c;
        if (s > 0xff) throw validation_error("exponent lane overflow in power");
        r |= ExpKey(s) << (8 * i);
    }
    return r;
}

}  // namespace dwork
