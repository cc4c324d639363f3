#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dwork/basics.hpp"
#include "dwork/ffield.hpp"

namespace dwork {

// ---------------------------------------------------------------------------
// O = Z_q[x]/(x^ram + p), residues mod p^Ncap.
//
// The working field is Q_q(pi) with pi^M = -p. Scalars may live in the
// subring generated by pi^(M/ram) when every pi-power the pipeline needs is a
// multiple of M/ram (pi_scale); the full ring is ram = M. A scalar's value is
//     pi_r^shift * sum_{i<ram} sum_{j<a} data[i*a+j] * w^j * pi_r^i
// where pi_r is the ring generator and w the Z_q basis element. Valuations and
// precision are tracked in pi-digits of the full M scale throughout.
// ---------------------------------------------------------------------------
class PadicRing : public std::enable_shared_from_this<PadicRing> {
public:
    PadicRing(u64 p, unsigned a, std::vector<u64> zq_modulus_low, unsigned ram,
              unsigned pi_scale, unsigned Ncap);

    u64 p() const { return p_; }
    unsigned a() const { return a_; }
    unsigned ram() const { return ram_; }
    unsigned pi_scale() const { return pi_scale_; }
    unsigned M() const { return ram_ * pi_scale_; }
    unsigned Ncap() const { return Ncap_; }
    u64 pmod() const { return pmod_; }
    unsigned dim() const { return ram_ * a_; }
    const std::vector<u64>& zq_modulus() const { return zq_mod_; }

    // raw kernels on dim()-sized arrays
    void raw_add(const u64* x, const u64* y, u64* out) const;
    void raw_sub(const u64* x, const u64* y, u64* out) const;
    void raw_neg(const u64* x, u64* out) const;
    void raw_mul(const u64* x, const u64* y, u64* out) const;
    /// out += x*y without allocating
    void raw_fma(const u64* x, const u64* y, u64* out) const;
    void raw_smul(const u64* x, u64 c, u64* out) const;  // scalar in Z/p^Ncap
    /// multiply by pi_r once: shift digits up with x^ram -> -p wrap
    void raw_shift_up(u64* x) const;
    /// divide by pi_r once; requires the bottom Z_q digit divisible by p
    bool raw_shift_down(u64* x) const;

private:
    void zq_mul(const u64* x, const u64* y, u64* out) const;  // a-sized
    friend class PadicScalar;

    u64 p_;
    unsigned a_;
    unsigned ram_, pi_scale_, Ncap_;
    u64 pmod_;
    std::vector<u64> zq_mod_;       // monic lift, low first, length a+1
    std::vector<u64> p_pows_;       // p^0..p^Ncap
};

using RingPtr = std::shared_ptr<const PadicRing>;

inline constexpr long kPrecInf = 1L << 40;

class PadicScalar {
public:
    PadicScalar() = default;
    PadicScalar(RingPtr ring, u64 integer);  // image of a small integer
    static PadicScalar zero(RingPtr ring);
    static PadicScalar one(RingPtr ring) { return PadicScalar(ring, 1); }

    const RingPtr& ring() const { return ring_; }
    bool attached() const { return ring_ != nullptr; }

    /// absolute precision in pi-digits (full M scale)
    long prec() const { return prec_; }
    int shift() const { return shift_; }
    const std::vector<u64>& data() const { return d_; }

    /// exact valuation in pi-digits, capped at prec()
    long val() const;
    bool is_zero() const;                 // all stored residues vanish
    bool is_zero_at(long prec_digits) const { return val() >= prec_digits; }

    PadicScalar operator+(const PadicScalar& o) const;
    PadicScalar operator-(const PadicScalar& o) const;
    PadicScalar operator-() const;
    PadicScalar operator*(const PadicScalar& o) const;
    PadicScalar& operator+=(const PadicScalar& o);
    PadicScalar& operator-=(const PadicScalar& o);
    PadicScalar& operator*=(const PadicScalar& o) { return *this = *this * o; }
    /// equality at the joint tracked precision
    bool operator==(const PadicScalar& o) const {
        PadicScalar d = *this - o;
        return d.val() >= d.prec();
    }

    PadicScalar mul_small(u64 c) const;          // by an integer scalar
    PadicScalar mul_pi(long digits) const;       // by pi^digits (can be negative)
    PadicScalar divide_exact_p(unsigned j) const;  // by p^j
    /// multiplicative inverse of any nonzero scalar (val may be positive)
    PadicScalar inverse() const;
    PadicScalar pow(u64 e) const;
    PadicScalar reduce_prec(long digits) const;
    /// q-power Frobenius fixed-point iteration step helper: this^(p^e)
    PadicScalar pow_p(unsigned e) const;
    /// Reinterpret the stored digits as an exactly known ring element. Only for
    /// values that *define* a quantity (e.g. a Newton iterate adopted as the
    /// root); never to paper over genuine loss.
    PadicScalar as_exact() const;

    /// residue in F_q (constant Z_q digit mod p), valid when val() >= 0
    u64 residue(const FiniteField& F) const;

    std::string str() const;

private:
    void canonicalize();
    friend PadicScalar teichmuller_lift(const RingPtr&, const FiniteField&, u64);

    RingPtr ring_;
    std::vector<u64> d_;
    long prec_ = 0;
    int shift_ = 0;
};

/// Teichmuller lift of x in F_q: the unique root of X^q = X over x.
PadicScalar teichmuller_lift(const RingPtr& ring, const FiniteField& F, u64 x);

// ---------------------------------------------------------------------------
// Precision context
// ---------------------------------------------------------------------------

struct GammaTable {
    PadicScalar gamma;
    std::vector<PadicScalar> gamma_ell;  // gamma_0..gamma_L
};

struct PrecisionContext {
    FieldCtx field;
    u64 p = 0;
    unsigned a = 0;
    u64 q = 0;
    Rational b;
    unsigned M = 0;
    unsigned N = 0;     // certified target precision, p-digits
    unsigned Ncap = 0;  // stored residue precision, p-digits
    unsigned D = 0;     // series degree bound (0 = derive from variety)
    RingPtr ring;

    long Mb() const { return i64(M) * b.num / b.den; }           // integer by construction
    long prefactor_digits() const { return Mb() - long(M / (p - 1)); }
    /// pi^{Mb}/gamma as a ring scalar (integral, positive valuation)
    PadicScalar prefactor;
    GammaTable gamma;
    PadicScalar gamma_inv;  // gamma^{-1} (negative valuation, shift-carried)

    long target_prec_digits() const { return long(N) * M; }
};

/// Spec choose_parameters: least M with M/(p-1) and Mb/((p-1)p) integral, b the
/// admissible rational nearest the interval midpoint (p+1)/(2(p-1)).
std::pair<unsigned, Rational> choose_b_and_M(u64 p);

struct ContextOptions {
    unsigned headroom = 6;       // Ncap = N + headroom
    bool force_full_ring = false;
    std::optional<Rational> b_override;
    std::optional<unsigned> M_override;
};

PrecisionContext make_context(const FieldCtx& field, unsigned target_N,
                              const ContextOptions& opt = {});

/// Convenience matching the spec operation signature.
PrecisionContext choose_parameters(u64 p, unsigned a, unsigned target_N);

/// gamma solves sum_n t^(p^n)/p^n = 0 with val = 1/(p-1); table of
/// gamma_ell = sum_{i<=ell} gamma^(p^i)/p^i while the estimate bound < N.
GammaTable compute_gamma(const PrecisionContext& ctx);

}  // namespace dwork
