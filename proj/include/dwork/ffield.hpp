#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dwork/basics.hpp"

namespace dwork {

// ---------------------------------------------------------------------------
// F_{p^deg} = F_p[t]/(modulus), elements indexed by base-p digit vectors.
//
// Multiplication and inversion go through log/antilog tables relative to a
// fixed multiplicative generator, so fields used for point counting must be
// small enough to tabulate (the enumeration ceiling guards this anyway).
// ---------------------------------------------------------------------------
class FiniteField {
public:
    /// Field with the lexicographically least monic irreducible modulus.
    FiniteField(u64 p, unsigned deg);
    /// Field with a caller-supplied monic modulus (low coefficients first,
    /// without the leading 1). Throws if reducible.
    FiniteField(u64 p, unsigned deg, std::vector<u64> modulus_low);

    u64 p() const { return p_; }
    unsigned deg() const { return deg_; }
    u64 q() const { return q_; }
    /// Modulus as low-degree-first coefficients including the leading 1.
    const std::vector<u64>& modulus() const { return modulus_; }
    u64 generator() const { return gen_; }

    u64 zero() const { return 0; }
    u64 one() const { return 1; }
    u64 add(u64 x, u64 y) const;
    u64 sub(u64 x, u64 y) const;
    u64 neg(u64 x) const;
    u64 mul(u64 x, u64 y) const {
        if (x == 0 || y == 0) return 0;
        return alog_[idx(log_[x] + log_[y])];
    }
    u64 inv(u64 x) const {
        if (x == 0) throw validation_error("inverse of zero field element");
        return alog_[idx(qm1_ - log_[x])];
    }
    u64 pow(u64 x, u64 e) const;
    u64 frobenius(u64 x) const { return pow(x, p_); }
    /// Scalar from an F_p digit vector (low degree first, length <= deg).
    u64 from_coeffs(const std::vector<u64>& c) const;
    std::vector<u64> to_coeffs(u64 x) const;
    u64 from_integer(u64 n) const { return from_coeffs({n % p_}); }

    /// Absolute trace down to F_p, returned as an integer in [0, p).
    u64 trace_to_prime(u64 x) const;
    /// Relative trace onto the subfield of size p^sub_deg (sub_deg | deg),
    /// returned as an element of *this*.
    u64 trace_to_subfield(u64 x, unsigned sub_deg) const;

    static bool poly_irreducible(u64 p, const std::vector<u64>& monic);

private:
    void build_tables();
    u64 idx(u64 k) const { return k >= qm1_ ? k - qm1_ : k; }

    u64 p_ = 0;
    unsigned deg_ = 0;
    u64 q_ = 0, qm1_ = 0;
    std::vector<u64> modulus_;  // monic, length deg+1
    u64 gen_ = 0;
    std::vector<u32> log_;   // log_[x] for x != 0
    std::vector<u32> alog_;  // alog_[k] = gen^k
};

/// Deterministic embedding of `small` into `big` (deg(small) | deg(big)),
/// realized by the least root of small's modulus inside big.
std::vector<u64> build_embedding(const FiniteField& small, const FiniteField& big);

// ---------------------------------------------------------------------------
// Field context and variety data
// ---------------------------------------------------------------------------

/// Spec FieldCtx: the base field F_q = F_{p^a} for one job.
struct FieldCtx {
    std::shared_ptr<FiniteField> F;
    u64 p() const { return F->p(); }
    unsigned a() const { return F->deg(); }
    u64 q() const { return F->q(); }
};

FieldCtx make_field(u64 p, unsigned a,
                    const std::optional<std::vector<u64>>& modulus_low = std::nullopt);

struct PolyTerm {
    u64 c;               // element index in F_q
    std::vector<u32> e;  // exponents of x_0..x_n
};
using FqPoly = std::vector<PolyTerm>;

/// Smooth projective complete intersection input: G_1..G_k homogeneous in
/// x_0..x_n over F_q. k = 0 is tolerated as a degenerate testing case.
struct VarietySpec {
    FieldCtx field;
    unsigned n = 0;
    unsigned k = 0;
    std::vector<unsigned> degrees;
    std::vector<FqPoly> polys;

    unsigned nvars() const { return n + k + 1; }  // z = (y_1..y_k, x_0..x_n)
    void validate() const;
    /// Charge grading: ch(y_i) = -d_i, ch(x_j) = 1; exponents in z-order.
    long charge(ExpKey e) const;
    /// Weight grading: wt(y_i) = 1, wt(x_j) = 0.
    long weight(ExpKey e) const;
    long c_X() const;
};

struct PointCount {
    unsigned m;
    u64 affine;      // #{x in F_{q^m}^{n+1} : G_1(x)=...=G_k(x)=0}
    u64 projective;  // (affine - 1)/(q^m - 1)
};
using PointCounts = std::vector<PointCount>;

struct CountOptions {
    u64 ceiling = 100000000;  // max evaluated points
    bool parallel = true;
};

/// Exact point counts of X over F_{q^m}. Enumerates normalized projective
/// representatives; the affine cone count follows from homogeneity.
PointCount count_points(const VarietySpec& V, unsigned m, const CountOptions& opt = {});

/// Serial reference enumerating the whole affine space; used by tests and the
/// kernel benchmark.
u64 count_points_affine_serial(const VarietySpec& V, unsigned m, u64 ceiling);

struct ZetaFromCounts {
    std::vector<i64> P;       // 1 + c_1 T + ... + c_d T^d
    int exponent;             // (-1)^{n-k-1}
    bool functional_ok;       // reciprocal roots pair to q^{n-k}
    std::string zeta;         // display form
};

/// Recover P(T) of Z(X,T) = P(T)^{(-1)^{n-k-1}} / prod_i (1 - q^i T) from
/// exact counts for m = 1..B. Requires B >= 2 deg P to certify the degree.
ZetaFromCounts zeta_from_counts(const PointCounts& counts, unsigned n, unsigned k, u64 q);

/// Power sums of the reciprocal roots implied by a count list.
std::vector<i64> count_power_sums(const PointCounts& counts, unsigned n, unsigned k, u64 q);

/// Jacobian-rank smoothness probe at random points over small extensions.
/// Advisory only: returns false when a singular-looking point was found.
bool smoothness_probe(const VarietySpec& V, unsigned trials = 64, u64 seed = 1);

}  // namespace dwork
