#pragma once

#include <functional>
#include <vector>

#include "dwork/ffield.hpp"
#include "dwork/padic.hpp"

namespace dwork {

// ---------------------------------------------------------------------------
// Truncated multivariate power series with raw PadicScalar coefficients.
// Terms are kept sorted by packed exponent key; truncation drops terms above
// the degree bound and records the least valuation dropped (tail audit).
// ---------------------------------------------------------------------------
struct STerm {
    ExpKey e;
    PadicScalar c;
};

struct TruncatedSeries {
    unsigned nvars = 0;
    std::vector<STerm> terms;
    long tail_val = kPrecInf;  // min valuation among dropped terms, pi-digits

    const PadicScalar* coeff(ExpKey e) const;
    unsigned degree() const;  // max total degree of stored terms
    bool is_zero() const { return terms.empty(); }

    void note_drop(long val_digits) { tail_val = std::min(tail_val, val_digits); }
};

TruncatedSeries series_from_terms(unsigned nvars, std::vector<STerm> raw);
TruncatedSeries series_one(const RingPtr& ring, unsigned nvars);
TruncatedSeries series_add(const TruncatedSeries& A, const TruncatedSeries& B);
TruncatedSeries series_scale(const TruncatedSeries& A, const PadicScalar& c);
/// product truncated to total degree <= bound; parallel over left terms
TruncatedSeries series_mul(const TruncatedSeries& A, const TruncatedSeries& B, unsigned bound,
                           bool parallel = true);
TruncatedSeries series_mul_serial(const TruncatedSeries& A, const TruncatedSeries& B,
                                  unsigned bound);
/// exp of a series with no constant term (exact p-divisions by k!)
TruncatedSeries series_exp(const TruncatedSeries& A, unsigned bound);
TruncatedSeries series_subst_zq(const TruncatedSeries& A, unsigned q, unsigned bound);
TruncatedSeries series_dz(const TruncatedSeries& A, unsigned var);
/// Dwork operator T_q: picks exponents divisible by q and divides them
TruncatedSeries apply_T_q(const TruncatedSeries& A, unsigned q);
/// z_i d/dz_i
TruncatedSeries series_theta_op(const TruncatedSeries& A, unsigned var);

// ---------------------------------------------------------------------------
// Splitting-function stack
// ---------------------------------------------------------------------------
struct ThetaTable {
    std::vector<PadicScalar> ah;      // Artin-Hasse e_0..e_Dt
    std::vector<PadicScalar> lambda;  // theta(t) = E(gamma t) coefficients
};

/// Artin-Hasse coefficients of exp(sum t^{p^n}/p^n) mod p^Ncap, computed from
/// the exact rational recurrence and checked p-integral.
std::vector<PadicScalar> artin_hasse_coeffs(const PrecisionContext& ctx, unsigned Dt);

ThetaTable theta_coeffs(const PrecisionContext& ctx, unsigned Dt);

/// theta evaluated at a scalar argument (converges for integral arguments)
PadicScalar theta_eval(const ThetaTable& th, const PadicScalar& t);

/// Dwork additive character psi_q(x) = prod_j theta(teich(x)^{p^j})
PadicScalar psi_q(const PrecisionContext& ctx, const ThetaTable& th, u64 x);

// ---------------------------------------------------------------------------
// Potentials
// ---------------------------------------------------------------------------
struct Potentials {
    TruncatedSeries S_lift;             // S~ = sum y_l G~_l
    TruncatedSeries S_hat;              // sum_m gamma_m (s~_w z^w)^{p^m}
    TruncatedSeries Gamma;              // deformation series at t = 1
    std::vector<TruncatedSeries> dS_hat;  // partials of S_hat, one per variable
};

/// All potential series at degree bound D (ctx.D unless overridden).
Potentials build_potentials(const VarietySpec& V, const PrecisionContext& ctx,
                            unsigned bound = 0);

/// E_S~(z) = prod_{j<a} prod_w theta((s~_w z^w)^{p^j}) truncated to `bound`.
TruncatedSeries build_E_S(const VarietySpec& V, const PrecisionContext& ctx,
                          const ThetaTable& th, unsigned bound);

/// E-hat_S~(z) = exp(S-hat), the theta-hat product
TruncatedSeries build_E_hat(const PrecisionContext& ctx, const Potentials& pot, unsigned bound);

/// exponential sum  sum_{z in A^N(F_{q^m})} psi_q(Tr S(z))  as an exact scalar
PadicScalar exp_sum(const VarietySpec& V, const PrecisionContext& ctx, const ThetaTable& th,
                    unsigned m, u64 ceiling = 100000000, bool parallel = true);

}  // namespace dwork
