#pragma once

#include <map>
#include <optional>
#include <string>

#include "dwork/graded.hpp"

namespace dwork {

// ---------------------------------------------------------------------------
// Dwork Frobenius operators on the graded complex.
//
// psi(xi eta_I) = q^{|I|} T_q[^S](xi prod_{j not in I} z_j) / prod_{j not in I} z_j eta_I
// with the division resolved at exponent level: an entry exists iff all
// shifted exponents stay non-negative.
// ---------------------------------------------------------------------------

/// E = nullptr gives the untwisted operator for P^n; otherwise T_q^S = T_q (E .)
GradedElement apply_psi(const ComplexCtx& C, const TruncatedSeries* E, const GradedElement& x);

// ---------------------------------------------------------------------------
// Sparse matrices of the named operators on truncated monomial bases
// ---------------------------------------------------------------------------
struct OperatorRep {
    std::string op;
    unsigned D = 0, N = 0;
    int degree_m = 0;  // acting on degree -m
    std::vector<GKey> domain, codomain;
    std::vector<std::vector<std::pair<u32, PadicScalar>>> cols;
};

/// op is one of "delta", "K_S", "Q_S", "psi_Pn", "psi_S"; the basis is every
/// (monomial, eta-set) of the complex with |eta| = m and degree <= C.D, in
/// graded-lex order. psi_S uses the supplied E series.
OperatorRep operator_matrix(const ComplexCtx& C, const std::string& op, unsigned m,
                            const TruncatedSeries* E = nullptr);

/// apply a represented operator to a coefficient vector over the domain basis
std::vector<PadicScalar> operator_apply(const ComplexCtx& C, const OperatorRep& rep,
                                        const std::vector<PadicScalar>& v);

// ---------------------------------------------------------------------------
// H^0 of (A(b)[eta], K_S) on the Frobenius-stable charge sector
// ---------------------------------------------------------------------------
struct SectorBasis {
    long charge = 0;
    std::vector<ExpKey> monomials;           // sorted by (degree, key)
    std::map<ExpKey, u32> index;
};

/// all charge-c monomials of total degree <= bound
SectorBasis sector_basis(const VarietySpec& V, long charge, unsigned bound);

struct EchelonPivot {
    u32 row = 0;
    long pivot_val = 0;                       // pi-digits
    std::vector<std::pair<u32, PadicScalar>> col;  // reduced, pivot entry = pi^val
};

struct CohomologyH0 {
    SectorBasis sector;
    std::vector<EchelonPivot> pivots;         // in retirement (layer) order
    std::map<u32, u32> pivot_of_row;
    std::vector<u32> class_rows;              // cokernel representatives (all)
    std::vector<u32> kept_classes;            // the residue-level basis rows
    unsigned protect_bound = 0;               // degree window where true classes live
    unsigned junk_boundary = 0;               // top of the exactly-covered zone
    unsigned unexpected_classes = 0;          // unpivoted rows between the two
    long pivot_loss = 0;                      // summed protected-pivot valuations
    long torsion_floor = 0;                   // depth at which relations pin basis rows
    long n_eff_digits = 0;                    // N*M - loss (diagnostic floor)
    unsigned columns_used = 0;
};

/// Cokernel of K_S : A^{-1} -> A^0 restricted to the charge sector fixed by
/// the Frobenius (ch = c_X). Column monomials are restricted so unit-pivot
/// images stay inside the window; the gamma_1 overflow is tail-audited.
CohomologyH0 cohomology_H0(const ComplexCtx& C, long precision_floor_digits = 0);

/// reduce a sector vector modulo the image (in place); returns class coords
std::vector<std::pair<u32, PadicScalar>> project_to_classes(
    const ComplexCtx& C, const CohomologyH0& H,
    std::vector<std::pair<u32, PadicScalar>> vec);

struct CharPoly {
    std::vector<PadicScalar> coeffs;  // det(1 - T psi | H^0), c_0 = 1
    unsigned dim = 0;
    long n_eff_digits = 0;
    long projection_tail = 0;  // min valuation dropped on junk rows (kPrecInf if none)
    std::vector<unsigned> class_degrees;
};

/// det(1 - T psi_S | H^0) via the division-free characteristic polynomial of
/// the projected Frobenius matrix.
CharPoly char_poly_psi_S(const ComplexCtx& C, const CohomologyH0& H, const TruncatedSeries& E);

/// optional Fredholm-style cross-check: the alternating product over all
/// eta-degrees of truncated determinants, compared against the H^0 result.
/// Valid only under the vanishing hypothesis for H^{-m}, m > 0, which is
/// reported, not assumed.
struct FredholmCheck {
    bool agrees = false;
    long agreement_digits = 0;
    std::string note;
};
FredholmCheck fredholm_cross_check(const ComplexCtx& C, const CharPoly& cp,
                                   const TruncatedSeries& E, unsigned window);

// ---------------------------------------------------------------------------
// Zeta assembly
// ---------------------------------------------------------------------------
struct ZetaDiagnostics {
    unsigned D = 0, N = 0, M = 0, Ncap = 0;
    std::string b;
    unsigned dim_h0 = 0;
    std::vector<unsigned> class_degrees;
    long pivot_loss = 0;
    long n_eff_digits = 0;
    unsigned columns_used = 0;
    unsigned junk_classes = 0;
    unsigned escalations = 0;
    bool stabilized = false;
    bool weil_modulus_ok = true;
    bool counts_match = false;
    bool counts_checked = false;
    std::string notes;
};

struct ZetaOutput {
    std::vector<i64> P;  // 1 + c_1 T + ...
    int exponent = 1;
    std::string zeta;
    ZetaDiagnostics diagnostics;
};

/// undo the q^k twist, lift coefficients to the integers within the Weil
/// window, and assemble the zeta display form
ZetaOutput recover_P_and_zeta(const CharPoly& cp, const VarietySpec& V,
                              const PrecisionContext& ctx);

/// the full pipeline at one (D, N): potentials, H^0, char poly, recovery
ZetaOutput compute_zeta_once(const VarietySpec& V, unsigned N, unsigned D,
                             const ContextOptions& copt = {});

struct ZetaOptions {
    unsigned N = 0;            // 0 = default per variety
    unsigned D = 0;            // 0 = default q(maxd + n + k + 2)
    unsigned max_escalations = 2;
    bool cross_check_counts = true;
    u64 count_ceiling = 100000000;
    ContextOptions copt;
};

/// stabilization loop: recompute at (D+4, N+2) until P(T) repeats
ZetaOutput compute_zeta(const VarietySpec& V, const ZetaOptions& opt = {});

unsigned default_degree_bound(const VarietySpec& V);
unsigned default_precision(const VarietySpec& V);

}  // namespace dwork
