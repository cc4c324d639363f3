#pragma once

#include <bit>
#include <functional>

#include "dwork/series.hpp"

namespace dwork {

// ---------------------------------------------------------------------------
// The truncated graded complex A(b)[eta].
//
// A term is (exponent vector, eta subset, coefficient); eta subsets are stored
// as bitmasks whose products are resolved by transposition counts against the
// ascending-index convention. Cohomological degree of a term is -|eta|.
//
// PadicScalar coefficients are stored *normalized*: the term's value is
//     a * pi^{Mb(|v| - r)} * x^u y^v eta_I,
// where |v| is the y-degree and r = |I ∩ {1..k}|. This convention makes the
// product plain (no pi factors) and every operator entry p-integral, while the
// filtration normalization of (k - r) type is restored at read time.
// ---------------------------------------------------------------------------

struct GKey {
    ExpKey e = 0;
    u32 eta = 0;
    friend bool operator==(const GKey&, const GKey&) = default;
    friend auto operator<=>(const GKey&, const GKey&) = default;
};

/// sign of stripping eta_i from the sorted product eta_I (left derivative)
inline int eta_strip_sign(u32 mask, unsigned i) {
    unsigned before = std::popcount(mask & ((1u << i) - 1));
    return (before & 1) ? -1 : 1;
}

/// sign of merging two sorted eta products; 0 if they overlap
inline int eta_merge_sign(u32 a, u32 b) {
    if (a & b) return 0;
    int inv = 0;
    while (b) {
        unsigned j = unsigned(std::countr_zero(b));
        b &= b - 1;
        inv += std::popcount(a & ~((1u << (j + 1)) - 1));  // elements of a above j
    }
    return (inv & 1) ? -1 : 1;
}

template <class Coeff>
struct GradedTerms {
    unsigned nvars = 0;
    std::vector<std::pair<GKey, Coeff>> terms;  // sorted by key
    long tail_val = kPrecInf;

    bool empty() const { return terms.empty(); }
    const Coeff* coeff(GKey k) const {
        auto it = std::lower_bound(terms.begin(), terms.end(), k,
                                   [](const auto& t, const GKey& kk) { return t.first < kk; });
        if (it != terms.end() && it->first == k) return &it->second;
        return nullptr;
    }
    /// cohomological degree if homogeneous; throws otherwise
    int degree() const {
        if (terms.empty()) throw validation_error("degree of zero element is ambiguous");
        int d = -int(std::popcount(terms.front().first.eta));
        for (const auto& [k, c] : terms)
            if (-int(std::popcount(k.eta)) != d)
                throw validation_error("element is not homogeneous");
        return d;
    }
    bool is_homogeneous() const {
        if (terms.empty()) return true;
        unsigned d = std::popcount(terms.front().first.eta);
        for (const auto& [k, c] : terms)
            if (std::popcount(k.eta) != d) return false;
        return true;
    }
};

using GradedElement = GradedTerms<PadicScalar>;
using FiniteCdgaElement = GradedTerms<u64>;  // F_q coefficients by element index

// ---------------------------------------------------------------------------
// Complex context: everything the operators need
// ---------------------------------------------------------------------------
struct ComplexCtx {
    const VarietySpec* V = nullptr;
    const PrecisionContext* pc = nullptr;
    const Potentials* pot = nullptr;
    unsigned D = 0;  // truncation bound for operator outputs

    unsigned nvars() const { return V->nvars(); }
    unsigned k() const { return V->k; }
    long Mb() const { return pc->Mb(); }
};

// construction helpers ------------------------------------------------------

GradedElement graded_zero(const ComplexCtx& C);
/// single term from a *raw* scalar coefficient (value = raw * z^e * eta_I)
GradedElement graded_from_raw(const ComplexCtx& C, ExpKey e, u32 eta, const PadicScalar& raw);
/// the potential S-hat as a degree-0 element (normalized coefficients)
GradedElement graded_S_hat(const ComplexCtx& C);
/// raw value of a stored coefficient (undo the normalization)
PadicScalar graded_raw_coeff(const ComplexCtx& C, GKey key, const PadicScalar& stored);

GradedElement graded_add(const GradedElement& x, const GradedElement& y);
GradedElement graded_scale(const GradedElement& x, const PadicScalar& c);
GradedElement graded_neg(const GradedElement& x);
bool graded_equal(const GradedElement& x, const GradedElement& y);
/// largest valuation floor nu such that x = y mod pi^nu (kPrecInf if equal)
long graded_difference_val(const GradedElement& x, const GradedElement& y);

/// super-commutative product, truncated to C.D
GradedElement graded_mul(const ComplexCtx& C, const GradedElement& x, const GradedElement& y);

// operators ------------------------------------------------------------------

GradedElement apply_delta(const ComplexCtx& C, const GradedElement& x);
GradedElement apply_Q_S(const ComplexCtx& C, const GradedElement& x);
GradedElement apply_K_S(const ComplexCtx& C, const GradedElement& x);

/// descendant two-bracket of a differential operator:
/// l2(x, y) = K(xy) - K(x) y - (-1)^{|x|} x K(y)
GradedElement bv_bracket(const ComplexCtx& C,
                         const std::function<GradedElement(const GradedElement&)>& K,
                         const GradedElement& x, const GradedElement& y);

// filtration and reduction ---------------------------------------------------

/// largest s with x in F^s (pi-digit units); kPrecInf for zero
long filtration_level(const ComplexCtx& C, const GradedElement& x);

FiniteCdgaElement reduce_R(const ComplexCtx& C, const GradedElement& x);
GradedElement section_sR(const ComplexCtx& C, const FiniteCdgaElement& y);

// finite cdga over F_q --------------------------------------------------------

FiniteCdgaElement fq_add(const ComplexCtx& C, const FiniteCdgaElement& x,
                         const FiniteCdgaElement& y);
FiniteCdgaElement fq_mul(const ComplexCtx& C, const FiniteCdgaElement& x,
                         const FiniteCdgaElement& y);
/// Q_S over F_q from the plain potential S (not S-hat)
FiniteCdgaElement fq_apply_Q_S(const ComplexCtx& C, const FiniteCdgaElement& x);
bool fq_equal(const FiniteCdgaElement& x, const FiniteCdgaElement& y);

// twisted de Rham side and the odd Fourier relabeling -------------------------

/// forms are stored raw: value = sum c * z^e * dz_I
struct FormElement {
    unsigned nvars = 0;
    std::vector<std::pair<GKey, PadicScalar>> terms;  // eta field holds the dz mask
};

FormElement form_from_raw(const ComplexCtx& C, ExpKey e, u32 dzmask, const PadicScalar& raw);
FormElement form_add(const FormElement& x, const FormElement& y);
/// D(w) = (pi^{Mb}/gamma) (dw + dS-hat ∧ w)
FormElement form_D(const ComplexCtx& C, const FormElement& w);
/// partial_X(w) = (pi^{Mb}/gamma) dS-hat ∧ w
FormElement form_dX(const ComplexCtx& C, const FormElement& w);
/// J: xi dz_{i1..is} -> (-1)^{i1+..+is-s} xi eta_{complement}  (1-based indices)
GradedElement fourier_J(const ComplexCtx& C, const FormElement& w);

}  // namespace dwork
