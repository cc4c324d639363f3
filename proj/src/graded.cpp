#include "dwork/graded.hpp"

#include <algorithm>

namespace dwork {

namespace {

long y_degree(const VarietySpec& V, ExpKey e) {
    long w = 0;
    for (unsigned i = 0; i < V.k; ++i) w += exp_get(e, i);
    return w;
}

unsigned r_of(u32 eta, unsigned k) { return std::popcount(eta & ((1u << k) - 1)); }

/// pi-exponent of the normalization factor attached to (e, eta)
long norm_digits(const ComplexCtx& C, ExpKey e, u32 eta) {
    return C.Mb() * (y_degree(*C.V, e) - long(r_of(eta, C.k())));
}

template <class Coeff>
GradedTerms<Coeff> from_raw_terms(unsigned nvars, std::vector<std::pair<GKey, Coeff>> raw) {
    std::sort(raw.begin(), raw.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    GradedTerms<Coeff> out;
    out.nvars = nvars;
    for (auto& t : raw) {
        if (!out.terms.empty() && out.terms.back().first == t.first)
            out.terms.back().second += t.second;
        else
            out.terms.push_back(std::move(t));
    }
    std::erase_if(out.terms, [](const auto& t) { return t.second.is_zero(); });
    return out;
}

}  // namespace

GradedElement graded_zero(const ComplexCtx& C) {
    GradedElement out;
    out.nvars = C.nvars();
    return out;
}

GradedElement graded_from_raw(const ComplexCtx& C, ExpKey e, u32 eta, const PadicScalar& raw) {
    GradedElement out;
    out.nvars = C.nvars();
    PadicScalar a = raw.mul_pi(-norm_digits(C, e, eta));
    if (!a.is_zero()) out.terms.push_back({{e, eta}, std::move(a)});
    return out;
}

PadicScalar graded_raw_coeff(const ComplexCtx& C, GKey key, const PadicScalar& stored) {
    return stored.mul_pi(norm_digits(C, key.e, key.eta));
}

GradedElement graded_S_hat(const ComplexCtx& C) {
    std::vector<std::pair<GKey, PadicScalar>> raw;
    for (const auto& t : C.pot->S_hat.terms)
        raw.push_back({{t.e, 0}, t.c.mul_pi(-norm_digits(C, t.e, 0))});
    auto out = from_raw_terms<PadicScalar>(C.nvars(), std::move(raw));
    out.tail_val = C.pot->S_hat.tail_val;
    return out;
}

GradedElement graded_add(const GradedElement& x, const GradedElement& y) {
    GradedElement out;
    out.nvars = std::max(x.nvars, y.nvars);
    out.tail_val = std::min(x.tail_val, y.tail_val);
    auto ia = x.terms.begin();
    auto ib = y.terms.begin();
    while (ia != x.terms.end() || ib != y.terms.end()) {
        if (ib == y.terms.end() || (ia != x.terms.end() && ia->first < ib->first)) {
            out.terms.push_back(*ia++);
        } else if (ia == x.terms.end() || ib->first < ia->first) {
            out.terms.push_back(*ib++);
        } else {
            PadicScalar c = ia->second + ib->second;
            if (!c.is_zero()) out.terms.push_back({ia->first, std::move(c)});
            ++ia;
            ++ib;
        }
    }
    return out;
}

GradedElement graded_scale(const GradedElement& x, const PadicScalar& c) {
    GradedElement out;
    out.nvars = x.nvars;
    out.tail_val = x.tail_val;
    if (c.is_zero()) return out;
    for (const auto& [k, a] : x.terms) {
        PadicScalar v = a * c;
        if (!v.is_zero()) out.terms.push_back({k, std::move(v)});
    }
    return out;
}

GradedElement graded_neg(const GradedElement& x) {
    GradedElement out = x;
    for (auto& [k, a] : out.terms) a = -a;
    return out;
}

bool graded_equal(const GradedElement& x, const GradedElement& y) {
    return graded_difference_val(x, y) >= kPrecInf;
}

long graded_difference_val(const GradedElement& x, const GradedElement& y) {
    GradedElement d = graded_add(x, graded_neg(y));
    long floor = kPrecInf;
    for (const auto& [k, a] : d.terms) {
        if (a.val() >= a.prec()) continue;  // zero at tracked precision
        floor = std::min(floor, a.val());
    }
    return floor;
}

GradedElement graded_mul(const ComplexCtx& C, const GradedElement& x, const GradedElement& y) {
    std::vector<std::pair<GKey, PadicScalar>> raw;
    long tail = std::min(x.tail_val, y.tail_val);
    unsigned nv = C.nvars();
    for (const auto& [ka, a] : x.terms)
        for (const auto& [kb, b] : y.terms) {
            int sgn = eta_merge_sign(ka.eta, kb.eta);
            if (!sgn) continue;
            unsigned deg = exp_total(ka.e, nv) + exp_total(kb.e, nv);
            if (deg > C.D) {
                tail = std::min(tail, a.val() + b.val());
                continue;
            }
            PadicScalar c = a * b;
            if (sgn < 0) c = -c;
            if (!c.is_zero())
                raw.push_back({{exp_add(ka.e, kb.e, nv), ka.eta | kb.eta}, std::move(c)});
        }
    auto out = from_raw_terms<PadicScalar>(nv, std::move(raw));
    out.tail_val = tail;
    return out;
}

GradedElement apply_delta(const ComplexCtx& C, const GradedElement& x) {
    std::vector<std::pair<GKey, PadicScalar>> raw;
    unsigned nv = C.nvars();
    const PadicScalar& pref = C.pc->prefactor;
    for (const auto& [k, a] : x.terms) {
        u32 eta = k.eta;
        while (eta) {
            unsigned i = unsigned(std::countr_zero(eta));
            eta &= eta - 1;
            unsigned ei = exp_get(k.e, i);
            if (!ei) continue;
            int sgn = eta_strip_sign(k.eta, i);
            PadicScalar c = (a * pref).mul_small(ei);
            if (sgn < 0) c = -c;
            if (c.is_zero()) continue;
            raw.push_back({{exp_set(k.e, i, ei - 1), k.eta & ~(1u << i)}, std::move(c)});
        }
    }
    auto out = from_raw_terms<PadicScalar>(nv, std::move(raw));
    out.tail_val = x.tail_val;
    return out;
}

GradedElement apply_Q_S(const ComplexCtx& C, const GradedElement& x) {
    std::vector<std::pair<GKey, PadicScalar>> raw;
    unsigned nv = C.nvars();
    const PadicScalar& pref = C.pc->prefactor;
    long tail = x.tail_val;
    for (const auto& [k, a] : x.terms) {
        unsigned deg = exp_total(k.e, nv);
        u32 eta = k.eta;
        while (eta) {
            unsigned i = unsigned(std::countr_zero(eta));
            eta &= eta - 1;
            int sgn = eta_strip_sign(k.eta, i);
            const TruncatedSeries& ds = C.pot->dS_hat[i];
            for (const auto& t : ds.terms) {
                unsigned dd = exp_total(t.e, nv);
                // entry factor: pref * raw coeff * pi^{-Mb(ydeg(t) + [i<k])}
                long drop = C.Mb() * (y_degree(*C.V, t.e) + (i < C.k() ? 1 : 0));
                if (deg + dd > C.D) {
                    tail = std::min(tail, a.val() + t.c.val() + pref.val() - drop);
                    continue;
                }
                PadicScalar c = (a * pref * t.c).mul_pi(-drop);
                if (c.is_zero()) continue;
                if (sgn < 0) c = -c;
                raw.push_back({{exp_add(k.e, t.e, nv), k.eta & ~(1u << i)}, std::move(c)});
            }
        }
    }
    auto out = from_raw_terms<PadicScalar>(nv, std::move(raw));
    out.tail_val = std::min(tail, C.pot->S_hat.tail_val);
    return out;
}

GradedElement apply_K_S(const ComplexCtx& C, const GradedElement& x) {
    return graded_add(apply_delta(C, x), apply_Q_S(C, x));
}

GradedElement bv_bracket(const ComplexCtx& C,
                         const std::function<GradedElement(const GradedElement&)>& K,
                         const GradedElement& x, const GradedElement& y) {
    if (!x.is_homogeneous() || !y.is_homogeneous())
        throw validation_error("bracket needs homogeneous inputs");
    GradedElement t1 = K(graded_mul(C, x, y));
    GradedElement t2 = graded_mul(C, K(x), y);
    GradedElement t3 = graded_mul(C, x, K(y));
    int dx = x.empty() ? 0 : x.degree();
    GradedElement out = graded_add(t1, graded_neg(t2));
    if ((dx & 1) == 0)
        out = graded_add(out, graded_neg(t3));
    else
        out = graded_add(out, t3);
    return out;
}

long filtration_level(const ComplexCtx& C, const GradedElement& x) {
    long level = kPrecInf;
    for (const auto& [k, a] : x.terms)
        level = std::min(level, a.val() - C.Mb() * long(C.k()));
    return level;
}

FiniteCdgaElement reduce_R(const ComplexCtx& C, const GradedElement& x) {
    if (filtration_level(C, x) < 0) throw validation_error("reduce_R: element not in F^0");
    const FiniteField& F = *C.V->field.F;
    FiniteCdgaElement out;
    out.nvars = C.nvars();
    long off = C.Mb() * long(C.k());
    for (const auto& [k, a] : x.terms) {
        u64 res = a.mul_pi(-off).residue(F);
        if (res) out.terms.push_back({k, res});
    }
    return out;
}

GradedElement section_sR(const ComplexCtx& C, const FiniteCdgaElement& y) {
    const FiniteField& F = *C.V->field.F;
    GradedElement out;
    out.nvars = C.nvars();
    long off = C.Mb() * long(C.k());
    for (const auto& [k, c] : y.terms) {
        PadicScalar a = teichmuller_lift(C.pc->ring, F, c).mul_pi(off);
        out.terms.push_back({k, std::move(a)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// finite cdga over F_q
// ---------------------------------------------------------------------------

namespace {

FiniteCdgaElement fq_collect(const ComplexCtx& C, std::vector<std::pair<GKey, u64>> raw) {
    const FiniteField& F = *C.V->field.F;
    std::sort(raw.begin(), raw.end(),
              [](const auto& l, const auto& r) { return l.first < r.first; });
    FiniteCdgaElement out;
    out.nvars = C.nvars();
    for (auto& t : raw) {
        if (!out.terms.empty() && out.terms.back().first == t.first)
            out.terms.back().second = F.add(out.terms.back().second, t.second);
        else
            out.terms.push_back(t);
    }
    std::erase_if(out.terms, [](const auto& t) { return t.second == 0; });
    return out;
}

}  // namespace

FiniteCdgaElement fq_add(const ComplexCtx& C, const FiniteCdgaElement& x,
                         const FiniteCdgaElement& y) {
    std::vector<std::pair<GKey, u64>> raw = x.terms;
    for (const auto& t : y.terms) raw.push_back(t);
    return fq_collect(C, std::move(raw));
}

FiniteCdgaElement fq_mul(const ComplexCtx& C, const FiniteCdgaElement& x,
                         const FiniteCdgaElement& y) {
    const FiniteField& F = *C.V->field.F;
    unsigned nv = C.nvars();
    std::vector<std::pair<GKey, u64>> raw;
    for (const auto& [ka, a] : x.terms)
        for (const auto& [kb, b] : y.terms) {
            int sgn = eta_merge_sign(ka.eta, kb.eta);
            if (!sgn) continue;
            u64 c = F.mul(a, b);
            if (!c) continue;
            if (sgn < 0) c = F.neg(c);
            raw.push_back({{exp_add(ka.e, kb.e, nv), ka.eta | kb.eta}, c});
        }
    return fq_collect(C, std::move(raw));
}

FiniteCdgaElement fq_apply_Q_S(const ComplexCtx& C, const FiniteCdgaElement& x) {
    const FiniteField& F = *C.V->field.F;
    const VarietySpec& V = *C.V;
    unsigned nv = C.nvars();
    std::vector<std::vector<std::pair<ExpKey, u64>>> dS(nv);
    for (unsigned ell = 0; ell < V.k; ++ell)
        for (const auto& t : V.polys[ell]) {
            ExpKey e = 0;
            e = exp_set(e, ell, 1);
            for (unsigned j = 0; j <= V.n; ++j) e = exp_set(e, V.k + j, t.e[j]);
            for (unsigned i = 0; i < nv; ++i) {
                unsigned ei = exp_get(e, i);
                if (!ei) continue;
                u64 c = F.mul(t.c, F.from_integer(ei));
                if (c) dS[i].push_back({exp_set(e, i, ei - 1), c});
            }
        }
    std::vector<std::pair<GKey, u64>> raw;
    for (const auto& [k, a] : x.terms) {
        u32 eta = k.eta;
        while (eta) {
            unsigned i = unsigned(std::countr_zero(eta));
            eta &= eta - 1;
            int sgn = eta_strip_sign(k.eta, i);
            for (const auto& [es, cs] : dS[i]) {
                u64 c = F.mul(a, cs);
                if (!c) continue;
                if (sgn < 0) c = F.neg(c);
                raw.push_back({{exp_add(k.e, es, nv), k.eta & ~(1u << i)}, c});
            }
        }
    }
    return fq_collect(C, std::move(raw));
}

bool fq_equal(const FiniteCdgaElement& x, const FiniteCdgaElement& y) {
    return x.terms == y.terms;
}

// ---------------------------------------------------------------------------
// twisted de Rham forms and the odd Fourier transform
// ---------------------------------------------------------------------------

FormElement form_from_raw(const ComplexCtx& C, ExpKey e, u32 dzmask, const PadicScalar& raw) {
    FormElement out;
    out.nvars = C.nvars();
    if (!raw.is_zero()) out.terms.push_back({{e, dzmask}, raw});
    return out;
}

FormElement form_add(const FormElement& x, const FormElement& y) {
    FormElement out;
    out.nvars = std::max(x.nvars, y.nvars);
    std::vector<std::pair<GKey, PadicScalar>> raw = x.terms;
    for (const auto& t : y.terms) raw.push_back(t);
    std::sort(raw.begin(), raw.end(),
              [](const auto& l, const auto& r) { return l.first < r.first; });
    for (auto& t : raw) {
        if (!out.terms.empty() && out.terms.back().first == t.first)
            out.terms.back().second += t.second;
        else
            out.terms.push_back(std::move(t));
    }
    std::erase_if(out.terms, [](const auto& t) { return t.second.is_zero(); });
    return out;
}

namespace {

/// wedge dz_i onto a sorted dz_I from the left
int dz_wedge_sign(u32 mask, unsigned i) {
    if (mask & (1u << i)) return 0;
    unsigned before = std::popcount(mask & ((1u << i) - 1));
    return (before & 1) ? -1 : 1;
}

FormElement form_apply(const ComplexCtx& C, const FormElement& w, bool with_d) {
    unsigned nv = C.nvars();
    const PadicScalar& pref = C.pc->prefactor;
    std::vector<std::pair<GKey, PadicScalar>> raw;
    for (const auto& [k, c] : w.terms) {
        for (unsigned i = 0; i < nv; ++i) {
            int ws = dz_wedge_sign(k.eta, i);
            if (!ws) continue;
            if (with_d) {
                unsigned ei = exp_get(k.e, i);
                if (ei) {
                    PadicScalar v = (c * pref).mul_small(ei);
                    if (ws < 0) v = -v;
                    if (!v.is_zero())
                        raw.push_back({{exp_set(k.e, i, ei - 1), k.eta | (1u << i)}, v});
                }
            }
            for (const auto& t : C.pot->dS_hat[i].terms) {
                if (exp_total(k.e, nv) + exp_total(t.e, nv) > C.D) continue;
                PadicScalar v = c * pref * t.c;
                if (ws < 0) v = -v;
                if (!v.is_zero())
                    raw.push_back({{exp_add(k.e, t.e, nv), k.eta | (1u << i)}, v});
            }
        }
    }
    std::sort(raw.begin(), raw.end(),
              [](const auto& l, const auto& r) { return l.first < r.first; });
    FormElement out;
    out.nvars = nv;
    for (auto& t : raw) {
        if (!out.terms.empty() && out.terms.back().first == t.first)
            out.terms.back().second += t.second;
        else
            out.terms.push_back(std::move(t));
    }
    std::erase_if(out.terms, [](const auto& t) { return t.second.is_zero(); });
    return out;
}

}  // namespace

FormElement form_D(const ComplexCtx& C, const FormElement& w) { return form_apply(C, w, true); }

FormElement form_dX(const ComplexCtx& C, const FormElement& w) { return form_apply(C, w, false); }

GradedElement fourier_J(const ComplexCtx& C, const FormElement& w) {
    unsigned nv = C.nvars();
    u32 full = (1u << nv) - 1;
    GradedElement out = graded_zero(C);
    for (const auto& [k, c] : w.terms) {
        long s = 0;
        u32 m = k.eta;
        unsigned cnt = 0;
        while (m) {
            unsigned j = unsigned(std::countr_zero(m));
            m &= m - 1;
            s += long(j) + 1;  // 1-based index
            ++cnt;
        }
        int sgn = ((s - long(cnt)) & 1) ? -1 : 1;
        PadicScalar v = sgn < 0 ? -c : c;
        out = graded_add(out, graded_from_raw(C, k.e, full & ~k.eta, v));
    }
    return out;
}

}  // namespace dwork
