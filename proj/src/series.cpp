#include "dwork/series.hpp"

#include <algorithm>
#include <cmath>

#include <gmpxx.h>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dwork {

const PadicScalar* TruncatedSeries::coeff(ExpKey e) const {
    auto it = std::lower_bound(terms.begin(), terms.end(), e,
                               [](const STerm& t, ExpKey k) { return t.e < k; });
    if (it != terms.end() && it->e == e) return &it->c;
    return nullptr;
}

unsigned TruncatedSeries::degree() const {
    unsigned d = 0;
    for (const auto& t : terms) d = std::max(d, exp_total(t.e, nvars));
    return d;
}

TruncatedSeries series_from_terms(unsigned nvars, std::vector<STerm> raw) {
    std::sort(raw.begin(), raw.end(), [](const STerm& a, const STerm& b) { return a.e < b.e; });
    TruncatedSeries out;
    out.nvars = nvars;
    for (auto& t : raw) {
        if (!out.terms.empty() && out.terms.back().e == t.e)
            out.terms.back().c += t.c;
        else
            out.terms.push_back(std::move(t));
    }
    std::erase_if(out.terms, [](const STerm& t) { return t.c.is_zero(); });
    return out;
}

TruncatedSeries series_one(const RingPtr& ring, unsigned nvars) {
    TruncatedSeries out;
    out.nvars = nvars;
    out.terms.push_back({0, PadicScalar::one(ring)});
    return out;
}

TruncatedSeries series_add(const TruncatedSeries& A, const TruncatedSeries& B) {
    TruncatedSeries out;
    out.nvars = std::max(A.nvars, B.nvars);
    out.tail_val = std::min(A.tail_val, B.tail_val);
    auto ia = A.terms.begin();
    auto ib = B.terms.begin();
    while (ia != A.terms.end() || ib != B.terms.end()) {
        if (ib == B.terms.end() || (ia != A.terms.end() && ia->e < ib->e)) {
            out.terms.push_back(*ia++);
        } else if (ia == A.terms.end() || ib->e < ia->e) {
            out.terms.push_back(*ib++);
        } else {
            PadicScalar c = ia->c + ib->c;
            if (!c.is_zero()) out.terms.push_back({ia->e, std::move(c)});
            ++ia;
            ++ib;
        }
    }
    return out;
}

TruncatedSeries series_scale(const TruncatedSeries& A, const PadicScalar& c) {
    TruncatedSeries out;
    out.nvars = A.nvars;
    out.tail_val = A.tail_val;
    if (c.is_zero()) return out;
    for (const auto& t : A.terms) {
        PadicScalar v = t.c * c;
        if (!v.is_zero()) out.terms.push_back({t.e, std::move(v)});
    }
    return out;
}

namespace {

void mul_block(const TruncatedSeries& A, size_t lo, size_t hi, const TruncatedSeries& B,
               unsigned bound, unsigned nvars, std::vector<STerm>& acc, long& tail) {
    for (size_t i = lo; i < hi; ++i) {
        const auto& ta = A.terms[i];
        unsigned da = exp_total(ta.e, nvars);
        for (const auto& tb : B.terms) {
            unsigned db = exp_total(tb.e, nvars);
            if (da + db > bound) {
                tail = std::min(tail, ta.c.val() + tb.c.val());
                continue;
            }
            acc.push_back({exp_add(ta.e, tb.e, nvars), ta.c * tb.c});
        }
    }
}

}  // namespace

TruncatedSeries series_mul_serial(const TruncatedSeries& A, const TruncatedSeries& B,
                                  unsigned bound) {
    unsigned nvars = std::max(A.nvars, B.nvars);
    std::vector<STerm> acc;
    acc.reserve(A.terms.size() + B.terms.size());
    long tail = std::min(A.tail_val, B.tail_val);
    mul_block(A, 0, A.terms.size(), B, bound, nvars, acc, tail);
    TruncatedSeries out = series_from_terms(nvars, std::move(acc));
    out.tail_val = tail;
    return out;
}

TruncatedSeries series_mul(const TruncatedSeries& A, const TruncatedSeries& B, unsigned bound,
                           bool parallel) {
#ifdef _OPENMP
    if (parallel && A.terms.size() * B.terms.size() > 16384) {
        unsigned nvars = std::max(A.nvars, B.nvars);
        int nt = omp_get_max_threads();
        std::vector<std::vector<STerm>> accs(nt);
        std::vector<long> tails(nt, std::min(A.tail_val, B.tail_val));
        size_t n = A.terms.size();
#pragma omp parallel num_threads(nt)
        {
            int tid = omp_get_thread_num();
            size_t lo = n * size_t(tid) / nt, hi = n * size_t(tid + 1) / nt;
            mul_block(A, lo, hi, B, bound, nvars, accs[tid], tails[tid]);
        }
        std::vector<STerm> merged;
        size_t sz = 0;
        for (auto& v : accs) sz += v.size();
        merged.reserve(sz);
        for (auto& v : accs)
            for (auto& t : v) merged.push_back(std::move(t));
        long tail = kPrecInf;
        for (long t : tails) tail = std::min(tail, t);
        TruncatedSeries out = series_from_terms(nvars, std::move(merged));
        out.tail_val = tail;
        return out;
    }
#endif
    (void)parallel;
    return series_mul_serial(A, B, bound);
}

namespace {

/// exp(c z^w) truncated; divisions by k are exact
TruncatedSeries exp_single_term(const RingPtr& ring, unsigned nvars, ExpKey w,
                                const PadicScalar& c, unsigned bound, long& tail) {
    TruncatedSeries out;
    out.nvars = nvars;
    unsigned dw = exp_total(w, nvars);
    if (dw == 0) throw validation_error("series_exp needs zero constant term");
    out.terms.push_back({0, PadicScalar::one(ring)});
    PadicScalar term = PadicScalar::one(ring);
    ExpKey e = 0;
    for (unsigned k = 1; k * dw <= bound; ++k) {
        term = term * c;
        u64 kk = k;
        unsigned vp = 0;
        while (kk % ring->p() == 0) { kk /= ring->p(); ++vp; }
        if (kk > 1) term = term * PadicScalar(ring, kk).inverse();
        if (vp) term = term.divide_exact_p(vp);
        if (!term.is_zero() && term.val() < 0)
            throw precision_error("exp term not integral");
        e = exp_add(e, w, nvars);
        if (term.is_zero()) break;
        out.terms.push_back({e, term});
    }
    unsigned k_drop = bound / dw + 1;
    tail = std::min(tail, long(k_drop) * std::max(c.val(), 0L));
    return out;
}

}  // namespace

TruncatedSeries series_exp(const TruncatedSeries& A, unsigned bound) {
    if (A.terms.empty())
        throw validation_error("series_exp of an empty series: use series_one for exp(0)");
    const RingPtr& ring = A.terms.front().c.ring();
    for (const auto& t : A.terms)
        if (t.e == 0) throw validation_error("series_exp needs zero constant term");
    long tail = A.tail_val;
    TruncatedSeries out = series_one(ring, A.nvars);
    for (const auto& t : A.terms) {
        TruncatedSeries f = exp_single_term(ring, A.nvars, t.e, t.c, bound, tail);
        out = series_mul(out, f, bound);
    }
    out.tail_val = std::min(out.tail_val, tail);
    return out;
}

TruncatedSeries series_subst_zq(const TruncatedSeries& A, unsigned q, unsigned bound) {
    std::vector<STerm> raw;
    long tail = A.tail_val;
    for (const auto& t : A.terms) {
        unsigned d = exp_total(t.e, A.nvars);
        if (d * q > bound) {
            tail = std::min(tail, t.c.val());
            continue;
        }
        raw.push_back({exp_scale(t.e, q, A.nvars), t.c});
    }
    auto out = series_from_terms(A.nvars, std::move(raw));
    out.tail_val = tail;
    return out;
}

TruncatedSeries series_dz(const TruncatedSeries& A, unsigned var) {
    std::vector<STerm> raw;
    for (const auto& t : A.terms) {
        unsigned e = exp_get(t.e, var);
        if (!e) continue;
        raw.push_back({exp_set(t.e, var, e - 1), t.c.mul_small(e)});
    }
    auto out = series_from_terms(A.nvars, std::move(raw));
    out.tail_val = A.tail_val;
    return out;
}

TruncatedSeries apply_T_q(const TruncatedSeries& A, unsigned q) {
    std::vector<STerm> raw;
    for (const auto& t : A.terms) {
        ExpKey e;
        if (exp_divq(t.e, q, A.nvars, e)) raw.push_back({e, t.c});
    }
    auto out = series_from_terms(A.nvars, std::move(raw));
    out.tail_val = A.tail_val;
    return out;
}

TruncatedSeries series_theta_op(const TruncatedSeries& A, unsigned var) {
    std::vector<STerm> raw;
    for (const auto& t : A.terms) {
        unsigned e = exp_get(t.e, var);
        if (!e) continue;
        raw.push_back({t.e, t.c.mul_small(e)});
    }
    auto out = series_from_terms(A.nvars, std::move(raw));
    out.tail_val = A.tail_val;
    return out;
}

// ---------------------------------------------------------------------------

std::vector<PadicScalar> artin_hasse_coeffs(const PrecisionContext& ctx, unsigned Dt) {
    // exact rational recurrence  i e_i = sum_{p^n <= i} e_{i - p^n}
    std::vector<mpq_class> e(Dt + 1);
    e[0] = 1;
    for (unsigned i = 1; i <= Dt; ++i) {
        mpq_class s = 0;
        u64 pn = 1;
        while (pn <= i) {
            s += e[i - pn];
            if (pn > i / ctx.p) break;
            pn *= ctx.p;
        }
        e[i] = s / i;
    }
    std::vector<PadicScalar> out;
    out.reserve(Dt + 1);
    mpz_class pmod;
    {
        u64 pm = ctx.ring->pmod();
        mpz_import(pmod.get_mpz_t(), 1, 1, sizeof(u64), 0, 0, &pm);
    }
    for (unsigned i = 0; i <= Dt; ++i) {
        mpz_class num = e[i].get_num(), den = e[i].get_den();
        if (mpz_divisible_ui_p(den.get_mpz_t(), static_cast<unsigned long>(ctx.p)))
            throw validation_error("Artin-Hasse coefficient not p-integral");
        mpz_class dinv;
        if (!mpz_invert(dinv.get_mpz_t(), den.get_mpz_t(), pmod.get_mpz_t()))
            throw validation_error("denominator not invertible mod p^Ncap");
        mpz_class r = (num * dinv) % pmod;
        if (r < 0) r += pmod;
        out.push_back(PadicScalar(ctx.ring, mpz_get_ui(r.get_mpz_t())));
    }
    return out;
}

ThetaTable theta_coeffs(const PrecisionContext& ctx, unsigned Dt) {
    ThetaTable t;
    t.ah = artin_hasse_coeffs(ctx, Dt);
    t.lambda.reserve(Dt + 1);
    PadicScalar g = ctx.gamma.gamma;
    PadicScalar gp = PadicScalar::one(ctx.ring);
    for (unsigned i = 0; i <= Dt; ++i) {
        t.lambda.push_back(t.ah[i] * gp);
        if (i < Dt) gp = gp * g;
    }
    return t;
}

PadicScalar theta_eval(const ThetaTable& th, const PadicScalar& t) {
    PadicScalar acc = th.lambda.back();
    for (size_t i = th.lambda.size() - 1; i-- > 0;) acc = acc * t + th.lambda[i];
    // the first dropped lambda bounds the truncation error
    const auto& R = *acc.ring();
    long cap = long(th.lambda.size()) * long(R.M()) / long(R.p() - 1);
    return acc.reduce_prec(std::min(acc.prec(), cap));
}

PadicScalar psi_q(const PrecisionContext& ctx, const ThetaTable& th, u64 x) {
    const FiniteField& F = *ctx.field.F;
    PadicScalar acc = PadicScalar::one(ctx.ring);
    u64 xp = x;
    for (unsigned j = 0; j < ctx.a; ++j) {
        acc = acc * theta_eval(th, teichmuller_lift(ctx.ring, F, xp));
        xp = F.frobenius(xp);
    }
    return acc;
}

// ---------------------------------------------------------------------------

Potentials build_potentials(const VarietySpec& V, const PrecisionContext& ctx, unsigned bound) {
    V.validate();
    if (!bound) bound = ctx.D;
    if (!bound) throw validation_error("degree bound not set");
    unsigned maxd = 0;
    for (unsigned d : V.degrees) maxd = std::max(maxd, d);
    if (V.k && bound < maxd + 1)
        throw validation_error("degree bound too small to hold any term");

    const FiniteField& F = *V.field.F;
    unsigned nv = V.nvars();
    Potentials out;

    // S~ with Teichmuller coefficients
    std::vector<STerm> s_raw;
    for (unsigned ell = 0; ell < V.k; ++ell)
        for (const auto& t : V.polys[ell]) {
            ExpKey e = 0;
            e = exp_set(e, ell, 1);
            for (unsigned j = 0; j <= V.n; ++j) e = exp_set(e, V.k + j, t.e[j]);
            s_raw.push_back({e, teichmuller_lift(ctx.ring, F, t.c)});
        }
    out.S_lift = series_from_terms(nv, std::move(s_raw));

    // S-hat = sum_m gamma_m (s~_w z^w)^{p^m}
    std::vector<STerm> hat_raw;
    long hat_tail = kPrecInf;
    const auto& gl = ctx.gamma.gamma_ell;
    for (const auto& t : out.S_lift.terms) {
        unsigned d = exp_total(t.e, nv);
        u64 pw = 1;
        for (unsigned m = 0;; ++m) {
            if (m >= gl.size()) break;  // val(gamma_m) >= N beyond the table
            if (d * pw > bound) {
                hat_tail = std::min(hat_tail, gl[m].val());
                break;
            }
            hat_raw.push_back({exp_scale(t.e, unsigned(pw), nv), gl[m] * t.c.pow(pw)});
            pw *= ctx.p;
        }
    }
    out.S_hat = series_from_terms(nv, std::move(hat_raw));
    out.S_hat.tail_val = hat_tail;

    // Gamma = sum_{j<a} sum_terms sum_l gamma^{p^l}/p^l (s~ z^w)^{p^{j+l}}
    std::vector<STerm> g_raw;
    long g_tail = kPrecInf;
    for (const auto& t : out.S_lift.terms) {
        unsigned d = exp_total(t.e, nv);
        for (unsigned j = 0; j < ctx.a; ++j) {
            for (unsigned l = 0;; ++l) {
                double cv =
                    std::pow(double(ctx.p), double(l)) / double(ctx.p - 1) - double(l);
                if (cv >= double(ctx.Ncap)) break;
                u64 pw = pow_u64_checked(ctx.p, j + l, "p^{j+l}");
                PadicScalar coef =
                    ctx.gamma.gamma.pow(pow_u64_checked(ctx.p, l, "p^l")).divide_exact_p(l);
                if (d * pw > bound) {
                    g_tail = std::min(g_tail, coef.val());
                    break;
                }
                g_raw.push_back({exp_scale(t.e, unsigned(pw), nv), coef * t.c.pow(pw)});
            }
        }
    }
    out.Gamma = series_from_terms(nv, std::move(g_raw));
    out.Gamma.tail_val = g_tail;

    out.dS_hat.reserve(nv);
    for (unsigned i = 0; i < nv; ++i) out.dS_hat.push_back(series_dz(out.S_hat, i));
    return out;
}

TruncatedSeries build_E_S(const VarietySpec& V, const PrecisionContext& ctx, const ThetaTable& th,
                          unsigned bound) {
    V.validate();
    unsigned nv = V.nvars();
    const FiniteField& F = *V.field.F;
    TruncatedSeries out = series_one(ctx.ring, nv);
    long tail = kPrecInf;
    for (unsigned ell = 0; ell < V.k; ++ell)
        for (const auto& t : V.polys[ell]) {
            ExpKey e = 0;
            e = exp_set(e, ell, 1);
            for (unsigned j = 0; j <= V.n; ++j) e = exp_set(e, V.k + j, t.e[j]);
            unsigned d = exp_total(e, nv);
            PadicScalar s = teichmuller_lift(ctx.ring, F, t.c);
            for (unsigned j = 0; j < ctx.a; ++j) {
                u64 pj = pow_u64_checked(ctx.p, j, "p^j");
                if (d * pj > bound) {
                    tail = std::min(tail, long(pj) * long(ctx.M / (ctx.p - 1)));
                    continue;
                }
                TruncatedSeries f;
                f.nvars = nv;
                PadicScalar spj = s.pow(pj);
                PadicScalar arg = PadicScalar::one(ctx.ring);
                ExpKey acc = 0;
                for (unsigned i = 0; i * d * unsigned(pj) <= bound && i < th.lambda.size(); ++i) {
                    PadicScalar c = th.lambda[i] * arg;
                    if (!c.is_zero()) f.terms.push_back({acc, c});
                    arg = arg * spj;
                    acc = exp_add(acc, exp_scale(e, unsigned(pj), nv), nv);
                }
                unsigned i_drop = bound / (d * unsigned(pj)) + 1;
                if (i_drop < th.lambda.size())
                    tail = std::min(tail, long(i_drop) * long(ctx.M / (ctx.p - 1)));
                out = series_mul(out, f, bound);
            }
        }
    out.tail_val = std::min(out.tail_val, tail);
    return out;
}

TruncatedSeries build_E_hat(const PrecisionContext& ctx, const Potentials& pot, unsigned bound) {
    (void)ctx;
    return series_exp(pot.S_hat, bound);
}

PadicScalar exp_sum(const VarietySpec& V, const PrecisionContext& ctx, const ThetaTable& th,
                    unsigned m, u64 ceiling, bool parallel) {
    V.validate();
    const FiniteField& F = *V.field.F;
    unsigned nv = V.nvars();
    u64 qm = pow_u64_checked(F.q(), m, "q^m");
    u64 total = 1;
    for (unsigned i = 0; i < nv; ++i) {
        if (total > ceiling / qm + 1) throw ceiling_error("enumeration ceiling exceeded");
        total *= qm;
    }
    if (total > ceiling) throw ceiling_error("enumeration ceiling exceeded");

    FiniteField Em(F.p(), F.deg() * m);
    auto embed = build_embedding(F, Em);
    std::vector<PadicScalar> psi_table(F.q());
    for (u64 x = 0; x < F.q(); ++x) psi_table[x] = psi_q(ctx, th, x);
    // trace table F_{q^m} -> F_q via the inverse of the embedding
    std::vector<u64> trace_tab(Em.q());
    {
        std::vector<u64> inv_embed(Em.q(), u64(-1));
        for (u64 x = 0; x < F.q(); ++x) inv_embed[embed[x]] = x;
        for (u64 x = 0; x < Em.q(); ++x) {
            u64 tr = Em.trace_to_subfield(x, F.deg());
            if (inv_embed[tr] == u64(-1)) throw validation_error("trace left the base field");
            trace_tab[x] = inv_embed[tr];
        }
    }
    std::vector<std::vector<std::pair<u64, std::vector<u32>>>> polys(V.k);
    for (unsigned i = 0; i < V.k; ++i)
        for (const auto& t : V.polys[i]) polys[i].push_back({embed[t.c], t.e});

    auto eval_point = [&](u64 idx) -> u64 {  // trace of S at the point
        u64 z[kMaxVars];
        u64 t = idx;
        for (unsigned i = 0; i < nv; ++i) { z[i] = t % qm; t /= qm; }
        u64 s = 0;
        for (unsigned i = 0; i < V.k; ++i) {
            u64 gi = 0;
            for (const auto& [c, e] : polys[i]) {
                u64 v = c;
                for (unsigned j = 0; j <= V.n && v; ++j)
                    if (e[j]) v = z[V.k + j] == 0 ? 0 : Em.mul(v, Em.pow(z[V.k + j], e[j]));
                gi = Em.add(gi, v);
            }
            s = Em.add(s, Em.mul(z[i], gi));
        }
        return trace_tab[s];
    };

    std::vector<u64> counts(F.q(), 0);
#ifdef _OPENMP
    if (parallel && total > 4096) {
        int nt = omp_get_max_threads();
        std::vector<std::vector<u64>> local(nt, std::vector<u64>(F.q(), 0));
#pragma omp parallel num_threads(nt)
        {
            auto& mine = local[omp_get_thread_num()];
#pragma omp for schedule(static)
            for (i64 idx = 0; idx < i64(total); ++idx) mine[eval_point(u64(idx))] += 1;
        }
        for (auto& v : local)
            for (u64 x = 0; x < F.q(); ++x) counts[x] += v[x];
    } else
#endif
    {
        for (u64 idx = 0; idx < total; ++idx) counts[eval_point(idx)] += 1;
    }

    PadicScalar acc = PadicScalar::zero(ctx.ring);
    for (u64 x = 0; x < F.q(); ++x) acc += psi_table[x].mul_small(counts[x]);
    return acc;
}

}  // namespace dwork
