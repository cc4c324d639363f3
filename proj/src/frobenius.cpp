#include "dwork/frobenius.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dwork {

namespace {

long y_degree(const VarietySpec& V, ExpKey e) {
    long w = 0;
    for (unsigned i = 0; i < V.k; ++i) w += exp_get(e, i);
    return w;
}

}  // namespace

GradedElement apply_psi(const ComplexCtx& C, const TruncatedSeries* E, const GradedElement& x) {
    unsigned nv = C.nvars();
    u32 full = (1u << nv) - 1;
    const u64 q = C.pc->q;
    STerm unit{0, PadicScalar::one(C.pc->ring)};
    std::vector<std::pair<GKey, PadicScalar>> raw;
    for (const auto& [k, a] : x.terms) {
        u32 comp = full & ~k.eta;
        unsigned m = std::popcount(k.eta);
        u64 qm = pow_u64_checked(q, m, "q^m");
        const STerm* begin = E ? E->terms.data() : &unit;
        size_t count = E ? E->terms.size() : 1;
        for (size_t ti = 0; ti < count; ++ti) {
            const STerm& t = begin[ti];
            // u_j = (e_j + f_j + [j in comp])/q - [j in comp], all lanes integral >= 0
            ExpKey u = 0;
            bool ok = true;
            for (unsigned j = 0; j < nv && ok; ++j) {
                unsigned chi = (comp >> j) & 1u;
                unsigned tj = exp_get(k.e, j) + exp_get(t.e, j) + chi;
                if (tj % q) { ok = false; break; }
                unsigned uj = unsigned(tj / q);
                if (uj < chi) { ok = false; break; }
                u = exp_set(u, j, uj - chi);
            }
            if (!ok) continue;
            long drop = C.Mb() * (y_degree(*C.V, k.e) - y_degree(*C.V, u));
            PadicScalar c = (a * t.c).mul_small(qm).mul_pi(drop);
            if (!c.is_zero()) raw.push_back({{u, k.eta}, std::move(c)});
        }
    }
    std::sort(raw.begin(), raw.end(),
              [](const auto& l, const auto& r) { return l.first < r.first; });
    GradedElement out;
    out.nvars = nv;
    out.tail_val = E ? std::min(x.tail_val, E->tail_val) : x.tail_val;
    for (auto& t : raw) {
        if (!out.terms.empty() && out.terms.back().first == t.first)
            out.terms.back().second += t.second;
        else
            out.terms.push_back(std::move(t));
    }
    std::erase_if(out.terms, [](const auto& t) { return t.second.is_zero(); });
    return out;
}

// ---------------------------------------------------------------------------

namespace {

void enumerate_basis(const VarietySpec& V, unsigned bound, unsigned m,
                     std::vector<GKey>& out) {
    unsigned nv = V.nvars();
    // all exponents of degree <= bound with every eta-subset of size m
    std::vector<ExpKey> exps;
    std::function<void(unsigned, ExpKey, unsigned)> rec = [&](unsigned var, ExpKey e,
                                                              unsigned used) {
        if (var == nv) {
            exps.push_back(e);
            return;
        }
        for (unsigned d = 0; used + d <= bound; ++d) rec(var + 1, exp_set(e, var, d), used + d);
    };
    rec(0, 0, 0);
    std::vector<u32> masks;
    for (u32 mask = 0; mask < (1u << nv); ++mask)
        if (std::popcount(mask) == int(m)) masks.push_back(mask);
    for (ExpKey e : exps)
        for (u32 mask : masks) out.push_back({e, mask});
    std::sort(out.begin(), out.end(), [&](const GKey& l, const GKey& r) {
        unsigned dl = exp_total(l.e, nv), dr = exp_total(r.e, nv);
        if (dl != dr) return dl < dr;
        if (l.e != r.e) return l.e < r.e;
        return l.eta < r.eta;
    });
}

}  // namespace

OperatorRep operator_matrix(const ComplexCtx& C, const std::string& op, unsigned m,
                            const TruncatedSeries* E) {
    OperatorRep rep;
    rep.op = op;
    rep.D = C.D;
    rep.N = C.pc->N;
    rep.degree_m = int(m);
    if (m > C.nvars()) throw validation_error("eta-degree out of range");
    enumerate_basis(*C.V, C.D, m, rep.domain);
    unsigned m_out = m;
    if (op == "delta" || op == "K_S" || op == "Q_S") {
        if (m == 0) m_out = 0;  // zero map; keep the same codomain shape
        else m_out = m - 1;
    }
    enumerate_basis(*C.V, C.D, m_out, rep.codomain);
    std::map<GKey, u32> index;
    for (u32 i = 0; i < rep.codomain.size(); ++i) index[rep.codomain[i]] = i;

    auto apply = [&](const GradedElement& x) -> GradedElement {
        if (op == "delta") return apply_delta(C, x);
        if (op == "K_S") return apply_K_S(C, x);
        if (op == "Q_S") return apply_Q_S(C, x);
        if (op == "psi_Pn") return apply_psi(C, nullptr, x);
        if (op == "psi_S") {
            if (!E) throw validation_error("psi_S matrix needs the E series");
            return apply_psi(C, E, x);
        }
        throw validation_error("unknown operator name: " + op);
    };

    rep.cols.resize(rep.domain.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16)
#endif
    for (i64 ci = 0; ci < i64(rep.domain.size()); ++ci) {
        GradedElement basis_elt;
        basis_elt.nvars = C.nvars();
        basis_elt.terms.push_back({rep.domain[ci], PadicScalar::one(C.pc->ring)});
        GradedElement img = apply(basis_elt);
        auto& col = rep.cols[ci];
        for (const auto& [k, a] : img.terms) {
            auto it = index.find(k);
            if (it == index.end()) continue;  // beyond the truncation window
            if (a.val() < 0) throw precision_error("non-integral matrix entry");
            col.push_back({it->second, a});
        }
    }
    return rep;
}

std::vector<PadicScalar> operator_apply(const ComplexCtx& C, const OperatorRep& rep,
                                        const std::vector<PadicScalar>& v) {
    if (v.size() != rep.domain.size()) throw validation_error("vector/basis size mismatch");
    std::vector<PadicScalar> out(rep.codomain.size(), PadicScalar::zero(C.pc->ring));
    for (size_t c = 0; c < rep.cols.size(); ++c) {
        if (v[c].is_zero()) continue;
        for (const auto& [r, a] : rep.cols[c]) out[r] += a * v[c];
    }
    return out;
}

// ---------------------------------------------------------------------------

SectorBasis sector_basis(const VarietySpec& V, long charge, unsigned bound) {
    SectorBasis out;
    out.charge = charge;
    unsigned nv = V.nvars();
    std::vector<long> ch(nv);
    for (unsigned i = 0; i < V.k; ++i) ch[i] = -long(V.degrees[i]);
    for (unsigned j = V.k; j < nv; ++j) ch[j] = 1;
    std::function<void(unsigned, ExpKey, unsigned, long)> rec = [&](unsigned var, ExpKey e,
                                                                    unsigned used, long c) {
        if (var == nv) {
            if (c == charge) out.monomials.push_back(e);
            return;
        }
        // x-variables can only add +1 per remaining degree unit
        long remaining = long(bound - used);
        if (c > charge && var >= V.k) return;           // charge only grows from here
        if (charge - c > remaining) return;             // cannot reach the target
        for (unsigned d = 0; used + d <= bound; ++d)
            rec(var + 1, exp_set(e, var, d), used + d, c + ch[var] * long(d));
    };
    rec(0, 0, 0, 0);
    std::sort(out.monomials.begin(), out.monomials.end(), [&](ExpKey l, ExpKey r) {
        unsigned dl = exp_total(l, nv), dr = exp_total(r, nv);
        if (dl != dr) return dl < dr;
        return l < r;
    });
    for (u32 i = 0; i < out.monomials.size(); ++i) out.index[out.monomials[i]] = i;
    return out;
}

namespace {

using SparseVec = std::vector<std::pair<u32, PadicScalar>>;

void vec_normalize(SparseVec& v) {
    std::sort(v.begin(), v.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
    SparseVec out;
    for (auto& t : v) {
        if (!out.empty() && out.back().first == t.first)
            out.back().second += t.second;
        else
            out.push_back(std::move(t));
    }
    std::erase_if(out, [](const auto& t) {
        return t.second.is_zero() || t.second.val() >= t.second.prec();
    });
    v = std::move(out);
}

/// subtract factor * pivot column from v (pivot head removed exactly)
void vec_axpy(SparseVec& v, const PadicScalar& factor, const SparseVec& col) {
    for (const auto& [r, a] : col) v.push_back({r, -(factor * a)});
    vec_normalize(v);
}

}  // namespace

std::vector<std::pair<u32, PadicScalar>> project_to_classes(
    const ComplexCtx& C, const CohomologyH0& H, SparseVec vec) {
    (void)C;
    vec_normalize(vec);
    // pivot columns vanish on all rows processed before them, so reducing in
    // retirement order terminates in one pass
    for (const EchelonPivot& pv : H.pivots) {
        auto it = std::lower_bound(vec.begin(), vec.end(), pv.row,
                                   [](const auto& t, u32 rr) { return t.first < rr; });
        if (it == vec.end() || it->first != pv.row) continue;
        PadicScalar factor = it->second.mul_pi(-pv.pivot_val);
        vec_axpy(vec, factor, pv.col);
    }
    return vec;
}

CohomologyH0 cohomology_H0(const ComplexCtx& C, long precision_floor_digits) {
    const VarietySpec& V = *C.V;
    unsigned nv = C.nvars();
    CohomologyH0 H;
    long cX = V.c_X();
    H.sector = sector_basis(V, cX, C.D);

    unsigned maxd = 0;
    for (unsigned d : V.degrees) maxd = std::max(maxd, d);
    // Only columns whose whole image stays inside the window are admitted:
    // truncating a column would turn it into an inexact relation and inject
    // spurious rank at the tail valuation. The spill beyond `span` is instead
    // surfaced as unpivoted junk rows, audited during projection.
    unsigned span = maxd;
    for (const auto& ds : C.pot->dS_hat) span = std::max(span, ds.degree());
    unsigned colmax = C.D > span ? C.D - span : 0;

    // assemble columns: images of z^w eta_i with matching charge
    struct PendingCol {
        unsigned deg;
        unsigned i;
        ExpKey w;
    };
    std::vector<PendingCol> pending;
    std::vector<long> chvar(nv);
    for (unsigned i = 0; i < V.k; ++i) chvar[i] = -long(V.degrees[i]);
    for (unsigned j = V.k; j < nv; ++j) chvar[j] = 1;
    for (unsigned i = 0; i < nv; ++i) {
        SectorBasis cols = sector_basis(V, cX + chvar[i], colmax);
        for (ExpKey w : cols.monomials) pending.push_back({exp_total(w, nv), i, w});
    }
    std::sort(pending.begin(), pending.end(), [](const PendingCol& l, const PendingCol& r) {
        if (l.deg != r.deg) return l.deg < r.deg;
        if (l.i != r.i) return l.i < r.i;
        return l.w < r.w;
    });
    H.columns_used = unsigned(pending.size());

    auto degree_of_row = [&](u32 r) { return exp_total(H.sector.monomials[r], nv); };

    // True classes live in the low-degree Hodge window; rows there are pivoted
    // only when a column has no alternative, so cokernel representatives stay
    // degree-localized instead of drifting into the truncation boundary.
    H.protect_bound = V.n * (maxd + 1) + unsigned(std::abs(V.c_X())) + 1;

    // Valuation-layered Gaussian elimination over the integral ring, in the
    // style of a digit-by-digit Smith reduction. Layer t retires columns
    // whose minimal entry valuation is exactly t; every elimination factor is
    // then integral, so sub-precision tails are never re-amplified into fake
    // relations. Retired pivot columns vanish on all earlier pivot rows, so
    // projections terminate in one ordered pass.
    //
    // Layer 0 is the residue-field elimination; the protected rows it leaves
    // free are the residue-level cohomology basis. Deeper layers may pin
    // those rows through relations that close around the truncation boundary
    // (window torsion); such a relation caps the certified depth instead of
    // evicting a basis row.
    std::vector<SparseVec> cols;
    cols.reserve(pending.size());
    for (const auto& pcol : pending) {
        GradedElement b;
        b.nvars = nv;
        b.terms.push_back({{pcol.w, 1u << pcol.i}, PadicScalar::one(C.pc->ring)});
        GradedElement img = apply_K_S(C, b);
        SparseVec col;
        for (const auto& [k, a] : img.terms) {
            auto idx = H.sector.index.find(k.e);
            if (idx == H.sector.index.end()) continue;  // outside the window
            if (a.val() < 0) throw precision_error("non-integral elimination entry");
            col.push_back({idx->second, a});
        }
        vec_normalize(col);
        if (!col.empty()) cols.push_back(std::move(col));
    }

    H.torsion_floor = kPrecInf;
    std::vector<bool> active(cols.size(), true);
    std::vector<bool> basis_locked(H.sector.monomials.size(), false);
    bool basis_known = false;

    auto col_min_val = [&](const SparseVec& v) {
        long m = kPrecInf;
        for (const auto& [r, a] : v) m = std::min(m, a.val());
        return m;
    };
    std::vector<long> minval(cols.size());
    for (u32 ci = 0; ci < cols.size(); ++ci) minval[ci] = col_min_val(cols[ci]);

    // incidence lists (entries can go stale; re-checked on use)
    std::vector<std::vector<u32>> incidence(H.sector.monomials.size());
    for (u32 ci = 0; ci < cols.size(); ++ci)
        for (const auto& [r, a] : cols[ci]) incidence[r].push_back(ci);

    auto entry_at = [](const SparseVec& v, u32 row) -> const PadicScalar* {
        auto it = std::lower_bound(v.begin(), v.end(), row,
                                   [](const auto& t, u32 rr) { return t.first < rr; });
        if (it != v.end() && it->first == row) return &it->second;
        return nullptr;
    };

    auto lock_basis = [&]() {
        for (u32 r = 0; r < H.sector.monomials.size(); ++r)
            if (!H.pivot_of_row.count(r) && degree_of_row(r) <= H.protect_bound)
                basis_locked[r] = true;
        basis_known = true;
    };

    const long layer_cap = long(C.pc->Ncap) * C.pc->M;
    for (long layer = 0; layer <= layer_cap;) {
        u32 best = u32(cols.size());
        for (u32 ci = 0; ci < cols.size(); ++ci) {
            if (!active[ci]) continue;
            if (minval[ci] <= layer) minval[ci] = col_min_val(cols[ci]);
            if (minval[ci] >= kPrecInf) { active[ci] = false; continue; }
            if (minval[ci] == layer && (best == cols.size() || ci < best)) best = ci;
        }
        if (best == cols.size()) {
            if (!basis_known) lock_basis();
            long next = kPrecInf;
            for (u32 ci = 0; ci < cols.size(); ++ci)
                if (active[ci]) next = std::min(next, minval[ci]);
            if (next >= layer_cap) break;
            layer = next;
            continue;
        }
        SparseVec col = std::move(cols[best]);
        cols[best].clear();
        active[best] = false;
        // pivot row among the layer-valuation entries: skip locked basis rows;
        // prefer rows beyond the protected window, then higher graded order
        u32 prow = u32(-1);
        for (const auto& [r, a] : col) {
            if (a.val() != layer) continue;
            if (basis_locked[r]) continue;
            if (prow == u32(-1)) { prow = r; continue; }
            bool cur_prot = degree_of_row(prow) <= H.protect_bound;
            bool new_prot = degree_of_row(r) <= H.protect_bound;
            if (cur_prot != new_prot) {
                if (cur_prot) prow = r;
                continue;
            }
            unsigned dn = degree_of_row(r), dc = degree_of_row(prow);
            if (dn > dc || (dn == dc && r > prow)) prow = r;
        }
        if (prow == u32(-1)) {
            // relation supported only on locked basis rows at this depth:
            // window torsion caps the certification instead of pivoting
            H.torsion_floor = std::min(H.torsion_floor, layer);
            continue;
        }
        PadicScalar head;
        for (const auto& [r, a] : col)
            if (r == prow) head = a;
        PadicScalar scale_inv = head.mul_pi(-layer).inverse();
        EchelonPivot pv;
        pv.row = prow;
        pv.pivot_val = layer;
        for (auto& [r, a] : col) {
            PadicScalar na =
                r == prow ? PadicScalar::one(C.pc->ring).mul_pi(layer) : a * scale_inv;
            if (!na.is_zero() && na.val() < na.prec()) pv.col.push_back({r, std::move(na)});
        }
        // eliminate the pivot row from every other active column; the layer
        // invariant keeps all factors integral
        for (u32 ci : incidence[prow]) {
            if (!active[ci]) continue;
            const PadicScalar* e = entry_at(cols[ci], prow);
            if (!e) continue;
            if (e->val() < layer) throw precision_error("layer invariant violated");
            vec_axpy(cols[ci], e->mul_pi(-layer), pv.col);
            minval[ci] = col_min_val(cols[ci]);
            for (const auto& [r, a] : cols[ci]) incidence[r].push_back(ci);
            if (cols[ci].empty()) active[ci] = false;
        }
        incidence[prow].clear();
        if (degree_of_row(prow) <= H.protect_bound) H.pivot_loss += layer;
        H.pivot_of_row[prow] = u32(H.pivots.size());
        H.pivots.push_back(std::move(pv));
    }
    if (!basis_known) lock_basis();

    H.n_eff_digits = long(C.pc->N) * C.pc->M - H.pivot_loss;
    if (precision_floor_digits > 0 && H.n_eff_digits < precision_floor_digits)
        throw precision_error("effective precision below the configured floor; raise N");

    H.junk_boundary = colmax;
    for (u32 r = 0; r < H.sector.monomials.size(); ++r) {
        if (H.pivot_of_row.count(r)) continue;
        H.class_rows.push_back(r);
        unsigned deg = degree_of_row(r);
        if (deg <= H.protect_bound)
            H.kept_classes.push_back(r);
        else if (deg <= H.junk_boundary)
            ++H.unexpected_classes;  // changes the determinant; stabilization flags it
    }
    return H;
}

// ---------------------------------------------------------------------------

namespace {

/// division-free characteristic polynomial; returns the coefficients of
/// det(1 - T A) in ascending powers of T
std::vector<PadicScalar> berkowitz_det1mTA(const RingPtr& ring,
                                           const std::vector<std::vector<PadicScalar>>& A) {
    const size_t n = A.size();
    std::vector<PadicScalar> P{PadicScalar::one(ring)};
    for (size_t r = 0; r < n; ++r) {
        // Toeplitz vector v[0..r+1]
        std::vector<PadicScalar> v(r + 2, PadicScalar::zero(ring));
        v[0] = PadicScalar::one(ring);
        v[1] = -A[r][r];
        if (r > 0) {
            std::vector<PadicScalar> w(r);  // w = M^t C iterates
            for (size_t i = 0; i < r; ++i) w[i] = A[i][r];
            for (size_t j = 2; j <= r + 1; ++j) {
                PadicScalar dot = PadicScalar::zero(ring);
                for (size_t i = 0; i < r; ++i) dot += A[r][i] * w[i];
                v[j] = -dot;
                if (j <= r) {
                    std::vector<PadicScalar> wn(r, PadicScalar::zero(ring));
                    for (size_t i = 0; i < r; ++i)
                        for (size_t l = 0; l < r; ++l) wn[i] += A[i][l] * w[l];
                    w = std::move(wn);
                }
            }
        }
        std::vector<PadicScalar> Pn(r + 2, PadicScalar::zero(ring));
        for (size_t i = 0; i < v.size(); ++i)
            for (size_t j = 0; j < P.size(); ++j)
                if (i + j < Pn.size()) Pn[i + j] += v[i] * P[j];
        P = std::move(Pn);
    }
    return P;
}

}  // namespace

CharPoly char_poly_psi_S(const ComplexCtx& C, const CohomologyH0& H, const TruncatedSeries& E) {
    const VarietySpec& V = *C.V;
    unsigned nv = C.nvars();
    CharPoly cp;
    cp.dim = unsigned(H.kept_classes.size());
    cp.n_eff_digits = H.n_eff_digits;
    for (u32 r : H.kept_classes)
        cp.class_degrees.push_back(exp_total(H.sector.monomials[r], nv));
    cp.projection_tail = kPrecInf;
    if (cp.dim == 0) {
        cp.coeffs = {PadicScalar::one(C.pc->ring)};
        return cp;
    }
    std::map<u32, u32> class_index;
    for (u32 i = 0; i < H.kept_classes.size(); ++i) class_index[H.kept_classes[i]] = i;

    std::vector<std::vector<PadicScalar>> A(
        cp.dim, std::vector<PadicScalar>(cp.dim, PadicScalar::zero(C.pc->ring)));
    for (u32 j = 0; j < cp.dim; ++j) {
        ExpKey w = H.sector.monomials[H.kept_classes[j]];
        GradedElement b;
        b.nvars = nv;
        b.terms.push_back({{w, 0}, PadicScalar::one(C.pc->ring)});
        GradedElement img = apply_psi(C, &E, b);
        SparseVec vec;
        for (const auto& [k, a] : img.terms) {
            auto it = H.sector.index.find(k.e);
            if (it == H.sector.index.end()) {
                cp.projection_tail = std::min(cp.projection_tail, a.val());
                continue;
            }
            vec.push_back({it->second, a});
        }
        vec = project_to_classes(C, H, std::move(vec));
        for (const auto& [r, a] : vec) {
            auto it = class_index.find(r);
            if (it == class_index.end()) {
                // residual on a junk row: a truncation tail, not exact data
                cp.projection_tail = std::min(cp.projection_tail, a.val());
                continue;
            }
            A[it->second][j] = a;
        }
    }
    if (cp.projection_tail < long(C.pc->M))
        throw precision_error("projection tail below one digit; raise D");
    cp.coeffs = berkowitz_det1mTA(C.pc->ring, A);
    // certified depth: tracked scalar precision, capped by dropped tails and
    // by the depth at which window torsion pins the basis rows
    long cert = std::min(cp.projection_tail, H.torsion_floor);
    for (size_t j = 1; j < cp.coeffs.size(); ++j) cert = std::min(cert, cp.coeffs[j].prec());
    cp.n_eff_digits = std::min(cp.n_eff_digits, cert);
    return cp;
}

// ---------------------------------------------------------------------------

namespace {

/// residue of an integral scalar as an integer mod p^digits, requiring the
/// non-rational coordinates to vanish at that depth
u64 scalar_integer_residue(const PrecisionContext& ctx, const PadicScalar& c, unsigned digits) {
    if (c.is_zero()) return 0;
    if (c.val() < 0) throw precision_error("expected an integral scalar");
    PadicScalar r = c;
    if (r.shift() != 0) {
        if (r.val() >= long(digits) * long(ctx.M)) return 0;
        throw precision_error("scalar has unresolved pi-shift");
    }
    const auto& R = *ctx.ring;
    u64 mod = 1;
    for (unsigned i = 0; i < digits && i < R.Ncap(); ++i) mod *= ctx.p;
    // all coordinates above the rational constant must vanish mod p^digits
    for (unsigned i = 0; i < R.ram(); ++i)
        for (unsigned j = 0; j < R.a(); ++j) {
            if (i == 0 && j == 0) continue;
            if (c.data()[i * R.a() + j] % mod)
                throw precision_error("characteristic polynomial coefficient not rational");
        }
    return c.data()[0] % mod;
}

}  // namespace

ZetaOutput recover_P_and_zeta(const CharPoly& cp, const VarietySpec& V,
                              const PrecisionContext& ctx) {
    ZetaOutput out;
    out.exponent = ((V.n - V.k - 1) % 2 == 0) ? 1 : -1;
    out.diagnostics.D = ctx.D;
    out.diagnostics.N = ctx.N;
    out.diagnostics.M = ctx.M;
    out.diagnostics.Ncap = ctx.Ncap;
    out.diagnostics.b = ctx.b.str();
    out.diagnostics.dim_h0 = cp.dim;
    out.diagnostics.class_degrees = cp.class_degrees;
    out.diagnostics.n_eff_digits = cp.n_eff_digits;

    unsigned d = cp.dim;
    unsigned neff_p = unsigned(std::max(0L, cp.n_eff_digits / long(ctx.M)));
    out.P.assign(d + 1, 0);
    out.P[0] = 1;
    for (unsigned j = 1; j <= d; ++j) {
        u64 r = scalar_integer_residue(ctx, cp.coeffs[j], neff_p);
        // undo the q^k twist: coefficient j of det is P_j q^{k j}
        unsigned tw = ctx.a * V.k * j;
        if (neff_p <= tw) throw precision_error("precision too low to undo the twist");
        u64 ptw = pow_u64_checked(ctx.p, tw, "p^{akj}");
        if (r % ptw) throw precision_error("coefficient not divisible by q^{kj}");
        u64 rr = r / ptw;
        unsigned window = neff_p - tw;
        u64 wmod = pow_u64_checked(ctx.p, window, "window");
        rr %= wmod;
        // Weil bound pins the integer inside the window
        double bound = 1.0;
        for (unsigned i = 0; i < j; ++i) bound *= double(d - i) / double(i + 1);
        bound *= std::pow(std::sqrt(double(ctx.q)), double(j * (V.n - V.k)));
        if (double(wmod) <= 2 * bound + 1)
            throw precision_error("no unique integer in the Weil window; raise N");
        i64 lifted = i64(rr);
        if (rr > wmod / 2) lifted = i64(rr) - i64(wmod);
        if (std::abs(double(lifted)) > bound + 0.5)
            throw precision_error("lifted coefficient violates the Weil bound");
        out.P[j] = lifted;
    }

    // archimedean Weil modulus check via Durand-Kerner on P
    out.diagnostics.weil_modulus_ok = true;
    if (d > 0) {
        std::vector<std::complex<double>> roots(d);
        std::vector<std::complex<double>> coef(d + 1);
        for (unsigned j = 0; j <= d; ++j) coef[j] = double(out.P[j]);
        for (unsigned i = 0; i < d; ++i)
            roots[i] = std::polar(1.0 / std::sqrt(double(ctx.q)), 0.7 + 2.1 * i);
        for (int it = 0; it < 200; ++it) {
            for (unsigned i = 0; i < d; ++i) {
                std::complex<double> num = coef[d];
                for (unsigned j = d; j-- > 0;) num = num * roots[i] + coef[j];
                std::complex<double> den = coef[d];
                for (unsigned j2 = 0; j2 < d; ++j2)
                    if (j2 != i) den *= (roots[i] - roots[j2]);
                if (std::abs(den) > 1e-14) roots[i] -= num / den;
            }
        }
        // roots of P(T) are T = 1/alpha with |alpha| = q^{(n-k)/2}
        double want = std::pow(double(ctx.q), -0.5 * double(V.n - V.k));
        for (unsigned i = 0; i < d; ++i)
            if (std::abs(std::abs(roots[i]) - want) > 1e-4 * want)
                out.diagnostics.weil_modulus_ok = false;
    }

    // display form
    std::string num = "1";
    for (unsigned j = 1; j <= d; ++j) {
        if (!out.P[j]) continue;
        num += out.P[j] > 0 ? " + " : " - ";
        i64 ab = std::abs(out.P[j]);
        if (ab != 1) num += std::to_string(ab) + "*";
        num += "T";
        if (j > 1) num += "^" + std::to_string(j);
    }
    std::string den;
    for (unsigned i = 0; i <= V.n - V.k; ++i) {
        den += "(1 - ";
        if (i == 0)
            den += "T)";
        else
            den += std::to_string(pow_u64_checked(ctx.q, i, "q^i")) + "*T)";
    }
    out.zeta = "(" + num + ")^" + (out.exponent > 0 ? std::string("1") : std::string("-1")) +
               " / (" + den + ")";
    return out;
}

unsigned default_degree_bound(const VarietySpec& V) {
    unsigned maxd = 0;
    for (unsigned d : V.degrees) maxd = std::max(maxd, d);
    return unsigned(V.field.q()) * (maxd + V.n + V.k + 2);
}

unsigned default_precision(const VarietySpec& V) { return 4 * V.field.a() * V.k + 8; }

ZetaOutput compute_zeta_once(const VarietySpec& V, unsigned N, unsigned D,
                             const ContextOptions& copt) {
    V.validate();
    auto ctx = make_context(V.field, N, copt);
    ctx.D = D;
    auto pot = build_potentials(V, ctx, D);
    ComplexCtx C{&V, &ctx, &pot, D};
    CohomologyH0 H = cohomology_H0(C);

    CharPoly cp;
    if (H.kept_classes.empty()) {
        cp.dim = 0;
        cp.n_eff_digits = H.n_eff_digits;
        cp.coeffs = {PadicScalar::one(ctx.ring)};
    } else {
        unsigned nv = V.nvars();
        unsigned hcut = 0;
        for (u32 r : H.kept_classes)
            hcut = std::max(hcut, exp_total(H.sector.monomials[r], nv));
        unsigned De = unsigned(ctx.q) * hcut + unsigned(ctx.q - 1) * nv;
        auto th = theta_coeffs(ctx, (ctx.Ncap + 2) * unsigned(ctx.p - 1));
        TruncatedSeries E = build_E_S(V, ctx, th, De);
        cp = char_poly_psi_S(C, H, E);
    }
    ZetaOutput out = recover_P_and_zeta(cp, V, ctx);
    out.diagnostics.pivot_loss = H.pivot_loss;
    out.diagnostics.columns_used = H.columns_used;
    out.diagnostics.junk_classes = unsigned(H.class_rows.size() - H.kept_classes.size());
    return out;
}

ZetaOutput compute_zeta(const VarietySpec& V, const ZetaOptions& opt) {
    unsigned N = opt.N ? opt.N : default_precision(V);
    unsigned D = opt.D ? opt.D : default_degree_bound(V);
    ZetaOutput cur = compute_zeta_once(V, N, D, opt.copt);
    unsigned esc = 0;
    for (; esc < opt.max_escalations; ++esc) {
        ZetaOutput next = compute_zeta_once(V, N + 2, D + 4, opt.copt);
        if (next.P == cur.P) {
            cur.diagnostics.stabilized = true;
            break;
        }
        cur = std::move(next);
        N += 2;
        D += 4;
    }
    cur.diagnostics.escalations = esc;
    if (opt.cross_check_counts) {
        unsigned degP = unsigned(cur.P.size() - 1);
        unsigned B = std::max(2 * degP, 2u);
        try {
            PointCounts counts;
            CountOptions copt2;
            copt2.ceiling = opt.count_ceiling;
            for (unsigned m = 1; m <= B; ++m) counts.push_back(count_points(V, m, copt2));
            auto z = zeta_from_counts(counts, V.n, V.k, V.field.q());
            cur.diagnostics.counts_checked = true;
            cur.diagnostics.counts_match = (z.P == cur.P);
        } catch (const ceiling_error&) {
            cur.diagnostics.counts_checked = false;
        }
    }
    return cur;
}

// ---------------------------------------------------------------------------

FredholmCheck fredholm_cross_check(const ComplexCtx& C, const CharPoly& cp,
                                   const TruncatedSeries& E, unsigned window) {
    FredholmCheck out;
    out.note =
        "alternating product over truncated windows; valid only if H^{-m} vanishes for m > 0 "
        "(unproved hypothesis under test)";
    unsigned d = cp.dim;
    if (d + 1 >= C.pc->p) {
        out.note += "; skipped: trace degree reaches p";
        return out;
    }
    unsigned nv = C.nvars();
    const RingPtr& ring = C.pc->ring;
    // log det(1 - T psi | window_m)^{(-1)^m} = -sum_j tr(psi^j | window_m) T^j / j
    std::vector<PadicScalar> logsum(d + 1, PadicScalar::zero(ring));
    for (unsigned m = 0; m <= nv; ++m) {
        std::vector<GKey> basis;
        enumerate_basis(*C.V, window, m, basis);
        int sign = (m & 1) ? -1 : 1;
        for (unsigned j = 1; j <= d; ++j) {
            PadicScalar tr = PadicScalar::zero(ring);
            for (const GKey& b : basis) {
                GradedElement x;
                x.nvars = nv;
                x.terms.push_back({b, PadicScalar::one(ring)});
                for (unsigned it = 0; it < j; ++it) x = apply_psi(C, &E, x);
                const PadicScalar* c = x.coeff(b);
                if (c) tr += *c;
            }
            u64 jj = j;
            unsigned vp = 0;
            while (jj % C.pc->p == 0) { jj /= C.pc->p; ++vp; }
            PadicScalar term = tr * PadicScalar(ring, jj).inverse();
            if (vp) term = term.divide_exact_p(vp);
            if (sign > 0)
                logsum[j] -= term;
            else
                logsum[j] += term;
        }
    }
    // exponentiate the truncated log and compare with the H^0 determinant
    std::vector<PadicScalar> prod(d + 1, PadicScalar::zero(ring));
    prod[0] = PadicScalar::one(ring);
    for (unsigned order = 1; order <= d; ++order) {
        // prod *= exp(logsum_order T^order) truncated
        std::vector<PadicScalar> next = prod;
        PadicScalar term = PadicScalar::one(ring);
        for (unsigned k2 = 1; k2 * order <= d; ++k2) {
            term = term * logsum[order];
            u64 kk = k2;
            unsigned vp = 0;
            while (kk % C.pc->p == 0) { kk /= C.pc->p; ++vp; }
            if (kk > 1) term = term * PadicScalar(ring, kk).inverse();
            if (vp) term = term.divide_exact_p(vp);
            for (unsigned i = 0; i + k2 * order <= d; ++i)
                if (!prod[i].is_zero()) next[i + k2 * order] += prod[i] * term;
        }
        prod = std::move(next);
    }
    long agree = kPrecInf;
    for (unsigned j = 0; j <= d; ++j) {
        PadicScalar diff = prod[j] - cp.coeffs[j];
        if (diff.val() < diff.prec()) agree = std::min(agree, diff.val());
    }
    out.agreement_digits = agree == kPrecInf ? cp.n_eff_digits : agree;
    out.agrees = out.agreement_digits >= long(C.pc->M);  // at least one full p-digit
    return out;
}

}  // namespace dwork
