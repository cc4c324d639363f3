#include "dwork/ffield.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dwork {

namespace {

// dense polynomial helpers over F_p, low degree first
using Poly = std::vector<u64>;

void poly_trim(Poly& f) {
    while (!f.empty() && f.back() == 0) f.pop_back();
}

Poly poly_mod(Poly f, const Poly& m, u64 p) {
    // m monic
    while (f.size() >= m.size()) {
        u64 lead = f.back();
        if (lead) {
            size_t off = f.size() - m.size();
            for (size_t i = 0; i < m.size(); ++i)
                f[off + i] = submod(f[off + i], mulmod(lead, m[i], p), p);
        }
        f.pop_back();
        poly_trim(f);
        if (f.size() < m.size()) break;
    }
    poly_trim(f);
    return f;
}

Poly poly_mulmod(const Poly& a, const Poly& b, const Poly& m, u64 p) {
    if (a.empty() || b.empty()) return {};
    Poly r(a.size() + b.size() - 1, 0);
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j)
            r[i + j] = addmod(r[i + j], mulmod(a[i], b[j], p), p);
    return poly_mod(std::move(r), m, p);
}

}  // namespace

bool FiniteField::poly_irreducible(u64 p, const std::vector<u64>& monic) {
    if (monic.size() < 2 || monic.back() != 1) return false;
    unsigned d = unsigned(monic.size() - 1);
    if (d == 1) return true;
    // trial division by every monic polynomial of degree 1..d/2
    for (unsigned e = 1; 2 * e <= d; ++e) {
        u64 total = 1;
        for (unsigned i = 0; i < e; ++i) total *= p;
        for (u64 idx = 0; idx < total; ++idx) {
            Poly g(e + 1, 0);
            u64 t = idx;
            for (unsigned i = 0; i < e; ++i) { g[i] = t % p; t /= p; }
            g[e] = 1;
            // remainder of monic mod g
            Poly r = poly_mod(Poly(monic), g, p);
            if (r.empty()) return false;
        }
    }
    return true;
}

FiniteField::FiniteField(u64 p, unsigned deg) : p_(p), deg_(deg) {
    if (!is_prime_u64(p)) throw validation_error("p = " + std::to_string(p) + " is not prime");
    if (deg == 0) throw validation_error("extension degree must be positive");
    q_ = pow_u64_checked(p, deg, "field size");
    if (deg == 1) {
        modulus_ = {0, 1};  // x - 0 convention for the prime field
    } else {
        // lexicographically least monic irreducible (constant term varies fastest)
        u64 total = 1;
        for (unsigned i = 0; i < deg; ++i) total *= p;
        bool found = false;
        for (u64 idx = 0; idx < total && !found; ++idx) {
            Poly m(deg + 1, 0);
            u64 t = idx;
            for (unsigned i = 0; i < deg; ++i) { m[i] = t % p; t /= p; }
            m[deg] = 1;
            if (poly_irreducible(p, m)) {
                modulus_ = m;
                found = true;
            }
        }
        if (!found) throw validation_error("no irreducible modulus found");
    }
    build_tables();
}

FiniteField::FiniteField(u64 p, unsigned deg, std::vector<u64> modulus_low)
    : p_(p), deg_(deg) {
    if (!is_prime_u64(p)) throw validation_error("p = " + std::to_string(p) + " is not prime");
    if (modulus_low.size() != deg)
        throw validation_error("modulus must list exactly deg low coefficients");
    q_ = pow_u64_checked(p, deg, "field size");
    modulus_ = modulus_low;
    for (u64& c : modulus_) c %= p;
    modulus_.push_back(1);
    if (deg > 1 && !poly_irreducible(p, modulus_))
        throw validation_error("supplied modulus is reducible over F_p");
    build_tables();
}

void FiniteField::build_tables() {
    qm1_ = q_ - 1;
    if (q_ > (u64(1) << 24))
        throw validation_error("field too large to tabulate (q > 2^24)");
    log_.assign(q_, 0);
    alog_.assign(qm1_, 0);

    auto mul_slow = [&](u64 x, u64 y) {
        Poly a = [&] {
            Poly v;
            for (unsigned i = 0; i < deg_; ++i) { v.push_back(x % p_); x /= p_; }
            poly_trim(v);
            return v;
        }();
        Poly b;
        {
            u64 t = y;
            for (unsigned i = 0; i < deg_; ++i) { b.push_back(t % p_); t /= p_; }
            poly_trim(b);
        }
        Poly r = poly_mulmod(a, b, modulus_, p_);
        u64 out = 0;
        for (size_t i = r.size(); i-- > 0;) out = out * p_ + r[i];
        return out;
    };

    // factor q-1 for order testing
    std::vector<u64> prime_factors;
    {
        u64 n = qm1_;
        for (u64 d = 2; d * d <= n; ++d)
            if (n % d == 0) {
                prime_factors.push_back(d);
                while (n % d == 0) n /= d;
            }
        if (n > 1) prime_factors.push_back(n);
    }
    auto pow_slow = [&](u64 x, u64 e) {
        u64 r = 1;
        while (e) {
            if (e & 1) r = mul_slow(r, x);
            x = mul_slow(x, x);
            e >>= 1;
        }
        return r;
    };
    gen_ = 0;
    for (u64 c = 1; c < q_; ++c) {
        bool ok = true;
        for (u64 f : prime_factors)
            if (pow_slow(c, qm1_ / f) == 1) { ok = false; break; }
        if (ok) { gen_ = c; break; }
    }
    if (gen_ == 0) throw validation_error("no multiplicative generator found");

    u64 v = 1;
    for (u64 k = 0; k < qm1_; ++k) {
        alog_[k] = u32(v);
        log_[v] = u32(k);
        v = mul_slow(v, gen_);
    }
    if (v != 1) throw validation_error("generator order mismatch");
}

u64 FiniteField::add(u64 x, u64 y) const {
    u64 r = 0, mul = 1;
    for (unsigned i = 0; i < deg_; ++i) {
        u64 s = (x % p_ + y % p_) % p_;
        r += s * mul;
        mul *= p_;
        x /= p_;
        y /= p_;
    }
    return r;
}

u64 FiniteField::neg(u64 x) const {
    u64 r = 0, mul = 1;
    for (unsigned i = 0; i < deg_; ++i) {
        u64 c = x % p_;
        r += (c ? p_ - c : 0) * mul;
        mul *= p_;
        x /= p_;
    }
    return r;
}

u64 FiniteField::sub(u64 x, u64 y) const { return add(x, neg(y)); }

u64 FiniteField::pow(u64 x, u64 e) const {
    if (x == 0) return e == 0 ? 1 : 0;
    u64 k = mulmod(log_[x], e % qm1_, qm1_);
    return alog_[k];
}

u64 FiniteField::from_coeffs(const std::vector<u64>& c) const {
    if (c.size() > deg_) throw validation_error("coefficient vector longer than degree");
    u64 r = 0;
    for (size_t i = c.size(); i-- > 0;) r = r * p_ + (c[i] % p_);
    return r;
}

std::vector<u64> FiniteField::to_coeffs(u64 x) const {
    std::vector<u64> c(deg_);
    for (unsigned i = 0; i < deg_; ++i) { c[i] = x % p_; x /= p_; }
    return c;
}

u64 FiniteField::trace_to_prime(u64 x) const {
    u64 acc = 0, y = x;
    for (unsigned i = 0; i < deg_; ++i) {
        acc = add(acc, y);
        y = frobenius(y);
    }
    // the trace lies in F_p: all digits above the constant must vanish
    if (acc / p_ != 0) throw validation_error("trace not in prime field");
    return acc % p_;
}

u64 FiniteField::trace_to_subfield(u64 x, unsigned sub_deg) const {
    if (deg_ % sub_deg) throw validation_error("trace target is not a subfield");
    unsigned steps = deg_ / sub_deg;
    u64 acc = 0, y = x;
    u64 qs = pow_u64_checked(p_, sub_deg, "subfield size");
    for (unsigned i = 0; i < steps; ++i) {
        acc = add(acc, y);
        y = pow(y, qs);
    }
    return acc;
}

std::vector<u64> build_embedding(const FiniteField& small, const FiniteField& big) {
    if (small.p() != big.p() || big.deg() % small.deg())
        throw validation_error("no embedding: incompatible fields");
    // least root of small's modulus among elements fixed by Frobenius^a
    const auto& m = small.modulus();
    u64 root = 0;
    bool found = false;
    for (u64 x = 0; x < big.q(); ++x) {
        if (big.pow(x, small.q()) != x) continue;  // not in the F_q-subfield
        u64 acc = 0, xp = 1;
        for (size_t i = 0; i < m.size(); ++i) {
            acc = big.add(acc, big.mul(big.from_integer(m[i]), xp));
            xp = big.mul(xp, x);
        }
        if (acc == 0) { root = x; found = true; break; }
    }
    if (!found) throw validation_error("modulus has no root in extension");
    std::vector<u64> table(small.q());
    for (u64 x = 0; x < small.q(); ++x) {
        auto c = small.to_coeffs(x);
        u64 acc = 0, rp = 1;
        for (unsigned i = 0; i < small.deg(); ++i) {
            acc = big.add(acc, big.mul(big.from_integer(c[i]), rp));
            rp = big.mul(rp, root);
        }
        table[x] = acc;
    }
    return table;
}

FieldCtx make_field(u64 p, unsigned a, const std::optional<std::vector<u64>>& modulus_low) {
    FieldCtx ctx;
    if (modulus_low)
        ctx.F = std::make_shared<FiniteField>(p, a, *modulus_low);
    else
        ctx.F = std::make_shared<FiniteField>(p, a);
    return ctx;
}

void VarietySpec::validate() const {
    if (!field.F) throw validation_error("variety has no field");
    if (k > 0 && n < k) throw validation_error("need n >= k >= 1");
    if (degrees.size() != k || polys.size() != k)
        throw validation_error("need one degree and one polynomial per G_i");
    if (nvars() > kMaxVars) throw validation_error("n + k + 1 exceeds supported variables");
    for (unsigned i = 0; i < k; ++i) {
        if (polys[i].empty()) throw validation_error("G_" + std::to_string(i + 1) + " is zero");
        for (const auto& t : polys[i]) {
            if (t.e.size() != n + 1)
                throw validation_error("exponent vector must have n+1 entries");
            if (t.c == 0 || t.c >= field.q())
                throw validation_error("coefficient out of field range or zero term");
            unsigned d = std::accumulate(t.e.begin(), t.e.end(), 0u);
            if (d != degrees[i])
                throw validation_error("G_" + std::to_string(i + 1) + " not homogeneous of stated degree");
        }
    }
}

long VarietySpec::charge(ExpKey e) const {
    long c = 0;
    for (unsigned i = 0; i < k; ++i) c -= long(degrees[i]) * exp_get(e, i);
    for (unsigned j = k; j < nvars(); ++j) c += exp_get(e, j);
    return c;
}

long VarietySpec::weight(ExpKey e) const {
    long w = 0;
    for (unsigned i = 0; i < k; ++i) w += exp_get(e, i);
    return w;
}

long VarietySpec::c_X() const {
    long s = 0;
    for (unsigned d : degrees) s += d;
    return s - long(n + 1);
}

namespace {

struct EvalPlan {
    const FiniteField* E;
    // per poly, per term: embedded coefficient and exponents
    std::vector<std::vector<std::pair<u64, std::vector<u32>>>> polys;

    bool vanishes(const std::vector<u64>& x) const {
        for (const auto& terms : polys) {
            u64 acc = 0;
            for (const auto& [c, e] : terms) {
                u64 t = c;
                for (size_t j = 0; j < e.size() && t; ++j)
                    if (e[j]) t = x[j] == 0 ? 0 : E->mul(t, E->pow(x[j], e[j]));
                acc = E->add(acc, t);
            }
            if (acc != 0) return false;
        }
        return true;
    }
};

EvalPlan make_plan(const VarietySpec& V, const FiniteField& E, const std::vector<u64>& embed) {
    EvalPlan plan;
    plan.E = &E;
    for (const auto& poly : V.polys) {
        std::vector<std::pair<u64, std::vector<u32>>> terms;
        for (const auto& t : poly) terms.emplace_back(embed[t.c], t.e);
        plan.polys.push_back(std::move(terms));
    }
    return plan;
}

}  // namespace

PointCount count_points(const VarietySpec& V, unsigned m, const CountOptions& opt) {
    V.validate();
    const FiniteField& F = *V.field.F;
    u64 qm = pow_u64_checked(F.q(), m, "q^m");

    // total normalized projective representatives: sum_i qm^(n-i)
    u64 total = 0;
    {
        u64 t = 1;
        for (unsigned i = 0; i <= V.n; ++i) { total += t; t = t * qm; }
    }
    if (total > opt.ceiling)
        throw ceiling_error("enumeration ceiling exceeded: " + std::to_string(total) +
                            " projective points > " + std::to_string(opt.ceiling));

    FiniteField Em(F.p(), F.deg() * m);
    std::vector<u64> embed = build_embedding(F, Em);
    EvalPlan plan = make_plan(V, Em, embed);

    u64 projective = 0;
    // stratum lead: coordinates before `lead` are 0, coordinate `lead` is 1
    for (unsigned lead = 0; lead <= V.n; ++lead) {
        unsigned free_vars = V.n - lead;
        u64 count_here = 1;
        for (unsigned i = 0; i < free_vars; ++i) count_here *= qm;
        u64 stratum_total = 0;

        if (V.k == 0) {
            stratum_total = count_here;
        } else {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : stratum_total) if (opt.parallel && count_here > 4096)
#endif
            for (i64 idx = 0; idx < i64(count_here); ++idx) {
                std::vector<u64> x(V.n + 1, 0);
                x[lead] = 1;
                u64 t = u64(idx);
                for (unsigned i = 0; i < free_vars; ++i) { x[lead + 1 + i] = t % qm; t /= qm; }
                if (plan.vanishes(x)) stratum_total += 1;
            }
        }
        projective += stratum_total;
    }

    PointCount pc;
    pc.m = m;
    pc.projective = projective;
    pc.affine = 1 + (qm - 1) * projective;  // homogeneity: fibers of the cone
    return pc;
}

u64 count_points_affine_serial(const VarietySpec& V, unsigned m, u64 ceiling) {
    V.validate();
    const FiniteField& F = *V.field.F;
    u64 qm = pow_u64_checked(F.q(), m, "q^m");
    u64 total = 1;
    for (unsigned i = 0; i <= V.n; ++i) {
        if (total > ceiling / qm + 1) throw ceiling_error("enumeration ceiling exceeded");
        total *= qm;
    }
    if (total > ceiling) throw ceiling_error("enumeration ceiling exceeded");

    FiniteField Em(F.p(), F.deg() * m);
    std::vector<u64> embed = build_embedding(F, Em);
    EvalPlan plan = make_plan(V, Em, embed);

    u64 count = 0;
    std::vector<u64> x(V.n + 1, 0);
    for (u64 idx = 0; idx < total; ++idx) {
        u64 t = idx;
        for (unsigned i = 0; i <= V.n; ++i) { x[i] = t % qm; t /= qm; }
        if (V.k == 0 || plan.vanishes(x)) ++count;
    }
    return count;
}

std::vector<i64> count_power_sums(const PointCounts& counts, unsigned n, unsigned k, u64 q) {
    // s_m = -eps (|X_m| - sum_{i=0}^{n-k} q^{im}), eps = (-1)^{n-k-1}
    int eps = ((n - k - 1) % 2 == 0) ? 1 : -1;
    std::vector<i64> s;
    for (const auto& pc : counts) {
        i64 geo = 0;
        i64 qi = 1;
        i64 qm = i64(pow_u64_checked(q, pc.m, "q^m"));
        for (unsigned i = 0; i <= n - k; ++i) {
            geo += qi;
            qi *= qm;
        }
        s.push_back(-eps * (i64(pc.projective) - geo));
    }
    return s;
}

ZetaFromCounts zeta_from_counts(const PointCounts& counts, unsigned n, unsigned k, u64 q) {
    if (counts.empty()) throw validation_error("no counts supplied");
    for (size_t i = 0; i < counts.size(); ++i) {
        if (counts[i].m != i + 1) throw validation_error("counts must cover m = 1..B contiguously");
        u64 qm = pow_u64_checked(q, counts[i].m, "q^m");
        if (counts[i].affine != 1 + (qm - 1) * counts[i].projective)
            throw validation_error("affine/projective counts inconsistent");
    }
    unsigned B = unsigned(counts.size());
    std::vector<i64> s = count_power_sums(counts, n, k, q);

    auto predict = [&](const std::vector<i64>& c, unsigned m) {
        // power sums of reciprocal roots of P(T) = 1 + c_1 T + ... via Newton:
        // s_m = -m c_m - sum_{i=1}^{m-1} c_i s_{m-i}
        std::vector<i64> ps(m + 1, 0);
        unsigned d = unsigned(c.size() - 1);
        for (unsigned j = 1; j <= m; ++j) {
            i64 acc = j <= d ? -i64(j) * c[j] : 0;
            for (unsigned i = 1; i < j; ++i)
                if (i <= d) acc -= c[i] * ps[j - i];
            ps[j] = acc;
        }
        return ps;
    };

    for (unsigned d = 0; 2 * d <= B; ++d) {
        // Newton's identities: m e_m = sum (-1)^{i-1} e_{m-i} s_i, coefficients
        // c_m = (-1)^m e_m so that P = prod (1 - alpha T) = 1 + c_1 T + ...
        std::vector<i64> c(d + 1, 0);
        c[0] = 1;
        bool ok = true;
        for (unsigned mdeg = 1; mdeg <= d && ok; ++mdeg) {
            i64 acc = 0;
            for (unsigned i = 1; i <= mdeg; ++i) acc += c[mdeg - i] * s[i - 1];
            if (acc % i64(mdeg)) { ok = false; break; }
            c[mdeg] = -acc / i64(mdeg);
        }
        if (!ok) continue;
        // must reproduce every supplied count
        std::vector<i64> ps = predict(c, B);
        for (unsigned m2 = 1; m2 <= B && ok; ++m2)
            if (ps[m2] != s[m2 - 1]) ok = false;
        if (!ok) continue;
        // Weil bound sanity on coefficients
        for (unsigned j = 1; j <= d && ok; ++j) {
            double bound = 1.0;
            for (unsigned i = 0; i < j; ++i) bound *= double(d - i) / double(i + 1);
            double w = bound;
            for (unsigned i = 0; i < j; ++i) w *= std::sqrt(double(q)) * std::pow(double(q), 0.5 * double(n - k - 1));
            if (std::abs(double(c[j])) > w + 0.5) ok = false;
        }
        if (!ok) continue;

        ZetaFromCounts out;
        out.P = c;
        out.exponent = ((n - k - 1) % 2 == 0) ? 1 : -1;
        // functional pairing: c_{d-j} = c_j q^{(n-k)(d/2 - j)} up to the sign of the
        // pairing; check |c_d| against q^{d(n-k)/2}
        out.functional_ok = true;
        if (d > 0) {
            i64 lead = c[d];
            i64 expect = 1;
            for (unsigned i = 0; i < d * (n - k); ++i) expect *= i64(q);
            // |c_d|^2 == q^{d(n-k)} when roots pair under alpha -> q^{n-k}/alpha
            out.functional_ok = (lead * lead == expect);
        }
        std::string num = "1";
        for (unsigned j = 1; j <= d; ++j) {
            if (c[j] == 0) continue;
            num += (c[j] > 0 ? " + " : " - ");
            i64 ab = c[j] > 0 ? c[j] : -c[j];
            if (ab != 1) num += std::to_string(ab) + "*";
            num += "T";
            if (j > 1) num += "^" + std::to_string(j);
        }
        std::string den = "";
        for (unsigned i = 0; i <= n - k; ++i) {
            den += "(1";
            if (i == 0)
                den += " - T)";
            else {
                u64 qi = pow_u64_checked(q, i, "q^i");
                den += " - " + std::to_string(qi) + "*T)";
            }
        }
        out.zeta = "(" + num + ")^" + (out.exponent > 0 ? std::string("1") : std::string("-1")) +
                   " / (" + den + ")";
        return out;
    }
    throw validation_error(
        "counts inconsistent with any integer polynomial of degree <= B/2 "
        "(non-smooth input or bad counts?)");
}

bool smoothness_probe(const VarietySpec& V, unsigned trials, u64 seed) {
    V.validate();
    if (V.k == 0) return true;
    const FiniteField& F = *V.field.F;
    // formal partials of each G_i in the x variables
    std::vector<std::vector<FqPoly>> partials(V.k);
    for (unsigned i = 0; i < V.k; ++i) {
        partials[i].resize(V.n + 1);
        for (const auto& t : V.polys[i])
            for (unsigned j = 0; j <= V.n; ++j)
                if (t.e[j]) {
                    PolyTerm dt;
                    dt.c = F.mul(t.c, F.from_integer(t.e[j]));
                    if (dt.c == 0) continue;
                    dt.e = t.e;
                    dt.e[j] -= 1;
                    partials[i][j].push_back(dt);
                }
    }
    auto eval = [&](const FqPoly& poly, const std::vector<u64>& x) {
        u64 acc = 0;
        for (const auto& t : poly) {
            u64 v = t.c;
            for (unsigned j = 0; j <= V.n && v; ++j)
                if (t.e[j]) v = x[j] == 0 ? 0 : F.mul(v, F.pow(x[j], t.e[j]));
            acc = F.add(acc, v);
        }
        return acc;
    };

    u64 state = seed ? seed : 1;
    auto rnd = [&]() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        return state;
    };

    unsigned found = 0;
    for (unsigned t = 0; t < trials * 50 && found < trials; ++t) {
        std::vector<u64> x(V.n + 1);
        for (auto& xi : x) xi = rnd() % F.q();
        bool on = true;
        for (unsigned i = 0; i < V.k && on; ++i)
            if (eval(V.polys[i], x) != 0) on = false;
        if (!on) continue;
        bool zero_pt = std::all_of(x.begin(), x.end(), [](u64 v) { return v == 0; });
        if (zero_pt) continue;
        ++found;
        // Jacobian rows at x must have rank k (Gauss over F_q)
        std::vector<std::vector<u64>> Jm(V.k, std::vector<u64>(V.n + 1));
        for (unsigned i = 0; i < V.k; ++i)
            for (unsigned j = 0; j <= V.n; ++j) Jm[i][j] = eval(partials[i][j], x);
        unsigned rank = 0;
        for (unsigned col = 0; col <= V.n && rank < V.k; ++col) {
            unsigned piv = rank;
            while (piv < V.k && Jm[piv][col] == 0) ++piv;
            if (piv == V.k) continue;
            std::swap(Jm[piv], Jm[rank]);
            u64 inv = F.inv(Jm[rank][col]);
            for (unsigned r = rank + 1; r < V.k; ++r) {
                if (Jm[r][col] == 0) continue;
                u64 f = F.mul(Jm[r][col], inv);
                for (unsigned cc = col; cc <= V.n; ++cc)
                    Jm[r][cc] = F.sub(Jm[r][cc], F.mul(f, Jm[rank][cc]));
            }
            ++rank;
        }
        if (rank < V.k) return false;
    }
    return true;
}

}  // namespace dwork
