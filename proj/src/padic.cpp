#include "dwork/padic.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

namespace dwork {

PadicRing::PadicRing(u64 p, unsigned a, std::vector<u64> zq_modulus_low, unsigned ram,
                     unsigned pi_scale, unsigned Ncap)
    : p_(p), a_(a), ram_(ram), pi_scale_(pi_scale), Ncap_(Ncap) {
    if (!is_prime_u64(p)) throw validation_error("ring characteristic not prime");
    if (a == 0 || ram == 0 || pi_scale == 0 || Ncap == 0)
        throw validation_error("bad ring parameters");
    // p^Ncap must fit so that products reduce inside u128
    u64 m = 1;
    for (unsigned i = 0; i < Ncap; ++i) {
        if (m > (u64(1) << 62) / p)
            throw validation_error("p^Ncap exceeds 2^62; lower the precision target");
        m *= p;
    }
    pmod_ = m;
    p_pows_.resize(Ncap + 1);
    p_pows_[0] = 1;
    for (unsigned i = 1; i <= Ncap; ++i) p_pows_[i] = p_pows_[i - 1] * p;
    if (zq_modulus_low.size() != a)
        throw validation_error("Z_q modulus must have a low coefficients");
    zq_mod_ = std::move(zq_modulus_low);
    for (u64& c : zq_mod_) c %= pmod_;
    zq_mod_.push_back(1);
}

void PadicRing::zq_mul(const u64* x, const u64* y, u64* out) const {
    if (a_ == 1) {
        out[0] = addmod(out[0], mulmod(x[0], y[0], pmod_), pmod_);
        return;
    }
    // schoolbook, then reduce by the monic modulus
    u64 tmp[2 * kMaxVars] = {0};
    for (unsigned i = 0; i < a_; ++i) {
        if (!x[i]) continue;
        for (unsigned j = 0; j < a_; ++j)
            tmp[i + j] = addmod(tmp[i + j], mulmod(x[i], y[j], pmod_), pmod_);
    }
    for (unsigned d = 2 * a_ - 2; d >= a_; --d) {
        u64 lead = tmp[d];
        if (lead) {
            tmp[d] = 0;
            for (unsigned i = 0; i < a_; ++i)
                tmp[d - a_ + i] = submod(tmp[d - a_ + i], mulmod(lead, zq_mod_[i], pmod_), pmod_);
        }
        if (d == a_) break;
    }
    for (unsigned i = 0; i < a_; ++i) out[i] = addmod(out[i], tmp[i], pmod_);
}

void PadicRing::raw_add(const u64* x, const u64* y, u64* out) const {
    for (unsigned i = 0; i < dim(); ++i) out[i] = addmod(x[i], y[i], pmod_);
}

void PadicRing::raw_sub(const u64* x, const u64* y, u64* out) const {
    for (unsigned i = 0; i < dim(); ++i) out[i] = submod(x[i], y[i], pmod_);
}

void PadicRing::raw_neg(const u64* x, u64* out) const {
    for (unsigned i = 0; i < dim(); ++i) out[i] = x[i] ? pmod_ - x[i] : 0;
}

void PadicRing::raw_fma(const u64* x, const u64* y, u64* out) const {
    // pi-convolution with wraparound pi^ram = -p
    for (unsigned i = 0; i < ram_; ++i) {
        bool xz = true;
        for (unsigned j = 0; j < a_; ++j)
            if (x[i * a_ + j]) { xz = false; break; }
        if (xz) continue;
        for (unsigned j = 0; j < ram_; ++j) {
            unsigned d = i + j;
            if (d < ram_) {
                zq_mul(x + i * a_, y + j * a_, out + d * a_);
            } else {
                // pi^d = -p * pi^(d-ram)
                u64 prod[kMaxVars] = {0};
                zq_mul(x + i * a_, y + j * a_, prod);
                unsigned t = d - ram_;
                for (unsigned c = 0; c < a_; ++c) {
                    u64 v = mulmod(prod[c], p_ % pmod_, pmod_);
                    out[t * a_ + c] = submod(out[t * a_ + c], v, pmod_);
                }
            }
        }
    }
}

void PadicRing::raw_mul(const u64* x, const u64* y, u64* out) const {
    for (unsigned i = 0; i < dim(); ++i) out[i] = 0;
    raw_fma(x, y, out);
}

void PadicRing::raw_smul(const u64* x, u64 c, u64* out) const {
    c %= pmod_;
    for (unsigned i = 0; i < dim(); ++i) out[i] = mulmod(x[i], c, pmod_);
}

void PadicRing::raw_shift_up(u64* x) const {
    // multiply by pi_r: digit i -> i+1, top wraps to -p * digit
    std::vector<u64> top(x + (ram_ - 1) * a_, x + ram_ * a_);
    for (unsigned i = ram_ - 1; i > 0; --i)
        for (unsigned j = 0; j < a_; ++j) x[i * a_ + j] = x[(i - 1) * a_ + j];
    for (unsigned j = 0; j < a_; ++j) {
        u64 v = mulmod(top[j], p_ % pmod_, pmod_);
        x[j] = v ? pmod_ - v : 0;
    }
}

bool PadicRing::raw_shift_down(u64* x) const {
    // divide by pi_r: digit 0 must be divisible by p and becomes -digit0/p at top
    u64 bottom[kMaxVars];
    for (unsigned j = 0; j < a_; ++j) {
        if (x[j] % p_) return false;
        bottom[j] = x[j] / p_;
    }
    for (unsigned i = 0; i + 1 < ram_; ++i)
        for (unsigned j = 0; j < a_; ++j) x[i * a_ + j] = x[(i + 1) * a_ + j];
    for (unsigned j = 0; j < a_; ++j)
        x[(ram_ - 1) * a_ + j] = bottom[j] ? pmod_ - bottom[j] : 0;
    return true;
}

// ---------------------------------------------------------------------------

PadicScalar::PadicScalar(RingPtr ring, u64 integer) : ring_(std::move(ring)) {
    d_.assign(ring_->dim(), 0);
    d_[0] = integer % ring_->pmod();
    prec_ = long(ring_->Ncap()) * ring_->M();
    shift_ = 0;
}

PadicScalar PadicScalar::zero(RingPtr ring) { return PadicScalar(std::move(ring), 0); }

void PadicScalar::canonicalize() {
    const auto& R = *ring_;
    bool z = std::all_of(d_.begin(), d_.end(), [](u64 v) { return v == 0; });
    if (z) {
        shift_ = 0;
        return;
    }
    // fold positive shifts into the digits
    while (shift_ > 0) {
        R.raw_shift_up(d_.data());
        --shift_;
    }
    // Strip pi_r factors from negative shifts. A strip whose bottom digit is
    // exactly zero is free; one that divides residues by p leaves the top
    // p-digit of that slot undetermined, so the tracked precision is capped.
    unsigned divisions = 0;
    while (shift_ < 0) {
        bool bottom_zero = true;
        for (unsigned j = 0; j < R.a(); ++j)
            if (d_[j]) { bottom_zero = false; break; }
        if (bottom_zero) {
            for (unsigned i = 0; i + 1 < R.ram(); ++i)
                for (unsigned j = 0; j < R.a(); ++j)
                    d_[i * R.a() + j] = d_[(i + 1) * R.a() + j];
            for (unsigned j = 0; j < R.a(); ++j) d_[(R.ram() - 1) * R.a() + j] = 0;
            ++shift_;
            continue;
        }
        std::vector<u64> t = d_;
        if (!R.raw_shift_down(t.data())) break;
        d_ = std::move(t);
        ++divisions;
        ++shift_;
    }
    if (divisions) {
        long slots = (long(divisions) + R.ram() - 1) / R.ram();  // divisions per slot
        long ceiling = long(R.M()) * (long(R.Ncap()) - slots) +
                       long(R.pi_scale()) * std::min(long(shift_), 0L);
        prec_ = std::min(prec_, ceiling);
    }
}

long PadicScalar::val() const {
    if (!ring_) return kPrecInf;
    const auto& R = *ring_;
    long best = kPrecInf;
    for (unsigned i = 0; i < R.ram(); ++i)
        for (unsigned j = 0; j < R.a(); ++j) {
            u64 v = d_[i * R.a() + j];
            if (!v) continue;
            unsigned vp = 0;
            while (v % R.p() == 0) { v /= R.p(); ++vp; }
            long digits = long(R.pi_scale()) * (long(i) + shift_) + long(R.M()) * vp;
            best = std::min(best, digits);
        }
    return std::min(best, prec_);
}

bool PadicScalar::is_zero() const {
    return std::all_of(d_.begin(), d_.end(), [](u64 v) { return v == 0; });
}

PadicScalar PadicScalar::operator+(const PadicScalar& o) const {
    PadicScalar r = *this;
    r += o;
    return r;
}

PadicScalar& PadicScalar::operator+=(const PadicScalar& o) {
    if (!ring_) return *this = o;
    if (!o.ring_) return *this;
    if (ring_ != o.ring_) throw validation_error("scalar ring mismatch");
    const auto& R = *ring_;
    PadicScalar rhs = o;
    // align to the smaller shift
    while (shift_ > rhs.shift_) { R.raw_shift_up(d_.data()); --shift_; }
    while (rhs.shift_ > shift_) { R.raw_shift_up(rhs.d_.data()); --rhs.shift_; }
    R.raw_add(d_.data(), rhs.d_.data(), d_.data());
    prec_ = std::min(prec_, rhs.prec_);
    canonicalize();
    return *this;
}

PadicScalar& PadicScalar::operator-=(const PadicScalar& o) { return *this += -o; }

PadicScalar PadicScalar::operator-(const PadicScalar& o) const { return *this + (-o); }

PadicScalar PadicScalar::operator-() const {
    PadicScalar r = *this;
    if (r.ring_) r.ring_->raw_neg(r.d_.data(), r.d_.data());
    return r;
}

PadicScalar PadicScalar::operator*(const PadicScalar& o) const {
    if (!ring_ || !o.ring_) throw validation_error("multiplying detached scalar");
    if (ring_ != o.ring_) throw validation_error("scalar ring mismatch");
    const auto& R = *ring_;
    PadicScalar r;
    r.ring_ = ring_;
    r.d_.assign(R.dim(), 0);
    R.raw_fma(d_.data(), o.d_.data(), r.d_.data());
    r.shift_ = shift_ + o.shift_;
    // sound lower bounds on the operands' valuations from their shifts
    long va = long(R.pi_scale()) * shift_;
    long vb = long(R.pi_scale()) * o.shift_;
    r.prec_ = std::min(prec_ + std::min(vb, 0L), o.prec_ + std::min(va, 0L));
    r.prec_ = std::min(r.prec_, long(R.Ncap()) * R.M() + long(R.pi_scale()) * std::min(r.shift_, 0));
    r.canonicalize();
    return r;
}

PadicScalar PadicScalar::mul_small(u64 c) const {
    PadicScalar r = *this;
    if (r.ring_) {
        r.ring_->raw_smul(r.d_.data(), c, r.d_.data());
        r.canonicalize();
    }
    return r;
}

PadicScalar PadicScalar::mul_pi(long digits) const {
    const auto& R = *ring_;
    if (digits % long(R.pi_scale()))
        throw validation_error("pi-power not representable in this ring (need full ring)");
    PadicScalar r = *this;
    r.shift_ += int(digits / long(R.pi_scale()));
    r.prec_ += digits;
    r.prec_ = std::min(r.prec_, long(R.Ncap()) * R.M() + long(R.pi_scale()) * std::min(long(r.shift_), 0L));
    r.canonicalize();
    return r;
}

PadicScalar PadicScalar::divide_exact_p(unsigned j) const {
    // 1/p = -pi_r^{-ram}
    PadicScalar r = *this;
    const auto& R = *ring_;
    for (unsigned t = 0; t < j; ++t) {
        R.raw_neg(r.d_.data(), r.d_.data());
        r.shift_ -= int(R.ram());
    }
    r.prec_ -= long(j) * R.M();
    r.canonicalize();
    return r;
}

PadicScalar PadicScalar::pow(u64 e) const {
    PadicScalar r = PadicScalar::one(ring_);
    PadicScalar base = *this;
    while (e) {
        if (e & 1) r = r * base;
        base = base * base;
        e >>= 1;
    }
    return r;
}

PadicScalar PadicScalar::pow_p(unsigned e) const {
    PadicScalar r = *this;
    for (unsigned i = 0; i < e; ++i) r = r.pow(ring_->p());
    return r;
}

PadicScalar PadicScalar::inverse() const {
    if (!ring_) throw validation_error("inverse of detached scalar");
    const auto& R = *ring_;
    long v = val();
    if (v >= prec_) throw validation_error("inverse of (numerically) zero scalar");
    // peel off pi^v; canonicalization strips the unit down to shift zero
    PadicScalar u = mul_pi(-v);
    if (u.shift_ != 0 || u.val() != 0)
        throw validation_error("unit extraction failed in inverse");
    // initial inverse modulo pi: invert the F_q residue by brute force
    std::vector<u64> res(R.a());
    for (unsigned j = 0; j < R.a(); ++j) res[j] = u.d_[j] % R.p();
    PadicScalar binv = PadicScalar::zero(ring_);
    {
        bool found = false;
        u64 total = 1;
        for (unsigned j = 0; j < R.a(); ++j) total *= R.p();
        for (u64 cand = 1; cand < total && !found; ++cand) {
            u64 t = cand;
            std::vector<u64> cd(R.a());
            for (unsigned j = 0; j < R.a(); ++j) { cd[j] = t % R.p(); t /= R.p(); }
            // multiply residues mod (zq_mod, p)
            u64 acc[2 * kMaxVars] = {0};
            for (unsigned i = 0; i < R.a(); ++i)
                for (unsigned j = 0; j < R.a(); ++j)
                    acc[i + j] = (acc[i + j] + res[i] * cd[j]) % R.p();
            for (unsigned dgr = 2 * R.a() - 2; R.a() > 1 && dgr >= R.a(); --dgr) {
                u64 lead = acc[dgr] % R.p();
                if (lead) {
                    acc[dgr] = 0;
                    for (unsigned i = 0; i < R.a(); ++i) {
                        u64 sub = (lead * (R.zq_modulus()[i] % R.p())) % R.p();
                        acc[dgr - R.a() + i] = (acc[dgr - R.a() + i] + R.p() - sub) % R.p();
                    }
                }
                if (dgr == R.a()) break;
            }
            bool ok = acc[0] % R.p() == 1;
            for (unsigned j = 1; j < R.a() && ok; ++j) ok = acc[j] % R.p() == 0;
            if (ok) {
                for (unsigned j = 0; j < R.a(); ++j) binv.d_[j] = cd[j];
                found = true;
            }
        }
        if (!found) throw validation_error("inverse of non-unit residue");
    }
    // Newton: b <- b(2 - ub)
    PadicScalar two(ring_, 2);
    unsigned iters = 1;
    while ((1u << iters) < R.Ncap() * R.ram() + 2) ++iters;
    for (unsigned i = 0; i <= iters; ++i) binv = binv * (two - u * binv);
    PadicScalar r = binv.mul_pi(-v);
    r.prec_ = std::min(prec_ - 2 * v, u.prec_ - v);
    return r;
}

PadicScalar PadicScalar::as_exact() const {
    PadicScalar r = *this;
    r.prec_ = long(ring_->Ncap()) * ring_->M() +
              long(ring_->pi_scale()) * std::min(long(r.shift_), 0L);
    return r;
}

PadicScalar PadicScalar::reduce_prec(long digits) const {
    PadicScalar r = *this;
    if (digits >= r.prec_) return r;
    r.prec_ = digits;
    const auto& R = *ring_;
    // mask coordinates above the precision (component valuations are distinct)
    for (unsigned i = 0; i < R.ram(); ++i) {
        long base = long(R.pi_scale()) * (long(i) + r.shift_);
        long rem = digits - base;  // keep p-digits below ceil(rem/M)
        long keep = rem <= 0 ? 0 : (rem + R.M() - 1) / R.M();
        if (keep >= long(R.Ncap())) continue;
        u64 mask_mod = 1;
        for (long t = 0; t < keep; ++t) mask_mod *= R.p();
        for (unsigned j = 0; j < R.a(); ++j) r.d_[i * R.a() + j] %= mask_mod;
    }
    r.canonicalize();
    return r;
}

u64 PadicScalar::residue(const FiniteField& F) const {
    const auto& R = *ring_;
    if (F.p() != R.p() || F.deg() != R.a())
        throw validation_error("residue field mismatch");
    if (is_zero()) return 0;
    if (val() < 0) throw validation_error("residue of non-integral scalar");
    if (shift_ != 0) return 0;  // canonical nonzero with val >= 0 and shift > 0
    std::vector<u64> c(R.a());
    for (unsigned j = 0; j < R.a(); ++j) c[j] = d_[j] % R.p();
    return F.from_coeffs(c);
}

std::string PadicScalar::str() const {
    if (!ring_) return "<detached>";
    std::string s = "[";
    for (unsigned i = 0; i < ring_->ram(); ++i) {
        if (i) s += "; ";
        for (unsigned j = 0; j < ring_->a(); ++j) {
            if (j) s += ",";
            s += std::to_string(d_[i * ring_->a() + j]);
        }
    }
    s += "] shift=" + std::to_string(shift_) + " prec=" + std::to_string(prec_);
    return s;
}

PadicScalar teichmuller_lift(const RingPtr& ring, const FiniteField& F, u64 x) {
    const auto& R = *ring;
    if (F.p() != R.p() || F.deg() != R.a())
        throw validation_error("Teichmuller lift: field does not match ring");
    PadicScalar y = PadicScalar::zero(ring);
    auto c = F.to_coeffs(x);
    for (unsigned j = 0; j < R.a(); ++j) y.d_[j] = c[j];
    if (y.is_zero()) return y;
    // iterate y <- y^q; gains at least one p-digit per round
    for (unsigned i = 0; i <= R.Ncap() + 1; ++i) {
        PadicScalar ynext = y.pow(F.q());
        if (ynext == y) return ynext;
        y = ynext;
    }
    return y;
}

// ---------------------------------------------------------------------------

std::pair<unsigned, Rational> choose_b_and_M(u64 p) {
    // least M = (p-1)p m admitting some b = j/m in the open interval
    // (1/(p-1), p/(p-1)) with Mb/((p-1)p) = jb-integrality built in
    for (unsigned m = 1; m < 64; ++m) {
        unsigned M = unsigned((p - 1) * p * m);
        const i64 ps = i64(p);
        Rational mid(ps + 1, 2 * (ps - 1));
        // admissible b: multiples of 1/m inside the interval
        Rational lo(1, ps - 1), hi(ps, ps - 1);
        long best_j = -1;
        double bestdist = 1e30;
        for (long j = 1; j <= long(2 * m); ++j) {
            Rational cand(j, m);
            if (lo < cand && cand < hi) {
                double dist = std::abs(double(j) / m - double(mid.num) / mid.den);
                if (dist < bestdist) { bestdist = dist; best_j = j; }
            }
        }
        if (best_j > 0) return {M, Rational(best_j, m)};
    }
    throw validation_error("no admissible (b, M) found");
}

PrecisionContext make_context(const FieldCtx& field, unsigned target_N, const ContextOptions& opt) {
    PrecisionContext ctx;
    ctx.field = field;
    ctx.p = field.p();
    ctx.a = field.a();
    ctx.q = field.q();
    auto [M, b] = choose_b_and_M(ctx.p);
    if (opt.M_override) M = *opt.M_override;
    if (opt.b_override) b = *opt.b_override;
    ctx.b = b;
    ctx.M = M;
    // admissibility checks from the construction
    if ((i64(M) * b.num) % b.den) throw validation_error("M b not integral");
    if (M % (ctx.p - 1)) throw validation_error("M/(p-1) not integral");
    if ((i64(M) * b.num) % i64(b.den * (ctx.p - 1) * ctx.p))
        throw validation_error("Mb/((p-1)p) not integral");
    Rational lo(1, i64(ctx.p) - 1), hi(i64(ctx.p), i64(ctx.p) - 1);
    if (!(lo < b && b < hi)) throw validation_error("b outside (1/(p-1), p/(p-1))");

    ctx.N = target_N;
    ctx.Ncap = target_N + opt.headroom;

    long Mb = i64(M) * b.num / b.den;
    unsigned Mp = M / unsigned(ctx.p - 1);
    unsigned g = unsigned(std::gcd(std::gcd(long(M), Mb), long(Mp)));
    unsigned ram = opt.force_full_ring ? M : M / g;
    unsigned pi_scale = M / ram;

    std::vector<u64> zmod(field.F->modulus().begin(), field.F->modulus().end() - 1);
    ctx.ring = std::make_shared<PadicRing>(ctx.p, ctx.a, zmod, ram, pi_scale, ctx.Ncap);

    ctx.gamma = compute_gamma(ctx);
    ctx.gamma_inv = ctx.gamma.gamma.inverse();
    ctx.prefactor = ctx.gamma_inv.mul_pi(Mb);
    if (ctx.prefactor.val() < 0) throw precision_error("prefactor not integral");
    return ctx;
}

PrecisionContext choose_parameters(u64 p, unsigned a, unsigned target_N) {
    return make_context(make_field(p, a), target_N);
}

GammaTable compute_gamma(const PrecisionContext& ctx) {
    const auto& R = *ctx.ring;
    // pi_D = pi^{M/(p-1)}: a (p-1)-th root of -p inside the ring
    long piD_digits = long(ctx.M / (ctx.p - 1));
    PadicScalar piD = PadicScalar::one(ctx.ring).mul_pi(piD_digits);
    {
        PadicScalar check = piD.pow(ctx.p - 1) + PadicScalar(ctx.ring, ctx.p);
        if (!check.is_zero())
            throw validation_error("ramified modulus admits no Dwork element");
    }
    // truncation level: discarded terms t^(p^n)/p^n need valuation >= Ncap
    unsigned L1 = 0;
    while (true) {
        double v = std::pow(double(ctx.p), double(L1 + 1)) / double(ctx.p - 1) - double(L1 + 1);
        if (v >= double(ctx.Ncap) + 1) break;
        ++L1;
    }
    auto f = [&](const PadicScalar& t) {
        PadicScalar acc = t;
        for (unsigned n = 1; n <= L1; ++n) {
            u64 e = pow_u64_checked(ctx.p, n, "p^n");
            acc += t.pow(e).divide_exact_p(n);
        }
        return acc;
    };
    auto fprime = [&](const PadicScalar& t) {
        PadicScalar acc = PadicScalar::one(ctx.ring);
        for (unsigned n = 1; n <= L1; ++n) {
            u64 e = pow_u64_checked(ctx.p, n, "p^n") - 1;
            acc += t.pow(e);
        }
        return acc;
    };
    // Each Newton iterate is adopted as an exactly known element; gamma's
    // precision is then capped at the certified residual level, since it is a
    // root of the truncated equation only to that depth.
    PadicScalar g = piD;
    long level = 0;
    for (unsigned it = 0;; ++it) {
        PadicScalar r = f(g);
        level = r.val();
        if (level >= r.prec() || level >= long(ctx.Ncap) * R.M()) break;
        g = (g - r * fprime(g).inverse()).as_exact();
        if (it == 63) throw validation_error("gamma Newton iteration failed to converge");
    }
    if (level < long(ctx.N) * R.M())
        throw precision_error("gamma residual below target precision; raise headroom");
    if (g.val() != piD_digits)
        throw validation_error("gamma has wrong valuation (bad ramified modulus?)");
    g = g.reduce_prec(level);

    GammaTable table;
    table.gamma = g;
    // gamma_ell while the paper's lower bound stays below N
    unsigned L = 0;
    while (std::pow(double(ctx.p), double(L + 1)) / double(ctx.p - 1) - double(L + 1) <
           double(ctx.N))
        ++L;
    PadicScalar acc = g;
    table.gamma_ell.push_back(acc);
    for (unsigned ell = 1; ell <= L; ++ell) {
        u64 e = pow_u64_checked(ctx.p, ell, "p^ell");
        acc += g.pow(e).divide_exact_p(ell);
        table.gamma_ell.push_back(acc);
    }
    return table;
}

}  // namespace dwork
