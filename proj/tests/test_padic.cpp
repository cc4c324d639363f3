#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "dwork/padic.hpp"

using namespace dwork;

namespace {

struct Rng {
    u64 s = 0x9e3779b97f4a7c15ull;
    u64 next() {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        return s;
    }
};

PadicScalar random_scalar(const PrecisionContext& ctx, Rng& rng) {
    PadicScalar x = PadicScalar::zero(ctx.ring);
    PadicScalar pi1 = PadicScalar::one(ctx.ring).mul_pi(ctx.ring->pi_scale());
    PadicScalar acc = PadicScalar::one(ctx.ring);
    for (unsigned i = 0; i < ctx.ring->ram(); ++i) {
        x += acc.mul_small(rng.next() % ctx.ring->pmod());
        acc = acc * pi1;
    }
    return x;
}

}  // namespace

TEST_CASE("choose_parameters picks admissible (b, M)") {
    {
        auto [M, b] = choose_b_and_M(7);
        CHECK(M == 42);
        CHECK(M % 42 == 0);
        CHECK((i64(M) * b.num) % b.den == 0);
        CHECK(Rational(1, 6) < b);
        CHECK(b < Rational(7, 6));
        CHECK((i64(M) * b.num / b.den) % (6 * 7) == 0);
    }
    {
        auto [M, b] = choose_b_and_M(3);
        CHECK(M % 6 == 0);
        CHECK(Rational(1, 2) < b);
        CHECK(b < Rational(3, 2));
    }
    for (u64 p : {3ull, 5ull, 7ull, 11ull, 13ull}) {
        auto [M, b] = choose_b_and_M(p);
        CHECK(Rational(1, i64(p) - 1) < b);
        CHECK(b < Rational(i64(p), i64(p) - 1));
        CHECK(M % (unsigned(p) - 1) == 0);
        CHECK((i64(M) * b.num / b.den) % i64((p - 1) * p) == 0);
    }
}

TEST_CASE("ring axioms and precision flooring") {
    auto ctx = choose_parameters(7, 1, 8);
    Rng rng;
    PadicScalar zero = PadicScalar::zero(ctx.ring);
    PadicScalar one = PadicScalar::one(ctx.ring);
    for (int t = 0; t < 30; ++t) {
        PadicScalar x = random_scalar(ctx, rng), y = random_scalar(ctx, rng),
                    z = random_scalar(ctx, rng);
        CHECK((x + zero == x));
        CHECK((x * one == x));
        CHECK((x * y == y * x));
        CHECK((x * (y + z) == x * y + x * z));
        CHECK(((x * y) * z == x * (y * z)));
    }
    // val(pi^{Mb}) = b as a p-adic valuation: Mb pi-digits out of M per unit
    PadicScalar piMb = one.mul_pi(ctx.Mb());
    CHECK(piMb.val() == ctx.Mb());
}

TEST_CASE("valuation is a discrete valuation") {
    auto ctx = choose_parameters(7, 1, 8);
    Rng rng;
    for (int t = 0; t < 40; ++t) {
        PadicScalar x = random_scalar(ctx, rng), y = random_scalar(ctx, rng);
        if (x.is_zero() || y.is_zero()) continue;
        long vx = x.val(), vy = y.val();
        PadicScalar xy = x * y;
        if (vx + vy < long(ctx.Ncap) * long(ctx.M))  // inside tracked range
            CHECK(xy.val() == vx + vy);
        CHECK((x + y).val() >= std::min(vx, vy));
    }
}

TEST_CASE("Newton inversion: (1+p)(1+p)^{-1} = 1 at full precision") {
    auto ctx = choose_parameters(7, 1, 10);
    PadicScalar x = PadicScalar(ctx.ring, 8);  // 1 + 7
    PadicScalar xi = x.inverse();
    CHECK((x * xi == PadicScalar::one(ctx.ring)));
    // and for a ramified unit
    PadicScalar u = PadicScalar::one(ctx.ring) + PadicScalar::one(ctx.ring).mul_pi(3 * ctx.ring->pi_scale());
    CHECK((u * u.inverse() == PadicScalar::one(ctx.ring)));
    CHECK_THROWS(PadicScalar::zero(ctx.ring).inverse());
}

TEST_CASE("inverse of a non-unit divides out the valuation") {
    auto ctx = choose_parameters(7, 1, 10);
    PadicScalar x = PadicScalar(ctx.ring, 7);
    PadicScalar xi = x.inverse();
    CHECK(xi.val() == -long(ctx.M));
    CHECK((x * xi == PadicScalar::one(ctx.ring)));
}

TEST_CASE("Teichmuller lift fixed points and spec value") {
    auto ctx = choose_parameters(7, 1, 10);
    const FiniteField& F = *ctx.field.F;
    CHECK(teichmuller_lift(ctx.ring, F, 0).is_zero());
    CHECK((teichmuller_lift(ctx.ring, F, 1) == PadicScalar::one(ctx.ring)));
    // p=7, a=1: lift(3) = 31 mod 49
    PadicScalar l3 = teichmuller_lift(ctx.ring, F, 3);
    PadicScalar expected(ctx.ring, 31);
    PadicScalar diff = l3 - expected;
    CHECK(diff.val() >= 2 * long(ctx.M));  // agree mod p^2
    // defining equation at full precision, exhaustively
    for (u64 x = 0; x < F.q(); ++x) {
        PadicScalar t = teichmuller_lift(ctx.ring, F, x);
        CHECK((t.pow(F.q()) == t));
        CHECK(t.residue(F) == x);
    }
}

TEST_CASE("Teichmuller lift is multiplicative (exhaustive, F_9)") {
    auto field = make_field(3, 2, std::vector<u64>{1, 0});
    auto ctx = make_context(field, 8);
    const FiniteField& F = *ctx.field.F;
    for (u64 x = 0; x < F.q(); ++x)
        for (u64 y = 0; y < F.q(); ++y) {
            PadicScalar lx = teichmuller_lift(ctx.ring, F, x);
            PadicScalar ly = teichmuller_lift(ctx.ring, F, y);
            PadicScalar lxy = teichmuller_lift(ctx.ring, F, F.mul(x, y));
            CHECK((lx * ly == lxy));
        }
}

TEST_CASE("gamma: valuation, Newton residual, and the estimate bound") {
    for (u64 p : {3ull, 5ull, 7ull}) {
        auto ctx = choose_parameters(p, 1, 10);
        const auto& g = ctx.gamma.gamma;
        CHECK(g.val() == long(ctx.M / (p - 1)));  // val_p = 1/(p-1)

        // residual of the truncated Dwork series has valuation >= N
        unsigned L1 = 0;
        while (std::pow(double(p), double(L1 + 1)) / double(p - 1) - double(L1 + 1) <
               double(ctx.Ncap) + 1)
            ++L1;
        PadicScalar acc = g;
        for (unsigned n = 1; n <= L1; ++n)
            acc += g.pow(pow_u64_checked(p, n, "p^n")).divide_exact_p(n);
        CHECK(acc.val() >= long(ctx.N) * long(ctx.M));

        // gamma_0 = gamma
        CHECK((ctx.gamma.gamma_ell.at(0) == g));

        // gamma = pi_D modulo valuation 2/(p-1)
        PadicScalar piD = PadicScalar::one(ctx.ring).mul_pi(long(ctx.M / (p - 1)));
        CHECK((g - piD).val() >= 2 * long(ctx.M / (p - 1)));

        // estimate bound for every gamma_ell; gamma is a root of the truncated
        // equation, so the bound is certified up to the target precision N
        for (size_t ell = 0; ell < ctx.gamma.gamma_ell.size(); ++ell) {
            double bound = std::pow(double(p), double(ell + 1)) / double(p - 1) - double(ell + 1);
            double claim = std::min(bound, double(ctx.N)) * double(ctx.M);
            long v = ctx.gamma.gamma_ell[ell].val();
            CHECK(double(v) >= claim - 1e-9);
        }
    }
}

TEST_CASE("full ring and subring agree on gamma data") {
    ContextOptions full;
    full.force_full_ring = true;
    auto sub = choose_parameters(7, 1, 8);
    auto ful = make_context(make_field(7, 1), 8, full);
    CHECK(sub.ring->ram() == 6);
    CHECK(ful.ring->ram() == 42);
    // compare val data and the prefactor valuation in both rings
    CHECK(sub.gamma.gamma.val() == ful.gamma.gamma.val());
    CHECK(sub.prefactor.val() == ful.prefactor.val());
    CHECK(sub.prefactor.val() == sub.prefactor_digits());  // val(pi^Mb / gamma) = Mb - M/(p-1)
}

TEST_CASE("reduce_prec floors and masks") {
    auto ctx = choose_parameters(7, 1, 8);
    PadicScalar x(ctx.ring, 1 + 7 * 3);
    PadicScalar r = x.reduce_prec(ctx.M);  // keep one p-digit
    CHECK(r.prec() == long(ctx.M));
    CHECK(((x - r).val() >= long(ctx.M)));
}
