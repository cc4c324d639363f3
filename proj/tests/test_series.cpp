#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "dwork/series.hpp"

using namespace dwork;

namespace {

VarietySpec conic_f7() {
    VarietySpec V;
    V.field = make_field(7, 1);
    V.n = 2;
    V.k = 1;
    V.degrees = {2};
    V.polys = {{{1, {2, 0, 0}}, {1, {0, 2, 0}}, {1, {0, 0, 2}}}};
    return V;
}

VarietySpec cubic_f7() {
    VarietySpec V;
    V.field = make_field(7, 1);
    V.n = 2;
    V.k = 1;
    V.degrees = {3};
    V.polys = {{{1, {3, 0, 0}}, {1, {0, 3, 0}}, {1, {0, 0, 3}}}};
    return V;
}

void check_series_equal(const TruncatedSeries& A, const TruncatedSeries& B) {
    REQUIRE(A.terms.size() == B.terms.size());
    for (size_t i = 0; i < A.terms.size(); ++i) {
        CHECK(A.terms[i].e == B.terms[i].e);
        CHECK((A.terms[i].c == B.terms[i].c));
    }
}

}  // namespace

TEST_CASE("Artin-Hasse coefficients: first values and integrality") {
    auto ctx = choose_parameters(7, 1, 8);
    auto e = artin_hasse_coeffs(ctx, 100);
    CHECK((e[0] == PadicScalar::one(ctx.ring)));
    CHECK((e[1] == PadicScalar::one(ctx.ring)));
    CHECK((e[2] == PadicScalar(ctx.ring, 2).inverse()));  // 1/2 for p >= 3
    for (unsigned i = 0; i <= 100; ++i) CHECK(e[i].val() >= 0);
}

TEST_CASE("theta table: lambda_0 = 1, lambda_1 = gamma, valuation growth") {
    for (u64 p : {5ull, 7ull}) {
        auto ctx = choose_parameters(p, 1, 8);
        auto th = theta_coeffs(ctx, 50);
        CHECK((th.lambda[0] == PadicScalar::one(ctx.ring)));
        CHECK((th.lambda[1] == ctx.gamma.gamma));
        for (unsigned i = 0; i <= 50; ++i) {
            double bound = double(i) / double(p - 1) * double(ctx.M);
            double claim = std::min(bound, double(th.lambda[i].prec()));
            if (!th.lambda[i].is_zero()) CHECK(double(th.lambda[i].val()) >= claim - 1e-9);
        }
    }
}

TEST_CASE("psi_q is an additive character with values p-th roots of unity") {
    // exhaustive over F_5, F_7, F_9
    for (auto [p, a] : {std::pair<u64, unsigned>{5, 1}, {7, 1}, {3, 2}}) {
        auto ctx = make_context(make_field(p, a), 8);
        unsigned Dt = unsigned((ctx.Ncap + 2) * (p - 1));
        auto th = theta_coeffs(ctx, Dt);
        const FiniteField& F = *ctx.field.F;
        CHECK((psi_q(ctx, th, 0) == PadicScalar::one(ctx.ring)));
        std::vector<PadicScalar> tab(F.q());
        for (u64 x = 0; x < F.q(); ++x) tab[x] = psi_q(ctx, th, x);
        for (u64 x = 0; x < F.q(); ++x) {
            CHECK((tab[x].pow(p) == PadicScalar::one(ctx.ring)));
            for (u64 y = 0; y < F.q(); ++y) CHECK((tab[F.add(x, y)] == tab[x] * tab[y]));
        }
    }
}

TEST_CASE("series products are associative and exact") {
    auto ctx = choose_parameters(7, 1, 8);
    auto V = conic_f7();
    auto pot = build_potentials(V, ctx, 12);
    const auto& A = pot.S_hat;
    auto B = series_add(pot.S_lift, series_one(ctx.ring, V.nvars()));
    const auto& C = pot.Gamma;
    auto AB_C = series_mul(series_mul(A, B, 12), C, 12);
    auto A_BC = series_mul(A, series_mul(B, C, 12), 12);
    check_series_equal(AB_C, A_BC);
}

TEST_CASE("serial and parallel products agree") {
    auto ctx = choose_parameters(7, 1, 8);
    auto V = cubic_f7();
    auto pot = build_potentials(V, ctx, 20);
    auto E = series_exp(pot.Gamma, 20);
    check_series_equal(series_mul(E, E, 20, true), series_mul_serial(E, E, 20));
}

TEST_CASE("potentials: gradings and level structure") {
    auto ctx = choose_parameters(7, 1, 8);
    auto V = cubic_f7();
    auto pot = build_potentials(V, ctx, 30);
    for (const auto& t : pot.S_hat.terms) {
        CHECK(V.charge(t.e) == 0);
        long w = V.weight(t.e);
        bool is_ppow = w == 1 || w == 7 || w == 49;
        CHECK(is_ppow);
    }
    // a = 1: Gamma level-0 terms coincide with S-hat m=0 terms (gamma_0 = gamma)
    for (const auto& t : pot.S_lift.terms) {
        const PadicScalar* sh = pot.S_hat.coeff(t.e);
        const PadicScalar* gm = pot.Gamma.coeff(t.e);
        REQUIRE(sh != nullptr);
        REQUIRE(gm != nullptr);
        CHECK((*sh == *gm));
    }
}

TEST_CASE("E_S equals exp(Gamma) termwise") {
    auto ctx = choose_parameters(7, 1, 8);
    auto V = cubic_f7();
    auto th = theta_coeffs(ctx, unsigned((ctx.Ncap + 2) * 6));
    auto pot = build_potentials(V, ctx, 24);
    auto E = build_E_S(V, ctx, th, 24);
    auto Eo = series_exp(pot.Gamma, 24);
    CHECK(E.terms.front().e == 0);
    CHECK((E.terms.front().c == PadicScalar::one(ctx.ring)));
    check_series_equal(E, Eo);
    // valuation grows at least linearly in the y-weight, slope 1/(p-1)
    for (const auto& t : E.terms) {
        long w = V.weight(t.e);
        double claim = std::min(double(w) * ctx.M / 6.0, double(t.c.prec()));
        CHECK(double(t.c.val()) >= claim - 1e-9);
    }
}

TEST_CASE("E-hat factorization: E(z) * E-hat(z^q) = E-hat(z) below D/q") {
    auto ctx = choose_parameters(7, 1, 6);
    auto V = conic_f7();
    unsigned D = 21, Dq = D / 7;
    auto th = theta_coeffs(ctx, unsigned((ctx.Ncap + 2) * 6));
    auto pot = build_potentials(V, ctx, D);
    auto Ehat = build_E_hat(ctx, pot, D);
    auto E = build_E_S(V, ctx, th, D);
    auto lhs = series_mul(E, series_subst_zq(Ehat, 7, D), Dq);
    TruncatedSeries rhs;
    rhs.nvars = Ehat.nvars;
    for (const auto& t : Ehat.terms)
        if (exp_total(t.e, Ehat.nvars) <= Dq) rhs.terms.push_back(t);
    check_series_equal(lhs, rhs);
}

TEST_CASE("T_q drops non-multiples and divides exponents") {
    auto ctx = choose_parameters(7, 1, 8);
    TruncatedSeries s;
    s.nvars = 4;
    s.terms.push_back({exp_from({1, 2, 3, 4}), PadicScalar::one(ctx.ring)});
    s.terms.push_back({exp_from({7, 14, 0, 7}), PadicScalar::one(ctx.ring)});
    std::sort(s.terms.begin(), s.terms.end(),
              [](const STerm& a, const STerm& b) { return a.e < b.e; });
    auto t = apply_T_q(s, 7);
    REQUIRE(t.terms.size() == 1);
    CHECK(t.terms[0].e == exp_from({1, 2, 0, 1}));
}

TEST_CASE("T_q intertwines z d/dz with weight q") {
    auto ctx = choose_parameters(7, 1, 8);
    auto V = cubic_f7();
    auto pot = build_potentials(V, ctx, 30);
    auto E = series_exp(pot.Gamma, 30);
    for (unsigned var = 0; var < 2; ++var) {
        auto lhs = apply_T_q(series_theta_op(E, var), 7);
        auto rhs = series_scale(series_theta_op(apply_T_q(E, 7), var), PadicScalar(ctx.ring, 7));
        check_series_equal(lhs, rhs);
    }
}

TEST_CASE("exponential sums match affine counts times q^{mk}") {
    for (auto* mk : {+conic_f7, +cubic_f7}) {
        auto V = mk();
        auto ctx = make_context(V.field, 6);
        auto th = theta_coeffs(ctx, unsigned((ctx.Ncap + 2) * 6));
        PadicScalar lhs = exp_sum(V, ctx, th, 1);
        u64 affine = count_points(V, 1).affine;
        CHECK((lhs == PadicScalar(ctx.ring, affine * 7)));
    }
}

TEST_CASE("exp_sum degenerate guard: zero potential gives q^{mN}") {
    VarietySpec V;
    V.field = make_field(7, 1);
    V.n = 2;
    V.k = 0;
    auto ctx = make_context(V.field, 6);
    auto th = theta_coeffs(ctx, unsigned((ctx.Ncap + 2) * 6));
    PadicScalar s = exp_sum(V, ctx, th, 1);
    CHECK((s == PadicScalar(ctx.ring, pow_u64_checked(7, 3, "q^N"))));
}

TEST_CASE("exp_sum respects the ceiling") {
    auto V = cubic_f7();
    auto ctx = make_context(V.field, 6);
    auto th = theta_coeffs(ctx, 40);
    CHECK_THROWS_AS(exp_sum(V, ctx, th, 1, 10), ceiling_error);
}

TEST_CASE("dropped-tail audit: extra terms at higher bound have valuation >= N") {
    auto ctx = choose_parameters(7, 1, 6);
    auto V = cubic_f7();
    auto pot = build_potentials(V, ctx, 24);
    auto pot_wide = build_potentials(V, ctx, 32);
    CHECK(pot.S_hat.tail_val >= 0);
    for (const auto& t : pot_wide.S_hat.terms)
        if (!pot.S_hat.coeff(t.e)) CHECK(t.c.val() >= pot.S_hat.tail_val);
    for (const auto& t : pot_wide.Gamma.terms)
        if (!pot.Gamma.coeff(t.e)) CHECK(t.c.val() >= pot.Gamma.tail_val);
}
