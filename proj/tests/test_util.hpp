#pragma once

// shared helpers for the test suites

#include "dwork/graded.hpp"

namespace dwork::testutil {

struct Rng {
    u64 s;
    explicit Rng(u64 seed = 0x9e3779b97f4a7c15ull) : s(seed) {}
    u64 next() {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        return s;
    }
    u64 below(u64 n) { return next() % n; }
};

inline VarietySpec conic_f7() {
    VarietySpec V;
    V.field = make_field(7, 1);
    V.n = 2;
    V.k = 1;
    V.degrees = {2};
    V.polys = {{{1, {2, 0, 0}}, {1, {0, 2, 0}}, {1, {0, 0, 2}}}};
    return V;
}

inline VarietySpec cubic_f7() {
    VarietySpec V;
    V.field = make_field(7, 1);
    V.n = 2;
    V.k = 1;
    V.degrees = {3};
    V.polys = {{{1, {3, 0, 0}}, {1, {0, 3, 0}}, {1, {0, 0, 3}}}};
    return V;
}

inline VarietySpec quadrics_f5() {
    VarietySpec V;
    V.field = make_field(5, 1);
    V.n = 3;
    V.k = 2;
    V.degrees = {2, 2};
    V.polys = {{{1, {2, 0, 0, 0}}, {1, {0, 2, 0, 0}}, {1, {0, 0, 2, 0}}, {1, {0, 0, 0, 2}}},
               {{1, {2, 0, 0, 0}}, {2, {0, 2, 0, 0}}, {3, {0, 0, 2, 0}}, {4, {0, 0, 0, 2}}}};
    return V;
}

inline PadicScalar random_unit_scalar(const RingPtr& ring, Rng& rng) {
    PadicScalar x(ring, 1 + rng.below(ring->p() - 1));
    PadicScalar pi1 = PadicScalar::one(ring).mul_pi(ring->pi_scale());
    PadicScalar acc = pi1;
    for (unsigned i = 1; i < ring->ram(); ++i) {
        x += acc.mul_small(rng.below(ring->pmod()));
        acc = acc * pi1;
    }
    return x;
}

/// random homogeneous element of the stated eta-size with exponents <= degcap
inline GradedElement random_homogeneous(const ComplexCtx& C, Rng& rng, unsigned eta_size,
                                        unsigned degcap, unsigned nterms = 4) {
    GradedElement out = graded_zero(C);
    unsigned nv = C.nvars();
    for (unsigned t = 0; t < nterms; ++t) {
        u32 eta = 0;
        while (std::popcount(eta) < int(eta_size)) eta |= 1u << rng.below(nv);
        ExpKey e = 0;
        unsigned budget = degcap ? unsigned(rng.below(degcap + 1)) : 0;
        for (unsigned d = 0; d < budget; ++d) e = exp_add(e, exp_set(0, unsigned(rng.below(nv)), 1), nv);
        GradedElement term =
            graded_from_raw(C, e, eta, random_unit_scalar(C.pc->ring, rng));
        out = graded_add(out, term);
    }
    return out;
}

inline FiniteCdgaElement random_fq_element(const ComplexCtx& C, Rng& rng, unsigned eta_size,
                                           unsigned degcap, unsigned nterms = 4) {
    const FiniteField& F = *C.V->field.F;
    unsigned nv = C.nvars();
    std::vector<std::pair<GKey, u64>> raw;
    for (unsigned t = 0; t < nterms; ++t) {
        u32 eta = 0;
        while (std::popcount(eta) < int(eta_size)) eta |= 1u << rng.below(nv);
        ExpKey e = 0;
        unsigned budget = degcap ? unsigned(rng.below(degcap + 1)) : 0;
        for (unsigned d = 0; d < budget; ++d) e = exp_add(e, exp_set(0, unsigned(rng.below(nv)), 1), nv);
        raw.push_back({{e, eta}, 1 + rng.below(F.q() - 1)});
    }
    FiniteCdgaElement out;
    out.nvars = nv;
    std::sort(raw.begin(), raw.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
    for (auto& t : raw) {
        if (!out.terms.empty() && out.terms.back().first == t.first)
            out.terms.back().second = F.add(out.terms.back().second, t.second);
        else
            out.terms.push_back(t);
    }
    std::erase_if(out.terms, [](const auto& t) { return t.second == 0; });
    return out;
}

}  // namespace dwork::testutil
