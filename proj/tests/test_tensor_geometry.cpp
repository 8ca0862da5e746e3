#include "support.hpp"

#include <gtest/gtest.h>

using namespace support;

namespace {

// A chart with fixed coordinate names, base point and truncation degree.
struct Chart {
    std::vector<std::string> coords;
    std::vector<Q> p0;
    int D;

    int n() const { return static_cast<int>(coords.size()); }
    SpacePtr space() const { return JetSpace::get(n(), D); }
    J f(const std::string& text) const { return from_expr(text, coords, p0, D); }

    TensorField<Q> t(const std::string& variance,
                     const std::vector<std::pair<std::vector<int>, std::string>>& entries) const {
        TensorField<Q> r(variance, n(), space(), D);
        for (const auto& [idx, text] : entries) r.flat(r.offset(idx)) = f(text);
        return r;
    }
    VectorField<Q> v(const std::vector<std::string>& comps) const {
        VectorField<Q> X = make_vector<Q>(n(), space(), D);
        for (int i = 0; i < n(); ++i) X[i] = f(comps[i]);
        return X;
    }
    Form<Q> random_scalar_form(int k, std::mt19937_64& rng) const {
        Form<Q> w(n(), k, 1, space(), D);
        for (auto m : w.masks()) w.at(0, m) = random_jet(space(), D, rng, 3);
        return w;
    }
    Form<Q> random_vector_form(int k, std::mt19937_64& rng) const {
        Form<Q> w(n(), k, n(), space(), D);
        w.mark_vector_valued();
        for (auto m : w.masks())
            for (int v = 0; v < n(); ++v) w.at(v, m) = random_jet(space(), D, rng, 3);
        return w;
    }
};

const Chart kLine{{"t"}, {Q(1)}, 6};
const Chart kPlane{{"t1", "t2"}, {Q(1), Q(2)}, 6};
const Chart kSpace3{{"t1", "t2", "t3"}, {Q(1), Q(-1), Q(1, 2)}, 5};

bool same(const TensorField<Q>& a, const TensorField<Q>& b) { return (a - b).vanishes(); }
bool same(const Form<Q>& a, const Form<Q>& b) { return (a - b).vanishes(); }

// Random symmetric connection with polynomial entries.
TensorField<Q> random_symmetric_connection(const Chart& ch, std::mt19937_64& rng) {
    TensorField<Q> G("udd", ch.n(), ch.space(), ch.D);
    for (int k = 0; k < ch.n(); ++k)
        for (int i = 0; i < ch.n(); ++i)
            for (int j = i; j < ch.n(); ++j) G.at(k, j, i) = G.at(k, i, j) = random_jet(ch.space(), ch.D, rng, 2);
    return G;
}

}  // namespace

TEST(Contract, IdentityAgainstVector) {
    const auto id = identity_endo<Q>(2, kPlane.space(), kPlane.D);
    const auto v = kPlane.v({"t1*t2", "3 - t2^2"});
    EXPECT_TRUE(same(contract(tensor_product(id, v), {{1, 2}}), v));
}

TEST(Contract, UnitContractionGivesIdentity) {
    const auto s = exact_structure("catalog/toy1d.fman");
    const auto ce = contract(tensor_product(s.c, s.e), {{2, 3}});
    EXPECT_TRUE(same(ce, identity_endo<Q>(1, s.space, s.D)));
}

TEST(Contract, Toy1dMultiplicationOperatorIsT) {
    const auto s = exact_structure("catalog/toy1d.fman");
    const J t = J::variable(s.space, s.D, 0, Q(1));
    EXPECT_TRUE(s.L.at(0, 0) == t);
    EXPECT_TRUE(same(multiplication_operator(s.c, s.E), s.L));
    EXPECT_TRUE(same(contract(tensor_product(s.c, s.E), {{2, 3}}), s.L));
}

TEST(Contract, RejectsEqualVariance) {
    const auto v = kPlane.v({"t1", "t2"});
    EXPECT_THROW(contract(tensor_product(v, v), {{0, 1}}), VarianceError);
}

TEST(Contract, IndependentContractionsCommute) {
    std::mt19937_64 rng(3);
    TensorField<Q> T("uddu", 2, kPlane.space(), kPlane.D);
    for (std::size_t k = 0; k < T.size(); ++k) T.flat(k) = random_jet(kPlane.space(), kPlane.D, rng, 2);
    EXPECT_TRUE(same(contract(T, {{0, 1}, {3, 2}}), contract(T, {{3, 2}, {0, 1}})));
    // Contracting in two steps gives the same scalar.
    const auto once = contract(T, {{0, 1}});
    EXPECT_TRUE(same(contract(once, {{1, 0}}), contract(T, {{0, 1}, {3, 2}})));
}

TEST(Contract, Multilinear) {
    std::mt19937_64 rng(4);
    const auto sp = kPlane.space();
    TensorField<Q> A("ud", 2, sp, kPlane.D), B("ud", 2, sp, kPlane.D);
    for (std::size_t k = 0; k < 4; ++k) {
        A.flat(k) = random_jet(sp, kPlane.D, rng, 2);
        B.flat(k) = random_jet(sp, kPlane.D, rng, 2);
    }
    const auto v = kPlane.v({"t1^2", "t2 - t1"});
    const J f = kPlane.f("1 + t1*t2");
    TensorField<Q> fA = A;
    for (std::size_t k = 0; k < 4; ++k) fA.flat(k) = f * A.flat(k);
    const auto lhs = contract(tensor_product(fA + B, v), {{1, 2}});
    auto rhs = contract(tensor_product(A, v), {{1, 2}});
    for (int i = 0; i < 2; ++i) rhs[i] = f * rhs[i];
    rhs += contract(tensor_product(B, v), {{1, 2}});
    EXPECT_TRUE(same(lhs, rhs));
}

TEST(EndoInverse, Identity) {
    const auto id = identity_endo<Q>(3, kSpace3.space(), kSpace3.D);
    EXPECT_TRUE(same(endo_inverse(id), id));
}

TEST(EndoInverse, Toy1dReciprocal) {
    const auto s = exact_structure("catalog/toy1d.fman");
    EXPECT_TRUE(endo_inverse(s.L).at(0, 0) == from_expr("1/t", {"t"}, {Q(1)}, s.D));
}

TEST(EndoInverse, SingularAtBasepoint) {
    const auto L = kPlane.t("ud", {{{0, 0}, "t1 - 1"}, {{1, 1}, "t2"}});
    EXPECT_THROW(endo_inverse(L), SingularAtBasepoint);
}

TEST(EndoInverse, ProductIsIdentityAndInvolutive) {
    const auto L = kSpace3.t("ud", {{{0, 0}, "t1"}, {{0, 2}, "t2*t3"}, {{1, 0}, "t3^2"}, {{1, 1}, "2 + t1*t2"},
                                    {{2, 1}, "t1 - t3"}, {{2, 2}, "exp(t2 + 1)"}});
    const auto inv = endo_inverse(L);
    const auto id = identity_endo<Q>(3, kSpace3.space(), kSpace3.D);
    EXPECT_TRUE(same(compose(L, inv), id));
    EXPECT_TRUE(same(compose(inv, L), id));
    EXPECT_TRUE(same(endo_inverse(inv), L));
}

TEST(EndoInverse, DeterminantOfConstantMatrix) {
    const auto L = kPlane.t("ud", {{{0, 0}, "t1"}, {{0, 1}, "t2"}, {{1, 0}, "1"}, {{1, 1}, "t1*t2"}});
    // [[1, 2], [1, 2]] at the base point.
    EXPECT_EQ(determinant(constant_matrix(L)), Q(0));
    EXPECT_THROW(endo_inverse(L), SingularAtBasepoint);
}

TEST(LieBracket, CoordinateFieldsCommute) {
    const auto d1 = kPlane.v({"1", "0"}), d2 = kPlane.v({"0", "1"});
    EXPECT_TRUE(lie_bracket(d1, d2).vanishes());
}

TEST(LieBracket, Toy1dUnitAndEuler) {
    const auto s = exact_structure("catalog/toy1d.fman");
    EXPECT_TRUE(same(lie_bracket(s.e, s.E), s.e));
}

TEST(LieBracket, CoordinateComputation) {
    const auto X = kPlane.v({"t2", "0"}), d2 = kPlane.v({"0", "1"});
    EXPECT_TRUE(same(lie_bracket(X, d2), kPlane.v({"-1", "0"})));
    EXPECT_TRUE(same(lie_bracket(d2, X), kPlane.v({"1", "0"})));
}

TEST(LieBracket, JacobiIdentity) {
    std::mt19937_64 rng(12);
    const auto X = random_vector_field<Q>(kSpace3.space(), 3, kSpace3.D, rng);
    const auto Y = random_vector_field<Q>(kSpace3.space(), 3, kSpace3.D, rng);
    const auto Z = random_vector_field<Q>(kSpace3.space(), 3, kSpace3.D, rng);
    const auto sum = lie_bracket(X, lie_bracket(Y, Z)) + lie_bracket(Y, lie_bracket(Z, X)) +
                     lie_bracket(Z, lie_bracket(X, Y));
    EXPECT_TRUE(sum.vanishes());
}

TEST(Nijenhuis, OneDimensionalVanishes) {
    EXPECT_TRUE(nijenhuis(kLine.t("ud", {{{0, 0}, "t^3 - 2*t"}})).vanishes());
    EXPECT_TRUE(nijenhuis(exact_structure("catalog/toy1d.fman").L).vanishes());
}

TEST(Nijenhuis, CoordinateExample) {
    // L(d1) = t2 d1, L(d2) = 0 gives N(d1, d2) = t2 d1.
    const auto L = kPlane.t("ud", {{{0, 0}, "t2"}});
    const auto N = nijenhuis(L);
    EXPECT_TRUE(N.at(0, 0, 1) == kPlane.f("t2").truncated(N.degree()));
    EXPECT_TRUE(N.at(1, 0, 1).is_exact_zero());
    EXPECT_TRUE((N.at(0, 0, 1) + N.at(0, 1, 0)).is_exact_zero());
}

TEST(Nijenhuis, DiagonalWithSeparatedEigenvaluesVanishes) {
    EXPECT_TRUE(nijenhuis(kPlane.t("ud", {{{0, 0}, "t1^2"}, {{1, 1}, "3*t2 - 1"}})).vanishes());
}

TEST(Nijenhuis, EulerMultiplicationOnCatalog) {
    for (const char* f : {"catalog/A2.fman", "catalog/flat3d.fman"}) EXPECT_TRUE(nijenhuis(exact_structure(f).L).vanishes()) << f;
}

TEST(Torsion, Examples) {
    std::mt19937_64 rng(1);
    EXPECT_TRUE(torsion(random_symmetric_connection(kPlane, rng)).vanishes());
    const auto G = kPlane.t("udd", {{{0, 0, 1}, "1"}});
    const auto T = torsion(G);
    EXPECT_EQ(T.at(0, 0, 1)[0], Q(1));
    EXPECT_EQ(T.at(0, 1, 0)[0], Q(-1));
}

TEST(Riemann, ZeroAndOneDimensional) {
    EXPECT_TRUE(riemann(zero_connection<Q>(2, kPlane.space(), kPlane.D)).vanishes());
    EXPECT_TRUE(riemann(kLine.t("udd", {{{0, 0, 0}, "t^2 + 1/t"}})).vanishes());
}

TEST(Riemann, Toy1dGaussManinClosedForm) {
    const auto bs = build_biflat(exact_structure("catalog/toy1d.fman"));
    for (const Q lam : {Q(1, 3), Q(1, 2), Q(-2)}) {
        const auto G = gm_christoffels(bs, lam);
        // Gamma = -1/(t - lambda)
        const J expected = -jet_inv(J::variable(bs.primal.space, bs.primal.D, 0, Q(1)) - J::constant(bs.primal.space, bs.primal.D, lam));
        EXPECT_TRUE(G.at(0, 0, 0) == expected) << lam;
        EXPECT_TRUE(torsion(G).vanishes());
        EXPECT_TRUE(riemann(G).vanishes());
    }
    EXPECT_EQ(gm_christoffels(bs, Q(1, 2)).at(0, 0, 0)[0], Q(-2));
}

TEST(Riemann, CurvedExampleAndFirstBianchi) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 3; ++trial) {
        const auto G = random_symmetric_connection(kSpace3, rng);
        const auto R = riemann(G);
        EXPECT_FALSE(R.vanishes());
        for (int l = 0; l < 3; ++l)
            for (int k = 0; k < 3; ++k)
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) {
                        EXPECT_TRUE((R.at(l, k, i, j) + R.at(l, k, j, i)).is_exact_zero());
                        EXPECT_TRUE((R.at(l, k, i, j) + R.at(l, i, j, k) + R.at(l, j, k, i)).is_exact_zero());
                    }
    }
}

TEST(SecondCovDeriv, Examples) {
    const auto G0 = zero_connection<Q>(2, kPlane.space(), kPlane.D);
    EXPECT_TRUE(second_cov_deriv(G0, kPlane.v({"2*t1 - t2 + 3", "t1"})).vanishes());

    const auto s = exact_structure("catalog/toy1d.fman");
    EXPECT_TRUE(second_cov_deriv(s.a, s.E).vanishes());

    const auto Z = kLine.v({"t^2"});
    const auto H = second_cov_deriv(zero_connection<Q>(1, kLine.space(), kLine.D), Z);
    EXPECT_TRUE(H.at(0, 0, 0) == kLine.f("2").truncated(H.degree()));
}

TEST(SecondCovDeriv, CommutatorIsCurvature) {
    // nabla^2_{ij} Z - nabla^2_{ji} Z = R(d_i, d_j) Z for a torsion-free connection.
    std::mt19937_64 rng(8);
    const auto G = random_symmetric_connection(kPlane, rng);
    const auto Z = random_vector_field<Q>(kPlane.space(), 2, kPlane.D, rng);
    const auto H = second_cov_deriv(G, Z);
    const auto R = riemann(G);
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                J rz = J::zero(kPlane.space(), R.degree());
                for (int m = 0; m < 2; ++m) rz += R.at(k, m, i, j) * Z[m];
                EXPECT_TRUE((H.at(k, i, j) - H.at(k, j, i) - rz).is_exact_zero()) << k << i << j;
            }
}

TEST(LieDerivativeProduct, Examples) {
    const auto s = exact_structure("catalog/toy1d.fman");
    EXPECT_TRUE(same(lie_derivative_product(s.E, s.c), s.c));

    // C[x]/x^2 with constant structure constants
    const auto c = kPlane.t("udd", {{{0, 0, 0}, "1"}, {{1, 0, 1}, "1"}, {{1, 1, 0}, "1"}});
    EXPECT_TRUE(same(lie_derivative_product(kPlane.v({"t1", "t2"}), c), c));
    EXPECT_TRUE(lie_derivative_product(kPlane.v({"1", "0"}), c).vanishes());
}

TEST(LieDerivativeProduct, CatalogEulerFields) {
    for (const char* f : {"catalog/A2.fman", "catalog/flat3d.fman"}) {
        const auto s = exact_structure(f);
        EXPECT_TRUE(same(lie_derivative_product(s.E, s.c), s.c)) << f;
        EXPECT_TRUE(lie_derivative_product(s.e, s.c).vanishes()) << f;
    }
}

TEST(Forms, DSquaredVanishes) {
    const Chart ch{{"t1", "t2"}, {Q(0), Q(0)}, 6};
    const auto f = scalar_form(2, ch.f("t1*t2^2"));
    const auto df = fn_d(f);
    EXPECT_TRUE(df.at(0, 0b01) == ch.f("t2^2").truncated(5));
    EXPECT_TRUE(df.at(0, 0b10) == ch.f("2*t1*t2").truncated(5));
    EXPECT_TRUE(fn_d(df).vanishes());
    std::mt19937_64 rng(5);
    for (int k = 0; k <= 1; ++k) EXPECT_TRUE(fn_d(fn_d(kSpace3.random_scalar_form(k, rng))).vanishes());
}

TEST(Forms, OneDimensionalDL) {
    const auto L = kLine.t("ud", {{{0, 0}, "t"}});
    const J f = kLine.f("t^3 - 2*t^2 + 5");
    const auto dLf = fn_dL(scalar_form(1, f), L);
    EXPECT_TRUE(dLf.at(0, 1) == kLine.f("t*(3*t^2 - 4*t)").truncated(5));
}

TEST(Forms, AnticommutatorVanishes) {
    std::mt19937_64 rng(17);
    const auto L = kPlane.t("ud", {{{0, 0}, "t1^2"}, {{1, 1}, "3*t2 - 1"}});
    ASSERT_TRUE(nijenhuis(L).vanishes());
    for (int trial = 0; trial < 20; ++trial) {
        const auto w = kPlane.random_scalar_form(trial % 2, rng);
        EXPECT_TRUE((fn_d(fn_dL(w, L)) + fn_dL(fn_d(w), L)).vanishes());
        EXPECT_TRUE(fn_dL(fn_dL(w, L), L).vanishes());
    }
}

TEST(Forms, NonzeroNijenhuisBreaksDLSquared) {
    // With N_L != 0, d_L^2 t1 = t2 dt1 ^ dt2 while d d_L + d_L d still vanishes.
    const auto L = kPlane.t("ud", {{{0, 0}, "t2"}});
    const auto t1 = scalar_form(2, kPlane.f("t1"));
    const auto sq = fn_dL(fn_dL(t1, L), L);
    EXPECT_TRUE(sq.at(0, 0b11) == kPlane.f("t2").truncated(sq.degree()));
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 10; ++trial) {
        const auto w = kPlane.random_scalar_form(trial % 2, rng);
        EXPECT_TRUE((fn_d(fn_dL(w, L)) + fn_dL(fn_d(w), L)).vanishes());
    }
}

TEST(ExtCovD, ZeroFormIsCovariantDerivative) {
    std::mt19937_64 rng(10);
    const auto G = random_symmetric_connection(kPlane, rng);
    const auto sigma = kPlane.v({"t1*t2", "1 - t1^2"});
    const auto d = ext_cov_d(G, zero_form(sigma));
    EXPECT_TRUE(same(d, one_form(cov_deriv(G, sigma))));
    const auto sigma_const = kPlane.v({"2", "-1"});
    EXPECT_TRUE(ext_cov_d(zero_connection<Q>(2, kPlane.space(), kPlane.D), zero_form(sigma_const)).vanishes());
}

TEST(ExtCovD, Toy1dDualConnectionKillsEuler) {
    const auto bs = build_biflat(exact_structure("catalog/toy1d.fman"));
    EXPECT_TRUE(bs.b.at(0, 0, 0) == from_expr("-1/t", {"t"}, {Q(1)}, bs.primal.D));
    EXPECT_TRUE(ext_cov_d(bs.b, zero_form(bs.primal.E)).vanishes());
}

TEST(ExtCovD, FlatConnectionSquaresToZero) {
    const auto bs = build_biflat(exact_structure("catalog/A2.fman", 6));
    const auto G = gm_christoffels(bs, Q(1, 3));
    ASSERT_TRUE(riemann(G).vanishes());
    std::mt19937_64 rng(14);
    const Chart ch{{"t1", "t2"}, {Q(1), Q(3)}, 6};
    for (int k = 0; k <= 1; ++k) {
        const auto w = ch.random_vector_form(k, rng);
        EXPECT_TRUE(ext_cov_d(G, ext_cov_d(G, w)).vanishes()) << k;
    }
    // A curved connection does not.
    const auto C = random_symmetric_connection(ch, rng);
    EXPECT_FALSE(ext_cov_d(C, ext_cov_d(C, ch.random_vector_form(0, rng))).vanishes());
}

TEST(ExtCovDL, IdentityReducesToExtCovD) {
    std::mt19937_64 rng(15);
    const auto G = random_symmetric_connection(kSpace3, rng);
    const auto id = identity_endo<Q>(3, kSpace3.space(), kSpace3.D);
    for (int k = 0; k <= 2; ++k) {
        const auto w = kSpace3.random_vector_form(k, rng);
        EXPECT_TRUE(same(ext_cov_dL(G, id, w), ext_cov_d(G, w))) << k;
    }
}

TEST(ExtCovDL, Toy1dDualConnection) {
    const auto bs = build_biflat(exact_structure("catalog/toy1d.fman"));
    const auto one = make_vector<Q>(1, bs.primal.space, bs.primal.D);
    auto sigma = one;
    sigma[0] = J::constant(bs.primal.space, bs.primal.D, Q(1));
    const auto r = ext_cov_dL(bs.b, bs.primal.L, zero_form(sigma));
    EXPECT_TRUE(r.at(0, 1) == J::constant(bs.primal.space, r.degree(), Q(-1)).truncated(r.degree()));
}

TEST(ExtCovDL, SquaresToZeroForDualConnection) {
    std::mt19937_64 rng(16);
    for (const char* f : {"catalog/A2.fman", "catalog/flat3d.fman"}) {
        const auto bs = build_biflat(exact_structure(f, 6));
        const Chart ch{bs.primal.coords, bs.primal.p0, 6};
        for (int k = 0; k <= 1; ++k) {
            const auto w = ch.random_vector_form(k, rng);
            EXPECT_TRUE(ext_cov_dL(bs.b, bs.primal.L, ext_cov_dL(bs.b, bs.primal.L, w)).vanishes()) << f << k;
        }
    }
}

namespace {

// d(a ^ b) = Da ^ b + (-1)^k a ^ Db for scalar a of degree k and tangent-valued b,
// where D is d or d_L on scalars and the matching covariant operator on b.
template <class ScalarD, class VectorD>
void check_leibniz(const Chart& ch, ScalarD sd, VectorD vd, std::mt19937_64& rng) {
    for (int k = 0; k <= 2 && k < ch.n(); ++k)
        for (int q = 0; k + q < ch.n() && q <= 1; ++q) {
            const auto a = ch.random_scalar_form(k, rng);
            const auto b = ch.random_vector_form(q, rng);
            const auto lhs = vd(wedge(a, b));
            auto rhs = wedge(sd(a), b);
            const auto second = wedge(a, vd(b));
            if (k % 2) rhs -= second;
            else rhs += second;
            EXPECT_TRUE(same(lhs, rhs)) << "n=" << ch.n() << " k=" << k << " q=" << q;
        }
    // sigma (x) alpha
    for (int k = 0; k < ch.n(); ++k) {
        const auto sigma = zero_form(random_vector_field<Q>(ch.space(), ch.n(), ch.D, rng));
        const auto alpha = ch.random_scalar_form(k, rng);
        EXPECT_TRUE(same(vd(wedge(sigma, alpha)), wedge(vd(sigma), alpha) + wedge(sigma, sd(alpha))));
    }
}

}  // namespace

TEST(Leibniz, CovariantExteriorDerivative) {
    std::mt19937_64 rng(30);
    for (const Chart* ch : {&kPlane, &kSpace3}) {
        const auto G = random_symmetric_connection(*ch, rng);
        check_leibniz(
            *ch, [](const Form<Q>& w) { return fn_d(w); }, [&](const Form<Q>& w) { return ext_cov_d(G, w); }, rng);
    }
}

TEST(Leibniz, LExteriorDerivativeWithDualConnection) {
    std::mt19937_64 rng(31);
    for (const char* f : {"catalog/A2.fman", "catalog/flat3d.fman"}) {
        const auto bs = build_biflat(exact_structure(f, 5));
        const Chart ch{bs.primal.coords, bs.primal.p0, 5};
        const auto& L = bs.primal.L;
        check_leibniz(
            ch, [&](const Form<Q>& w) { return fn_dL(w, L); },
            [&](const Form<Q>& w) { return ext_cov_dL(bs.b, L, w); }, rng);
    }
}
