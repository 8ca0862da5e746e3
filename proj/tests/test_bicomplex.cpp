#include "support.hpp"

#include <gtest/gtest.h>

using namespace support;

namespace {

const std::vector<std::string> kBiFlatCatalog = {"catalog/toy1d.fman", "catalog/toy1d_df.fman", "catalog/A2.fman",
                                                 "catalog/flat3d.fman"};

BiFlatStructure<Q> load_biflat(const std::string& file, int D = 7) { return build_biflat(exact_structure(file, D)); }

BiFlatStructure<Q> perturbed(const std::string& file) {
    auto bs = load_biflat(file);
    TensorField<Q> b = bs.b;
    const int last = bs.n() - 1;
    b.at(0, 0, 0) += shifted(bs.primal.space, bs.primal.D, last) * Q(1, 2);
    b.at(last, 0, last) += shifted(bs.primal.space, bs.primal.D, 0) * shifted(bs.primal.space, bs.primal.D, 0);
    return with_dual_connection(bs, b);
}

bool same(const TensorField<Q>& a, const TensorField<Q>& b) { return (a - b).vanishes(); }

}  // namespace

TEST(BicomplexDefect, VanishesOnCatalog) {
    for (const auto& f : kBiFlatCatalog) {
        const auto bs = load_biflat(f);
        EXPECT_TRUE(bicomplex_defect(bs).vanishes()) << f;
        const auto parts = bicomplex_defect_parts(bs);
        EXPECT_TRUE(parts.curvature.vanishes()) << f;
        EXPECT_TRUE(parts.phi.vanishes()) << f;
        EXPECT_TRUE(parts.torsion.vanishes()) << f;
    }
}

TEST(BicomplexCheck, Toy1dIsVacuous) {
    // Nothing of form degree 2 exists in one dimension.
    const auto rs = check_bicomplex(load_biflat("catalog/toy1d.fman"), 2, 0);
    for (const auto& r : rs) {
        EXPECT_NE(r.status, Status::Fail) << r.name;
        EXPECT_NE(r.status, Status::Error) << r.name;
    }
    EXPECT_EQ(report(rs, "bicomplex.anticommutator").status, Status::Vacuous);
}

TEST(BicomplexCheck, A2PassesNonVacuously) {
    const auto rs = check_bicomplex(load_biflat("catalog/A2.fman"), 2, 5);
    EXPECT_EQ(rs.size(), 5u);
    // The reduction compares 3-forms, which vanish in two dimensions.
    for (const auto& r : rs)
        EXPECT_EQ(r.status, r.name == "bicomplex.reduction" ? Status::Vacuous : Status::Pass) << r.name << " " << r.detail;
    EXPECT_GT(report(rs, "bicomplex.anticommutator").residual.components, 0u);
}

TEST(BicomplexCheck, Flat3dPasses) {
    const auto rs = check_bicomplex(load_biflat("catalog/flat3d.fman", 5), 1, 2);
    EXPECT_TRUE(all_pass(rs)) << failures(rs);
    for (const auto& r : rs) EXPECT_EQ(r.status, Status::Pass) << r.name;
}

TEST(BicomplexDefect, PerturbedDualConnection) {
    for (const char* f : {"catalog/A2.fman", "catalog/flat3d.fman"}) {
        const auto bs = perturbed(f);
        const auto D = bicomplex_defect(bs);
        EXPECT_FALSE(D.vanishes()) << f;
        const auto parts = bicomplex_defect_parts(bs);
        EXPECT_TRUE(same(D, parts.total())) << f;
        // a is untouched, so only the Phi part moves.
        EXPECT_TRUE(parts.curvature.vanishes());
        EXPECT_TRUE(parts.torsion.vanishes());
        const auto rs = check_bicomplex(bs, 1, 3);
        EXPECT_EQ(report(rs, "bicomplex.anticommutator").status, Status::Fail) << f;
        EXPECT_EQ(report(rs, "bicomplex.coordinate_form").status, Status::Pass) << f;
        EXPECT_NE(report(rs, "bicomplex.reduction").status, Status::Fail) << f;
    }
}

TEST(BicomplexDefect, NablaCMutantAttributedToNablaC) {
    const auto bs = build_biflat(exact_structure("mutants/broken_nabla_c.fman", 6));
    const auto parts = bicomplex_defect_parts(bs);
    EXPECT_TRUE(parts.curvature.vanishes());
    EXPECT_TRUE(parts.torsion.vanishes());
    EXPECT_FALSE(parts.phi.vanishes());
    const auto [cpart, epart] = phi_part_split(bs);
    EXPECT_FALSE(cpart.vanishes());
    EXPECT_TRUE(epart.vanishes());
    EXPECT_TRUE(same(parts.phi, cpart + epart));
    EXPECT_FALSE(bicomplex_defect(bs).vanishes());
}

TEST(BicomplexDefect, CurvatureMutantAttributedToCurvature) {
    const auto bs = build_biflat(exact_structure("mutants/broken_curvature.fman"));
    const auto parts = bicomplex_defect_parts(bs);
    EXPECT_FALSE(parts.curvature.vanishes());
    EXPECT_TRUE(parts.torsion.vanishes());
    EXPECT_TRUE(same(bicomplex_defect(bs), parts.total()));
    EXPECT_FALSE(bicomplex_defect(bs).vanishes());
}

TEST(BicomplexDefect, CoordinateFormOnMutants) {
    for (const char* f : {"mutants/broken_nabla_c.fman", "mutants/broken_curvature.fman", "mutants/broken_torsion.fman",
                          "mutants/broken_unit.fman", "mutants/broken_lie_product.fman"}) {
        const auto bs = build_biflat(exact_structure(f, 6));
        const auto parts = bicomplex_defect_parts(bs);
        EXPECT_TRUE(same(bicomplex_defect(bs), parts.total())) << f;
        const auto [cpart, epart] = phi_part_split(bs);
        EXPECT_TRUE(same(parts.phi, cpart + epart)) << f;
    }
}

TEST(BicomplexDefect, IsTensorialInTheForm) {
    // D(X (x) w) = D(X) ^ w for random sections and scalar 1-forms, on a
    // structure where D is not zero.
    const auto bs = perturbed("catalog/A2.fman");
    const auto& s = bs.primal;
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 3; ++trial) {
        const Form<Q> X = zero_form(random_vector_field<Q>(s.space, s.n, s.D, rng));
        const auto w0 = random_vector_field<Q>(s.space, s.n, s.D, rng);
        const Form<Q> w = scalar_one_form(std::vector<J>{w0[0], w0[1]});
        const Form<Q> DX = anticommutator(bs, X);
        ASSERT_FALSE(DX.vanishes());
        EXPECT_TRUE((anticommutator(bs, wedge(X, w)) - wedge(DX, w)).vanishes()) << trial;
        // Also C-linear in the section itself.
        const J f = random_jet(s.space, s.D, rng, 2);
        const Form<Q> fX = wedge(scalar_form(s.n, f), X);
        EXPECT_TRUE((anticommutator(bs, fX) - wedge(scalar_form(s.n, f), DX)).vanishes()) << trial;
    }
}

TEST(BicomplexDifferentials, SquaresVanishOnCatalog) {
    for (const auto& f : kBiFlatCatalog) {
        const auto bs = load_biflat(f, 6);
        const auto& s = bs.primal;
        std::mt19937_64 rng(3);
        const Form<Q> X = zero_form(random_vector_field<Q>(s.space, s.n, s.D, rng));
        EXPECT_TRUE(d_nabla(bs, d_nabla(bs, X)).vanishes()) << f;
        EXPECT_TRUE(d_L_nabla_star(bs, d_L_nabla_star(bs, X)).vanishes()) << f;
    }
}

TEST(ScalarDifferentials, CatalogPasses) {
    for (const auto& f : kBiFlatCatalog) {
        const auto rs = check_scalar_differentials(exact_structure(f, 6), 2, 1);
        EXPECT_TRUE(all_pass(rs)) << f << failures(rs);
    }
}
