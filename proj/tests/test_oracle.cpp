#include "oracle/oracle_compare.hpp"

#include <gtest/gtest.h>

namespace {

const std::string kCatalog = std::string(BIFLAT_DATA_DIR) + "/catalog/A2.fman";
const std::string kOracle = std::string(BIFLAT_ORACLE_DIR) + "/a2_oracle.json";

TEST(Oracle, A2JetsMatchSympyCoefficientwise) {
    const oracle::Outcome out = oracle::check_a2(kCatalog, kOracle);
    EXPECT_EQ(out.entries, 84u);
    EXPECT_GT(out.coefficients, 1000u);
    for (std::size_t i = 0; i < out.mismatches.size() && i < 10; ++i) ADD_FAILURE() << out.mismatches[i];
    EXPECT_TRUE(out.ok());
}

TEST(Oracle, PerturbedHertlingManinIsNonzeroInOracle) {
    // The frozen file must contain a nonzero entry, otherwise the HM comparison
    // would not discriminate anything.
    const auto orc = oracle::load(kOracle);
    bool nonzero = false;
    for (const auto& e : orc["entries"])
        if (e["quantity"] == "hm_pert" && !e["coeffs"].empty()) nonzero = true;
    EXPECT_TRUE(nonzero);
}

TEST(Oracle, ComparisonDetectsAChangedCoefficient) {
    auto orc = oracle::load(kOracle);
    using namespace biflat;
    const ManifoldSpec spec = oracle::load_spec(kCatalog);
    const auto s = build_flat_f<Rational>(spec, 8);
    const auto bs = build_biflat(s);
    for (auto& e : orc["entries"])
        if (e["quantity"] == "b") {
            e["coeffs"]["0 0"] = "12345";
            oracle::Outcome out;
            const auto ix = e["index"].get<std::vector<int>>();
            oracle::compare(bs.b.at(ix[0], ix[1], ix[2]), e, 4, out);
            EXPECT_FALSE(out.ok());
            break;
        }
}

}  // namespace
