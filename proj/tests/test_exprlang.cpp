#include "biflat/biflat.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

using namespace biflat;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ParseErrorKind parse_error_kind(const std::string& text) {
    try {
        parse_spec(text);
    } catch (const ParseError& e) {
        return e.kind();
    }
    ADD_FAILURE() << "accepted:\n" << text;
    return ParseErrorKind::Syntax;
}

const std::vector<std::string> kT = {"t"};
const std::vector<std::string> kT12 = {"t1", "t2"};

}  // namespace

TEST(ParseSpec, SmallestLegalSpec) {
    const ManifoldSpec s = parse_spec("dim 1\ncoords t\nc[1,1,1]=1\ne=(1)\nE=(t)\nbasepoint (1)");
    EXPECT_EQ(s.dim, 1);
    ASSERT_EQ(s.coords, kT);
    ASSERT_EQ(s.c.size(), 1u);
    const Expr& c111 = s.c.at({0, 0, 0});
    ASSERT_TRUE(c111.is_rational());
    EXPECT_EQ(c111.value(), 1);
    ASSERT_EQ(s.E.size(), 1u);
    EXPECT_EQ(s.E[0].kind(), ExprKind::Coord);
    EXPECT_EQ(s.E[0].coord_index(), 0);
    EXPECT_EQ(s.basepoint, std::vector<Rational>{Rational(1)});
    EXPECT_FALSE(s.has_prepotential());
    EXPECT_FALSE(s.has_a());
}

TEST(ParseSpec, TensorIndexOutOfRange) {
    EXPECT_EQ(parse_error_kind("dim 1\ncoords t\nc[1,1,1]=1\nc[1,1,2]=2\ne=(1)\nE=(t)\nbasepoint (1)"),
              ParseErrorKind::IndexOutOfRange);
}

TEST(ParseSpec, PrepotentialWithExp) {
    const ManifoldSpec s = parse_spec(
        "dim 2\ncoords t1 t2\nF = 1/2*t1^2*t2 + exp(t2)\neta[1,2]=1\ne=(1,0)\nE=(t1,2)\nbasepoint (0,0)");
    ASSERT_TRUE(s.F);
    const Expr& F = *s.F;
    ASSERT_EQ(F.kind(), ExprKind::Add);
    EXPECT_EQ(F.lhs().kind(), ExprKind::Mul);
    ASSERT_EQ(F.rhs().kind(), ExprKind::Exp);
    EXPECT_EQ(F.rhs().operand().kind(), ExprKind::Coord);
    EXPECT_EQ(F.rhs().operand().coord_index(), 1);
    // eta is stored symmetrically
    EXPECT_EQ(s.eta[0][1], 1);
    EXPECT_EQ(s.eta[1][0], 1);
}

TEST(ParseExpr, Precedence) {
    const Expr a = parse_expr("1/2*t^2", kT);
    ASSERT_EQ(a.kind(), ExprKind::Mul);
    ASSERT_TRUE(a.lhs().is_rational());
    EXPECT_EQ(a.lhs().value(), Rational(1, 2));
    EXPECT_EQ(a.rhs().kind(), ExprKind::Pow);
    EXPECT_EQ(a.rhs().exponent(), 2);

    const Expr b = parse_expr("-t+3", kT);
    ASSERT_EQ(b.kind(), ExprKind::Add);
    ASSERT_EQ(b.lhs().kind(), ExprKind::Neg);
    EXPECT_EQ(b.lhs().operand().kind(), ExprKind::Coord);
    ASSERT_TRUE(b.rhs().is_rational());
    EXPECT_EQ(b.rhs().value(), 3);

    const Expr c = parse_expr("exp(t1*t2)", kT12);
    ASSERT_EQ(c.kind(), ExprKind::Exp);
    EXPECT_EQ(c.operand().kind(), ExprKind::Mul);
}

TEST(ParseExpr, PowerBindsTighterThanUnaryMinus) {
    const Expr e = parse_expr("-t^2", kT);
    ASSERT_EQ(e.kind(), ExprKind::Neg);
    EXPECT_EQ(e.operand().kind(), ExprKind::Pow);
}

TEST(ParseExpr, LeftAssociative) {
    const Expr e = parse_expr("t-1-2", kT);
    ASSERT_EQ(e.kind(), ExprKind::Sub);
    EXPECT_EQ(e.lhs().kind(), ExprKind::Sub);
    ASSERT_TRUE(e.rhs().is_rational());
    EXPECT_EQ(e.rhs().value(), 2);
}

TEST(ParseExpr, UndeclaredCoordinate) {
    try {
        parse_expr("t1 + x", kT12);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.kind(), ParseErrorKind::UndeclaredCoordinate);
    }
}

TEST(ParseExpr, SyntaxErrorCarriesPosition) {
    try {
        parse_expr("t1 * (t2 +", kT12);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.kind(), ParseErrorKind::Syntax);
        EXPECT_EQ(e.line(), 1);
        EXPECT_GT(e.column(), 1);
    }
}

TEST(ParseExpr, RoundTripFixedCases) {
    for (const char* s : {"1/2*t1^2*t2 + 1/72*t2^4", "-t1+3", "exp(t1*t2) - (t1 - t2)/(1 + t2^3)",
                          "--t1", "t1/t2/3", "-(t1*t2)^2", "2/3*t2", "exp(-t1)^3"}) {
        const Expr e = parse_expr(s, kT12);
        const std::string printed = to_string(e, kT12);
        EXPECT_TRUE(structurally_equal(e, parse_expr(printed, kT12))) << s << " printed as " << printed;
    }
}

TEST(ParseExpr, RoundTripRandomTrees) {
    std::mt19937 rng(11);
    std::function<Expr(int)> gen = [&](int depth) -> Expr {
        const int pick = depth == 0 ? static_cast<int>(rng() % 2) : static_cast<int>(rng() % 9);
        switch (pick) {
        case 0: return Expr::rational(Rational(static_cast<long>(rng() % 7), static_cast<long>(1 + rng() % 4)));
        case 1: return Expr::coord(static_cast<int>(rng() % 2));
        case 2: return Expr::neg(gen(depth - 1));
        case 3: return Expr::add(gen(depth - 1), gen(depth - 1));
        case 4: return Expr::sub(gen(depth - 1), gen(depth - 1));
        case 5: return Expr::mul(gen(depth - 1), gen(depth - 1));
        case 6: return Expr::div(gen(depth - 1), gen(depth - 1));
        case 7: return Expr::pow(gen(depth - 1), static_cast<int>(rng() % 4));
        default: return Expr::exp(gen(depth - 1));
        }
    };
    for (int k = 0; k < 300; ++k) {
        Expr e = gen(4);
        const std::string printed = to_string(e, kT12);
        EXPECT_TRUE(structurally_equal(e, parse_expr(printed, kT12))) << printed;
    }
}

TEST(ParseExpr, DifferentiateMatchesJetPartial) {
    const std::vector<Rational> p0 = {Rational(1, 2), Rational(-2)};
    for (const char* s : {"1/2*t1^2*t2 + 1/72*t2^4", "(t1 - t2)/(1 + t2^2)", "t1^3*t2^2 - 4*t1", "exp(t1 - 1/2)*t2"}) {
        const Expr e = parse_expr(s, kT12);
        for (int v = 0; v < 2; ++v) {
            const Jet<Rational> lhs = jet_eval<Rational>(differentiate(e, v), p0, 5).truncated(4);
            const Jet<Rational> rhs = jet_partial(jet_eval<Rational>(e, p0, 5), v);
            EXPECT_TRUE(lhs == rhs) << s << " d/d" << kT12[v];
        }
    }
}

TEST(ParseSpec, MalformedSuite) {
    const std::string tail = "e=(1)\nE=(t)\nbasepoint (1)";
    struct Case {
        const char* what;
        std::string text;
        ParseErrorKind kind;
    };
    const std::vector<Case> cases = {
        {"missing =", "dim 1\ncoords t\nc[1,1,1] 1\n" + tail, ParseErrorKind::Syntax},
        {"unbalanced paren", "dim 1\ncoords t\nc[1,1,1]=(1\n" + tail, ParseErrorKind::Syntax},
        {"undeclared name", "dim 1\ncoords t\nc[1,1,1]=x\n" + tail, ParseErrorKind::UndeclaredCoordinate},
        {"duplicate entry", "dim 1\ncoords t\nc[1,1,1]=1\nc[1,1,1]=2\n" + tail, ParseErrorKind::DuplicateEntry},
        {"index zero", "dim 1\ncoords t\nc[0,1,1]=1\n" + tail, ParseErrorKind::IndexOutOfRange},
        {"coords count", "dim 2\ncoords t\nc[1,1,1]=1\n" + tail, ParseErrorKind::DimensionMismatch},
        {"vector length", "dim 1\ncoords t\nc[1,1,1]=1\ne=(1,0)\nE=(t)\nbasepoint (1)", ParseErrorKind::DimensionMismatch},
        {"basepoint length", "dim 1\ncoords t\nc[1,1,1]=1\ne=(1)\nE=(t)\nbasepoint (1,2)", ParseErrorKind::DimensionMismatch},
        {"c and F", "dim 1\ncoords t\nc[1,1,1]=1\nF=t^3/6\neta[1,1]=1\n" + tail, ParseErrorKind::ConflictingStructure},
        {"no E", "dim 1\ncoords t\nc[1,1,1]=1\ne=(1)\nbasepoint (1)", ParseErrorKind::MissingField},
        {"no basepoint", "dim 1\ncoords t\nc[1,1,1]=1\ne=(1)\nE=(t)", ParseErrorKind::MissingField},
        {"F without eta", "dim 1\ncoords t\nF=t^3/6\n" + tail, ParseErrorKind::MissingField},
        {"singular eta", "dim 2\ncoords t1 t2\nF=t1^2*t2/2\neta[1,1]=1\ne=(1,0)\nE=(t1,t2)\nbasepoint (1,1)",
         ParseErrorKind::InvalidMetric},
        {"trailing garbage", "dim 1\ncoords t\nc[1,1,1]=1 2\n" + tail, ParseErrorKind::Syntax},
    };
    for (const Case& c : cases) EXPECT_EQ(parse_error_kind(c.text), c.kind) << c.what;
}

TEST(ParseSpec, CommentsAndBlankLines) {
    const ManifoldSpec s = parse_spec(
        "# leading comment\n\nmanifold \"x\"  # trailing\ndim 1\ncoords t\n\nc[1,1,1] = 1 # one\ne=(1)\nE=(t)\nbasepoint (1)\n");
    EXPECT_EQ(s.name, "x");
    EXPECT_EQ(s.c.size(), 1u);
}

TEST(ParseSpec, BundledFilesParse) {
    int count = 0;
    for (const char* sub : {"catalog", "mutants"})
        for (const auto& entry : std::filesystem::directory_iterator(std::filesystem::path(BIFLAT_DATA_DIR) / sub)) {
            if (entry.path().extension() != ".fman") continue;
            ++count;
            EXPECT_NO_THROW(parse_spec(slurp(entry.path()))) << entry.path();
        }
    EXPECT_EQ(count, 11);
}

TEST(ParseSpec, CatalogFlags) {
    const ManifoldSpec cp1 = parse_spec(slurp(std::filesystem::path(BIFLAT_DATA_DIR) / "catalog/CP1.fman"));
    EXPECT_TRUE(cp1.force_float);
    EXPECT_TRUE(cp1.has_prepotential());
    const ManifoldSpec a2 = parse_spec(slurp(std::filesystem::path(BIFLAT_DATA_DIR) / "catalog/A2.fman"));
    EXPECT_FALSE(a2.force_float);
    EXPECT_EQ(a2.basepoint, (std::vector<Rational>{Rational(1), Rational(3)}));
}
