// Acceptance run: one PASS/FAIL line per criterion, exit 0 iff all pass.
//
//   acceptance [DATA_DIR [ORACLE_DIR]]

#include "biflat/biflat.hpp"
#include "oracle/oracle_compare.hpp"

#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace biflat;

namespace {

constexpr double kFloatTol = 1e-10;
constexpr int kDegree = 8;
constexpr int kMinOrder = 6;
constexpr int kTerms = 4;
constexpr std::uint64_t kSeed = 0;

// Checks evaluated at the base point only; they carry no jet order.
const std::set<std::string> kBasepointChecks = {"gm.resonance_guard"};

std::string data_dir = BIFLAT_DATA_DIR;
std::string oracle_dir = BIFLAT_ORACLE_DIR;

ManifoldSpec load(const std::string& rel) {
    std::ifstream in(data_dir + "/" + rel);
    if (!in) throw std::runtime_error("cannot open " + data_dir + "/" + rel);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_spec(ss.str());
}

SuiteOptions options() {
    SuiteOptions o;
    o.degree = kDegree;
    o.seed = kSeed;
    o.terms = kTerms;
    return o;
}

const CheckReport* find(const std::vector<CheckReport>& reps, const std::string& name) {
    for (const auto& r : reps)
        if (r.name == name) return &r;
    return nullptr;
}

bool residual_ok(const CheckReport& r) {
    if (r.status == Status::Vacuous) return true;
    if (r.status != Status::Pass) return false;
    return r.residual.exact ? r.residual.zero : r.residual.max_abs <= kFloatTol;
}

struct Entry {
    std::string file;
    bool exact = true;
    std::vector<CheckReport> reports;
    std::vector<Rational> lambdas, mus;
    std::optional<Rational> mu_bar;
    bool has_df = false;
};

template <class C>
void run_entry(Entry& e) {
    Context<C> ctx = make_context<C>(load("catalog/" + e.file), options());
    e.reports = run_verify(ctx);
    e.lambdas = ctx.lambdas;
    e.mus = ctx.mus;
    e.has_df = ctx.df.has_value();
    if (ctx.df && ctx.df->mu_bar) {
        if constexpr (CoeffTraits<C>::exact) e.mu_bar = *ctx.df->mu_bar;
        else {
            Rational q(static_cast<long>(std::llround(*ctx.df->mu_bar * 1e9)), 1000000000L);
            q.canonicalize();
            e.mu_bar = q;
        }
    }
}

struct Line {
    bool pass = true;
    std::vector<std::string> notes;
    void fail(const std::string& why) {
        pass = false;
        notes.push_back(why);
    }
};

void print(int id, const Line& l, const std::string& summary) {
    std::cout << "criterion " << id << ": " << (l.pass ? "PASS" : "FAIL") << "  " << summary << "\n";
    for (const auto& n : l.notes) std::cout << "    " << n << "\n";
}

std::string fmt(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

// 1. Axiom suite on the catalog.
Line criterion1(std::vector<Entry>& entries, std::string& summary) {
    Line l;
    std::size_t checks = 0, vacuous = 0;
    double worst = 0;
    int min_order = 1 << 20;
    for (auto& e : entries) {
        if (e.exact) run_entry<Rational>(e);
        else run_entry<double>(e);
        for (const auto& r : e.reports) {
            ++checks;
            if (r.status == Status::Vacuous) {
                ++vacuous;
                continue;
            }
            if (!residual_ok(r)) l.fail(e.file + ": " + r.name + " " + to_string(r.status) + " " + r.detail);
            if (!r.residual.exact) worst = std::max(worst, r.residual.max_abs);
            if (kBasepointChecks.count(r.name)) continue;
            min_order = std::min(min_order, r.residual.certified_order);
            if (r.residual.certified_order < kMinOrder)
                l.fail(e.file + ": " + r.name + " certified only to order " + std::to_string(r.residual.certified_order));
        }
    }
    summary = std::to_string(entries.size()) + " entries, " + std::to_string(checks) + " checks (" +
              std::to_string(vacuous) + " vacuous), min certified order " + std::to_string(min_order) +
              ", worst float residual " + fmt(worst);
    return l;
}

// 2. Gauss-Manin flatness on 5 lambdas and 3 mu per entry.
Line criterion2(const std::vector<Entry>& entries, std::string& summary) {
    Line l;
    for (const auto& e : entries) {
        if (e.lambdas.size() != 5) l.fail(e.file + ": " + std::to_string(e.lambdas.size()) + " lambdas");
        if (e.mus.size() != 3) l.fail(e.file + ": " + std::to_string(e.mus.size()) + " mu values");
        if (e.has_df && (!e.mu_bar || std::find(e.mus.begin(), e.mus.end(), *e.mu_bar) == e.mus.end()))
            l.fail(e.file + ": mu_bar missing from the mu samples");
        for (const char* name : {"gm.torsion", "gm.curvature", "gm.formulas_agree", "gm.extended_agree"}) {
            const CheckReport* r = find(e.reports, name);
            if (!r) l.fail(e.file + ": no " + name);
            else if (r->status != Status::Pass || !residual_ok(*r)) l.fail(e.file + ": " + name + " " + to_string(r->status));
            else if (e.exact && !r->residual.zero) l.fail(e.file + ": " + name + " not exactly zero");
        }
    }
    summary = "R^GM = T^GM = 0 and formula agreement on " + std::to_string(entries.size()) +
              " entries x 5 lambda x 3 mu (mu_bar included for prepotential entries)";
    return l;
}

// Perturbed structures used by criteria 3 and 4: targeted changes of A2 and
// flat3d, and the mutants whose axiom the converse theorem concludes.
struct Perturbed {
    std::string label;
    BiFlatStructure<Rational> bs;
};

std::vector<Perturbed> perturbed_inputs() {
    std::vector<Perturbed> out;
    for (const std::string f : {"A2", "flat3d"}) {
        const auto s = build_flat_f<Rational>(load("catalog/" + f + ".fman"), kDegree);
        const int n = s.n;
        auto t = [&](int v) { return Jet<Rational>::variable(s.space, kDegree, v, s.p0[v]); };
        {
            auto bs = build_biflat(s);
            TensorField<Rational> b = bs.b;
            b.at(0, n - 1, n - 1) += t(0);
            out.push_back({f + " with b^1_nn += t1", with_dual_connection(bs, b)});
        }
        {
            auto p = s;
            p.a.at(n - 1, n - 1, n - 1) += t(0);
            p.flat_chart = false;
            out.push_back({f + " with curved nabla (a^n_nn += t1)", build_biflat(p)});
        }
        {
            auto p = s;
            p.E[n - 1] += t(n - 1) * t(n - 1);
            p.L = multiplication_operator(p.c, p.E);
            out.push_back({f + " with nonlinear E (E^n += t_n^2)", build_biflat(p)});
        }
        {
            auto p = s;
            p.c.at(0, n - 1, n - 1) += t(0);
            p.L = multiplication_operator(p.c, p.E);
            out.push_back({f + " with asymmetric nabla c (c^1_nn += t1)", build_biflat(p)});
        }
    }
    for (const std::string m : {"broken_curvature", "broken_linear", "broken_nabla_c"})
        out.push_back({"mutant " + m, build_biflat(build_flat_f<Rational>(load("mutants/" + m + ".fman"), kDegree))});
    return out;
}

// 3. The curvature identity holds on bi-flat and on perturbed inputs.
Line criterion3(const std::vector<Entry>& entries, const std::vector<Perturbed>& perturbed, std::string& summary) {
    Line l;
    for (const auto& e : entries) {
        const CheckReport* r = find(e.reports, "gm.riem_identity");
        if (!r || !residual_ok(*r) || r->status != Status::Pass) l.fail(e.file + ": gm.riem_identity");
    }
    std::size_t nonzero = 0;
    for (const auto& p : perturbed) {
        bool sides_nonzero = false;
        for (const auto& q : sample_lambdas(p.bs.L(), 2, kSeed)) {
            const auto [lhs, rhs] = riem_identity_sides(p.bs, Rational(q));
            if (!(lhs - rhs).vanishes()) l.fail(p.label + ": LHS != RHS at lambda " + q.get_str());
            if (!lhs.vanishes()) sides_nonzero = true;
        }
        nonzero += sides_nonzero;
    }
    if (nonzero == 0) l.fail("no perturbed input has a nonzero Gauss-Manin curvature");
    summary = "exact on " + std::to_string(entries.size()) + " catalog entries and " +
              std::to_string(perturbed.size()) + " perturbed inputs (" + std::to_string(nonzero) +
              " with nonzero sides)";
    return l;
}

// 4. Bicomplex on A2 and flat3d, and the converse direction.
Line criterion4(const std::vector<Entry>& entries, const std::vector<Perturbed>& perturbed, std::string& summary) {
    Line l;
    for (const auto& e : entries) {
        if (e.file != "A2.fman" && e.file != "flat3d.fman") continue;
        for (const char* name : {"bicomplex.d_nabla_sq", "bicomplex.dL_sq", "bicomplex.anticommutator"}) {
            const CheckReport* r = find(e.reports, name);
            if (!r || r->status != Status::Pass || !r->residual.zero || r->residual.components == 0)
                l.fail(e.file + ": " + name + " not an exact nonvacuous pass");
        }
    }
    for (const auto& p : perturbed)
        if (bicomplex_defect(p.bs).vanishes()) l.fail(p.label + ": anticommutator vanishes");
    // Torsion, unit and Euler axioms are hypotheses of the converse theorem; the
    // defect is not expected to see them. Reported for information only.
    std::string outside;
    for (const std::string m : {"broken_torsion", "broken_unit", "broken_lie_product"}) {
        const auto bs = build_biflat(build_flat_f<Rational>(load("mutants/" + m + ".fman"), kDegree));
        outside += " " + m + (bicomplex_defect(bs).vanishes() ? "=0" : "!=0");
    }
    summary = "d^2 = 0 and D = 0 on A2, flat3d; D != 0 on " + std::to_string(perturbed.size()) +
              " perturbations (outside the converse hypotheses:" + outside + ")";
    return l;
}

// 5. Chains equal flat-section coefficients; toy1d closed form.
Line criterion5(std::string& summary) {
    Line l;
    std::size_t compared = 0;
    for (const std::string f : {"toy1d", "A2"}) {
        const auto s = build_flat_f<Rational>(load("catalog/" + f + ".fman"), kDegree);
        const auto bs = build_biflat(s);
        for (int p = 0; p < s.n; ++p) {
            const auto X0 = coordinate_field<Rational>(s.space, s.n, kDegree, p);
            const Chain<Rational> ch = lm_chain(bs, X0, kTerms);
            const LaurentVector<Rational> ser = flat_section_series(bs, X0, kTerms);
            for (int k = 0; k <= kTerms; ++k) {
                ++compared;
                if (!(ch.members[k] - ser.coeffs[k]).vanishes())
                    l.fail(f + " seed " + std::to_string(p + 1) + ": chain and series differ at order " + std::to_string(k));
            }
        }
        if (f == "toy1d") {
            // X(t; lambda) = (t - lambda)/(1 - lambda) = 1 + sum_k (1 - t) lambda^-k
            const Jet<Rational> one = Jet<Rational>::constant(s.space, kDegree, Rational(1));
            const Jet<Rational> t = Jet<Rational>::variable(s.space, kDegree, 0, s.p0[0]);
            const Chain<Rational> ch = lm_chain(bs, coordinate_field<Rational>(s.space, 1, kDegree, 0), 3);
            for (int k = 0; k <= 3; ++k) {
                const Jet<Rational> want = k == 0 ? one : one - t;
                if (!(ch.members[k][0] - want).is_exact_zero())
                    l.fail("toy1d chain member " + std::to_string(k) + " is " + to_string(ch.members[k][0], s.coords, s.p0));
            }
        }
    }
    summary = std::to_string(compared) + " chain members equal flat-section coefficients (K = 4); toy1d chain is 1, 1-t, 1-t, 1-t";
    return l;
}

// 6. Prepotential specialization.
Line criterion6(const std::vector<Entry>& entries, std::string& summary) {
    Line l;
    std::string mus;
    for (const auto& e : entries) {
        if (e.file != "toy1d_df.fman" && e.file != "A2.fman") continue;
        for (const char* name : {"df.mu_bar", "df.specialization", "df.periods_system", "df.intersection_form"}) {
            const CheckReport* r = find(e.reports, name);
            if (!r || r->status != Status::Pass || !r->residual.zero) l.fail(e.file + ": " + name);
        }
        const CheckReport* sp = find(e.reports, "df.specialization");
        std::size_t nl = 0;
        if (sp)
            for (const auto& [k, v] : sp->samples) nl += k == "lambda";
        if (nl != 3) l.fail(e.file + ": df.specialization used " + std::to_string(nl) + " lambdas");
        mus += " " + e.file.substr(0, e.file.size() - 5) + ":" + (e.mu_bar ? e.mu_bar->get_str() : "none");
    }
    summary = "mu_bar found (" + mus.substr(1) + "), extended family equals the prepotential form for 3 lambda, L = g eta";
    return l;
}

// 7. Independent sympy oracle on A2.
Line criterion7(std::string& summary) {
    Line l;
    const oracle::Outcome out = oracle::check_a2(data_dir + "/catalog/A2.fman", oracle_dir + "/a2_oracle.json", kDegree);
    if (!out.ok()) l.fail(std::to_string(out.mismatches.size()) + " mismatching coefficients");
    for (std::size_t i = 0; i < out.mismatches.size() && i < 5; ++i) l.notes.push_back(out.mismatches[i]);
    summary = std::to_string(out.entries) + " jets / " + std::to_string(out.coefficients) +
              " coefficients (degree <= 4) match the sympy oracle";
    return l;
}

// 8. Mutants caught by exactly their own axiom check.
Line criterion8(std::string& summary) {
    Line l;
    const std::pair<const char*, const char*> mutants[] = {
        {"broken_torsion", "flat.torsion"},       {"broken_curvature", "flat.curvature"},
        {"broken_nabla_c", "flat.nabla_c_symmetry"}, {"broken_unit", "fman.unit"},
        {"broken_linear", "euler.linear"},        {"broken_lie_product", "euler.lie_product"},
    };
    for (const auto& [file, axiom] : mutants) {
        Context<Rational> ctx = make_context<Rational>(load(std::string("mutants/") + file + ".fman"), options());
        std::vector<std::string> failing;
        for (const auto& r : run_axioms(ctx))
            if (is_axiom_check(r.name) && !r.passed()) failing.push_back(r.name + (r.status == Status::Fail ? "" : "(error)"));
        if (failing != std::vector<std::string>{axiom}) {
            std::string got;
            for (const auto& f : failing) got += " " + f;
            l.fail(std::string(file) + ": expected only " + axiom + ", failing:" + (got.empty() ? " none" : got));
        }
    }
    summary = "6 mutants, each failing exactly its axiom check among " + std::to_string(kAxiomChecks.size());
    return l;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1) data_dir = argv[1];
    if (argc > 2) oracle_dir = argv[2];
    std::cout << "acceptance: degree " << kDegree << ", seed " << kSeed << ", float tolerance " << kFloatTol
              << ", minimum certified order " << kMinOrder << "\n";
    std::vector<Entry> entries = {{"toy1d.fman"}, {"toy1d_df.fman"}, {"A2.fman"}, {"CP1.fman", false}, {"flat3d.fman"}};
    bool all = true;
    auto guarded = [&](int id, const std::function<Line(std::string&)>& f) {
        std::string summary;
        Line l;
        try {
            l = f(summary);
        } catch (const std::exception& e) {
            l.fail(std::string("exception: ") + e.what());
        }
        print(id, l, summary);
        all = all && l.pass;
    };
    guarded(1, [&](std::string& s) { return criterion1(entries, s); });
    guarded(2, [&](std::string& s) { return criterion2(entries, s); });
    std::vector<Perturbed> perturbed;
    try {
        perturbed = perturbed_inputs();
    } catch (const std::exception& e) {
        std::cout << "perturbed inputs: " << e.what() << "\n";
    }
    guarded(3, [&](std::string& s) { return criterion3(entries, perturbed, s); });
    guarded(4, [&](std::string& s) { return criterion4(entries, perturbed, s); });
    guarded(5, criterion5);
    guarded(6, [&](std::string& s) { return criterion6(entries, s); });
    guarded(7, criterion7);
    guarded(8, criterion8);
    return all ? 0 : 1;
}
