// biflat: command-line front end for the jet-level checks.
//
//   biflat verify  FILE   full suite appropriate to the description
//   biflat gm      FILE   Gauss-Manin family (flatness, formula agreement, identity)
//   biflat chain   FILE   Lenard-Magri chains from the coordinate frame
//   biflat flatsec FILE   flat-section series of the Gauss-Manin connection
//   biflat dual    FILE   dual product and connection
//
// Exit codes: 0 all checks pass, 1 some check fails, 2 input error,
// 3 internal invariant violated.

#include "biflat/biflat.hpp"
#include "biflat/report_json.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace biflat;

namespace {

struct Args {
    std::string command;
    std::string file;
    int degree = 8;
    int points = 20;
    std::uint64_t seed = 0;
    std::string mode;  // empty: exact unless the description needs float
    std::vector<std::string> lambdas;
    std::string mu;
    int terms = 4;
    std::string json;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Rational parse_rational(const std::string& text, const char* what) {
    try {
        Rational q(text);
        q.canonicalize();
        return q;
    } catch (const std::invalid_argument&) {
        throw UsageError(std::string(what) + " must be a rational p/q, got '" + text + "'");
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

SuiteOptions suite_options(const Args& a) {
    if (a.degree < 2) throw UsageError("--degree must be at least 2");
    if (a.points < 1) throw UsageError("--points must be positive");
    if (a.terms < 0) throw UsageError("--terms must be nonnegative");
    SuiteOptions o;
    o.degree = a.degree;
    o.points = a.points;
    o.seed = a.seed;
    o.terms = a.terms;
    for (const auto& l : a.lambdas) {
        Rational q = parse_rational(l, "--lambda");
        if (sgn(q) == 0) throw UsageError("--lambda must be nonzero");
        o.lambdas.push_back(q);
    }
    if (!a.mu.empty()) o.mu = parse_rational(a.mu, "--mu");
    return o;
}

const char* status_tag(Status s) {
    switch (s) {
    case Status::Pass: return "PASS";
    case Status::Fail: return "FAIL";
    case Status::Vacuous: return "VAC ";
    case Status::Error: return "ERR ";
    }
    return "?";
}

void print_reports(const std::vector<CheckReport>& reports) {
    for (const auto& r : reports) {
        std::cout << status_tag(r.status) << "  " << std::left << std::setw(30) << r.name << std::right;
        if (r.residual.exact) std::cout << (r.residual.zero ? "  exact 0" : "  exact nonzero");
        else std::cout << "  max " << std::scientific << std::setprecision(2) << r.residual.max_abs << std::defaultfloat;
        std::cout << "  order " << r.residual.certified_order << "  [" << r.anchor << "]";
        if (!r.detail.empty()) std::cout << "  " << r.detail;
        std::cout << "\n";
    }
    std::size_t pass = 0;
    for (const auto& r : reports) pass += r.passed();
    std::cout << pass << "/" << reports.size() << " checks passed\n";
}

template <class C>
std::string vector_string(const VectorField<C>& X, const FlatFStructure<C>& s) {
    std::string out = "(";
    for (int j = 0; j < s.n; ++j) {
        if (j) out += ", ";
        out += to_string(X[j], s.coords, s.p0);
    }
    return out + ")";
}

template <class C>
std::vector<CheckReport> run_command(const Args& a, const ManifoldSpec& spec, const SuiteOptions& opts) {
    Context<C> ctx = make_context<C>(spec, opts);
    const std::string& cmd = a.command;
    if (cmd == "verify") return run_verify(ctx);
    if (cmd == "gm") return run_gm(ctx);
    if (cmd == "dual") {
        auto out = run_dual(ctx);
        detail::append<C>(out, run_df(ctx));
        return out;
    }
    if (!ctx.bs) return {detail::missing_dual(ctx.dual_error)};
    const auto& bs = *ctx.bs;
    const auto& s = ctx.s;
    if (cmd == "chain") {
        for (int p = 0; p < s.n; ++p) {
            const Chain<C> ch = lm_chain(bs, coordinate_field<C>(s.space, s.n, s.D, p), opts.terms);
            for (int k = 0; k <= ch.terms(); ++k)
                std::cout << "X(" << p + 1 << "," << k << ") = " << vector_string(ch.members[k], s) << "\n";
        }
        return run_chain(ctx);
    }
    // flatsec
    for (int p = 0; p < s.n; ++p) {
        const LaurentVector<C> ser = flat_section_series(bs, coordinate_field<C>(s.space, s.n, s.D, p), opts.terms);
        for (int k = 0; k < ser.terms(); ++k)
            std::cout << "X" << p + 1 << "[lambda^-" << k << "] = " << vector_string(ser.coeffs[k], s) << "\n";
    }
    auto all = run_chain(ctx);
    std::vector<CheckReport> out;
    for (auto& r : all)
        if (r.name == "chain.flat_section" || r.name == "chain.truncation_identity") out.push_back(std::move(r));
    return out;
}

int execute(const Args& a) {
    const SuiteOptions opts = suite_options(a);
    const ManifoldSpec spec = parse_spec(read_file(a.file));
    if (!a.mode.empty() && a.mode != "exact" && a.mode != "float")
        throw UsageError("--mode must be exact or float");
    bool use_float = a.mode == "float" || (a.mode.empty() && spec.force_float && !spec.force_exact);
    std::vector<CheckReport> reports;
    if (!use_float) {
        try {
            reports = run_command<Rational>(a, spec, opts);
        } catch (const JetError& e) {
            if (e.kind() != JetErrorKind::ExpOfNonzeroConstant || a.mode == "exact") throw;
            std::cerr << "warning: " << e.what() << "; switching to float mode\n";
            use_float = true;
        }
    }
    if (use_float) reports = run_command<double>(a, spec, opts);
    print_reports(reports);
    if (!a.json.empty()) {
        std::ofstream out(a.json);
        if (!out) throw UsageError("cannot write " + a.json);
        out << run_to_json(spec.name, use_float ? "float" : "exact", opts.degree, reports).dump(2) << "\n";
    }
    return all_passed(reports) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Jet-level checks for bi-flat F-manifolds"};
    app.require_subcommand(1);
    Args args;
    const std::pair<const char*, const char*> commands[] = {
        {"verify", "run every check that applies to the description"},
        {"gm", "Gauss-Manin connection checks"},
        {"chain", "Lenard-Magri chains from the coordinate frame"},
        {"flatsec", "flat-section series of the Gauss-Manin connection"},
        {"dual", "dual product and dual connection checks"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("file", args.file, "manifold description (.fman)")->required();
        sub->add_option("--degree", args.degree, "jet truncation degree")->capture_default_str();
        sub->add_option("--points", args.points, "number of random test fields")->capture_default_str();
        sub->add_option("--seed", args.seed, "seed for sampled fields and parameters")->capture_default_str();
        sub->add_option("--mode", args.mode, "exact or float");
        sub->add_option("--lambda", args.lambdas, "spectral parameter p/q (repeatable)");
        sub->add_option("--mu", args.mu, "extended family parameter p/q");
        sub->add_option("--terms", args.terms, "chain length / series terms")->capture_default_str();
        sub->add_option("--json", args.json, "write the reports as JSON");
        sub->callback([&args, n = std::string(name)] { args.command = n; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        return execute(args);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << args.file << ":" << e.what() << " (" << to_string(e.kind()) << ")\n";
        return 2;
    } catch (const JetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const SingularAtBasepoint& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DFError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const HypothesisError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ResonanceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IntegrabilityError& e) {
        std::cerr << "check failed: " << e.what() << "\n";
        return 1;
    } catch (const InternalInvariantError& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
