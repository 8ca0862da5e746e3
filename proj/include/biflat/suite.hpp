#pragma once

// Runs the checks appropriate to a parsed description.

#include "biflat/lm_chain.hpp"

#include <array>
#include <functional>

namespace biflat {

struct SuiteOptions {
    int degree = 8;
    int points = 20;
    std::uint64_t seed = 0;
    std::vector<Rational> lambdas;  // empty: sample five
    std::optional<Rational> mu;
    int terms = 4;
};

/// Checks that test a defining axiom of a flat F-manifold with Euler field, one
/// per axiom. Everything else in a report is a consequence or a construction.
inline const std::array<const char*, 11> kAxiomChecks = {
    "fman.commutativity", "fman.associativity", "fman.unit",      "fman.hertling_manin",
    "flat.torsion",       "flat.curvature",     "flat.nabla_c_symmetry", "flat.nabla_e",
    "euler.bracket",      "euler.lie_product",  "euler.linear"};

inline bool is_axiom_check(const std::string& name) {
    for (const char* a : kAxiomChecks)
        if (name == a) return true;
    return false;
}

template <class C>
struct Context {
    ManifoldSpec spec;
    SuiteOptions opts;
    FlatFStructure<C> s;
    std::optional<BiFlatStructure<C>> bs;
    std::optional<DFStructure<C>> df;
    std::string dual_error;
    std::vector<Rational> lambdas;
    std::vector<Rational> mus;
};

template <class C>
Context<C> make_context(const ManifoldSpec& spec, const SuiteOptions& opts) {
    Context<C> ctx;
    ctx.spec = spec;
    ctx.opts = opts;
    ctx.s = build_flat_f<C>(spec, opts.degree);
    try {
        ctx.bs = build_biflat(ctx.s);
    } catch (const SingularAtBasepoint& e) {
        ctx.dual_error = e.what();
    }
    ctx.lambdas = opts.lambdas.empty() ? sample_lambdas(ctx.s.L, 5, opts.seed) : opts.lambdas;
    if (spec.F && ctx.bs) {
        try {
            ctx.df = df_from_prepotential(spec, ctx.s);
        } catch (const SingularAtBasepoint& e) {
            ctx.dual_error = e.what();
        }
    }
    return ctx;
}

namespace detail {

template <class C>
void append(std::vector<CheckReport>& out, std::vector<CheckReport> more) {
    for (auto& r : more) out.push_back(std::move(r));
}

/// mu values: 0, then mu_bar or the user's mu, then seeded values up to three.
template <class C>
std::vector<Rational> choose_mus(const Context<C>& ctx) {
    std::vector<Rational> mus{Rational(0)};
    if (ctx.opts.mu) mus.push_back(*ctx.opts.mu);
    if constexpr (CoeffTraits<C>::exact)
        if (ctx.df && ctx.df->mu_bar && std::find(mus.begin(), mus.end(), *ctx.df->mu_bar) == mus.end())
            mus.push_back(*ctx.df->mu_bar);
    if constexpr (!CoeffTraits<C>::exact)
        if (ctx.df && ctx.df->mu_bar) {
            // Float mu_bar is rounded to a rational with denominator 10^9.
            Rational q(static_cast<long>(std::llround(*ctx.df->mu_bar * 1e9)), 1000000000L);
            q.canonicalize();
            if (std::find(mus.begin(), mus.end(), q) == mus.end()) mus.push_back(q);
        }
    if (mus.size() < 3) {
        auto extra = sample_mus(static_cast<int>(3 - mus.size()), ctx.opts.seed, mus);
        mus.insert(mus.end(), extra.begin(), extra.end());
    }
    return mus;
}

inline CheckReport missing_dual(const std::string& why) {
    return error_report("dual.construction", "dual structure from L = E o", why);
}

}  // namespace detail

template <class C>
std::vector<CheckReport> run_axioms(Context<C>& ctx) {
    std::vector<CheckReport> out;
    const auto& s = ctx.s;
    detail::append<C>(out, check_commutative_associative(s.c));
    out.push_back(check_unit(s.c, s.e));
    out.push_back(check_hm_identity(s.c, ctx.opts.points, ctx.opts.seed));
    detail::append<C>(out, check_flat_f(s));
    detail::append<C>(out, check_euler(s));
    detail::append<C>(out, check_eventual_identity(s));
    out.push_back(check_pencil(s, ctx.lambdas));
    detail::append<C>(out, check_scalar_differentials(s, std::min(ctx.opts.points, 5), ctx.opts.seed));
    return out;
}

template <class C>
std::vector<CheckReport> run_dual(Context<C>& ctx) {
    if (!ctx.bs) return {detail::missing_dual(ctx.dual_error)};
    return check_biflat(*ctx.bs);
}

template <class C>
std::vector<CheckReport> run_df(Context<C>& ctx) {
    std::vector<CheckReport> out;
    if (!ctx.spec.F) return out;
    if (!ctx.df || !ctx.bs) {
        out.push_back(error_report("df.construction", "Dubrovin-Frobenius data", ctx.dual_error));
        return out;
    }
    detail::append<C>(out, check_df(*ctx.df, ctx.s, *ctx.bs));
    auto [mu, rep] = find_mu_bar(*ctx.df, *ctx.bs);
    out.push_back(rep);
    std::vector<Rational> lams(ctx.lambdas.begin(), ctx.lambdas.begin() + std::min<std::size_t>(3, ctx.lambdas.size()));
    detail::append<C>(out, check_df_specialization(*ctx.df, *ctx.bs, lams));
    return out;
}

template <class C>
std::vector<CheckReport> run_gm(Context<C>& ctx) {
    std::vector<CheckReport> out;
    if (!ctx.bs) return {detail::missing_dual(ctx.dual_error)};
    if (ctx.spec.F && ctx.df && !ctx.df->mu_bar) (void)find_mu_bar(*ctx.df, *ctx.bs);
    ctx.mus = detail::choose_mus(ctx);
    const auto& bs = *ctx.bs;
    out.push_back(check_gm_formulas_agree(bs, ctx.lambdas));
    out.push_back(check_gm_extended_agree(bs, ctx.lambdas, ctx.mus));
    auto ft = check_gm_flat_torsionless(bs, ctx.lambdas, ctx.mus);
    const int bound = ctx.s.n * (ctx.opts.degree + 1);
    for (auto& r : ft) r.samples.push_back({"lambda_degree_bound", std::to_string(bound)});
    detail::append<C>(out, std::move(ft));
    out.push_back(check_riem_identity(bs, ctx.lambdas));
    out.push_back(check_resonance_guard(bs, ctx.lambdas));
    return out;
}

template <class C>
std::vector<CheckReport> run_bicomplex(Context<C>& ctx) {
    if (!ctx.bs) return {detail::missing_dual(ctx.dual_error)};
    return check_bicomplex(*ctx.bs, std::min(ctx.opts.points, 5), ctx.opts.seed);
}

template <class C>
std::vector<CheckReport> run_chain(Context<C>& ctx) {
    if (!ctx.bs) return {detail::missing_dual(ctx.dual_error)};
    std::vector<Rational> lams(ctx.lambdas.begin(), ctx.lambdas.begin() + std::min<std::size_t>(2, ctx.lambdas.size()));
    return check_chains(*ctx.bs, ctx.opts.terms, lams);
}

/// Everything: axioms, dual structure, prepotential data, Gauss-Manin family,
/// bicomplex and chains.
template <class C>
std::vector<CheckReport> run_verify(Context<C>& ctx) {
    std::vector<CheckReport> out = run_axioms(ctx);
    detail::append<C>(out, run_dual(ctx));
    if (!ctx.bs) return out;
    detail::append<C>(out, run_df(ctx));
    detail::append<C>(out, run_gm(ctx));
    detail::append<C>(out, run_bicomplex(ctx));
    detail::append<C>(out, run_chain(ctx));
    return out;
}

}  // namespace biflat
