#pragma once

// Gauss-Manin connections of a bi-flat structure and their checks.

#include "biflat/structures.hpp"

#include <set>

namespace biflat {

/// P = L - lambda I.
template <class C>
TensorField<C> shifted_operator(const TensorField<C>& L, const C& lambda) {
    TensorField<C> P = L;
    for (int i = 0; i < L.dim(); ++i) P.at(i, i) -= Jet<C>::constant(L.space(), L.degree(), lambda);
    return P;
}

/// True when L(p0) - lambda I is singular.
template <class C>
bool is_resonant(const TensorField<C>& L, const C& lambda) {
    const C det = determinant(constant_matrix(shifted_operator(L, lambda)));
    if constexpr (CoeffTraits<C>::exact) return CoeffTraits<C>::is_zero(det);
    else return std::fabs(det) <= kFloatTolerance;
}

/// (L - lambda I)^{-1}; throws ResonanceError at an eigenvalue of L(p0).
template <class C>
TensorField<C> gm_resolvent(const TensorField<C>& L, const C& lambda) {
    if (is_resonant(L, lambda))
        throw ResonanceError(CoeffTraits<C>::str(lambda),
                             "lambda = " + CoeffTraits<C>::str(lambda) + " is an eigenvalue of L at the base point");
    return endo_inverse(shifted_operator(L, lambda), "L - lambda I");
}

template <class C>
const TensorField<C>& gm_resolvent(const BiFlatStructure<C>& bs, const C& lambda) {
    const std::string key = CoeffTraits<C>::str(lambda);
    auto it = bs.resolvents->find(key);
    if (it == bs.resolvents->end()) it = bs.resolvents->emplace(key, gm_resolvent(bs.L(), lambda)).first;
    return it->second;
}

namespace detail {

/// base^j_hk + lambda M^s_h K^j_sk.
template <class C>
TensorField<C> resolvent_shift(const TensorField<C>& base, const TensorField<C>& M, const C& lambda,
                               const TensorField<C>& K) {
    const int n = base.dim();
    TensorField<C> G("udd", n, base.space(), std::min({base.degree(), M.degree(), K.degree()}), "gm");
    for (int j = 0; j < n; ++j)
        for (int h = 0; h < n; ++h)
            for (int k = 0; k < n; ++k) {
                Jet<C> acc = Jet<C>::zero(G.space(), G.degree());
                for (int s = 0; s < n; ++s) Jet<C>::fma(acc, M.at(s, h), K.at(j, s, k));
                acc *= lambda;
                acc += base.at(j, h, k);
                G.at(j, h, k) = std::move(acc);
            }
    return G;
}

/// K^j_sk = sign * X^l_sk Y^j_l, for X a (1,2) field and Y an endomorphism field at(j, l).
template <class C>
TensorField<C> contract_product(const TensorField<C>& X, const TensorField<C>& Y, bool negate) {
    const int n = X.dim();
    TensorField<C> K("udd", n, X.space(), std::min(X.degree(), Y.degree()));
    for (int j = 0; j < n; ++j)
        for (int s = 0; s < n; ++s)
            for (int k = 0; k < n; ++k) {
                Jet<C>& acc = K.at(j, s, k);
                for (int l = 0; l < n; ++l) Jet<C>::fma(acc, X.at(l, s, k), Y.at(j, l));
                if (negate) acc = -acc;
            }
    return K;
}

}  // namespace detail

/// The three coordinate expressions for the Gauss-Manin connection at lambda.
template <class C>
struct GMForms {
    TensorField<C> from_difference;  // b + lambda M (b - a)
    TensorField<C> from_unit;        // b + lambda M c nabla* e
    TensorField<C> from_euler;       // b - lambda M c* nabla E
};

template <class C>
GMForms<C> gm_all_forms(const BiFlatStructure<C>& bs, const C& lambda) {
    const TensorField<C>& M = gm_resolvent(bs, lambda);
    GMForms<C> f;
    f.from_difference = detail::resolvent_shift(bs.b, M, lambda, bs.b - bs.a());
    const TensorField<C> De = cov_deriv(bs.b, bs.primal.e);
    f.from_unit = detail::resolvent_shift(bs.b, M, lambda, detail::contract_product(bs.c(), De, false));
    f.from_euler = detail::resolvent_shift(bs.b, M, lambda, detail::contract_product(bs.cstar, bs.nablaE, true));
    return f;
}

template <class C>
TensorField<C> gm_christoffels(const BiFlatStructure<C>& bs, const C& lambda) {
    const TensorField<C>& M = gm_resolvent(bs, lambda);
    return detail::resolvent_shift(bs.b, M, lambda, bs.b - bs.a());
}

/// The two forms of the mu-extended family.
template <class C>
std::pair<TensorField<C>, TensorField<C>> gm_extended_forms(const BiFlatStructure<C>& bs, const C& lambda,
                                                            const C& mu) {
    const int n = bs.n();
    const TensorField<C>& M = gm_resolvent(bs, lambda);
    const TensorField<C> B = bs.b + mu * bs.cstar;
    TensorField<C> first = detail::resolvent_shift(B, M, lambda, B - bs.a());
    TensorField<C> shifted = bs.nablaE;
    for (int i = 0; i < n; ++i) shifted.at(i, i) -= Jet<C>::constant(shifted.space(), shifted.degree(), mu);
    TensorField<C> second = detail::resolvent_shift(B, M, lambda, detail::contract_product(bs.cstar, shifted, true));
    return {std::move(first), std::move(second)};
}

template <class C>
TensorField<C> gm_extended(const BiFlatStructure<C>& bs, const C& lambda, const C& mu) {
    return gm_extended_forms(bs, lambda, mu).first;
}

// ---------------------------------------------------------------------------
// Sampling.

/// Eigenvalues of L(p0) that are rational (exact mode only).
inline std::vector<Rational> rational_eigenvalues(const TensorField<Rational>& L) {
    return rational_roots(characteristic_polynomial(constant_matrix(L)));
}

/// Seeded non-resonant, nonzero, distinct lambdas p/q with |p| <= 9, 1 <= q <= 7.
template <class C>
std::vector<Rational> sample_lambdas(const TensorField<C>& L, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x6c616d6264617300ULL);
    std::uniform_int_distribution<int> num(-9, 9), den(1, 7);
    std::vector<Rational> out;
    std::set<Rational> seen;
    for (int guard = 0; static_cast<int>(out.size()) < count && guard < 10000; ++guard) {
        Rational q(num(rng), den(rng));
        q.canonicalize();
        if (sgn(q) == 0 || seen.count(q)) continue;
        if (is_resonant(L, CoeffTraits<C>::from(q))) continue;
        seen.insert(q);
        out.push_back(q);
    }
    return out;
}

/// Seeded mu values p/q with |p| <= 5, 1 <= q <= 4, excluding those in `avoid`.
inline std::vector<Rational> sample_mus(int count, std::uint64_t seed, const std::vector<Rational>& avoid) {
    std::mt19937_64 rng(seed ^ 0x6d75000000000000ULL);
    std::uniform_int_distribution<int> num(-5, 5), den(1, 4);
    std::set<Rational> seen(avoid.begin(), avoid.end());
    std::vector<Rational> out;
    for (int guard = 0; static_cast<int>(out.size()) < count && guard < 10000; ++guard) {
        Rational q(num(rng), den(rng));
        q.canonicalize();
        if (seen.count(q)) continue;
        seen.insert(q);
        out.push_back(q);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Checks.

namespace detail {
inline void add_lambda_samples(CheckReport& r, const std::vector<Rational>& lambdas) {
    for (const auto& l : lambdas) r.samples.push_back({"lambda", l.get_str()});
}
inline void add_mu_samples(CheckReport& r, const std::vector<Rational>& mus) {
    for (const auto& m : mus) r.samples.push_back({"mu", m.get_str()});
}
}  // namespace detail

template <class C>
CheckReport check_gm_formulas_agree(const BiFlatStructure<C>& bs, const std::vector<Rational>& lambdas) {
    CheckTimer timer;
    ResidualMeter<C> m;
    for (const auto& q : lambdas) {
        const auto f = gm_all_forms(bs, CoeffTraits<C>::from(q));
        m.add(f.from_difference - f.from_unit);
        m.add(f.from_difference - f.from_euler);
    }
    auto r = make_report("gm.formulas_agree", "Gauss-Manin connection: three coordinate forms", m, timer);
    detail::add_lambda_samples(r, lambdas);
    return r;
}

template <class C>
CheckReport check_gm_extended_agree(const BiFlatStructure<C>& bs, const std::vector<Rational>& lambdas,
                                    const std::vector<Rational>& mus) {
    CheckTimer timer;
    ResidualMeter<C> m;
    for (const auto& q : lambdas) {
        const C lam = CoeffTraits<C>::from(q);
        for (const auto& u : mus) {
            const auto [first, second] = gm_extended_forms(bs, lam, CoeffTraits<C>::from(u));
            m.add(first - second);
            if (sgn(u) == 0) m.add(first - gm_christoffels(bs, lam));
        }
    }
    auto r = make_report("gm.extended_agree", "extended Gauss-Manin family: two coordinate forms", m, timer);
    detail::add_lambda_samples(r, lambdas);
    detail::add_mu_samples(r, mus);
    return r;
}

/// Curvature and torsion of the extended family for every (lambda, mu) pair.
template <class C>
std::vector<CheckReport> check_gm_flat_torsionless(const BiFlatStructure<C>& bs, const std::vector<Rational>& lambdas,
                                                   const std::vector<Rational>& mus) {
    CheckTimer timer;
    ResidualMeter<C> mt, mr;
    for (const auto& q : lambdas)
        for (const auto& u : mus) {
            const TensorField<C> G = gm_extended(bs, CoeffTraits<C>::from(q), CoeffTraits<C>::from(u));
            mt.add(torsion(G));
            mr.add(riemann(G));
        }
    auto rt = make_report("gm.torsion", "Gauss-Manin connections are torsion-free", mt, timer);
    auto rr = make_report("gm.curvature", "Gauss-Manin connections are flat", mr, timer);
    for (auto* r : {&rt, &rr}) {
        detail::add_lambda_samples(*r, lambdas);
        detail::add_mu_samples(*r, mus);
    }
    return {rt, rr};
}

/// Both sides of the curvature identity for the Gauss-Manin connection at lambda,
/// at(j, k, h, t):
///   lhs = R^GM(P d_h, P d_t) d_k
///   rhs = R*(L d_h, L d_t) d_k - lambda [R(L d_h, d_t) + R(d_h, L d_t)] d_k + lambda^2 R(d_h, d_t) d_k
///         + lambda [(nabla_t Phi)^j_hk - (nabla_h Phi)^j_tk] - lambda T^m_ht Phi^j_mk
///         - lambda N^m_ht M^s_m Delta^j_sk
/// with Delta = b - a, Phi^j_hk = L^l_h Delta^j_lk, R, T, nabla from a, R* from b
/// and N the Nijenhuis torsion of L.
template <class C>
std::pair<TensorField<C>, TensorField<C>> riem_identity_sides(const BiFlatStructure<C>& bs, const C& lambda) {
    const int n = bs.n();
    const auto& sp = bs.b.space();
    const TensorField<C>& L = bs.L();
    const TensorField<C> P = shifted_operator(L, lambda);
    const TensorField<C>& M = gm_resolvent(bs, lambda);
    const TensorField<C> Delta = bs.b - bs.a();
    const TensorField<C> G = detail::resolvent_shift(bs.b, M, lambda, Delta);
    const TensorField<C> Rgm = riemann(G);
    const TensorField<C> R = riemann(bs.a());
    const TensorField<C> Rs = riemann(bs.b);
    const TensorField<C> T = torsion(bs.a());
    const TensorField<C> N = nijenhuis(L);
    TensorField<C> Phi("udd", n, sp, std::min(L.degree(), Delta.degree()));
    for (int j = 0; j < n; ++j)
        for (int h = 0; h < n; ++h)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) Jet<C>::fma(Phi.at(j, h, k), L.at(l, h), Delta.at(j, l, k));
    const TensorField<C> DPhi = cov_deriv_12(bs.a(), Phi);  // DPhi.at(j, t, h, k) = (nabla_t Phi)^j_hk
    // MDelta^j_mk = M^s_m Delta^j_sk
    TensorField<C> MDelta("udd", n, sp, std::min(M.degree(), Delta.degree()));
    for (int j = 0; j < n; ++j)
        for (int mm = 0; mm < n; ++mm)
            for (int k = 0; k < n; ++k)
                for (int s = 0; s < n; ++s) Jet<C>::fma(MDelta.at(j, mm, k), M.at(s, mm), Delta.at(j, s, k));

    const int dl = Rgm.degree();
    const int dr = std::min({Rs.degree(), R.degree(), DPhi.degree(), N.degree()});
    TensorField<C> lhs("uddd", n, sp, dl), rhs("uddd", n, sp, dr);
    const C lam2 = lambda * lambda;
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
            for (int h = 0; h < n; ++h)
                for (int t = 0; t < n; ++t) {
                    Jet<C>& l = lhs.at(j, k, h, t);
                    Jet<C>& r = rhs.at(j, k, h, t);
                    Jet<C> mixed = Jet<C>::zero(sp, dr);
                    for (int x = 0; x < n; ++x)
                        for (int y = 0; y < n; ++y) {
                            Jet<C>::fma(l, Rgm.at(j, k, x, y), P.at(x, h) * P.at(y, t));
                            Jet<C>::fma(r, Rs.at(j, k, x, y), L.at(x, h) * L.at(y, t));
                        }
                    for (int x = 0; x < n; ++x) {
                        Jet<C>::fma(mixed, R.at(j, k, x, t), L.at(x, h));
                        Jet<C>::fma(mixed, R.at(j, k, h, x), L.at(x, t));
                    }
                    r -= mixed * lambda;
                    r += R.at(j, k, h, t) * lam2;
                    Jet<C> rest = DPhi.at(j, t, h, k) - DPhi.at(j, h, t, k);
                    for (int mm = 0; mm < n; ++mm) {
                        rest -= T.at(mm, h, t) * Phi.at(j, mm, k);
                        rest -= N.at(mm, h, t) * MDelta.at(j, mm, k);
                    }
                    r += rest * lambda;
                }
    return {std::move(lhs), std::move(rhs)};
}

template <class C>
CheckReport check_riem_identity(const BiFlatStructure<C>& bs, const std::vector<Rational>& lambdas) {
    CheckTimer timer;
    ResidualMeter<C> m;
    for (const auto& q : lambdas) {
        const auto [lhs, rhs] = riem_identity_sides(bs, CoeffTraits<C>::from(q));
        m.add(lhs - rhs);
    }
    auto r = make_report("gm.riem_identity", "curvature identity for the Gauss-Manin connection", m, timer);
    detail::add_lambda_samples(r, lambdas);
    return r;
}

/// Singular values of lambda are exactly the roots of the characteristic
/// polynomial of L(p0), and the constructor refuses them.
template <class C>
CheckReport check_resonance_guard(const BiFlatStructure<C>& bs, const std::vector<Rational>& lambdas) {
    CheckTimer timer;
    CheckReport r;
    r.name = "gm.resonance_guard";
    r.anchor = "Gauss-Manin connection undefined on the spectrum of L";
    if constexpr (!CoeffTraits<C>::exact) {
        r.status = Status::Vacuous;
        r.detail = "spectrum is not certified in float mode";
        r.residual.exact = false;
        r.residual.zero = true;
    } else {
        const auto poly = characteristic_polynomial(constant_matrix(bs.L()));
        const auto roots = rational_roots(poly);
        std::size_t bad = 0, compared = 0;
        std::string detail;
        for (const auto& ev : roots) {
            ++compared;
            bool threw = false;
            try {
                (void)gm_resolvent(bs.L(), ev);
            } catch (const ResonanceError&) {
                threw = true;
            }
            if (!threw) {
                ++bad;
                detail += "eigenvalue " + ev.get_str() + " accepted; ";
            }
            r.samples.push_back({"eigenvalue", ev.get_str()});
        }
        for (const auto& q : lambdas) {
            ++compared;
            const bool root = sgn(evaluate_polynomial(poly, q)) == 0;
            if (root != is_resonant(bs.L(), q)) {
                ++bad;
                detail += "determinant test disagrees at " + q.get_str() + "; ";
            }
        }
        r.residual.exact = true;
        r.residual.zero = bad == 0;
        r.residual.max_abs = static_cast<double>(bad);
        r.residual.components = compared;
        r.residual.certified_order = 0;
        r.status = compared == 0 ? Status::Vacuous : (bad == 0 ? Status::Pass : Status::Fail);
        r.detail = detail;
    }
    r.elapsed_ms = timer.elapsed_ms();
    return r;
}

// ---------------------------------------------------------------------------
// Dubrovin-Frobenius specialization.

/// Gamma_(lambda) = Gamma_g + lambda (L - lambda I)^{-1} (Gamma_g - Gamma_eta).
template <class C>
TensorField<C> df_periods_connection(const DFStructure<C>& df, const TensorField<C>& L, const C& lambda) {
    const TensorField<C> M = gm_resolvent(L, lambda);
    return detail::resolvent_shift(df.gamma_g, M, lambda, df.gamma_g - df.gamma_eta);
}

/// The contravariant periods system rewritten as a connection:
///   eta_ih (g^hj - lambda eta^hj) = (L - lambda I)^j_i, and
///   Gamma^j_hk = M^i_h (-eta_ia Gamma_g^aj_k + lambda eta_ia Gamma_eta^aj_k)
/// with contravariant symbols Gamma^aj_k = -g^al Gamma^j_lk.
template <class C>
std::pair<TensorField<C>, TensorField<C>> df_periods_system(const DFStructure<C>& df, const TensorField<C>& L,
                                                            const C& lambda) {
    const int n = L.dim();
    const auto& sp = L.space();
    const int D = df.g.degree();
    const TensorField<C> eta = constant_tensor<C>(df.eta, "dd", sp, D);
    const TensorField<C> eta_up = constant_tensor<C>(df.eta_inv, "uu", sp, D);
    // Leading coefficient, compared against L - lambda I.
    TensorField<C> lead("ud", n, sp, D);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            for (int h = 0; h < n; ++h)
                Jet<C>::fma(lead.at(j, i), eta.at(i, h), df.g.at(h, j) - eta_up.at(h, j) * lambda);
    auto contravariant = [&](const TensorField<C>& metric_up, const TensorField<C>& G) {
        TensorField<C> out("uud", n, sp, std::min(metric_up.degree(), G.degree()));
        for (int a = 0; a < n; ++a)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    Jet<C>& acc = out.at(a, j, k);
                    for (int l = 0; l < n; ++l) Jet<C>::fma(acc, metric_up.at(a, l), G.at(j, l, k));
                    acc = -acc;
                }
        return out;
    };
    const TensorField<C> Gg = contravariant(df.g, df.gamma_g);
    const TensorField<C> Ge = contravariant(eta_up, df.gamma_eta);
    TensorField<C> coeff("udd", n, sp, Gg.degree());  // coeff.at(j, i, k)
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                for (int a = 0; a < n; ++a) {
                    const Jet<C> t = Ge.at(a, j, k) * lambda - Gg.at(a, j, k);
                    Jet<C>::fma(coeff.at(j, i, k), eta.at(i, a), t);
                }
    const TensorField<C> M = endo_inverse(lead, "periods system leading coefficient");
    TensorField<C> G("udd", n, sp, std::min(M.degree(), coeff.degree()));
    for (int j = 0; j < n; ++j)
        for (int h = 0; h < n; ++h)
            for (int k = 0; k < n; ++k)
                for (int i = 0; i < n; ++i) Jet<C>::fma(G.at(j, h, k), M.at(i, h), coeff.at(j, i, k));
    return {std::move(lead), std::move(G)};
}

template <class C>
std::vector<CheckReport> check_df_specialization(const DFStructure<C>& df, const BiFlatStructure<C>& bs,
                                                 const std::vector<Rational>& lambdas) {
    std::vector<CheckReport> out;
    if (!df.mu_bar) {
        out.push_back(error_report("df.specialization", "extended family at mu_bar is the periods connection",
                                   "mu_bar was not found"));
        out.push_back(error_report("df.periods_system", "periods system as a flatness system", "mu_bar was not found"));
        return out;
    }
    {
        CheckTimer timer;
        ResidualMeter<C> m;
        for (const auto& q : lambdas) {
            const C lam = CoeffTraits<C>::from(q);
            m.add(gm_extended(bs, lam, *df.mu_bar) - df_periods_connection(df, bs.L(), lam));
        }
        auto r = make_report("df.specialization", "extended family at mu_bar is the periods connection", m, timer);
        detail::add_lambda_samples(r, lambdas);
        r.samples.push_back({"mu_bar", CoeffTraits<C>::str(*df.mu_bar)});
        out.push_back(r);
    }
    {
        CheckTimer timer;
        ResidualMeter<C> m;
        for (const auto& q : lambdas) {
            const C lam = CoeffTraits<C>::from(q);
            const auto [lead, G] = df_periods_system(df, bs.L(), lam);
            m.add(lead - shifted_operator(bs.L(), lam));
            m.add(G - df_periods_connection(df, bs.L(), lam));
        }
        auto r = make_report("df.periods_system", "periods system as a flatness system", m, timer);
        detail::add_lambda_samples(r, lambdas);
        out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Flat sections as a series in 1/lambda.

/// Coefficients X_p of lambda^{-p}; all share the jet space.
template <class C>
struct LaurentVector {
    std::vector<VectorField<C>> coeffs;
    int terms() const { return static_cast<int>(coeffs.size()); }
};

/// Zero out monomials that involve any variable after v.
template <class C>
Jet<C> restrict_after(const Jet<C>& a, int v) {
    Jet<C> r = a;
    const JetSpace& sp = a.space();
    for (std::size_t m = 0; m < r.size(); ++m)
        for (int w = v + 1; w < sp.nvars(); ++w)
            if (sp.exponent(m, w) != 0) {
                r[m] = CoeffTraits<C>::from_int(0);
                break;
            }
    return r;
}

/// f with d_v f = R_v, f(p0) = 0, by integrating along the coordinate axes one
/// after another. Assumes R is closed.
template <class C>
Jet<C> axis_integrate(const std::vector<Jet<C>>& R) {
    const int n = static_cast<int>(R.size());
    int d = R[0].degree();
    for (const auto& r : R) d = std::min(d, r.degree());
    Jet<C> f = Jet<C>::zero(R[0].space_ptr(), d + 1);
    for (int v = 0; v < n; ++v) f += jet_integrate(restrict_after(R[v].truncated(d), v), v);
    return f;
}

/// Flat sections X = sum_p X_p lambda^{-p} of the Gauss-Manin connection, for
/// a = 0, from the expansion lambda (L - lambda I)^{-1} = -sum_m L^m lambda^{-m}:
///   d_h X^j_p = sum_{m=1..p} (L^m)^s_h Delta^j_sk X^k_{p-m}.
template <class C>
LaurentVector<C> flat_section_series(const BiFlatStructure<C>& bs, const VectorField<C>& X0, int K) {
    if (!bs.primal.flat_chart) throw HypothesisError("flat-section series needs a = 0");
    const int n = bs.n();
    const auto& sp = bs.b.space();
    const TensorField<C> Delta = bs.b - bs.a();
    // LD[m-1].at(j, h, k) = (L^m)^s_h Delta^j_sk
    std::vector<TensorField<C>> LD;
    TensorField<C> Lm = bs.L();
    LaurentVector<C> out;
    out.coeffs.push_back(X0);
    for (int p = 1; p <= K; ++p) {
        if (p > 1) Lm = compose(Lm, bs.L());
        TensorField<C> t("udd", n, sp, std::min(Lm.degree(), Delta.degree()));
        for (int j = 0; j < n; ++j)
            for (int h = 0; h < n; ++h)
                for (int k = 0; k < n; ++k)
                    for (int s = 0; s < n; ++s) Jet<C>::fma(t.at(j, h, k), Lm.at(s, h), Delta.at(j, s, k));
        LD.push_back(std::move(t));
        VectorField<C> Xp = make_vector<C>(n, sp, X0.degree(), "flat_section");
        for (int j = 0; j < n; ++j) {
            std::vector<Jet<C>> R;
            for (int h = 0; h < n; ++h) {
                Jet<C> acc = Jet<C>::zero(sp, X0.degree());
                for (int m = 1; m <= p; ++m)
                    for (int k = 0; k < n; ++k) Jet<C>::fma(acc, LD[m - 1].at(j, h, k), out.coeffs[p - m][k]);
                R.push_back(std::move(acc));
            }
            Xp[j] = axis_integrate(R);
        }
        out.coeffs.push_back(std::move(Xp));
    }
    return out;
}

/// P (nabla^GM X) = lambda^{-K} L (nabla* X_K) for the truncation X of the
/// series, at a numeric lambda. Both sides at(j, h).
template <class C>
std::pair<TensorField<C>, TensorField<C>> truncation_identity_sides(const BiFlatStructure<C>& bs,
                                                                    const LaurentVector<C>& X, const C& lambda) {
    const int n = bs.n();
    const int K = X.terms() - 1;
    const C inv = CoeffTraits<C>::from_int(1) / lambda;
    VectorField<C> sum = X.coeffs[0];
    C w = CoeffTraits<C>::from_int(1);
    for (int p = 1; p <= K; ++p) {
        w *= inv;
        sum += w * X.coeffs[p];
    }
    const TensorField<C> G = gm_christoffels(bs, lambda);
    const TensorField<C> P = shifted_operator(bs.L(), lambda);
    const TensorField<C> cov = cov_deriv(G, sum);  // at(j, s)
    const TensorField<C> covK = cov_deriv(bs.b, X.coeffs[K]);
    TensorField<C> lhs("ud", n, bs.b.space(), std::min(cov.degree(), P.degree()));
    TensorField<C> rhs("ud", n, bs.b.space(), std::min(covK.degree(), bs.L().degree()));
    for (int j = 0; j < n; ++j)
        for (int h = 0; h < n; ++h)
            for (int s = 0; s < n; ++s) {
                Jet<C>::fma(lhs.at(j, h), P.at(s, h), cov.at(j, s));
                Jet<C>::fma(rhs.at(j, h), bs.L().at(s, h), covK.at(j, s));
            }
    rhs *= w;
    return {std::move(lhs), std::move(rhs)};
}

}  // namespace biflat
