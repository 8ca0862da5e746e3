#pragma once

// Chains X_0, X_1, ... with d_nabla X_{a+1} = d_{L nabla*} X_a, built by
// integrating in a flat chart (a = 0).

#include "biflat/bicomplex.hpp"
#include "biflat/gauss_manin.hpp"

namespace biflat {

template <class C>
struct Chain {
    std::vector<VectorField<C>> members;
    int terms() const { return static_cast<int>(members.size()) - 1; }
};

/// d_nabla d_{L nabla*} X0 = 0.
template <class C>
CheckReport check_seed(const BiFlatStructure<C>& bs, const VectorField<C>& X0) {
    CheckTimer timer;
    ResidualMeter<C> m;
    m.add(d_nabla(bs, d_L_nabla_star(bs, zero_form(X0))));
    return make_report("chain.seed", "seed condition d_nabla d_{L nabla*} X_0 = 0", m, timer);
}

/// R^j_i = L^m_i (d_m X^j + b^j_ml X^l), the right-hand side of d X_next = R.
template <class C>
TensorField<C> chain_rhs(const BiFlatStructure<C>& bs, const VectorField<C>& X) {
    const int n = bs.n();
    const TensorField<C> cov = cov_deriv(bs.b, X);  // at(j, m)
    TensorField<C> R("ud", n, bs.b.space(), std::min(cov.degree(), bs.L().degree()));
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            for (int mm = 0; mm < n; ++mm) Jet<C>::fma(R.at(j, i), bs.L().at(mm, i), cov.at(j, mm));
    return R;
}

/// One step of the recursion. Throws IntegrabilityError when the right-hand
/// side is not closed.
template <class C>
VectorField<C> lm_step(const BiFlatStructure<C>& bs, const VectorField<C>& X) {
    if (!bs.primal.flat_chart) throw HypothesisError("the recursion is integrated in a flat chart (a = 0)");
    const int n = bs.n();
    const TensorField<C> R = chain_rhs(bs, X);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            for (int r = i + 1; r < n; ++r) {
                const Jet<C> curl = jet_partial(R.at(j, i), r) - jet_partial(R.at(j, r), i);
                if (!curl.vanishes())
                    throw IntegrabilityError(j, i, r,
                                             "component " + std::to_string(j + 1) + ": d_" + std::to_string(r + 1) +
                                                 " R_" + std::to_string(i + 1) + " != d_" + std::to_string(i + 1) +
                                                 " R_" + std::to_string(r + 1));
            }
    VectorField<C> next = make_vector<C>(n, bs.b.space(), X.degree(), "chain");
    for (int j = 0; j < n; ++j) {
        std::vector<Jet<C>> comps;
        for (int i = 0; i < n; ++i) comps.push_back(R.at(j, i));
        next[j] = radial_integrate<C>(comps).truncated(X.degree());
        for (int i = 0; i < n; ++i)
            if (!(jet_partial(next[j], i) - R.at(j, i)).vanishes())
                throw InternalInvariantError("integrated chain member does not reproduce its gradient");
    }
    return next;
}

template <class C>
Chain<C> lm_chain(const BiFlatStructure<C>& bs, const VectorField<C>& X0, int K) {
    if (K < 0) throw std::invalid_argument("number of terms must be nonnegative");
    Chain<C> ch;
    ch.members.push_back(X0);
    for (int a = 0; a < K; ++a) ch.members.push_back(lm_step(bs, ch.members.back()));
    return ch;
}

/// One chain per coordinate field.
template <class C>
std::vector<Chain<C>> lm_chains(const BiFlatStructure<C>& bs, int K) {
    std::vector<Chain<C>> out;
    const auto& s = bs.primal;
    for (int p = 0; p < s.n; ++p) out.push_back(lm_chain(bs, coordinate_field<C>(s.space, s.n, s.D, p), K));
    return out;
}

/// d_nabla X_{a+1} = d_{L nabla*} X_a, through the form machinery.
template <class C>
void add_recurrence_residuals(const BiFlatStructure<C>& bs, const Chain<C>& ch, ResidualMeter<C>& m) {
    for (int a = 0; a + 1 < static_cast<int>(ch.members.size()); ++a)
        m.add(d_nabla(bs, zero_form(ch.members[a + 1])) - d_L_nabla_star(bs, zero_form(ch.members[a])));
}

/// Index of the first coefficient at which the chain and the series differ, or -1.
template <class C>
int first_mismatch(const Chain<C>& ch, const LaurentVector<C>& series) {
    const int K = std::min(ch.terms(), series.terms() - 1);
    for (int a = 0; a <= K; ++a)
        if (!(ch.members[a] - series.coeffs[a]).vanishes()) return a;
    return -1;
}

/// Y_0 = 0 and X_a = L Y_a - Y_{a+1}, i.e. Y_a = -sum_{b<a} L^{a-1-b} X_b.
template <class C>
Chain<C> twisted_chain(const BiFlatStructure<C>& bs, const Chain<C>& ch) {
    const int n = bs.n();
    const auto& sp = bs.b.space();
    Chain<C> y;
    y.members.push_back(make_vector<C>(n, sp, ch.members[0].degree(), "twisted"));
    for (int a = 1; a <= ch.terms(); ++a) {
        VectorField<C> acc = make_vector<C>(n, sp, ch.members[0].degree(), "twisted");
        for (int b = 0; b < a; ++b) {
            VectorField<C> v = ch.members[b];
            for (int p = 0; p < a - 1 - b; ++p) v = apply(bs.L(), v);
            acc -= v;
        }
        y.members.push_back(std::move(acc));
    }
    return y;
}

template <class C>
std::vector<CheckReport> check_chains(const BiFlatStructure<C>& bs, int K, const std::vector<Rational>& lambdas) {
    std::vector<CheckReport> out;
    const char* names[] = {"chain.seed", "chain.well_defined", "chain.recurrence", "chain.flat_section",
                           "chain.truncation_identity", "chain.twisted"};
    if (!bs.primal.flat_chart) {
        for (const char* nm : names) {
            CheckReport r;
            r.name = nm;
            r.anchor = "chain recursion";
            r.status = Status::Vacuous;
            r.detail = "not attempted: the chart is not flat (a != 0)";
            out.push_back(r);
        }
        return out;
    }
    const auto& s = bs.primal;
    std::vector<VectorField<C>> frame;
    for (int p = 0; p < s.n; ++p) frame.push_back(coordinate_field<C>(s.space, s.n, s.D, p));
    {
        CheckTimer timer;
        ResidualMeter<C> m;
        for (const auto& X0 : frame) m.add(d_nabla(bs, d_L_nabla_star(bs, zero_form(X0))));
        out.push_back(make_report(names[0], "seed condition d_nabla d_{L nabla*} X_0 = 0", m, timer));
    }
    std::vector<Chain<C>> chains;
    {
        CheckTimer timer;
        CheckReport r;
        r.name = names[1];
        r.anchor = "each recursion step is integrable";
        try {
            for (const auto& X0 : frame) chains.push_back(lm_chain(bs, X0, K));
            r.status = Status::Pass;
            r.residual.zero = true;
            r.residual.components = chains.size() * static_cast<std::size_t>(K);
            r.residual.certified_order = s.D - 2;
        } catch (const IntegrabilityError& e) {
            r.status = Status::Fail;
            r.residual.zero = false;
            r.detail = e.what();
        }
        r.residual.exact = CoeffTraits<C>::exact;
        r.samples = {{"terms", std::to_string(K)}};
        r.elapsed_ms = timer.elapsed_ms();
        out.push_back(r);
        if (r.status != Status::Pass) {
            for (int q = 2; q < 6; ++q) out.push_back(error_report(names[q], "chain recursion", "no chain: " + r.detail));
            return out;
        }
    }
    {
        CheckTimer timer;
        ResidualMeter<C> m;
        for (const auto& ch : chains) add_recurrence_residuals(bs, ch, m);
        out.push_back(make_report(names[2], "d_nabla X_{a+1} = d_{L nabla*} X_a", m, timer));
    }
    std::vector<LaurentVector<C>> series;
    {
        CheckTimer timer;
        ResidualMeter<C> m;
        std::string detail;
        for (std::size_t p = 0; p < frame.size(); ++p) {
            series.push_back(flat_section_series(bs, frame[p], K));
            for (int a = 0; a <= K; ++a) m.add(chains[p].members[a] - series[p].coeffs[a]);
            const int bad = first_mismatch(chains[p], series[p]);
            if (bad >= 0) detail += "seed " + std::to_string(p + 1) + " differs at order " + std::to_string(bad) + "; ";
        }
        out.push_back(make_report(names[3], "chain members are the coefficients of Gauss-Manin flat sections", m,
                                  timer, detail));
    }
    {
        CheckTimer timer;
        ResidualMeter<C> m;
        for (const auto& q : lambdas)
            for (const auto& ser : series) {
                const auto [lhs, rhs] = truncation_identity_sides(bs, ser, CoeffTraits<C>::from(q));
                m.add(lhs - rhs);
            }
        auto r = make_report(names[4], "truncated series is flat up to lambda^{-K}", m, timer);
        detail::add_lambda_samples(r, lambdas);
        out.push_back(r);
    }
    {
        CheckTimer timer;
        ResidualMeter<C> m;
        for (const auto& ch : chains) {
            const Chain<C> y = twisted_chain(bs, ch);
            for (int a = 0; a < ch.terms(); ++a)
                m.add(ch.members[a] - (apply(bs.L(), y.members[a]) - y.members[a + 1]));
        }
        out.push_back(make_report(names[5], "twisted chain X_a = L Y_a - Y_{a+1}", m, timer));
    }
    return out;
}

}  // namespace biflat
