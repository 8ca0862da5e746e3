#pragma once

// The pair of differentials d_nabla and d_{L nabla*} on tangent-valued forms.

#include "biflat/structures.hpp"

namespace biflat {

template <class C>
Form<C> d_nabla(const BiFlatStructure<C>& bs, const Form<C>& w) { return ext_cov_d(bs.a(), w); }

template <class C>
Form<C> d_L_nabla_star(const BiFlatStructure<C>& bs, const Form<C>& w) { return ext_cov_dL(bs.b, bs.L(), w); }

/// d_nabla d_{L nabla*} + d_{L nabla*} d_nabla.
template <class C>
Form<C> anticommutator(const BiFlatStructure<C>& bs, const Form<C>& w) {
    return d_nabla(bs, d_L_nabla_star(bs, w)) + d_L_nabla_star(bs, d_nabla(bs, w));
}

/// Scalar 1-form with the given components.
template <class C>
Form<C> scalar_one_form(const std::vector<Jet<C>>& comps) {
    const int n = static_cast<int>(comps.size());
    Form<C> f(n, 1, 1, comps[0].space_ptr(), comps[0].degree());
    for (int i = 0; i < n; ++i) f.at(0, 1u << i) = comps[i];
    return f;
}

template <class C>
Form<C> coordinate_covector(const SpacePtr& space, int n, int D, int m) {
    std::vector<Jet<C>> comps(n, Jet<C>::zero(space, D));
    comps[m] = Jet<C>::constant(space, D, CoeffTraits<C>::from_int(1));
    return scalar_one_form(comps);
}

/// Anticommutator applied to the frame d_k, as a tensor at(j, k, x, y).
template <class C>
TensorField<C> bicomplex_defect(const BiFlatStructure<C>& bs) {
    const int n = bs.n();
    const auto& sp = bs.b.space();
    const int D = bs.primal.D;
    TensorField<C> out("uddd", n, sp, D);
    int deg = D;
    for (int k = 0; k < n; ++k) {
        const Form<C> f = anticommutator(bs, zero_form(coordinate_field<C>(sp, n, D, k)));
        deg = std::min(deg, f.certified_degree());
        for (int x = 0; x < n; ++x)
            for (int y = 0; y < n; ++y)
                for (int j = 0; j < n; ++j) out.at(j, k, x, y) = f.eval(j, {x, y});
    }
    return out;
}

/// Coordinate expression of the defect, split into its sources:
///   curvature  R^j_{k x l} L^l_y + R^j_{k l y} L^l_x
///   phi        (nabla_x Phi)^j_yk - (nabla_y Phi)^j_xk,  Phi^j_hk = L^l_h (b - a)^j_lk
///   torsion    T^m_xy Phi^j_mk
/// with R, T, nabla those of a.
template <class C>
struct DefectParts {
    TensorField<C> curvature;
    TensorField<C> phi;
    TensorField<C> torsion;
    TensorField<C> total() const { return curvature + phi + torsion; }
};

template <class C>
DefectParts<C> bicomplex_defect_parts(const BiFlatStructure<C>& bs) {
    const int n = bs.n();
    const auto& sp = bs.b.space();
    const TensorField<C>& L = bs.L();
    const TensorField<C> Delta = bs.b - bs.a();
    const TensorField<C> R = riemann(bs.a());
    const TensorField<C> T = torsion(bs.a());
    TensorField<C> Phi("udd", n, sp, std::min(L.degree(), Delta.degree()));
    for (int j = 0; j < n; ++j)
        for (int h = 0; h < n; ++h)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) Jet<C>::fma(Phi.at(j, h, k), L.at(l, h), Delta.at(j, l, k));
    const TensorField<C> DPhi = cov_deriv_12(bs.a(), Phi);  // at(j, x, y, k) = (nabla_x Phi)^j_yk
    DefectParts<C> p{TensorField<C>("uddd", n, sp, std::min(R.degree(), L.degree())),
                     TensorField<C>("uddd", n, sp, DPhi.degree()),
                     TensorField<C>("uddd", n, sp, std::min(T.degree(), Phi.degree()))};
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
            for (int x = 0; x < n; ++x)
                for (int y = 0; y < n; ++y) {
                    for (int l = 0; l < n; ++l) {
                        Jet<C>::fma(p.curvature.at(j, k, x, y), R.at(j, k, x, l), L.at(l, y));
                        Jet<C>::fma(p.curvature.at(j, k, x, y), R.at(j, k, l, y), L.at(l, x));
                        Jet<C>::fma(p.torsion.at(j, k, x, y), T.at(l, x, y), Phi.at(j, l, k));
                    }
                    p.phi.at(j, k, x, y) = DPhi.at(j, x, y, k) - DPhi.at(j, y, x, k);
                }
    return p;
}

/// For the constructed dual connection Phi^j_hk = -c^s_hk nabla_s E^j, so the
/// phi part separates into a nabla c term and a nabla^2 E term.
template <class C>
std::pair<TensorField<C>, TensorField<C>> phi_part_split(const BiFlatStructure<C>& bs) {
    const int n = bs.n();
    const auto& sp = bs.b.space();
    const TensorField<C> Dc = cov_deriv_12(bs.a(), bs.c());  // at(s, x, y, k) = (nabla_x c)^s_yk
    const TensorField<C> DDE = second_cov_deriv(bs.a(), bs.primal.E);  // at(j, x, s)
    TensorField<C> cpart("uddd", n, sp, std::min(Dc.degree(), bs.nablaE.degree()));
    TensorField<C> epart("uddd", n, sp, std::min(DDE.degree(), bs.c().degree()));
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
            for (int x = 0; x < n; ++x)
                for (int y = 0; y < n; ++y)
                    for (int s = 0; s < n; ++s) {
                        cpart.at(j, k, x, y) -= (Dc.at(s, x, y, k) - Dc.at(s, y, x, k)) * bs.nablaE.at(j, s);
                        epart.at(j, k, x, y) -= bs.c().at(s, y, k) * DDE.at(j, x, s);
                        Jet<C>::fma(epart.at(j, k, x, y), bs.c().at(s, x, k), DDE.at(j, y, s));
                    }
    return {std::move(cpart), std::move(epart)};
}

/// Test sections: coordinate fields followed by seeded random fields.
template <class C>
std::vector<VectorField<C>> test_fields(const FlatFStructure<C>& s, int points, std::uint64_t seed) {
    std::vector<VectorField<C>> out;
    for (int i = 0; i < s.n; ++i) out.push_back(coordinate_field<C>(s.space, s.n, s.D, i));
    std::mt19937_64 rng(seed);
    for (int p = 0; p < points; ++p) out.push_back(random_vector_field<C>(s.space, s.n, s.D, rng));
    return out;
}

template <class C>
std::vector<CheckReport> check_bicomplex(const BiFlatStructure<C>& bs, int points, std::uint64_t seed) {
    const int n = bs.n();
    const auto& sp = bs.b.space();
    const int D = bs.primal.D;
    const auto fields = test_fields(bs.primal, points, seed);
    std::vector<Form<C>> sections;
    for (const auto& X : fields) sections.push_back(zero_form(X));
    // A few tangent-valued 1-forms X (x) dx^m.
    std::vector<Form<C>> ones;
    for (std::size_t q = 0; q < fields.size() && q < 4; ++q)
        for (int m = 0; m < n; ++m)
            ones.push_back(wedge(sections[q], coordinate_covector<C>(sp, n, D, m)));

    std::vector<CheckReport> out;
    auto run = [&](const char* name, const char* anchor, auto&& op) {
        CheckTimer timer;
        ResidualMeter<C> m;
        for (const auto& w : sections) m.add(op(w));
        for (const auto& w : ones) m.add(op(w));
        auto r = make_report(name, anchor, m, timer);
        r.samples = {{"sections", std::to_string(sections.size())},
                     {"one_forms", std::to_string(ones.size())},
                     {"seed", std::to_string(seed)}};
        out.push_back(std::move(r));
    };
    run("bicomplex.d_nabla_sq", "d_nabla squares to zero", [&](const Form<C>& w) { return d_nabla(bs, d_nabla(bs, w)); });
    run("bicomplex.dL_sq", "d_{L nabla*} squares to zero",
        [&](const Form<C>& w) { return d_L_nabla_star(bs, d_L_nabla_star(bs, w)); });
    run("bicomplex.anticommutator", "d_nabla and d_{L nabla*} anticommute",
        [&](const Form<C>& w) { return anticommutator(bs, w); });
    {
        // D(X (x) w) = D(X) ^ w for scalar 1-forms w.
        CheckTimer timer;
        ResidualMeter<C> m;
        std::mt19937_64 rng(seed + 17);
        for (std::size_t q = 0; q < fields.size(); ++q) {
            const Form<C> DX = anticommutator(bs, sections[q]);
            for (int mm = 0; mm < n; ++mm) {
                const Form<C> w = coordinate_covector<C>(sp, n, D, mm);
                m.add(anticommutator(bs, wedge(sections[q], w)) - wedge(DX, w));
            }
            const VectorField<C> comps = random_vector_field<C>(sp, n, D, rng);
            std::vector<Jet<C>> cj;
            for (int i = 0; i < n; ++i) cj.push_back(comps[i]);
            const Form<C> w = scalar_one_form(cj);
            m.add(anticommutator(bs, wedge(sections[q], w)) - wedge(DX, w));
        }
        out.push_back(make_report("bicomplex.reduction", "anticommutator is determined on sections", m, timer));
    }
    {
        CheckTimer timer;
        ResidualMeter<C> m;
        const auto parts = bicomplex_defect_parts(bs);
        m.add(bicomplex_defect(bs) - parts.total());
        std::string detail;
        if (bs.constructed) {
            const auto [cpart, epart] = phi_part_split(bs);
            m.add(parts.phi - cpart - epart);
        }
        out.push_back(make_report("bicomplex.coordinate_form", "coordinate form of the anticommutator", m, timer));
    }
    return out;
}

/// d d_L + d_L d = 0 and d_L^2 on scalar 0- and 1-forms.
template <class C>
std::vector<CheckReport> check_scalar_differentials(const FlatFStructure<C>& s, int points, std::uint64_t seed) {
    std::mt19937_64 rng(seed + 29);
    std::vector<Form<C>> forms;
    for (int p = 0; p < std::max(points, 1); ++p) {
        const VectorField<C> v = random_vector_field<C>(s.space, s.n, s.D, rng);
        forms.push_back(scalar_form(s.n, v[0]));
        std::vector<Jet<C>> cj;
        for (int i = 0; i < s.n; ++i) cj.push_back(v[i]);
        forms.push_back(scalar_one_form(cj));
    }
    std::vector<CheckReport> out;
    {
        CheckTimer timer;
        ResidualMeter<C> m;
        for (const auto& w : forms) m.add(fn_d(fn_dL(w, s.L)) + fn_dL(fn_d(w), s.L));
        out.push_back(make_report("scalar.anticommutation", "d d_L + d_L d = 0", m, timer));
    }
    {
        CheckTimer timer;
        ResidualMeter<C> m;
        for (const auto& w : forms) m.add(fn_dL(fn_dL(w, s.L), s.L));
        out.push_back(make_report("scalar.dL_sq", "d_L^2 = 0 (Nijenhuis torsion vanishes)", m, timer));
    }
    return out;
}

}  // namespace biflat
