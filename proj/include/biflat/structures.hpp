#pragma once

// Flat F-manifold charts, their axiom checks, the dual structure and the
// Dubrovin-Frobenius (prepotential) mode.

#include "biflat/charpoly.hpp"
#include "biflat/parser.hpp"
#include "biflat/report.hpp"

#include <map>
#include <memory>
#include <optional>
#include <random>

namespace biflat {

template <class C>
struct FlatFStructure {
    std::string name;
    int n = 0;
    int D = 0;
    SpacePtr space;
    std::vector<Rational> p0;
    std::vector<std::string> coords;
    TensorField<C> c;  // c.at(k, i, j) = c^k_ij
    TensorField<C> a;  // Christoffel symbols of nabla
    VectorField<C> e;
    VectorField<C> E;
    TensorField<C> L;  // L^k_j = c^k_js E^s
    bool flat_chart = true;  // a is identically zero
};

template <class C>
struct BiFlatStructure {
    FlatFStructure<C> primal;
    TensorField<C> Linv;
    TensorField<C> cstar;
    TensorField<C> nablaE;  // nablaE.at(k, l) = nabla_l E^k
    TensorField<C> b;
    bool constructed = true;  // false once b has been replaced by hand
    // (L - lambda I)^{-1} by lambda; L never changes after construction.
    std::shared_ptr<std::map<std::string, TensorField<C>>> resolvents =
        std::make_shared<std::map<std::string, TensorField<C>>>();

    int n() const { return primal.n; }
    const TensorField<C>& a() const { return primal.a; }
    const TensorField<C>& c() const { return primal.c; }
    const TensorField<C>& L() const { return primal.L; }
};

struct DFInput {
    RationalMatrix eta;
    RationalMatrix eta_inv;
    Expr F;
};

template <class C>
struct DFStructure {
    RationalMatrix eta;
    RationalMatrix eta_inv;
    TensorField<C> F3;        // F3.at(l, i, j) = d_l d_i d_j F
    TensorField<C> g;         // contravariant intersection form g^ij
    TensorField<C> g_lower;   // its inverse g_ij
    TensorField<C> gamma_g;   // Levi-Civita connection of g
    TensorField<C> gamma_eta; // Levi-Civita connection of eta (zero in flat coordinates)
    std::optional<C> homogeneity;  // D in L_E eta = D eta
    std::optional<C> mu_bar;
};

inline RationalMatrix rational_inverse(const RationalMatrix& m) {
    const int n = static_cast<int>(m.size());
    RationalMatrix a = m, inv(n, std::vector<Rational>(n, Rational(0)));
    for (int i = 0; i < n; ++i) inv[i][i] = 1;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        while (piv < n && sgn(a[piv][col]) == 0) ++piv;
        if (piv == n) throw DFError("matrix is singular");
        std::swap(a[piv], a[col]);
        std::swap(inv[piv], inv[col]);
        const Rational p = a[col][col];
        for (int k = 0; k < n; ++k) {
            a[col][k] /= p;
            inv[col][k] /= p;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col || sgn(a[r][col]) == 0) continue;
            const Rational f = a[r][col];
            for (int k = 0; k < n; ++k) {
                a[r][k] -= f * a[col][k];
                inv[r][k] -= f * inv[col][k];
            }
        }
    }
    return inv;
}

namespace detail {

template <class C>
TensorField<C> eval_entries(const TensorEntries& entries, int n, const std::vector<Rational>& p0, int D,
                            const SpacePtr& space, const char* label) {
    TensorField<C> t("udd", n, space, D, label);
    for (const auto& [idx, ex] : entries) t.at(idx[0], idx[1], idx[2]) = jet_eval<C>(ex, p0, D);
    return t;
}

template <class C>
VectorField<C> eval_vector(const std::vector<Expr>& comps, const std::vector<Rational>& p0, int D,
                           const SpacePtr& space, const char* label) {
    VectorField<C> v = make_vector<C>(static_cast<int>(comps.size()), space, D, label);
    for (std::size_t i = 0; i < comps.size(); ++i) v[static_cast<int>(i)] = jet_eval<C>(comps[i], p0, D);
    return v;
}

template <class C>
C to_coeff(const Rational& q) { return CoeffTraits<C>::from(q); }

}  // namespace detail

/// Third derivatives of the prepotential, as jets of full degree D.
template <class C>
TensorField<C> prepotential_third_derivatives(const ManifoldSpec& spec, int D, const SpacePtr& space) {
    const int n = spec.dim;
    TensorField<C> F3("ddd", n, space, D, "F3");
    for (int l = 0; l < n; ++l) {
        const Expr Fl = differentiate(*spec.F, l);
        for (int i = l; i < n; ++i) {
            const Expr Fli = differentiate(Fl, i);
            for (int j = i; j < n; ++j) {
                const Jet<C> v = jet_eval<C>(differentiate(Fli, j), spec.basepoint, D);
                const int perm[6][3] = {{l, i, j}, {l, j, i}, {i, l, j}, {i, j, l}, {j, l, i}, {j, i, l}};
                for (const auto& p : perm) F3.at(p[0], p[1], p[2]) = v;
            }
        }
    }
    return F3;
}

/// Evaluate a parsed description as jets at its base point.
template <class C>
FlatFStructure<C> build_flat_f(const ManifoldSpec& spec, int D) {
    FlatFStructure<C> s;
    s.name = spec.name;
    s.n = spec.dim;
    s.D = D;
    s.space = JetSpace::get(spec.dim, D);
    s.p0 = spec.basepoint;
    s.coords = spec.coords;
    const int n = s.n;
    if (spec.F) {
        const RationalMatrix eta_inv = rational_inverse(spec.eta);
        const TensorField<C> F3 = prepotential_third_derivatives<C>(spec, D, s.space);
        s.c = TensorField<C>("udd", n, s.space, D, "c");
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    for (int l = 0; l < n; ++l) {
                        if (sgn(eta_inv[k][l]) == 0) continue;
                        s.c.at(k, i, j) += F3.at(l, i, j) * detail::to_coeff<C>(eta_inv[k][l]);
                    }
    } else {
        s.c = detail::eval_entries<C>(spec.c, n, spec.basepoint, D, s.space, "c");
    }
    s.a = detail::eval_entries<C>(spec.a, n, spec.basepoint, D, s.space, "a");
    s.flat_chart = s.a.vanishes();
    s.e = detail::eval_vector<C>(spec.e, spec.basepoint, D, s.space, "e");
    s.E = detail::eval_vector<C>(spec.E, spec.basepoint, D, s.space, "E");
    s.L = multiplication_operator(s.c, s.E);
    s.L.set_label("L");
    return s;
}

/// c* = L^{-1} c.
template <class C>
TensorField<C> build_dual_product(const TensorField<C>& c, const TensorField<C>& Linv) {
    const int n = c.dim();
    TensorField<C> cs("udd", n, c.space(), std::min(c.degree(), Linv.degree()), "c*");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int m = 0; m < n; ++m) Jet<C>::fma(cs.at(i, j, k), Linv.at(i, m), c.at(m, j, k));
    return cs;
}

/// b^k_ij = a^k_ij - c*^l_ji nabla_l E^k.
template <class C>
TensorField<C> build_dual_connection(const TensorField<C>& a, const TensorField<C>& cstar,
                                     const TensorField<C>& nablaE) {
    const int n = a.dim();
    TensorField<C> b("udd", n, a.space(), std::min({a.degree(), cstar.degree(), nablaE.degree()}), "b");
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Jet<C> acc = a.at(k, i, j).truncated(b.degree());
                for (int l = 0; l < n; ++l) acc -= cstar.at(l, j, i) * nablaE.at(k, l);
                b.at(k, i, j) = std::move(acc);
            }
    return b;
}

template <class C>
BiFlatStructure<C> build_biflat(const FlatFStructure<C>& s) {
    BiFlatStructure<C> bs;
    bs.primal = s;
    bs.Linv = endo_inverse(s.L, "L = E o (dual structure undefined at basepoint)");
    bs.cstar = build_dual_product(s.c, bs.Linv);
    bs.nablaE = cov_deriv(s.a, s.E);
    bs.b = build_dual_connection(s.a, bs.cstar, bs.nablaE);
    return bs;
}

/// Replace the dual connection by hand (used for perturbation experiments).
template <class C>
BiFlatStructure<C> with_dual_connection(BiFlatStructure<C> bs, TensorField<C> b) {
    bs.b = std::move(b);
    bs.constructed = false;
    return bs;
}

// ---------------------------------------------------------------------------
// Random polynomial vector fields.

template <class C>
VectorField<C> random_vector_field(const SpacePtr& space, int n, int D, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> num(-3, 3), den(1, 3);
    VectorField<C> X = make_vector<C>(n, space, D, "random");
    const std::size_t count = space->size(std::min(2, D));
    for (int i = 0; i < n; ++i)
        for (std::size_t m = 0; m < count; ++m) {
            const int p = num(rng);
            const int q = den(rng);
            X[i][m] = detail::to_coeff<C>(Rational(p, q));
        }
    return X;
}

template <class C>
VectorField<C> coordinate_field(const SpacePtr& space, int n, int D, int i) {
    VectorField<C> X = make_vector<C>(n, space, D, "coordinate");
    X[i] = Jet<C>::constant(space, D, CoeffTraits<C>::from_int(1));
    return X;
}

// ---------------------------------------------------------------------------
// F-manifold axioms.

template <class C>
CheckReport check_commutative(const TensorField<C>& c, const char* name = "fman.commutativity") {
    CheckTimer timer;
    ResidualMeter<C> m;
    const int n = c.dim();
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) m.add(c.at(k, i, j) - c.at(k, j, i));
    return make_report(name, "product commutativity", m, timer);
}

/// c^i_sj c^s_km = c^i_sk c^s_jm.
template <class C>
CheckReport check_associative(const TensorField<C>& c, const char* name = "fman.associativity") {
    CheckTimer timer;
    ResidualMeter<C> m;
    const int n = c.dim();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int mm = 0; mm < n; ++mm) {
                    Jet<C> acc = Jet<C>::zero(c.space(), c.degree());
                    for (int s = 0; s < n; ++s) {
                        Jet<C>::fma(acc, c.at(i, s, j), c.at(s, k, mm));
                        acc -= c.at(i, s, k) * c.at(s, j, mm);
                    }
                    m.add(acc);
                }
    return make_report(name, "product associativity", m, timer);
}

/// Both halves of the commutative-associative check.
template <class C>
std::vector<CheckReport> check_commutative_associative(const TensorField<C>& c) {
    return {check_commutative(c), check_associative(c)};
}

/// e o X = X, i.e. c^k_ji e^j = delta^k_i.
template <class C>
CheckReport check_unit(const TensorField<C>& c, const VectorField<C>& e, const char* name = "fman.unit",
                       const char* anchor = "unit field") {
    CheckTimer timer;
    ResidualMeter<C> m;
    const int n = c.dim();
    const TensorField<C> eo = multiplication_operator(c, e);  // eo.at(k, i) = c^k_is e^s
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i) {
            Jet<C> r = eo.at(k, i);
            if (k == i) r -= Jet<C>::constant(c.space(), r.degree(), CoeffTraits<C>::from_int(1));
            m.add(r);
        }
    return make_report(name, anchor, m, timer);
}

/// The nine-term Hertling-Manin expression for one quadruple.
template <class C>
VectorField<C> hertling_manin_expression(const TensorField<C>& c, const VectorField<C>& X, const VectorField<C>& Y,
                                         const VectorField<C>& W, const VectorField<C>& Z) {
    auto prod = [&](const VectorField<C>& A, const VectorField<C>& B) { return product(c, A, B); };
    const VectorField<C> XY = prod(X, Y);
    const VectorField<C> WZ = prod(W, Z);
    const VectorField<C> ZW = prod(Z, W);
    VectorField<C> r = lie_bracket(XY, WZ);
    r -= prod(lie_bracket(XY, Z), W);
    r -= prod(lie_bracket(XY, W), Z);
    r -= prod(X, lie_bracket(Y, ZW));
    r += prod(X, prod(lie_bracket(Y, Z), W));
    r += prod(X, prod(lie_bracket(Y, W), Z));
    r -= prod(Y, lie_bracket(X, ZW));
    r += prod(Y, prod(lie_bracket(X, Z), W));
    r += prod(Y, prod(lie_bracket(X, W), Z));
    return r;
}

template <class C>
CheckReport check_hm_identity(const TensorField<C>& c, int points, std::uint64_t seed) {
    CheckTimer timer;
    ResidualMeter<C> m;
    const int n = c.dim();
    const int D = c.degree();
    const auto& sp = c.space();
    std::vector<VectorField<C>> coord;
    for (int i = 0; i < n; ++i) coord.push_back(coordinate_field<C>(sp, n, D, i));
    const int total = n * n * n * n;
    for (int q = 0; q < total; ++q) {
        const int x = q / (n * n * n), y = (q / (n * n)) % n, w = (q / n) % n, z = q % n;
        m.add(hertling_manin_expression(c, coord[x], coord[y], coord[w], coord[z]));
    }
    std::mt19937_64 rng(seed);
    for (int p = 0; p < points; ++p) {
        const auto X = random_vector_field<C>(sp, n, D, rng);
        const auto Y = random_vector_field<C>(sp, n, D, rng);
        const auto W = random_vector_field<C>(sp, n, D, rng);
        const auto Z = random_vector_field<C>(sp, n, D, rng);
        m.add(hertling_manin_expression(c, X, Y, W, Z));
    }
    auto r = make_report("fman.hertling_manin", "Hertling-Manin identity", m, timer);
    r.samples = {{"coordinate_quadruples", std::to_string(total)},
                 {"random_quadruples", std::to_string(points)},
                 {"seed", std::to_string(seed)}};
    return r;
}

// ---------------------------------------------------------------------------
// Flat structure.

/// P.at(l,i,k,j) - P.at(l,k,i,j) style symmetry of nabla_i c^l_kj = nabla_k c^l_ji.
template <class C>
CheckReport check_nabla_c_symmetry(const TensorField<C>& G, const TensorField<C>& c, const char* name,
                                   const char* anchor) {
    CheckTimer timer;
    ResidualMeter<C> m;
    const int n = c.dim();
    const TensorField<C> Dc = cov_deriv_12(G, c);  // Dc.at(l, i, k, j) = nabla_i c^l_kj
    for (int l = 0; l < n; ++l)
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                for (int j = 0; j < n; ++j) m.add(Dc.at(l, i, k, j) - Dc.at(l, k, j, i));
    return make_report(name, anchor, m, timer);
}

template <class C>
CheckReport check_torsion_free(const TensorField<C>& G, const char* name, const char* anchor) {
    CheckTimer timer;
    ResidualMeter<C> m;
    m.add(torsion(G));
    return make_report(name, anchor, m, timer);
}

template <class C>
CheckReport check_curvature_free(const TensorField<C>& G, const char* name, const char* anchor) {
    CheckTimer timer;
    ResidualMeter<C> m;
    m.add(riemann(G));
    return make_report(name, anchor, m, timer);
}

template <class C>
CheckReport check_parallel(const TensorField<C>& G, const VectorField<C>& X, const char* name, const char* anchor) {
    CheckTimer timer;
    ResidualMeter<C> m;
    m.add(cov_deriv(G, X));
    return make_report(name, anchor, m, timer);
}

/// The four conditions equivalent to a flat F-structure.
template <class C>
std::vector<CheckReport> check_flat_f(const FlatFStructure<C>& s) {
    return {check_torsion_free(s.a, "flat.torsion", "flat structure: torsion-free connection"),
            check_curvature_free(s.a, "flat.curvature", "flat structure: flat connection"),
            check_nabla_c_symmetry(s.a, s.c, "flat.nabla_c_symmetry", "flat structure: symmetry of nabla c"),
            check_parallel(s.a, s.e, "flat.nabla_e", "flat structure: parallel unit")};
}

/// nabla - lambda o flat and torsionless at each sampled lambda.
template <class C>
CheckReport check_pencil(const FlatFStructure<C>& s, const std::vector<Rational>& lambdas) {
    CheckTimer timer;
    ResidualMeter<C> m;
    CheckReport r;
    for (const auto& lam : lambdas) {
        TensorField<C> G = s.a - detail::to_coeff<C>(lam) * s.c;
        m.add(torsion(G));
        m.add(riemann(G));
    }
    r = make_report("pencil.flat_torsionless", "flat structure: pencil nabla - lambda o", m, timer);
    for (const auto& lam : lambdas) r.samples.push_back({"lambda", lam.get_str()});
    return r;
}

// ---------------------------------------------------------------------------
// Euler field and eventual identity.

template <class C>
std::vector<CheckReport> check_euler(const FlatFStructure<C>& s) {
    std::vector<CheckReport> out;
    {
        CheckTimer timer;
        ResidualMeter<C> m;
        m.add(lie_bracket(s.e, s.E) - s.e);
        out.push_back(make_report("euler.bracket", "Euler field: [e,E] = e", m, timer));
    }
    {
        CheckTimer timer;
        ResidualMeter<C> m;
        m.add(lie_derivative_product(s.E, s.c) - s.c);
        out.push_back(make_report("euler.lie_product", "Euler field: Lie derivative of the product", m, timer));
    }
    {
        CheckTimer timer;
        ResidualMeter<C> m;
        m.add(second_cov_deriv(s.a, s.E));
        out.push_back(make_report("euler.linear", "Euler field: linearity nabla^2 E = 0", m, timer));
    }
    return out;
}

template <class C>
std::vector<CheckReport> check_eventual_identity(const FlatFStructure<C>& s) {
    std::vector<CheckReport> out;
    {
        CheckTimer timer;
        ResidualMeter<C> m;
        const int n = s.n;
        const VectorField<C> v = lie_bracket(s.e, s.E);
        const TensorField<C> vo = multiplication_operator(s.c, v);  // vo.at(k, m) = c^k_ms v^s
        TensorField<C> rhs("udd", n, s.space, std::min(vo.degree(), s.c.degree()));
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    for (int mm = 0; mm < n; ++mm) Jet<C>::fma(rhs.at(k, i, j), vo.at(k, mm), s.c.at(mm, i, j));
        m.add(lie_derivative_product(s.E, s.c) - rhs);
        out.push_back(make_report("eventual.identity", "eventual identity", m, timer));
    }
    {
        CheckTimer timer;
        ResidualMeter<C> m;
        m.add(nijenhuis(s.L));
        out.push_back(make_report("eventual.nijenhuis", "Nijenhuis torsion of E o", m, timer));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dual structure.

template <class C>
CheckReport check_dual_unit(const BiFlatStructure<C>& bs) {
    auto r = check_unit(bs.cstar, bs.primal.E, "dual.unit", "dual product: E is the unit");
    return r;
}

/// b^k_lj c^l_im - b^k_li c^l_jm = a^k_lj c^l_im - a^k_li c^l_jm, with c or c*.
template <class C>
CheckReport check_compatibility(const TensorField<C>& a, const TensorField<C>& b, const TensorField<C>& c,
                                const char* name, const char* anchor) {
    CheckTimer timer;
    ResidualMeter<C> m;
    const int n = c.dim();
    const TensorField<C> d = b - a;
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                for (int mm = 0; mm < n; ++mm) {
                    Jet<C> acc = Jet<C>::zero(c.space(), std::min(d.degree(), c.degree()));
                    for (int l = 0; l < n; ++l) {
                        Jet<C>::fma(acc, d.at(k, l, j), c.at(l, i, mm));
                        acc -= d.at(k, l, i) * c.at(l, j, mm);
                    }
                    m.add(acc);
                }
    return make_report(name, anchor, m, timer);
}

/// a^k_ij = b^k_ij - c^l_ji nabla*_l e^k.
template <class C>
TensorField<C> natural_from_dual(const BiFlatStructure<C>& bs) {
    const int n = bs.n();
    const TensorField<C> De = cov_deriv(bs.b, bs.primal.e);  // De.at(k, l) = nabla*_l e^k
    TensorField<C> a("udd", n, bs.b.space(), std::min(bs.b.degree(), De.degree()), "a from b");
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Jet<C> acc = bs.b.at(k, i, j).truncated(a.degree());
                for (int l = 0; l < n; ++l) acc -= bs.primal.c.at(l, j, i) * De.at(k, l);
                a.at(k, i, j) = std::move(acc);
            }
    return a;
}

template <class C>
std::vector<CheckReport> check_biflat(const BiFlatStructure<C>& bs) {
    std::vector<CheckReport> out;
    out.push_back(check_dual_unit(bs));
    auto ca = check_commutative(bs.cstar, "dual.commutativity");
    out.push_back(ca);
    out.push_back(check_associative(bs.cstar, "dual.associativity"));
    out.push_back(check_torsion_free(bs.b, "dual.torsion", "dual connection: torsion-free"));
    out.push_back(check_curvature_free(bs.b, "dual.curvature", "dual connection: flat"));
    out.push_back(check_nabla_c_symmetry(bs.b, bs.cstar, "dual.nabla_c_symmetry",
                                         "dual structure: symmetry of nabla* c*"));
    out.push_back(check_parallel(bs.b, bs.primal.E, "dual.nabla_E", "dual structure: nabla* E = 0"));
    out.push_back(check_compatibility(bs.a(), bs.b, bs.c(), "compat.natural",
                                      "compatibility (d_nabla - d_nabla*)(X o) = 0"));
    out.push_back(check_compatibility(bs.a(), bs.b, bs.cstar, "compat.dual",
                                      "compatibility (d_nabla - d_nabla*)(X *) = 0"));
    {
        CheckTimer timer;
        ResidualMeter<C> m;
        m.add(natural_from_dual(bs) - bs.a());
        out.push_back(make_report("dual.roundtrip", "natural connection recovered from the dual one", m, timer));
    }
    {
        // c^i_lk = L^j_l c*^i_jk, the second form of the product relation.
        CheckTimer timer;
        ResidualMeter<C> m;
        const int n = bs.n();
        for (int i = 0; i < n; ++i)
            for (int l = 0; l < n; ++l)
                for (int k = 0; k < n; ++k) {
                    Jet<C> acc = bs.c().at(i, l, k);
                    for (int j = 0; j < n; ++j) acc -= bs.L().at(j, l) * bs.cstar.at(i, j, k);
                    m.add(acc);
                }
        out.push_back(make_report("dual.product_relation", "X o Y = (LX) * Y", m, timer));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dubrovin-Frobenius mode.

/// Levi-Civita connection of a metric given with both index positions.
template <class C>
TensorField<C> levi_civita(const TensorField<C>& g_upper, const TensorField<C>& g_lower) {
    const int n = g_upper.dim();
    const TensorField<C> dg = gradient(g_lower);  // dg.at(i, j, v) = d_v g_ij
    TensorField<C> G("udd", n, g_upper.space(), std::min(g_upper.degree(), dg.degree()), "levi_civita");
    const C half = CoeffTraits<C>::from(Rational(1, 2));
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                Jet<C> acc = Jet<C>::zero(G.space(), G.degree());
                for (int l = 0; l < n; ++l) {
                    const Jet<C> bracket = dg.at(j, l, i) + dg.at(i, l, j) - dg.at(i, j, l);
                    Jet<C>::fma(acc, g_upper.at(k, l), bracket);
                }
                acc *= half;
                G.at(k, j, i) = acc;
                G.at(k, i, j) = std::move(acc);
            }
    return G;
}

template <class C>
TensorField<C> constant_tensor(const RationalMatrix& m, const char* variance, const SpacePtr& space, int D) {
    const int n = static_cast<int>(m.size());
    TensorField<C> t(variance, n, space, D);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) t.at(i, j) = Jet<C>::constant(space, D, detail::to_coeff<C>(m[i][j]));
    return t;
}

/// Prepotential data: lowered structure constants, intersection form and its
/// Levi-Civita connection. The structure constants themselves come from
/// build_flat_f.
template <class C>
DFStructure<C> df_from_prepotential(const ManifoldSpec& spec, const FlatFStructure<C>& s) {
    if (!spec.F) throw DFError("no prepotential");
    DFStructure<C> df;
    const int n = s.n;
    df.eta = spec.eta;
    df.eta_inv = rational_inverse(spec.eta);
    df.F3 = prepotential_third_derivatives<C>(spec, s.D, s.space);
    // g^ij = eta^il c^j_ls E^s
    df.g = TensorField<C>("uu", n, s.space, s.D, "g");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l) {
                if (sgn(df.eta_inv[i][l]) == 0) continue;
                Jet<C> cE = Jet<C>::zero(s.space, s.D);
                for (int sidx = 0; sidx < n; ++sidx) Jet<C>::fma(cE, s.c.at(j, l, sidx), s.E[sidx]);
                df.g.at(i, j) += cE * detail::to_coeff<C>(df.eta_inv[i][l]);
            }
    TensorField<C> g_as_endo("ud", n, s.space, df.g.degree());
    for (std::size_t k = 0; k < df.g.size(); ++k) g_as_endo.flat(k) = df.g.flat(k);
    const TensorField<C> inv = endo_inverse(g_as_endo, "intersection form");
    df.g_lower = TensorField<C>("dd", n, s.space, inv.degree(), "g_lower");
    for (std::size_t k = 0; k < inv.size(); ++k) df.g_lower.flat(k) = inv.flat(k);
    df.gamma_g = levi_civita(df.g, df.g_lower);
    df.gamma_g.set_label("Gamma_g");
    df.gamma_eta = zero_connection<C>(n, s.space, s.D);
    return df;
}

template <class C>
std::vector<CheckReport> check_df(DFStructure<C>& df, const FlatFStructure<C>& s, const BiFlatStructure<C>& bs) {
    std::vector<CheckReport> out;
    const int n = s.n;
    const TensorField<C> eta = constant_tensor<C>(df.eta, "dd", s.space, s.D);
    {
        // eta(X o Y, Z) = eta(X, Y o Z): c_lij = eta_lk c^k_ij totally symmetric,
        // and it reproduces the third derivatives of F.
        CheckTimer timer;
        ResidualMeter<C> m;
        TensorField<C> low("ddd", n, s.space, s.D);
        for (int l = 0; l < n; ++l)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    for (int k = 0; k < n; ++k) Jet<C>::fma(low.at(l, i, j), eta.at(l, k), s.c.at(k, i, j));
        for (int l = 0; l < n; ++l)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    m.add(low.at(l, i, j) - low.at(i, l, j));
                    m.add(low.at(l, i, j) - low.at(j, i, l));
                    m.add(low.at(l, i, j) - df.F3.at(l, i, j));
                }
        out.push_back(make_report("df.invariance", "invariant metric eta(X o Y, Z) = eta(X, Y o Z)", m, timer));
    }
    {
        // (L_E eta)_ij = eta_sj d_i E^s + eta_is d_j E^s = D eta_ij.
        CheckTimer timer;
        ResidualMeter<C> m;
        const TensorField<C> dE = gradient(s.E);
        TensorField<C> lie("dd", n, s.space, dE.degree());
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int sidx = 0; sidx < n; ++sidx) {
                    Jet<C>::fma(lie.at(i, j), eta.at(sidx, j), dE.at(sidx, i));
                    Jet<C>::fma(lie.at(i, j), eta.at(i, sidx), dE.at(sidx, j));
                }
        std::string detail;
        for (int i = 0; i < n && !df.homogeneity; ++i)
            for (int j = 0; j < n && !df.homogeneity; ++j)
                if (sgn(df.eta[i][j]) != 0) df.homogeneity = lie.at(i, j).constant_term() / detail::to_coeff<C>(df.eta[i][j]);
        if (df.homogeneity) {
            m.add(lie - *df.homogeneity * eta);
            detail = "D = " + CoeffTraits<C>::str(*df.homogeneity);
        }
        auto r = make_report("df.homogeneity", "L_E eta = D eta", m, timer, detail);
        if (df.homogeneity) r.samples.push_back({"D", CoeffTraits<C>::str(*df.homogeneity)});
        out.push_back(r);
    }
    {
        // L^i_j = g^il eta_lj.
        CheckTimer timer;
        ResidualMeter<C> m;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Jet<C> acc = s.L.at(i, j);
                for (int l = 0; l < n; ++l) acc -= df.g.at(i, l) * eta.at(l, j);
                m.add(acc);
            }
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) m.add(df.g.at(i, j) - df.g.at(j, i));
        out.push_back(make_report("df.intersection_form", "intersection form: L = g eta", m, timer));
    }
    {
        // g(X * Y, Z) = g(X, Y * Z): g_kl c*^l_ij symmetric under k <-> i.
        CheckTimer timer;
        ResidualMeter<C> m;
        TensorField<C> low("ddd", n, s.space, std::min(df.g_lower.degree(), bs.cstar.degree()));
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    for (int l = 0; l < n; ++l) Jet<C>::fma(low.at(k, i, j), df.g_lower.at(k, l), bs.cstar.at(l, i, j));
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) m.add(low.at(k, i, j) - low.at(i, k, j));
        out.push_back(make_report("df.g_invariance", "intersection form invariant under *", m, timer));
    }
    return out;
}

/// Solve b + mu c* = Gamma_g for the single scalar mu.
template <class C>
std::pair<std::optional<C>, CheckReport> find_mu_bar(DFStructure<C>& df, const BiFlatStructure<C>& bs) {
    CheckTimer timer;
    const TensorField<C> rhs = df.gamma_g - bs.b;
    std::optional<C> mu;
    // Use the largest-magnitude coefficient of c* as the pivot.
    double best = 0;
    for (std::size_t k = 0; k < rhs.size(); ++k) {
        const Jet<C>& cs = bs.cstar.flat(k);
        for (std::size_t mi = 0; mi < std::min(cs.size(), rhs.flat(k).size()); ++mi) {
            const double mag = CoeffTraits<C>::magnitude(cs[mi]);
            if (mag > best) {
                best = mag;
                mu = rhs.flat(k)[mi] / cs[mi];
                if constexpr (CoeffTraits<C>::exact) goto found;
            }
        }
    }
found:
    ResidualMeter<C> m;
    std::string detail;
    if (mu) {
        m.add(rhs - *mu * bs.cstar);
        detail = "mu_bar = " + CoeffTraits<C>::str(*mu);
    } else {
        m.add(rhs);
        detail = "c* vanishes; no pivot";
    }
    auto r = make_report("df.mu_bar", "Levi-Civita of g equals b + mu c*", m, timer, detail);
    if (mu) r.samples.push_back({"mu_bar", CoeffTraits<C>::str(*mu)});
    if (r.status == Status::Pass) df.mu_bar = mu;
    else r.detail = "inconsistent system: " + detail;
    return {df.mu_bar, r};
}

}  // namespace biflat
