#pragma once

// Coordinate formulas for brackets, connections, curvature and differential
// forms. A connection is a (1,2) field Gamma with at(k, i, j) = Gamma^k_ij and
// nabla_{d_i} d_j = Gamma^k_ij d_k.

#include "biflat/tensor.hpp"

#include <bit>
#include <cstdint>

namespace biflat {

template <class C>
TensorField<C> zero_connection(int n, const SpacePtr& space, int degree) {
    return TensorField<C>("udd", n, space, degree, "zero");
}

/// [X, Y]^i = X^s d_s Y^i - Y^s d_s X^i.
template <class C>
VectorField<C> lie_bracket(const VectorField<C>& X, const VectorField<C>& Y) {
    const int n = X.dim();
    VectorField<C> r = make_vector<C>(n, X.space(), std::min(X.degree(), Y.degree()) - 1, "bracket");
    for (int s = 0; s < n; ++s) {
        const bool xs = X[s].is_exact_zero(), ys = Y[s].is_exact_zero();
        for (int i = 0; i < n; ++i) {
            if (!xs) Jet<C>::fma(r[i], X[s], jet_partial(Y[i], s));
            if (!ys) r[i] -= Y[s] * jet_partial(X[i], s);
        }
    }
    return r;
}

/// Derivative d_v of every entry.
template <class C>
TensorField<C> partial(const TensorField<C>& t, int v) {
    TensorField<C> r(t.variance(), t.dim(), t.space(), t.degree() - 1, t.label());
    for (std::size_t k = 0; k < t.size(); ++k) r.flat(k) = jet_partial(t.flat(k), v);
    return r;
}

/// Gradient: at(idx..., v) = d_v t(idx...). Adds a trailing lower slot.
template <class C>
TensorField<C> gradient(const TensorField<C>& t) {
    const int n = t.dim();
    TensorField<C> r(t.variance() + "d", n, t.space(), t.degree() - 1, t.label());
    for (std::size_t k = 0; k < t.size(); ++k)
        for (int v = 0; v < n; ++v) r.flat(k * n + v) = jet_partial(t.flat(k), v);
    return r;
}

/// N^k_ij = L^s_i d_s L^k_j - L^s_j d_s L^k_i - L^k_s (d_i L^s_j - d_j L^s_i).
template <class C>
TensorField<C> nijenhuis(const TensorField<C>& L) {
    const int n = L.dim();
    const TensorField<C> dL = gradient(L);  // dL.at(k, j, s) = d_s L^k_j
    TensorField<C> N("udd", n, L.space(), dL.degree(), "nijenhuis");
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Jet<C>& acc = N.at(k, i, j);
                for (int s = 0; s < n; ++s) {
                    Jet<C>::fma(acc, L.at(s, i), dL.at(k, j, s));
                    acc -= L.at(s, j) * dL.at(k, i, s);
                    acc -= L.at(k, s) * (dL.at(s, j, i) - dL.at(s, i, j));
                }
            }
    return N;
}

/// T^k_ij = Gamma^k_ij - Gamma^k_ji.
template <class C>
TensorField<C> torsion(const TensorField<C>& G) {
    const int n = G.dim();
    TensorField<C> T("udd", n, G.space(), G.degree(), "torsion");
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) T.at(k, i, j) = G.at(k, i, j) - G.at(k, j, i);
    return T;
}

/// R.at(l, k, i, j) = (R(d_i, d_j) d_k)^l
///   = d_i G^l_jk - d_j G^l_ik + G^l_is G^s_jk - G^l_js G^s_ik.
template <class C>
TensorField<C> riemann(const TensorField<C>& G) {
    const int n = G.dim();
    const TensorField<C> dG = gradient(G);  // dG.at(l, j, k, i) = d_i G^l_jk
    TensorField<C> R("uddd", n, G.space(), dG.degree(), "riemann");
    for (int l = 0; l < n; ++l)
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) {
                    Jet<C> acc = dG.at(l, j, k, i) - dG.at(l, i, k, j);
                    for (int s = 0; s < n; ++s) {
                        Jet<C>::fma(acc, G.at(l, i, s), G.at(s, j, k));
                        acc -= G.at(l, j, s) * G.at(s, i, k);
                    }
                    R.at(l, k, j, i) = -acc;
                    R.at(l, k, i, j) = std::move(acc);
                }
    return R;
}

/// (nabla Z)^k_i = d_i Z^k + G^k_is Z^s, stored at(k, i).
template <class C>
TensorField<C> cov_deriv(const TensorField<C>& G, const VectorField<C>& Z) {
    const int n = G.dim();
    TensorField<C> r("ud", n, G.space(), std::min(G.degree(), Z.degree() - 1), "cov");
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i) {
            Jet<C> acc = jet_partial(Z[k], i);
            for (int s = 0; s < n; ++s) Jet<C>::fma(acc, G.at(k, i, s), Z[s]);
            r.at(k, i) = std::move(acc);
        }
    return r;
}

/// Covariant derivative of an endomorphism field: at(k, j, i) = (nabla_i A)^k_j.
template <class C>
TensorField<C> cov_deriv_endo(const TensorField<C>& G, const TensorField<C>& A) {
    const int n = G.dim();
    TensorField<C> r("udd", n, G.space(), std::min(G.degree(), A.degree() - 1), "cov");
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                Jet<C> acc = jet_partial(A.at(k, j), i);
                for (int s = 0; s < n; ++s) {
                    Jet<C>::fma(acc, G.at(k, i, s), A.at(s, j));
                    acc -= G.at(s, i, j) * A.at(k, s);
                }
                r.at(k, j, i) = std::move(acc);
            }
    return r;
}

/// Covariant derivative of a (1,2) field: at(l, i, k, j) = (nabla_i P)^l_kj.
template <class C>
TensorField<C> cov_deriv_12(const TensorField<C>& G, const TensorField<C>& P) {
    const int n = G.dim();
    TensorField<C> r("uddd", n, G.space(), std::min(G.degree(), P.degree() - 1), "cov");
    for (int l = 0; l < n; ++l)
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                for (int j = 0; j < n; ++j) {
                    Jet<C> acc = jet_partial(P.at(l, k, j), i);
                    for (int s = 0; s < n; ++s) {
                        Jet<C>::fma(acc, G.at(l, i, s), P.at(s, k, j));
                        acc -= G.at(s, i, k) * P.at(l, s, j);
                        acc -= G.at(s, i, j) * P.at(l, k, s);
                    }
                    r.at(l, i, k, j) = std::move(acc);
                }
    return r;
}

/// (nabla^2 Z)^k_ij = d_i (nabla Z)^k_j + G^k_is (nabla Z)^s_j - G^s_ij (nabla Z)^k_s,
/// the component of nabla_{d_i} nabla_{d_j} Z - nabla_{nabla_{d_i} d_j} Z.
template <class C>
TensorField<C> second_cov_deriv(const TensorField<C>& G, const VectorField<C>& Z) {
    const int n = G.dim();
    const TensorField<C> DZ = cov_deriv(G, Z);
    TensorField<C> r("udd", n, G.space(), std::min(G.degree(), DZ.degree() - 1), "second_cov");
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Jet<C> acc = jet_partial(DZ.at(k, j), i);
                for (int s = 0; s < n; ++s) {
                    Jet<C>::fma(acc, G.at(k, i, s), DZ.at(s, j));
                    acc -= G.at(s, i, j) * DZ.at(k, s);
                }
                r.at(k, i, j) = std::move(acc);
            }
    return r;
}

/// (L_E c)^k_ij = E^s d_s c^k_ij - c^s_ij d_s E^k + c^k_sj d_i E^s + c^k_is d_j E^s.
template <class C>
TensorField<C> lie_derivative_product(const VectorField<C>& E, const TensorField<C>& c) {
    const int n = c.dim();
    const TensorField<C> dc = gradient(c);  // dc.at(k, i, j, s) = d_s c^k_ij
    const TensorField<C> dE = gradient(E);  // dE.at(k, s) = d_s E^k
    TensorField<C> r("udd", n, c.space(), std::min(dc.degree(), dE.degree()), "lie_product");
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Jet<C>& acc = r.at(k, i, j);
                for (int s = 0; s < n; ++s) {
                    Jet<C>::fma(acc, E[s], dc.at(k, i, j, s));
                    acc -= c.at(s, i, j) * dE.at(k, s);
                    Jet<C>::fma(acc, c.at(k, s, j), dE.at(s, i));
                    Jet<C>::fma(acc, c.at(k, i, s), dE.at(s, j));
                }
            }
    return r;
}

/// Product X o Y with structure constants c.
template <class C>
VectorField<C> product(const TensorField<C>& c, const VectorField<C>& X, const VectorField<C>& Y) {
    const int n = c.dim();
    VectorField<C> r = make_vector<C>(n, c.space(), std::min({c.degree(), X.degree(), Y.degree()}));
    for (int i = 0; i < n; ++i) {
        if (X[i].is_exact_zero()) continue;
        for (int j = 0; j < n; ++j) {
            if (Y[j].is_exact_zero()) continue;
            const Jet<C> xy = X[i] * Y[j];
            for (int k = 0; k < n; ++k) Jet<C>::fma(r[k], c.at(k, i, j), xy);
        }
    }
    return r;
}

/// Endomorphism X -> V o X, i.e. (V o)^k_j = c^k_js V^s.
template <class C>
TensorField<C> multiplication_operator(const TensorField<C>& c, const VectorField<C>& V) {
    const int n = c.dim();
    TensorField<C> r("ud", n, c.space(), std::min(c.degree(), V.degree()), "mult");
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int s = 0; s < n; ++s) Jet<C>::fma(r.at(k, j), c.at(k, j, s), V[s]);
    return r;
}

// ---------------------------------------------------------------------------
// Differential forms. A k-form stores one block of `values` jets per subset of
// {0..n-1}, indexed by bitmask; only masks with k bits are meaningful. Scalar
// forms have values = 1, tangent-valued forms have values = n.

template <class C>
class Form {
public:
    Form() = default;
    Form(int n, int k, int values, const SpacePtr& space, int degree)
        : n_(n), k_(k), values_(values), degree_(degree),
          data_(static_cast<std::size_t>(values) << n, Jet<C>::zero(space, degree)) {}

    int dim() const { return n_; }
    int form_degree() const { return k_; }
    int values() const { return values_; }
    bool vector_valued() const { return values_ > 1 || (n_ == 1 && vector_tag_); }
    void mark_vector_valued() { vector_tag_ = true; }
    int degree() const { return degree_; }
    const SpacePtr& space() const { return data_.front().space_ptr(); }

    Jet<C>& at(int value, std::uint32_t mask) { return data_[static_cast<std::size_t>(value) << n_ | mask]; }
    const Jet<C>& at(int value, std::uint32_t mask) const {
        return data_[static_cast<std::size_t>(value) << n_ | mask];
    }

    std::vector<std::uint32_t> masks() const {
        std::vector<std::uint32_t> out;
        for (std::uint32_t m = 0; m < (1u << n_); ++m)
            if (std::popcount(m) == k_) out.push_back(m);
        return out;
    }

    // Component on an arbitrary index list: signed, zero for repeated indices.
    Jet<C> eval(int value, const std::vector<int>& idx) const {
        std::uint32_t mask = 0;
        for (int v : idx) {
            if (mask & (1u << v)) return Jet<C>::zero(space(), degree_);
            mask |= 1u << v;
        }
        int inversions = 0;
        for (std::size_t a = 0; a < idx.size(); ++a)
            for (std::size_t b = a + 1; b < idx.size(); ++b)
                if (idx[a] > idx[b]) ++inversions;
        return inversions % 2 ? -at(value, mask) : at(value, mask);
    }

    bool vanishes() const {
        for (auto m : masks())
            for (int v = 0; v < values_; ++v)
                if (!at(v, m).vanishes()) return false;
        return true;
    }
    double max_abs() const {
        double r = 0;
        for (auto m : masks())
            for (int v = 0; v < values_; ++v) r = std::max(r, at(v, m).max_abs());
        return r;
    }
    // Number of independent components; zero means the form is trivially zero.
    std::size_t component_count() const { return masks().size() * values_; }
    int certified_degree() const {
        int d = degree_;
        for (auto m : masks())
            for (int v = 0; v < values_; ++v) d = std::min(d, at(v, m).degree());
        return d;
    }

    Form& operator+=(const Form& o) {
        for (auto m : masks())
            for (int v = 0; v < values_; ++v) at(v, m) += o.at(v, m);
        degree_ = std::min(degree_, o.degree_);
        return *this;
    }
    Form& operator-=(const Form& o) {
        for (auto m : masks())
            for (int v = 0; v < values_; ++v) at(v, m) -= o.at(v, m);
        degree_ = std::min(degree_, o.degree_);
        return *this;
    }
    friend Form operator+(Form a, const Form& b) { return a += b; }
    friend Form operator-(Form a, const Form& b) { return a -= b; }

private:
    int n_ = 0;
    int k_ = 0;
    int values_ = 1;
    int degree_ = -1;
    bool vector_tag_ = false;
    std::vector<Jet<C>> data_;
};

namespace detail {

inline std::vector<int> mask_indices(std::uint32_t mask) {
    std::vector<int> out;
    for (int v = 0; mask; ++v, mask >>= 1)
        if (mask & 1u) out.push_back(v);
    return out;
}

inline std::uint32_t indices_mask(const std::vector<int>& idx) {
    std::uint32_t m = 0;
    for (int v : idx) m |= 1u << v;
    return m;
}

// Shared implementation of d, d_L, d_nabla and d_{L nabla}:
//   (D w)(X_0..X_k) = sum_a (-1)^a nabla_{L X_a} w(..^a..)
//                   + sum_{a<b} (-1)^{a+b} w([X_a, X_b]_L, ..^a..^b..)
// on coordinate fields, where [d_a, d_b]_L^m = d_a L^m_b - d_b L^m_a and the
// bracket term vanishes without L. G and L may be null.
template <class C>
Form<C> exterior(const Form<C>& w, const TensorField<C>* G, const TensorField<C>* L) {
    const int n = w.dim();
    const int k = w.form_degree();
    const int vals = w.values();
    int deg = w.degree() - 1;
    if (G) deg = std::min(deg, G->degree());
    if (L) deg = std::min(deg, L->degree() - 1);
    Form<C> r(n, k + 1, vals, w.space(), deg);
    if (w.vector_valued()) r.mark_vector_valued();
    if (k + 1 > n) return r;

    // Partials of the input components, computed once.
    std::vector<std::vector<std::vector<Jet<C>>>> dw;  // [value][mask][v]
    dw.resize(vals);
    for (int val = 0; val < vals; ++val) {
        dw[val].resize(1u << n);
        for (auto m : w.masks()) {
            dw[val][m].reserve(n);
            for (int v = 0; v < n; ++v) dw[val][m].push_back(jet_partial(w.at(val, m), v));
        }
    }
    TensorField<C> bracketL;
    if (L) {
        // bracketL.at(m, a, b) = d_a L^m_b - d_b L^m_a
        bracketL = TensorField<C>("udd", n, w.space(), L->degree() - 1);
        for (int m = 0; m < n; ++m)
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    bracketL.at(m, a, b) = jet_partial(L->at(m, b), a) - jet_partial(L->at(m, a), b);
    }

    for (auto out_mask : r.masks()) {
        const std::vector<int> I = mask_indices(out_mask);
        for (int a = 0; a <= k; ++a) {
            std::vector<int> rest;
            for (int q = 0; q <= k; ++q)
                if (q != a) rest.push_back(I[q]);
            const std::uint32_t rest_mask = indices_mask(rest);
            const bool neg = a % 2 == 1;
            for (int val = 0; val < vals; ++val) {
                Jet<C> term = Jet<C>::zero(w.space(), deg);
                // nabla_{d_m} w^val(rest) = d_m w^val + G^val_{m s} w^s
                auto directional = [&](int m) {
                    Jet<C> t = dw[val][rest_mask][m];
                    if (G && w.vector_valued())
                        for (int s = 0; s < vals; ++s) Jet<C>::fma(t, G->at(val, m, s), w.at(s, rest_mask));
                    return t;
                };
                if (L) {
                    for (int m = 0; m < n; ++m) {
                        if (L->at(m, I[a]).is_exact_zero()) continue;
                        Jet<C>::fma(term, L->at(m, I[a]), directional(m));
                    }
                } else {
                    term += directional(I[a]);
                }
                if (neg) r.at(val, out_mask) -= term;
                else r.at(val, out_mask) += term;
            }
        }
        if (!L) continue;
        for (int a = 0; a <= k; ++a)
            for (int b = a + 1; b <= k; ++b) {
                std::vector<int> rest;
                for (int q = 0; q <= k; ++q)
                    if (q != a && q != b) rest.push_back(I[q]);
                const bool neg = (a + b) % 2 == 1;
                for (int m = 0; m < n; ++m) {
                    const Jet<C>& coeff = bracketL.at(m, I[a], I[b]);
                    if (coeff.is_exact_zero()) continue;
                    std::vector<int> args{m};
                    args.insert(args.end(), rest.begin(), rest.end());
                    for (int val = 0; val < vals; ++val) {
                        const Jet<C> wv = w.eval(val, args);
                        if (neg) r.at(val, out_mask) -= coeff * wv;
                        else Jet<C>::fma(r.at(val, out_mask), coeff, wv);
                    }
                }
            }
    }
    return r;
}

}  // namespace detail

/// Exterior derivative of a scalar form.
template <class C>
Form<C> fn_d(const Form<C>& w) { return detail::exterior<C>(w, nullptr, nullptr); }

/// Froelicher-Nijenhuis differential d_L of a scalar form.
template <class C>
Form<C> fn_dL(const Form<C>& w, const TensorField<C>& L) { return detail::exterior<C>(w, nullptr, &L); }

/// Exterior covariant derivative d_nabla of a tangent-valued form.
template <class C>
Form<C> ext_cov_d(const TensorField<C>& G, const Form<C>& w) { return detail::exterior<C>(w, &G, nullptr); }

/// L-exterior covariant derivative d_{L nabla} of a tangent-valued form.
template <class C>
Form<C> ext_cov_dL(const TensorField<C>& G, const TensorField<C>& L, const Form<C>& w) {
    return detail::exterior<C>(w, &G, &L);
}

/// Tangent-valued 0-form from a vector field.
template <class C>
Form<C> zero_form(const VectorField<C>& X) {
    const int n = X.dim();
    Form<C> f(n, 0, n, X.space(), X.degree());
    f.mark_vector_valued();
    for (int j = 0; j < n; ++j) f.at(j, 0) = X[j];
    return f;
}

/// Scalar 0-form.
template <class C>
Form<C> scalar_form(int n, const Jet<C>& f) {
    Form<C> r(n, 0, 1, f.space_ptr(), f.degree());
    r.at(0, 0) = f;
    return r;
}

/// Tangent-valued 1-form w^j_i from an endomorphism-shaped field at(j, i).
template <class C>
Form<C> one_form(const TensorField<C>& A) {
    const int n = A.dim();
    Form<C> f(n, 1, n, A.space(), A.degree());
    f.mark_vector_valued();
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) f.at(j, 1u << i) = A.at(j, i);
    return f;
}

/// Wedge product; at most one factor may be tangent-valued.
///   (a ^ b)(X_1..X_{p+q}) = sum over shuffles sgn a(X_A) b(X_B).
template <class C>
Form<C> wedge(const Form<C>& a, const Form<C>& b) {
    if (a.vector_valued() && b.vector_valued()) throw VarianceError("wedge of two tangent-valued forms");
    const int n = a.dim();
    const int p = a.form_degree(), q = b.form_degree();
    const int vals = std::max(a.values(), b.values());
    Form<C> r(n, p + q, vals, a.space(), std::min(a.degree(), b.degree()));
    if (a.vector_valued() || b.vector_valued()) r.mark_vector_valued();
    if (p + q > n) return r;
    for (auto out_mask : r.masks()) {
        const std::vector<int> I = detail::mask_indices(out_mask);
        for (auto amask : a.masks()) {
            if ((amask & out_mask) != amask) continue;
            const std::uint32_t bmask = out_mask & ~amask;
            // Sign of the permutation (A, B) of I.
            int inversions = 0;
            for (int x : detail::mask_indices(amask))
                for (int y : detail::mask_indices(bmask))
                    if (x > y) ++inversions;
            for (int v = 0; v < vals; ++v) {
                const Jet<C>& av = a.at(a.values() > 1 ? v : 0, amask);
                const Jet<C>& bv = b.at(b.values() > 1 ? v : 0, bmask);
                if (av.is_exact_zero() || bv.is_exact_zero()) continue;
                if (inversions % 2) r.at(v, out_mask) -= av * bv;
                else Jet<C>::fma(r.at(v, out_mask), av, bv);
            }
        }
    }
    return r;
}

}  // namespace biflat
