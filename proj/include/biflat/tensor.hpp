#pragma once

// Dense tensor fields with jet entries.

#include "biflat/jet.hpp"

#include <initializer_list>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace biflat {

/// Tensor field on an n-dimensional chart. `variance` has one character per
/// slot, 'u' for an upper (vector) index and 'd' for a lower (covector) one.
/// Entries are stored row-major with the first slot most significant, so a
/// (1,2) field at(k, i, j) is the component with upper index k.
template <class C>
class TensorField {
public:
    TensorField() = default;
    TensorField(std::string variance, int n, const SpacePtr& space, int degree, std::string label = {})
        : variance_(std::move(variance)), n_(n), label_(std::move(label)) {
        std::size_t count = 1;
        for (std::size_t s = 0; s < variance_.size(); ++s) {
            if (variance_[s] != 'u' && variance_[s] != 'd') throw VarianceError("bad variance string " + variance_);
            count *= n_;
        }
        data_.assign(count, Jet<C>::zero(space, degree));
    }

    const std::string& variance() const { return variance_; }
    int rank() const { return static_cast<int>(variance_.size()); }
    int dim() const { return n_; }
    const std::string& label() const { return label_; }
    void set_label(std::string l) { label_ = std::move(l); }
    std::size_t size() const { return data_.size(); }

    template <class... I>
    Jet<C>& at(I... idx) { return data_[offset({static_cast<int>(idx)...})]; }
    template <class... I>
    const Jet<C>& at(I... idx) const { return data_[offset({static_cast<int>(idx)...})]; }
    Jet<C>& flat(std::size_t k) { return data_[k]; }
    const Jet<C>& flat(std::size_t k) const { return data_[k]; }
    Jet<C>& operator[](int i) { return data_[i]; }
    const Jet<C>& operator[](int i) const { return data_[i]; }

    std::size_t offset(std::initializer_list<int> idx) const {
        if (static_cast<int>(idx.size()) != rank()) throw std::out_of_range("wrong number of indices");
        std::size_t off = 0;
        for (int v : idx) off = off * n_ + v;
        return off;
    }
    std::size_t offset(const std::vector<int>& idx) const {
        std::size_t off = 0;
        for (int v : idx) off = off * n_ + v;
        return off;
    }
    std::vector<int> unflatten(std::size_t k) const {
        std::vector<int> idx(rank());
        for (int s = rank() - 1; s >= 0; --s) {
            idx[s] = static_cast<int>(k % n_);
            k /= n_;
        }
        return idx;
    }

    // Smallest jet degree among the entries: the order to which the field is known.
    int degree() const {
        int d = std::numeric_limits<int>::max();
        for (const auto& j : data_) d = std::min(d, j.degree());
        return data_.empty() ? -1 : d;
    }
    const SpacePtr& space() const { return data_.front().space_ptr(); }

    TensorField& operator+=(const TensorField& o) {
        check_shape(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }
    TensorField& operator-=(const TensorField& o) {
        check_shape(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }
    TensorField& operator*=(const C& s) {
        for (auto& j : data_) j *= s;
        return *this;
    }
    friend TensorField operator+(TensorField a, const TensorField& b) { return a += b; }
    friend TensorField operator-(TensorField a, const TensorField& b) { return a -= b; }
    friend TensorField operator*(const C& s, TensorField a) { return a *= s; }

    bool vanishes() const {
        for (const auto& j : data_)
            if (!j.vanishes()) return false;
        return true;
    }
    double max_abs() const {
        double m = 0;
        for (const auto& j : data_) m = std::max(m, j.max_abs());
        return m;
    }

    void check_shape(const TensorField& o) const {
        if (o.variance_ != variance_ || o.n_ != n_)
            throw VarianceError("shape mismatch: " + variance_ + " vs " + o.variance_);
    }

private:
    std::string variance_;
    int n_ = 0;
    std::string label_;
    std::vector<Jet<C>> data_;
};

template <class C>
using VectorField = TensorField<C>;

template <class C>
VectorField<C> make_vector(int n, const SpacePtr& space, int degree, std::string label = {}) {
    return TensorField<C>("u", n, space, degree, std::move(label));
}

template <class C>
TensorField<C> identity_endo(int n, const SpacePtr& space, int degree) {
    TensorField<C> id("ud", n, space, degree, "id");
    for (int i = 0; i < n; ++i) id.at(i, i) = Jet<C>::constant(space, degree, CoeffTraits<C>::from_int(1));
    return id;
}

/// Outer product; the slots of a come first.
template <class C>
TensorField<C> tensor_product(const TensorField<C>& a, const TensorField<C>& b) {
    const int n = a.dim();
    TensorField<C> r(a.variance() + b.variance(), n, a.space(), std::min(a.degree(), b.degree()),
                     a.label() + "*" + b.label());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) r.flat(i * b.size() + j) = a.flat(i) * b.flat(j);
    return r;
}

/// Sum over each pair of slots (one upper, one lower); the paired slots are
/// removed and the remaining ones keep their order.
template <class C>
TensorField<C> contract(const TensorField<C>& t, const std::vector<std::pair<int, int>>& pairs) {
    const int n = t.dim();
    std::vector<bool> used(t.rank(), false);
    for (auto [p, q] : pairs) {
        if (p < 0 || q < 0 || p >= t.rank() || q >= t.rank() || p == q || used[p] || used[q])
            throw VarianceError("invalid contraction slots");
        if (t.variance()[p] == t.variance()[q])
            throw VarianceError("contraction pairs slots of equal variance");
        used[p] = used[q] = true;
    }
    std::string var;
    std::vector<int> free_slots;
    for (int s = 0; s < t.rank(); ++s)
        if (!used[s]) {
            var += t.variance()[s];
            free_slots.push_back(s);
        }
    TensorField<C> r(var, n, t.space(), t.degree(), t.label());
    const std::size_t npairs = pairs.size();
    std::size_t inner = 1;
    for (std::size_t k = 0; k < npairs; ++k) inner *= n;
    std::vector<int> idx(t.rank());
    for (std::size_t out = 0; out < r.size(); ++out) {
        std::vector<int> fidx = r.unflatten(out);
        for (std::size_t s = 0; s < free_slots.size(); ++s) idx[free_slots[s]] = fidx[s];
        Jet<C> acc = Jet<C>::zero(t.space(), t.degree());
        for (std::size_t m = 0; m < inner; ++m) {
            std::size_t rem = m;
            for (std::size_t k = 0; k < npairs; ++k) {
                const int v = static_cast<int>(rem % n);
                rem /= n;
                idx[pairs[k].first] = v;
                idx[pairs[k].second] = v;
            }
            acc += t.flat(t.offset(idx));
        }
        r.flat(out) = std::move(acc);
    }
    return r;
}

/// (A B)^i_j = A^i_m B^m_j for endomorphism fields.
template <class C>
TensorField<C> compose(const TensorField<C>& A, const TensorField<C>& B) {
    const int n = A.dim();
    TensorField<C> r("ud", n, A.space(), std::min(A.degree(), B.degree()));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int m = 0; m < n; ++m) Jet<C>::fma(r.at(i, j), A.at(i, m), B.at(m, j));
    return r;
}

/// A applied to a vector field.
template <class C>
VectorField<C> apply(const TensorField<C>& A, const VectorField<C>& X) {
    const int n = A.dim();
    VectorField<C> r = make_vector<C>(n, A.space(), std::min(A.degree(), X.degree()));
    for (int i = 0; i < n; ++i)
        for (int m = 0; m < n; ++m) Jet<C>::fma(r[i], A.at(i, m), X[m]);
    return r;
}

/// Constant terms of an endomorphism field, as a matrix.
template <class C>
std::vector<std::vector<C>> constant_matrix(const TensorField<C>& A) {
    const int n = A.dim();
    std::vector<std::vector<C>> m(n, std::vector<C>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m[i][j] = A.at(i, j).constant_term();
    return m;
}

/// Determinant by elimination with exact pivots (partial pivoting in float mode).
template <class C>
C determinant(std::vector<std::vector<C>> m) {
    using T = CoeffTraits<C>;
    const int n = static_cast<int>(m.size());
    C det = T::from_int(1);
    for (int col = 0; col < n; ++col) {
        int piv = -1;
        double best = -1;
        for (int r = col; r < n; ++r) {
            if (T::is_zero(m[r][col])) continue;
            if constexpr (T::exact) {
                piv = r;
                break;
            } else if (std::fabs(m[r][col]) > best) {
                best = std::fabs(m[r][col]);
                piv = r;
            }
        }
        if (piv < 0) return T::from_int(0);
        if (piv != col) {
            std::swap(m[piv], m[col]);
            det = -det;
        }
        det *= m[col][col];
        for (int r = col + 1; r < n; ++r) {
            if (T::is_zero(m[r][col])) continue;
            C f = m[r][col] / m[col][col];
            for (int k = col; k < n; ++k) m[r][k] -= f * m[col][k];
        }
    }
    return det;
}

/// Inverse of an endomorphism field by Gauss-Jordan elimination over jets. A
/// pivot is usable when its constant term is nonzero; if none exists the
/// constant matrix is singular at the base point.
template <class C>
TensorField<C> endo_inverse(const TensorField<C>& A, const char* what = "endomorphism") {
    using T = CoeffTraits<C>;
    if (A.variance() != "ud") throw VarianceError("endo_inverse needs a (1,1) field");
    const int n = A.dim();
    const int d = A.degree();
    const auto& sp = A.space();
    std::vector<std::vector<Jet<C>>> m(n, std::vector<Jet<C>>(2 * n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            m[i][j] = A.at(i, j).truncated(d);
            m[i][n + j] = Jet<C>::constant(sp, d, T::from_int(i == j ? 1 : 0));
        }
    for (int col = 0; col < n; ++col) {
        int piv = -1;
        double best = 0;
        for (int r = col; r < n; ++r) {
            const C& c0 = m[r][col].constant_term();
            if (T::is_zero(c0)) continue;
            if constexpr (T::exact) {
                piv = r;
                break;
            } else if (std::fabs(c0) > best) {
                best = std::fabs(c0);
                piv = r;
            }
        }
        if (piv < 0 || (!T::exact && best <= kFloatTolerance))
            throw SingularAtBasepoint(std::string(what) + " is singular at the base point");
        std::swap(m[piv], m[col]);
        const Jet<C> inv = jet_inv(m[col][col]);
        for (auto& x : m[col]) x = x * inv;
        for (int r = 0; r < n; ++r) {
            if (r == col || m[r][col].is_exact_zero()) continue;
            const Jet<C> f = m[r][col];
            for (int k = 0; k < 2 * n; ++k) {
                if (m[col][k].is_exact_zero()) continue;
                m[r][k] -= f * m[col][k];
            }
        }
    }
    TensorField<C> r("ud", n, sp, d, "inverse");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) r.at(i, j) = m[i][n + j];
    return r;
}

}  // namespace biflat
