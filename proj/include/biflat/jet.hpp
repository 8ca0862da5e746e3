#pragma once

// Truncated multivariate Taylor series at a base point.
//
// Coefficients of monomials in the shifted variables s = t - p0 are stored
// densely in graded order, so the coefficients of total degree <= d always form
// a prefix of the vector. A jet of degree d knows its coefficients through total
// degree d; binary operations keep the smaller of the two degrees.

#include "biflat/coeff.hpp"
#include "biflat/errors.hpp"
#include "biflat/expr.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <sstream>
#include <type_traits>
#include <string>
#include <vector>

namespace biflat {

class JetSpace {
public:
    static std::shared_ptr<const JetSpace> get(int nvars, int max_degree) {
        static std::mutex mu;
        static std::map<std::pair<int, int>, std::shared_ptr<const JetSpace>> cache;
        if (nvars <= 0 || max_degree < 0)
            throw std::invalid_argument("jet space needs n > 0 and D >= 0");
        std::lock_guard<std::mutex> lock(mu);
        auto& slot = cache[{nvars, max_degree}];
        if (!slot) slot = std::shared_ptr<const JetSpace>(new JetSpace(nvars, max_degree));
        return slot;
    }

    int nvars() const { return n_; }
    int max_degree() const { return D_; }

    // Number of monomials of total degree <= d.
    std::size_t size(int d) const {
        if (d < 0) return 0;
        return prefix_[std::min(d, D_) + 1];
    }
    std::size_t size() const { return size(D_); }

    int degree_of(std::size_t m) const { return deg_[m]; }
    int exponent(std::size_t m, int v) const { return exps_[m * n_ + v]; }
    std::span<const int> exponents(std::size_t m) const {
        return {exps_.data() + m * n_, static_cast<std::size_t>(n_)};
    }

    // Index of a monomial, or -1 if it is outside the space.
    long index(std::span<const int> e) const {
        auto it = lookup_.find(std::vector<int>(e.begin(), e.end()));
        return it == lookup_.end() ? -1 : static_cast<long>(it->second);
    }

    // product_row(i)[j] is the index of monomial i times monomial j, defined for
    // j < size(D - degree_of(i)).
    const std::vector<std::uint32_t>& product_row(std::size_t i) const { return prod_[i]; }
    // Index of m - e_v (or -1 when the exponent of v is zero).
    std::int32_t down(int v, std::size_t m) const { return down_[v * size() + m]; }
    // Index of m + e_v (or -1 when the degree would exceed D).
    std::int32_t up(int v, std::size_t m) const { return up_[v * size() + m]; }

private:
    JetSpace(int n, int D) : n_(n), D_(D) {
        std::vector<int> cur(n, 0);
        prefix_.push_back(0);
        for (int d = 0; d <= D; ++d) {
            enumerate(cur, 0, d);
            prefix_.push_back(deg_.size());
        }
        const std::size_t N = deg_.size();
        for (std::size_t m = 0; m < N; ++m)
            lookup_[std::vector<int>(exps_.begin() + m * n, exps_.begin() + (m + 1) * n)] = m;
        prod_.resize(N);
        std::vector<int> tmp(n);
        for (std::size_t i = 0; i < N; ++i) {
            const std::size_t lim = size(D - deg_[i]);
            prod_[i].resize(lim);
            for (std::size_t j = 0; j < lim; ++j) {
                for (int v = 0; v < n; ++v) tmp[v] = exps_[i * n + v] + exps_[j * n + v];
                prod_[i][j] = static_cast<std::uint32_t>(lookup_.at(tmp));
            }
        }
        down_.assign(static_cast<std::size_t>(n) * N, -1);
        up_.assign(static_cast<std::size_t>(n) * N, -1);
        for (int v = 0; v < n; ++v) {
            for (std::size_t m = 0; m < N; ++m) {
                for (int w = 0; w < n; ++w) tmp[w] = exps_[m * n + w];
                if (tmp[v] > 0) {
                    tmp[v] -= 1;
                    down_[v * N + m] = static_cast<std::int32_t>(lookup_.at(tmp));
                    tmp[v] += 1;
                }
                if (deg_[m] < D) {
                    tmp[v] += 1;
                    up_[v * N + m] = static_cast<std::int32_t>(lookup_.at(tmp));
                }
            }
        }
    }

    void enumerate(std::vector<int>& cur, int v, int remaining) {
        if (v == n_ - 1) {
            cur[v] = remaining;
            exps_.insert(exps_.end(), cur.begin(), cur.end());
            int d = 0;
            for (int x : cur) d += x;
            deg_.push_back(d);
            return;
        }
        for (int k = remaining; k >= 0; --k) {
            cur[v] = k;
            enumerate(cur, v + 1, remaining - k);
        }
    }

    int n_;
    int D_;
    std::vector<int> exps_;
    std::vector<int> deg_;
    std::vector<std::size_t> prefix_;
    std::map<std::vector<int>, std::size_t> lookup_;
    std::vector<std::vector<std::uint32_t>> prod_;
    std::vector<std::int32_t> down_;
    std::vector<std::int32_t> up_;
};

using SpacePtr = std::shared_ptr<const JetSpace>;

template <class C>
class Jet {
public:
    using Traits = CoeffTraits<C>;

    Jet() = default;
    Jet(SpacePtr space, int degree) : space_(std::move(space)), degree_(degree) {
        degree_ = std::min(degree_, space_->max_degree());
        coef_.assign(space_->size(degree_), Traits::from_int(0));
    }

    static Jet zero(SpacePtr space, int degree) { return Jet(std::move(space), degree); }
    static Jet constant(SpacePtr space, int degree, const C& value) {
        Jet j(std::move(space), degree);
        if (!j.coef_.empty()) j.coef_[0] = value;
        return j;
    }
    // The coordinate function t_v = p0_v + s_v.
    static Jet variable(SpacePtr space, int degree, int v, const C& p0v) {
        Jet j = constant(std::move(space), degree, p0v);
        if (j.degree_ >= 1) {
            std::vector<int> e(j.space_->nvars(), 0);
            e[v] = 1;
            j.coef_[j.space_->index(e)] = Traits::from_int(1);
        }
        return j;
    }

    bool valid() const { return static_cast<bool>(space_); }
    const SpacePtr& space_ptr() const { return space_; }
    const JetSpace& space() const { return *space_; }
    int nvars() const { return space_->nvars(); }
    int degree() const { return degree_; }
    std::size_t size() const { return coef_.size(); }
    const C& operator[](std::size_t m) const { return coef_[m]; }
    C& operator[](std::size_t m) { return coef_[m]; }
    const std::vector<C>& coefficients() const { return coef_; }

    C constant_term() const {
        if (coef_.empty()) throw JetError(JetErrorKind::DegreeExhausted, "jet has no coefficients");
        return coef_[0];
    }

    Jet truncated(int d) const {
        Jet r(space_, std::min(d, degree_));
        std::copy_n(coef_.begin(), r.coef_.size(), r.coef_.begin());
        return r;
    }

    bool is_exact_zero() const {
        return std::all_of(coef_.begin(), coef_.end(), [](const C& x) { return Traits::is_zero(x); });
    }
    double max_abs() const {
        double m = 0;
        for (const C& x : coef_) m = std::max(m, Traits::magnitude(x));
        return m;
    }
    // Zero in the sense of the coefficient mode: exactly, or within tolerance.
    bool vanishes() const {
        if constexpr (Traits::exact) return is_exact_zero();
        else return max_abs() <= kFloatTolerance;
    }

    Jet& operator+=(const Jet& o) { return accumulate(o, false); }
    Jet& operator-=(const Jet& o) { return accumulate(o, true); }
    Jet& operator*=(const C& s) {
        for (C& x : coef_) x *= s;
        return *this;
    }
    Jet operator-() const {
        Jet r = *this;
        for (C& x : r.coef_) x = -x;
        return r;
    }
    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator*(Jet a, const C& s) { return a *= s; }
    friend Jet operator*(const C& s, Jet a) { return a *= s; }
    friend Jet operator*(const Jet& a, const Jet& b) { return multiply(a, b); }

    // acc += a * b, truncated to acc's degree as well.
    static void fma(Jet& acc, const Jet& a, const Jet& b) {
        check_same(acc, a);
        check_same(acc, b);
        const int d = std::min({acc.degree_, a.degree_, b.degree_});
        if (d < acc.degree_) acc = acc.truncated(d);
        if constexpr (std::is_same_v<C, mpq_class>) {
            fma_integer(acc, a, b, d);
            return;
        }
        const JetSpace& sp = *acc.space_;
        const std::size_t na = sp.size(d);
        for (std::size_t i = 0; i < na; ++i) {
            const C& ai = a.coef_[i];
            if (Traits::is_zero(ai)) continue;
            const auto& row = sp.product_row(i);
            const std::size_t nb = sp.size(d - sp.degree_of(i));
            for (std::size_t j = 0; j < nb; ++j) {
                const C& bj = b.coef_[j];
                if (Traits::is_zero(bj)) continue;
                Traits::fma(acc.coef_[row[j]], ai, bj);
            }
        }
    }

    static Jet multiply(const Jet& a, const Jet& b) {
        check_same(a, b);
        Jet r(a.space_, std::min(a.degree_, b.degree_));
        fma(r, a, b);
        return r;
    }

    friend bool operator==(const Jet& a, const Jet& b) {
        check_same(a, b);
        const std::size_t n = std::min(a.coef_.size(), b.coef_.size());
        for (std::size_t m = 0; m < n; ++m)
            if (a.coef_[m] != b.coef_[m]) return false;
        return true;
    }

private:
    // Rational case: scale both factors to integer vectors over a common
    // denominator, convolve with integer multiply-adds, and reduce each output
    // coefficient once.
    static void fma_integer(Jet& acc, const Jet& a, const Jet& b, int d) {
        const JetSpace& sp = *acc.space_;
        const std::size_t n = sp.size(d);
        std::vector<mpz_class> A, B;
        mpz_class da, db;
        if (!to_integers(a, n, A, da) || !to_integers(b, n, B, db)) return;
        std::vector<mpz_class> out(n);
        std::vector<bool> touched(n, false);
        for (std::size_t i = 0; i < n; ++i) {
            if (sgn(A[i]) == 0) continue;
            const auto& row = sp.product_row(i);
            const std::size_t nb = sp.size(d - sp.degree_of(i));
            for (std::size_t j = 0; j < nb; ++j) {
                if (sgn(B[j]) == 0) continue;
                mpz_addmul(out[row[j]].get_mpz_t(), A[i].get_mpz_t(), B[j].get_mpz_t());
                touched[row[j]] = true;
            }
        }
        const mpz_class den = da * db;
        for (std::size_t m = 0; m < n; ++m) {
            if (!touched[m] || sgn(out[m]) == 0) continue;
            mpq_class q(out[m], den);
            q.canonicalize();
            acc.coef_[m] += q;
        }
    }

    // Integer numerators over the lcm of the denominators; false if all zero.
    static bool to_integers(const Jet& a, std::size_t n, std::vector<mpz_class>& out, mpz_class& den) {
        den = 1;
        bool any = false;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& q = a.coef_[i];
            if (sgn(q) == 0) continue;
            any = true;
            if (q.get_den() != 1) mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), q.get_den_mpz_t());
        }
        if (!any) return false;
        out.assign(n, mpz_class(0));
        for (std::size_t i = 0; i < n; ++i) {
            const auto& q = a.coef_[i];
            if (sgn(q) == 0) continue;
            if (q.get_den() == den) out[i] = q.get_num();
            else {
                mpz_divexact(out[i].get_mpz_t(), den.get_mpz_t(), q.get_den_mpz_t());
                out[i] *= q.get_num();
            }
        }
        return true;
    }

    static void check_same(const Jet& a, const Jet& b) {
        if (!a.space_ || !b.space_) throw JetError(JetErrorKind::SpaceMismatch, "uninitialized jet");
        if (a.space_ != b.space_) throw JetError(JetErrorKind::SpaceMismatch, "jets live in different spaces");
    }

    Jet& accumulate(const Jet& o, bool subtract) {
        check_same(*this, o);
        if (o.degree_ < degree_) *this = truncated(o.degree_);
        for (std::size_t m = 0; m < coef_.size(); ++m) {
            if (subtract) coef_[m] -= o.coef_[m];
            else coef_[m] += o.coef_[m];
        }
        return *this;
    }

    SpacePtr space_;
    int degree_ = -1;
    std::vector<C> coef_;
};

template <class C>
Jet<C> jet_add(const Jet<C>& a, const Jet<C>& b) { return a + b; }
template <class C>
Jet<C> jet_mul(const Jet<C>& a, const Jet<C>& b) { return a * b; }

/// Multiplicative inverse; the constant term must be nonzero. Coefficients are
/// solved degree by degree from a * r = 1.
template <class C>
Jet<C> jet_inv(const Jet<C>& a) {
    using T = CoeffTraits<C>;
    if (a.size() == 0 || T::is_zero(a[0]))
        throw JetError(JetErrorKind::ZeroConstantTerm, "inverse of a jet with zero constant term");
    const JetSpace& sp = a.space();
    const C inv0 = T::from_int(1) / a[0];
    Jet<C> r(a.space_ptr(), a.degree());
    r[0] = inv0;
    // acc[m] collects sum a_i r_j over i + j = m with i > 0, filled as r_j become known.
    std::vector<C> acc(r.size(), T::from_int(0));
    for (int d = 0; d <= a.degree(); ++d) {
        const std::size_t lo = d == 0 ? 0 : sp.size(d - 1), hi = sp.size(d);
        for (std::size_t m = lo; m < hi; ++m) {
            if (d > 0) r[m] = -(acc[m] * inv0);
            if (T::is_zero(r[m])) continue;
            // Push r_m times the nonconstant part of a into higher coefficients.
            const auto& row = sp.product_row(m);
            const std::size_t na = sp.size(a.degree() - d);
            for (std::size_t i = 1; i < na; ++i) {
                if (T::is_zero(a[i])) continue;
                T::fma(acc[row[i]], r[m], a[i]);
            }
        }
    }
    return r;
}

template <class C>
Jet<C> jet_div(const Jet<C>& a, const Jet<C>& b) { return a * jet_inv(b); }

template <class C>
Jet<C> jet_pow(const Jet<C>& a, int exponent) {
    Jet<C> result = Jet<C>::constant(a.space_ptr(), a.degree(), CoeffTraits<C>::from_int(1));
    Jet<C> base = a;
    while (exponent > 0) {
        if (exponent & 1) result = result * base;
        exponent >>= 1;
        if (exponent) base = base * base;
    }
    return result;
}

/// exp of a jet. In exact mode the constant term must vanish.
template <class C>
Jet<C> jet_exp(const Jet<C>& a) {
    using T = CoeffTraits<C>;
    if (a.size() == 0) return a;
    C scale = T::from_int(1);
    if (!T::is_zero(a[0])) {
        if constexpr (T::exact) {
            throw JetError(JetErrorKind::ExpOfNonzeroConstant,
                           "exp of a nonzero constant " + T::str(a[0]) + " is not rational");
        } else {
            scale = std::exp(a[0]);
        }
    }
    Jet<C> v = a;
    v[0] = T::from_int(0);
    Jet<C> sum = Jet<C>::constant(a.space_ptr(), a.degree(), T::from_int(1));
    Jet<C> term = sum;
    for (int m = 1; m <= a.degree(); ++m) {
        term = term * v;
        term *= T::from_int(1) / T::from_int(m);
        sum += term;
    }
    return sum * scale;
}

/// Partial derivative in variable v; the degree drops by one.
template <class C>
Jet<C> jet_partial(const Jet<C>& a, int v) {
    const JetSpace& sp = a.space();
    if (v < 0 || v >= sp.nvars()) throw std::out_of_range("variable index out of range");
    Jet<C> r(a.space_ptr(), a.degree() - 1);
    for (std::size_t m = 0; m < a.size(); ++m) {
        const int k = sp.exponent(m, v);
        if (k == 0 || CoeffTraits<C>::is_zero(a[m])) continue;
        r[sp.down(v, m)] = a[m] * CoeffTraits<C>::from_int(k);
    }
    return r;
}

/// Antiderivative in variable v with zero integration constant in v; the
/// degree rises by one (capped at the space's maximum degree).
template <class C>
Jet<C> jet_integrate(const Jet<C>& a, int v) {
    const JetSpace& sp = a.space();
    if (v < 0 || v >= sp.nvars()) throw std::out_of_range("variable index out of range");
    Jet<C> r(a.space_ptr(), a.degree() + 1);
    for (std::size_t m = 0; m < a.size(); ++m) {
        const std::int32_t up = sp.up(v, m);
        if (up < 0 || static_cast<std::size_t>(up) >= r.size()) continue;
        if (CoeffTraits<C>::is_zero(a[m])) continue;
        r[up] = a[m] / CoeffTraits<C>::from_int(sp.exponent(m, v) + 1);
    }
    return r;
}

/// Potential f with df = sum_i R_i ds_i and f(p0) = 0, by the radial homotopy
/// formula. The caller is responsible for closedness of R.
template <class C>
Jet<C> radial_integrate(std::span<const Jet<C>> R) {
    const JetSpace& sp = R[0].space();
    int d = R[0].degree();
    for (const auto& r : R) d = std::min(d, r.degree());
    Jet<C> f(R[0].space_ptr(), d + 1);
    for (int i = 0; i < sp.nvars(); ++i) {
        for (std::size_t m = 0; m < sp.size(d); ++m) {
            if (CoeffTraits<C>::is_zero(R[i][m])) continue;
            const std::int32_t up = sp.up(i, m);
            if (up < 0 || static_cast<std::size_t>(up) >= f.size()) continue;
            f[up] += R[i][m] / CoeffTraits<C>::from_int(sp.degree_of(m) + 1);
        }
    }
    return f;
}

/// Taylor expansion of an expression at p0 to total degree D.
template <class C>
Jet<C> jet_eval(const Expr& ex, std::span<const Rational> p0, int D) {
    auto space = JetSpace::get(static_cast<int>(p0.size()), D);
    struct Eval {
        const SpacePtr& space;
        std::span<const Rational> p0;
        int D;
        Jet<C> operator()(const Expr& e) const {
            using T = CoeffTraits<C>;
            switch (e.kind()) {
            case ExprKind::Rational: return Jet<C>::constant(space, D, T::from(e.value()));
            case ExprKind::Coord:
                if (e.coord_index() >= static_cast<int>(p0.size()))
                    throw std::out_of_range("coordinate index exceeds base point dimension");
                return Jet<C>::variable(space, D, e.coord_index(), T::from(p0[e.coord_index()]));
            case ExprKind::Neg: return -(*this)(e.operand());
            case ExprKind::Add: return (*this)(e.lhs()) + (*this)(e.rhs());
            case ExprKind::Sub: return (*this)(e.lhs()) - (*this)(e.rhs());
            case ExprKind::Mul: return (*this)(e.lhs()) * (*this)(e.rhs());
            case ExprKind::Div: return jet_div((*this)(e.lhs()), (*this)(e.rhs()));
            case ExprKind::Pow: return jet_pow((*this)(e.operand()), e.exponent());
            case ExprKind::Exp: return jet_exp((*this)(e.operand()));
            }
            throw std::logic_error("unknown expression kind");
        }
    };
    return Eval{space, p0, D}(ex);
}

namespace detail {

inline std::string monomial_string(std::span<const int> e, std::span<const std::string> names) {
    std::string out;
    for (std::size_t v = 0; v < e.size(); ++v) {
        if (e[v] == 0) continue;
        if (!out.empty()) out += "*";
        out += v < names.size() ? names[v] : "x" + std::to_string(v + 1);
        if (e[v] > 1) out += "^" + std::to_string(e[v]);
    }
    return out;
}

template <class C>
std::string coef_string(const C& x) {
    if constexpr (CoeffTraits<C>::exact) {
        return x.get_str();
    } else {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.12g", x);
        return buf;
    }
}

}  // namespace detail

/// Rewrite a jet as a polynomial in the original coordinates t = p0 + s.
/// Returns the coefficient vector over the same monomial basis, but in t.
template <class C>
std::vector<C> to_original_coordinates(const Jet<C>& a, std::span<const Rational> p0) {
    using T = CoeffTraits<C>;
    const JetSpace& sp = a.space();
    const int n = sp.nvars();
    std::vector<C> out(a.size(), T::from_int(0));
    // Expand each s^m = prod_v (t_v - p0_v)^{m_v} by the binomial theorem.
    std::vector<int> sub(n);
    for (std::size_t m = 0; m < a.size(); ++m) {
        if (T::is_zero(a[m])) continue;
        auto e = sp.exponents(m);
        std::fill(sub.begin(), sub.end(), 0);
        while (true) {
            C w = a[m];
            for (int v = 0; v < n; ++v) {
                mpz_class binom;
                mpz_bin_uiui(binom.get_mpz_t(), e[v], sub[v]);
                Rational factor(binom);
                Rational shift = -p0[v];
                for (int k = sub[v]; k < e[v]; ++k) factor *= shift;
                w *= T::from(factor);
            }
            out[sp.index(sub)] += w;
            int v = 0;
            while (v < n && sub[v] == e[v]) sub[v++] = 0;
            if (v == n) break;
            ++sub[v];
        }
    }
    return out;
}

/// Human-readable polynomial. When p0 is given the polynomial is printed in the
/// original coordinates, otherwise in the shifted variables.
template <class C>
std::string to_string(const Jet<C>& a, std::span<const std::string> names = {},
                      std::span<const Rational> p0 = {}) {
    using T = CoeffTraits<C>;
    std::vector<C> coef = p0.empty() ? a.coefficients() : to_original_coordinates(a, p0);
    std::ostringstream os;
    bool first = true;
    for (std::size_t m = 0; m < coef.size(); ++m) {
        if (T::is_zero(coef[m])) continue;
        if constexpr (!T::exact) {
            if (std::fabs(coef[m]) <= kFloatTolerance) continue;
        }
        const std::string mono = detail::monomial_string(a.space().exponents(m), names);
        C c = coef[m];
        const bool negative = c < 0;
        if (negative) c = -c;
        if (first) os << (negative ? "-" : "");
        else os << (negative ? " - " : " + ");
        first = false;
        const std::string cs = detail::coef_string(c);
        if (mono.empty()) os << cs;
        else if (cs == "1") os << mono;
        else os << cs << "*" << mono;
    }
    if (first) os << "0";
    return os.str();
}

}  // namespace biflat
