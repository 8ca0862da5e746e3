#pragma once

// Characteristic polynomials and rational eigenvalues of rational matrices.

#include "biflat/coeff.hpp"

#include <algorithm>
#include <set>
#include <vector>

namespace biflat {

using RationalMatrix = std::vector<std::vector<Rational>>;

/// Coefficients p[0..n] of det(x I - A) = sum p[k] x^k (Faddeev-LeVerrier).
inline std::vector<Rational> characteristic_polynomial(const RationalMatrix& A) {
    const int n = static_cast<int>(A.size());
    std::vector<Rational> p(n + 1);
    p[n] = 1;
    RationalMatrix M(n, std::vector<Rational>(n, Rational(0)));
    for (int k = 1; k <= n; ++k) {
        RationalMatrix next(n, std::vector<Rational>(n, Rational(0)));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                for (int m = 0; m < n; ++m) next[i][j] += A[i][m] * M[m][j];
                if (i == j) next[i][j] += p[n - k + 1];
            }
        M = std::move(next);
        Rational tr = 0;
        for (int i = 0; i < n; ++i)
            for (int m = 0; m < n; ++m) tr += A[i][m] * M[m][i];
        p[n - k] = -tr / k;
    }
    return p;
}

inline Rational evaluate_polynomial(const std::vector<Rational>& p, const Rational& x) {
    Rational acc = 0;
    for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * x + *it;
    return acc;
}

namespace detail {

inline std::vector<mpz_class> positive_divisors(mpz_class v) {
    v = abs(v);
    std::vector<mpz_class> small, large;
    for (mpz_class d = 1; d * d <= v; ++d) {
        if (v % d == 0) {
            small.push_back(d);
            if (d * d != v) large.push_back(v / d);
        }
    }
    small.insert(small.end(), large.rbegin(), large.rend());
    return small;
}

}  // namespace detail

/// Distinct rational roots, by the rational root theorem.
inline std::vector<Rational> rational_roots(std::vector<Rational> p) {
    std::set<Rational> roots;
    while (p.size() > 1 && sgn(p.front()) == 0) {
        roots.insert(Rational(0));
        p.erase(p.begin());
    }
    while (p.size() > 1 && sgn(p.back()) == 0) p.pop_back();
    if (p.size() <= 1) return {roots.begin(), roots.end()};
    mpz_class l = 1;
    for (const auto& c : p) l = lcm(l, mpz_class(c.get_den()));
    std::vector<mpz_class> z;
    for (const auto& c : p) z.push_back(mpz_class(c * l));
    for (const auto& num : detail::positive_divisors(z.front()))
        for (const auto& den : detail::positive_divisors(z.back()))
            for (int s : {1, -1}) {
                Rational x(s * num, den);
                x.canonicalize();
                if (sgn(evaluate_polynomial(p, x)) == 0) roots.insert(x);
            }
    return {roots.begin(), roots.end()};
}

}  // namespace biflat
