#pragma once

// Coefficient modes for jets: exact arbitrary-precision rationals or doubles.

#include <gmpxx.h>

#include <cmath>
#include <concepts>
#include <cstdio>
#include <string>

namespace biflat {

using Rational = mpq_class;

template <class C>
struct CoeffTraits;

template <>
struct CoeffTraits<mpq_class> {
    static constexpr bool exact = true;
    static constexpr const char* mode_name = "exact";

    static mpq_class from(const Rational& q) { return q; }
    static mpq_class from_int(long v) { return mpq_class(v); }
    static bool is_zero(const mpq_class& x) { return sgn(x) == 0; }
    static double magnitude(const mpq_class& x) { return std::fabs(x.get_d()); }
    static std::string str(const mpq_class& x) { return x.get_str(); }

    // acc += a * b without a heap temporary per call.
    static void fma(mpq_class& acc, const mpq_class& a, const mpq_class& b) {
        thread_local mpq_class tmp;
        mpq_mul(tmp.get_mpq_t(), a.get_mpq_t(), b.get_mpq_t());
        mpq_add(acc.get_mpq_t(), acc.get_mpq_t(), tmp.get_mpq_t());
    }
    static void fms(mpq_class& acc, const mpq_class& a, const mpq_class& b) {
        thread_local mpq_class tmp;
        mpq_mul(tmp.get_mpq_t(), a.get_mpq_t(), b.get_mpq_t());
        mpq_sub(acc.get_mpq_t(), acc.get_mpq_t(), tmp.get_mpq_t());
    }
};

template <>
struct CoeffTraits<double> {
    static constexpr bool exact = false;
    static constexpr const char* mode_name = "float";

    static double from(const Rational& q) { return q.get_d(); }
    static double from_int(long v) { return static_cast<double>(v); }
    static bool is_zero(double x) { return x == 0.0; }
    static double magnitude(double x) { return std::fabs(x); }
    static std::string str(double x) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return buf;
    }
    static void fma(double& acc, double a, double b) { acc += a * b; }
    static void fms(double& acc, double a, double b) { acc -= a * b; }
};

template <class C>
concept Coefficient = requires(C x) {
    { CoeffTraits<C>::exact } -> std::convertible_to<bool>;
    { CoeffTraits<C>::is_zero(x) } -> std::convertible_to<bool>;
};

using Exact = mpq_class;
using Float = double;

// Tolerance used for every float-mode residual check.
inline constexpr double kFloatTolerance = 1e-10;

}  // namespace biflat
