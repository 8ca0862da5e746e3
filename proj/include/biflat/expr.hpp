#pragma once

// Expression trees for the manifold description language.

#include "biflat/coeff.hpp"

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace biflat {

enum class ExprKind { Rational, Coord, Neg, Add, Sub, Mul, Div, Pow, Exp };

/// Immutable expression node handle. Copies share structure, so values are
/// cheap to pass around and safe to read from several threads.
class Expr {
public:
    static Expr rational(const Rational& value);
    static Expr integer(long value) { return rational(Rational(value)); }
    static Expr coord(int index);
    static Expr neg(Expr operand);
    static Expr add(Expr lhs, Expr rhs);
    static Expr sub(Expr lhs, Expr rhs);
    static Expr mul(Expr lhs, Expr rhs);
    static Expr div(Expr lhs, Expr rhs);
    static Expr pow(Expr base, int exponent);
    static Expr exp(Expr operand);

    ExprKind kind() const { return node_->kind; }
    const Rational& value() const { return node_->value; }
    int coord_index() const { return node_->index; }
    int exponent() const { return node_->index; }
    Expr operand() const { return Expr(node_->lhs); }
    Expr lhs() const { return Expr(node_->lhs); }
    Expr rhs() const { return Expr(node_->rhs); }

    bool is_rational() const { return kind() == ExprKind::Rational; }
    bool is_zero() const { return is_rational() && sgn(value()) == 0; }
    bool is_one() const { return is_rational() && value() == 1; }

    // Largest coordinate index referenced, or -1 for constants.
    int max_coord() const;

private:
    struct Node {
        ExprKind kind;
        Rational value;
        int index = 0;
        std::shared_ptr<const Node> lhs;
        std::shared_ptr<const Node> rhs;
    };

    explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    static Expr make(ExprKind kind, Rational value, int index, const Expr* lhs, const Expr* rhs);

    std::shared_ptr<const Node> node_;
};

inline Expr Expr::make(ExprKind kind, Rational value, int index, const Expr* lhs,
                       const Expr* rhs) {
    auto node = std::make_shared<Node>();
    node->kind = kind;
    node->value = std::move(value);
    node->index = index;
    if (lhs) node->lhs = lhs->node_;
    if (rhs) node->rhs = rhs->node_;
    return Expr(std::move(node));
}

inline Expr Expr::rational(const Rational& value) {
    Rational v = value;
    v.canonicalize();
    return make(ExprKind::Rational, std::move(v), 0, nullptr, nullptr);
}
inline Expr Expr::coord(int index) {
    if (index < 0) throw std::invalid_argument("negative coordinate index");
    return make(ExprKind::Coord, Rational(0), index, nullptr, nullptr);
}
inline Expr Expr::neg(Expr operand) { return make(ExprKind::Neg, Rational(0), 0, &operand, nullptr); }
inline Expr Expr::add(Expr lhs, Expr rhs) { return make(ExprKind::Add, Rational(0), 0, &lhs, &rhs); }
inline Expr Expr::sub(Expr lhs, Expr rhs) { return make(ExprKind::Sub, Rational(0), 0, &lhs, &rhs); }
inline Expr Expr::mul(Expr lhs, Expr rhs) { return make(ExprKind::Mul, Rational(0), 0, &lhs, &rhs); }
inline Expr Expr::div(Expr lhs, Expr rhs) { return make(ExprKind::Div, Rational(0), 0, &lhs, &rhs); }
inline Expr Expr::pow(Expr base, int exponent) {
    if (exponent < 0) throw std::invalid_argument("negative integer power");
    return make(ExprKind::Pow, Rational(0), exponent, &base, nullptr);
}
inline Expr Expr::exp(Expr operand) { return make(ExprKind::Exp, Rational(0), 0, &operand, nullptr); }

inline int Expr::max_coord() const {
    switch (kind()) {
    case ExprKind::Rational: return -1;
    case ExprKind::Coord: return coord_index();
    case ExprKind::Neg:
    case ExprKind::Pow:
    case ExprKind::Exp: return operand().max_coord();
    default: return std::max(lhs().max_coord(), rhs().max_coord());
    }
}

inline bool structurally_equal(const Expr& a, const Expr& b) {
    if (a.kind() != b.kind()) return false;
    switch (a.kind()) {
    case ExprKind::Rational: return a.value() == b.value();
    case ExprKind::Coord: return a.coord_index() == b.coord_index();
    case ExprKind::Neg:
    case ExprKind::Exp: return structurally_equal(a.operand(), b.operand());
    case ExprKind::Pow:
        return a.exponent() == b.exponent() && structurally_equal(a.operand(), b.operand());
    default: return structurally_equal(a.lhs(), b.lhs()) && structurally_equal(a.rhs(), b.rhs());
    }
}

namespace detail {

inline bool is_atom_for_print(const Expr& e) {
    if (e.kind() == ExprKind::Coord) return true;
    if (e.kind() == ExprKind::Exp) return true;
    return e.is_rational() && sgn(e.value()) >= 0 && e.value().get_den() == 1;
}

inline std::string print(const Expr& e, std::span<const std::string> coords);

inline std::string print_child(const Expr& e, std::span<const std::string> coords) {
    if (is_atom_for_print(e)) return print(e, coords);
    return "(" + print(e, coords) + ")";
}

inline std::string print(const Expr& e, std::span<const std::string> coords) {
    switch (e.kind()) {
    case ExprKind::Rational:
        // Non-integer or negative literals are always wrapped so the printed
        // form reparses to the same node.
        if (sgn(e.value()) >= 0 && e.value().get_den() == 1) return e.value().get_str();
        return "(" + e.value().get_str() + ")";
    case ExprKind::Coord:
        if (e.coord_index() < static_cast<int>(coords.size())) return coords[e.coord_index()];
        return "x" + std::to_string(e.coord_index() + 1);
    case ExprKind::Neg: return "-" + print_child(e.operand(), coords);
    case ExprKind::Add: return print_child(e.lhs(), coords) + " + " + print_child(e.rhs(), coords);
    case ExprKind::Sub: return print_child(e.lhs(), coords) + " - " + print_child(e.rhs(), coords);
    case ExprKind::Mul: return print_child(e.lhs(), coords) + "*" + print_child(e.rhs(), coords);
    case ExprKind::Div: {
        // "2/(3)": an integer right operand must not fuse into a literal.
        std::string rhs = print(e.rhs(), coords);
        if (!(e.rhs().kind() == ExprKind::Coord || e.rhs().kind() == ExprKind::Exp)) rhs = "(" + rhs + ")";
        return print_child(e.lhs(), coords) + "/" + rhs;
    }
    case ExprKind::Pow:
        return print_child(e.operand(), coords) + "^" + std::to_string(e.exponent());
    case ExprKind::Exp: return "exp(" + print(e.operand(), coords) + ")";
    }
    return {};
}

}  // namespace detail

/// Pretty-print with explicit parentheses; the output reparses to a structurally
/// identical tree.
inline std::string to_string(const Expr& e, std::span<const std::string> coords = {}) {
    return detail::print(e, coords);
}

namespace detail {

inline Expr fold_add(Expr a, Expr b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.is_rational() && b.is_rational()) return Expr::rational(a.value() + b.value());
    return Expr::add(std::move(a), std::move(b));
}
inline Expr fold_neg(Expr a) {
    if (a.is_zero()) return a;
    if (a.kind() == ExprKind::Neg) return a.operand();
    return Expr::neg(std::move(a));
}
inline Expr fold_sub(Expr a, Expr b) {
    if (b.is_zero()) return a;
    if (a.is_zero()) return fold_neg(std::move(b));
    return Expr::sub(std::move(a), std::move(b));
}
inline Expr fold_mul(Expr a, Expr b) {
    if (a.is_zero() || b.is_zero()) return Expr::integer(0);
    if (a.is_one()) return b;
    if (b.is_one()) return a;
    if (a.is_rational() && b.is_rational()) return Expr::rational(a.value() * b.value());
    return Expr::mul(std::move(a), std::move(b));
}

}  // namespace detail

/// Symbolic partial derivative with respect to coordinate `var`, with only
/// trivial zero/one folding.
inline Expr differentiate(const Expr& e, int var) {
    using namespace detail;
    switch (e.kind()) {
    case ExprKind::Rational: return Expr::integer(0);
    case ExprKind::Coord: return Expr::integer(e.coord_index() == var ? 1 : 0);
    case ExprKind::Neg: return fold_neg(differentiate(e.operand(), var));
    case ExprKind::Add: return fold_add(differentiate(e.lhs(), var), differentiate(e.rhs(), var));
    case ExprKind::Sub: return fold_sub(differentiate(e.lhs(), var), differentiate(e.rhs(), var));
    case ExprKind::Mul:
        return fold_add(fold_mul(differentiate(e.lhs(), var), e.rhs()),
                        fold_mul(e.lhs(), differentiate(e.rhs(), var)));
    case ExprKind::Div: {
        Expr da = differentiate(e.lhs(), var);
        Expr db = differentiate(e.rhs(), var);
        if (db.is_zero()) {
            if (da.is_zero()) return Expr::integer(0);
            return Expr::div(da, e.rhs());
        }
        Expr num = fold_sub(fold_mul(da, e.rhs()), fold_mul(e.lhs(), db));
        return Expr::div(num, Expr::pow(e.rhs(), 2));
    }
    case ExprKind::Pow: {
        const int n = e.exponent();
        if (n == 0) return Expr::integer(0);
        Expr du = differentiate(e.operand(), var);
        if (du.is_zero()) return Expr::integer(0);
        Expr lower = n == 1 ? Expr::integer(1) : (n == 2 ? e.operand() : Expr::pow(e.operand(), n - 1));
        return fold_mul(fold_mul(Expr::integer(n), lower), du);
    }
    case ExprKind::Exp: {
        Expr du = differentiate(e.operand(), var);
        return fold_mul(e, du);
    }
    }
    return Expr::integer(0);
}

}  // namespace biflat
