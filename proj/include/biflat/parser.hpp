#pragma once

// Reader for .fman manifold descriptions.

#include "biflat/errors.hpp"
#include "biflat/expr.hpp"

#include <array>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace biflat {

using TensorEntries = std::map<std::array<int, 3>, Expr>;

struct ManifoldSpec {
    std::string name;
    int dim = 0;
    std::vector<std::string> coords;
    // Keys are 0-based (k, i, j) for the entry c^k_ij.
    TensorEntries c;
    TensorEntries a;
    std::optional<Expr> F;
    std::vector<std::vector<Rational>> eta;  // empty unless F is given
    std::vector<Expr> e;
    std::vector<Expr> E;
    std::vector<Rational> basepoint;
    bool df_mode = false;
    bool force_float = false;
    bool force_exact = false;

    bool has_prepotential() const { return F.has_value(); }
    bool has_a() const { return !a.empty(); }
};

namespace detail {

enum class Tok { Name, Int, String, Sym, Newline, End };

struct Token {
    Tok kind;
    std::string text;
    int line;
    int col;
};

inline std::vector<Token> tokenize(const std::string& src) {
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto advance = [&](std::size_t k) {
        i += k;
        col += static_cast<int>(k);
    };
    while (i < src.size()) {
        const char ch = src[i];
        if (ch == '#') {
            while (i < src.size() && src[i] != '\n') advance(1);
            continue;
        }
        if (ch == '\n') {
            out.push_back({Tok::Newline, "\\n", line, col});
            ++i;
            ++line;
            col = 1;
            continue;
        }
        if (ch == ' ' || ch == '\t' || ch == '\r') {
            advance(1);
            continue;
        }
        const int c0 = col;
        if (std::isdigit(static_cast<unsigned char>(ch))) {
            std::size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            out.push_back({Tok::Int, src.substr(i, j - i), line, c0});
            advance(j - i);
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
            std::size_t j = i;
            while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
            out.push_back({Tok::Name, src.substr(i, j - i), line, c0});
            advance(j - i);
            continue;
        }
        if (ch == '"') {
            std::size_t j = i + 1;
            while (j < src.size() && src[j] != '"' && src[j] != '\n') ++j;
            if (j >= src.size() || src[j] != '"')
                throw ParseError(ParseErrorKind::Syntax, line, c0, "unterminated string");
            out.push_back({Tok::String, src.substr(i + 1, j - i - 1), line, c0});
            advance(j + 1 - i);
            continue;
        }
        if (std::string("()[],=+-*/^").find(ch) != std::string::npos) {
            out.push_back({Tok::Sym, std::string(1, ch), line, c0});
            advance(1);
            continue;
        }
        throw ParseError(ParseErrorKind::Syntax, line, c0, std::string("unexpected character '") + ch + "'");
    }
    out.push_back({Tok::End, "", line, col});
    return out;
}

inline const std::set<std::string>& reserved_names() {
    static const std::set<std::string> names = {"manifold", "dim", "coords", "c", "a", "e", "E",
                                                "F", "eta", "basepoint", "flag", "exp"};
    return names;
}

class Parser {
public:
    Parser(std::vector<Token> toks, const std::vector<std::string>& coords)
        : toks_(std::move(toks)), coords_(coords) {}

    const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
    const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
    bool at_sym(const char* s) const { return peek().kind == Tok::Sym && peek().text == s; }
    bool at_name(const char* s) const { return peek().kind == Tok::Name && peek().text == s; }

    [[noreturn]] void fail(const Token& t, const std::string& msg) const {
        throw ParseError(ParseErrorKind::Syntax, t.line, t.col, msg);
    }
    void expect_sym(const char* s) {
        if (!at_sym(s)) fail(peek(), std::string("expected '") + s + "'" + found());
        next();
    }
    std::string found() const {
        const Token& t = peek();
        if (t.kind == Tok::End) return ", found end of input";
        if (t.kind == Tok::Newline) return ", found end of line";
        return ", found '" + t.text + "'";
    }
    long expect_int() {
        if (peek().kind != Tok::Int) fail(peek(), "expected integer" + found());
        const Token& t = next();
        if (t.text.size() > 9) fail(t, "integer too large");
        return std::stol(t.text);
    }
    void skip_newlines() {
        while (peek().kind == Tok::Newline) next();
    }
    void end_of_statement() {
        if (peek().kind != Tok::Newline && peek().kind != Tok::End) fail(peek(), "expected end of line" + found());
        skip_newlines();
    }

    // RATIONAL := "-"? INT ("/" INT)?
    Rational rational_literal() {
        bool neg = false;
        if (at_sym("-")) {
            next();
            neg = true;
        }
        if (peek().kind != Tok::Int) fail(peek(), "expected rational number" + found());
        const Token& num = next();
        mpz_class p(num.text), q(1);
        if (at_sym("/")) {
            next();
            if (peek().kind != Tok::Int) fail(peek(), "expected denominator" + found());
            const Token& den = next();
            q = mpz_class(den.text);
            if (q == 0) throw ParseError(ParseErrorKind::Syntax, den.line, den.col, "zero denominator");
        }
        Rational r(p, q);
        r.canonicalize();
        return neg ? Rational(-r) : r;
    }

    Expr expr() {
        Expr lhs = term();
        while (at_sym("+") || at_sym("-")) {
            const bool plus = next().text == "+";
            Expr rhs = term();
            lhs = plus ? Expr::add(lhs, rhs) : Expr::sub(lhs, rhs);
        }
        return lhs;
    }

    Expr term() {
        Expr lhs = factor();
        while (at_sym("*") || at_sym("/")) {
            const bool mul = next().text == "*";
            Expr rhs = factor();
            lhs = mul ? Expr::mul(lhs, rhs) : Expr::div(lhs, rhs);
        }
        return lhs;
    }

    Expr factor() {
        if (at_sym("-")) {
            next();
            return Expr::neg(factor());
        }
        Expr base = atom();
        if (at_sym("^")) {
            next();
            if (at_sym("-")) fail(peek(), "negative exponents are not allowed; use division");
            const long k = expect_int();
            return Expr::pow(base, static_cast<int>(k));
        }
        return base;
    }

    Expr atom() {
        const Token& t = peek();
        if (t.kind == Tok::Int) {
            next();
            mpz_class p(t.text);
            // INT "/" INT is a single literal unless the denominator carries an
            // exponent, in which case "/" is ordinary division.
            if (at_sym("/") && peek(1).kind == Tok::Int &&
                !(peek(2).kind == Tok::Sym && peek(2).text == "^")) {
                next();
                const Token& den = next();
                mpz_class q(den.text);
                if (q == 0) throw ParseError(ParseErrorKind::Syntax, den.line, den.col, "zero denominator");
                return Expr::rational(Rational(p, q));
            }
            return Expr::rational(Rational(p));
        }
        if (t.kind == Tok::Name) {
            if (t.text == "exp") {
                next();
                expect_sym("(");
                Expr inner = expr();
                expect_sym(")");
                return Expr::exp(inner);
            }
            for (std::size_t k = 0; k < coords_.size(); ++k) {
                if (coords_[k] == t.text) {
                    next();
                    return Expr::coord(static_cast<int>(k));
                }
            }
            throw ParseError(ParseErrorKind::UndeclaredCoordinate, t.line, t.col,
                             "undeclared coordinate '" + t.text + "'");
        }
        if (at_sym("(")) {
            next();
            Expr inner = expr();
            expect_sym(")");
            return inner;
        }
        fail(t, "expected expression" + found());
    }

    std::size_t pos_ = 0;

private:
    std::vector<Token> toks_;
    const std::vector<std::string>& coords_;
};

}  // namespace detail

/// Parse a standalone expression over the given coordinate names.
inline Expr parse_expr(const std::string& text, const std::vector<std::string>& coords) {
    detail::Parser p(detail::tokenize(text), coords);
    p.skip_newlines();
    Expr e = p.expr();
    p.skip_newlines();
    if (p.peek().kind != detail::Tok::End) p.fail(p.peek(), "unexpected trailing input" + p.found());
    return e;
}

/// Parse and validate a complete .fman document.
inline ManifoldSpec parse_spec(const std::string& text) {
    using detail::Tok;
    ManifoldSpec spec;
    std::vector<std::string>& coords = spec.coords;
    detail::Parser p(detail::tokenize(text), coords);
    p.skip_newlines();

    if (p.at_name("manifold")) {
        p.next();
        if (p.peek().kind != Tok::String && p.peek().kind != Tok::Name)
            p.fail(p.peek(), "expected manifold name" + p.found());
        spec.name = p.next().text;
        p.end_of_statement();
    }
    if (!p.at_name("dim")) p.fail(p.peek(), "expected 'dim'" + p.found());
    p.next();
    const detail::Token dim_tok = p.peek();
    const long dim = p.expect_int();
    if (dim < 1 || dim > 8)
        throw ParseError(ParseErrorKind::DimensionMismatch, dim_tok.line, dim_tok.col, "dimension must be in 1..8");
    spec.dim = static_cast<int>(dim);
    p.end_of_statement();
    if (!p.at_name("coords")) p.fail(p.peek(), "expected 'coords'" + p.found());
    const detail::Token coords_tok = p.next();
    while (p.peek().kind == Tok::Name) {
        const detail::Token& t = p.next();
        if (detail::reserved_names().count(t.text))
            throw ParseError(ParseErrorKind::Syntax, t.line, t.col, "'" + t.text + "' is reserved");
        if (std::find(coords.begin(), coords.end(), t.text) != coords.end())
            throw ParseError(ParseErrorKind::DuplicateEntry, t.line, t.col, "coordinate '" + t.text + "' repeated");
        coords.push_back(t.text);
    }
    if (static_cast<int>(coords.size()) != spec.dim)
        throw ParseError(ParseErrorKind::DimensionMismatch, coords_tok.line, coords_tok.col,
                         "dim " + std::to_string(spec.dim) + " but " + std::to_string(coords.size()) +
                             " coordinates declared");
    p.end_of_statement();

    const int n = spec.dim;
    std::map<std::array<int, 2>, std::pair<Rational, int>> eta_entries;  // value, line
    bool seen_e = false, seen_E = false, seen_bp = false;
    int first_c_line = 0, first_F_line = 0, first_a_line = 0, first_eta_line = 0;

    auto index_in_range = [&](const detail::Token& t, long v) {
        if (v < 1 || v > n)
            throw ParseError(ParseErrorKind::IndexOutOfRange, t.line, t.col,
                             "index " + std::to_string(v) + " out of range 1.." + std::to_string(n));
        return static_cast<int>(v - 1);
    };

    while (p.peek().kind != Tok::End) {
        const detail::Token head = p.peek();
        if (head.kind != Tok::Name) p.fail(head, "expected statement" + p.found());
        const std::string& kw = head.text;
        if (kw == "c" || kw == "a") {
            p.next();
            p.expect_sym("[");
            std::array<int, 3> idx{};
            for (int s = 0; s < 3; ++s) {
                if (s) p.expect_sym(",");
                const detail::Token it = p.peek();
                idx[s] = index_in_range(it, p.expect_int());
            }
            p.expect_sym("]");
            p.expect_sym("=");
            Expr value = p.expr();
            TensorEntries& target = kw == "c" ? spec.c : spec.a;
            if (target.count(idx))
                throw ParseError(ParseErrorKind::DuplicateEntry, head.line, head.col,
                                 "duplicate entry " + kw + "[" + std::to_string(idx[0] + 1) + "," +
                                     std::to_string(idx[1] + 1) + "," + std::to_string(idx[2] + 1) + "]");
            target.emplace(idx, value);
            int& first = kw == "c" ? first_c_line : first_a_line;
            if (!first) first = head.line;
        } else if (kw == "eta") {
            p.next();
            p.expect_sym("[");
            const detail::Token t1 = p.peek();
            const int i = index_in_range(t1, p.expect_int());
            p.expect_sym(",");
            const detail::Token t2 = p.peek();
            const int j = index_in_range(t2, p.expect_int());
            p.expect_sym("]");
            p.expect_sym("=");
            Rational v = p.rational_literal();
            if (eta_entries.count({i, j}))
                throw ParseError(ParseErrorKind::DuplicateEntry, head.line, head.col, "duplicate eta entry");
            eta_entries[{i, j}] = {v, head.line};
            if (!first_eta_line) first_eta_line = head.line;
        } else if (kw == "e" || kw == "E") {
            p.next();
            bool& seen = kw == "e" ? seen_e : seen_E;
            if (seen) throw ParseError(ParseErrorKind::DuplicateEntry, head.line, head.col, kw + " given twice");
            seen = true;
            p.expect_sym("=");
            p.expect_sym("(");
            std::vector<Expr>& vec = kw == "e" ? spec.e : spec.E;
            vec.push_back(p.expr());
            while (p.at_sym(",")) {
                p.next();
                vec.push_back(p.expr());
            }
            p.expect_sym(")");
            if (static_cast<int>(vec.size()) != n)
                throw ParseError(ParseErrorKind::DimensionMismatch, head.line, head.col,
                                 kw + " has " + std::to_string(vec.size()) + " components, expected " +
                                     std::to_string(n));
        } else if (kw == "F") {
            p.next();
            if (spec.F) throw ParseError(ParseErrorKind::DuplicateEntry, head.line, head.col, "F given twice");
            p.expect_sym("=");
            spec.F = p.expr();
            first_F_line = head.line;
        } else if (kw == "basepoint") {
            p.next();
            if (seen_bp) throw ParseError(ParseErrorKind::DuplicateEntry, head.line, head.col, "basepoint given twice");
            seen_bp = true;
            p.expect_sym("(");
            spec.basepoint.push_back(p.rational_literal());
            while (p.at_sym(",")) {
                p.next();
                spec.basepoint.push_back(p.rational_literal());
            }
            p.expect_sym(")");
            if (static_cast<int>(spec.basepoint.size()) != n)
                throw ParseError(ParseErrorKind::DimensionMismatch, head.line, head.col,
                                 "basepoint has " + std::to_string(spec.basepoint.size()) +
                                     " components, expected " + std::to_string(n));
        } else if (kw == "flag") {
            p.next();
            const detail::Token f = p.peek();
            if (f.kind != Tok::Name) p.fail(f, "expected flag name" + p.found());
            p.next();
            if (f.text == "float") spec.force_float = true;
            else if (f.text == "exact") spec.force_exact = true;
            else if (f.text == "df") spec.df_mode = true;
            else throw ParseError(ParseErrorKind::Syntax, f.line, f.col, "unknown flag '" + f.text + "'");
        } else if (kw == "manifold" || kw == "dim" || kw == "coords") {
            p.fail(head, "'" + kw + "' must appear once, at the top");
        } else {
            p.fail(head, "unknown statement '" + kw + "'");
        }
        p.end_of_statement();
    }

    const int eof_line = p.peek().line;
    if (spec.force_float && spec.force_exact)
        throw ParseError(ParseErrorKind::ConflictingStructure, eof_line, 1, "flags float and exact both set");
    if (spec.F && !spec.c.empty())
        throw ParseError(ParseErrorKind::ConflictingStructure, std::max(first_c_line, first_F_line), 1,
                         "both c entries and a prepotential F given");
    if (spec.F && !spec.a.empty())
        throw ParseError(ParseErrorKind::ConflictingStructure, first_a_line, 1,
                         "a prepotential chart is flat for eta; a entries are not allowed");
    if (!spec.F && !eta_entries.empty())
        throw ParseError(ParseErrorKind::MissingField, first_eta_line, 1, "eta given without a prepotential F");
    if (spec.F && eta_entries.empty())
        throw ParseError(ParseErrorKind::MissingField, first_F_line, 1, "prepotential F needs a metric eta");
    if (!spec.F && spec.c.empty())
        throw ParseError(ParseErrorKind::MissingField, eof_line, 1, "no product: give c entries or F with eta");
    if (spec.df_mode && !spec.F)
        throw ParseError(ParseErrorKind::MissingField, eof_line, 1, "flag df requires a prepotential F");
    if (!seen_e) throw ParseError(ParseErrorKind::MissingField, eof_line, 1, "unit field e missing");
    if (!seen_E) throw ParseError(ParseErrorKind::MissingField, eof_line, 1, "Euler field E missing");
    if (!seen_bp) throw ParseError(ParseErrorKind::MissingField, eof_line, 1, "basepoint missing");

    if (spec.F) {
        spec.df_mode = true;
        spec.eta.assign(n, std::vector<Rational>(n, Rational(0)));
        for (const auto& [ij, vl] : eta_entries) {
            auto [i, j] = ij;
            auto mirror = eta_entries.find({j, i});
            if (mirror != eta_entries.end() && mirror->second.first != vl.first)
                throw ParseError(ParseErrorKind::InvalidMetric, vl.second, 1, "eta is not symmetric");
            spec.eta[i][j] = vl.first;
            spec.eta[j][i] = vl.first;
        }
        // Invertibility over the rationals by exact elimination.
        auto m = spec.eta;
        for (int col = 0; col < n; ++col) {
            int piv = col;
            while (piv < n && sgn(m[piv][col]) == 0) ++piv;
            if (piv == n) throw ParseError(ParseErrorKind::InvalidMetric, first_eta_line, 1, "eta is singular");
            std::swap(m[piv], m[col]);
            for (int r = col + 1; r < n; ++r) {
                Rational f = m[r][col] / m[col][col];
                for (int k = col; k < n; ++k) m[r][k] -= f * m[col][k];
            }
        }
    }
    if (spec.name.empty()) spec.name = "unnamed";
    return spec;
}

}  // namespace biflat
