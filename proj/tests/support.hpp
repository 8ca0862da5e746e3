#pragma once

// Small helpers shared by the unit tests.

#include "biflat/biflat.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace support {

using namespace biflat;
using Q = Rational;
using J = Jet<Q>;

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline ManifoldSpec data_spec(const std::string& rel) {
    return parse_spec(slurp(std::filesystem::path(BIFLAT_DATA_DIR) / rel));
}

inline FlatFStructure<Q> exact_structure(const std::string& rel, int D = 8) {
    return build_flat_f<Q>(data_spec(rel), D);
}

// Jet with small random rational coefficients up to degree `fill`.
inline J random_jet(const SpacePtr& sp, int D, std::mt19937_64& rng, int fill = -1) {
    std::uniform_int_distribution<int> num(-5, 5), den(1, 4);
    J j = J::zero(sp, D);
    const std::size_t count = sp->size(fill < 0 ? D : std::min(fill, D));
    for (std::size_t m = 0; m < count; ++m) {
        Q q(num(rng), den(rng));
        q.canonicalize();
        j[m] = q;
    }
    return j;
}

// The shifted variable s_v = t_v - p0_v as a jet.
inline J shifted(const SpacePtr& sp, int D, int v) { return J::variable(sp, D, v, Q(0)); }

inline J constant(const SpacePtr& sp, int D, const Q& q) { return J::constant(sp, D, q); }

// Coefficient of the monomial with the given exponents.
inline Q coef(const J& j, std::vector<int> e) {
    const long m = j.space().index(e);
    if (m < 0 || static_cast<std::size_t>(m) >= j.size()) return Q(0);
    return j[m];
}

inline J from_expr(const std::string& text, const std::vector<std::string>& coords, const std::vector<Q>& p0,
                   int D) {
    return jet_eval<Q>(parse_expr(text, coords), p0, D);
}

}  // namespace support

namespace support {

inline const CheckReport& report(const std::vector<CheckReport>& rs, const std::string& name) {
    for (const auto& r : rs)
        if (r.name == name) return r;
    throw std::runtime_error("no report named " + name);
}

inline bool all_pass(const std::vector<CheckReport>& rs) {
    for (const auto& r : rs)
        if (!r.passed()) return false;
    return true;
}

inline std::string failures(const std::vector<CheckReport>& rs) {
    std::string out;
    for (const auto& r : rs)
        if (!r.passed()) out += r.name + " " + r.detail + "\n";
    return out;
}

}  // namespace support
