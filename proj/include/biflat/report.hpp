#pragma once

// Check results.

#include "biflat/geometry.hpp"

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace biflat {

enum class Status { Pass, Fail, Vacuous, Error };

inline const char* to_string(Status s) {
    switch (s) {
    case Status::Pass: return "pass";
    case Status::Fail: return "fail";
    case Status::Vacuous: return "vacuous";
    case Status::Error: return "error";
    }
    return "?";
}

struct Residual {
    bool exact = true;
    bool zero = true;        // every residual coefficient vanished (exactly, or within tolerance)
    double max_abs = 0;      // largest residual coefficient seen
    int certified_order = -1;  // jet order to which the residual is known
    std::size_t components = 0;
};

struct CheckReport {
    std::string name;
    std::string anchor;
    Status status = Status::Pass;
    Residual residual;
    std::vector<std::pair<std::string, std::string>> samples;
    std::string detail;
    double elapsed_ms = 0;

    bool passed() const { return status == Status::Pass || status == Status::Vacuous; }
};

/// Accumulates residual jets and settles a status.
template <class C>
class ResidualMeter {
public:
    void add(const Jet<C>& j) {
        ++res_.components;
        res_.max_abs = std::max(res_.max_abs, j.max_abs());
        if (!j.vanishes()) res_.zero = false;
        order_ = std::min(order_, j.degree());
    }
    void add(const TensorField<C>& t) {
        for (std::size_t k = 0; k < t.size(); ++k) add(t.flat(k));
    }
    void add(const Form<C>& f) {
        for (auto m : f.masks())
            for (int v = 0; v < f.values(); ++v) add(f.at(v, m));
    }
    // Residual difference of two jets.
    void add_diff(const Jet<C>& a, const Jet<C>& b) { add(a - b); }
    void add_diff(const TensorField<C>& a, const TensorField<C>& b) { add(a - b); }

    bool zero() const { return res_.zero; }
    std::size_t components() const { return res_.components; }

    Residual finish() const {
        Residual r = res_;
        r.exact = CoeffTraits<C>::exact;
        r.certified_order = res_.components ? order_ : -1;
        return r;
    }

private:
    Residual res_;
    int order_ = 1 << 30;
};

/// Times a check and fills in the common fields.
class CheckTimer {
public:
    CheckTimer() : start_(std::chrono::steady_clock::now()) {}
    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

/// Build a report from a meter: pass iff the residual vanishes and something was
/// actually compared; vacuous when there were no components to compare.
template <class C>
CheckReport make_report(std::string name, std::string anchor, const ResidualMeter<C>& meter,
                        const CheckTimer& timer, std::string detail = {}) {
    CheckReport r;
    r.name = std::move(name);
    r.anchor = std::move(anchor);
    r.residual = meter.finish();
    if (meter.components() == 0) r.status = Status::Vacuous;
    else r.status = meter.zero() && r.residual.certified_order >= 0 ? Status::Pass : Status::Fail;
    r.detail = std::move(detail);
    r.elapsed_ms = timer.elapsed_ms();
    return r;
}

inline CheckReport error_report(std::string name, std::string anchor, const std::string& what) {
    CheckReport r;
    r.name = std::move(name);
    r.anchor = std::move(anchor);
    r.status = Status::Error;
    r.residual.zero = false;
    r.detail = what;
    return r;
}

inline bool all_passed(const std::vector<CheckReport>& reports) {
    for (const auto& r : reports)
        if (!r.passed()) return false;
    return true;
}

}  // namespace biflat
