#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "sdp/param_store.hpp"

namespace sdp {

// Finite-difference verification of analytic gradients. Meant to run at
// 64-bit; the relative error is measured against the central-difference
// reference with a floor tied to the gradient magnitude, so a gradient that is
// wrong by a factor of two reports an error of ~1.0.

struct GradientReport {
    struct Entry {
        std::string name;
        double max_rel_err = 0.0;
        double max_abs_err = 0.0;
    };
    std::vector<Entry> entries;
    double epsilon = 0.0;
    bool all_finite = true;

    double max_rel_err() const {
        double m = 0.0;
        for (const auto& e : entries) m = std::max(m, e.max_rel_err);
        return m;
    }
    bool passed(double tol) const { return all_finite && max_rel_err() < tol; }
};

// fn(params, grads): returns the scalar loss; when grads != nullptr it must
// also accumulate analytic gradients into it (same names/shapes as params).
using LossFn = std::function<double(const ParamStore<double>&, ParamStore<double>*)>;

inline GradientReport grad_check(const LossFn& fn, const ParamStore<double>& params,
                                 double epsilon = 1e-5) {
    GradientReport report;
    report.epsilon = epsilon;

    ParamStore<double> analytic = params.zeros_like();
    const double base = fn(params, &analytic);
    if (!std::isfinite(base)) report.all_finite = false;

    ParamStore<double> work = params;
    for (auto& [name, tensor] : work) {
        // finite-difference pass for this parameter
        std::vector<double> fd(tensor.data.size());
        double gmax = 0.0;
        for (size_t i = 0; i < tensor.data.size(); ++i) {
            const double saved = tensor.data[i];
            tensor.data[i] = saved + epsilon;
            const double f1 = fn(work, nullptr);
            tensor.data[i] = saved - epsilon;
            const double f2 = fn(work, nullptr);
            tensor.data[i] = saved;
            fd[i] = (f1 - f2) / (2.0 * epsilon);
            if (!std::isfinite(fd[i])) report.all_finite = false;
            gmax = std::max(gmax, std::abs(fd[i]));
        }

        GradientReport::Entry entry;
        entry.name = name;
        const auto& an = analytic.at(name);
        const double floor = 1e-7 * std::max(1.0, gmax);
        for (size_t i = 0; i < fd.size(); ++i) {
            const double a = an.data[i];
            if (!std::isfinite(a)) report.all_finite = false;
            const double abs_err = std::abs(a - fd[i]);
            const double rel = abs_err / std::max(std::abs(fd[i]), floor);
            entry.max_abs_err = std::max(entry.max_abs_err, abs_err);
            entry.max_rel_err = std::max(entry.max_rel_err, rel);
        }
        report.entries.push_back(std::move(entry));
    }
    return report;
}

} // namespace sdp
