#pragma once

#include <string>
#include <vector>

#include "sdp/grad_check.hpp"

namespace sdp {

struct NamedReport {
    std::string name;
    GradientReport report;
};

// Central-difference verification battery over every differentiable primitive
// and every full model (extractor, denoiser objective, reconstructor with both
// injection projections). Runs at 64-bit on small fixed shapes; seeds are
// pinned to configurations whose ReLU pre-activations stay clear of zero, so
// the finite-difference reference is not polluted by kink crossings.
std::vector<NamedReport> gradient_battery(double epsilon = 1e-5);

} // namespace sdp
