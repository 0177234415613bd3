#pragma once

#include <functional>
#include <vector>

#include "seizurecast/tensor.hpp"

namespace seizurecast {

// Scalar loss over a set of tensors; grad_check perturbs the tensors' data,
// so the function must read values from the vector it is handed.
using LossFn = std::function<double(const std::vector<Tensor>&)>;

struct GradCheckOptions {
    double step = 1e-3;
    // An element is skipped as sitting on a kink when its one-sided finite
    // differences disagree by more than this fraction of their magnitude;
    // central differences are meaningless across a non-differentiable point.
    double kink_margin = 0.1;
};

struct GradCheckEntry {
    Eigen::Index checked = 0;
    Eigen::Index skipped = 0;
    double max_rel_error = 0.0;
    Eigen::Index worst_element = -1;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> inputs;
    double max_rel_error = 0.0;
    Eigen::Index total_checked = 0;
    Eigen::Index total_skipped = 0;

    bool pass(double tolerance) const { return max_rel_error <= tolerance; }
};

// Central-difference check of analytic gradients. Each input tensor must
// carry its analytic gradient in the grad slot. The relative error of an
// element is |analytic - numeric| / max(|analytic|, |numeric|, 1e-6).
GradCheckReport grad_check(const LossFn& f, const std::vector<Tensor>& inputs,
                           const GradCheckOptions& options = {});

} // namespace seizurecast
