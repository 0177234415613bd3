#include "seizurecast/grad_check.hpp"

#include <cmath>

#include "seizurecast/errors.hpp"

namespace seizurecast {

GradCheckReport grad_check(const LossFn& f, const std::vector<Tensor>& inputs,
                           const GradCheckOptions& options) {
    if (!f) throw ParamError("grad check: loss function is empty");
    if (options.step <= 0.0) {
        throw ParamError("grad check: step must be positive, got " + std::to_string(options.step));
    }
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (!inputs[i].has_grad()) {
            throw ParamError("grad check: input " + std::to_string(i) +
                             " carries no analytic gradient");
        }
        if (inputs[i].grad->size() != inputs[i].size()) {
            throw ShapeError("grad check: input " + std::to_string(i) +
                             " gradient size does not match its data");
        }
    }

    std::vector<Tensor> probe = inputs;
    const double h = options.step;
    const double f0 = f(probe);

    GradCheckReport report;
    report.inputs.resize(inputs.size());
    for (std::size_t t = 0; t < probe.size(); ++t) {
        GradCheckEntry& entry = report.inputs[t];
        for (Eigen::Index e = 0; e < probe[t].size(); ++e) {
            const double original = probe[t].data[e];
            probe[t].data[e] = original + h;
            const double fp = f(probe);
            probe[t].data[e] = original - h;
            const double fm = f(probe);
            probe[t].data[e] = original;

            const double forward = (fp - f0) / h;
            const double backward = (f0 - fm) / h;
            const double disagreement = std::abs(forward - backward);
            const double scale = std::max(std::abs(forward), std::abs(backward));
            if (disagreement > options.kink_margin * scale + 1e-9) {
                ++entry.skipped;
                ++report.total_skipped;
                continue;
            }

            const double numeric = (fp - fm) / (2.0 * h);
            const double analytic = (*inputs[t].grad)[e];
            const double rel = std::abs(analytic - numeric) /
                               std::max({std::abs(analytic), std::abs(numeric), 1e-6});
            ++entry.checked;
            ++report.total_checked;
            if (rel > entry.max_rel_error) {
                entry.max_rel_error = rel;
                entry.worst_element = e;
            }
            if (rel > report.max_rel_error) report.max_rel_error = rel;
        }
    }
    return report;
}

} // namespace seizurecast
