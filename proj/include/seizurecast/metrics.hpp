#pragma once

#include <filesystem>
#include <vector>

namespace seizurecast {

struct ScoredSample {
    double preictal_probability = 0.0;
    int true_label = 0; // 1 preictal, 0 interictal
};

// Fraction of preictal samples scored at or above the threshold.
double sensitivity(const std::vector<ScoredSample>& samples, double threshold = 0.5);

// False alarms per hour of interictal signal: interictal samples scored at or
// above the threshold, divided by the interictal hours the samples cover
// (count * window_s / 3600).
double fpr_per_hour(const std::vector<ScoredSample>& samples, double threshold = 0.5,
                    double window_s = 20.0);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

// ROC by sweeping the decision threshold over the distinct scores in
// descending order (tied scores advance the curve together), anchored at
// (0,0) and ending at (1,1); the AUC is the trapezoidal area, which equals
// the probability that a random preictal sample outscores a random
// interictal one, ties counting half.
RocCurve roc_and_auc(const std::vector<ScoredSample>& samples);

// "threshold,fpr,tpr" rows, one per curve point.
void write_roc_csv(const RocCurve& curve, const std::filesystem::path& path);

// Self-contained SVG plot of the curve with the chance diagonal and the AUC.
void write_roc_svg(const RocCurve& curve, const std::filesystem::path& path);

} // namespace seizurecast
