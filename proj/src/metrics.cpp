#include "seizurecast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "seizurecast/errors.hpp"

namespace seizurecast {

namespace {

void check_samples(const std::vector<ScoredSample>& samples, const char* what) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const ScoredSample& s = samples[i];
        if (!(s.preictal_probability >= 0.0 && s.preictal_probability <= 1.0)) {
            throw ParamError(std::string(what) + ": sample " + std::to_string(i) +
                             " has probability " + std::to_string(s.preictal_probability));
        }
        if (s.true_label != 0 && s.true_label != 1) {
            throw ParamError(std::string(what) + ": sample " + std::to_string(i) + " has label " +
                             std::to_string(s.true_label));
        }
    }
}

std::string format_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

double sensitivity(const std::vector<ScoredSample>& samples, double threshold) {
    check_samples(samples, "sensitivity");
    long positives = 0;
    long flagged = 0;
    for (const ScoredSample& s : samples) {
        if (s.true_label == 1) {
            ++positives;
            if (s.preictal_probability >= threshold) ++flagged;
        }
    }
    if (positives == 0) throw MetricError("sensitivity: no preictal samples");
    return static_cast<double>(flagged) / static_cast<double>(positives);
}

double fpr_per_hour(const std::vector<ScoredSample>& samples, double threshold, double window_s) {
    check_samples(samples, "fpr_per_hour");
    if (window_s <= 0.0) throw ParamError("fpr_per_hour: window_s must be positive");
    long negatives = 0;
    long alarms = 0;
    for (const ScoredSample& s : samples) {
        if (s.true_label == 0) {
            ++negatives;
            if (s.preictal_probability >= threshold) ++alarms;
        }
    }
    if (negatives == 0) throw MetricError("fpr_per_hour: no interictal samples");
    const double hours = static_cast<double>(negatives) * window_s / 3600.0;
    return static_cast<double>(alarms) / hours;
}

RocCurve roc_and_auc(const std::vector<ScoredSample>& samples) {
    check_samples(samples, "roc");
    long positives = 0;
    long negatives = 0;
    for (const ScoredSample& s : samples) {
        (s.true_label == 1 ? positives : negatives) += 1;
    }
    if (positives == 0) throw MetricError("roc: no preictal samples");
    if (negatives == 0) throw MetricError("roc: no interictal samples");

    std::vector<ScoredSample> sorted = samples;
    std::stable_sort(sorted.begin(), sorted.end(), [](const ScoredSample& a, const ScoredSample& b) {
        return a.preictal_probability > b.preictal_probability;
    });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    long tp = 0;
    long fp = 0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        const double score = sorted[i].preictal_probability;
        while (i < sorted.size() && sorted[i].preictal_probability == score) {
            (sorted[i].true_label == 1 ? tp : fp) += 1;
            ++i;
        }
        const double fpr = static_cast<double>(fp) / static_cast<double>(negatives);
        const double tpr = static_cast<double>(tp) / static_cast<double>(positives);
        const RocPoint& prev = curve.points.back();
        curve.auc += (fpr - prev.fpr) * (tpr + prev.tpr) * 0.5;
        curve.points.push_back({fpr, tpr, score});
    }
    return curve;
}

void write_roc_csv(const RocCurve& curve, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "threshold,fpr,tpr\n";
    for (const RocPoint& p : curve.points) {
        out << format_double(p.threshold) << ',' << format_double(p.fpr) << ','
            << format_double(p.tpr) << '\n';
    }
    if (!out.good()) throw IoError("failed writing " + path.string());
}

void write_roc_svg(const RocCurve& curve, const std::filesystem::path& path) {
    constexpr double size = 440.0;
    constexpr double margin = 50.0;
    constexpr double plot = size - 2.0 * margin;
    auto px = [&](double fpr) { return margin + fpr * plot; };
    auto py = [&](double tpr) { return size - margin - tpr * plot; };

    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
        << "\" viewBox=\"0 0 " << size << " " << size << "\">\n"
        << "  <rect width=\"" << size << "\" height=\"" << size << "\" fill=\"white\"/>\n"
        << "  <line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\""
        << py(0) << "\" stroke=\"black\"/>\n"
        << "  <line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(0) << "\" y2=\""
        << py(1) << "\" stroke=\"black\"/>\n"
        << "  <line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\""
        << py(1) << "\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>\n";
    out << "  <polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"2\" points=\"";
    for (const RocPoint& p : curve.points) {
        out << px(p.fpr) << ',' << py(p.tpr) << ' ';
    }
    out << "\"/>\n";
    char label[64];
    std::snprintf(label, sizeof label, "AUC = %.3f", curve.auc);
    out << "  <text x=\"" << px(0.55) << "\" y=\"" << py(0.08) << "\" font-family=\"sans-serif\" "
        << "font-size=\"16\">" << label << "</text>\n"
        << "  <text x=\"" << px(0.4) << "\" y=\"" << (size - margin / 3.0)
        << "\" font-family=\"sans-serif\" font-size=\"14\">false positive rate</text>\n"
        << "  <text x=\"" << margin / 3.0 << "\" y=\"" << py(0.35)
        << "\" font-family=\"sans-serif\" font-size=\"14\" transform=\"rotate(-90 " << margin / 3.0
        << " " << py(0.35) << ")\">true positive rate</text>\n"
        << "</svg>\n";
    if (!out.good()) throw IoError("failed writing " + path.string());
}

} // namespace seizurecast
