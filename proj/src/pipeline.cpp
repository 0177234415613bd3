#include "seizurecast/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "seizurecast/errors.hpp"

namespace seizurecast {

namespace {

constexpr double kTimeEps = 1e-9;

// Shared validity check for seizure schedules; returns an error message or
// an empty string. Callers raise their own exception type.
std::string check_spans(const std::vector<SeizureSpan>& seizures, double duration_s) {
    for (std::size_t i = 0; i < seizures.size(); ++i) {
        const SeizureSpan& s = seizures[i];
        if (!(s.onset_s < s.offset_s)) {
            return "seizure " + std::to_string(i) + " has onset " + std::to_string(s.onset_s) +
                   " not before offset " + std::to_string(s.offset_s);
        }
        if (s.onset_s < 0.0 || s.offset_s > duration_s + kTimeEps) {
            return "seizure " + std::to_string(i) + " [" + std::to_string(s.onset_s) + ", " +
                   std::to_string(s.offset_s) + "] lies outside the recording [0, " +
                   std::to_string(duration_s) + "]";
        }
        if (i > 0 && seizures[i].onset_s < seizures[i - 1].offset_s) {
            return "seizures " + std::to_string(i - 1) + " and " + std::to_string(i) +
                   " overlap or are out of order";
        }
    }
    return {};
}

} // namespace

void TimingPolicy::validate() const {
    if (pil_s <= 0.0) throw ParamError("timing: pil_s must be positive");
    if (sph_s < 0.0) throw ParamError("timing: sph_s must be non-negative");
    if (interictal_margin_s < 0.0) throw ParamError("timing: interictal_margin_s must be non-negative");
    if (lead_gap_s < 0.0) throw ParamError("timing: lead_gap_s must be non-negative");
    if (window_s <= 0.0) throw ParamError("timing: window_s must be positive");
    if (preictal_overlap_s < 0.0 || preictal_overlap_s >= window_s) {
        throw ParamError("timing: preictal_overlap_s must lie in [0, window_s)");
    }
}

void Recording::validate() const {
    if (sample_rate_hz <= 0.0) throw DataError("recording: sample rate must be positive");
    if (channels.empty()) throw DataError("recording: no channels");
    if (signal.rows() != static_cast<Eigen::Index>(channels.size())) {
        throw DataError("recording: signal has " + std::to_string(signal.rows()) +
                        " rows for " + std::to_string(channels.size()) + " channel names");
    }
    if (signal.cols() < 1) throw DataError("recording: empty signal");
    const std::string err = check_spans(seizures, duration_s());
    if (!err.empty()) throw DataError("recording: " + err);
}

const char* to_string(IntervalState state) {
    switch (state) {
        case IntervalState::interictal: return "interictal";
        case IntervalState::preictal: return "preictal";
        case IntervalState::sph: return "sph";
        case IntervalState::ictal: return "ictal";
        case IntervalState::excluded: return "excluded";
    }
    return "?";
}

std::vector<std::size_t> find_lead_seizures(const std::vector<SeizureSpan>& seizures,
                                            const TimingPolicy& policy) {
    policy.validate();
    std::vector<std::size_t> leads;
    for (std::size_t i = 0; i < seizures.size(); ++i) {
        bool lead = i == 0 || seizures[i].onset_s - seizures[i - 1].offset_s >= policy.lead_gap_s;
        // The preictal span plus horizon must fit before the onset.
        if (lead && seizures[i].onset_s < policy.pil_s + policy.sph_s) lead = false;
        if (lead) leads.push_back(i);
    }
    return leads;
}

std::vector<std::size_t> find_lead_seizures(const Recording& recording,
                                            const TimingPolicy& policy) {
    recording.validate();
    const std::string err = check_spans(recording.seizures, recording.duration_s());
    if (!err.empty()) throw DataError("recording: " + err);
    return find_lead_seizures(recording.seizures, policy);
}

std::vector<LabeledInterval> label_intervals(const Recording& recording,
                                             const TimingPolicy& policy) {
    recording.validate();
    policy.validate();
    const double duration = recording.duration_s();
    const std::vector<std::size_t> leads = find_lead_seizures(recording.seizures, policy);

    // Every time where the state can change, then one state per elementary
    // interval, decided by precedence at its midpoint.
    std::set<double> cuts{0.0, duration};
    auto add_cut = [&](double t) {
        if (t > 0.0 && t < duration) cuts.insert(t);
    };
    for (const SeizureSpan& s : recording.seizures) {
        add_cut(s.onset_s);
        add_cut(s.offset_s);
        add_cut(s.onset_s - policy.interictal_margin_s);
        add_cut(s.offset_s + policy.interictal_margin_s);
    }
    for (std::size_t i : leads) {
        add_cut(recording.seizures[i].onset_s - policy.sph_s);
        add_cut(recording.seizures[i].onset_s - policy.sph_s - policy.pil_s);
    }

    auto state_at = [&](double t) {
        for (const SeizureSpan& s : recording.seizures) {
            if (t >= s.onset_s && t < s.offset_s) return IntervalState::ictal;
        }
        for (std::size_t i : leads) {
            const double onset = recording.seizures[i].onset_s;
            if (t >= onset - policy.sph_s && t < onset) return IntervalState::sph;
        }
        for (std::size_t i : leads) {
            const double onset = recording.seizures[i].onset_s;
            if (t >= onset - policy.sph_s - policy.pil_s && t < onset - policy.sph_s) {
                return IntervalState::preictal;
            }
        }
        for (const SeizureSpan& s : recording.seizures) {
            // Exclusion zone is half-open [onset - margin, offset + margin), matching
            // the half-open convention used by every other interval kind.
            if (t >= s.onset_s - policy.interictal_margin_s &&
                t < s.offset_s + policy.interictal_margin_s) {
                return IntervalState::excluded;
            }
        }
        return IntervalState::interictal;
    };

    std::vector<LabeledInterval> intervals;
    const std::vector<double> edges(cuts.begin(), cuts.end());
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const IntervalState state = state_at(0.5 * (edges[i] + edges[i + 1]));
        if (!intervals.empty() && intervals.back().state == state) {
            intervals.back().end_s = edges[i + 1];
        } else {
            intervals.push_back({edges[i], edges[i + 1], state});
        }
    }
    return intervals;
}

std::vector<WindowSample> extract_windows(const Recording& recording,
                                          const std::vector<LabeledInterval>& intervals,
                                          const TimingPolicy& policy) {
    recording.validate();
    policy.validate();
    const Eigen::Index points = static_cast<Eigen::Index>(std::llround(policy.window_s * recording.sample_rate_hz));
    if (points < 1) {
        throw ParamError("windows: " + std::to_string(policy.window_s) + " s at " +
                         std::to_string(recording.sample_rate_hz) + " Hz holds no samples");
    }
    const Eigen::Index channels = recording.channel_count();
    const Eigen::Index total = recording.sample_count();

    std::vector<WindowSample> windows;
    for (const LabeledInterval& interval : intervals) {
        if (interval.state != IntervalState::interictal &&
            interval.state != IntervalState::preictal) {
            continue;
        }
        const bool preictal = interval.state == IntervalState::preictal;
        const double stride = preictal ? policy.preictal_stride_s() : policy.interictal_stride_s();
        for (Eigen::Index k = 0;; ++k) {
            const double t = interval.start_s + static_cast<double>(k) * stride;
            if (t + policy.window_s > interval.end_s + kTimeEps) break;
            const Eigen::Index start = static_cast<Eigen::Index>(std::llround(t * recording.sample_rate_hz));
            if (start + points > total) break;

            WindowSample sample;
            sample.data = Tensor({1, channels, points});
            Eigen::Map<RowMatrix>(sample.data.data.data(), channels, points) =
                recording.signal.block(0, start, channels, points);
            sample.label = preictal ? 1 : 0;
            sample.source_time_s = t;
            sample.subject_id = recording.subject_id;
            windows.push_back(std::move(sample));
        }
    }
    return windows;
}

SplitResult split_train_validation(std::vector<WindowSample> samples, double fraction, Rng& rng) {
    if (fraction <= 0.0 || fraction >= 1.0) {
        throw ParamError("split: fraction must lie in (0, 1), got " + std::to_string(fraction));
    }
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const int label = samples[i].label;
        if (label < 0 || label > 1) {
            throw ParamError("split: sample " + std::to_string(i) + " has label " +
                             std::to_string(label));
        }
        by_class[label].push_back(i);
    }
    for (int label = 0; label < 2; ++label) {
        if (by_class[label].empty()) {
            throw DataError(std::string("split: no ") + (label ? "preictal" : "interictal") +
                            " samples");
        }
    }

    std::vector<bool> to_validation(samples.size(), false);
    for (auto& indices : by_class) {
        const auto n_val = static_cast<std::size_t>(
            std::max<long long>(1, std::llround(fraction * static_cast<double>(indices.size()))));
        rng.shuffle(indices);
        for (std::size_t i = 0; i < n_val && i < indices.size(); ++i) {
            to_validation[indices[i]] = true;
        }
    }

    SplitResult result;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        (to_validation[i] ? result.validation : result.train).push_back(std::move(samples[i]));
    }
    return result;
}

void SubjectProfile::validate() const {
    if (channel_count < 1) throw ParamError("profile: need at least one channel");
    if (sample_rate_hz <= 0.0) throw ParamError("profile: sample rate must be positive");
    if (duration_s <= 0.0) throw ParamError("profile: duration must be positive");
    if (noise_sigma <= 0.0) throw ParamError("profile: noise sigma must be positive");
    if (preictal_delta < 0.0) throw ParamError("profile: preictal delta must be non-negative");
    if (oscillation_hz <= 0.0 || oscillation_hz >= 0.5 * sample_rate_hz) {
        throw ParamError("profile: oscillation " + std::to_string(oscillation_hz) +
                         " Hz must lie below the Nyquist rate " +
                         std::to_string(0.5 * sample_rate_hz));
    }
    policy.validate();
    const std::string err = check_spans(seizures, duration_s);
    if (!err.empty()) throw ParamError("profile: " + err);
}

Recording generate_synthetic(const SubjectProfile& profile, Rng& rng) {
    profile.validate();

    Recording rec;
    rec.subject_id = profile.subject_id;
    rec.sample_rate_hz = profile.sample_rate_hz;
    rec.seizures = profile.seizures;
    for (Eigen::Index c = 0; c < profile.channel_count; ++c) {
        std::string name = std::to_string(c);
        if (name.size() < 2) name.insert(0, 2 - name.size(), '0');
        rec.channels.push_back("ch" + name);
    }

    const auto samples = static_cast<Eigen::Index>(
        std::llround(profile.duration_s * profile.sample_rate_hz));
    rec.signal = RowMatrix(profile.channel_count, samples);

    // 1/f-like noise bed: a bank of first-order low-pass filters over white
    // noise, then each channel rescaled to exactly noise_sigma.
    for (Eigen::Index c = 0; c < profile.channel_count; ++c) {
        double b0 = 0.0, b1 = 0.0, b2 = 0.0;
        for (Eigen::Index s = 0; s < samples; ++s) {
            const double white = rng.gaussian();
            b0 = 0.99765 * b0 + white * 0.0990460;
            b1 = 0.96300 * b1 + white * 0.2965164;
            b2 = 0.57000 * b2 + white * 1.0526913;
            rec.signal(c, s) = b0 + b1 + b2 + white * 0.1848;
        }
        auto row = rec.signal.row(c);
        row.array() -= row.mean();
        const double sd = std::sqrt(row.array().square().mean());
        if (sd > 0.0) row *= profile.noise_sigma / sd;
    }

    const double two_pi = 2.0 * std::numbers::pi;
    auto add_tone = [&](Eigen::Index channel, double from_s, double to_s, double amplitude,
                        double hz, double phase) {
        const auto first = static_cast<Eigen::Index>(std::ceil(from_s * profile.sample_rate_hz - kTimeEps));
        const auto last = static_cast<Eigen::Index>(std::floor(to_s * profile.sample_rate_hz - kTimeEps));
        for (Eigen::Index s = std::max<Eigen::Index>(first, 0); s <= std::min(last, samples - 1); ++s) {
            const double t = static_cast<double>(s) / profile.sample_rate_hz;
            rec.signal(channel, s) += amplitude * std::sin(two_pi * hz * t + phase);
        }
    };

    const std::vector<std::size_t> leads = find_lead_seizures(profile.seizures, profile.policy);
    for (std::size_t i : leads) {
        const double onset = profile.seizures[i].onset_s;
        const double from = onset - profile.policy.sph_s - profile.policy.pil_s;
        const double to = onset - profile.policy.sph_s;
        for (Eigen::Index c = 0; c < profile.channel_count; c += 2) {
            const double phase = rng.uniform(0.0, two_pi);
            add_tone(c, from, to, profile.preictal_delta * profile.noise_sigma,
                     profile.oscillation_hz, phase);
        }
    }

    const double ictal_hz = std::min(3.0, 0.25 * profile.sample_rate_hz);
    for (const SeizureSpan& s : profile.seizures) {
        for (Eigen::Index c = 0; c < profile.channel_count; ++c) {
            add_tone(c, s.onset_s, s.offset_s, 3.0 * profile.noise_sigma, ictal_hz, 0.0);
        }
    }

    rec.validate();
    return rec;
}

} // namespace seizurecast
