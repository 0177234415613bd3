#pragma once

#include <string>
#include <vector>

#include "seizurecast/rng.hpp"
#include "seizurecast/tensor.hpp"

namespace seizurecast {

// Schedule parameters, all in seconds, for turning a seizure list into
// labeled spans and windows. "pil" is the preictal interval length, the span
// a predictor should flag; "sph" is the prediction horizon between that span
// and the onset, reserved so an alarm leaves time to act.
struct TimingPolicy {
    double pil_s = 1800.0;
    double sph_s = 300.0;
    // Interictal data must sit at least this far from every seizure.
    double interictal_margin_s = 14400.0;
    // A seizure counts as a lead only after this much seizure-free time.
    double lead_gap_s = 14400.0;
    double window_s = 20.0;
    // Consecutive preictal windows share this much signal; interictal windows
    // never overlap.
    double preictal_overlap_s = 5.0;

    double interictal_stride_s() const { return window_s; }
    double preictal_stride_s() const { return window_s - preictal_overlap_s; }

    void validate() const;
};

struct SeizureSpan {
    double onset_s = 0.0;
    double offset_s = 0.0;
};

// One subject's continuous multichannel signal plus its seizure schedule.
// The signal matrix holds one channel per row, so a channel's time series is
// contiguous in memory.
struct Recording {
    std::string subject_id;
    double sample_rate_hz = 0.0;
    std::vector<std::string> channels;
    RowMatrix signal;
    std::vector<SeizureSpan> seizures;

    Eigen::Index channel_count() const { return signal.rows(); }
    Eigen::Index sample_count() const { return signal.cols(); }
    double duration_s() const { return static_cast<double>(sample_count()) / sample_rate_hz; }

    void validate() const;
};

enum class IntervalState {
    interictal,
    preictal,
    sph,
    ictal,
    excluded,
};

const char* to_string(IntervalState state);

// Half-open [start_s, end_s).
struct LabeledInterval {
    double start_s = 0.0;
    double end_s = 0.0;
    IntervalState state = IntervalState::excluded;
};

// Indices of lead seizures: a seizure preceded by at least lead_gap_s of
// seizure-free signal (for the first seizure, by enough recording to hold a
// full preictal span plus horizon, onset >= pil_s + sph_s; that requirement
// applies to every lead).
std::vector<std::size_t> find_lead_seizures(const std::vector<SeizureSpan>& seizures,
                                            const TimingPolicy& policy);
std::vector<std::size_t> find_lead_seizures(const Recording& recording,
                                            const TimingPolicy& policy);

// Partitions [0, duration) into disjoint labeled intervals. Precedence where
// definitions overlap: ictal over sph over preictal over interictal over
// excluded. Preictal and sph spans exist only ahead of lead seizures;
// interictal requires interictal_margin_s of distance from every seizure;
// everything else is excluded.
std::vector<LabeledInterval> label_intervals(const Recording& recording,
                                             const TimingPolicy& policy);

// One training/evaluation window: label 1 = preictal, 0 = interictal.
struct WindowSample {
    Tensor data; // (1, channels, window_points)
    int label = 0;
    double source_time_s = 0.0; // window start within the source recording
    std::string subject_id;
};

// Tiles every interictal and preictal interval with windows of window_s
// seconds: interictal windows stride by a full window, preictal windows by
// window_s - preictal_overlap_s. Windows never cross interval boundaries.
std::vector<WindowSample> extract_windows(const Recording& recording,
                                          const std::vector<LabeledInterval>& intervals,
                                          const TimingPolicy& policy);

struct SplitResult {
    std::vector<WindowSample> train;
    std::vector<WindowSample> validation;
};

// Stratified split: per class, max(1, round(fraction * n)) samples go to
// validation, chosen uniformly at random. Errors if either class is empty.
SplitResult split_train_validation(std::vector<WindowSample> samples, double fraction, Rng& rng);

// Recipe for a synthetic subject. The base signal is a 1/f-like noise bed;
// ahead of each lead seizure the even-indexed channels gain a sinusoid of
// amplitude preictal_delta * noise_sigma, so preictal_delta = 0 makes the
// two classes statistically identical and a large delta makes them trivially
// separable. Ictal spans get a strong burst on all channels.
struct SubjectProfile {
    std::string subject_id = "synthetic";
    Eigen::Index channel_count = 4;
    double sample_rate_hz = 100.0;
    double duration_s = 7200.0;
    std::vector<SeizureSpan> seizures;
    double noise_sigma = 1.0;
    double preictal_delta = 0.0;
    double oscillation_hz = 8.0;
    TimingPolicy policy;

    void validate() const;
};

Recording generate_synthetic(const SubjectProfile& profile, Rng& rng);

} // namespace seizurecast
