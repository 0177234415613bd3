#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "seizurecast/metrics.hpp"
#include "seizurecast/network.hpp"
#include "seizurecast/pipeline.hpp"

namespace seizurecast {

struct TrainConfig {
    double learning_rate = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int epochs = 100;
    // Every epoch draws this many samples, half per class, with replacement.
    int samples_per_epoch = 6400;
    int batch_size = 32;
    std::uint64_t seed = 1;
    // Validation metrics settings.
    double threshold = 0.5;
    double window_s = 20.0;

    void validate() const;
};

// First and second moment accumulators per parameter, plus the step count.
// Lazily sized to the parameter set on the first step.
struct AdamState {
    std::vector<Array> m;
    std::vector<Array> v;
    long t = 0;
};

// One Adam update from the gradients in the parameters' grad slots, with
// bias-corrected moments. Throws TrainingError naming the parameter if a
// gradient is missing or non-finite.
void adam_step(std::vector<ParameterRef>& params, AdamState& state, const TrainConfig& config);
void adam_step(Network& net, AdamState& state, const TrainConfig& config);

// Index batches for one balanced epoch: samples_per_epoch / 2 draws per class
// uniformly with replacement, shuffled together, cut into batch_size chunks
// (the last batch may be short). Errors if either class is absent.
std::vector<std::vector<std::size_t>> balanced_epoch(const std::vector<WindowSample>& samples,
                                                     const TrainConfig& config, Rng& rng);

// One optimization step on a batch: averages the loss gradient over the
// batch, applies Adam, returns the mean sample loss.
double train_step(Network& net, const std::vector<WindowSample>& samples,
                  const std::vector<std::size_t>& batch, AdamState& state,
                  const TrainConfig& config, Rng& rng);

struct EpochRecord {
    int epoch = 0; // 1-based
    double train_loss = 0.0;
    // NaN when there is no validation set (or it lacks a class).
    double val_sensitivity = 0.0;
    double val_fpr_per_h = 0.0;
    double val_auc = 0.0;
};

// Called after each epoch; return false to stop training.
using EpochCallback = std::function<bool(const EpochRecord&, const Network&)>;

struct TrainResult {
    std::vector<EpochRecord> history;
    bool stopped_early = false;
};

// Balanced-epoch training with Adam. Single-threaded and fully determined by
// config.seed: sample draws and dropout all flow from one seeded stream.
TrainResult train(Network& net, const std::vector<WindowSample>& train_samples,
                  const std::vector<WindowSample>& validation_samples, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// "epoch,train_loss,val_sensitivity,val_fpr_per_h,val_auc" rows.
void write_history_csv(const std::vector<EpochRecord>& history,
                       const std::filesystem::path& path);

// Inference scores for a sample set; `threads` > 1 splits the samples across
// that many threads (scores are written into place, so the result is
// identical to a serial run).
std::vector<ScoredSample> score_samples(const Network& net,
                                        const std::vector<WindowSample>& samples,
                                        int threads = 1);

} // namespace seizurecast
