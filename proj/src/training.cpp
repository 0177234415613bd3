#include "seizurecast/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <thread>

#include "seizurecast/errors.hpp"

namespace seizurecast {

void TrainConfig::validate() const {
    if (learning_rate < 0.0) throw ParamError("train config: learning rate must be non-negative");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
        throw ParamError("train config: betas must lie in [0, 1)");
    }
    if (epsilon <= 0.0) throw ParamError("train config: epsilon must be positive");
    if (epochs < 1) throw ParamError("train config: need at least one epoch");
    if (samples_per_epoch < 2 || samples_per_epoch % 2 != 0) {
        throw ParamError("train config: samples_per_epoch must be even and at least 2, got " +
                         std::to_string(samples_per_epoch));
    }
    if (batch_size < 1) throw ParamError("train config: batch size must be positive");
    if (threshold < 0.0 || threshold > 1.0) {
        throw ParamError("train config: threshold must lie in [0, 1]");
    }
    if (window_s <= 0.0) throw ParamError("train config: window_s must be positive");
}

void adam_step(std::vector<ParameterRef>& params, AdamState& state, const TrainConfig& config) {
    config.validate();
    if (state.m.empty()) {
        state.m.reserve(params.size());
        state.v.reserve(params.size());
        for (const ParameterRef& p : params) {
            state.m.push_back(Array::Zero(p.tensor->size()));
            state.v.push_back(Array::Zero(p.tensor->size()));
        }
    }
    if (state.m.size() != params.size() || state.v.size() != params.size()) {
        throw TrainingError("adam: state tracks " + std::to_string(state.m.size()) +
                            " parameters, got " + std::to_string(params.size()));
    }

    ++state.t;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& tensor = *params[i].tensor;
        if (!tensor.has_grad()) {
            throw TrainingError("adam: parameter " + params[i].name + " has no gradient");
        }
        const Array& g = *tensor.grad;
        if (g.size() != tensor.size()) {
            throw TrainingError("adam: parameter " + params[i].name +
                                " gradient size does not match its data");
        }
        if (!g.allFinite()) {
            throw TrainingError("adam: non-finite gradient in " + params[i].name);
        }
        if (state.m[i].size() != tensor.size()) {
            throw TrainingError("adam: state size does not match parameter " + params[i].name);
        }
        state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
        state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g.square();
        tensor.data -= config.learning_rate * (state.m[i] / bc1) /
                       ((state.v[i] / bc2).sqrt() + config.epsilon);
        if (!tensor.all_finite()) {
            throw TrainingError("adam: non-finite values in " + params[i].name + " after update");
        }
    }
}

void adam_step(Network& net, AdamState& state, const TrainConfig& config) {
    std::vector<ParameterRef> params = parameters(net);
    adam_step(params, state, config);
}

std::vector<std::vector<std::size_t>> balanced_epoch(const std::vector<WindowSample>& samples,
                                                     const TrainConfig& config, Rng& rng) {
    config.validate();
    std::vector<std::size_t> pool[2];
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const int label = samples[i].label;
        if (label < 0 || label > 1) {
            throw ParamError("balanced epoch: sample " + std::to_string(i) + " has label " +
                             std::to_string(label));
        }
        pool[label].push_back(i);
    }
    for (int label = 0; label < 2; ++label) {
        if (pool[label].empty()) {
            throw DataError(std::string("balanced epoch: no ") +
                            (label ? "preictal" : "interictal") + " samples");
        }
    }

    const auto per_class = static_cast<std::size_t>(config.samples_per_epoch / 2);
    std::vector<std::size_t> epoch;
    epoch.reserve(per_class * 2);
    for (const auto& indices : pool) {
        for (std::size_t k = 0; k < per_class; ++k) {
            epoch.push_back(indices[rng.below(indices.size())]);
        }
    }
    rng.shuffle(epoch);

    std::vector<std::vector<std::size_t>> batches;
    const auto batch = static_cast<std::size_t>(config.batch_size);
    for (std::size_t i = 0; i < epoch.size(); i += batch) {
        batches.emplace_back(epoch.begin() + static_cast<std::ptrdiff_t>(i),
                             epoch.begin() + static_cast<std::ptrdiff_t>(std::min(i + batch, epoch.size())));
    }
    return batches;
}

double train_step(Network& net, const std::vector<WindowSample>& samples,
                  const std::vector<std::size_t>& batch, AdamState& state,
                  const TrainConfig& config, Rng& rng) {
    if (batch.empty()) throw ParamError("train step: empty batch");
    zero_gradients(net);
    const double scale = 1.0 / static_cast<double>(batch.size());
    double loss_sum = 0.0;
    for (std::size_t idx : batch) {
        if (idx >= samples.size()) {
            throw ParamError("train step: sample index " + std::to_string(idx) + " out of range");
        }
        const WindowSample& sample = samples[idx];
        const ForwardTrace trace = forward_trace(net, sample.data, true, &rng);
        loss_sum += backward(net, trace, sample.label, scale);
    }
    adam_step(net, state, config);
    const double mean_loss = loss_sum / static_cast<double>(batch.size());
    if (!std::isfinite(mean_loss)) throw TrainingError("train step: non-finite loss");
    return mean_loss;
}

TrainResult train(Network& net, const std::vector<WindowSample>& train_samples,
                  const std::vector<WindowSample>& validation_samples, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
    config.validate();
    if (train_samples.empty()) throw DataError("train: no training samples");

    Rng rng(config.seed);
    AdamState state;
    TrainResult result;
    const double nan = std::numeric_limits<double>::quiet_NaN();

    bool val_has_both = false;
    {
        bool pos = false;
        bool neg = false;
        for (const WindowSample& s : validation_samples) {
            (s.label == 1 ? pos : neg) = true;
        }
        val_has_both = pos && neg;
    }

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const std::vector<std::vector<std::size_t>> batches =
            balanced_epoch(train_samples, config, rng);
        double loss_sum = 0.0;
        std::size_t seen = 0;
        for (const std::vector<std::size_t>& batch : batches) {
            loss_sum += train_step(net, train_samples, batch, state, config, rng) *
                        static_cast<double>(batch.size());
            seen += batch.size();
        }

        EpochRecord record;
        record.epoch = epoch;
        record.train_loss = loss_sum / static_cast<double>(seen);
        if (val_has_both) {
            const std::vector<ScoredSample> scored = score_samples(net, validation_samples);
            record.val_sensitivity = sensitivity(scored, config.threshold);
            record.val_fpr_per_h = fpr_per_hour(scored, config.threshold, config.window_s);
            record.val_auc = roc_and_auc(scored).auc;
        } else {
            record.val_sensitivity = nan;
            record.val_fpr_per_h = nan;
            record.val_auc = nan;
        }
        result.history.push_back(record);

        if (on_epoch && !on_epoch(record, net)) {
            result.stopped_early = true;
            break;
        }
    }
    return result;
}

void write_history_csv(const std::vector<EpochRecord>& history,
                       const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "epoch,train_loss,val_sensitivity,val_fpr_per_h,val_auc\n";
    char buf[192];
    for (const EpochRecord& r : history) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.train_loss,
                      r.val_sensitivity, r.val_fpr_per_h, r.val_auc);
        out << buf;
    }
    if (!out.good()) throw IoError("failed writing " + path.string());
}

std::vector<ScoredSample> score_samples(const Network& net,
                                        const std::vector<WindowSample>& samples, int threads) {
    if (threads < 1) throw ParamError("score: thread count must be positive");
    std::vector<ScoredSample> scored(samples.size());
    auto run = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            scored[i] = {preictal_probability(net, samples[i].data), samples[i].label};
        }
    };
    const auto n = samples.size();
    if (threads == 1 || n < 2) {
        run(0, n);
        return scored;
    }
    const auto workers = static_cast<std::size_t>(threads);
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers && w * chunk < n; ++w) {
        pool.emplace_back(run, w * chunk, std::min(n, (w + 1) * chunk));
    }
    for (std::thread& t : pool) t.join();
    return scored;
}

} // namespace seizurecast
