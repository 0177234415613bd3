#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "seizurecast/errors.hpp"
#include "seizurecast/metrics.hpp"
#include "seizurecast/network.hpp"
#include "seizurecast/pipeline.hpp"
#include "seizurecast/recording_io.hpp"
#include "seizurecast/rng.hpp"
#include "seizurecast/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace seizurecast;

namespace {

constexpr const char* kToolVersion = "1.0.0";

// FNV-1a over the file's bytes; 16 hex digits.
std::string file_digest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + " for hashing");
    std::uint64_t h = 14695981039346656037ull;
    char buf[65536];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        const auto n = static_cast<std::size_t>(in.gcount());
        for (std::size_t i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

json policy_json(const TimingPolicy& p) {
    return {{"pil_s", p.pil_s},
            {"sph_s", p.sph_s},
            {"interictal_margin_s", p.interictal_margin_s},
            {"lead_gap_s", p.lead_gap_s},
            {"window_s", p.window_s},
            {"preictal_overlap_s", p.preictal_overlap_s}};
}

json train_json(const TrainConfig& c) {
    return {{"learning_rate", c.learning_rate},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"epsilon", c.epsilon},
            {"epochs", c.epochs},
            {"samples_per_epoch", c.samples_per_epoch},
            {"batch_size", c.batch_size},
            {"seed", c.seed},
            {"threshold", c.threshold},
            {"window_s", c.window_s}};
}

json network_json(const NetworkConfig& c) {
    auto kernels = [](const std::array<KernelSize, 5>& ks) {
        json a = json::array();
        for (const KernelSize& k : ks) a.push_back({k.h, k.w});
        return a;
    };
    return {{"input_channels", c.input_channels},
            {"input_width", c.input_width},
            {"conv_kernels", kernels(c.conv_kernels)},
            {"pool_kernels", kernels(c.pool_kernels)},
            {"conv_channels", c.conv_channels},
            {"fc_sizes", c.fc_sizes},
            {"dropout_rate", c.dropout_rate},
            {"num_classes", c.num_classes}};
}

// Writes manifest.json next to the outputs it describes. No timestamps, so
// identical runs produce identical manifests.
void write_manifest(const fs::path& dir, json manifest, const std::vector<fs::path>& outputs) {
    json outs = json::array();
    for (const fs::path& f : outputs) {
        outs.push_back({{"file", f.filename().string()}, {"fnv1a64", file_digest(f)}});
    }
    manifest["tool_version"] = kToolVersion;
    manifest["outputs"] = outs;
    const fs::path path = dir / "manifest.json";
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << manifest.dump(2) << '\n';
    if (!out.good()) throw IoError("failed writing " + path.string());
}

// SEIZURECAST_SEED beats the flag when both are present.
std::uint64_t resolve_seed(std::uint64_t flag_seed) {
    const char* env = std::getenv("SEIZURECAST_SEED");
    if (env == nullptr || *env == '\0') return flag_seed;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') {
        throw ParamError(std::string("SEIZURECAST_SEED is not an unsigned integer: \"") + env +
                         "\"");
    }
    return v;
}

std::vector<SeizureSpan> parse_seizures(const std::vector<std::string>& specs,
                                        double default_len_s) {
    std::vector<SeizureSpan> spans;
    for (const std::string& spec : specs) {
        const auto colon = spec.find(':');
        try {
            std::size_t used = 0;
            const double onset = std::stod(spec.substr(0, colon), &used);
            if (used != (colon == std::string::npos ? spec.size() : colon)) {
                throw std::invalid_argument("trailing text");
            }
            double offset = onset + default_len_s;
            if (colon != std::string::npos) {
                const std::string rest = spec.substr(colon + 1);
                offset = std::stod(rest, &used);
                if (used != rest.size()) throw std::invalid_argument("trailing text");
            }
            spans.push_back({onset, offset});
        } catch (const std::exception&) {
            throw ParamError("--seizure-at expects ONSET or ONSET:OFFSET in seconds, got \"" +
                             spec + "\"");
        }
    }
    return spans;
}

// Accepts a bundle directory or a directory of bundles, in name order.
std::vector<fs::path> resolve_bundles(const std::vector<std::string>& data_args) {
    std::vector<fs::path> bundles;
    for (const std::string& arg : data_args) {
        const fs::path path(arg);
        if (is_recording_bundle(path)) {
            bundles.push_back(path);
            continue;
        }
        if (!fs::is_directory(path)) {
            throw IoError(path.string() + " is not a recording bundle or a directory");
        }
        std::vector<fs::path> children;
        for (const auto& entry : fs::directory_iterator(path)) {
            if (entry.is_directory() && is_recording_bundle(entry.path())) {
                children.push_back(entry.path());
            }
        }
        if (children.empty()) {
            throw IoError("no recording bundles under " + path.string());
        }
        std::sort(children.begin(), children.end());
        bundles.insert(bundles.end(), children.begin(), children.end());
    }
    return bundles;
}

struct WindowSet {
    std::vector<fs::path> bundles;
    Eigen::Index channels = 0;
    double rate_hz = 0.0;
    std::vector<WindowSample> samples;
    long preictal = 0;
    long interictal = 0;
    bool any_lead = false;
    std::vector<std::string> seizure_report;
};

// Loads every bundle and windows it independently (each file keeps its own
// time origin; intervals never span files).
WindowSet load_window_set(const std::vector<std::string>& data_args, const TimingPolicy& policy) {
    WindowSet set;
    set.bundles = resolve_bundles(data_args);
    for (const fs::path& bundle : set.bundles) {
        const Recording rec = read_recording(bundle);
        if (set.rate_hz == 0.0) {
            set.channels = rec.channel_count();
            set.rate_hz = rec.sample_rate_hz;
        } else if (rec.channel_count() != set.channels || rec.sample_rate_hz != set.rate_hz) {
            throw DataError(bundle.string() + ": " + std::to_string(rec.channel_count()) +
                            " channels at " + std::to_string(rec.sample_rate_hz) +
                            " Hz, but earlier bundles have " + std::to_string(set.channels) +
                            " at " + std::to_string(set.rate_hz) + " Hz");
        }

        const std::vector<std::size_t> leads = find_lead_seizures(rec, policy);
        set.any_lead = set.any_lead || !leads.empty();
        for (std::size_t i = 0; i < rec.seizures.size(); ++i) {
            const SeizureSpan& s = rec.seizures[i];
            const double gap = i == 0 ? s.onset_s : s.onset_s - rec.seizures[i - 1].offset_s;
            const bool lead = std::find(leads.begin(), leads.end(), i) != leads.end();
            char line[256];
            std::snprintf(line, sizeof line,
                          "%s: seizure %zu at %.0f s: gap before onset %.0f s (lead needs >= %.0f),"
                          " history %.0f s (needs >= %.0f) -> %s",
                          bundle.filename().string().c_str(), i + 1, s.onset_s, gap,
                          policy.lead_gap_s, s.onset_s, policy.pil_s + policy.sph_s,
                          lead ? "lead" : "not a lead");
            set.seizure_report.push_back(line);
        }

        const std::vector<LabeledInterval> intervals = label_intervals(rec, policy);
        std::vector<WindowSample> windows = extract_windows(rec, intervals, policy);
        for (WindowSample& w : windows) {
            (w.label == 1 ? set.preictal : set.interictal) += 1;
            set.samples.push_back(std::move(w));
        }
    }
    return set;
}

void require_both_classes(const WindowSet& set, const TimingPolicy& policy) {
    if (set.preictal == 0) {
        std::string msg;
        char buf[192];
        if (!set.any_lead) {
            std::snprintf(buf, sizeof buf,
                          "no usable lead seizures (need a gap of %.0f s after the previous "
                          "seizure and %.0f s of history before onset)",
                          policy.lead_gap_s, policy.pil_s + policy.sph_s);
            msg = buf;
        } else {
            std::snprintf(buf, sizeof buf,
                          "lead seizures exist but no preictal window fits (preictal interval "
                          "shorter than %.0f s?)",
                          policy.window_s);
            msg = buf;
        }
        for (const std::string& line : set.seizure_report) msg += "\n  " + line;
        if (set.seizure_report.empty()) msg += "\n  (no seizures in any bundle)";
        throw DataError(msg);
    }
    if (set.interictal == 0) {
        throw DataError("no interictal windows: every sample lies within " +
                        std::to_string(policy.interictal_margin_s) + " s of a seizure");
    }
}

// ---------------------------------------------------------------------------

int run_synth(const std::string& out, Eigen::Index channels, double rate_hz, double duration_s,
              const std::vector<std::string>& seizure_specs, double seizure_len_s, double delta,
              double noise_sigma, double tone_hz, const std::string& subject_id,
              std::uint64_t seed, const TimingPolicy& policy) {
    SubjectProfile profile;
    profile.subject_id = subject_id;
    profile.channel_count = channels;
    profile.sample_rate_hz = rate_hz;
    profile.duration_s = duration_s;
    profile.seizures = parse_seizures(seizure_specs, seizure_len_s);
    profile.noise_sigma = noise_sigma;
    profile.preictal_delta = delta;
    profile.oscillation_hz = tone_hz;
    profile.policy = policy;

    Rng rng(seed);
    const Recording rec = generate_synthetic(profile, rng);
    const fs::path dir(out);
    write_recording(rec, dir);

    json manifest;
    manifest["command"] = "synth";
    manifest["seed"] = seed;
    manifest["inputs"] = json::array();
    manifest["config"] = {{"timing", policy_json(policy)},
                          {"profile",
                           {{"subject_id", profile.subject_id},
                            {"channels", profile.channel_count},
                            {"rate_hz", profile.sample_rate_hz},
                            {"duration_s", profile.duration_s},
                            {"noise_sigma", profile.noise_sigma},
                            {"preictal_delta", profile.preictal_delta},
                            {"oscillation_hz", profile.oscillation_hz},
                            {"seizures", [&] {
                                 json a = json::array();
                                 for (const SeizureSpan& s : profile.seizures) {
                                     a.push_back({{"onset_s", s.onset_s}, {"offset_s", s.offset_s}});
                                 }
                                 return a;
                             }()}}}};
    write_manifest(dir, manifest, {dir / "meta.json", dir / "signal.bin"});

    std::cerr << "wrote " << rec.channel_count() << "-channel bundle (" << rec.duration_s()
              << " s at " << rec.sample_rate_hz << " Hz, " << rec.seizures.size()
              << " seizures) to " << dir.string() << "\n";
    return 0;
}

int run_train(const std::vector<std::string>& data, const std::string& out,
              const TimingPolicy& policy, TrainConfig config, double val_fraction, bool reduced,
              double dropout) {
    policy.validate();
    config.window_s = policy.window_s;
    config.validate();

    const WindowSet set = load_window_set(data, policy);
    require_both_classes(set, policy);
    std::cerr << set.samples.size() << " windows (" << set.preictal << " preictal, "
              << set.interictal << " interictal) from " << set.bundles.size() << " bundle(s)\n";

    const auto points = static_cast<Eigen::Index>(std::llround(policy.window_s * set.rate_hz));
    NetworkConfig net_config = reduced ? NetworkConfig::reduced(set.channels, points)
                                       : NetworkConfig::standard(set.channels, points);
    net_config.dropout_rate = dropout;
    const ShapeTable shapes = propagate_shapes(net_config);
    std::cerr << "network for " << set.channels << " x " << points << " windows, flatten length "
              << shapes.flatten_length << ", " << parameter_count(net_config) << " parameters\n";

    const Rng master(config.seed);
    Rng split_rng = master.fork(1);
    SplitResult split = split_train_validation(set.samples, val_fraction, split_rng);
    std::cerr << split.train.size() << " training / " << split.validation.size()
              << " validation windows\n";

    Rng init_rng = master.fork(2);
    Network net = build_network(net_config, init_rng);

    const TrainResult result =
        train(net, split.train, split.validation, config,
              [&](const EpochRecord& r, const Network&) {
                  char line[160];
                  std::snprintf(line, sizeof line,
                                "epoch %d/%d  loss %.4f  val sens %.3f  fpr/h %.3f  auc %.3f",
                                r.epoch, config.epochs, r.train_loss, r.val_sensitivity,
                                r.val_fpr_per_h, r.val_auc);
                  std::cerr << line << "\n";
                  return true;
              });

    const fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    save_network(net, dir / "model.bin");
    write_history_csv(result.history, dir / "history.csv");

    json manifest;
    manifest["command"] = "train";
    manifest["seed"] = config.seed;
    json inputs = json::array();
    for (const fs::path& b : set.bundles) inputs.push_back(b.string());
    manifest["inputs"] = inputs;
    manifest["config"] = {{"timing", policy_json(policy)},
                          {"train", train_json(config)},
                          {"network", network_json(net_config)},
                          {"val_fraction", val_fraction}};
    write_manifest(dir, manifest, {dir / "model.bin", dir / "history.csv"});

    std::cerr << "wrote " << (dir / "model.bin").string() << "\n";
    return 0;
}

int run_eval(const std::string& model_path, const std::vector<std::string>& data,
             const TimingPolicy& policy, double threshold, int threads,
             const std::string& roc_out) {
    policy.validate();
    const Network net = load_network(model_path);

    const WindowSet set = load_window_set(data, policy);
    require_both_classes(set, policy);

    const auto points = static_cast<Eigen::Index>(std::llround(policy.window_s * set.rate_hz));
    if (net.config.input_channels != set.channels || net.config.input_width != points) {
        throw ShapeError("model expects " + std::to_string(net.config.input_channels) + " x " +
                         std::to_string(net.config.input_width) + " windows, data yields " +
                         std::to_string(set.channels) + " x " + std::to_string(points));
    }
    std::cerr << "scoring " << set.samples.size() << " windows (" << set.preictal
              << " preictal, " << set.interictal << " interictal)\n";

    const std::vector<ScoredSample> scored = score_samples(net, set.samples, threads);
    const RocCurve curve = roc_and_auc(scored);
    json report;
    report["threshold"] = threshold;
    report["sensitivity"] = sensitivity(scored, threshold);
    report["fpr_per_hour"] = fpr_per_hour(scored, threshold, policy.window_s);
    report["auc"] = curve.auc;
    report["windows"] = {{"preictal", set.preictal}, {"interictal", set.interictal}};

    if (!roc_out.empty()) {
        const fs::path dir(roc_out);
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
        write_roc_csv(curve, dir / "roc.csv");
        write_roc_svg(curve, dir / "roc.svg");
        {
            std::ofstream out(dir / "metrics.json");
            if (!out) throw IoError("cannot open " + (dir / "metrics.json").string());
            out << report.dump(2) << '\n';
        }

        json manifest;
        manifest["command"] = "eval";
        manifest["seed"] = nullptr; // evaluation draws nothing
        json inputs = json::array();
        inputs.push_back(model_path);
        for (const fs::path& b : set.bundles) inputs.push_back(b.string());
        manifest["inputs"] = inputs;
        manifest["config"] = {{"timing", policy_json(policy)},
                              {"network", network_json(net.config)},
                              {"threshold", threshold},
                              {"threads", threads}};
        write_manifest(dir, manifest,
                       {dir / "roc.csv", dir / "roc.svg", dir / "metrics.json"});
    }

    std::cout << report.dump(2) << "\n";
    return 0;
}

int run_inspect(Eigen::Index channels, Eigen::Index width, bool reduced) {
    const NetworkConfig config = reduced ? NetworkConfig::reduced(channels, width)
                                         : NetworkConfig::standard(channels, width);
    const ShapeTable table = propagate_shapes(config);

    std::printf("%-10s %s\n", "layer", "output");
    for (const LayerShape& row : table.rows) {
        std::printf("%-10s %lld x %lld x %lld\n", row.layer.c_str(),
                    static_cast<long long>(row.channels), static_cast<long long>(row.height),
                    static_cast<long long>(row.width));
    }
    std::printf("%-10s %lld\n", "flatten", static_cast<long long>(table.flatten_length));
    std::printf("%-10s %lld\n", "fc1", static_cast<long long>(config.fc_sizes[0]));
    std::printf("%-10s %lld\n", "fc2", static_cast<long long>(config.fc_sizes[1]));
    std::printf("%-10s %lld\n", "out", static_cast<long long>(config.num_classes));
    std::printf("parameters %lld\n", static_cast<long long>(parameter_count(config)));
    return 0;
}

void add_policy_flags(CLI::App* cmd, TimingPolicy& policy) {
    cmd->add_option("--pil-s", policy.pil_s, "Preictal interval length, seconds")
        ->capture_default_str();
    cmd->add_option("--sph-s", policy.sph_s, "Seizure prediction horizon, seconds")
        ->capture_default_str();
    cmd->add_option("--interictal-margin-s", policy.interictal_margin_s,
                    "Minimum distance of interictal data from any seizure, seconds")
        ->capture_default_str();
    cmd->add_option("--lead-gap-s", policy.lead_gap_s,
                    "Minimum gap after the previous seizure for a lead seizure, seconds")
        ->capture_default_str();
    cmd->add_option("--window-s", policy.window_s, "Window length, seconds")
        ->capture_default_str();
    cmd->add_option("--overlap-s", policy.preictal_overlap_s,
                    "Overlap between consecutive preictal windows, seconds")
        ->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Seizure prediction from raw EEG: synthesize, train, evaluate, inspect"};
    app.require_subcommand(1);

    // synth ------------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "Generate a synthetic recording bundle");
    std::string synth_out;
    std::string subject_id = "synthetic";
    Eigen::Index synth_channels = 4;
    double rate_hz = 100.0;
    double duration_s = 7200.0;
    std::vector<std::string> seizure_specs;
    double seizure_len_s = 60.0;
    double delta = 0.0;
    double noise_sigma = 1.0;
    double tone_hz = 8.0;
    std::uint64_t synth_seed = 1;
    TimingPolicy synth_policy;
    synth->add_option("--out", synth_out, "Bundle directory to create")->required();
    synth->add_option("--channels", synth_channels, "Electrode count")->capture_default_str();
    synth->add_option("--rate-hz", rate_hz, "Sample rate")->capture_default_str();
    synth->add_option("--duration-s", duration_s, "Recording length, seconds")
        ->capture_default_str();
    synth->add_option("--seizure-at", seizure_specs,
                      "Seizure ONSET or ONSET:OFFSET in seconds (repeatable)");
    synth->add_option("--seizure-len-s", seizure_len_s,
                      "Seizure length when --seizure-at gives only an onset")
        ->capture_default_str();
    synth->add_option("--delta", delta, "Preictal tone amplitude in units of noise sigma")
        ->capture_default_str();
    synth->add_option("--noise-sigma", noise_sigma, "Per-channel noise standard deviation")
        ->capture_default_str();
    synth->add_option("--tone-hz", tone_hz, "Preictal tone frequency")->capture_default_str();
    synth->add_option("--subject-id", subject_id, "Subject name in the metadata")
        ->capture_default_str();
    synth->add_option("--seed", synth_seed, "Noise seed")->capture_default_str();
    add_policy_flags(synth, synth_policy);

    // train ------------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "Train a network on recording bundles");
    std::vector<std::string> train_data;
    std::string train_out;
    TimingPolicy train_policy;
    TrainConfig train_config;
    double val_fraction = 0.2;
    bool train_reduced = false;
    double dropout = 0.5;
    train_cmd->add_option("--data", train_data, "Recording bundle or directory of bundles")
        ->required();
    train_cmd->add_option("--out", train_out, "Output directory")->required();
    add_policy_flags(train_cmd, train_policy);
    train_cmd->add_option("--epochs", train_config.epochs, "Training epochs")
        ->capture_default_str();
    train_cmd
        ->add_option("--samples-per-epoch", train_config.samples_per_epoch,
                     "Samples drawn per epoch, half per class")
        ->capture_default_str();
    train_cmd->add_option("--batch-size", train_config.batch_size, "Samples per Adam step")
        ->capture_default_str();
    train_cmd->add_option("--lr", train_config.learning_rate, "Adam learning rate")
        ->capture_default_str();
    train_cmd->add_option("--beta1", train_config.beta1, "Adam first-moment decay")
        ->capture_default_str();
    train_cmd->add_option("--beta2", train_config.beta2, "Adam second-moment decay")
        ->capture_default_str();
    train_cmd->add_option("--threshold", train_config.threshold,
                          "Alarm threshold for validation metrics")
        ->capture_default_str();
    train_cmd->add_option("--val-fraction", val_fraction, "Fraction of each class held out")
        ->capture_default_str();
    train_cmd->add_option("--dropout", dropout, "Dropout rate before the first dense layer")
        ->capture_default_str();
    train_cmd->add_flag("--reduced", train_reduced,
                        "Use the reduced pooling preset for short windows");
    train_cmd->add_option("--seed", train_config.seed, "Master seed (init, split, sampling)")
        ->capture_default_str();

    // eval -------------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "Score bundles with a trained model");
    std::string model_path;
    std::vector<std::string> eval_data;
    std::string roc_out;
    TimingPolicy eval_policy;
    double threshold = 0.5;
    int threads = 1;
    eval_cmd->add_option("--model", model_path, "Model file from train")->required();
    eval_cmd->add_option("--data", eval_data, "Recording bundle or directory of bundles")
        ->required();
    eval_cmd->add_option("--roc-out", roc_out,
                         "Directory for roc.csv, roc.svg, metrics.json, manifest.json");
    add_policy_flags(eval_cmd, eval_policy);
    eval_cmd->add_option("--threshold", threshold, "Alarm threshold")->capture_default_str();
    eval_cmd->add_option("--threads", threads, "Worker threads for scoring")
        ->capture_default_str();

    // inspect ----------------------------------------------------------
    auto* inspect_cmd = app.add_subcommand("inspect", "Print the layer shape table");
    Eigen::Index inspect_channels = 0;
    Eigen::Index inspect_width = 0;
    bool inspect_reduced = false;
    inspect_cmd->add_option("--channels", inspect_channels, "Electrode count")->required();
    inspect_cmd->add_option("--width", inspect_width, "Window length in samples")->required();
    inspect_cmd->add_flag("--reduced", inspect_reduced,
                          "Use the reduced pooling preset for short windows");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            return run_synth(synth_out, synth_channels, rate_hz, duration_s, seizure_specs,
                             seizure_len_s, delta, noise_sigma, tone_hz, subject_id,
                             resolve_seed(synth_seed), synth_policy);
        }
        if (train_cmd->parsed()) {
            train_config.seed = resolve_seed(train_config.seed);
            return run_train(train_data, train_out, train_policy, train_config, val_fraction,
                             train_reduced, dropout);
        }
        if (eval_cmd->parsed()) {
            return run_eval(model_path, eval_data, eval_policy, threshold, threads, roc_out);
        }
        if (inspect_cmd->parsed()) {
            return run_inspect(inspect_channels, inspect_width, inspect_reduced);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
