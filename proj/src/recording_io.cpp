#include "seizurecast/recording_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "seizurecast/errors.hpp"

namespace seizurecast {

namespace {

constexpr const char* kDtype = "f64le";
constexpr const char* kLayout = "channel-major";

RowMatrix read_signal_bin(const std::filesystem::path& file, Eigen::Index channels,
                          Eigen::Index samples) {
    std::ifstream in(file, std::ios::binary | std::ios::ate);
    if (!in) throw IoError("cannot open " + file.string());
    const auto size = static_cast<std::size_t>(in.tellg());
    const std::size_t expected = static_cast<std::size_t>(channels * samples) * 8;
    if (size != expected) {
        throw ParseError(file.string() + ": holds " + std::to_string(size) + " bytes, meta.json implies " +
                         std::to_string(expected));
    }
    std::string bytes(size, '\0');
    in.seekg(0);
    in.read(bytes.data(), static_cast<std::streamsize>(size));
    if (!in.good()) throw IoError("failed reading " + file.string());

    RowMatrix signal(channels, samples);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    double* out = signal.data();
    for (Eigen::Index i = 0; i < channels * samples; ++i) {
        std::uint64_t u = 0;
        for (int b = 7; b >= 0; --b) u = (u << 8) | p[b];
        out[i] = std::bit_cast<double>(u);
        p += 8;
    }
    return signal;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

RowMatrix read_signal_csv(const std::filesystem::path& file,
                          const std::vector<std::string>& channels, Eigen::Index samples) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());

    std::string line;
    if (!std::getline(in, line)) throw ParseError(file.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_csv_line(line);
    if (header != channels) {
        throw ParseError(file.string() + ": header row does not match the channel names in meta.json");
    }

    const auto n_channels = static_cast<Eigen::Index>(channels.size());
    RowMatrix signal(n_channels, samples);
    Eigen::Index row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (row >= samples) {
            throw ParseError(file.string() + ": more than the " + std::to_string(samples) +
                             " samples meta.json implies");
        }
        const std::vector<std::string> fields = split_csv_line(line);
        if (static_cast<Eigen::Index>(fields.size()) != n_channels) {
            throw ParseError(file.string() + ": row " + std::to_string(row + 2) + " has " +
                             std::to_string(fields.size()) + " fields for " +
                             std::to_string(n_channels) + " channels");
        }
        for (Eigen::Index c = 0; c < n_channels; ++c) {
            try {
                std::size_t used = 0;
                signal(c, row) = std::stod(fields[static_cast<std::size_t>(c)], &used);
                if (used != fields[static_cast<std::size_t>(c)].size()) throw std::invalid_argument("trailing text");
            } catch (const std::exception&) {
                throw ParseError(file.string() + ": row " + std::to_string(row + 2) +
                                 " field " + std::to_string(c + 1) + " is not a number: \"" +
                                 fields[static_cast<std::size_t>(c)] + "\"");
            }
        }
        ++row;
    }
    if (row != samples) {
        throw ParseError(file.string() + ": " + std::to_string(row) + " samples, meta.json implies " +
                         std::to_string(samples));
    }
    return signal;
}

} // namespace

bool is_recording_bundle(const std::filesystem::path& dir) {
    return std::filesystem::is_regular_file(dir / "meta.json");
}

void write_recording(const Recording& recording, const std::filesystem::path& dir) {
    recording.validate();
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    nlohmann::json meta;
    meta["subject_id"] = recording.subject_id;
    meta["sample_rate_hz"] = recording.sample_rate_hz;
    meta["channels"] = recording.channels;
    meta["duration_s"] = recording.duration_s();
    nlohmann::json seizures = nlohmann::json::array();
    for (const SeizureSpan& s : recording.seizures) {
        seizures.push_back({{"onset_s", s.onset_s}, {"offset_s", s.offset_s}});
    }
    meta["seizures"] = seizures;
    meta["dtype"] = kDtype;
    meta["layout"] = kLayout;

    {
        std::ofstream out(dir / "meta.json");
        if (!out) throw IoError("cannot open " + (dir / "meta.json").string() + " for writing");
        out << meta.dump(2) << '\n';
        if (!out.good()) throw IoError("failed writing " + (dir / "meta.json").string());
    }

    std::string bytes;
    bytes.reserve(static_cast<std::size_t>(recording.signal.size()) * 8);
    const double* p = recording.signal.data();
    for (Eigen::Index i = 0; i < recording.signal.size(); ++i) {
        const auto u = std::bit_cast<std::uint64_t>(p[i]);
        for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<char>((u >> (8 * b)) & 0xff));
    }
    std::ofstream out(dir / "signal.bin", std::ios::binary);
    if (!out) throw IoError("cannot open " + (dir / "signal.bin").string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out.good()) throw IoError("failed writing " + (dir / "signal.bin").string());
}

Recording read_recording(const std::filesystem::path& dir) {
    const std::filesystem::path meta_path = dir / "meta.json";
    std::ifstream meta_file(meta_path);
    if (!meta_file) throw IoError("cannot open " + meta_path.string());

    Recording rec;
    double duration = 0.0;
    try {
        const nlohmann::json meta = nlohmann::json::parse(meta_file);
        rec.subject_id = meta.at("subject_id").get<std::string>();
        rec.sample_rate_hz = meta.at("sample_rate_hz").get<double>();
        rec.channels = meta.at("channels").get<std::vector<std::string>>();
        duration = meta.at("duration_s").get<double>();
        for (const auto& s : meta.at("seizures")) {
            rec.seizures.push_back({s.at("onset_s").get<double>(), s.at("offset_s").get<double>()});
        }
        if (meta.at("dtype").get<std::string>() != kDtype) {
            throw ParseError(meta_path.string() + ": unsupported dtype \"" +
                             meta.at("dtype").get<std::string>() + "\"");
        }
        if (meta.at("layout").get<std::string>() != kLayout) {
            throw ParseError(meta_path.string() + ": unsupported layout \"" +
                             meta.at("layout").get<std::string>() + "\"");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(meta_path.string() + ": " + e.what());
    }

    if (rec.sample_rate_hz <= 0.0) throw ParseError(meta_path.string() + ": sample rate must be positive");
    if (duration <= 0.0) throw ParseError(meta_path.string() + ": duration must be positive");
    if (rec.channels.empty()) throw ParseError(meta_path.string() + ": channel list is empty");
    const auto samples = static_cast<Eigen::Index>(std::llround(duration * rec.sample_rate_hz));
    if (samples < 1) throw ParseError(meta_path.string() + ": duration holds no samples");

    const auto channels = static_cast<Eigen::Index>(rec.channels.size());
    const std::filesystem::path bin = dir / "signal.bin";
    const std::filesystem::path csv = dir / "signal.csv";
    if (std::filesystem::is_regular_file(bin)) {
        rec.signal = read_signal_bin(bin, channels, samples);
    } else if (std::filesystem::is_regular_file(csv)) {
        rec.signal = read_signal_csv(csv, rec.channels, samples);
    } else {
        throw IoError(dir.string() + ": neither signal.bin nor signal.csv exists");
    }

    try {
        rec.validate();
    } catch (const DataError& e) {
        throw ParseError(meta_path.string() + ": " + e.what());
    }
    return rec;
}

} // namespace seizurecast
