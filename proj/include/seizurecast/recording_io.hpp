#pragma once

#include <filesystem>

#include "seizurecast/pipeline.hpp"

namespace seizurecast {

// A recording bundle is a directory holding meta.json (subject, rate,
// channel names, duration, seizure schedule, payload dtype/layout) and the
// signal itself: signal.bin with channel-major little-endian 64-bit floats,
// or signal.csv with a channel-name header row and one row per sample.
// write_recording always produces the binary form.
void write_recording(const Recording& recording, const std::filesystem::path& dir);
Recording read_recording(const std::filesystem::path& dir);

// True if the directory looks like a bundle (has meta.json).
bool is_recording_bundle(const std::filesystem::path& dir);

} // namespace seizurecast
