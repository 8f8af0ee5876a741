#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "osap/trace.h"

namespace osap {

struct BitrateLevel {
  std::string label;
  double mbps = 0.0;

  friend bool operator==(const BitrateLevel&, const BitrateLevel&) = default;
};

std::vector<BitrateLevel> DefaultLadder();

class VideoManifest {
 public:
  // sizes[level][chunk] in bytes.
  VideoManifest(std::vector<BitrateLevel> ladder, double chunk_duration_s,
                std::vector<std::vector<double>> sizes);

  const std::vector<BitrateLevel>& ladder() const { return ladder_; }
  std::size_t level_count() const { return ladder_.size(); }
  std::size_t chunk_count() const { return chunk_count_; }
  double chunk_duration() const { return chunk_duration_s_; }
  double rate(std::size_t level) const { return ladder_.at(level).mbps; }
  double top_rate() const { return ladder_.back().mbps; }
  double size_bytes(std::size_t level, std::size_t chunk) const {
    return sizes_.at(level).at(chunk);
  }
  const std::vector<std::vector<double>>& sizes() const { return sizes_; }

  // Labels are presentation only and do not survive the file format.
  friend bool operator==(const VideoManifest& a, const VideoManifest& b) {
    if (a.ladder_.size() != b.ladder_.size()) return false;
    for (std::size_t i = 0; i < a.ladder_.size(); ++i)
      if (a.ladder_[i].mbps != b.ladder_[i].mbps) return false;
    return a.chunk_duration_s_ == b.chunk_duration_s_ && a.sizes_ == b.sizes_;
  }

 private:
  std::vector<BitrateLevel> ladder_;
  double chunk_duration_s_;
  std::vector<std::vector<double>> sizes_;
  std::size_t chunk_count_;
};

struct ManifestOptions {
  std::size_t chunk_count = 48;
  std::size_t repeats = 5;
  double chunk_duration_s = 4.0;
  double size_noise_sigma = 0.1;
  std::uint64_t seed = 0;
};

// size(level, chunk) = rate * duration * exp(sigma * z) with z ~ N(0,1) drawn
// once per base chunk; the base sequence is concatenated `repeats` times.
VideoManifest synth_manifest(std::vector<BitrateLevel> ladder,
                             const ManifestOptions& opts = {});

// Line 1: chunk duration. Line 2: ladder rates (Mbps). Then one line of
// chunk sizes (bytes) per level.
VideoManifest load_manifest(const std::filesystem::path& path);
VideoManifest parse_manifest(const std::string& text);
std::string format_manifest(const VideoManifest& manifest);
void write_manifest(const VideoManifest& manifest, const std::filesystem::path& path);

struct EnvConfig {
  double rtt_s = 0.08;
  double rebuffer_penalty = 4.3;
  double buffer_cap_s = 60.0;
  double min_throughput_mbps = 0.01;
};

struct TraceCursor {
  std::size_t segment = 0;
  double offset_s = 0.0;

  friend bool operator==(const TraceCursor&, const TraceCursor&) = default;
};

// Advances the cursor by `seconds` of wall clock, wrapping at the trace end.
TraceCursor advance_cursor(const Trace& trace, TraceCursor cursor, double seconds);

struct DownloadResult {
  double seconds = 0.0;
  TraceCursor cursor;
};

// RTT plus the time to move `size_bytes` through the piecewise-constant trace
// starting at `cursor`. The RTT elapses first.
DownloadResult download_time(double size_bytes, const Trace& trace, TraceCursor cursor,
                             double rtt_s, double min_throughput_mbps = 0.01);

struct DownloadRecord {
  double download_time_s = 0.0;
  double chunk_bytes = 0.0;
  double throughput_mbps = 0.0;

  friend bool operator==(const DownloadRecord&, const DownloadRecord&) = default;
};

struct SessionState {
  std::size_t chunk_index = 0;
  double buffer_s = 0.0;
  std::optional<std::size_t> last_level;
  std::vector<DownloadRecord> download_history;
  TraceCursor cursor;
  double wall_clock_s = 0.0;

  friend bool operator==(const SessionState&, const SessionState&) = default;
};

// Fresh session starting at `start_offset_s` into the trace.
SessionState start_session(const Trace& trace, double start_offset_s = 0.0);

struct StepOutcome {
  SessionState next_state;
  double download_time_s = 0.0;
  double rebuffer_s = 0.0;
  double wait_s = 0.0;
  double bitrate_mbps = 0.0;
  double qoe = 0.0;
  bool done = false;
};

// Per-chunk linear QoE term: R - penalty * T - |R - R_prev|.
double qoe_chunk(double rate_mbps, double rebuffer_s, std::optional<double> prev_rate_mbps,
                 double rebuffer_penalty);

StepOutcome step(const SessionState& state, std::size_t level, const Trace& trace,
                 const VideoManifest& manifest, const EnvConfig& env);

bool session_done(const SessionState& state, const VideoManifest& manifest);

}  // namespace osap
