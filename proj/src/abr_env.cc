#include "osap/abr_env.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "osap/rng.h"

namespace osap {

namespace {

constexpr double kBitsPerByte = 8.0;
constexpr double kBitsPerMegabit = 1e6;

double Megabits(double bytes) { return bytes * kBitsPerByte / kBitsPerMegabit; }

std::vector<double> ParseNumbers(const std::string& line, std::size_t lineno) {
  std::istringstream in(line);
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw InvalidInput(fmt::format("manifest line {}: bad number '{}'", lineno, token));
    }
  }
  return values;
}

}  // namespace

std::vector<BitrateLevel> DefaultLadder() {
  return {{"240p", 0.3},  {"360p", 0.75},  {"480p", 1.2},
          {"720p", 1.85}, {"1080p", 2.85}, {"1400p", 4.3}};
}

VideoManifest::VideoManifest(std::vector<BitrateLevel> ladder, double chunk_duration_s,
                             std::vector<std::vector<double>> sizes)
    : ladder_(std::move(ladder)),
      chunk_duration_s_(chunk_duration_s),
      sizes_(std::move(sizes)) {
  if (ladder_.empty()) throw InvalidInput("manifest: empty ladder");
  for (std::size_t i = 0; i < ladder_.size(); ++i) {
    if (!(ladder_[i].mbps > 0.0)) throw InvalidInput("manifest: rates must be > 0");
    if (i > 0 && ladder_[i].mbps <= ladder_[i - 1].mbps)
      throw InvalidInput("manifest: ladder rates must be strictly increasing");
  }
  if (!(chunk_duration_s_ > 0.0)) throw InvalidInput("manifest: chunk duration must be > 0");
  if (sizes_.size() != ladder_.size())
    throw InvalidInput(fmt::format("manifest: {} size rows for {} levels", sizes_.size(),
                                   ladder_.size()));
  chunk_count_ = sizes_.front().size();
  if (chunk_count_ == 0) throw InvalidInput("manifest: no chunks");
  for (const auto& row : sizes_) {
    if (row.size() != chunk_count_)
      throw InvalidInput("manifest: inconsistent size row lengths");
    for (double s : row)
      if (!(s > 0.0)) throw InvalidInput("manifest: chunk sizes must be > 0");
  }
}

VideoManifest synth_manifest(std::vector<BitrateLevel> ladder, const ManifestOptions& opts) {
  if (opts.chunk_count == 0 || opts.repeats == 0)
    throw InvalidInput("synth_manifest: chunk_count and repeats must be >= 1");
  for (std::size_t i = 1; i < ladder.size(); ++i)
    if (ladder[i].mbps <= ladder[i - 1].mbps)
      throw InvalidInput("synth_manifest: ladder rates must be strictly increasing");

  Rng rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> noise(opts.chunk_count, 1.0);
  if (opts.size_noise_sigma > 0.0)
    for (double& n : noise) n = std::exp(opts.size_noise_sigma * normal(rng));

  std::vector<std::vector<double>> sizes(ladder.size());
  for (std::size_t level = 0; level < ladder.size(); ++level) {
    const double nominal = ladder[level].mbps * opts.chunk_duration_s * kBitsPerMegabit / kBitsPerByte;
    auto& row = sizes[level];
    row.reserve(opts.chunk_count * opts.repeats);
    for (std::size_t r = 0; r < opts.repeats; ++r)
      for (std::size_t c = 0; c < opts.chunk_count; ++c) row.push_back(nominal * noise[c]);
  }
  return VideoManifest(std::move(ladder), opts.chunk_duration_s, std::move(sizes));
}

VideoManifest parse_manifest(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    rows.push_back(ParseNumbers(line, lineno));
  }
  if (rows.size() < 3) throw InvalidInput("manifest: need duration, ladder and size rows");
  if (rows[0].size() != 1) throw InvalidInput("manifest: first line must be the chunk duration");
  std::vector<BitrateLevel> ladder;
  for (double r : rows[1]) ladder.push_back({fmt::format("{}Mbps", r), r});
  if (rows.size() - 2 != ladder.size())
    throw InvalidInput(fmt::format("manifest: {} size rows for {} levels", rows.size() - 2,
                                   ladder.size()));
  std::vector<std::vector<double>> sizes(rows.begin() + 2, rows.end());
  return VideoManifest(std::move(ladder), rows[0][0], std::move(sizes));
}

VideoManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open manifest " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str());
}

std::string format_manifest(const VideoManifest& manifest) {
  std::string out = fmt::format("{}\n", manifest.chunk_duration());
  for (std::size_t i = 0; i < manifest.level_count(); ++i)
    out += fmt::format("{}{}", i ? " " : "", manifest.rate(i));
  out += "\n";
  for (const auto& row : manifest.sizes()) {
    for (std::size_t c = 0; c < row.size(); ++c) out += fmt::format("{}{}", c ? " " : "", row[c]);
    out += "\n";
  }
  return out;
}

void write_manifest(const VideoManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write manifest " + path.string());
  out << format_manifest(manifest);
}

TraceCursor advance_cursor(const Trace& trace, TraceCursor cursor, double seconds) {
  // Skip whole periods first so long waits stay O(trace length).
  if (seconds >= trace.period()) seconds = std::fmod(seconds, trace.period());
  while (seconds > 0.0) {
    const double left = trace.segment_duration(cursor.segment) - cursor.offset_s;
    if (seconds < left) {
      cursor.offset_s += seconds;
      break;
    }
    seconds -= left;
    cursor.offset_s = 0.0;
    cursor.segment = (cursor.segment + 1) % trace.size();
  }
  return cursor;
}

DownloadResult download_time(double size_bytes, const Trace& trace, TraceCursor cursor,
                             double rtt_s, double min_throughput_mbps) {
  if (!(size_bytes > 0.0)) throw InvalidInput("download_time: size must be > 0");
  cursor = advance_cursor(trace, cursor, rtt_s);
  double remaining = Megabits(size_bytes);
  double elapsed = rtt_s;
  const auto& points = trace.points();
  while (true) {
    const double rate = std::max(points[cursor.segment].mbps, min_throughput_mbps);
    const double left = trace.segment_duration(cursor.segment) - cursor.offset_s;
    const double capacity = rate * left;
    if (capacity >= remaining) {
      const double dt = remaining / rate;
      elapsed += dt;
      cursor.offset_s += dt;
      if (cursor.offset_s >= trace.segment_duration(cursor.segment)) {
        cursor.offset_s = 0.0;
        cursor.segment = (cursor.segment + 1) % trace.size();
      }
      break;
    }
    remaining -= capacity;
    elapsed += left;
    cursor.offset_s = 0.0;
    cursor.segment = (cursor.segment + 1) % trace.size();
  }
  return {elapsed, cursor};
}

SessionState start_session(const Trace& trace, double start_offset_s) {
  SessionState s;
  s.cursor = advance_cursor(trace, {}, start_offset_s);
  return s;
}

double qoe_chunk(double rate_mbps, double rebuffer_s, std::optional<double> prev_rate_mbps,
                 double rebuffer_penalty) {
  double qoe = rate_mbps - rebuffer_penalty * rebuffer_s;
  if (prev_rate_mbps) qoe -= std::abs(rate_mbps - *prev_rate_mbps);
  return qoe;
}

bool session_done(const SessionState& state, const VideoManifest& manifest) {
  return state.chunk_index >= manifest.chunk_count();
}

StepOutcome step(const SessionState& state, std::size_t level, const Trace& trace,
                 const VideoManifest& manifest, const EnvConfig& env) {
  if (session_done(state, manifest)) throw InvalidInput("step: session already finished");
  if (level >= manifest.level_count())
    throw InvalidInput(fmt::format("step: level {} out of range", level));

  const double bytes = manifest.size_bytes(level, state.chunk_index);
  const auto dl = download_time(bytes, trace, state.cursor, env.rtt_s, env.min_throughput_mbps);

  StepOutcome out;
  SessionState& next = out.next_state;
  next = state;
  next.cursor = dl.cursor;
  next.wall_clock_s += dl.seconds;

  out.download_time_s = dl.seconds;
  out.rebuffer_s = std::max(0.0, dl.seconds - state.buffer_s);
  double buffer = std::max(state.buffer_s - dl.seconds, 0.0) + manifest.chunk_duration();
  if (buffer > env.buffer_cap_s) {
    out.wait_s = buffer - env.buffer_cap_s;
    buffer = env.buffer_cap_s;
    next.cursor = advance_cursor(trace, next.cursor, out.wait_s);
    next.wall_clock_s += out.wait_s;
  }
  next.buffer_s = buffer;

  out.bitrate_mbps = manifest.rate(level);
  std::optional<double> prev;
  if (state.last_level) prev = manifest.rate(*state.last_level);
  out.qoe = qoe_chunk(out.bitrate_mbps, out.rebuffer_s, prev, env.rebuffer_penalty);

  // Throughput seen during the transfer itself; the RTT is excluded so the
  // estimate reflects the trace rather than the chunk size.
  const double transfer_s = dl.seconds - env.rtt_s;
  const double observed = Megabits(bytes) / (transfer_s > 0.0 ? transfer_s : dl.seconds);
  next.download_history.push_back({dl.seconds, bytes, observed});
  next.last_level = level;
  next.chunk_index += 1;
  out.done = session_done(next, manifest);
  return out;
}

}  // namespace osap
