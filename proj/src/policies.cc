#include "osap/policies.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace osap {

std::size_t bb_decide(double buffer_s, std::size_t level_count, const BufferBasedParams& bb) {
  if (level_count == 0) throw InvalidInput("bb_decide: empty ladder");
  if (buffer_s <= bb.reservoir_s) return 0;
  if (buffer_s >= bb.reservoir_s + bb.cushion_s) return level_count - 1;
  const double fraction = (buffer_s - bb.reservoir_s) / bb.cushion_s;
  const auto level = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(level_count)));
  return std::min(level, level_count - 1);
}

std::size_t random_decide(Rng& rng, std::size_t level_count) {
  if (level_count == 0) throw InvalidInput("random_decide: empty ladder");
  return std::uniform_int_distribution<std::size_t>(0, level_count - 1)(rng);
}

FeatureSpec DefaultFeatureSpec(const VideoManifest& manifest) {
  FeatureSpec spec;
  spec.levels = manifest.level_count();
  spec.throughput_norm_mbps = manifest.top_rate();
  return spec;
}

FeatureVector featurize(const SessionState& state, const VideoManifest& manifest,
                        const FeatureSpec& spec) {
  if (spec.levels != manifest.level_count())
    throw InvalidInput("featurize: feature spec was built for a different ladder");
  FeatureVector f(spec.dim(), 0.0);
  f[0] = state.buffer_s / spec.buffer_norm_s;
  if (state.last_level) f[1] = manifest.rate(*state.last_level) / manifest.top_rate();
  const auto& hist = state.download_history;
  const std::size_t m = spec.history;
  const std::size_t have = std::min(hist.size(), m);
  for (std::size_t j = 0; j < have; ++j) {
    const auto& rec = hist[hist.size() - have + j];
    f[2 + (m - have) + j] = rec.throughput_mbps / spec.throughput_norm_mbps;
    f[2 + m + (m - have) + j] = rec.download_time_s / spec.download_norm_s;
  }
  const double total = static_cast<double>(manifest.chunk_count());
  f[2 + 2 * m] = (total - static_cast<double>(state.chunk_index)) / total;
  return f;
}

std::size_t ActionDistribution::argmax() const {
  return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

bool ActionDistribution::valid(double tol) const {
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) return false;
    sum += p;
  }
  return !probs.empty() && std::abs(sum - 1.0) <= tol;
}

std::vector<std::size_t> NetworkShape(std::size_t input_dim, std::span<const std::size_t> hidden,
                                      std::size_t output_dim) {
  std::vector<std::size_t> shape{input_dim};
  shape.insert(shape.end(), hidden.begin(), hidden.end());
  shape.push_back(output_dim);
  return shape;
}

AgentParams MakeAgent(const FeatureSpec& spec, std::span<const std::size_t> hidden,
                      std::uint64_t init_seed) {
  AgentParams p;
  p.features = spec;
  p.init_seed = init_seed;
  p.actor = Mlp(NetworkShape(spec.dim(), hidden, spec.levels), DeriveSeed(init_seed, {1}));
  p.critic = Mlp(NetworkShape(spec.dim(), hidden, 1), DeriveSeed(init_seed, {2}));
  return p;
}

ActionDistribution actor_forward(const AgentParams& params, std::span<const double> features) {
  ActionDistribution d{params.actor.Forward(features)};
  SoftmaxInPlace(d.probs);
  return d;
}

double critic_forward(const AgentParams& params, std::span<const double> features) {
  return params.critic.Forward(features)[0];
}

double value_forward(const ValueParams& params, std::span<const double> features) {
  return params.net.Forward(features)[0] * params.target_scale;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr const char* kAgentMagic = "osap-agent";
constexpr const char* kValueMagic = "osap-value";
constexpr int kFormatVersion = 1;

std::string FormatFeatures(const FeatureSpec& s) {
  return fmt::format("features {} {} {} {} {} {}\n", s.version, s.history, s.levels,
                     s.buffer_norm_s, s.throughput_norm_mbps, s.download_norm_s);
}

std::string FormatMlp(const char* name, const Mlp& m) {
  std::string out = fmt::format("{} {}", name, m.layer_sizes().size());
  for (auto s : m.layer_sizes()) out += fmt::format(" {}", s);
  out += "\n";
  const auto& p = m.params();
  for (std::size_t i = 0; i < p.size(); ++i) out += fmt::format("{}{}", i ? " " : "", p[i]);
  out += "\n";
  return out;
}

class Reader {
 public:
  explicit Reader(const std::string& text) : in_(text) {}

  void Expect(const std::string& word) {
    std::string got;
    if (!(in_ >> got) || got != word)
      throw InvalidInput(fmt::format("model file: expected '{}', found '{}'", word, got));
  }
  template <typename T>
  T Read(const char* what) {
    T v;
    if (!(in_ >> v)) throw InvalidInput(fmt::format("model file: bad or missing {}", what));
    return v;
  }
  FeatureSpec Features() {
    Expect("features");
    FeatureSpec s;
    s.version = Read<int>("feature version");
    if (s.version != FeatureSpec::kVersion)
      throw InvalidInput(fmt::format("model file: unsupported feature version {}", s.version));
    s.history = Read<std::size_t>("history");
    s.levels = Read<std::size_t>("levels");
    s.buffer_norm_s = Read<double>("buffer_norm");
    s.throughput_norm_mbps = Read<double>("throughput_norm");
    s.download_norm_s = Read<double>("download_norm");
    return s;
  }
  Mlp Network(const char* name) {
    Expect(name);
    auto layers = Read<std::size_t>("layer count");
    if (layers < 2 || layers > 16) throw InvalidInput("model file: bad layer count");
    std::vector<std::size_t> sizes(layers);
    for (auto& s : sizes) s = Read<std::size_t>("layer size");
    Mlp m = Mlp::Zeros(sizes);
    for (double& p : m.params()) p = Read<double>("weight");
    if (!m.AllFinite()) throw InvalidInput("model file: non-finite weight");
    return m;
  }

 private:
  std::istringstream in_;
};

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void WriteFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << text;
}

}  // namespace

std::string format_agent(const AgentParams& p) {
  std::string out = fmt::format("{} {}\n", kAgentMagic, kFormatVersion);
  out += fmt::format("init_seed {}\n", p.init_seed);
  out += fmt::format("reward_scale {}\n", p.reward_scale);
  out += FormatFeatures(p.features);
  out += FormatMlp("actor", p.actor);
  out += FormatMlp("critic", p.critic);
  return out;
}

AgentParams parse_agent(const std::string& text) {
  Reader r(text);
  r.Expect(kAgentMagic);
  if (r.Read<int>("version") != kFormatVersion) throw InvalidInput("agent file: bad version");
  AgentParams p;
  r.Expect("init_seed");
  p.init_seed = r.Read<std::uint64_t>("init_seed");
  r.Expect("reward_scale");
  p.reward_scale = r.Read<double>("reward_scale");
  p.features = r.Features();
  p.actor = r.Network("actor");
  p.critic = r.Network("critic");
  if (p.actor.input_dim() != p.features.dim() || p.actor.output_dim() != p.features.levels ||
      p.critic.input_dim() != p.features.dim() || p.critic.output_dim() != 1)
    throw InvalidInput("agent file: network shape does not match feature spec");
  return p;
}

void save_agent(const AgentParams& params, const std::filesystem::path& path) {
  WriteFile(path, format_agent(params));
}

AgentParams load_agent(const std::filesystem::path& path) { return parse_agent(ReadFile(path)); }

std::string format_value(const ValueParams& p) {
  std::string out = fmt::format("{} {}\n", kValueMagic, kFormatVersion);
  out += fmt::format("init_seed {}\n", p.init_seed);
  out += fmt::format("gamma {}\n", p.gamma);
  out += fmt::format("target_scale {}\n", p.target_scale);
  out += FormatFeatures(p.features);
  out += FormatMlp("net", p.net);
  return out;
}

ValueParams parse_value(const std::string& text) {
  Reader r(text);
  r.Expect(kValueMagic);
  if (r.Read<int>("version") != kFormatVersion) throw InvalidInput("value file: bad version");
  ValueParams p;
  r.Expect("init_seed");
  p.init_seed = r.Read<std::uint64_t>("init_seed");
  r.Expect("gamma");
  p.gamma = r.Read<double>("gamma");
  if (!(p.gamma > 0.0 && p.gamma < 1.0)) throw InvalidInput("value file: gamma must be in (0,1)");
  r.Expect("target_scale");
  p.target_scale = r.Read<double>("target_scale");
  p.features = r.Features();
  p.net = r.Network("net");
  if (p.net.input_dim() != p.features.dim() || p.net.output_dim() != 1)
    throw InvalidInput("value file: network shape does not match feature spec");
  return p;
}

void save_value(const ValueParams& params, const std::filesystem::path& path) {
  WriteFile(path, format_value(params));
}

ValueParams load_value(const std::filesystem::path& path) { return parse_value(ReadFile(path)); }

}  // namespace osap
