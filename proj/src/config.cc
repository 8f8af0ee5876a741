#include "osap/config.h"

#include <fstream>
#include <set>
#include <type_traits>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

namespace osap {

namespace {

namespace pt = boost::property_tree;

template <typename T>
std::vector<T> ParseList(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::vector<T> out;
  T v;
  while (in >> v) out.push_back(v);
  if (!in.eof() || out.empty()) throw InvalidInput(fmt::format("config: bad list for '{}'", key));
  return out;
}

bool ParseBool(const std::string& text, const std::string& key) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw InvalidInput(fmt::format("config: '{}' expects true/false, got '{}'", key, text));
}

// Applies every key in a section through a setter table; unknown keys fail.
class SectionReader {
 public:
  SectionReader(const std::string& section, const pt::ptree& tree)
      : section_(section), tree_(tree) {}

  template <typename T>
  void Get(const char* key, T& out) {
    seen_.insert(key);
    auto v = tree_.get_optional<std::string>(key);
    if (!v) return;
    if constexpr (std::is_same_v<T, bool>) {
      out = ParseBool(*v, Key(key));
    } else if constexpr (std::is_same_v<T, std::string>) {
      out = *v;
    } else {
      std::istringstream in(*v);
      T parsed;
      std::string rest;
      if (!(in >> parsed) || (in >> rest))
        throw InvalidInput(fmt::format("config: bad value '{}' for '{}'", *v, Key(key)));
      out = parsed;
    }
  }

  std::optional<std::string> Raw(const char* key) {
    seen_.insert(key);
    auto v = tree_.get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return *v;
  }

  void Finish() const {
    for (const auto& [key, _] : tree_)
      if (!seen_.count(key)) throw InvalidInput(fmt::format("config: unknown key '{}'", Key(key)));
  }

 private:
  std::string Key(const std::string& key) const { return section_ + "." + key; }

  std::string section_;
  const pt::ptree& tree_;
  std::set<std::string> seen_;
};

}  // namespace

const NamedDistribution& ExperimentConfig::Distribution(const std::string& name) const {
  for (const auto& d : distributions)
    if (d.name == name) return d;
  throw InvalidInput(fmt::format("unknown distribution '{}'", name));
}

ExperimentConfig DefaultExperimentConfig() {
  ExperimentConfig cfg;
  cfg.distributions = {
      {"gamma_1_2", DistributionSpec::Gamma(1.0, 2.0)},
      {"gamma_2_2", DistributionSpec::Gamma(2.0, 2.0)},
      {"logistic_4_0.5", DistributionSpec::Logistic(4.0, 0.5)},
      {"exponential_1", DistributionSpec::Exponential(1.0)},
  };
  return cfg;
}

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InvalidInput(fmt::format("config: {}", e.what()));
  }

  ExperimentConfig cfg = DefaultExperimentConfig();
  static const std::set<std::string> kSections = {
      "experiment", "distributions", "data",        "video",      "env",  "bb",
      "agent",      "value",         "ensemble",    "nd",         "controller", "calibration",
      "paths"};
  for (const auto& [name, _] : tree)
    if (!kSections.count(name)) throw InvalidInput(fmt::format("config: unknown section [{}]", name));

  auto section = [&](const char* name) -> const pt::ptree& {
    static const pt::ptree kEmpty;
    auto child = tree.get_child_optional(pt::ptree::path_type(name, '\0'));
    return child ? *child : kEmpty;
  };

  {
    SectionReader r("experiment", section("experiment"));
    r.Get("seed", cfg.seed);
    r.Get("threads", cfg.threads);
    r.Get("train", cfg.train);
    r.Finish();
  }
  if (tree.get_child_optional("distributions")) {
    cfg.distributions.clear();
    for (const auto& [name, value] : section("distributions"))
      cfg.distributions.push_back({name, ParseDistributionSpec(value.data())});
    if (cfg.distributions.empty()) throw InvalidInput("config: [distributions] is empty");
  }
  {
    SectionReader r("data", section("data"));
    r.Get("traces_per_distribution", cfg.traces_per_distribution);
    r.Get("trace_steps", cfg.trace_steps);
    r.Get("dt", cfg.synthetic.dt_s);
    r.Get("throughput_floor", cfg.synthetic.floor_mbps);
    r.Get("train_fraction", cfg.train_fraction);
    r.Get("validation_fraction", cfg.validation_fraction);
    r.Get("test_traces_per_cell", cfg.test_traces_per_cell);
    r.Finish();
  }
  {
    SectionReader r("video", section("video"));
    if (auto rates = r.Raw("ladder")) {
      auto values = ParseList<double>(*rates, "video.ladder");
      cfg.ladder.clear();
      for (double v : values) cfg.ladder.push_back({fmt::format("{}Mbps", v), v});
    }
    r.Get("chunk_count", cfg.video.chunk_count);
    r.Get("repeats", cfg.video.repeats);
    r.Get("chunk_duration", cfg.video.chunk_duration_s);
    r.Get("size_noise_sigma", cfg.video.size_noise_sigma);
    r.Get("seed", cfg.video.seed);
    if (auto path = r.Raw("manifest")) cfg.manifest_path = *path;
    r.Finish();
  }
  {
    SectionReader r("env", section("env"));
    r.Get("rtt", cfg.env.rtt_s);
    r.Get("rebuffer_penalty", cfg.env.rebuffer_penalty);
    r.Get("buffer_cap", cfg.env.buffer_cap_s);
    r.Get("min_throughput", cfg.env.min_throughput_mbps);
    r.Finish();
  }
  {
    SectionReader r("bb", section("bb"));
    r.Get("reservoir", cfg.bb.reservoir_s);
    r.Get("cushion", cfg.bb.cushion_s);
    r.Finish();
  }
  {
    SectionReader r("agent", section("agent"));
    if (auto hidden = r.Raw("hidden")) cfg.agent.hidden = ParseList<std::size_t>(*hidden, "agent.hidden");
    r.Get("actor_lr", cfg.agent.actor_lr);
    r.Get("critic_lr", cfg.agent.critic_lr);
    r.Get("gamma", cfg.agent.gamma);
    r.Get("entropy_weight", cfg.agent.entropy_weight);
    r.Get("entropy_weight_final", cfg.agent.entropy_weight_final);
    r.Get("episodes", cfg.agent.episodes);
    r.Get("reward_scale", cfg.agent.reward_scale);
    r.Get("max_grad_norm", cfg.agent.max_grad_norm);
    r.Get("data_seed", cfg.agent.data_seed);
    r.Finish();
  }
  {
    SectionReader r("value", section("value"));
    if (auto hidden = r.Raw("hidden")) cfg.value.hidden = ParseList<std::size_t>(*hidden, "value.hidden");
    r.Get("lr", cfg.value.lr);
    r.Get("gamma", cfg.value.gamma);
    r.Get("rollouts", cfg.value.rollouts);
    r.Get("epochs", cfg.value.epochs);
    r.Get("batch_size", cfg.value.batch_size);
    r.Get("data_seed", cfg.value.data_seed);
    r.Finish();
  }
  {
    SectionReader r("ensemble", section("ensemble"));
    r.Get("size", cfg.ensemble_size);
    r.Get("drop", cfg.ensemble.drop);
    r.Get("recompute_mean", cfg.ensemble.recompute_mean);
    r.Get("k", cfg.ensemble_k);
    r.Finish();
  }
  {
    SectionReader r("nd", section("nd"));
    r.Get("k", cfg.nd_k);
    r.Get("l", cfg.nd_l);
    r.Get("nu", cfg.nd.nu);
    r.Get("kernel_gamma", cfg.nd.kernel_gamma);
    r.Get("tolerance", cfg.nd.tolerance);
    r.Get("max_samples", cfg.nd_max_samples);
    r.Get("rollouts_per_trace", cfg.nd_rollouts_per_trace);
    r.Get("sample_policy", cfg.nd_sample_policy);
    if (cfg.nd_sample_policy != "bb" && cfg.nd_sample_policy != "agent")
      throw InvalidInput("config: nd.sample_policy must be 'bb' or 'agent'");
    r.Finish();
  }
  {
    SectionReader r("controller", section("controller"));
    r.Get("sticky", cfg.sticky);
    r.Finish();
  }
  {
    SectionReader r("calibration", section("calibration"));
    r.Get("quantile_min", cfg.calibration.quantile_min);
    r.Get("quantile_max", cfg.calibration.quantile_max);
    r.Get("quantile_step", cfg.calibration.quantile_step);
    if (auto ls = r.Raw("l_values"))
      cfg.calibration.l_values = ParseList<std::size_t>(*ls, "calibration.l_values");
    r.Get("include_infinity", cfg.calibration.include_infinity);
    r.Get("tolerance", cfg.calibration.tolerance);
    r.Finish();
  }
  {
    SectionReader r("paths", section("paths"));
    if (auto p = r.Raw("models")) cfg.models_dir = *p;
    r.Finish();
  }
  if (cfg.ensemble_size < 3) throw InvalidInput("config: ensemble.size must be >= 3");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace osap
