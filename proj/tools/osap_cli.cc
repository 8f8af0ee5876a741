// osap: trace generation, model training and the evaluation matrix.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "osap/experiment.h"
#include "osap/rng.h"

namespace {

using namespace osap;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void AddCommon(CLI::App* cmd, Common& c, bool out_required) {
  cmd->add_option("--config", c.config, "Experiment config (INI)");
  cmd->add_option("--seed", c.seed, "Master seed (overrides the config)");
  auto* out = cmd->add_option("--out", c.out, "Output path");
  if (out_required) out->required();
}

ExperimentConfig LoadConfig(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? DefaultExperimentConfig() : load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

void Progress(const std::string& msg) { std::cerr << msg << '\n'; }

std::string SchemeLabel(const std::string& flag) {
  const Scheme s = ParseScheme(flag);
  switch (s) {
    case Scheme::kNone:
      return kVanilla;
    case Scheme::kNoveltyDetection:
      return kNd;
    case Scheme::kAgentEnsemble:
      return kAEnsemble;
    case Scheme::kValueEnsemble:
      return kVEnsemble;
  }
  return kVanilla;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trace-driven ABR simulator with an online safety layer"};
  app.require_subcommand(1);

  // gen-traces
  Common gt;
  std::string gt_dist;
  std::size_t gt_count = 100, gt_steps = 2000;
  auto* gen_traces = app.add_subcommand("gen-traces", "Sample synthetic throughput traces");
  AddCommon(gen_traces, gt, true);
  gen_traces->add_option("--dist", gt_dist, "Config distribution name or spec, e.g. 'gamma 1 2'")
      ->required();
  gen_traces->add_option("--count", gt_count, "Number of traces");
  gen_traces->add_option("--steps", gt_steps, "Samples per trace");

  // gen-manifest
  Common gm;
  auto* gen_manifest = app.add_subcommand("gen-manifest", "Write the synthetic video manifest");
  AddCommon(gen_manifest, gm, true);

  // train
  Common tr;
  std::string tr_dist;
  auto* train = app.add_subcommand("train", "Train one actor-critic agent");
  AddCommon(train, tr, true);
  train->add_option("--dist,--train-dist", tr_dist, "Training distribution")->required();

  // train-ensemble
  Common te;
  std::string te_dist, te_kind = "agents", te_policy;
  std::size_t te_count = 5;
  auto* train_ens = app.add_subcommand("train-ensemble", "Train an agent or value ensemble");
  AddCommon(train_ens, te, true);
  train_ens->add_option("--dist,--train-dist", te_dist, "Training distribution")->required();
  train_ens->add_option("--kind", te_kind, "agents|values")
      ->check(CLI::IsMember({"agents", "values"}));
  train_ens->add_option("--count", te_count, "Ensemble size")->check(CLI::Range(3, 1000));
  train_ens->add_option("--policy", te_policy, "Agent file whose returns values estimate");

  // fit-nd
  Common fn;
  std::string fn_dist, fn_policy;
  auto* fit_nd = app.add_subcommand("fit-nd", "Fit the OC-SVM novelty detector");
  AddCommon(fit_nd, fn, true);
  fit_nd->add_option("--dist,--train-dist", fn_dist, "Training distribution")->required();
  fit_nd->add_option("--policy", fn_policy, "Agent whose rollouts supply samples (default BB)");

  // calibrate
  Common ca;
  std::string ca_dist, ca_models;
  auto* calib = app.add_subcommand("calibrate", "Calibrate ensemble thresholds to ND's QoE");
  AddCommon(calib, ca, false);
  calib->add_option("--dist,--train-dist", ca_dist, "Training distribution")->required();
  calib->add_option("--models", ca_models, "Directory with agent_*, value_*, detector.txt")
      ->required();

  // run
  Common rn;
  bool rn_train = false;
  std::string rn_models;
  std::vector<std::string> rn_train_dist, rn_test_dist, rn_scheme;
  auto* run = app.add_subcommand("run", "Evaluate the train x test matrix");
  AddCommon(run, rn, true);
  run->add_flag("--train", rn_train, "Train models instead of loading them");
  run->add_option("--models", rn_models, "Models directory (overrides the config)");
  run->add_option("--train-dist", rn_train_dist, "Restrict training distributions");
  run->add_option("--test-dist", rn_test_dist, "Restrict test distributions");
  run->add_option("--scheme", rn_scheme, "ND|A|V|none (BB and random always run)");

  // report
  std::string rp_in, rp_out;
  auto* report = app.add_subcommand("report", "Recompute summaries from episodes.csv");
  report->add_option("--in", rp_in, "Run directory or episodes.csv")->required();
  report->add_option("--out", rp_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_traces) {
      const ExperimentConfig cfg = LoadConfig(gt);
      NamedDistribution dist;
      bool named = false;
      for (const auto& d : cfg.distributions)
        if (d.name == gt_dist) dist = d, named = true;
      if (!named) dist = {gt_dist, ParseDistributionSpec(gt_dist)};
      if (dist.spec.kind == DistributionKind::kFileBacked)
        throw InvalidInput("gen-traces needs a synthetic distribution");
      ExperimentConfig c = cfg;
      c.traces_per_distribution = gt_count;
      c.trace_steps = gt_steps;
      const auto traces = build_traces(c, dist);
      std::filesystem::create_directories(gt.out);
      for (std::size_t i = 0; i < traces.size(); ++i)
        write_trace(traces[i], std::filesystem::path(gt.out) / fmt::format("trace_{:04}.txt", i));
      fmt::print("wrote {} traces to {}\n", traces.size(), gt.out);
    } else if (*gen_manifest) {
      const ExperimentConfig cfg = LoadConfig(gm);
      write_manifest(build_manifest(cfg), gm.out);
    } else if (*train) {
      const ExperimentConfig cfg = LoadConfig(tr);
      const VideoManifest manifest = build_manifest(cfg);
      const auto split = build_split(cfg, cfg.Distribution(tr_dist));
      const auto result = train_agent(split.train, MakeTrainingEnv(cfg, manifest), cfg.agent,
                                      DeriveSeed(cfg.seed, {HashName(tr_dist), HashName("agent"), 0}));
      save_agent(result.params, tr.out);
      if (!result.episode_qoe.empty())
        fmt::print("final training episode QoE {:.3f}\n", result.episode_qoe.back());
    } else if (*train_ens) {
      const ExperimentConfig cfg = LoadConfig(te);
      const VideoManifest manifest = build_manifest(cfg);
      const auto split = build_split(cfg, cfg.Distribution(te_dist));
      const TrainingEnv env = MakeTrainingEnv(cfg, manifest);
      const char* kind = te_kind == "agents" ? "agent" : "value";
      std::vector<std::uint64_t> seeds;
      for (std::size_t i = 0; i < te_count; ++i)
        seeds.push_back(DeriveSeed(cfg.seed, {HashName(te_dist), HashName(kind), i}));
      const std::filesystem::path out(te.out);
      std::filesystem::create_directories(out);
      if (te_kind == "agents") {
        const auto agents = train_agent_ensemble(split.train, env, cfg.agent, seeds);
        for (std::size_t i = 0; i < agents.size(); ++i)
          save_agent(agents[i], out / fmt::format("agent_{}.txt", i));
      } else {
        const std::filesystem::path policy =
            te_policy.empty() ? out / "agent_0.txt" : std::filesystem::path(te_policy);
        const AgentParams acting = load_agent(policy);
        const auto values = train_value_ensemble(acting, split.train, env, cfg.value, seeds);
        for (std::size_t i = 0; i < values.size(); ++i)
          save_value(values[i], out / fmt::format("value_{}.txt", i));
      }
    } else if (*fit_nd) {
      ExperimentConfig cfg = LoadConfig(fn);
      const VideoManifest manifest = build_manifest(cfg);
      const auto split = build_split(cfg, cfg.Distribution(fn_dist));
      ModelBundle bundle;
      bundle.dist = fn_dist;
      if (!fn_policy.empty()) {
        bundle.agents.push_back(load_agent(fn_policy));
        cfg.nd_sample_policy = "agent";
      }
      fit_detector(cfg, split, manifest, bundle, Progress);
      save_ocsvm(bundle.detector, fn.out);
    } else if (*calib) {
      const ExperimentConfig cfg = LoadConfig(ca);
      const VideoManifest manifest = build_manifest(cfg);
      const auto split = build_split(cfg, cfg.Distribution(ca_dist));
      const std::filesystem::path dir(ca_models);
      ModelBundle bundle;
      bundle.dist = ca_dist;
      for (std::size_t i = 0; std::filesystem::exists(dir / fmt::format("agent_{}.txt", i)); ++i)
        bundle.agents.push_back(load_agent(dir / fmt::format("agent_{}.txt", i)));
      for (std::size_t i = 0; std::filesystem::exists(dir / fmt::format("value_{}.txt", i)); ++i)
        bundle.values.push_back(load_value(dir / fmt::format("value_{}.txt", i)));
      bundle.detector = load_ocsvm(dir / "detector.txt");
      calibrate_bundle(cfg, split, manifest, bundle, Progress);
      const std::filesystem::path out = ca.out.empty() ? dir : std::filesystem::path(ca.out);
      std::filesystem::create_directories(out);
      save_calibration(bundle.calibration_a, out / "calibration_A.txt");
      save_calibration(bundle.calibration_v, out / "calibration_V.txt");
    } else if (*run) {
      ExperimentConfig cfg = LoadConfig(rn);
      if (rn_train) cfg.train = true;
      if (!rn_models.empty()) cfg.models_dir = rn_models;
      if (!cfg.train && !cfg.models_dir)
        throw InvalidInput("run needs --train or a models directory");
      MatrixRequest request{rn_train_dist, rn_test_dist, {}};
      if (!rn_scheme.empty()) {
        for (const auto& s : rn_scheme) request.schemes.push_back(SchemeLabel(s));
        request.schemes.push_back(kBb);
        request.schemes.push_back(kRandom);
      }
      const MatrixRun result = run_matrix(cfg, request, Progress);
      emit_report(result.report, rn.out);
      for (const auto& s : result.report.schemes)
        fmt::print("{:<11} OOD normalized: min {:.3f} max {:.3f} mean {:.3f} median {:.3f}\n",
                   s.scheme, s.min, s.max, s.mean, s.median);
      fmt::print("mean per-decision latency {:.1f} us\n", result.mean_decision_latency_s * 1e6);
    } else if (*report) {
      std::filesystem::path in(rp_in);
      if (std::filesystem::is_directory(in)) in /= "episodes.csv";
      emit_report(summarize(load_episodes(in)), rp_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "osap: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
