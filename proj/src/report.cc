#include "osap/report.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "osap/trace.h"

namespace osap {

namespace {

constexpr const char* kUndefined = "undefined";

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Reads data rows (skipping '#' comments and the header line).
std::vector<std::vector<std::string>> ReadCsv(const std::filesystem::path& path,
                                              std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    auto fields = SplitCsv(line);
    if (fields.size() != columns)
      throw InvalidInput(fmt::format("{}: expected {} columns, got {}", path.string(), columns,
                                     fields.size()));
    rows.push_back(std::move(fields));
  }
  return rows;
}

double ToDouble(const std::string& s) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw InvalidInput(fmt::format("report: bad number '{}'", s));
}

std::uint64_t ToUint(const std::string& s) {
  try {
    std::size_t used = 0;
    auto v = std::stoull(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw InvalidInput(fmt::format("report: bad integer '{}'", s));
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << text;
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

const std::vector<std::string>& ReportSchemes() {
  static const std::vector<std::string> kAll = {kVanilla, kNd, kAEnsemble, kVEnsemble, kBb, kRandom};
  return kAll;
}

std::optional<double> normalize(double qoe, double random_qoe, double bb_qoe) {
  const double span = bb_qoe - random_qoe;
  if (std::abs(span) < 1e-9) return std::nullopt;
  return (qoe - random_qoe) / span;
}

MatrixReport summarize(std::vector<EpisodeRow> episodes) {
  MatrixReport report;

  struct Acc {
    std::size_t n = 0;
    double qoe = 0.0;
    double default_fraction = 0.0;
  };
  using CellKey = std::tuple<std::string, std::string, std::string>;
  std::map<CellKey, Acc> acc;
  std::vector<CellKey> order;
  for (const auto& e : episodes) {
    CellKey key{e.train_dist, e.test_dist, e.scheme};
    auto [it, inserted] = acc.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.n += 1;
    it->second.qoe += e.total_qoe;
    it->second.default_fraction += e.default_fraction;
  }

  auto mean_of = [&](const std::string& train, const std::string& test,
                     const char* scheme) -> std::optional<double> {
    auto it = acc.find({train, test, scheme});
    if (it == acc.end()) return std::nullopt;
    return it->second.qoe / static_cast<double>(it->second.n);
  };

  std::map<std::string, std::vector<double>> ood_scores;
  for (const auto& key : order) {
    const auto& [train, test, scheme] = key;
    const Acc& a = acc.at(key);
    CellSummary c;
    c.train_dist = train;
    c.test_dist = test;
    c.scheme = scheme;
    c.episodes = a.n;
    c.mean_qoe = a.qoe / static_cast<double>(a.n);
    c.default_rate = a.default_fraction / static_cast<double>(a.n);
    c.ood = train != test;
    const auto bb = mean_of(train, test, kBb);
    const auto rnd = mean_of(train, test, kRandom);
    if (bb && rnd) c.normalized = normalize(c.mean_qoe, *rnd, *bb);
    if (c.ood && c.normalized) ood_scores[scheme].push_back(*c.normalized);
    report.cells.push_back(std::move(c));
  }

  for (const auto& scheme : ReportSchemes()) {
    auto it = ood_scores.find(scheme);
    if (it == ood_scores.end() || it->second.empty()) continue;
    auto values = it->second;
    std::sort(values.begin(), values.end());
    SchemeSummary s;
    s.scheme = scheme;
    s.cells = values.size();
    s.min = values.front();
    s.max = values.back();
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    s.median = Median(values);
    report.schemes.push_back(s);
    for (std::size_t i = 0; i < values.size(); ++i)
      report.cdf.push_back(
          {scheme, values[i], static_cast<double>(i + 1) / static_cast<double>(values.size())});
  }
  report.episodes = std::move(episodes);
  return report;
}

void emit_report(const MatrixReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);

  std::string episodes =
      "# train_dist: training distribution of the models\n"
      "# test_dist: distribution the test trace was drawn from\n"
      "# scheme: vanilla | ND | A-ensemble | V-ensemble | BB | random\n"
      "# trace_index: position in the test split; trace_id: trace label\n"
      "# seed: episode RNG seed\n"
      "# total_qoe: sum of per-chunk QoE\n"
      "# default_step: first chunk decided by the default policy (empty if none)\n"
      "# default_fraction: fraction of chunks decided by the default policy\n"
      "# chunks: chunks in the episode\n"
      "train_dist,test_dist,scheme,trace_index,trace_id,seed,total_qoe,default_step,"
      "default_fraction,chunks\n";
  for (const auto& e : report.episodes)
    episodes += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", e.train_dist, e.test_dist, e.scheme,
                            e.trace_index, e.trace_id, e.seed, e.total_qoe,
                            e.default_step ? fmt::format("{}", *e.default_step) : "",
                            e.default_fraction, e.chunks);
  WriteText(out_dir / "episodes.csv", episodes);

  std::string cells =
      "# mean_qoe: mean total QoE over the cell's episodes\n"
      "# normalized: (mean_qoe - random) / (BB - random); 'undefined' if BB == random\n"
      "# default_rate: mean fraction of chunks decided by the default policy\n"
      "# ood: 1 when train_dist != test_dist\n"
      "train_dist,test_dist,scheme,episodes,mean_qoe,normalized,default_rate,ood\n";
  for (const auto& c : report.cells)
    cells += fmt::format("{},{},{},{},{},{},{},{}\n", c.train_dist, c.test_dist, c.scheme,
                         c.episodes, c.mean_qoe,
                         c.normalized ? fmt::format("{}", *c.normalized) : kUndefined,
                         c.default_rate, c.ood ? 1 : 0);
  WriteText(out_dir / "cells.csv", cells);

  std::string schemes =
      "# Normalized-score statistics over OOD cells (train_dist != test_dist)\n"
      "scheme,cells,min,max,mean,median\n";
  for (const auto& s : report.schemes)
    schemes += fmt::format("{},{},{},{},{},{}\n", s.scheme, s.cells, s.min, s.max, s.mean, s.median);
  WriteText(out_dir / "schemes.csv", schemes);

  std::string cdf =
      "# Empirical CDF of OOD normalized scores per scheme: fraction of cells <= value\n"
      "scheme,value,fraction\n";
  for (const auto& p : report.cdf) cdf += fmt::format("{},{},{}\n", p.scheme, p.value, p.fraction);
  WriteText(out_dir / "cdf.csv", cdf);
}

std::vector<EpisodeRow> load_episodes(const std::filesystem::path& csv) {
  std::vector<EpisodeRow> out;
  for (const auto& f : ReadCsv(csv, 10)) {
    EpisodeRow e;
    e.train_dist = f[0];
    e.test_dist = f[1];
    e.scheme = f[2];
    e.trace_index = ToUint(f[3]);
    e.trace_id = f[4];
    e.seed = ToUint(f[5]);
    e.total_qoe = ToDouble(f[6]);
    if (!f[7].empty()) e.default_step = ToUint(f[7]);
    e.default_fraction = ToDouble(f[8]);
    e.chunks = ToUint(f[9]);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<CellSummary> load_cells(const std::filesystem::path& csv) {
  std::vector<CellSummary> out;
  for (const auto& f : ReadCsv(csv, 8)) {
    CellSummary c;
    c.train_dist = f[0];
    c.test_dist = f[1];
    c.scheme = f[2];
    c.episodes = ToUint(f[3]);
    c.mean_qoe = ToDouble(f[4]);
    if (f[5] != kUndefined) c.normalized = ToDouble(f[5]);
    c.default_rate = ToDouble(f[6]);
    c.ood = f[7] == "1";
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<SchemeSummary> load_schemes(const std::filesystem::path& csv) {
  std::vector<SchemeSummary> out;
  for (const auto& f : ReadCsv(csv, 6))
    out.push_back({f[0], ToUint(f[1]), ToDouble(f[2]), ToDouble(f[3]), ToDouble(f[4]), ToDouble(f[5])});
  return out;
}

std::vector<CdfPoint> load_cdf(const std::filesystem::path& csv) {
  std::vector<CdfPoint> out;
  for (const auto& f : ReadCsv(csv, 3)) out.push_back({f[0], ToDouble(f[1]), ToDouble(f[2])});
  return out;
}

}  // namespace osap
