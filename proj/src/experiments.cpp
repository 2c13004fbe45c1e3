#include "smpriv/experiments.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "smpriv/checkpoint.hpp"
#include "smpriv/errors.hpp"
#include "smpriv/rng.hpp"

namespace smpriv {

std::uint64_t point_seed(std::uint64_t master_seed, double lambda) {
  // +0.0 and -0.0 must agree.
  return mix_seed(master_seed, std::bit_cast<std::uint64_t>(lambda + 0.0));
}

std::vector<double> sorted_grid(std::vector<double> lambdas) {
  require(!lambdas.empty(), ErrorKind::Config, "lambda grid: must not be empty");
  for (double l : lambdas)
    require(std::isfinite(l) && l >= 0.0, ErrorKind::Config, "lambda grid: values must be finite and >= 0");
  std::sort(lambdas.begin(), lambdas.end());
  require(lambdas.front() == 0.0, ErrorKind::Config, "lambda grid: must include 0");
  require(std::adjacent_find(lambdas.begin(), lambdas.end()) == lambdas.end(), ErrorKind::Config,
          "lambda grid: duplicate value");
  return lambdas;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

namespace {

std::vector<double> flatten(const SeqBatch& m) {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) v.push_back(m(i, j));
  return v;
}

std::string lambda_tag(double lambda) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "lambda_%.6g", lambda);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorKind::Io, "cannot write " + path.string());
  return os;
}

}  // namespace

TradeoffPoint run_point(const TrainConfig& base, double lambda, const DataSplit& releaser_data,
                        const DataSplit& attacker_data, const Dataset& eval, const SweepOptions& opts,
                        const std::string& tag) {
  TrainConfig cfg = base;
  cfg.lambda = lambda;
  cfg.seed = point_seed(base.seed, lambda);
  TradeoffPoint p;
  p.lambda = lambda;
  p.seed = cfg.seed;
  try {
    const auto trained = train(cfg, releaser_data);
    const auto test_attacker = train_test_attacker(trained.releaser, attacker_data.train, attacker_data.validation, cfg);
    const auto ev = evaluate(trained.releaser, test_attacker.attacker, eval, mix_seed(cfg.seed, 8));
    p.ne2 = ev.ne2;
    p.ne4 = ev.ne4;
    p.accuracy = ev.accuracy;
    const auto y = flatten(ev.y), z = flatten(ev.z);
    p.indicator_errors = quality_indicators(y, z).error_percent;
    p.peak_preservation = peak_preservation(ev.y, ev.z, opts.peaks.magnitude, opts.peaks.location);
    if (opts.checkpoint_dir) {
      std::filesystem::create_directories(*opts.checkpoint_dir);
      const std::string stem = (tag.empty() ? "" : tag + "_") + lambda_tag(lambda);
      p.checkpoint = "releaser_" + stem + ".json";
      save_release_model(trained.releaser, *opts.checkpoint_dir / p.checkpoint);
      save_stack(trained.attacker, *opts.checkpoint_dir / ("attacker_" + stem + ".json"));
      save_stack(test_attacker.attacker, *opts.checkpoint_dir / ("test_attacker_" + stem + ".json"));
      trained.history.write_csv((*opts.checkpoint_dir / ("history_" + stem + ".csv")).string());
    }
  } catch (const Error& e) {
    fail(e.kind(), (tag.empty() ? "" : tag + ", ") + "lambda " + format_number(lambda) + ": " + e.what());
  }
  if (opts.verbose)
    std::cerr << (tag.empty() ? "" : tag + " ") << "lambda " << format_number(lambda) << ": accuracy "
              << format_number(p.accuracy) << ", NE2 " << format_number(p.ne2) << '\n';
  return p;
}

std::vector<TradeoffPoint> tradeoff_sweep(const TrainConfig& base, const DataSplit& data, const SweepOptions& opts) {
  std::vector<TradeoffPoint> out;
  for (double l : sorted_grid(opts.lambdas)) out.push_back(run_point(base, l, data, data, data.test, opts));
  return out;
}

std::string_view mismatch_eval_name(MismatchEval m) {
  return m == MismatchEval::ReleaserHouses ? "releaser_houses" : "attacker_houses";
}

MismatchEval parse_mismatch_eval(std::string_view name) {
  if (name == "releaser_houses") return MismatchEval::ReleaserHouses;
  if (name == "attacker_houses") return MismatchEval::AttackerHouses;
  fail(ErrorKind::Config, "mismatch.evaluate_on: unknown value '" + std::string(name) + "'");
}

std::vector<MismatchScenario> default_mismatch_scenarios() {
  return {{"matched", {1, 2, 3, 4, 5}, {1, 2, 3, 4, 5}},
          {"partial", {1, 2, 3, 4, 5}, {1, 3}},
          {"disjoint", {1, 2, 4, 5}, {3}}};
}

std::vector<MismatchResult> mismatch_experiment(const TrainConfig& base, const DataSplit& data,
                                                const std::vector<MismatchScenario>& scenarios,
                                                const SweepOptions& opts, MismatchEval eval_on) {
  require(!scenarios.empty(), ErrorKind::Config, "mismatch: no scenarios");
  const auto grid = sorted_grid(opts.lambdas);
  auto by_house = [](const Dataset& d, const std::vector<int>& houses) {
    return partition_by_house(d, {houses}).front();
  };
  std::vector<MismatchResult> out;
  for (const auto& sc : scenarios) {
    require(!sc.releaser_houses.empty() && !sc.attacker_houses.empty(), ErrorKind::Config,
            "mismatch." + sc.name + ": house sets must not be empty");
    const DataSplit rel{by_house(data.train, sc.releaser_houses), by_house(data.validation, sc.releaser_houses),
                        by_house(data.test, sc.releaser_houses)};
    const DataSplit att{by_house(data.train, sc.attacker_houses), by_house(data.validation, sc.attacker_houses),
                        by_house(data.test, sc.attacker_houses)};
    const Dataset& eval = eval_on == MismatchEval::ReleaserHouses ? rel.test : att.test;
    MismatchResult r{sc, {}};
    for (double l : grid) r.points.push_back(run_point(base, l, rel, att, eval, opts, sc.name));
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::vector<double>> release_error_signals(const ReleaseModel& releaser, const Dataset& test, int count,
                                                       std::uint64_t seed) {
  require(count >= 1, ErrorKind::Usage, "release_error_signals: count must be >= 1");
  require(!test.empty(), ErrorKind::Usage, "release_error_signals: empty test split");
  const SeqBatch y = consumption_batch(test);
  const LabelBatch x = label_batch(test);
  std::vector<std::vector<double>> out;
  for (int i = 0; i < count; ++i) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    const SeqBatch z = make_release(releaser, y, draw_noise(rng, releaser.noise_dim, test.steps,
                                                            static_cast<int>(test.size())),
                                    releaser.observe_labels ? &x : nullptr);
    out.push_back(flatten(z - y));
  }
  return out;
}

void write_tradeoff_csv(const std::vector<TradeoffPoint>& points, const std::filesystem::path& path) {
  auto os = open_out(path);
  os << "lambda,ne2,ne4,accuracy";
  for (auto n : kIndicatorNames) os << ",err_" << n;
  os << ",peak_preservation,seed,checkpoint\n";
  for (const auto& p : points) {
    os << format_number(p.lambda) << ',' << format_number(p.ne2) << ',' << format_number(p.ne4) << ','
       << format_number(p.accuracy);
    for (double e : p.indicator_errors) os << ',' << format_number(e);
    os << ',' << format_number(p.peak_preservation) << ',' << p.seed << ',' << p.checkpoint << '\n';
  }
}

void write_mismatch_csv(const std::vector<MismatchResult>& results, const std::filesystem::path& path) {
  auto os = open_out(path);
  os << "scenario,releaser_houses,attacker_houses,lambda,ne2,ne4,accuracy\n";
  auto houses = [](const std::vector<int>& h) {
    std::string s;
    for (std::size_t i = 0; i < h.size(); ++i) s += (i ? " " : "") + std::to_string(h[i]);
    return s;
  };
  for (const auto& r : results)
    for (const auto& p : r.points)
      os << r.scenario.name << ',' << houses(r.scenario.releaser_houses) << ',' << houses(r.scenario.attacker_houses)
         << ',' << format_number(p.lambda) << ',' << format_number(p.ne2) << ',' << format_number(p.ne4) << ','
         << format_number(p.accuracy) << '\n';
}

void write_psd_csv(const std::vector<PsdSeries>& series, const std::filesystem::path& path) {
  require(!series.empty(), ErrorKind::Usage, "write_psd_csv: no series");
  const auto& f = series.front().psd.frequencies;
  for (const auto& s : series)
    require(s.psd.frequencies == f, ErrorKind::Usage, "write_psd_csv: series have different frequency bins");
  auto os = open_out(path);
  os << "bin,frequency";
  for (const auto& s : series) os << ',' << s.label;
  os << '\n';
  for (std::size_t k = 0; k < f.size(); ++k) {
    os << k << ',' << format_number(f[k]);
    for (const auto& s : series) os << ',' << format_number(s.psd.density[k]);
    os << '\n';
  }
}

void write_indicators_csv(const QualityIndicators& q, const std::filesystem::path& path) {
  auto os = open_out(path);
  os << "indicator,reference,release,error_percent\n";
  for (std::size_t i = 0; i < kIndicatorNames.size(); ++i)
    os << kIndicatorNames[i] << ',' << format_number(q.reference[i]) << ',' << format_number(q.release[i]) << ','
       << format_number(q.error_percent[i]) << '\n';
}

}  // namespace smpriv
