#include "smpriv/commands.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

#include "smpriv/analytics.hpp"
#include "smpriv/checkpoint.hpp"
#include "smpriv/config.hpp"
#include "smpriv/experiments.hpp"
#include "smpriv/info_oracle.hpp"
#include "smpriv/trainer.hpp"

namespace smpriv {

namespace fs = std::filesystem;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return 2;
    case ErrorKind::Config: return 3;
    case ErrorKind::Parse: return 4;
    case ErrorKind::Io: return 5;
    case ErrorKind::Numeric: return 6;
    case ErrorKind::Degenerate: return 7;
  }
  return 1;
}

namespace {

struct Options {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::string lambda_grid;
  std::vector<std::string> checkpoints;
  std::string attacker;
  int specs = 1000;
};

RunConfig resolve(const Options& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (o.seed) c.train.seed = *o.seed;
  if (!o.lambda_grid.empty()) c.lambda_grid = parse_lambda_list(o.lambda_grid);
  c.validate();
  return c;
}

fs::path prepare_out(const Options& o, const RunConfig& c) {
  const fs::path dir = o.out;
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec && fs::is_directory(dir), ErrorKind::Io, "cannot create output directory " + dir.string());
  save_json(run_config_to_json(c), dir / "resolved_config.json");
  return dir;
}

DataSplit load_split(const RunConfig& c) {
  const Dataset d = load_dataset(c.data);
  d.validate();
  return split(d, c.data.split_seed);
}

const std::string& single_checkpoint(const Options& o) {
  require(o.checkpoints.size() == 1, ErrorKind::Usage, "this command needs exactly one --checkpoint");
  return o.checkpoints.front();
}

std::vector<double> flatten(const SeqBatch& m) {
  std::vector<double> v;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) v.push_back(m(i, j));
  return v;
}

void write_metrics(const fs::path& path, const Evaluation& ev, const RunConfig& c) {
  const auto q = quality_indicators(flatten(ev.y), flatten(ev.z));
  nlohmann::json ind;
  for (std::size_t i = 0; i < kIndicatorNames.size(); ++i) ind[std::string(kIndicatorNames[i])] = q.error_percent[i];
  save_json({{"ne2", ev.ne2},
             {"ne4", ev.ne4},
             {"accuracy", ev.accuracy},
             {"peak_preservation", peak_preservation(ev.y, ev.z, c.eval.peaks.magnitude, c.eval.peaks.location)},
             {"indicator_error_percent", ind}},
            path);
}

SweepOptions sweep_options(const RunConfig& c, const fs::path& dir) {
  SweepOptions s;
  s.lambdas = c.lambda_grid;
  s.peaks = c.eval.peaks;
  s.checkpoint_dir = dir / "checkpoints";
  s.verbose = true;
  return s;
}

// Fixed noise stream for evaluation commands, derived from the run seed.
std::uint64_t eval_seed(const RunConfig& c) { return mix_seed(c.train.seed, 8); }

int cmd_gen_data(const Options& o, std::ostream& out) {
  const auto c = resolve(o);
  const auto dir = prepare_out(o, c);
  const Dataset d = load_dataset(c.data);
  write_csv(d, dir / "data.csv");
  out << "wrote " << (dir / "data.csv").string() << " (" << d.size() << " days, " << d.houses().size()
      << " houses)\n";
  return 0;
}

int cmd_train(const Options& o, std::ostream& out) {
  const auto c = resolve(o);
  const auto dir = prepare_out(o, c);
  const auto data = load_split(c);
  const auto r = train(c.train, data);
  save_release_model(r.releaser, dir / "releaser.json");
  save_stack(r.attacker, dir / "attacker.json");
  r.history.write_csv((dir / "history.csv").string());
  const auto& last = r.history.records.empty() ? IterationRecord{} : r.history.records.back();
  out << "trained " << c.train.iterations << " iterations, lambda " << format_number(c.train.lambda)
      << ": releaser loss " << format_number(last.releaser_loss) << ", distortion " << format_number(last.distortion)
      << '\n';
  return 0;
}

int cmd_attack(const Options& o, std::ostream& out) {
  const auto c = resolve(o);
  const auto dir = prepare_out(o, c);
  const auto data = load_split(c);
  const auto releaser = load_release_model(single_checkpoint(o));
  const auto ta = train_test_attacker(releaser, data.train, data.validation, c.train);
  save_stack(ta.attacker, dir / "test_attacker.json");
  const auto ev = evaluate(releaser, ta.attacker, data.test, eval_seed(c));
  write_metrics(dir / "metrics.json", ev, c);
  out << "test attacker: validation accuracy " << format_number(ta.best_validation_accuracy) << " (epoch "
      << ta.best_epoch << "), test accuracy " << format_number(ev.accuracy) << '\n';
  return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const auto c = resolve(o);
  const auto dir = prepare_out(o, c);
  const auto data = load_split(c);
  const auto releaser = load_release_model(single_checkpoint(o));
  const auto attacker = o.attacker.empty()
                            ? train_test_attacker(releaser, data.train, data.validation, c.train).attacker
                            : load_stack(o.attacker);
  const auto ev = evaluate(releaser, attacker, data.test, eval_seed(c));
  write_metrics(dir / "metrics.json", ev, c);
  out << "NE2 " << format_number(ev.ne2) << ", NE4 " << format_number(ev.ne4) << ", accuracy "
      << format_number(ev.accuracy) << '\n';
  return 0;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  const auto c = resolve(o);
  const auto dir = prepare_out(o, c);
  const auto data = load_split(c);
  const auto points = tradeoff_sweep(c.train, data, sweep_options(c, dir));
  write_tradeoff_csv(points, dir / "tradeoff.csv");
  out << "wrote " << (dir / "tradeoff.csv").string() << " (" << points.size() << " points)\n";
  return 0;
}

int cmd_psd(const Options& o, std::ostream& out) {
  const auto c = resolve(o);
  const auto dir = prepare_out(o, c);
  require(!o.checkpoints.empty(), ErrorKind::Usage, "psd needs at least one --checkpoint");
  const auto data = load_split(c);
  std::vector<PsdSeries> series;
  for (const auto& path : o.checkpoints) {
    const auto releaser = load_release_model(path);
    const auto signals = release_error_signals(releaser, data.test, c.eval.psd_signals, eval_seed(c));
    series.push_back({fs::path(path).stem().string(), welch_psd(signals, c.eval.welch)});
  }
  write_psd_csv(series, dir / "psd.csv");
  out << "wrote " << (dir / "psd.csv").string() << '\n';
  return 0;
}

int cmd_indicators(const Options& o, std::ostream& out) {
  const auto c = resolve(o);
  const auto dir = prepare_out(o, c);
  const auto data = load_split(c);
  const auto releaser = load_release_model(single_checkpoint(o));
  Rng rng(eval_seed(c));
  const SeqBatch y = consumption_batch(data.test);
  const LabelBatch x = label_batch(data.test);
  const SeqBatch z = make_release(
      releaser, y, draw_noise(rng, releaser.noise_dim, data.test.steps, static_cast<int>(data.test.size())),
      releaser.observe_labels ? &x : nullptr);
  const auto q = quality_indicators(flatten(y), flatten(z));
  write_indicators_csv(q, dir / "indicators.csv");
  for (std::size_t i = 0; i < kIndicatorNames.size(); ++i)
    out << kIndicatorNames[i] << ": " << format_number(q.error_percent[i]) << "%\n";
  return 0;
}

int cmd_mismatch(const Options& o, std::ostream& out) {
  const auto c = resolve(o);
  const auto dir = prepare_out(o, c);
  const auto data = load_split(c);
  const auto results =
      mismatch_experiment(c.train, data, c.mismatch.scenarios, sweep_options(c, dir), c.mismatch.evaluate_on);
  write_mismatch_csv(results, dir / "mismatch.csv");
  out << "wrote " << (dir / "mismatch.csv").string() << '\n';
  return 0;
}

int cmd_oracle(const Options& o, std::ostream& out) {
  require(o.specs >= 1, ErrorKind::Usage, "--specs must be >= 1");
  const auto c = resolve(o);
  const auto dir = prepare_out(o, c);
  std::ofstream csv(dir / "oracle.csv", std::ios::binary);
  require(static_cast<bool>(csv), ErrorKind::Io, "cannot write " + (dir / "oracle.csv").string());
  csv << "spec,directed_information,di_literal_diff,slack_i,gap_ii,slack_iii,xent_slack,gibbs_slack,bayes_xent_slack\n";
  double min_i = INFINITY, min_iii = INFINITY, max_gap = 0, max_diff = 0, min_x = INFINITY, min_g = INFINITY,
         max_bayes = 0;
  int xent_violations = 0;
  for (int i = 0; i < o.specs; ++i) {
    Rng rng(mix_seed(c.train.seed, static_cast<std::uint64_t>(i)));
    const auto spec = random_spec(3, 2, 2, 2, rng);
    const auto chain = verify_bound_chain(spec);
    const auto xb = verify_xent_bound(spec);
    const auto bayes = verify_xent_bound(with_bayes_attacker(spec));
    const double diff = std::abs(chain.directed_information - chain.directed_information_literal);
    csv << i << ',' << format_number(chain.directed_information) << ',' << format_number(diff) << ','
        << format_number(chain.slack_i) << ',' << format_number(chain.gap_ii) << ',' << format_number(chain.slack_iii)
        << ',' << format_number(xb.slack) << ',' << format_number(xb.gibbs_slack) << ','
        << format_number(bayes.slack) << '\n';
    min_i = std::min(min_i, chain.slack_i);
    min_iii = std::min(min_iii, chain.slack_iii);
    max_gap = std::max(max_gap, chain.gap_ii);
    max_diff = std::max(max_diff, diff);
    min_x = std::min(min_x, xb.slack);
    min_g = std::min(min_g, xb.gibbs_slack);
    max_bayes = std::max(max_bayes, std::abs(bayes.slack));
    if (xb.slack < -1e-9) ++xent_violations;
  }
  out << "specs " << o.specs << "\n"
      << "min slack_i " << format_number(min_i) << "\n"
      << "max gap_ii " << format_number(max_gap) << "\n"
      << "min slack_iii " << format_number(min_iii) << "\n"
      << "max |DI - DI_literal| " << format_number(max_diff) << "\n"
      << "min xent slack " << format_number(min_x) << " (" << xent_violations << " below -1e-9)\n"
      << "min gibbs slack " << format_number(min_g) << "\n"
      << "max |bayes xent slack| " << format_number(max_bayes) << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adversarial privacy releases for smart-meter time series"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "run configuration (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--seed", o.seed, "overrides train.seed");
  };
  struct Entry {
    CLI::App* app;
    int (*run)(const Options&, std::ostream&);
  };
  std::vector<Entry> entries;
  auto add = [&](const char* name, const char* help, int (*run)(const Options&, std::ostream&)) {
    auto* sub = app.add_subcommand(name, help);
    common(sub);
    entries.push_back({sub, run});
    return sub;
  };

  add("gen-data", "write the configured dataset as CSV", cmd_gen_data);
  add("train", "train a releaser and its training attacker", cmd_train);
  add("attack", "train a fresh test attacker against a releaser", cmd_attack)
      ->add_option("--checkpoint", o.checkpoints, "releaser checkpoint")
      ->required();
  auto* ev = add("eval", "score a releaser on the test split", cmd_eval);
  ev->add_option("--checkpoint", o.checkpoints, "releaser checkpoint")->required();
  ev->add_option("--attacker", o.attacker, "test attacker checkpoint (trained when omitted)");
  add("sweep", "privacy-utility sweep over a lambda grid", cmd_sweep)
      ->add_option("--lambda-grid", o.lambda_grid, "comma-separated lambdas, must include 0");
  add("psd", "Welch PSD of release error signals", cmd_psd)
      ->add_option("--checkpoint", o.checkpoints, "releaser checkpoint(s)")
      ->required();
  add("indicators", "power-quality indicator errors of a release", cmd_indicators)
      ->add_option("--checkpoint", o.checkpoints, "releaser checkpoint")
      ->required();
  add("mismatch", "attacker/releaser data-mismatch experiment", cmd_mismatch)
      ->add_option("--lambda-grid", o.lambda_grid, "comma-separated lambdas, must include 0");
  add("oracle-verify", "check the information bounds on random finite processes", cmd_oracle)
      ->add_option("--specs", o.specs, "number of random processes");

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: usage: " << e.what() << '\n';
    return exit_code(ErrorKind::Usage);
  }

  try {
    for (const auto& e : entries)
      if (e.app->parsed()) return e.run(o, out);
  } catch (const Error& e) {
    err << "error: " << kind_name(e.kind()) << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace smpriv
