// Acceptance checks, one line per criterion:
//   criterion <n>: PASS|FAIL <summary>
// Usage: acceptance [n ...]   (no arguments runs all of them)
// Exit status is 0 only when every selected criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "cli_support.hpp"
#include "smpriv/analytics.hpp"
#include "smpriv/config.hpp"
#include "smpriv/experiments.hpp"
#include "smpriv/info_oracle.hpp"
#include "smpriv/lstm.hpp"
#include "support.hpp"

using namespace smpriv;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string summary;
};

std::string num(double v) { return format_number(v); }

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Default synthetic task with the small architectures used for the end-to-end checks.
RunConfig small_run() {
  RunConfig c;
  c.train.releaser_hidden = {32, 32};
  c.train.attacker_hidden = {32, 32};
  c.train.test_attacker_hidden = {32, 32, 32};
  c.train.iterations = 600;
  c.train.optimizer.learning_rate = 0.01;
  c.lambda_grid = {0.0, 0.05, 0.1, 0.15, 0.25, 0.5};
  return c;
}

DataSplit small_split(const RunConfig& c) { return split(load_dataset(c.data), c.data.split_seed); }

SweepOptions sweep_opts(const RunConfig& c) {
  SweepOptions o;
  o.lambdas = c.lambda_grid;
  o.peaks = c.eval.peaks;
  o.verbose = true;
  return o;
}

Outcome gradients() {
  Timer timer;
  const HeadActivation heads[] = {HeadActivation::Linear, HeadActivation::Softmax, HeadActivation::Sigmoid};
  double worst = 0;
  std::size_t params = 0;
  int stacks = 0;
  for (std::uint64_t seed = 1; seed <= 24; ++seed) {
    Rng rng(mix_seed(seed, 99));
    const int layers = 1 + static_cast<int>(rng.below(2));
    std::vector<int> hidden;
    for (int l = 0; l < layers; ++l) hidden.push_back(1 + static_cast<int>(rng.below(8)));
    const int steps = 1 + static_cast<int>(rng.below(5));
    const int features = 1 + static_cast<int>(rng.below(3));
    const auto head = heads[seed % 3];
    const int out = head == HeadActivation::Softmax ? 2 + static_cast<int>(rng.below(2)) : 1 + static_cast<int>(rng.below(2));
    const auto p = init_params({features, hidden, out, head}, seed);
    const int batch = 1 + static_cast<int>(rng.below(3));
    const auto in = testing::random_sequence(rng, features, batch, steps);
    const auto w = testing::random_sequence(rng, out, batch, steps);
    const auto r = testing::check_parameter_gradients(p, in, w);
    worst = std::max(worst, r.max_rel);
    params += r.checked;
    ++stacks;
  }
  const double t = timer.seconds();
  return {worst < 1e-4 && t < 60.0, std::to_string(stacks) + " stacks, " + std::to_string(params) +
                                        " parameters, max relative error " + num(worst) + ", " + num(t) + " s"};
}

Outcome bound_chain() {
  Timer timer;
  double min_i = INFINITY, min_iii = INFINITY, max_gap = 0, max_diff = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    Rng rng(mix_seed(1, i));
    const auto r = verify_bound_chain(random_spec(3, 2, 2, 2, rng));
    min_i = std::min(min_i, r.slack_i);
    min_iii = std::min(min_iii, r.slack_iii);
    max_gap = std::max(max_gap, r.gap_ii);
    max_diff = std::max(max_diff, std::abs(r.directed_information - r.directed_information_literal));
  }
  const double t = timer.seconds();
  return {min_i >= -1e-9 && min_iii >= -1e-9 && max_diff <= 1e-10 && t < 60.0,
          "1000 specs, min slack (i) " + num(min_i) + ", min slack (iii) " + num(min_iii) + ", max gap (ii) " +
              num(max_gap) + ", max |DI - literal| " + num(max_diff) + ", " + num(t) + " s"};
}

Outcome xent_bound() {
  Timer timer;
  double min_slack = INFINITY, min_gibbs = INFINITY, max_bayes = 0;
  int violations = 0, worst = -1;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    Rng rng(mix_seed(1, i));
    const auto spec = random_spec(3, 2, 2, 2, rng);
    const auto r = verify_xent_bound(spec);
    if (r.slack < min_slack) {
      min_slack = r.slack;
      worst = static_cast<int>(i);
    }
    min_gibbs = std::min(min_gibbs, r.gibbs_slack);
    if (r.slack < -1e-9) ++violations;
    max_bayes = std::max(max_bayes, std::abs(verify_xent_bound(with_bayes_attacker(spec)).slack));
  }
  const double t = timer.seconds();
  std::cout << "  supplementary: min L_A - conditional entropy rate " << num(min_gibbs) << " ("
            << (min_gibbs >= -1e-9 ? "PASS" : "FAIL") << "), max |L_A - entropy rate| for the Bayes attacker "
            << num(max_bayes) << " (" << (max_bayes <= 1e-10 ? "PASS" : "FAIL") << ")\n";
  return {violations == 0 && max_bayes <= 1e-10 && t < 60.0,
          "1000 pairs, min L_A - entropy rate " + num(min_slack) + " at pair " + std::to_string(worst) + ", " +
              std::to_string(violations) + " below -1e-9, max equality gap " + num(max_bayes) + ", " + num(t) +
              " s"};
}

Outcome tradeoff() {
  Timer timer;
  const auto c = small_run();
  const auto pts = tradeoff_sweep(c.train, small_split(c), sweep_opts(c));
  std::vector<double> lam, acc;
  std::ostringstream pts_text;
  for (const auto& p : pts) {
    lam.push_back(p.lambda);
    acc.push_back(p.accuracy);
    pts_text << " (" << num(p.lambda) << ", " << num(p.accuracy) << ", " << num(p.ne2) << ")";
  }
  const double rho = spearman(lam, acc);
  const auto& first = pts.front();
  const auto& last = pts.back();
  const double t = timer.seconds();
  const bool ok = first.accuracy >= 0.70 && first.ne2 <= 0.15 && last.accuracy >= 0.45 && last.accuracy <= 0.58 &&
                  rho <= -0.8 && t <= 1800.0;
  std::cout << "  (lambda, accuracy, NE2):" << pts_text.str() << '\n';
  return {ok, "lambda=0 accuracy " + num(first.accuracy) + " NE2 " + num(first.ne2) + ", largest lambda accuracy " +
                  num(last.accuracy) + ", Spearman " + num(rho) + ", " + num(t) + " s"};
}

Outcome lp_comparison() {
  Timer timer;
  auto c = small_run();
  const auto data = small_split(c);
  const std::vector<double> lambdas{0.15, 0.25, 0.5, 1.0};
  double peaks[2] = {-1, -1}, chosen[2] = {NAN, NAN}, accs[2] = {NAN, NAN};
  const double orders[2] = {2.0, 4.0};
  for (int k = 0; k < 2; ++k) {
    c.train.order = orders[k];
    auto opts = sweep_opts(c);
    for (double l : lambdas) {
      const auto p = run_point(c.train, l, data, data, data.test, opts, "p" + num(orders[k]));
      if (std::abs(p.accuracy - 0.5) <= 0.03) {
        peaks[k] = p.peak_preservation;
        chosen[k] = l;
        accs[k] = p.accuracy;
        break;
      }
    }
  }
  const double t = timer.seconds();
  const bool found = peaks[0] >= 0 && peaks[1] >= 0;
  return {found && peaks[1] > peaks[0] && t <= 1800.0,
          found ? "l2 at lambda " + num(chosen[0]) + " (accuracy " + num(accs[0]) + ") keeps " + num(peaks[0]) +
                      " of peaks, l4 at lambda " + num(chosen[1]) + " (accuracy " + num(accs[1]) + ") keeps " +
                      num(peaks[1]) + ", " + num(t) + " s"
                : "no operating point within 0.03 of 0.5 for " + std::string(peaks[0] < 0 ? "l2 " : "") +
                      (peaks[1] < 0 ? "l4" : "")};
}

Outcome mismatch() {
  Timer timer;
  const auto c = small_run();
  std::vector<MismatchScenario> scenarios;
  for (const auto& s : default_mismatch_scenarios())
    if (s.name == "matched" || s.name == "disjoint") scenarios.push_back(s);
  const auto res = mismatch_experiment(c.train, small_split(c), scenarios, sweep_opts(c), c.mismatch.evaluate_on);
  const auto& matched = res[0].points;
  const auto& disjoint = res[1].points;
  bool ok = disjoint[0].accuracy < matched[0].accuracy;
  std::ostringstream detail;
  for (std::size_t i = 0; i < matched.size(); ++i) {
    ok = ok && disjoint[i].accuracy <= matched[i].accuracy + 0.02;
    detail << " (" << num(matched[i].lambda) << ", " << num(matched[i].accuracy) << ", " << num(disjoint[i].accuracy)
           << ")";
  }
  const double t = timer.seconds();
  std::cout << "  (lambda, matched, disjoint):" << detail.str() << '\n';
  return {ok && t <= 1800.0, "lambda=0 matched " + num(matched[0].accuracy) + " vs disjoint " +
                                 num(disjoint[0].accuracy) + ", " + num(t) + " s"};
}

Outcome welch() {
  Timer timer;
  const int n = 48;
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = 0.7 * std::cos(2.0 * std::numbers::pi * 7.0 * i / n + 1.1) + 0.2;
  WelchOptions o;
  o.segment_length = n;
  o.overlap = 0;
  o.window = Window::Rectangular;
  const auto p = welch_psd(std::vector<std::vector<double>>{x}, o);
  const auto ref = testing::direct_periodogram(x, o.sample_rate);
  const double peak_err = std::abs(p.density[7] - ref[7]) / ref[7];

  Rng rng(4);
  double parseval = 0;
  for (int len : {24, 31, 96}) {
    std::vector<double> s(len);
    for (double& v : s) v = rng.normal() + 0.5;
    o.segment_length = len;
    const auto q = welch_psd(std::vector<std::vector<double>>{s}, o);
    double total = 0;
    for (double d : q.density) total += d * o.sample_rate / len;
    double ms = 0;
    for (double v : s) ms += v * v / len;
    parseval = std::max(parseval, std::abs(total - ms) / ms);
  }
  const double t = timer.seconds();
  return {peak_err <= 1e-6 && parseval <= 1e-9 && t < 10.0,
          "peak bin relative error " + num(peak_err) + ", Parseval relative error " + num(parseval) + ", " + num(t) +
              " s"};
}

Outcome indicator_errors() {
  Timer timer;
  Rng rng(8);
  std::vector<double> y(24 * 150), twice(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = 0.3 + rng.uniform(0.0, 1.5);
    twice[i] = 2 * y[i];
  }
  const auto same = quality_indicators(y, y).error_percent;
  const auto scaled = quality_indicators(y, twice).error_percent;
  bool ok = std::abs(scaled[0] - 100.0) <= 1e-9;
  for (int i = 0; i < 5; ++i) ok = ok && same[i] == 0.0;
  for (int i = 1; i < 5; ++i) ok = ok && std::abs(scaled[i]) <= 1e-9;
  std::ostringstream s;
  s << "z=y errors (" << num(same[0]) << ", " << num(same[1]) << ", " << num(same[2]) << ", " << num(same[3]) << ", "
    << num(same[4]) << "), z=2y errors (" << num(scaled[0]) << ", " << num(scaled[1]) << ", " << num(scaled[2])
    << ", " << num(scaled[3]) << ", " << num(scaled[4]) << ")";
  const double t = timer.seconds();
  return {ok && t < 10.0, s.str() + ", " + num(t) + " s"};
}

Outcome determinism() {
  const auto root = testing::fresh_dir("smpriv_acceptance_determinism");
  testing::write_json(testing::tiny_run_config(), root / "config.json");
  struct Cmd {
    std::string name;
    std::vector<std::string> extra;
  };
  const auto first = root / "first";
  const auto ck = (first / "train" / "releaser.json").string();
  const auto ta = (first / "attack" / "test_attacker.json").string();
  const std::vector<Cmd> cmds{{"gen-data", {}},
                              {"train", {}},
                              {"attack", {"--checkpoint", ck}},
                              {"eval", {"--checkpoint", ck, "--attacker", ta}},
                              {"sweep", {}},
                              {"psd", {"--checkpoint", ck}},
                              {"indicators", {"--checkpoint", ck}},
                              {"mismatch", {}},
                              {"oracle-verify", {"--specs", "50"}}};
  int same = 0;
  std::string diverged;
  for (const auto& cmd : cmds) {
    auto run = [&](const fs::path& cfg, const fs::path& out) {
      std::vector<std::string> args{cmd.name, "--config", cfg.string(), "--out", out.string()};
      args.insert(args.end(), cmd.extra.begin(), cmd.extra.end());
      return testing::cli(args).code;
    };
    const auto a = first / cmd.name, b = root / "second" / cmd.name;
    if (run(root / "config.json", a) != 0 || run(a / "resolved_config.json", b) != 0) {
      diverged += " " + cmd.name + "(error)";
      continue;
    }
    const auto ta_files = testing::tree(a), tb_files = testing::tree(b);
    if (ta_files == tb_files && ta_files.size() > 1)
      ++same;
    else
      diverged += " " + cmd.name;
  }
  return {same == static_cast<int>(cmds.size()),
          std::to_string(same) + "/" + std::to_string(cmds.size()) + " commands bit-identical on rerun" +
              (diverged.empty() ? "" : "; differing:" + diverged)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{gradients, bound_chain,      xent_bound, tradeoff,   lp_comparison,
                                                       mismatch,  welch,            indicator_errors, determinism};
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int n = std::atoi(argv[i]);
    if (n < 1 || n > static_cast<int>(criteria.size())) {
      std::cerr << "usage: acceptance [1-" << criteria.size() << " ...]\n";
      return 2;
    }
    selected.push_back(n);
  }
  if (selected.empty())
    for (int n = 1; n <= static_cast<int>(criteria.size()); ++n) selected.push_back(n);

  bool all = true;
  for (int n : selected) {
    Outcome o;
    try {
      o = criteria[n - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << ' ' << o.summary << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
