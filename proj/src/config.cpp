#include "smpriv/config.hpp"

#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "smpriv/checkpoint.hpp"
#include "smpriv/errors.hpp"

namespace smpriv {

namespace {

using nlohmann::json;

// Field reader for one JSON object; rejects keys it was never asked about.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    require(j.is_object(), ErrorKind::Config, path_ + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(ErrorKind::Config, field(key) + ": wrong type (" + j_.at(key).dump() + ")");
    }
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& at(const char* key) const { return j_.at(key); }
  std::string field(const char* key) const { return path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      require(seen_.count(it.key()) > 0, ErrorKind::Config, path_ + "." + it.key() + ": unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class Parse>
void get_enum(Section& s, const char* key, Parse parse) {
  std::string name;
  if (!s.has(key)) return;
  s.get(key, name);
  parse(name);
}

void read_data(const json& j, DataSection& d) {
  Section s(j, "data");
  if (s.has("csv") && !s.at("csv").is_null()) {
    std::string p;
    s.get("csv", p);
    d.csv = p;
  }
  s.get("split_seed", d.split_seed);
  if (s.has("synthetic")) {
    auto& c = d.synthetic;
    Section g(s.at("synthetic"), "data.synthetic");
    g.get("steps", c.steps);
    g.get("p_arrive", c.p_arrive);
    g.get("p_leave", c.p_leave);
    g.get("base_load", c.base_load);
    g.get("occupancy_boost", c.occupancy_boost);
    g.get("noise_std", c.noise_std);
    g.get("houses", c.houses);
    g.get("days_per_house", c.days_per_house);
    g.get("jitter", c.jitter);
    g.get("seed", c.seed);
    get_enum(g, "labels", [&](const std::string& n) { c.labels = parse_label_mode(n); });
    if (g.has("harmonics")) {
      const auto& arr = g.at("harmonics");
      require(arr.is_array(), ErrorKind::Config, "data.synthetic.harmonics: expected an array");
      c.harmonics.clear();
      for (std::size_t i = 0; i < arr.size(); ++i) {
        Harmonic h;
        Section hs(arr[i], "data.synthetic.harmonics[" + std::to_string(i) + "]");
        hs.get("amplitude", h.amplitude);
        hs.get("cycles_per_day", h.cycles_per_day);
        hs.get("phase", h.phase);
        hs.finish();
        c.harmonics.push_back(h);
      }
    }
    g.finish();
  }
  s.finish();
}

void read_model(const json& j, TrainConfig& t) {
  Section s(j, "model");
  s.get("releaser", t.releaser_hidden);
  s.get("attacker", t.attacker_hidden);
  s.get("test_attacker", t.test_attacker_hidden);
  s.finish();
}

void read_train(const json& j, RunConfig& c) {
  auto& t = c.train;
  Section s(j, "train");
  s.get("batch_size", t.batch_size);
  s.get("attacker_steps", t.attacker_steps);
  s.get("noise_dim", t.noise_dim);
  s.get("clip", t.clip);
  s.get("beta", t.beta);
  s.get("lambda", t.lambda);
  s.get("lambda_grid", c.lambda_grid);
  s.get("order", t.order);
  s.get("iterations", t.iterations);
  s.get("seed", t.seed);
  s.get("observe_labels", t.observe_labels);
  s.get("validate_every", t.validate_every);
  s.get("test_attacker_epochs", t.test_attacker_epochs);
  get_enum(s, "entropy_term", [&](const std::string& n) { t.entropy_term = parse_entropy_term(n); });
  get_enum(s, "checkpoint", [&](const std::string& n) { t.checkpoint = parse_checkpoint_policy(n); });
  if (s.has("optimizer")) {
    Section o(s.at("optimizer"), "train.optimizer");
    o.get("learning_rate", t.optimizer.learning_rate);
    o.get("decay", t.optimizer.decay);
    o.get("epsilon", t.optimizer.epsilon);
    o.finish();
  }
  s.finish();
}

void read_eval(const json& j, EvalSection& e) {
  Section s(j, "eval");
  s.get("psd_signals", e.psd_signals);
  s.get("indicators", e.indicators);
  if (s.has("welch")) {
    Section w(s.at("welch"), "eval.welch");
    w.get("segment_length", e.welch.segment_length);
    w.get("overlap", e.welch.overlap);
    w.get("sample_rate", e.welch.sample_rate);
    get_enum(w, "window", [&](const std::string& n) { e.welch.window = parse_window(n); });
    get_enum(w, "detrend", [&](const std::string& n) {
      if (n == "none") e.welch.detrend = Detrend::None;
      else if (n == "mean") e.welch.detrend = Detrend::Mean;
      else fail(ErrorKind::Config, "eval.welch.detrend: unknown value '" + n + "'");
    });
    w.finish();
  }
  if (s.has("peaks")) {
    Section p(s.at("peaks"), "eval.peaks");
    p.get("magnitude_tolerance", e.peaks.magnitude);
    p.get("location_tolerance", e.peaks.location);
    p.finish();
  }
  s.finish();
}

void read_mismatch(const json& j, MismatchSection& m) {
  Section s(j, "mismatch");
  get_enum(s, "evaluate_on", [&](const std::string& n) { m.evaluate_on = parse_mismatch_eval(n); });
  if (s.has("scenarios")) {
    const auto& arr = s.at("scenarios");
    require(arr.is_array(), ErrorKind::Config, "mismatch.scenarios: expected an array");
    m.scenarios.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      MismatchScenario sc;
      Section ss(arr[i], "mismatch.scenarios[" + std::to_string(i) + "]");
      ss.get("name", sc.name);
      ss.get("releaser_houses", sc.releaser_houses);
      ss.get("attacker_houses", sc.attacker_houses);
      ss.finish();
      m.scenarios.push_back(std::move(sc));
    }
  }
  s.finish();
}

}  // namespace

void RunConfig::validate() const {
  if (!data.csv) data.synthetic.validate();
  train.validate();
  sorted_grid(lambda_grid);
  require(eval.psd_signals >= 1, ErrorKind::Config, "eval.psd_signals: must be >= 1");
  require(eval.welch.segment_length >= 1, ErrorKind::Config, "eval.welch.segment_length: must be >= 1");
  require(eval.welch.overlap >= 0.0 && eval.welch.overlap < 1.0, ErrorKind::Config,
          "eval.welch.overlap: must be in [0, 1)");
  require(eval.welch.sample_rate > 0.0, ErrorKind::Config, "eval.welch.sample_rate: must be > 0");
  require(eval.peaks.magnitude > 0.0 && eval.peaks.location >= 0, ErrorKind::Config,
          "eval.peaks: tolerances must be positive");
  for (const auto& sc : mismatch.scenarios)
    require(!sc.name.empty() && !sc.releaser_houses.empty() && !sc.attacker_houses.empty(), ErrorKind::Config,
            "mismatch.scenarios: each scenario needs a name and nonempty house sets");
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  Section top(j, "config");
  if (top.has("data")) read_data(top.at("data"), c.data);
  if (top.has("model")) read_model(top.at("model"), c.train);
  if (top.has("train")) read_train(top.at("train"), c);
  if (top.has("eval")) read_eval(top.at("eval"), c.eval);
  if (top.has("mismatch")) read_mismatch(top.at("mismatch"), c.mismatch);
  top.finish();
  c.validate();
  return c;
}

json run_config_to_json(const RunConfig& c) {
  const auto& s = c.data.synthetic;
  json harmonics = json::array();
  for (const auto& h : s.harmonics)
    harmonics.push_back({{"amplitude", h.amplitude}, {"cycles_per_day", h.cycles_per_day}, {"phase", h.phase}});
  json data = {{"csv", c.data.csv ? json(c.data.csv->string()) : json(nullptr)},
               {"split_seed", c.data.split_seed},
               {"synthetic",
                {{"steps", s.steps},
                 {"p_arrive", s.p_arrive},
                 {"p_leave", s.p_leave},
                 {"base_load", s.base_load},
                 {"occupancy_boost", s.occupancy_boost},
                 {"harmonics", harmonics},
                 {"noise_std", s.noise_std},
                 {"houses", s.houses},
                 {"days_per_house", s.days_per_house},
                 {"jitter", s.jitter},
                 {"labels", label_mode_name(s.labels)},
                 {"seed", s.seed}}}};
  const auto& t = c.train;
  json model = {{"releaser", t.releaser_hidden},
                {"attacker", t.attacker_hidden},
                {"test_attacker", t.test_attacker_hidden}};
  json train = {{"batch_size", t.batch_size},
                {"attacker_steps", t.attacker_steps},
                {"noise_dim", t.noise_dim},
                {"clip", t.clip},
                {"beta", t.beta},
                {"lambda", t.lambda},
                {"lambda_grid", c.lambda_grid},
                {"order", t.order},
                {"iterations", t.iterations},
                {"seed", t.seed},
                {"optimizer",
                 {{"learning_rate", t.optimizer.learning_rate},
                  {"decay", t.optimizer.decay},
                  {"epsilon", t.optimizer.epsilon}}},
                {"entropy_term", entropy_term_name(t.entropy_term)},
                {"observe_labels", t.observe_labels},
                {"checkpoint", checkpoint_policy_name(t.checkpoint)},
                {"validate_every", t.validate_every},
                {"test_attacker_epochs", t.test_attacker_epochs}};
  const auto& e = c.eval;
  json eval = {{"welch",
                {{"segment_length", e.welch.segment_length},
                 {"overlap", e.welch.overlap},
                 {"window", window_name(e.welch.window)},
                 {"detrend", e.welch.detrend == Detrend::Mean ? "mean" : "none"},
                 {"sample_rate", e.welch.sample_rate}}},
               {"psd_signals", e.psd_signals},
               {"peaks", {{"magnitude_tolerance", e.peaks.magnitude}, {"location_tolerance", e.peaks.location}}},
               {"indicators", e.indicators}};
  json scenarios = json::array();
  for (const auto& sc : c.mismatch.scenarios)
    scenarios.push_back(
        {{"name", sc.name}, {"releaser_houses", sc.releaser_houses}, {"attacker_houses", sc.attacker_houses}});
  json mismatch = {{"scenarios", scenarios}, {"evaluate_on", mismatch_eval_name(c.mismatch.evaluate_on)}};
  return {{"data", data}, {"model", model}, {"train", train}, {"eval", eval}, {"mismatch", mismatch}};
}

RunConfig load_run_config(const std::filesystem::path& path) {
  try {
    return run_config_from_json(load_json(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Parse) fail(ErrorKind::Config, e.what());
    throw;
  }
}

Dataset load_dataset(const DataSection& d) {
  if (d.csv) return load_csv(*d.csv);
  return generate(d.synthetic);
}

std::vector<double> parse_lambda_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      fail(ErrorKind::Usage, "--lambda-grid: cannot parse '" + item + "'");
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    require(used == item.size(), ErrorKind::Usage, "--lambda-grid: cannot parse '" + item + "'");
    out.push_back(v);
  }
  require(!out.empty(), ErrorKind::Usage, "--lambda-grid: empty list");
  return out;
}

}  // namespace smpriv
