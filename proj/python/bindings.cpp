#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "smpriv/analytics.hpp"
#include "smpriv/checkpoint.hpp"
#include "smpriv/commands.hpp"
#include "smpriv/config.hpp"
#include "smpriv/info_oracle.hpp"
#include "smpriv/objectives.hpp"
#include "smpriv/trainer.hpp"

namespace py = pybind11;
using namespace smpriv;

namespace {

// Config and checkpoints cross the boundary as JSON text; the Python side wraps them in dicts.
RunConfig config_from(const std::string& text) {
  auto c = run_config_from_json(text.empty() ? nlohmann::json::object() : nlohmann::json::parse(text));
  c.validate();
  return c;
}

py::dict dataset_dict(const Dataset& d) {
  std::vector<int> houses, days;
  for (const auto& s : d.days) {
    houses.push_back(s.house);
    days.push_back(s.day);
  }
  py::dict out;
  out["house"] = houses;
  out["day"] = days;
  out["x"] = LabelBatch(label_batch(d));
  out["y"] = SeqBatch(consumption_batch(d));
  return out;
}

py::dict history_dict(const RunHistory& h) {
  std::vector<double> att, rel, dist, ent;
  for (const auto& r : h.records) {
    att.push_back(r.attacker_loss);
    rel.push_back(r.releaser_loss);
    dist.push_back(r.distortion);
    ent.push_back(r.entropy_term);
  }
  py::dict out;
  out["attacker_loss"] = att;
  out["releaser_loss"] = rel;
  out["distortion"] = dist;
  out["entropy_term"] = ent;
  return out;
}

}  // namespace

PYBIND11_MODULE(_smpriv, m) {
  m.doc() = "Native core of smpriv";

  static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const std::string msg = std::string(kind_name(e.kind())) + ": " + e.what();
      switch (e.kind()) {
        case ErrorKind::Usage:
        case ErrorKind::Config:
        case ErrorKind::Parse:
          PyErr_SetString(PyExc_ValueError, msg.c_str());
          break;
        case ErrorKind::Io:
          PyErr_SetString(PyExc_OSError, msg.c_str());
          break;
        default:
          PyErr_SetString(base.ptr(), msg.c_str());
      }
    }
  });

  m.def("lp_distance", [](const std::vector<double>& z, const std::vector<double>& y, double p) {
    return lp_distance(z, y, p);
  }, py::arg("z"), py::arg("y"), py::arg("p") = 2.0);
  m.def("normalized_distortion", &normalized_distortion, py::arg("z"), py::arg("y"), py::arg("p") = 2.0);
  m.def("ne_p", &ne_p, py::arg("z"), py::arg("y"), py::arg("p") = 2.0);
  m.def("balanced_accuracy", [](const LabelBatch& pred, const LabelBatch& labels, int classes) {
    return balanced_accuracy(pred, labels, classes).value;
  }, py::arg("predictions"), py::arg("labels"), py::arg("classes"));
  m.def("spearman", [](const std::vector<double>& a, const std::vector<double>& b) { return spearman(a, b); });
  m.def("peak_preservation", &peak_preservation, py::arg("y"), py::arg("z"), py::arg("magnitude_tolerance") = 0.2,
        py::arg("location_tolerance") = 1);

  m.def("welch_psd",
        [](const std::vector<std::vector<double>>& signals, int segment_length, double overlap,
           const std::string& window, bool detrend, double sample_rate) {
          WelchOptions o;
          o.segment_length = segment_length;
          o.overlap = overlap;
          o.window = parse_window(window);
          o.detrend = detrend ? Detrend::Mean : Detrend::None;
          o.sample_rate = sample_rate;
          const auto p = welch_psd(signals, o);
          return py::make_tuple(p.frequencies, p.density);
        },
        py::arg("signals"), py::arg("segment_length") = 24, py::arg("overlap") = 0.5, py::arg("window") = "hann",
        py::arg("detrend") = false, py::arg("sample_rate") = 24.0);

  m.def("quality_indicators", [](const std::vector<double>& y, const std::vector<double>& z) {
    const auto q = quality_indicators(y, z);
    py::dict out;
    for (std::size_t i = 0; i < kIndicatorNames.size(); ++i)
      out[py::str(std::string(kIndicatorNames[i]))] =
          py::make_tuple(q.reference[i], q.release[i], q.error_percent[i]);
    return out;
  }, py::arg("y"), py::arg("z"));

  m.def("verify_bound_chain", [](std::uint64_t seed, int steps) {
    Rng rng(seed);
    const auto r = verify_bound_chain(random_spec(steps, 2, 2, 2, rng));
    py::dict out;
    out["directed_information"] = r.directed_information;
    out["directed_information_literal"] = r.directed_information_literal;
    out["slack_i"] = r.slack_i;
    out["gap_ii"] = r.gap_ii;
    out["slack_iii"] = r.slack_iii;
    return out;
  }, py::arg("seed"), py::arg("steps") = 3);
  m.def("verify_xent_bound", [](std::uint64_t seed, int steps, bool bayes) {
    Rng rng(seed);
    auto spec = random_spec(steps, 2, 2, 2, rng);
    if (bayes) spec = with_bayes_attacker(spec);
    const auto r = verify_xent_bound(spec);
    py::dict out;
    out["attacker_xent"] = r.attacker_xent;
    out["entropy_rate"] = r.entropy_rate;
    out["slack"] = r.slack;
    out["conditional_entropy_rate"] = r.conditional_entropy_rate;
    out["gibbs_slack"] = r.gibbs_slack;
    return out;
  }, py::arg("seed"), py::arg("steps") = 3, py::arg("bayes_attacker") = false);

  m.def("default_config", [] { return run_config_to_json(RunConfig{}).dump(); });
  m.def("resolve_config", [](const std::string& text) { return run_config_to_json(config_from(text)).dump(); });
  m.def("generate", [](const std::string& config) { return dataset_dict(load_dataset(config_from(config).data)); });

  m.def("train", [](const std::string& config) {
    const auto c = config_from(config);
    TrainResult r;
    {
      py::gil_scoped_release nogil;
      r = train(c.train, split(load_dataset(c.data), c.data.split_seed));
    }
    py::dict out;
    out["releaser"] = release_model_to_json(r.releaser).dump();
    out["attacker"] = stack_to_json(r.attacker).dump();
    out["history"] = history_dict(r.history);
    return out;
  }, py::arg("config"));

  m.def("release", [](const std::string& releaser, const SeqBatch& y, std::uint64_t seed) {
    const auto model = release_model_from_json(nlohmann::json::parse(releaser));
    require(!model.observe_labels, ErrorKind::Usage, "release: this releaser also reads labels");
    Rng rng(seed);
    return make_release(model, y, draw_noise(rng, model.noise_dim, static_cast<int>(y.cols()), static_cast<int>(y.rows())));
  }, py::arg("releaser"), py::arg("y"), py::arg("seed") = 0);

  m.def("sweep", [](const std::string& config) {
    const auto c = config_from(config);
    SweepOptions o;
    o.lambdas = c.lambda_grid;
    o.peaks = c.eval.peaks;
    std::vector<TradeoffPoint> pts;
    {
      py::gil_scoped_release nogil;
      pts = tradeoff_sweep(c.train, split(load_dataset(c.data), c.data.split_seed), o);
    }
    py::list out;
    for (const auto& p : pts) {
      py::dict d;
      d["lambda"] = p.lambda;
      d["ne2"] = p.ne2;
      d["ne4"] = p.ne4;
      d["accuracy"] = p.accuracy;
      d["peak_preservation"] = p.peak_preservation;
      d["seed"] = p.seed;
      out.append(d);
    }
    return out;
  }, py::arg("config"));

  m.def("run_cli", [](std::vector<std::string> args) {
    args.insert(args.begin(), "smpriv");
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release nogil;
      code = run_cli(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"));

}
