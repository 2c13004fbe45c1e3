#include "smpriv/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "smpriv/errors.hpp"
#include "smpriv/rng.hpp"

namespace smpriv {

std::string_view label_mode_name(LabelMode m) {
  switch (m) {
    case LabelMode::Occupancy: return "occupancy";
    case LabelMode::House: return "house";
    case LabelMode::Acorn: return "acorn";
  }
  return "occupancy";
}

LabelMode parse_label_mode(std::string_view name) {
  if (name == "occupancy") return LabelMode::Occupancy;
  if (name == "house") return LabelMode::House;
  if (name == "acorn") return LabelMode::Acorn;
  fail(ErrorKind::Config, "data.synthetic.labels: unknown label mode '" + std::string(name) + "'");
}

std::vector<int> Dataset::houses() const {
  std::set<int> s;
  for (const auto& d : days) s.insert(d.house);
  return {s.begin(), s.end()};
}

void Dataset::validate() const {
  require(steps >= 1 && alphabet_size >= 1, ErrorKind::Usage, "dataset needs T >= 1 and a nonempty alphabet");
  for (const auto& d : days) {
    const std::string where = "(house " + std::to_string(d.house) + ", day " + std::to_string(d.day) + ")";
    require(static_cast<int>(d.x.size()) == steps && static_cast<int>(d.y.size()) == steps, ErrorKind::Usage,
            "sequence " + where + " does not have T = " + std::to_string(steps) + " steps");
    for (int x : d.x)
      require(x >= 0 && x < alphabet_size, ErrorKind::Usage, "label outside alphabet in " + where);
  }
}

void SyntheticConfig::validate() const {
  auto check = [](bool ok, const std::string& field, const std::string& rule) {
    require(ok, ErrorKind::Config, "data.synthetic." + field + ": " + rule);
  };
  check(steps >= 1, "steps", "must be >= 1");
  check(p_arrive >= 0.0 && p_arrive <= 1.0, "p_arrive", "must lie in [0, 1]");
  check(p_leave >= 0.0 && p_leave <= 1.0, "p_leave", "must lie in [0, 1]");
  check(base_load >= 0.0, "base_load", "must be >= 0");
  check(occupancy_boost >= 0.0, "occupancy_boost", "must be >= 0");
  for (const auto& h : harmonics) check(h.amplitude >= 0.0, "harmonics", "amplitudes must be >= 0");
  check(noise_std >= 0.0, "noise_std", "must be >= 0");
  check(houses >= 1, "houses", "must be >= 1");
  check(days_per_house >= 1, "days_per_house", "must be >= 1");
  check(jitter >= 0.0 && jitter < 1.0, "jitter", "must lie in [0, 1)");
}

Dataset generate(const SyntheticConfig& cfg) {
  cfg.validate();
  struct HouseProfile {
    double base, boost;
    std::vector<double> amplitudes;
  };
  std::vector<HouseProfile> profiles;
  for (int h = 1; h <= cfg.houses; ++h) {
    Rng rng(mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(h)));
    auto jit = [&] { return 1.0 + cfg.jitter * rng.uniform(-1.0, 1.0); };
    HouseProfile p{cfg.base_load * jit(), cfg.occupancy_boost * jit(), {}};
    for (const auto& hm : cfg.harmonics) p.amplitudes.push_back(hm.amplitude * jit());
    profiles.push_back(std::move(p));
  }

  // Acorn-like class: tercile of the house's base load.
  std::vector<int> acorn(cfg.houses, 0);
  {
    std::vector<int> order(cfg.houses);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return profiles[a].base < profiles[b].base; });
    for (int r = 0; r < cfg.houses; ++r) acorn[order[r]] = (3 * r) / cfg.houses;
  }

  Dataset out;
  out.steps = cfg.steps;
  switch (cfg.labels) {
    case LabelMode::Occupancy: out.alphabet_size = 2; break;
    case LabelMode::House: out.alphabet_size = cfg.houses; break;
    case LabelMode::Acorn: out.alphabet_size = std::min(3, cfg.houses); break;
  }

  const double rate = cfg.p_arrive + cfg.p_leave;
  const double pi_present = rate > 0.0 ? cfg.p_arrive / rate : 0.5;
  for (int h = 1; h <= cfg.houses; ++h) {
    const auto& prof = profiles[h - 1];
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(h)));
    int occupied = rng.uniform() < pi_present ? 1 : 0;
    bool first = true;
    for (int d = 0; d < cfg.days_per_house; ++d) {
      DaySequence day;
      day.house = h;
      day.day = d;
      day.x.resize(cfg.steps);
      day.y.resize(cfg.steps);
      for (int t = 0; t < cfg.steps; ++t) {
        if (!first) {
          const double u = rng.uniform();
          occupied = occupied ? (u < cfg.p_leave ? 0 : 1) : (u < cfg.p_arrive ? 1 : 0);
        }
        first = false;
        double y = prof.base + occupied * prof.boost;
        for (std::size_t k = 0; k < cfg.harmonics.size(); ++k) {
          const auto& hm = cfg.harmonics[k];
          y += prof.amplitudes[k] *
               std::sin(2.0 * std::numbers::pi * hm.cycles_per_day * t / cfg.steps + hm.phase);
        }
        y += cfg.noise_std * rng.normal();
        day.y[t] = std::max(0.0, y);
        switch (cfg.labels) {
          case LabelMode::Occupancy: day.x[t] = occupied; break;
          case LabelMode::House: day.x[t] = h - 1; break;
          case LabelMode::Acorn: day.x[t] = acorn[h - 1]; break;
        }
      }
      out.days.push_back(std::move(day));
    }
  }
  return out;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".meta.json");
  return p;
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  data.validate();
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorKind::Io, "cannot write " + path.string());
  os << "house_id,day_index,step,x,y\n";
  char buf[64];
  for (const auto& d : data.days)
    for (int t = 0; t < data.steps; ++t) {
      std::snprintf(buf, sizeof buf, "%.17g", d.y[t]);
      os << d.house << ',' << d.day << ',' << t << ',' << d.x[t] << ',' << buf << '\n';
    }
  nlohmann::json meta{{"T", data.steps}, {"alphabet_size", data.alphabet_size}, {"houses", data.houses()}};
  std::ofstream ms(sidecar_path(path), std::ios::binary);
  require(static_cast<bool>(ms), ErrorKind::Io, "cannot write " + sidecar_path(path).string());
  ms << meta.dump(2) << '\n';
}

namespace {

template <class T>
T parse_field(std::string_view s, std::size_t line, const char* name) {
  T v{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  require(ec == std::errc() && ptr == end, ErrorKind::Parse,
          "line " + std::to_string(line) + ": malformed " + name + " '" + std::string(s) + "'");
  return v;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorKind::Io, "cannot open " + path.string());

  int steps = -1;
  int alphabet = -1;
  if (const auto meta_path = sidecar_path(path); std::filesystem::exists(meta_path)) {
    std::ifstream ms(meta_path);
    try {
      const auto meta = nlohmann::json::parse(ms);
      steps = meta.at("T").get<int>();
      alphabet = meta.at("alphabet_size").get<int>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Parse, meta_path.string() + ": " + e.what());
    }
  }

  std::string line;
  require(static_cast<bool>(std::getline(is, line)), ErrorKind::Parse, path.string() + ": empty file, no dataset");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == "house_id,day_index,step,x,y", ErrorKind::Parse,
          path.string() + ": line 1: expected header 'house_id,day_index,step,x,y'");

  struct Row {
    int step, x;
    double y;
    std::size_t line;
  };
  std::map<std::pair<int, int>, std::vector<Row>> groups;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view sv(line);
    std::string_view f[5];
    for (int i = 0; i < 5; ++i) {
      const auto pos = sv.find(',');
      if (i < 4) {
        require(pos != std::string_view::npos, ErrorKind::Parse,
                "line " + std::to_string(lineno) + ": expected 5 comma-separated fields");
        f[i] = sv.substr(0, pos);
        sv.remove_prefix(pos + 1);
      } else {
        require(pos == std::string_view::npos, ErrorKind::Parse,
                "line " + std::to_string(lineno) + ": too many fields");
        f[i] = sv;
      }
    }
    const int house = parse_field<int>(f[0], lineno, "house_id");
    const int day = parse_field<int>(f[1], lineno, "day_index");
    Row r{parse_field<int>(f[2], lineno, "step"), parse_field<int>(f[3], lineno, "x"),
          parse_field<double>(f[4], lineno, "y"), lineno};
    require(r.step >= 0, ErrorKind::Parse, "line " + std::to_string(lineno) + ": negative step");
    require(r.x >= 0 && (alphabet < 0 || r.x < alphabet), ErrorKind::Parse,
            "line " + std::to_string(lineno) + ": unknown label " + std::to_string(r.x));
    require(std::isfinite(r.y), ErrorKind::Parse, "line " + std::to_string(lineno) + ": non-finite y");
    groups[{house, day}].push_back(r);
  }
  require(!groups.empty(), ErrorKind::Parse, path.string() + ": empty dataset");

  if (steps < 0)
    for (const auto& [key, rows] : groups) steps = std::max(steps, static_cast<int>(rows.size()));

  Dataset out;
  out.steps = steps;
  int max_label = 0;
  for (auto& [key, rows] : groups) {
    const std::string where = "(house " + std::to_string(key.first) + ", day " + std::to_string(key.second) + ")";
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.step < b.step; });
    require(static_cast<int>(rows.size()) == steps, ErrorKind::Parse,
            "incomplete day " + where + ": " + std::to_string(rows.size()) + " of " + std::to_string(steps) +
                " steps (first row at line " + std::to_string(rows.front().line) + ")");
    DaySequence d{key.first, key.second, {}, {}};
    for (int t = 0; t < steps; ++t) {
      require(rows[t].step == t, ErrorKind::Parse,
              "day " + where + ": step " + std::to_string(t) + " missing or duplicated (line " +
                  std::to_string(rows[t].line) + ")");
      d.x.push_back(rows[t].x);
      d.y.push_back(rows[t].y);
      max_label = std::max(max_label, rows[t].x);
    }
    out.days.push_back(std::move(d));
  }
  out.alphabet_size = alphabet > 0 ? alphabet : max_label + 1;
  return out;
}

DataSplit split(const Dataset& data, std::uint64_t seed) {
  require(!data.empty(), ErrorKind::Usage, "split: dataset is empty");
  const std::size_t n = data.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(idx);
  const auto pool = static_cast<std::size_t>(std::llround(0.85 * static_cast<double>(n)));
  const auto val = static_cast<std::size_t>(std::llround(0.10 * static_cast<double>(pool)));

  auto take = [&](std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> rows(idx.begin() + lo, idx.begin() + hi);
    std::sort(rows.begin(), rows.end());
    Dataset d;
    d.steps = data.steps;
    d.alphabet_size = data.alphabet_size;
    for (auto r : rows) d.days.push_back(data.days[r]);
    return d;
  };
  return {take(val, pool), take(0, val), take(pool, n)};
}

std::vector<Dataset> partition_by_house(const Dataset& data, const std::vector<std::vector<int>>& house_sets) {
  const auto known = data.houses();
  std::vector<Dataset> out;
  for (const auto& set : house_sets) {
    for (int h : set)
      require(std::binary_search(known.begin(), known.end(), h), ErrorKind::Usage,
              "partition_by_house: unknown house id " + std::to_string(h));
    Dataset d;
    d.steps = data.steps;
    d.alphabet_size = data.alphabet_size;
    for (const auto& day : data.days)
      if (std::find(set.begin(), set.end(), day.house) != set.end()) d.days.push_back(day);
    out.push_back(std::move(d));
  }
  return out;
}

Dataset concat(const Dataset& a, const Dataset& b) {
  require(a.steps == b.steps && a.alphabet_size == b.alphabet_size, ErrorKind::Usage,
          "concat: datasets differ in T or alphabet");
  Dataset d = a;
  d.days.insert(d.days.end(), b.days.begin(), b.days.end());
  return d;
}

SeqBatch consumption_batch(const Dataset& data, std::span<const std::size_t> rows) {
  SeqBatch m(static_cast<Eigen::Index>(rows.size()), data.steps);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int t = 0; t < data.steps; ++t) m(static_cast<Eigen::Index>(i), t) = data.days[rows[i]].y[t];
  return m;
}

LabelBatch label_batch(const Dataset& data, std::span<const std::size_t> rows) {
  LabelBatch m(static_cast<Eigen::Index>(rows.size()), data.steps);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int t = 0; t < data.steps; ++t) m(static_cast<Eigen::Index>(i), t) = data.days[rows[i]].x[t];
  return m;
}

namespace {
std::vector<std::size_t> all_rows(const Dataset& d) {
  std::vector<std::size_t> r(d.size());
  std::iota(r.begin(), r.end(), 0);
  return r;
}
}  // namespace

SeqBatch consumption_batch(const Dataset& data) { return consumption_batch(data, all_rows(data)); }
LabelBatch label_batch(const Dataset& data) { return label_batch(data, all_rows(data)); }

}  // namespace smpriv
