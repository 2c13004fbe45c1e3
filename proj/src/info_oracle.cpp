#include "smpriv/info_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "smpriv/errors.hpp"

namespace smpriv {

namespace {

std::size_t ipow(int base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= static_cast<std::size_t>(base);
  return r;
}

void check_kernel(const std::vector<double>& table, std::size_t histories, int out, const std::string& what) {
  require(table.size() == histories * static_cast<std::size_t>(out), ErrorKind::Usage,
          what + ": table has " + std::to_string(table.size()) + " entries, expected " +
              std::to_string(histories * out));
  for (std::size_t h = 0; h < histories; ++h) {
    double s = 0.0;
    for (int o = 0; o < out; ++o) {
      const double v = table[h * out + o];
      require(v >= 0.0 && std::isfinite(v), ErrorKind::Usage, what + ": negative or non-finite entry");
      s += v;
    }
    require(std::abs(s - 1.0) <= 1e-12, ErrorKind::Usage,
            what + ": row " + std::to_string(h) + " sums to " + std::to_string(s) + ", not 1");
  }
}

std::vector<double> random_simplex_rows(std::size_t rows, int cols, Rng& rng) {
  std::vector<double> t(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (int c = 0; c < cols; ++c) {
      double u = 0.0;
      while (u <= 0.0) u = rng.uniform();
      t[r * cols + c] = -std::log(u);
      s += t[r * cols + c];
    }
    for (int c = 0; c < cols; ++c) t[r * cols + c] /= s;
    // Exact renormalization so rows pass the 1e-12 check without drift.
    double s2 = 0.0;
    for (int c = 0; c + 1 < cols; ++c) s2 += t[r * cols + c];
    t[r * cols + cols - 1] = std::max(0.0, 1.0 - s2);
  }
  return t;
}

std::vector<int> range_vars(int first, int count) {
  std::vector<int> v(count);
  std::iota(v.begin(), v.end(), first);
  return v;
}

std::vector<int> join(std::vector<int> a, const std::vector<int>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

void JointProcessSpec::validate() const {
  require(steps >= 1 && steps <= 4, ErrorKind::Usage, "joint spec: T must lie in [1, 4]");
  for (int a : {x_alphabet, z_alphabet, xhat_alphabet})
    require(a >= 1 && a <= 4, ErrorKind::Usage, "joint spec: alphabet sizes must lie in [1, 4]");
  check_kernel(source, 1, static_cast<int>(ipow(x_alphabet, steps)), "joint spec source p(x^T)");
  require(static_cast<int>(release.size()) == steps && static_cast<int>(attacker.size()) == steps,
          ErrorKind::Usage, "joint spec: need one release and one attacker kernel per step");
  for (int t = 0; t < steps; ++t) {
    check_kernel(release[t], ipow(x_alphabet, t + 1), z_alphabet, "release kernel " + std::to_string(t + 1));
    check_kernel(attacker[t], ipow(z_alphabet, t + 1), xhat_alphabet, "attacker kernel " + std::to_string(t + 1));
  }
}

JointProcessSpec random_spec(int steps, int x_alphabet, int z_alphabet, int xhat_alphabet, Rng& rng) {
  JointProcessSpec s{steps, x_alphabet, z_alphabet, xhat_alphabet, {}, {}, {}};
  s.source = random_simplex_rows(1, static_cast<int>(ipow(x_alphabet, steps)), rng);
  for (int t = 0; t < steps; ++t) {
    s.release.push_back(random_simplex_rows(ipow(x_alphabet, t + 1), z_alphabet, rng));
    s.attacker.push_back(random_simplex_rows(ipow(z_alphabet, t + 1), xhat_alphabet, rng));
  }
  s.validate();
  return s;
}

JointProcessSpec with_bayes_attacker(const JointProcessSpec& spec) {
  require(spec.xhat_alphabet == spec.x_alphabet, ErrorKind::Usage,
          "with_bayes_attacker: Xhat and X alphabets must match");
  JointProcessSpec out = spec;
  const JointPmf joint(spec);
  const int nx = spec.x_alphabet;
  for (int t = 0; t < spec.steps; ++t) {
    std::vector<int> vars = range_vars(joint.z_var(0), t + 1);
    vars.push_back(joint.x_var(t));
    const auto m = joint.marginal(vars);  // index: z^t * nx + x_t
    const std::size_t histories = ipow(spec.z_alphabet, t + 1);
    auto& k = out.attacker[t];
    for (std::size_t h = 0; h < histories; ++h) {
      double s = 0.0;
      for (int x = 0; x < nx; ++x) s += m[h * nx + x];
      for (int x = 0; x < nx; ++x) k[h * nx + x] = s > 0.0 ? m[h * nx + x] / s : 1.0 / nx;
    }
  }
  return out;
}

JointPmf::JointPmf(const JointProcessSpec& spec) : steps_(spec.steps) {
  spec.validate();
  const int T = spec.steps;
  const int nx = spec.x_alphabet, nz = spec.z_alphabet, nxh = spec.xhat_alphabet;
  for (int i = 0; i < T; ++i) radix_.push_back(nx);
  for (int i = 0; i < T; ++i) radix_.push_back(nz);
  for (int i = 0; i < T; ++i) radix_.push_back(nxh);

  const std::size_t NX = ipow(nx, T), NZ = ipow(nz, T), NXH = ipow(nxh, T);
  table_.assign(NX * NZ * NXH, 0.0);

  std::vector<std::size_t> px(T), pz(T);  // history prefixes per step
  for (std::size_t hx = 0; hx < NX; ++hx) {
    if (spec.source[hx] == 0.0) continue;
    for (int t = 0; t < T; ++t) px[t] = hx / ipow(nx, T - 1 - t);
    for (std::size_t hz = 0; hz < NZ; ++hz) {
      double m = spec.source[hx];
      for (int t = 0; t < T; ++t) {
        pz[t] = hz / ipow(nz, T - 1 - t);
        m *= spec.release[t][px[t] * nz + pz[t] % nz];
      }
      if (m == 0.0) continue;
      for (std::size_t hxh = 0; hxh < NXH; ++hxh) {
        double q = m;
        for (int t = 0; t < T; ++t) q *= spec.attacker[t][pz[t] * nxh + (hxh / ipow(nxh, T - 1 - t)) % nxh];
        table_[(hx * NZ + hz) * NXH + hxh] = q;
      }
    }
  }
}

double JointPmf::total_mass() const {
  double s = 0.0;
  for (double v : table_) s += v;
  return s;
}

std::vector<double> JointPmf::marginal(const std::vector<int>& vars) const {
  const int nvars = static_cast<int>(radix_.size());
  std::vector<std::size_t> stride(nvars);
  std::size_t acc = 1;
  for (int v = nvars - 1; v >= 0; --v) {
    stride[v] = acc;
    acc *= static_cast<std::size_t>(radix_[v]);
  }
  std::size_t size = 1;
  for (int v : vars) {
    require(v >= 0 && v < nvars, ErrorKind::Usage, "marginal: variable id out of range");
    size *= static_cast<std::size_t>(radix_[v]);
  }
  std::vector<double> m(size, 0.0);
  for (std::size_t i = 0; i < table_.size(); ++i) {
    if (table_[i] == 0.0) continue;
    std::size_t k = 0;
    for (int v : vars) k = k * radix_[v] + (i / stride[v]) % radix_[v];
    m[k] += table_[i];
  }
  return m;
}

double JointPmf::entropy(const std::vector<int>& vars) const {
  if (vars.empty()) return 0.0;
  double h = 0.0;
  for (double p : marginal(vars))
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

double JointPmf::conditional_entropy(const std::vector<int>& a, const std::vector<int>& given) const {
  return entropy(join(a, given)) - entropy(given);
}

std::vector<double> directed_information_terms(const JointPmf& joint) {
  std::vector<double> terms;
  const int T = joint.steps();
  for (int t = 0; t < T; ++t) {
    const auto xs = range_vars(joint.x_var(0), t + 1);
    const auto past = range_vars(joint.xhat_var(0), t);
    const auto now = std::vector<int>{joint.xhat_var(t)};
    // I(A;B|C) = H(A,C) + H(B,C) - H(A,B,C) - H(C)
    terms.push_back(joint.entropy(join(xs, past)) + joint.entropy(join(now, past)) -
                    joint.entropy(join(join(xs, now), past)) - joint.entropy(past));
  }
  return terms;
}

double directed_information(const JointPmf& joint) {
  const int T = joint.steps();
  double causal = 0.0;
  for (int t = 0; t < T; ++t)
    causal += joint.conditional_entropy({joint.xhat_var(t)},
                                        join(range_vars(joint.xhat_var(0), t), range_vars(joint.x_var(0), t + 1)));
  return joint.entropy(range_vars(joint.xhat_var(0), T)) - causal;
}

double conditional_mutual_information_literal(const JointPmf& joint, const std::vector<int>& a,
                                              const std::vector<int>& b, const std::vector<int>& c) {
  using Key = std::vector<int>;
  std::map<std::tuple<Key, Key, Key>, double> pabc;
  std::map<std::pair<Key, Key>, double> pac, pbc;
  std::map<Key, double> pc;

  const auto& radix = joint.radix();
  const int nvars = static_cast<int>(radix.size());
  const auto& table = joint.table();
  std::vector<int> digits(nvars);
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double p = table[i];
    if (p == 0.0) continue;
    std::size_t rem = i;
    for (int v = nvars - 1; v >= 0; --v) {
      digits[v] = static_cast<int>(rem % radix[v]);
      rem /= radix[v];
    }
    Key ka, kb, kc;
    for (int v : a) ka.push_back(digits[v]);
    for (int v : b) kb.push_back(digits[v]);
    for (int v : c) kc.push_back(digits[v]);
    pabc[{ka, kb, kc}] += p;
    pac[{ka, kc}] += p;
    pbc[{kb, kc}] += p;
    pc[kc] += p;
  }

  double mi = 0.0;
  for (const auto& [key, p] : pabc) {
    const auto& [ka, kb, kc] = key;
    const double c_mass = pc.at(kc);
    const double p_ab_given_c = p / c_mass;
    const double p_a_given_c = pac.at({ka, kc}) / c_mass;
    const double p_b_given_c = pbc.at({kb, kc}) / c_mass;
    mi += p * std::log(p_ab_given_c / (p_a_given_c * p_b_given_c));
  }
  return mi;
}

double directed_information_literal(const JointPmf& joint) {
  double di = 0.0;
  for (int t = 0; t < joint.steps(); ++t)
    di += conditional_mutual_information_literal(joint, range_vars(joint.x_var(0), t + 1), {joint.xhat_var(t)},
                                                 range_vars(joint.xhat_var(0), t));
  return di;
}

CausalEntropy causally_conditional_entropy(const JointPmf& joint) {
  CausalEntropy h{0.0, 0.0};
  for (int t = 0; t < joint.steps(); ++t) {
    const auto zs = range_vars(joint.z_var(0), t + 1);
    h.general += joint.conditional_entropy({joint.xhat_var(t)}, join(range_vars(joint.xhat_var(0), t), zs));
    h.simplified += joint.conditional_entropy({joint.xhat_var(t)}, zs);
  }
  return h;
}

BoundChainReport verify_bound_chain(const JointProcessSpec& spec) {
  require(spec.xhat_alphabet == spec.x_alphabet, ErrorKind::Usage,
          "verify_bound_chain: the log|X| ceiling needs |Xhat| = |X|");
  const JointPmf joint(spec);
  const int T = spec.steps;
  BoundChainReport r;
  r.directed_information = directed_information(joint);
  r.directed_information_literal = directed_information_literal(joint);
  double sum_hz = 0.0;
  for (int t = 0; t < T; ++t) {
    const auto past = range_vars(joint.xhat_var(0), t);
    const auto xs = range_vars(joint.x_var(0), t + 1);
    const auto zs = range_vars(joint.z_var(0), t + 1);
    const double h_past = joint.conditional_entropy({joint.xhat_var(t)}, past);
    const double h_all = joint.conditional_entropy({joint.xhat_var(t)}, join(join(past, xs), zs));
    const double h_z = joint.conditional_entropy({joint.xhat_var(t)}, zs);
    r.step_i += h_past - h_all;
    r.step_ii += h_past - h_z;
    sum_hz += h_z;
  }
  r.step_iii = T * std::log(static_cast<double>(spec.x_alphabet)) - sum_hz;
  r.slack_i = r.step_i - r.directed_information;
  r.gap_ii = std::abs(r.step_i - r.step_ii);
  r.slack_iii = r.step_iii - r.step_ii;
  return r;
}

XentBoundReport verify_xent_bound(const JointProcessSpec& spec) {
  require(spec.xhat_alphabet == spec.x_alphabet, ErrorKind::Usage,
          "verify_xent_bound: attacker must output over the alphabet of X");
  const JointPmf joint(spec);
  const int T = spec.steps;
  XentBoundReport r;
  double xent = 0.0;
  double cond = 0.0;
  for (int t = 0; t < T; ++t) {
    auto vars = range_vars(joint.z_var(0), t + 1);
    vars.push_back(joint.x_var(t));
    const auto m = joint.marginal(vars);  // z^t * nx + x_t
    for (std::size_t k = 0; k < m.size(); ++k) {
      if (m[k] == 0.0) continue;
      const double q = spec.attacker[t][k];  // same (z^t, x) layout
      if (q == 0.0) {
        r.vacuous = true;
        continue;
      }
      xent -= m[k] * std::log(q);
    }
    cond += joint.conditional_entropy({joint.x_var(t)}, range_vars(joint.z_var(0), t + 1));
  }
  const double ce = causally_conditional_entropy(joint).simplified;
  r.attacker_xent = r.vacuous ? INFINITY : xent / T;
  r.entropy_rate = ce / T;
  r.slack = r.attacker_xent - r.entropy_rate;
  r.conditional_entropy_rate = cond / T;
  r.gibbs_slack = r.attacker_xent - r.conditional_entropy_rate;
  return r;
}

}  // namespace smpriv
