#pragma once

#include <cstdint>
#include <numbers>
#include <vector>

#include "smpriv/rng.hpp"

namespace smpriv {

// Finite-alphabet process (X^T, Z^T, Xhat^T) with the causal factorization
//   p(x^T) * prod_t p(z_t | x^t) * q(xhat_t | z^t).
// Histories are mixed-radix integers with the earliest symbol most significant,
// so a kernel table for step t is indexed by history * out_alphabet + out.
struct JointProcessSpec {
  int steps = 1;
  int x_alphabet = 2;
  int z_alphabet = 2;
  int xhat_alphabet = 2;
  std::vector<double> source;                 // p(x^T), x_alphabet^T entries
  std::vector<std::vector<double>> release;   // [t]: x_alphabet^(t+1) * z_alphabet
  std::vector<std::vector<double>> attacker;  // [t]: z_alphabet^(t+1) * xhat_alphabet

  // Caps (alphabets <= 4, T <= 4), table sizes, and normalization within 1e-12.
  void validate() const;
};

// Draws every table from a flat Dirichlet (normalized exponentials).
JointProcessSpec random_spec(int steps, int x_alphabet, int z_alphabet, int xhat_alphabet, Rng& rng);

// Replaces the attacker kernels with the exact posterior p(x_t | z^t).
// Requires xhat_alphabet == x_alphabet.
JointProcessSpec with_bayes_attacker(const JointProcessSpec& spec);

// Full table over (X_1..X_T, Z_1..Z_T, Xhat_1..Xhat_T), X_1 most significant.
class JointPmf {
 public:
  explicit JointPmf(const JointProcessSpec& spec);

  int steps() const { return steps_; }
  const std::vector<int>& radix() const { return radix_; }
  const std::vector<double>& table() const { return table_; }
  double total_mass() const;

  // Variable ids into the 3T-slot layout.
  int x_var(int t) const { return t; }
  int z_var(int t) const { return steps_ + t; }
  int xhat_var(int t) const { return 2 * steps_ + t; }

  // Joint entropy (nats) of the given variable subset.
  double entropy(const std::vector<int>& vars) const;
  // H(A | B) = H(A, B) - H(B).
  double conditional_entropy(const std::vector<int>& a, const std::vector<int>& given) const;

  // Marginal over `vars`, indexed mixed-radix in the order given.
  std::vector<double> marginal(const std::vector<int>& vars) const;

 private:
  int steps_;
  std::vector<int> radix_;
  std::vector<double> table_;
};

// I(X^t; Xhat_t | Xhat^{t-1}) for t = 1..T, each via entropy differences.
std::vector<double> directed_information_terms(const JointPmf& joint);
// H(Xhat^T) - sum_t H(Xhat_t | Xhat^{t-1}, X^t).
double directed_information(const JointPmf& joint);

// I(A;B|C) = sum p(a,b,c) log(p(a,b|c) / (p(a|c) p(b|c))), summed literally.
double conditional_mutual_information_literal(const JointPmf& joint, const std::vector<int>& a,
                                              const std::vector<int>& b, const std::vector<int>& c);
double directed_information_literal(const JointPmf& joint);

struct CausalEntropy {
  double general;     // sum_t H(Xhat_t | Xhat^{t-1}, Z^t)
  double simplified;  // sum_t H(Xhat_t | Z^t)
};
CausalEntropy causally_conditional_entropy(const JointPmf& joint);

// Directed-information surrogate bound chain, every quantity by enumeration.
struct BoundChainReport {
  double directed_information = 0;
  double directed_information_literal = 0;
  double step_i = 0;    // sum_t [H(Xhat_t|Xhat^{t-1}) - H(Xhat_t|Xhat^{t-1},X^t,Z^t)]
  double step_ii = 0;   // sum_t [H(Xhat_t|Xhat^{t-1}) - H(Xhat_t|Z^t)]
  double step_iii = 0;  // T log|X| - sum_t H(Xhat_t|Z^t)
  double slack_i = 0;   // step_i - DI
  double gap_ii = 0;    // |step_i - step_ii|, zero under the factorization
  double slack_iii = 0; // step_iii - step_ii
};
BoundChainReport verify_bound_chain(const JointProcessSpec& spec);

// Attacker cross-entropy against the causally conditional entropy rate of Xhat.
struct XentBoundReport {
  bool vacuous = false;               // q = 0 where p(x_t, z^t) > 0, L_A infinite
  double attacker_xent = 0;           // (1/T) sum_t E[-log q(X_t|Z^t)]
  double entropy_rate = 0;            // (1/T) H(Xhat^T || Z^T)
  double slack = 0;                   // attacker_xent - entropy_rate
  double conditional_entropy_rate = 0;  // (1/T) sum_t H(X_t|Z^t)
  double gibbs_slack = 0;             // attacker_xent - conditional_entropy_rate
};
XentBoundReport verify_xent_bound(const JointProcessSpec& spec);

inline double nats_to_bits(double nats) { return nats / std::numbers::ln2; }

}  // namespace smpriv
