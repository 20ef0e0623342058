#pragma once

// Zeno-protected bomb testing and the adaptive attacks built on it.

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "qmoney/attack_common.hpp"
#include "qmoney/bank.hpp"
#include "qmoney/qcore.hpp"

namespace qmoney {

class Rng;

struct BtParams {
  unsigned long long rounds = 1;
  double delta = std::numbers::pi / 2.0;
  double epsilon = 0.0;

  // delta = pi / (2 * rounds)
  static BtParams from_rounds(unsigned long long rounds, double epsilon = 0.0);
  // Same, with rounds bumped to the next even number.
  static BtParams even_rounds(unsigned long long rounds, double epsilon = 0.0);
  void validate() const;
};

// Rounds for the 4-state attack: ceil(pi^2 n / (2 epsilon)), made even.
unsigned long long attack_rounds(std::size_t n, double epsilon);

// Postselected round map of the reflection attack on the probe:
// diag(1, q) R_delta with q = cos(2 theta).
class TransferMatrixT {
 public:
  TransferMatrixT(double theta, double delta);

  double theta() const { return theta_; }
  double q() const { return q_; }
  double delta() const { return delta_; }
  const Operator2& matrix() const { return m_; }
  Operator2 power(unsigned long long n) const { return qmoney::power(m_, n); }
  double max_singular_value() const;

 private:
  double theta_;
  double q_;
  double delta_;
  Operator2 m_;
};

struct BombResult {
  bool exploded = false;
  // Probability of the observed pass history (exact survival when postselected).
  double survival_probability = 1.0;
  int probe_outcome = 0;
  PureQubit final_probe;
};

BombResult ev_bomb_test(bool is_live, const BtParams& params, RunMode mode, Rng& rng);

struct ProbeRunResult {
  RunStatus status = RunStatus::Completed;
  int probe_outcome = 0;
  double pass_probability = 1.0;
  PureQubit final_probe;
  std::uint64_t verifications = 0;
};

// N rounds of (rotate probe by delta; controlled(probe_gate); verify), then a
// computational-basis measurement of the probe. `wallet` holds the note and
// is updated with whatever the bank hands back.
ProbeRunResult bt_probe_run(Oracle& oracle, std::vector<PureQubit>& wallet,
                            std::size_t qubit_index, const Operator2& probe_gate,
                            const BtParams& params, RunMode mode, Rng& rng,
                            Transcript* transcript = nullptr, const std::string& gate_name = "gate");

IdentifiedSymbol bt_identify_qubit(Oracle& oracle, std::vector<PureQubit>& wallet,
                                   std::size_t qubit_index, const BtParams& params, RunMode mode,
                                   Rng& rng, Transcript* transcript = nullptr);

struct KeyRecovery {
  RunStatus status = RunStatus::Completed;
  std::vector<WiesnerSymbol> key;  // partial on abort
  unsigned long long rounds_per_run = 0;
  std::uint64_t verifications = 0;
  double pass_probability = 1.0;
};

KeyRecovery bt_recover_key_serial(Oracle& oracle, std::vector<PureQubit>& wallet, double epsilon,
                                  RunMode mode, Rng& rng, Transcript* transcript = nullptr);

// One probe per money qubit; the whole note is perturbed and submitted each
// round. 2N verifications in total. Sampled or postselected only.
KeyRecovery bt_recover_key_parallel(Oracle& oracle, std::vector<PureQubit>& wallet,
                                    double epsilon, RunMode mode, Rng& rng,
                                    Transcript* transcript = nullptr);

// 2|beta><beta| - I
Operator2 reflection_about(const PureQubit& beta);

// Rounds constant c in N = c / (epsilon theta_min^2) for a given fitted
// bound constant c_fit (see analytics::bound_0TN0_check).
double list_round_constant(double c_fit);

struct ListIdentification {
  RunStatus status = RunStatus::Completed;
  std::optional<std::size_t> index;
  std::uint64_t verifications = 0;
  std::size_t runs = 0;
  double pass_probability = 1.0;
};

// Certify or eliminate candidates in list order with controlled reflections.
// Each run uses epsilon / (r - 1) and theta_min over the remaining candidates.
ListIdentification bt_list_attack(Oracle& oracle, std::vector<PureQubit>& wallet,
                                  std::size_t qubit_index, const StateList& list, double epsilon,
                                  double round_constant, RunMode mode, Rng& rng,
                                  Transcript* transcript = nullptr);

}  // namespace qmoney
