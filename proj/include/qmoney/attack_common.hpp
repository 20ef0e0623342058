#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qmoney/bank.hpp"
#include "qmoney/qcore.hpp"

namespace qmoney {

// Sampled: explicit rounds, one sampled verification each.
// Postselected: explicit rounds, exact pass-branch evolution, no sampling.
// FastForward: aggregate of all rounds sampled from the closed-form map.
enum class RunMode { Sampled, Postselected, FastForward };

std::string mode_name(RunMode m);
RunMode mode_from_name(const std::string& name);

enum class RunStatus { Completed, Caught, Reissued };

std::string status_name(RunStatus s);

// Outcome of identifying one money qubit; caught and identified exclude
// each other.
struct IdentifiedSymbol {
  RunStatus status = RunStatus::Completed;
  std::optional<WiesnerSymbol> symbol;
  std::optional<std::size_t> list_index;
  double pass_probability = 1.0;
  std::uint64_t verifications = 0;

  bool caught() const { return status == RunStatus::Caught; }
  bool identified() const { return status == RunStatus::Completed; }
};

// One verification round as seen by the attacker.
struct TranscriptRecord {
  std::uint64_t round = 0;
  std::string perturbation_gate;
  bool pass = true;
  std::optional<PureQubit> probe;
};

class Transcript {
 public:
  void add(TranscriptRecord r) { records_.push_back(std::move(r)); }
  const std::vector<TranscriptRecord>& records() const { return records_; }
  // JSON lines: {round, perturbation_gate, pass, probe_state?}
  std::string to_jsonl() const;

 private:
  std::vector<TranscriptRecord> records_;
};

// Split a product JointState into (probe, money). Global phase is put on
// the probe. Throws if the state is entangled beyond `tol`.
std::pair<PureQubit, PureQubit> factor_product(const JointState& joint, double tol = 1e-9);

// Projective measurement of a held qubit in {basis0, basis0⊥}; returns 0 for
// basis0. Sampled by the Born rule, or the more likely outcome without rng.
int measure_qubit(const PureQubit& s, const PureQubit& basis0, Rng* rng);

// P(outcome 1) of a computational-basis measurement.
double prob_one(const PureQubit& s);

}  // namespace qmoney
