#pragma once

// The issuing bank and the verification handle attacks are given.
//
// Attacks never see a Bank: they receive an Oracle bound to one serial, which
// exposes submission only. Key material stays behind the Bank interface.

#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "qmoney/qcore.hpp"

namespace qmoney {

class Rng;

using Serial = std::uint64_t;

enum class WiesnerSymbol { Zero, One, Plus, Minus };

PureQubit state_of(WiesnerSymbol s);
char symbol_char(WiesnerSymbol s);
WiesnerSymbol symbol_from_char(char c);

// A 4-state symbol, or an explicit state for list / arbitrary schemes.
using KeySymbol = std::variant<WiesnerSymbol, PureQubit>;

PureQubit key_state(const KeySymbol& k);

// arccos |<a|b>| in [0, pi/2]
double pair_angle(const PureQubit& a, const PureQubit& b);

// Finite candidate list with its minimum pairwise angle.
class StateList {
 public:
  explicit StateList(std::vector<PureQubit> states);

  const std::vector<PureQubit>& states() const { return states_; }
  std::size_t size() const { return states_.size(); }
  double theta_min() const { return theta_min_; }

  static StateList four_state();

 private:
  std::vector<PureQubit> states_;
  double theta_min_ = 0.0;
};

// Keys are either tabulated per serial or derived from a master secret.
struct FourState {};
struct Listed {
  StateList list;
};
// Arbitrary per-qubit product states; used for tomography targets.
struct Explicit {};
using Scheme = std::variant<FourState, Listed, Explicit>;

std::string scheme_name(const Scheme& s);

struct Banknote {
  Serial serial = 0;
  std::vector<KeySymbol> key;     // bank side
  std::vector<PureQubit> state;   // holder side

  std::size_t n() const { return key.size(); }
};

struct StrictDestroy {};
struct NoisyThreshold {
  double return_frac = 0.05;
  double reissue_frac = 0.10;
};
using VerificationPolicy = std::variant<StrictDestroy, NoisyThreshold>;

void validate(const VerificationPolicy& p);

// A held money qubit, possibly entangled with an attacker probe
// (probe ⊗ money).
using Entry = std::variant<PureQubit, JointState>;

struct Submission {
  Serial serial = 0;
  std::vector<Entry> entries;
};

enum class Outcome { Passed, Caught, Reissued };

struct HeldNote {
  Serial serial = 0;
  std::vector<PureQubit> state;
};

struct VerificationReport {
  Outcome outcome = Outcome::Caught;
  // Post-measurement entries handed back (Passed only).
  std::vector<Entry> returned;
  std::vector<bool> qubit_passed;
  // Exact all-pass probability (postselected verification only).
  std::optional<double> pass_probability;
  // Replacement note (Reissued only).
  std::optional<HeldNote> reissued;
};

// Result of submitting the same single-qubit round `rounds` times in a row.
struct RepeatedOutcome {
  bool caught = false;
  double pass_probability = 1.0;
  std::optional<PureQubit> probe;  // normalized, when not caught
  std::optional<PureQubit> money;  // post-verification money, when not caught
};

class Bank {
 public:
  explicit Bank(std::uint64_t seed, VerificationPolicy policy = StrictDestroy{});

  // Bennett et al. variant: keys come from derive_key(master_secret, serial, n).
  void use_master_secret(std::vector<std::uint8_t> master_secret);

  Banknote issue(std::size_t n, const Scheme& scheme);
  Banknote issue_explicit(std::vector<PureQubit> states);

  // Keyed hash of (master_secret, serial, qubit index) reduced mod 4.
  static std::vector<KeySymbol> derive_key(std::span<const std::uint8_t> master_secret,
                                           Serial serial, std::size_t n);

  VerificationReport verify_sampled(const Submission& sub, Rng& rng);
  // Strict policy only; consumes no randomness and never destroys the note.
  VerificationReport verify_postselected(const Submission& sub) const;

  // Fast-forward of `rounds` consecutive submissions in which only qubit
  // `qubit_index` is touched: each round applies `round_unitary` to
  // probe ⊗ money and then verifies. Other qubits are assumed untouched.
  // With rng == nullptr the outcome is postselected (no sampling, no
  // destruction). Counts `rounds` verifications.
  RepeatedOutcome verify_repeated(Serial serial, std::size_t qubit_index,
                                  const Operator4& round_unitary, const PureQubit& probe0,
                                  const PureQubit& money_held, unsigned long long rounds,
                                  Rng* rng);

  const VerificationPolicy& policy() const { return policy_; }
  bool knows(Serial serial) const;
  std::size_t size(Serial serial) const;
  std::uint64_t verification_count() const;

  // Test harness access. Attacks must not call this.
  std::optional<std::vector<KeySymbol>> key_of(Serial serial) const;

  nlohmann::json export_json() const;
  void import_json(const nlohmann::json& doc);

 private:
  struct Record {
    Scheme scheme;
    std::vector<KeySymbol> key;
  };

  std::vector<KeySymbol> draw_key(std::size_t n, const Scheme& scheme);
  Serial next_serial();
  const Record& record(Serial serial) const;

  mutable std::mutex mutex_;
  std::map<Serial, Record> records_;
  Serial next_serial_ = 1;
  std::uint64_t verifications_ = 0;
  VerificationPolicy policy_;
  std::vector<std::uint8_t> master_secret_;
  std::uint64_t seed_;
  std::uint64_t draws_ = 0;
};

// Verification handle bound to one serial; what attacks receive.
class Oracle {
 public:
  Oracle(Bank& bank, Serial serial) : bank_(&bank), serial_(serial) {}

  Serial serial() const { return serial_; }
  std::size_t size() const { return bank_->size(serial_); }
  bool strict() const { return std::holds_alternative<StrictDestroy>(bank_->policy()); }

  VerificationReport submit(std::vector<Entry> entries, Rng& rng);
  VerificationReport submit_postselected(std::vector<Entry> entries);
  RepeatedOutcome submit_repeated(std::size_t qubit_index, const Operator4& round_unitary,
                                  const PureQubit& probe0, const PureQubit& money_held,
                                  unsigned long long rounds, Rng* rng);

  // Follow a reissued note.
  void rebind(Serial serial) { serial_ = serial; }
  std::uint64_t verifications() const { return count_; }

 private:
  Bank* bank_;
  Serial serial_;
  std::uint64_t count_ = 0;
};

}  // namespace qmoney
