#include "qmoney/bank.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qmoney/errors.hpp"
#include "qmoney/rng.hpp"

namespace qmoney {

PureQubit state_of(WiesnerSymbol s) {
  switch (s) {
    case WiesnerSymbol::Zero: return PureQubit::zero();
    case WiesnerSymbol::One: return PureQubit::one();
    case WiesnerSymbol::Plus: return PureQubit::plus();
    case WiesnerSymbol::Minus: return PureQubit::minus();
  }
  throw std::invalid_argument("bad symbol");
}

char symbol_char(WiesnerSymbol s) {
  switch (s) {
    case WiesnerSymbol::Zero: return '0';
    case WiesnerSymbol::One: return '1';
    case WiesnerSymbol::Plus: return '+';
    case WiesnerSymbol::Minus: return '-';
  }
  throw std::invalid_argument("bad symbol");
}

WiesnerSymbol symbol_from_char(char c) {
  switch (c) {
    case '0': return WiesnerSymbol::Zero;
    case '1': return WiesnerSymbol::One;
    case '+': return WiesnerSymbol::Plus;
    case '-': return WiesnerSymbol::Minus;
    default: throw std::invalid_argument(std::string("unknown key symbol '") + c + "'");
  }
}

PureQubit key_state(const KeySymbol& k) {
  if (const auto* s = std::get_if<WiesnerSymbol>(&k)) return state_of(*s);
  return std::get<PureQubit>(k);
}

double pair_angle(const PureQubit& a, const PureQubit& b) {
  return std::acos(std::min(1.0, std::abs(inner(a, b))));
}

StateList::StateList(std::vector<PureQubit> states) : states_(std::move(states)) {
  if (states_.size() < 2) throw std::invalid_argument("StateList needs at least two states");
  theta_min_ = std::numbers::pi / 2.0;
  for (auto& s : states_) {
    if (std::abs(s.norm2() - 1.0) > kNormTolerance) throw std::invalid_argument("StateList state not normalized");
  }
  for (std::size_t i = 0; i < states_.size(); ++i)
    for (std::size_t j = i + 1; j < states_.size(); ++j)
      theta_min_ = std::min(theta_min_, pair_angle(states_[i], states_[j]));
}

StateList StateList::four_state() {
  return StateList({PureQubit::zero(), PureQubit::one(), PureQubit::plus(), PureQubit::minus()});
}

std::string scheme_name(const Scheme& s) {
  if (std::holds_alternative<FourState>(s)) return "four-state";
  if (std::holds_alternative<Listed>(s)) return "listed";
  return "explicit";
}

void validate(const VerificationPolicy& p) {
  if (const auto* n = std::get_if<NoisyThreshold>(&p)) {
    if (!(0.0 <= n->return_frac && n->return_frac <= n->reissue_frac && n->reissue_frac <= 1.0))
      throw std::invalid_argument("noisy policy needs 0 <= return_frac <= reissue_frac <= 1");
  }
}

Bank::Bank(std::uint64_t seed, VerificationPolicy policy) : policy_(policy), seed_(seed) {
  validate(policy_);
}

void Bank::use_master_secret(std::vector<std::uint8_t> master_secret) {
  if (master_secret.empty()) throw std::invalid_argument("master secret must be nonempty");
  std::lock_guard lock(mutex_);
  master_secret_ = std::move(master_secret);
}

Serial Bank::next_serial() { return next_serial_++; }

std::vector<KeySymbol> Bank::draw_key(std::size_t n, const Scheme& scheme) {
  Rng rng(stream_seed(seed_, draws_++));
  std::vector<KeySymbol> key;
  key.reserve(n);
  if (const auto* listed = std::get_if<Listed>(&scheme)) {
    for (std::size_t i = 0; i < n; ++i) key.emplace_back(listed->list.states()[rng.below(listed->list.size())]);
  } else {
    for (std::size_t i = 0; i < n; ++i) key.emplace_back(static_cast<WiesnerSymbol>(rng.below(4)));
  }
  return key;
}

Banknote Bank::issue(std::size_t n, const Scheme& scheme) {
  if (n == 0) throw std::invalid_argument("issue: n must be at least 1");
  if (std::holds_alternative<Explicit>(scheme)) throw std::invalid_argument("issue: use issue_explicit for explicit states");
  std::lock_guard lock(mutex_);
  Banknote note;
  note.serial = next_serial();
  if (!master_secret_.empty() && std::holds_alternative<FourState>(scheme)) {
    note.key = derive_key(master_secret_, note.serial, n);
  } else {
    note.key = draw_key(n, scheme);
  }
  for (const auto& k : note.key) note.state.push_back(key_state(k));
  records_.emplace(note.serial, Record{scheme, note.key});
  return note;
}

Banknote Bank::issue_explicit(std::vector<PureQubit> states) {
  if (states.empty()) throw std::invalid_argument("issue_explicit: empty note");
  std::lock_guard lock(mutex_);
  Banknote note;
  note.serial = next_serial();
  for (auto& s : states) {
    s = s.normalized();
    note.key.emplace_back(s);
    note.state.push_back(s);
  }
  records_.emplace(note.serial, Record{Explicit{}, note.key});
  return note;
}

std::vector<KeySymbol> Bank::derive_key(std::span<const std::uint8_t> master_secret, Serial serial,
                                        std::size_t n) {
  if (master_secret.empty()) throw std::invalid_argument("derive_key: empty master secret");
  if (n == 0) throw std::invalid_argument("derive_key: n must be at least 1");
  // FNV-1a over the secret, then splitmix64 mixing with serial and index.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : master_secret) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  const std::uint64_t per_serial = splitmix64(h ^ splitmix64(serial));
  std::vector<KeySymbol> key;
  key.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t x = splitmix64(per_serial ^ splitmix64(0xa5a5a5a5ULL + i));
    key.emplace_back(static_cast<WiesnerSymbol>(x >> 62));
  }
  return key;
}

const Bank::Record& Bank::record(Serial serial) const {
  auto it = records_.find(serial);
  if (it == records_.end()) throw UnknownSerial(serial);
  return it->second;
}

bool Bank::knows(Serial serial) const {
  std::lock_guard lock(mutex_);
  return records_.count(serial) != 0;
}

std::size_t Bank::size(Serial serial) const {
  std::lock_guard lock(mutex_);
  return record(serial).key.size();
}

std::uint64_t Bank::verification_count() const {
  std::lock_guard lock(mutex_);
  return verifications_;
}

std::optional<std::vector<KeySymbol>> Bank::key_of(Serial serial) const {
  std::lock_guard lock(mutex_);
  auto it = records_.find(serial);
  if (it == records_.end()) return std::nullopt;
  return it->second.key;
}

namespace {

JointState as_joint(const Entry& e) {
  if (const auto* j = std::get_if<JointState>(&e)) return *j;
  return JointState::product(PureQubit::zero(), std::get<PureQubit>(e));
}

Entry collapsed(const Entry& original, const Branch& branch, const PureQubit& money) {
  if (std::holds_alternative<PureQubit>(original)) return money;
  return JointState::product(*branch.probe, money);
}

void check_entries(const Submission& sub, std::size_t n) {
  if (sub.entries.size() != n)
    throw std::invalid_argument("submission has " + std::to_string(sub.entries.size()) +
                                " entries, note has " + std::to_string(n));
}

}  // namespace

VerificationReport Bank::verify_sampled(const Submission& sub, Rng& rng) {
  std::lock_guard lock(mutex_);
  const Record rec = record(sub.serial);
  check_entries(sub, rec.key.size());
  ++verifications_;

  VerificationReport report;
  std::vector<Entry> post;
  post.reserve(rec.key.size());
  std::size_t failures = 0;
  for (std::size_t i = 0; i < rec.key.size(); ++i) {
    const PureQubit key = key_state(rec.key[i]);
    const auto branches = measure_money(as_joint(sub.entries[i]), key);
    const bool pass = branches.fail.empty() || (!branches.pass.empty() && rng.uniform() < branches.pass.probability);
    report.qubit_passed.push_back(pass);
    if (pass) {
      post.push_back(collapsed(sub.entries[i], branches.pass, key));
    } else {
      ++failures;
      post.push_back(collapsed(sub.entries[i], branches.fail, key.orthogonal()));
    }
  }

  const double n = static_cast<double>(rec.key.size());
  double return_frac = 0.0;
  double reissue_frac = 0.0;
  if (const auto* noisy = std::get_if<NoisyThreshold>(&policy_)) {
    return_frac = noisy->return_frac;
    reissue_frac = noisy->reissue_frac;
  }
  // Thresholds are inclusive ("at most").
  const double f = static_cast<double>(failures);
  if (f <= return_frac * n + 1e-9) {
    report.outcome = Outcome::Passed;
    report.returned = std::move(post);
  } else if (f <= reissue_frac * n + 1e-9) {
    report.outcome = Outcome::Reissued;
    records_.erase(sub.serial);
    HeldNote fresh;
    fresh.serial = next_serial();
    auto key = (!master_secret_.empty() && std::holds_alternative<FourState>(rec.scheme))
                   ? derive_key(master_secret_, fresh.serial, rec.key.size())
                   : draw_key(rec.key.size(), std::holds_alternative<Explicit>(rec.scheme) ? Scheme{FourState{}} : rec.scheme);
    for (const auto& k : key) fresh.state.push_back(key_state(k));
    records_.emplace(fresh.serial, Record{rec.scheme, std::move(key)});
    report.reissued = std::move(fresh);
  } else {
    report.outcome = Outcome::Caught;
    records_.erase(sub.serial);
  }
  return report;
}

VerificationReport Bank::verify_postselected(const Submission& sub) const {
  if (!std::holds_alternative<StrictDestroy>(policy_))
    throw std::logic_error("postselected verification requires the strict policy");
  std::lock_guard lock(mutex_);
  const Record& rec = record(sub.serial);
  check_entries(sub, rec.key.size());

  VerificationReport report;
  double p = 1.0;
  for (std::size_t i = 0; i < rec.key.size(); ++i) {
    const PureQubit key = key_state(rec.key[i]);
    const auto branches = measure_money(as_joint(sub.entries[i]), key);
    p *= branches.pass.probability;
    if (branches.pass.empty() || p < 1e-300)
      throw UnderflowError("postselected pass probability below 1e-300");
    report.qubit_passed.push_back(true);
    report.returned.push_back(collapsed(sub.entries[i], branches.pass, key));
  }
  report.outcome = Outcome::Passed;
  report.pass_probability = p;
  return report;
}

RepeatedOutcome Bank::verify_repeated(Serial serial, std::size_t qubit_index,
                                      const Operator4& round_unitary, const PureQubit& probe0,
                                      const PureQubit& money_held, unsigned long long rounds,
                                      Rng* rng) {
  if (!std::holds_alternative<StrictDestroy>(policy_))
    throw std::logic_error("repeated verification requires the strict policy");
  if (rounds == 0) throw std::invalid_argument("verify_repeated: rounds must be at least 1");
  std::lock_guard lock(mutex_);
  const Record& rec = record(serial);
  if (qubit_index >= rec.key.size()) throw std::out_of_range("verify_repeated: qubit index");
  const PureQubit key = key_state(rec.key[qubit_index]);

  // First round starts from the held money; every later one from the key.
  const Operator2 first = contract_money(round_unitary, key, money_held);
  const Operator2 steady = contract_money(round_unitary, key, key);
  const PureQubit v = power(steady, rounds - 1) * (first * probe0);

  RepeatedOutcome out;
  out.pass_probability = v.norm2();
  if (rng != nullptr) {
    verifications_ += rounds;
    out.caught = !rng->bernoulli(out.pass_probability);
    if (out.caught) {
      records_.erase(serial);
      return out;
    }
  }
  if (out.pass_probability >= kEmptyBranch) {
    out.probe = v.normalized();
    out.money = key;
  }
  return out;
}

nlohmann::json Bank::export_json() const {
  std::lock_guard lock(mutex_);
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [serial, rec] : records_) {
    nlohmann::json symbols = nlohmann::json::array();
    for (const auto& k : rec.key) {
      if (const auto* s = std::get_if<WiesnerSymbol>(&k)) {
        symbols.push_back(std::string(1, symbol_char(*s)));
      } else {
        const auto& q = std::get<PureQubit>(k);
        symbols.push_back({q.a0.real(), q.a0.imag(), q.a1.real(), q.a1.imag()});
      }
    }
    doc[std::to_string(serial)] = {{"scheme", scheme_name(rec.scheme)}, {"key_symbols", symbols}};
  }
  return doc;
}

void Bank::import_json(const nlohmann::json& doc) {
  std::map<Serial, Record> imported;
  for (const auto& [serial_text, entry] : doc.items()) {
    const Serial serial = std::stoull(serial_text);
    const std::string scheme = entry.at("scheme").get<std::string>();
    Record rec{Explicit{}, {}};
    std::vector<PureQubit> states;
    for (const auto& sym : entry.at("key_symbols")) {
      if (sym.is_string()) {
        const auto text = sym.get<std::string>();
        if (text.size() != 1) throw std::invalid_argument("bad key symbol " + text);
        rec.key.emplace_back(symbol_from_char(text[0]));
      } else {
        const PureQubit q{Amplitude{sym.at(0).get<double>(), sym.at(1).get<double>()},
                          Amplitude{sym.at(2).get<double>(), sym.at(3).get<double>()}};
        rec.key.emplace_back(q);
        states.push_back(q);
      }
    }
    if (scheme == "four-state") {
      rec.scheme = FourState{};
    } else if (scheme == "listed") {
      // The list itself is not exported; the distinct key states stand in.
      std::vector<PureQubit> distinct;
      for (const auto& s : states) {
        bool seen = false;
        for (const auto& d : distinct) seen = seen || same_ray(s, d, 1e-12);
        if (!seen) distinct.push_back(s);
      }
      if (distinct.size() >= 2) {
        rec.scheme = Listed{StateList(distinct)};
      }
    } else if (scheme != "explicit") {
      throw std::invalid_argument("unknown scheme " + scheme);
    }
    imported.emplace(serial, std::move(rec));
  }
  std::lock_guard lock(mutex_);
  for (auto& [serial, rec] : imported) {
    records_.insert_or_assign(serial, std::move(rec));
    next_serial_ = std::max(next_serial_, serial + 1);
  }
}

VerificationReport Oracle::submit(std::vector<Entry> entries, Rng& rng) {
  ++count_;
  return bank_->verify_sampled(Submission{serial_, std::move(entries)}, rng);
}

VerificationReport Oracle::submit_postselected(std::vector<Entry> entries) {
  ++count_;
  return bank_->verify_postselected(Submission{serial_, std::move(entries)});
}

RepeatedOutcome Oracle::submit_repeated(std::size_t qubit_index, const Operator4& round_unitary,
                                        const PureQubit& probe0, const PureQubit& money_held,
                                        unsigned long long rounds, Rng* rng) {
  count_ += rounds;
  return bank_->verify_repeated(serial_, qubit_index, round_unitary, probe0, money_held, rounds, rng);
}

}  // namespace qmoney
