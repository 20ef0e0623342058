#include "qmoney/bt_attack.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qmoney/rng.hpp"

namespace qmoney {

namespace {

constexpr double kPi = std::numbers::pi;

Operator4 bt_round_unitary(const Operator2& gate, double delta) {
  return controlled(gate) * Operator4::kron(Operator2::rotation(delta), Operator2::identity());
}

std::vector<Entry> bare_entries(const std::vector<PureQubit>& wallet) {
  return {wallet.begin(), wallet.end()};
}

}  // namespace

BtParams BtParams::from_rounds(unsigned long long rounds, double epsilon) {
  if (rounds == 0) throw std::invalid_argument("BtParams: rounds must be at least 1");
  return {rounds, kPi / (2.0 * static_cast<double>(rounds)), epsilon};
}

BtParams BtParams::even_rounds(unsigned long long rounds, double epsilon) {
  return from_rounds(rounds + (rounds % 2), epsilon);
}

void BtParams::validate() const {
  if (rounds == 0) throw std::invalid_argument("BtParams: rounds must be at least 1");
  if (!(delta > 0.0 && delta <= kPi / 2.0)) throw std::invalid_argument("BtParams: delta must lie in (0, pi/2]");
}

unsigned long long attack_rounds(std::size_t n, double epsilon) {
  if (n == 0) throw std::invalid_argument("attack_rounds: n must be at least 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("attack_rounds: epsilon must lie in (0, 1)");
  const auto rounds = static_cast<unsigned long long>(std::ceil(kPi * kPi * static_cast<double>(n) / (2.0 * epsilon)));
  return rounds + (rounds % 2);
}

TransferMatrixT::TransferMatrixT(double theta, double delta)
    : theta_(theta), q_(std::cos(2.0 * theta)), delta_(delta) {
  if (!(theta >= 0.0 && theta <= kPi / 2.0)) throw std::invalid_argument("TransferMatrixT: theta must lie in [0, pi/2]");
  const double c = std::cos(delta);
  const double s = std::sin(delta);
  m_ = Operator2{c, -s, q_ * s, q_ * c};
}

double TransferMatrixT::max_singular_value() const {
  // Real 2x2: sigma_max = (|(a + d, b - c)| + |(a - d, b + c)|) / 2.
  const double a = m_(0, 0).real();
  const double b = m_(0, 1).real();
  const double c = m_(1, 0).real();
  const double d = m_(1, 1).real();
  return 0.5 * (std::hypot(a + d, b - c) + std::hypot(a - d, b + c));
}

BombResult ev_bomb_test(bool is_live, const BtParams& params, RunMode mode, Rng& rng) {
  params.validate();
  const Operator4 round = bt_round_unitary(is_live ? Operator2::pauli_x() : Operator2::identity(), params.delta);
  const PureQubit system_ready = PureQubit::zero();
  BombResult out;
  PureQubit probe = PureQubit::zero();

  if (mode == RunMode::FastForward) {
    // The system is re-prepared every round, so the postselected map is fixed.
    const Operator2 step = contract_money(round, system_ready, system_ready);
    const PureQubit v = power(step, params.rounds) * probe;
    out.survival_probability = v.norm2();
    out.exploded = !rng.bernoulli(out.survival_probability);
    if (out.exploded) return out;
    out.final_probe = v.normalized();
    out.probe_outcome = measure_qubit(out.final_probe, PureQubit::zero(), &rng);
    return out;
  }

  for (unsigned long long r = 0; r < params.rounds; ++r) {
    const auto branches = measure_money(round * JointState::product(probe, system_ready), system_ready);
    out.survival_probability *= branches.pass.probability;
    const bool pass = mode == RunMode::Postselected ? true : rng.uniform() < branches.pass.probability;
    if (!pass || branches.pass.empty()) {
      out.exploded = true;
      return out;
    }
    probe = *branches.pass.probe;
  }
  out.final_probe = probe;
  out.probe_outcome = measure_qubit(probe, PureQubit::zero(), mode == RunMode::Sampled ? &rng : nullptr);
  return out;
}

ProbeRunResult bt_probe_run(Oracle& oracle, std::vector<PureQubit>& wallet, std::size_t qubit_index,
                            const Operator2& probe_gate, const BtParams& params, RunMode mode, Rng& rng,
                            Transcript* transcript, const std::string& gate_name) {
  params.validate();
  if (qubit_index >= wallet.size()) throw std::out_of_range("bt_probe_run: qubit index");
  if (probe_gate.unitarity_defect() > 1e-12) throw std::invalid_argument("bt_probe_run: probe gate must be unitary");
  const Operator4 round = bt_round_unitary(probe_gate, params.delta);
  ProbeRunResult res;

  if (mode == RunMode::FastForward) {
    const auto out = oracle.submit_repeated(qubit_index, round, PureQubit::zero(), wallet[qubit_index], params.rounds, &rng);
    res.verifications = params.rounds;
    res.pass_probability = out.pass_probability;
    if (out.caught) {
      res.status = RunStatus::Caught;
      return res;
    }
    res.final_probe = *out.probe;
    wallet[qubit_index] = *out.money;
    res.probe_outcome = measure_qubit(res.final_probe, PureQubit::zero(), &rng);
    return res;
  }

  JointState joint = JointState::product(PureQubit::zero(), wallet[qubit_index]);
  for (unsigned long long r = 0; r < params.rounds; ++r) {
    joint = round * joint;
    auto entries = bare_entries(wallet);
    entries[qubit_index] = joint;
    const auto report = mode == RunMode::Sampled ? oracle.submit(std::move(entries), rng)
                                                 : oracle.submit_postselected(std::move(entries));
    ++res.verifications;
    if (report.outcome == Outcome::Caught) {
      if (transcript) transcript->add({r + 1, gate_name, false, std::nullopt});
      res.status = RunStatus::Caught;
      return res;
    }
    if (report.outcome == Outcome::Reissued) {
      if (transcript) transcript->add({r + 1, gate_name, false, std::nullopt});
      wallet = report.reissued->state;
      oracle.rebind(report.reissued->serial);
      res.status = RunStatus::Reissued;
      return res;
    }
    if (report.pass_probability) res.pass_probability *= *report.pass_probability;
    for (std::size_t k = 0; k < wallet.size(); ++k)
      if (k != qubit_index) wallet[k] = std::get<PureQubit>(report.returned[k]);
    joint = std::get<JointState>(report.returned[qubit_index]);
    if (transcript) {
      const bool all_passed = std::all_of(report.qubit_passed.begin(), report.qubit_passed.end(), [](bool b) { return b; });
      transcript->add({r + 1, gate_name, all_passed, factor_product(joint).first});
    }
  }
  const auto [probe, money] = factor_product(joint);
  wallet[qubit_index] = money;
  res.final_probe = probe;
  res.probe_outcome = measure_qubit(probe, PureQubit::zero(), mode == RunMode::Sampled ? &rng : nullptr);
  return res;
}

namespace {

void absorb(IdentifiedSymbol& id, const ProbeRunResult& run) {
  id.verifications += run.verifications;
  id.pass_probability *= run.pass_probability;
  id.status = run.status;
}

}  // namespace

IdentifiedSymbol bt_identify_qubit(Oracle& oracle, std::vector<PureQubit>& wallet, std::size_t qubit_index,
                                   const BtParams& params, RunMode mode, Rng& rng, Transcript* transcript) {
  // The -X and theta = pi/2 cases need an even number of rounds.
  const BtParams p = params.rounds % 2 == 0 ? params : BtParams::even_rounds(params.rounds, params.epsilon);
  IdentifiedSymbol id;

  const auto flip = bt_probe_run(oracle, wallet, qubit_index, Operator2::pauli_x(), p, mode, rng, transcript, "X");
  absorb(id, flip);
  if (id.status != RunStatus::Completed) return id;
  if (flip.probe_outcome == 1) {
    id.symbol = WiesnerSymbol::Plus;
    return id;
  }

  const Operator2 minus_x = Amplitude{-1.0} * Operator2::pauli_x();
  const auto neg = bt_probe_run(oracle, wallet, qubit_index, minus_x, p, mode, rng, transcript, "-X");
  absorb(id, neg);
  if (id.status != RunStatus::Completed) return id;
  if (neg.probe_outcome == 1) {
    id.symbol = WiesnerSymbol::Minus;
    return id;
  }

  const int z = measure_qubit(wallet[qubit_index], PureQubit::zero(), mode == RunMode::Sampled || mode == RunMode::FastForward ? &rng : nullptr);
  wallet[qubit_index] = z == 0 ? PureQubit::zero() : PureQubit::one();
  id.symbol = z == 0 ? WiesnerSymbol::Zero : WiesnerSymbol::One;
  return id;
}

KeyRecovery bt_recover_key_serial(Oracle& oracle, std::vector<PureQubit>& wallet, double epsilon, RunMode mode,
                                  Rng& rng, Transcript* transcript) {
  KeyRecovery out;
  out.rounds_per_run = attack_rounds(wallet.size(), epsilon);
  const BtParams params = BtParams::from_rounds(out.rounds_per_run, epsilon);
  for (std::size_t i = 0; i < wallet.size(); ++i) {
    const auto id = bt_identify_qubit(oracle, wallet, i, params, mode, rng, transcript);
    out.verifications += id.verifications;
    out.pass_probability *= id.pass_probability;
    if (id.status != RunStatus::Completed) {
      out.status = id.status;
      return out;
    }
    out.key.push_back(*id.symbol);
  }
  return out;
}

KeyRecovery bt_recover_key_parallel(Oracle& oracle, std::vector<PureQubit>& wallet, double epsilon, RunMode mode,
                                    Rng& rng, Transcript* transcript) {
  if (mode == RunMode::FastForward)
    throw std::invalid_argument("bt_recover_key_parallel: fast-forward is single-qubit only");
  const std::size_t n = wallet.size();
  KeyRecovery out;
  out.rounds_per_run = attack_rounds(n, epsilon);
  const BtParams params = BtParams::from_rounds(out.rounds_per_run, epsilon);
  std::vector<std::optional<WiesnerSymbol>> found(n);

  // N rounds with every probe in `active` perturbed by `gate`; returns the
  // probe outcomes, or nullopt if the run was aborted.
  auto phase = [&](const Operator2& gate, const std::string& name,
                   const std::vector<bool>& active) -> std::optional<std::vector<int>> {
    const Operator4 round = bt_round_unitary(gate, params.delta);
    std::vector<JointState> joints(n);
    for (std::size_t k = 0; k < n; ++k) joints[k] = JointState::product(PureQubit::zero(), wallet[k]);
    for (unsigned long long r = 0; r < params.rounds; ++r) {
      std::vector<Entry> entries;
      entries.reserve(n);
      for (std::size_t k = 0; k < n; ++k) {
        if (active[k]) {
          joints[k] = round * joints[k];
          entries.emplace_back(joints[k]);
        } else {
          entries.emplace_back(wallet[k]);
        }
      }
      const auto report = mode == RunMode::Sampled ? oracle.submit(std::move(entries), rng)
                                                   : oracle.submit_postselected(std::move(entries));
      ++out.verifications;
      if (report.outcome != Outcome::Passed) {
        if (transcript) transcript->add({out.verifications, name, false, std::nullopt});
        if (report.outcome == Outcome::Reissued) {
          wallet = report.reissued->state;
          oracle.rebind(report.reissued->serial);
          out.status = RunStatus::Reissued;
        } else {
          out.status = RunStatus::Caught;
        }
        return std::nullopt;
      }
      if (report.pass_probability) out.pass_probability *= *report.pass_probability;
      for (std::size_t k = 0; k < n; ++k) {
        if (active[k]) {
          joints[k] = std::get<JointState>(report.returned[k]);
        } else {
          wallet[k] = std::get<PureQubit>(report.returned[k]);
        }
      }
      if (transcript) transcript->add({out.verifications, name, true, std::nullopt});
    }
    std::vector<int> outcomes(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k]) continue;
      const auto [probe, money] = factor_product(joints[k]);
      wallet[k] = money;
      outcomes[k] = measure_qubit(probe, PureQubit::zero(), mode == RunMode::Sampled ? &rng : nullptr);
    }
    return outcomes;
  };

  std::vector<bool> active(n, true);
  const auto first = phase(Operator2::pauli_x(), "X", active);
  if (!first) return out;
  for (std::size_t k = 0; k < n; ++k) {
    if ((*first)[k] == 1) {
      found[k] = WiesnerSymbol::Plus;
      active[k] = false;
    }
  }
  if (std::any_of(active.begin(), active.end(), [](bool b) { return b; })) {
    const auto second = phase(Amplitude{-1.0} * Operator2::pauli_x(), "-X", active);
    if (!second) return out;
    for (std::size_t k = 0; k < n; ++k) {
      if (active[k] && (*second)[k] == 1) found[k] = WiesnerSymbol::Minus;
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!found[k]) {
      const int z = measure_qubit(wallet[k], PureQubit::zero(), mode == RunMode::Sampled ? &rng : nullptr);
      wallet[k] = z == 0 ? PureQubit::zero() : PureQubit::one();
      found[k] = z == 0 ? WiesnerSymbol::Zero : WiesnerSymbol::One;
    }
    out.key.push_back(*found[k]);
  }
  return out;
}

Operator2 reflection_about(const PureQubit& beta) {
  return Amplitude{2.0} * Operator2::projector(beta.normalized()) - Operator2::identity();
}

double list_round_constant(double c_fit) {
  // Failure of one elimination run is at most 2(1 - <0|T^N|0>), and
  // 1 - q = 2 sin^2(theta) >= 8 theta^2 / pi^2, giving c_fit pi^4 / 16.
  return c_fit * std::pow(kPi, 4) / 16.0;
}

ListIdentification bt_list_attack(Oracle& oracle, std::vector<PureQubit>& wallet, std::size_t qubit_index,
                                  const StateList& list, double epsilon, double round_constant, RunMode mode,
                                  Rng& rng, Transcript* transcript) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("bt_list_attack: epsilon must lie in (0, 1)");
  if (!(list.theta_min() > 0.0)) throw std::invalid_argument("bt_list_attack: theta_min must be positive");
  ListIdentification out;
  std::vector<std::size_t> remaining(list.size());
  for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;
  const double eps_run = epsilon / static_cast<double>(list.size() - 1);

  while (remaining.size() > 1) {
    double theta_min = kPi / 2.0;
    for (std::size_t a = 0; a < remaining.size(); ++a)
      for (std::size_t b = a + 1; b < remaining.size(); ++b)
        theta_min = std::min(theta_min, pair_angle(list.states()[remaining[a]], list.states()[remaining[b]]));
    const auto rounds = static_cast<unsigned long long>(std::ceil(round_constant / (eps_run * theta_min * theta_min)));
    const BtParams params = BtParams::even_rounds(std::max(rounds, 2ULL), eps_run);

    const std::size_t candidate = remaining.front();
    const auto run = bt_probe_run(oracle, wallet, qubit_index, reflection_about(list.states()[candidate]), params,
                                  mode, rng, transcript, "R" + std::to_string(candidate));
    ++out.runs;
    out.verifications += run.verifications;
    out.pass_probability *= run.pass_probability;
    if (run.status != RunStatus::Completed) {
      out.status = run.status;
      return out;
    }
    if (run.probe_outcome == 1) {
      out.index = candidate;
      return out;
    }
    remaining.erase(remaining.begin());
  }
  out.index = remaining.front();
  return out;
}

}  // namespace qmoney
