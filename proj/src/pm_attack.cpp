#include "qmoney/pm_attack.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qmoney/errors.hpp"
#include "qmoney/rng.hpp"

namespace qmoney {

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

bool is_dichotomic(const Operator2& a, double tol) {
  // Traceless rules out +-I, whose square is also I.
  return a.hermiticity_defect() <= tol && (a * a).max_abs_diff(Operator2::identity()) <= tol &&
         std::abs(a.trace()) <= tol;
}

void PmParams::validate() const {
  if (rounds == 0) throw std::invalid_argument("PmParams: rounds must be at least 1");
  if (!is_dichotomic(observable)) throw std::invalid_argument("PmParams: observable must have eigenvalues +1 and -1");
  if (std::abs(probe_init.norm2() - 1.0) > kNormTolerance) throw std::invalid_argument("PmParams: probe not normalized");
}

Operator4 coupling_unitary(double delta, const Operator2& observable) {
  if (!is_dichotomic(observable)) throw std::invalid_argument("coupling_unitary: observable must be dichotomic");
  const Operator2 p = Amplitude{0.5} * (Operator2::identity() + observable);
  const Operator2 p_perp = Operator2::identity() - p;
  return Operator4::kron(Operator2::x_phase(delta), p) + Operator4::kron(Operator2::x_phase(-delta), p_perp);
}

RoundMapW::RoundMapW(double delta, double expectation) : delta_(delta), exp_a_(expectation) {
  if (std::abs(expectation) > 1.0 + 1e-12) throw std::invalid_argument("round_map: |<A>| must be at most 1");
  const Amplitude c = std::cos(delta);
  const Amplitude s{0.0, -std::sin(delta) * expectation};
  m_ = Operator2{c, s, s, c};
}

Amplitude RoundMapW::eigenvalue_minus() const { return {std::cos(delta_), -exp_a_ * std::sin(delta_)}; }
Amplitude RoundMapW::eigenvalue_plus() const { return {std::cos(delta_), exp_a_ * std::sin(delta_)}; }

Operator2 RoundMapW::power(unsigned long long n) const {
  // Diagonal in the |+>, |-> basis.
  const double nd = static_cast<double>(n);
  const Amplitude lm = std::pow(eigenvalue_minus(), nd);
  const Amplitude lp = std::pow(eigenvalue_plus(), nd);
  return Amplitude{0.5} * Operator2{lm + lp, lm - lp, lm - lp, lm + lp};
}

RoundMapW round_map(double delta, double expectation) { return RoundMapW(delta, expectation); }

PmEvolution pm_evolve(Oracle& oracle, std::vector<PureQubit>& wallet, std::size_t qubit_index,
                      const PmParams& params, RunMode mode, Rng& rng, Transcript* transcript) {
  params.validate();
  if (qubit_index >= wallet.size()) throw std::out_of_range("pm_evolve: qubit index");
  const Operator4 u = coupling_unitary(params.delta(), params.observable);
  PmEvolution out;

  if (mode != RunMode::Sampled) {
    // Closed form: W is the same every round once the money is back on key.
    const auto r = oracle.submit_repeated(qubit_index, u, params.probe_init, wallet[qubit_index], params.rounds,
                                          mode == RunMode::FastForward ? &rng : nullptr);
    out.pass_probability = r.pass_probability;
    out.verifications = params.rounds;
    if (r.caught) {
      out.status = RunStatus::Caught;
      return out;
    }
    if (!r.probe) throw UnderflowError("pm_evolve: pass probability underflow");
    out.probe = *r.probe;
    wallet[qubit_index] = *r.money;
    return out;
  }

  JointState joint = JointState::product(params.probe_init, wallet[qubit_index]);
  for (unsigned long long round = 0; round < params.rounds; ++round) {
    joint = u * joint;
    std::vector<Entry> entries(wallet.begin(), wallet.end());
    entries[qubit_index] = joint;
    const auto report = oracle.submit(std::move(entries), rng);
    ++out.verifications;
    if (report.outcome == Outcome::Caught) {
      if (transcript) transcript->add({round + 1, "U", false, std::nullopt});
      out.status = RunStatus::Caught;
      return out;
    }
    if (report.outcome == Outcome::Reissued) {
      if (transcript) transcript->add({round + 1, "U", false, std::nullopt});
      wallet = report.reissued->state;
      oracle.rebind(report.reissued->serial);
      out.status = RunStatus::Reissued;
      return out;
    }
    for (std::size_t k = 0; k < wallet.size(); ++k)
      if (k != qubit_index) wallet[k] = std::get<PureQubit>(report.returned[k]);
    joint = std::get<JointState>(report.returned[qubit_index]);
    if (transcript) {
      const bool all_passed =
          std::all_of(report.qubit_passed.begin(), report.qubit_passed.end(), [](bool b) { return b; });
      transcript->add({round + 1, "U", all_passed, factor_product(joint).first});
    }
  }
  const auto [probe, money] = factor_product(joint);
  out.probe = probe;
  wallet[qubit_index] = money;
  return out;
}

double sigma_y_pass_prob(const PureQubit& probe) {
  const Amplitude a = probe.a0 - Amplitude{0.0, 1.0} * probe.a1;
  return 0.5 * std::norm(a) / probe.norm2();
}

unsigned long long chernoff_m(double eta, double nu) {
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("chernoff_m: eta must lie in (0, 1)");
  if (!(nu > 0.0 && nu < 1.0)) throw std::invalid_argument("chernoff_m: nu must lie in (0, 1)");
  return static_cast<unsigned long long>(std::ceil(336.0 * std::log(2.0 / eta) / (nu * nu)));
}

double expectation_from_y_frequency(double p_y_plus) {
  const double x = std::clamp(1.0 - 2.0 * p_y_plus, -1.0, 1.0);
  return std::clamp(4.0 / kPi * std::asin(x), -1.0, 1.0);
}

TomoParams TomoParams::with_rounds(double eta, double nu, unsigned long long rounds) {
  TomoParams t{eta, nu, chernoff_m(eta, nu), rounds};
  t.validate();
  return t;
}

void TomoParams::validate() const {
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("TomoParams: eta must lie in (0, 1)");
  if (!(nu > 0.0 && nu < 1.0)) throw std::invalid_argument("TomoParams: nu must lie in (0, 1)");
  if (m == 0 || rounds == 0) throw std::invalid_argument("TomoParams: m and rounds must be positive");
}

ExpectationEstimate estimate_expectation(Oracle& oracle, std::vector<PureQubit>& wallet, std::size_t qubit_index,
                                         const Operator2& observable, const TomoParams& tomo, RunMode mode,
                                         Rng& rng) {
  tomo.validate();
  const PmParams params{kTomographyCoupling, tomo.rounds, observable, PureQubit::zero()};
  ExpectationEstimate out;

  if (mode == RunMode::Postselected) {
    // Exact p-bar in place of the sample mean.
    const auto evo = pm_evolve(oracle, wallet, qubit_index, params, mode, rng);
    out.verifications = evo.verifications;
    out.samples_used = tomo.m;
    out.p_y_plus = sigma_y_pass_prob(evo.probe);
  } else {
    std::uint64_t hits = 0;
    for (unsigned long long rep = 0; rep < tomo.m; ++rep) {
      const auto evo = pm_evolve(oracle, wallet, qubit_index, params, mode, rng);
      out.verifications += evo.verifications;
      if (evo.status != RunStatus::Completed) {
        out.status = evo.status;
        out.caught_count = 1;
        break;
      }
      ++out.samples_used;
      if (rng.bernoulli(sigma_y_pass_prob(evo.probe))) ++hits;
    }
    if (out.samples_used == 0) throw EstimationFailure("estimate_expectation: caught before any repetition completed");
    out.p_y_plus = static_cast<double>(hits) / static_cast<double>(out.samples_used);
  }
  out.estimate = expectation_from_y_frequency(out.p_y_plus);
  out.taylor_guard_ok = std::abs(1.0 - 2.0 * out.p_y_plus) <= 0.75;
  return out;
}

IdentifiedSymbol pm_identify_wiesner(Oracle& oracle, std::vector<PureQubit>& wallet, std::size_t qubit_index,
                                     unsigned long long rounds, RunMode mode, Rng& rng, Transcript* transcript) {
  const PmParams params{kPi / 2.0, rounds, Operator2::pauli_x(), PureQubit::zero()};
  IdentifiedSymbol id;
  const auto evo = pm_evolve(oracle, wallet, qubit_index, params, mode, rng, transcript);
  id.verifications = evo.verifications;
  id.pass_probability = evo.pass_probability;
  id.status = evo.status;
  if (evo.status != RunStatus::Completed) return id;

  Rng* sampler = mode == RunMode::Postselected ? nullptr : &rng;
  const bool x_basis = measure_qubit(evo.probe, PureQubit::zero(), sampler) == 1;
  const PureQubit basis0 = x_basis ? PureQubit::plus() : PureQubit::zero();
  const int outcome = measure_qubit(wallet[qubit_index], basis0, sampler);
  wallet[qubit_index] = outcome == 0 ? basis0 : basis0.orthogonal();
  if (x_basis) {
    id.symbol = outcome == 0 ? WiesnerSymbol::Plus : WiesnerSymbol::Minus;
  } else {
    id.symbol = outcome == 0 ? WiesnerSymbol::Zero : WiesnerSymbol::One;
  }
  return id;
}

PmKeyRecovery pm_recover_key(Oracle& oracle, std::vector<PureQubit>& wallet, unsigned long long rounds, RunMode mode,
                             Rng& rng) {
  PmKeyRecovery out;
  for (std::size_t i = 0; i < wallet.size(); ++i) {
    const auto id = pm_identify_wiesner(oracle, wallet, i, rounds, mode, rng);
    out.verifications += id.verifications;
    if (id.status != RunStatus::Completed) {
      out.status = id.status;
      return out;
    }
    out.key.push_back(*id.symbol);
  }
  return out;
}

DensityQubit reconstruct_qubit(const std::array<double, 3>& estimates) {
  DensityQubit rho{estimates};
  const double r = rho.radius();
  if (r > 1.0)
    for (auto& x : rho.bloch) x /= r;
  return rho;
}

TomoParams forge_schedule(std::size_t n, const ForgeOptions& options) {
  if (n == 0) throw std::invalid_argument("forge_schedule: empty note");
  if (!(options.f_budget > 0.0 && options.f_budget <= 1.0)) throw std::invalid_argument("forge_schedule: f_budget must lie in (0, 1]");
  if (!(options.nu_final > 0.0)) throw std::invalid_argument("forge_schedule: nu_final must be positive");
  TomoParams t;
  t.eta = options.eta;
  t.nu = options.nu_final / (6.0 * static_cast<double>(n));
  t.m = chernoff_m(t.eta, t.nu);
  t.rounds = options.rounds.value_or(static_cast<unsigned long long>(
      std::ceil(kCatchBudgetConstant * static_cast<double>(t.m) * static_cast<double>(n) / options.f_budget)));
  t.validate();
  return t;
}

Reconstruction pm_forge_note(Oracle& oracle, std::vector<PureQubit>& wallet, const ForgeOptions& options, Rng& rng) {
  Reconstruction out;
  out.schedule = forge_schedule(wallet.size(), options);
  const std::array<Operator2, 3> paulis{Operator2::pauli_x(), Operator2::pauli_y(), Operator2::pauli_z()};
  for (std::size_t i = 0; i < wallet.size(); ++i) {
    std::array<double, 3> est{};
    for (std::size_t j = 0; j < 3; ++j) {
      ExpectationEstimate e;
      try {
        e = estimate_expectation(oracle, wallet, i, paulis[j], out.schedule, options.mode, rng);
      } catch (const EstimationFailure&) {
        out.status = RunStatus::Caught;
        out.verifications += out.schedule.rounds;
        return out;
      }
      out.verifications += e.verifications;
      if (!e.taylor_guard_ok) ++out.taylor_guard_violations;
      if (e.status != RunStatus::Completed) {
        out.status = e.status;
        return out;
      }
      est[j] = e.estimate;
    }
    out.estimates.push_back(est);
    out.qubits.push_back(reconstruct_qubit(est));
  }
  return out;
}

bool FidelityChain::holds(double slack) const {
  return fidelity + slack >= union_bound && union_bound + slack >= trace_bound &&
         trace_bound + slack >= raw_trace_bound && raw_trace_bound + slack >= component_bound;
}

FidelityChain fidelity_chain(const std::vector<std::array<double, 3>>& estimates, const std::vector<PureQubit>& truth) {
  if (estimates.size() != truth.size()) throw std::invalid_argument("fidelity_chain: size mismatch");
  FidelityChain c{1.0, 1.0, 1.0, 1.0, 1.0};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const DensityQubit raw{estimates[i]};
    const DensityQubit rho = reconstruct_qubit(estimates[i]);
    const DensityQubit alpha = DensityQubit::from_pure(truth[i]);
    const double f = fidelity_pure(rho, truth[i]);
    c.fidelity *= f;
    c.union_bound -= 1.0 - f;
    c.trace_bound -= trace_distance(rho, alpha);
    c.raw_trace_bound -= 2.0 * trace_distance(raw, alpha);
    for (int j = 0; j < 3; ++j) c.component_bound -= std::abs(estimates[i][j] - alpha.bloch[j]);
  }
  return c;
}

double product_fidelity(const std::vector<DensityQubit>& rho, const std::vector<PureQubit>& truth) {
  if (rho.size() != truth.size()) throw std::invalid_argument("product_fidelity: size mismatch");
  double f = 1.0;
  for (std::size_t i = 0; i < rho.size(); ++i) f *= fidelity_pure(rho[i], truth[i]);
  return f;
}

}  // namespace qmoney
