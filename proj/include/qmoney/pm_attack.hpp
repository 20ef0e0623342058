#pragma once

// Protective-measurement attack: a weak coupling exp(-i delta sigma_x ⊗ A)
// followed by verification, repeated N times, rotates the probe by an angle
// proportional to <A> while each round is caught with probability O(delta^2).
// Repeating that estimate for sigma_x, sigma_y, sigma_z on every qubit gives
// single-copy tomography of a product-state note.

#include <array>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "qmoney/attack_common.hpp"
#include "qmoney/bank.hpp"
#include "qmoney/qcore.hpp"

namespace qmoney {

class Rng;

// Coupling used by the tomography estimator.
inline constexpr double kTomographyCoupling = std::numbers::pi / 8.0;
// Catch-budget constant K_N in N = K_N m n / f. A round is caught with
// probability at most sin^2(c/N), so one estimate costs at most c^2/N and
// 3mn estimates at most 3 c^2 m n / N.
inline constexpr double kCatchBudgetConstant = 3.0 * kTomographyCoupling * kTomographyCoupling;

// Hermitian with eigenvalues +1 and -1.
bool is_dichotomic(const Operator2& a, double tol = 1e-12);

struct PmParams {
  double coupling = std::numbers::pi / 2.0;
  unsigned long long rounds = 1;
  Operator2 observable = Operator2::pauli_x();
  PureQubit probe_init = PureQubit::zero();

  double delta() const { return coupling / static_cast<double>(rounds); }
  void validate() const;
};

// exp(-i delta sigma_x) ⊗ P + exp(+i delta sigma_x) ⊗ P⊥ with P = (I + A)/2.
Operator4 coupling_unitary(double delta, const Operator2& observable);

// Postselected probe map cos(delta) I - i sin(delta) <A> sigma_x.
class RoundMapW {
 public:
  RoundMapW(double delta, double expectation);

  const Operator2& matrix() const { return m_; }
  double delta() const { return delta_; }
  double expectation() const { return exp_a_; }
  // cos(delta) -/+ i <A> sin(delta), with eigenvectors |+> and |->.
  Amplitude eigenvalue_minus() const;
  Amplitude eigenvalue_plus() const;
  Operator2 power(unsigned long long n) const;

 private:
  double delta_;
  double exp_a_;
  Operator2 m_;
};

RoundMapW round_map(double delta, double expectation);

struct PmEvolution {
  RunStatus status = RunStatus::Completed;
  PureQubit probe;
  double pass_probability = 1.0;
  std::uint64_t verifications = 0;
};

PmEvolution pm_evolve(Oracle& oracle, std::vector<PureQubit>& wallet, std::size_t qubit_index,
                      const PmParams& params, RunMode mode, Rng& rng, Transcript* transcript = nullptr);

// |<y+|probe>|^2 with <y+| = (<0| - i<1|)/sqrt2
double sigma_y_pass_prob(const PureQubit& probe);

// ceil(336 ln(2/eta) / nu^2)
unsigned long long chernoff_m(double eta, double nu);

// clamp((4/pi) asin(1 - 2p), [-1, 1])
double expectation_from_y_frequency(double p_y_plus);

struct TomoParams {
  double eta = 0.1;
  double nu = 0.2;
  unsigned long long m = 0;
  unsigned long long rounds = 0;

  // m from chernoff_m(eta, nu).
  static TomoParams with_rounds(double eta, double nu, unsigned long long rounds);
  double nu_final(std::size_t n) const { return 6.0 * static_cast<double>(n) * nu; }
  // Rounds should dominate repetitions (N >> m).
  bool rounds_guidance_ok() const { return rounds >= 10 * m; }
  void validate() const;
};

struct ExpectationEstimate {
  RunStatus status = RunStatus::Completed;
  double estimate = 0.0;
  double p_y_plus = 0.0;
  std::uint64_t caught_count = 0;
  std::uint64_t samples_used = 0;
  std::uint64_t verifications = 0;
  // |1 - 2p| <= 3/4, the regime the error analysis assumes.
  bool taylor_guard_ok = true;
};

// m repetitions of pm_evolve (c = pi/8, probe |0>) each followed by a sigma_y
// measurement of the probe. Stops at the first catch; throws
// EstimationFailure when caught before any repetition completed.
ExpectationEstimate estimate_expectation(Oracle& oracle, std::vector<PureQubit>& wallet,
                                         std::size_t qubit_index, const Operator2& observable,
                                         const TomoParams& tomo, RunMode mode, Rng& rng);

// A = sigma_x, c = pi/2, probe |0>; the probe decides the basis, then the
// money qubit is measured in it.
IdentifiedSymbol pm_identify_wiesner(Oracle& oracle, std::vector<PureQubit>& wallet,
                                     std::size_t qubit_index, unsigned long long rounds,
                                     RunMode mode, Rng& rng, Transcript* transcript = nullptr);

struct PmKeyRecovery {
  RunStatus status = RunStatus::Completed;
  std::vector<WiesnerSymbol> key;
  std::uint64_t verifications = 0;
};

PmKeyRecovery pm_recover_key(Oracle& oracle, std::vector<PureQubit>& wallet, unsigned long long rounds,
                             RunMode mode, Rng& rng);

// Bloch vector (ex, ey, ez), radially projected into the unit ball.
DensityQubit reconstruct_qubit(const std::array<double, 3>& estimates);

struct Reconstruction {
  RunStatus status = RunStatus::Completed;
  std::vector<std::array<double, 3>> estimates;
  std::vector<DensityQubit> qubits;
  TomoParams schedule;
  std::uint64_t verifications = 0;
  std::uint64_t taylor_guard_violations = 0;
};

struct ForgeOptions {
  double eta = 0.1;
  double nu_final = 0.3;
  double f_budget = 0.1;
  // Overrides N = ceil(K_N m n / f_budget) when set.
  std::optional<unsigned long long> rounds;
  RunMode mode = RunMode::FastForward;
};

// Per-observable nu = nu_final / (6n); schedule as above.
TomoParams forge_schedule(std::size_t n, const ForgeOptions& options);

Reconstruction pm_forge_note(Oracle& oracle, std::vector<PureQubit>& wallet, const ForgeOptions& options,
                             Rng& rng);

// Each step of the fidelity lower-bound chain for a product reconstruction.
struct FidelityChain {
  double fidelity = 0.0;             // prod F(rho_i, alpha_i)
  double union_bound = 0.0;          // 1 - sum (1 - F_i)
  double trace_bound = 0.0;          // 1 - sum D(rho_i, alpha_i)
  double raw_trace_bound = 0.0;      // 1 - sum 2 D(rho'_i, alpha_i)
  double component_bound = 0.0;      // 1 - sum_i sum_j |est_ij - <sigma_j>_i|

  bool holds(double slack = 1e-12) const;
};

FidelityChain fidelity_chain(const std::vector<std::array<double, 3>>& estimates,
                             const std::vector<PureQubit>& truth);

double product_fidelity(const std::vector<DensityQubit>& rho, const std::vector<PureQubit>& truth);

}  // namespace qmoney
