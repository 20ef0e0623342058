#pragma once

// Matrix-power numerics for the reflection attack and the weak-coupling map.

#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qmoney/qcore.hpp"

namespace qmoney::analytics {

// Shipped fit of the constant in 1 - <0|T^N|0> <= c N delta^2 / (1 - q),
// rounded up from the value bound_0TN0_check reports on the default grid.
inline constexpr double kDefaultCFit = 1.0;

struct OutcomeTriple {
  double p_caught = 0.0;
  double p_pass_probe0 = 0.0;
  double p_pass_probe1 = 0.0;

  double sum() const { return p_caught + p_pass_probe0 + p_pass_probe1; }
};

// v = T^N |0> with delta = pi / (2N).
OutcomeTriple bt_outcomes(double theta, unsigned long long rounds);

struct SweepRow {
  double theta = 0.0;
  unsigned long long rounds = 0;
  double delta = 0.0;
  double theta_sqrt_n = 0.0;
  OutcomeTriple outcome;
};

// points log-spaced values in [lo, hi].
std::vector<double> log_grid(double lo, double hi, std::size_t points);
std::vector<double> default_theta_sqrt_n_grid();

std::vector<SweepRow> sweep_theta(unsigned long long rounds, const std::vector<double>& theta_sqrt_n);

inline constexpr const char* kSweepCsvHeader = "theta,N,delta,theta_sqrtN,p_caught,p_probe0,p_probe1";
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

// Largest pointwise difference of the three outcome curves.
double sweep_sup_distance(const std::vector<SweepRow>& a, const std::vector<SweepRow>& b);

struct BoundRow {
  double theta = 0.0;
  unsigned long long rounds = 0;
  double deficit = 0.0;  // 1 - <0|T^N|0>
  double scale = 0.0;    // N delta^2 / (1 - q)
  double ratio = 0.0;    // deficit / scale
};

struct BoundCheck {
  double c_fit = 0.0;
  bool ok = false;  // finite c_fit no larger than the cap
  std::vector<BoundRow> rows;
  std::size_t violations = 0;  // rows with deficit > c_fit * scale (always 0 when ok)

  nlohmann::json to_json() const;
};

inline constexpr double kCFitCap = 1e3;

BoundCheck bound_0TN0_check(const std::vector<double>& thetas, const std::vector<unsigned long long>& rounds);
std::vector<double> default_bound_thetas();
std::vector<unsigned long long> default_rounds_grid();

struct PmScalingRow {
  unsigned long long rounds = 0;
  double expectation = 0.0;
  double eig_err_minus = 0.0;   // N |lambda_-^N - e^{-ic<A>}|
  double eig_err_plus = 0.0;    // N |lambda_+^N - e^{+ic<A>}|
  double pass_deficit = 0.0;    // N (1 - p_pass)
  double state_err = 0.0;       // N ||phi_N - e^{-ic<A>sigma_x} phi_0||
};

struct PmScalingReport {
  std::vector<PmScalingRow> rows;
  double max_scaled = 0.0;
  // Scaled columns do not grow from the smallest to the largest N.
  bool bounded = false;

  nlohmann::json to_json() const;
};

// Closed-form W^N per money state (probe starts in phi0).
PmScalingReport pm_scaling_check(const Operator2& observable, const std::vector<PureQubit>& money_states, double coupling,
                                 const std::vector<unsigned long long>& rounds, const PureQubit& phi0 = PureQubit::zero());

}  // namespace qmoney::analytics
