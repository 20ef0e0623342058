#include "qmoney/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include "qmoney/bt_attack.hpp"
#include "qmoney/format.hpp"
#include "qmoney/pm_attack.hpp"

namespace qmoney::analytics {

namespace {

constexpr double kPi = std::numbers::pi;

double delta_for(unsigned long long rounds) { return kPi / (2.0 * static_cast<double>(rounds)); }

}  // namespace

OutcomeTriple bt_outcomes(double theta, unsigned long long rounds) {
  if (rounds == 0) throw std::invalid_argument("bt_outcomes: N must be at least 1");
  const TransferMatrixT t(theta, delta_for(rounds));
  const PureQubit v = t.power(rounds) * PureQubit::zero();
  OutcomeTriple out;
  out.p_pass_probe0 = std::norm(v.a0);
  out.p_pass_probe1 = std::norm(v.a1);
  out.p_caught = std::max(0.0, 1.0 - out.p_pass_probe0 - out.p_pass_probe1);
  return out;
}

std::vector<double> log_grid(double lo, double hi, std::size_t points) {
  if (points < 2 || !(lo > 0.0 && hi > lo)) throw std::invalid_argument("log_grid: need 0 < lo < hi and 2+ points");
  std::vector<double> g(points);
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
  return g;
}

std::vector<double> default_theta_sqrt_n_grid() { return log_grid(1e-2, 1e1, 200); }

std::vector<SweepRow> sweep_theta(unsigned long long rounds, const std::vector<double>& theta_sqrt_n) {
  const double root = std::sqrt(static_cast<double>(rounds));
  std::vector<SweepRow> rows;
  rows.reserve(theta_sqrt_n.size());
  for (double x : theta_sqrt_n) {
    const double theta = x / root;
    if (theta > kPi / 2.0) throw std::invalid_argument("sweep_theta: theta exceeds pi/2 for this N");
    rows.push_back({theta, rounds, delta_for(rounds), x, bt_outcomes(theta, rounds)});
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kSweepCsvHeader << '\n';
  for (const auto& r : rows) {
    out << fmt12(r.theta) << ',' << r.rounds << ',' << fmt12(r.delta) << ',' << fmt12(r.theta_sqrt_n) << ','
        << fmt12(r.outcome.p_caught) << ',' << fmt12(r.outcome.p_pass_probe0) << ','
        << fmt12(r.outcome.p_pass_probe1) << '\n';
  }
}

double sweep_sup_distance(const std::vector<SweepRow>& a, const std::vector<SweepRow>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("sweep_sup_distance: grids differ");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d = std::max({d, std::abs(a[i].outcome.p_caught - b[i].outcome.p_caught),
                  std::abs(a[i].outcome.p_pass_probe0 - b[i].outcome.p_pass_probe0),
                  std::abs(a[i].outcome.p_pass_probe1 - b[i].outcome.p_pass_probe1)});
  }
  return d;
}

nlohmann::json BoundCheck::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"theta", fmt12(r.theta)}, {"N", r.rounds}, {"deficit", fmt12(r.deficit)},
                         {"scale", fmt12(r.scale)}, {"ratio", fmt12(r.ratio)}});
  }
  return {{"c_fit", fmt12(c_fit)}, {"ok", ok}, {"violations", violations}, {"rows", rows_json}};
}

BoundCheck bound_0TN0_check(const std::vector<double>& thetas, const std::vector<unsigned long long>& rounds) {
  BoundCheck out;
  for (double theta : thetas) {
    const double q = std::cos(2.0 * theta);
    if (!(q < 1.0)) throw std::invalid_argument("bound_0TN0_check: theta = 0 gives q = 1");
    for (auto n : rounds) {
      const double delta = delta_for(n);
      const TransferMatrixT t(theta, delta);
      const double amp = (t.power(n) * PureQubit::zero()).a0.real();
      BoundRow row{theta, n, 1.0 - amp, static_cast<double>(n) * delta * delta / (1.0 - q), 0.0};
      row.ratio = row.deficit / row.scale;
      out.c_fit = std::max(out.c_fit, row.ratio);
      out.rows.push_back(row);
    }
  }
  out.ok = std::isfinite(out.c_fit) && out.c_fit <= kCFitCap;
  for (const auto& r : out.rows)
    if (r.deficit > out.c_fit * r.scale * (1.0 + 1e-12)) ++out.violations;
  return out;
}

std::vector<double> default_bound_thetas() {
  std::vector<double> g(27);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = 0.1 + 0.05 * static_cast<double>(i);
  return g;
}

std::vector<unsigned long long> default_rounds_grid() { return {100, 1000, 10000}; }

nlohmann::json PmScalingReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"N", r.rounds},
                         {"expA", fmt12(r.expectation)},
                         {"N_eig_err_minus", fmt12(r.eig_err_minus)},
                         {"N_eig_err_plus", fmt12(r.eig_err_plus)},
                         {"N_pass_deficit", fmt12(r.pass_deficit)},
                         {"N_state_err", fmt12(r.state_err)}});
  }
  return {{"max_scaled", fmt12(max_scaled)}, {"bounded", bounded}, {"rows", rows_json}};
}

PmScalingReport pm_scaling_check(const Operator2& observable, const std::vector<PureQubit>& money_states,
                                 double coupling, const std::vector<unsigned long long>& rounds,
                                 const PureQubit& phi0) {
  if (!is_dichotomic(observable)) throw std::invalid_argument("pm_scaling_check: observable must be dichotomic");
  if (rounds.empty()) throw std::invalid_argument("pm_scaling_check: empty N grid");
  PmScalingReport out;
  out.bounded = true;
  for (const auto& money : money_states) {
    const double a = std::clamp(expectation(observable, money), -1.0, 1.0);
    const PureQubit target = Operator2::x_phase(coupling * a) * phi0;
    const Amplitude ideal_minus = std::polar(1.0, -coupling * a);
    const Amplitude ideal_plus = std::polar(1.0, coupling * a);
    std::vector<PmScalingRow> per_state;
    for (auto n : rounds) {
      const double nd = static_cast<double>(n);
      const RoundMapW w(coupling / nd, a);
      const PureQubit v = w.power(n) * phi0;
      const double p_pass = v.norm2();
      const PureQubit phi_n = v.normalized();
      PmScalingRow row;
      row.rounds = n;
      row.expectation = a;
      row.eig_err_minus = nd * std::abs(std::pow(w.eigenvalue_minus(), nd) - ideal_minus);
      row.eig_err_plus = nd * std::abs(std::pow(w.eigenvalue_plus(), nd) - ideal_plus);
      row.pass_deficit = nd * (1.0 - p_pass);
      row.state_err = nd * std::sqrt(std::norm(phi_n.a0 - target.a0) + std::norm(phi_n.a1 - target.a1));
      out.max_scaled = std::max({out.max_scaled, row.eig_err_minus, row.eig_err_plus, row.pass_deficit, row.state_err});
      per_state.push_back(row);
    }
    // No growth trend: the largest-N value may not exceed the smallest-N
    // value by more than 10% (plus roundoff, which N amplifies).
    const auto& lo = per_state.front();
    const auto& hi = per_state.back();
    auto grows = [](double small_n, double large_n) { return large_n > 1.1 * small_n + 1e-6; };
    if (grows(lo.eig_err_minus, hi.eig_err_minus) || grows(lo.eig_err_plus, hi.eig_err_plus) ||
        grows(lo.pass_deficit, hi.pass_deficit) || grows(lo.state_err, hi.state_err))
      out.bounded = false;
    out.rows.insert(out.rows.end(), per_state.begin(), per_state.end());
  }
  return out;
}

}  // namespace qmoney::analytics
