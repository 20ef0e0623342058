#include "qmoney/attack_common.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "qmoney/format.hpp"
#include "qmoney/rng.hpp"

namespace qmoney {

std::string mode_name(RunMode m) {
  switch (m) {
    case RunMode::Sampled: return "sampled";
    case RunMode::Postselected: return "postselected";
    case RunMode::FastForward: return "fastforward";
  }
  return "?";
}

RunMode mode_from_name(const std::string& name) {
  if (name == "sampled") return RunMode::Sampled;
  if (name == "postselected") return RunMode::Postselected;
  if (name == "fastforward" || name == "fast-forward") return RunMode::FastForward;
  throw std::invalid_argument("unknown mode '" + name + "'");
}

std::string status_name(RunStatus s) {
  switch (s) {
    case RunStatus::Completed: return "completed";
    case RunStatus::Caught: return "caught";
    case RunStatus::Reissued: return "reissued";
  }
  return "?";
}

std::string Transcript::to_jsonl() const {
  std::ostringstream out;
  for (const auto& r : records_) {
    out << "{\"round\":" << r.round << ",\"perturbation_gate\":\"" << r.perturbation_gate
        << "\",\"pass\":" << (r.pass ? "true" : "false");
    if (r.probe) {
      out << ",\"probe_state\":[" << fmt12(r.probe->a0.real()) << ',' << fmt12(r.probe->a0.imag())
          << ',' << fmt12(r.probe->a1.real()) << ',' << fmt12(r.probe->a1.imag()) << ']';
    }
    out << "}\n";
  }
  return out.str();
}

std::pair<PureQubit, PureQubit> factor_product(const JointState& joint, double tol) {
  const auto& c = joint.c;
  if (std::abs(c[0] * c[3] - c[1] * c[2]) > tol) throw std::invalid_argument("factor_product: state is entangled");
  int k = 0;
  for (int i = 1; i < 4; ++i)
    if (std::abs(c[i]) > std::abs(c[k])) k = i;
  const int p = k / 2;
  const int m = k % 2;
  const PureQubit money = PureQubit{c[2 * p], c[2 * p + 1]}.normalized();
  const Amplitude scale = money.component(m);
  const PureQubit probe{c[m] / scale, c[2 + m] / scale};
  return {probe.normalized(), money};
}

int measure_qubit(const PureQubit& s, const PureQubit& basis0, Rng* rng) {
  const double p0 = std::norm(inner(basis0, s)) / s.norm2();
  if (rng == nullptr) return p0 >= 0.5 ? 0 : 1;
  return rng->uniform() < p0 ? 0 : 1;
}

double prob_one(const PureQubit& s) { return std::norm(s.a1) / s.norm2(); }

}  // namespace qmoney
