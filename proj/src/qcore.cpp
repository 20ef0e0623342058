#include "qmoney/qcore.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qmoney/rng.hpp"

namespace qmoney {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr Amplitude kI{0.0, 1.0};

}  // namespace

PureQubit PureQubit::plus() { return {kInvSqrt2, kInvSqrt2}; }
PureQubit PureQubit::minus() { return {kInvSqrt2, -kInvSqrt2}; }
PureQubit PureQubit::y_plus() { return {kInvSqrt2, Amplitude{0.0, kInvSqrt2}}; }
PureQubit PureQubit::y_minus() { return {kInvSqrt2, Amplitude{0.0, -kInvSqrt2}}; }

PureQubit PureQubit::from_angles(double theta, double phi) {
  return {std::cos(theta / 2.0), std::polar(std::sin(theta / 2.0), phi)};
}

PureQubit PureQubit::random(Rng& rng) {
  // Haar: normalize a complex Gaussian vector.
  PureQubit s{Amplitude{rng.normal(), rng.normal()}, Amplitude{rng.normal(), rng.normal()}};
  return s.normalized();
}

PureQubit PureQubit::normalized() const {
  const double n = std::sqrt(norm2());
  if (n == 0.0) throw std::invalid_argument("cannot normalize the zero vector");
  return {a0 / n, a1 / n};
}

PureQubit PureQubit::orthogonal() const { return {-std::conj(a1), std::conj(a0)}; }

Amplitude inner(const PureQubit& a, const PureQubit& b) {
  return std::conj(a.a0) * b.a0 + std::conj(a.a1) * b.a1;
}

bool same_ray(const PureQubit& a, const PureQubit& b, double tol) {
  return std::abs(1.0 - std::abs(inner(a, b))) <= tol;
}

Operator2 Operator2::rotation(double delta) {
  const double c = std::cos(delta);
  const double s = std::sin(delta);
  return {c, -s, s, c};
}

Operator2 Operator2::x_phase(double angle) {
  const double c = std::cos(angle);
  const Amplitude s{0.0, -std::sin(angle)};
  return {c, s, s, c};
}

Operator2 Operator2::projector(const PureQubit& s) {
  return {s.a0 * std::conj(s.a0), s.a0 * std::conj(s.a1), s.a1 * std::conj(s.a0),
          s.a1 * std::conj(s.a1)};
}

Operator2 Operator2::adjoint() const {
  return {std::conj(m_[0]), std::conj(m_[2]), std::conj(m_[1]), std::conj(m_[3])};
}

double Operator2::unitarity_defect() const {
  return (adjoint() * (*this)).max_abs_diff(identity());
}

double Operator2::hermiticity_defect() const { return adjoint().max_abs_diff(*this); }

double Operator2::max_abs_diff(const Operator2& other) const {
  double d = 0.0;
  for (int i = 0; i < 4; ++i) d = std::max(d, std::abs(m_[i] - other.m_[i]));
  return d;
}

Operator2 operator*(const Operator2& a, const Operator2& b) {
  return {a.m_[0] * b.m_[0] + a.m_[1] * b.m_[2], a.m_[0] * b.m_[1] + a.m_[1] * b.m_[3],
          a.m_[2] * b.m_[0] + a.m_[3] * b.m_[2], a.m_[2] * b.m_[1] + a.m_[3] * b.m_[3]};
}

Operator2 operator+(const Operator2& a, const Operator2& b) {
  return {a.m_[0] + b.m_[0], a.m_[1] + b.m_[1], a.m_[2] + b.m_[2], a.m_[3] + b.m_[3]};
}

Operator2 operator-(const Operator2& a, const Operator2& b) {
  return {a.m_[0] - b.m_[0], a.m_[1] - b.m_[1], a.m_[2] - b.m_[2], a.m_[3] - b.m_[3]};
}

Operator2 operator*(Amplitude s, const Operator2& a) {
  return {s * a.m_[0], s * a.m_[1], s * a.m_[2], s * a.m_[3]};
}

PureQubit operator*(const Operator2& a, const PureQubit& v) {
  return {a.m_[0] * v.a0 + a.m_[1] * v.a1, a.m_[2] * v.a0 + a.m_[3] * v.a1};
}

std::optional<Eigen2> eigen(const Operator2& m, double min_gap) {
  const Amplitude half_trace = m.trace() / 2.0;
  // Discriminant as ((a - d)/2)^2 + bc avoids cancelling tr^2/4 against det.
  const Amplitude half_gap = (m(0, 0) - m(1, 1)) / 2.0;
  const Amplitude root = std::sqrt(half_gap * half_gap + m(0, 1) * m(1, 0));
  if (std::abs(2.0 * root) < min_gap) return std::nullopt;
  Eigen2 out;
  out.values = {half_trace + root, half_trace - root};
  for (int k = 0; k < 2; ++k) {
    const Amplitude lambda = out.values[k];
    const Amplitude a = m(0, 0) - lambda;
    const Amplitude b = m(0, 1);
    const Amplitude c = m(1, 0);
    const Amplitude d = m(1, 1) - lambda;
    // Pick the better-conditioned row of (M - lambda I).
    PureQubit v;
    if (std::abs(a) + std::abs(b) >= std::abs(c) + std::abs(d)) {
      v = (std::abs(a) + std::abs(b) > 0.0) ? PureQubit{b, -a} : PureQubit{1.0, 0.0};
    } else {
      v = PureQubit{d, -c};
    }
    out.vectors[k] = v.normalized();
  }
  return out;
}

Operator2 power_by_squaring(Operator2 m, unsigned long long n) {
  Operator2 result = Operator2::identity();
  while (n > 0) {
    if (n & 1ULL) result = result * m;
    n >>= 1;
    if (n > 0) m = m * m;
  }
  return result;
}

Operator2 power(const Operator2& m, unsigned long long n) {
  if (n <= 2) return power_by_squaring(m, n);
  const auto eig = eigen(m);
  if (!eig) return power_by_squaring(m, n);
  const auto& v = eig->vectors;
  const Amplitude det_v = v[0].a0 * v[1].a1 - v[1].a0 * v[0].a1;
  // Nearly parallel eigenvectors make V^-1 ill-conditioned.
  if (std::abs(det_v) < 1e-4) return power_by_squaring(m, n);
  const Operator2 basis{v[0].a0, v[1].a0, v[0].a1, v[1].a1};
  const Operator2 inverse = (1.0 / det_v) * Operator2{v[1].a1, -v[1].a0, -v[0].a1, v[0].a0};
  const double nd = static_cast<double>(n);
  const Operator2 diag{std::pow(eig->values[0], nd), 0.0, 0.0, std::pow(eig->values[1], nd)};
  return basis * diag * inverse;
}

PureQubit rotate(const PureQubit& state, double delta) {
  return Operator2::rotation(delta) * state;
}

JointState JointState::product(const PureQubit& probe, const PureQubit& money) {
  return {{probe.a0 * money.a0, probe.a0 * money.a1, probe.a1 * money.a0, probe.a1 * money.a1}};
}

double JointState::norm2() const {
  double s = 0.0;
  for (const auto& x : c) s += std::norm(x);
  return s;
}

JointState JointState::normalized() const {
  const double n = std::sqrt(norm2());
  if (n == 0.0) throw std::invalid_argument("cannot normalize the zero vector");
  JointState out = *this;
  for (auto& x : out.c) x /= n;
  return out;
}

Operator4 Operator4::identity() {
  Operator4 out;
  for (int i = 0; i < 4; ++i) out(i, i) = 1.0;
  return out;
}

Operator4 Operator4::kron(const Operator2& probe_op, const Operator2& money_op) {
  Operator4 out;
  for (int pr = 0; pr < 2; ++pr)
    for (int mr = 0; mr < 2; ++mr)
      for (int pc = 0; pc < 2; ++pc)
        for (int mc = 0; mc < 2; ++mc)
          out(2 * pr + mr, 2 * pc + mc) = probe_op(pr, pc) * money_op(mr, mc);
  return out;
}

Operator4 Operator4::adjoint() const {
  Operator4 out;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out(i, j) = std::conj((*this)(j, i));
  return out;
}

double Operator4::unitarity_defect() const {
  return (adjoint() * (*this)).max_abs_diff(identity());
}

double Operator4::max_abs_diff(const Operator4& other) const {
  double d = 0.0;
  for (int i = 0; i < 16; ++i) d = std::max(d, std::abs(m_[i] - other.m_[i]));
  return d;
}

Operator4 operator*(const Operator4& a, const Operator4& b) {
  Operator4 out;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      Amplitude s = 0.0;
      for (int k = 0; k < 4; ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

Operator4 operator+(const Operator4& a, const Operator4& b) {
  Operator4 out;
  for (int i = 0; i < 16; ++i) out.m_[i] = a.m_[i] + b.m_[i];
  return out;
}

Operator4 operator*(Amplitude s, const Operator4& a) {
  Operator4 out;
  for (int i = 0; i < 16; ++i) out.m_[i] = s * a.m_[i];
  return out;
}

JointState operator*(const Operator4& a, const JointState& v) {
  JointState out{{0.0, 0.0, 0.0, 0.0}};
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k) out.c[i] += a(i, k) * v.c[k];
  return out;
}

Operator4 controlled(const Operator2& p) {
  Operator4 out;
  out(0, 0) = 1.0;
  out(1, 1) = 1.0;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) out(2 + r, 2 + c) = p(r, c);
  return out;
}

Operator2 contract_money(const Operator4& u, const PureQubit& bra, const PureQubit& ket) {
  Operator2 out;
  for (int pr = 0; pr < 2; ++pr)
    for (int pc = 0; pc < 2; ++pc) {
      Amplitude s = 0.0;
      for (int mr = 0; mr < 2; ++mr)
        for (int mc = 0; mc < 2; ++mc)
          s += std::conj(bra.component(mr)) * u(2 * pr + mr, 2 * pc + mc) * ket.component(mc);
      out(pr, pc) = s;
    }
  return out;
}

namespace {

Branch project_on(const JointState& joint, const PureQubit& basis_state) {
  // Probe amplitudes of (I ⊗ <basis_state|)|joint>.
  const Amplitude b0 = std::conj(basis_state.a0);
  const Amplitude b1 = std::conj(basis_state.a1);
  const PureQubit probe{b0 * joint.c[0] + b1 * joint.c[1], b0 * joint.c[2] + b1 * joint.c[3]};
  Branch out;
  out.probability = probe.norm2();
  if (out.probability >= kEmptyBranch) out.probe = probe.normalized();
  return out;
}

}  // namespace

MeasurementBranches measure_money(const JointState& joint, const PureQubit& key) {
  return {project_on(joint, key), project_on(joint, key.orthogonal())};
}

DensityQubit DensityQubit::from_pure(const PureQubit& s) {
  const Amplitude off = std::conj(s.a0) * s.a1;
  return {{2.0 * off.real(), 2.0 * off.imag(), std::norm(s.a0) - std::norm(s.a1)}};
}

double DensityQubit::radius() const {
  return std::sqrt(bloch[0] * bloch[0] + bloch[1] * bloch[1] + bloch[2] * bloch[2]);
}

double fidelity_pure(const DensityQubit& rho, const PureQubit& target) {
  if (!rho.is_positive()) throw std::invalid_argument("fidelity_pure: density operator is not positive");
  const DensityQubit t = DensityQubit::from_pure(target.normalized());
  double dot = 0.0;
  for (int i = 0; i < 3; ++i) dot += rho.bloch[i] * t.bloch[i];
  return std::clamp(0.5 * (1.0 + dot), 0.0, 1.0);
}

double trace_distance(const DensityQubit& a, const DensityQubit& b) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += (a.bloch[i] - b.bloch[i]) * (a.bloch[i] - b.bloch[i]);
  return 0.5 * std::sqrt(s);
}

double expectation(const Operator2& a, const PureQubit& s) { return inner(s, a * s).real(); }

}  // namespace qmoney
