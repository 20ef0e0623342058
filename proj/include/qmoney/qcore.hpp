#pragma once

// Exact one- and two-qubit linear algebra.
//
// Tensor ordering is probe-first everywhere: a JointState stores
// c[2*probe + money], i.e. (c00, c01, c10, c11) for probe ⊗ money.
// States are compared up to global phase (same_ray), never component-wise.

#include <array>
#include <complex>
#include <optional>

namespace qmoney {

class Rng;

using Amplitude = std::complex<double>;

inline constexpr double kNormTolerance = 1e-12;
// Branches with probability below this carry no conditional state.
inline constexpr double kEmptyBranch = 1e-15;

struct PureQubit {
  Amplitude a0{1.0, 0.0};
  Amplitude a1{0.0, 0.0};

  static PureQubit zero() { return {1.0, 0.0}; }
  static PureQubit one() { return {0.0, 1.0}; }
  static PureQubit plus();
  static PureQubit minus();
  // (|0> + i|1>)/sqrt2, the +1 eigenstate of sigma_y.
  static PureQubit y_plus();
  static PureQubit y_minus();
  // cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>
  static PureQubit from_angles(double theta, double phi);
  static PureQubit random(Rng& rng);

  double norm2() const { return std::norm(a0) + std::norm(a1); }
  PureQubit normalized() const;
  // A state orthogonal to this one (-conj(a1), conj(a0)).
  PureQubit orthogonal() const;
  Amplitude component(int index) const { return index == 0 ? a0 : a1; }
};

// <a|b>
Amplitude inner(const PureQubit& a, const PureQubit& b);
// |<a|b>| == 1 within tol, for normalized a and b.
bool same_ray(const PureQubit& a, const PureQubit& b, double tol = 1e-10);

class Operator2 {
 public:
  Operator2() = default;
  Operator2(Amplitude m00, Amplitude m01, Amplitude m10, Amplitude m11)
      : m_{m00, m01, m10, m11} {}

  static Operator2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static Operator2 pauli_x() { return {0.0, 1.0, 1.0, 0.0}; }
  static Operator2 pauli_y() { return {0.0, Amplitude{0, -1}, Amplitude{0, 1}, 0.0}; }
  static Operator2 pauli_z() { return {1.0, 0.0, 0.0, -1.0}; }
  // Counterclockwise real rotation [[cos, -sin], [sin, cos]].
  static Operator2 rotation(double delta);
  // exp(-i angle sigma_x)
  static Operator2 x_phase(double angle);
  // |s><s|
  static Operator2 projector(const PureQubit& s);

  Amplitude operator()(int row, int col) const { return m_[2 * row + col]; }
  Amplitude& operator()(int row, int col) { return m_[2 * row + col]; }

  Operator2 adjoint() const;
  Amplitude trace() const { return m_[0] + m_[3]; }
  Amplitude determinant() const { return m_[0] * m_[3] - m_[1] * m_[2]; }
  // max |(M^dagger M - I)_ij|
  double unitarity_defect() const;
  // max |(M^dagger - M)_ij|
  double hermiticity_defect() const;
  double max_abs_diff(const Operator2& other) const;

  friend Operator2 operator*(const Operator2& a, const Operator2& b);
  friend Operator2 operator+(const Operator2& a, const Operator2& b);
  friend Operator2 operator-(const Operator2& a, const Operator2& b);
  friend Operator2 operator*(Amplitude s, const Operator2& a);
  friend PureQubit operator*(const Operator2& a, const PureQubit& v);

 private:
  std::array<Amplitude, 4> m_{};
};

struct Eigen2 {
  std::array<Amplitude, 2> values;
  std::array<PureQubit, 2> vectors;  // normalized
};

// Eigendecomposition of a 2x2 matrix; nullopt when the eigenvalue gap is
// below `min_gap` (nearly defective, use repeated squaring instead).
std::optional<Eigen2> eigen(const Operator2& m, double min_gap = 1e-8);

// M^n. Diagonalizes when well separated, otherwise squares repeatedly.
Operator2 power(const Operator2& m, unsigned long long n);
// Binary exponentiation only; reference path for the above.
Operator2 power_by_squaring(Operator2 m, unsigned long long n);

PureQubit rotate(const PureQubit& state, double delta);

struct JointState {
  // probe ⊗ money, index 2*probe + money
  std::array<Amplitude, 4> c{1.0, 0.0, 0.0, 0.0};

  static JointState product(const PureQubit& probe, const PureQubit& money);
  double norm2() const;
  JointState normalized() const;
};

class Operator4 {
 public:
  Operator4() = default;
  static Operator4 identity();
  static Operator4 kron(const Operator2& probe_op, const Operator2& money_op);

  Amplitude operator()(int row, int col) const { return m_[4 * row + col]; }
  Amplitude& operator()(int row, int col) { return m_[4 * row + col]; }

  Operator4 adjoint() const;
  double unitarity_defect() const;
  double max_abs_diff(const Operator4& other) const;

  friend Operator4 operator*(const Operator4& a, const Operator4& b);
  friend Operator4 operator+(const Operator4& a, const Operator4& b);
  friend Operator4 operator*(Amplitude s, const Operator4& a);
  friend JointState operator*(const Operator4& a, const JointState& v);

 private:
  std::array<Amplitude, 16> m_{};
};

// |0><0| ⊗ I + |1><1| ⊗ p
Operator4 controlled(const Operator2& p);

// (I ⊗ <bra|) U (I ⊗ |ket>): the probe map left after the money register is
// prepared in `ket` and postselected on `bra`.
Operator2 contract_money(const Operator4& u, const PureQubit& bra, const PureQubit& ket);

struct Branch {
  double probability = 0.0;
  // Normalized conditional probe state; empty when probability < kEmptyBranch.
  std::optional<PureQubit> probe;

  bool empty() const { return !probe.has_value(); }
};

struct MeasurementBranches {
  Branch pass;  // money projected on key
  Branch fail;  // money projected on key⊥
};

// Measure the money factor of `joint` in the {key, key⊥} basis.
MeasurementBranches measure_money(const JointState& joint, const PureQubit& key);

// Bloch-vector density operator (I + r·sigma)/2.
struct DensityQubit {
  std::array<double, 3> bloch{0.0, 0.0, 0.0};

  static DensityQubit from_pure(const PureQubit& s);
  double radius() const;
  bool is_positive(double tol = 1e-12) const { return radius() <= 1.0 + tol; }
};

// <target|rho|target>; throws std::invalid_argument for non-positive rho.
double fidelity_pure(const DensityQubit& rho, const PureQubit& target);
// ||r_a - r_b|| / 2; positivity not required.
double trace_distance(const DensityQubit& a, const DensityQubit& b);

// <s|A|s> for Hermitian A (imaginary part discarded).
double expectation(const Operator2& a, const PureQubit& s);

}  // namespace qmoney
