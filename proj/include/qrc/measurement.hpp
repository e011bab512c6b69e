// Copyright 2026 The QRC Measurement Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Indirect (weak to projective) single-qubit measurements on every qubit of
// the register, along one shared axis.
//
// z-axis Kraus operator for outcome V and strength g:
//   Omega_V = (2 pi)^{-1/4} [ e^{-(V-g)^2/4} |0><0| + e^{-(V+g)^2/4} |1><1| ].
// The x and y operators are R^dagger Omega_V R with R = H (x) or R = H S^dagger
// (y). All machinery works in the measured frame rho' = R rho R^dagger, where
// the Kraus operators are diagonal.

#include "qrc/quantum.hpp"
#include "qrc/random.hpp"
#include "qrc/summation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qrc {

/// Number of repetitions used to estimate an expectation value; may be
/// infinite (exact expectations).
class EnsembleSize {
 public:
  static EnsembleSize infinite() noexcept { return EnsembleSize(); }
  static EnsembleSize finite(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("ensemble size must be >= 1");
    EnsembleSize e;
    e.count_ = n;
    return e;
  }

  /// Accepts "inf" or a positive integral value such as "1500000" or "1.5e6".
  static EnsembleSize parse(std::string_view text) {
    if (text == "inf" || text == "infinity" || text == "Inf") return infinite();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size())
      throw std::invalid_argument("cannot parse ensemble size '" + std::string(text) + "'");
    return from_double(v);
  }

  static EnsembleSize from_double(double v) {
    if (std::isinf(v) && v > 0) return infinite();
    if (!(v >= 1.0) || std::floor(v) != v || v > 9.0e18)
      throw std::invalid_argument("ensemble size must be a positive integer or inf");
    return finite(static_cast<std::uint64_t>(v));
  }

  bool is_infinite() const noexcept { return !count_.has_value(); }

  std::uint64_t count() const {
    if (!count_) throw std::logic_error("infinite ensemble has no finite count");
    return *count_;
  }

  double as_double() const noexcept {
    return count_ ? static_cast<double>(*count_)
                  : std::numeric_limits<double>::infinity();
  }

  std::string to_string() const { return count_ ? std::to_string(*count_) : "inf"; }

  friend bool operator==(const EnsembleSize&, const EnsembleSize&) = default;

 private:
  EnsembleSize() = default;
  std::optional<std::uint64_t> count_;
};

struct MeasurementSpec {
  MeasurementSpec(double strength, Axis measured_axis) : g(strength), axis(measured_axis) {
    if (!(g >= 0.0)) throw std::invalid_argument("measurement strength g must be >= 0");
  }
  double g;
  Axis axis;
};

/// Outcomes V^(0..N-1) of one measurement round.
struct OutcomeVector {
  std::vector<double> values;
  std::size_t step = 0;
  std::size_t realization = 0;
};

inline Matrix2c kraus_z(double v, double g) {
  const double norm = std::pow(2.0 * std::numbers::pi, -0.25);
  Matrix2c m = Matrix2c::Zero();
  m(0, 0) = norm * std::exp(-(v - g) * (v - g) / 4.0);
  m(1, 1) = norm * std::exp(-(v + g) * (v + g) / 4.0);
  return m;
}

inline Matrix2c hadamard() {
  Matrix2c h;
  h << 1.0, 1.0, 1.0, -1.0;
  return h / std::numbers::sqrt2;
}

inline Matrix2c phase_gate() {
  using namespace std::complex_literals;
  Matrix2c s = Matrix2c::Identity();
  s(1, 1) = 1.0i;
  return s;
}

/// R with Omega^axis = R^dagger Omega^z R.
inline Matrix2c frame_rotation(Axis axis) {
  switch (axis) {
    case Axis::x: return hadamard();
    case Axis::y: return hadamard() * phase_gate().adjoint();
    case Axis::z: break;
  }
  return Matrix2c::Identity();
}

inline Matrix2c kraus_axis(double v, double g, Axis axis) {
  const Matrix2c r = frame_rotation(axis);
  return r.adjoint() * kraus_z(v, g) * r;
}

/// Outcome density of one qubit: w N(+g, 1) + (1 - w) N(-g, 1).
class OutcomePdf {
 public:
  OutcomePdf(double g, double weight_plus) : g_(g), weight_plus_(weight_plus) {}

  double g() const noexcept { return g_; }
  double weight_plus() const noexcept { return weight_plus_; }
  double weight_minus() const noexcept { return 1.0 - weight_plus_; }

  double operator()(double v) const noexcept {
    const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    return c * (weight_plus_ * std::exp(-0.5 * (v - g_) * (v - g_)) +
                (1.0 - weight_plus_) * std::exp(-0.5 * (v + g_) * (v + g_)));
  }

  /// <sigma^axis> of the measured state.
  double pauli_expectation() const noexcept { return 2.0 * weight_plus_ - 1.0; }
  double mean() const noexcept { return g_ * pauli_expectation(); }
  /// 1 + g^2 (1 - <sigma>^2).
  double variance() const noexcept {
    const double e = pauli_expectation();
    return 1.0 + g_ * g_ * (1.0 - e * e);
  }

  double sample(Rng& rng) const {
    const bool plus = rng.uniform() < weight_plus_;
    return (plus ? g_ : -g_) + rng.normal();
  }

 private:
  double g_;
  double weight_plus_;
};

inline OutcomePdf outcome_pdf(const DensityMatrix& omega, double g, Axis axis) {
  if (omega.dim() != 2)
    throw std::invalid_argument("outcome_pdf expects a single-qubit state");
  double w = 0.0;
  switch (axis) {
    case Axis::z: w = omega(0, 0).real(); break;
    case Axis::x: w = 0.5 + omega(0, 1).real(); break;
    case Axis::y: w = 0.5 - omega(0, 1).imag(); break;
  }
  if (w < -1e-9 || w > 1.0 + 1e-9)
    throw std::invalid_argument("outcome_pdf: mixture weight " + std::to_string(w) +
                                " outside [0, 1]; state is not physical");
  return OutcomePdf(g, std::clamp(w, 0.0, 1.0));
}

namespace detail {

/// In-place H^{(x)N} applied from the left (columns) and the right (rows),
/// without the 2^{-N} normalization.
inline void unnormalized_hadamard_both_sides(CMatrix& m) {
  const Index dim = m.rows();
  for (Index half = 1; half < dim; half <<= 1) {
    for (Index base = 0; base < dim; base += 2 * half) {
      for (Index i = base; i < base + half; ++i) {
        // Rows i and i + half (left action).
        for (Index c = 0; c < dim; ++c) {
          const Complex a = m(i, c);
          const Complex b = m(i + half, c);
          m(i, c) = a + b;
          m(i + half, c) = a - b;
        }
      }
    }
  }
  for (Index half = 1; half < dim; half <<= 1) {
    for (Index base = 0; base < dim; base += 2 * half) {
      for (Index j = base; j < base + half; ++j) {
        auto a = m.col(j);
        auto b = m.col(j + half);
        for (Index r = 0; r < dim; ++r) {
          const Complex x = a(r);
          const Complex y = b(r);
          a(r) = x + y;
          b(r) = x - y;
        }
      }
    }
  }
}

inline void unnormalized_hadamard(CVector& v) {
  const Index dim = v.size();
  for (Index half = 1; half < dim; half <<= 1)
    for (Index base = 0; base < dim; base += 2 * half)
      for (Index i = base; i < base + half; ++i) {
        const Complex a = v(i);
        const Complex b = v(i + half);
        v(i) = a + b;
        v(i + half) = a - b;
      }
}

/// i^k for integer k.
inline Complex i_power(int k) noexcept {
  static constexpr std::array<Complex, 4> kTable{
      Complex{1, 0}, Complex{0, 1}, Complex{-1, 0}, Complex{0, -1}};
  return kTable[static_cast<std::size_t>(((k % 4) + 4) % 4)];
}

/// rho -> R rho R^dagger (to_frame) or R^dagger rho R (back).
inline void rotate_matrix(CMatrix& m, Axis axis, bool to_frame) {
  if (axis == Axis::z) return;
  const Index dim = m.rows();
  auto apply_phases = [&](int sign) {
    for (Index b = 0; b < dim; ++b) {
      const int pb = std::popcount(static_cast<std::uint32_t>(b));
      for (Index a = 0; a < dim; ++a) {
        const int pa = std::popcount(static_cast<std::uint32_t>(a));
        m(a, b) *= i_power(sign * (pa - pb));
      }
    }
  };
  // y: R = H S^dagger, so (S^dagger rho S)_ab = i^{pb - pa} rho_ab.
  if (axis == Axis::y && to_frame) apply_phases(-1);
  unnormalized_hadamard_both_sides(m);
  m /= static_cast<double>(dim);
  if (axis == Axis::y && !to_frame) apply_phases(+1);
}

inline void rotate_vector(CVector& v, Axis axis, bool to_frame) {
  if (axis == Axis::z) return;
  const Index dim = v.size();
  if (axis == Axis::y && to_frame)
    for (Index a = 0; a < dim; ++a)
      v(a) *= i_power(-std::popcount(static_cast<std::uint32_t>(a)));
  unnormalized_hadamard(v);
  v /= std::sqrt(static_cast<double>(dim));
  if (axis == Axis::y && !to_frame)
    for (Index a = 0; a < dim; ++a)
      v(a) *= i_power(std::popcount(static_cast<std::uint32_t>(a)));
}

/// Floor below which a trajectory normalization is treated as underflow.
inline constexpr double kNormalizationFloor = 1e-300;

/// Samples one outcome per qubit (ascending index) from the measured-frame
/// populations `pop`, each from the conditional marginal left by the
/// previous collapses. Returns the outcomes and writes the per-basis-state
/// Kraus amplitude F_a (each single-qubit factor scaled so its larger entry
/// is 1) into `amplitude`. Returns the normalization sum_a pop_a F_a^2.
///
/// `sampling_sign` = -1 mislabels the outcome Gaussians; it exists only to
/// drive the validation suite's negative control.
inline double sample_frame_outcomes(const Eigen::VectorXd& pop, int num_qubits, double g,
                                    Rng& rng, std::vector<double>& outcomes,
                                    Eigen::VectorXd& amplitude, double sampling_sign = 1.0) {
  const Index dim = pop.size();
  amplitude.setOnes(dim);
  outcomes.assign(static_cast<std::size_t>(num_qubits), 0.0);
  Eigen::VectorXd weight = pop.cwiseMax(0.0);
  for (int q = 0; q < num_qubits; ++q) {
    const std::uint32_t mask = qubit_mask(num_qubits, q);
    double zero = 0.0;
    double total = 0.0;
    for (Index a = 0; a < dim; ++a) {
      total += weight(a);
      if (!(static_cast<std::uint32_t>(a) & mask)) zero += weight(a);
    }
    if (!(total > kNormalizationFloor))
      throw NumericalError("measurement normalization underflow; trajectory aborted");
    const bool plus = rng.uniform() < zero / total;
    const double v = sampling_sign * (plus ? g : -g) + rng.normal();
    outcomes[static_cast<std::size_t>(q)] = v;
    const double e0 = -(v - g) * (v - g) / 4.0;
    const double e1 = -(v + g) * (v + g) / 4.0;
    const double top = std::max(e0, e1);
    const double f0 = std::exp(e0 - top);
    const double f1 = std::exp(e1 - top);
    for (Index a = 0; a < dim; ++a) {
      const double f = (static_cast<std::uint32_t>(a) & mask) ? f1 : f0;
      amplitude(a) *= f;
      weight(a) *= f * f;
    }
  }
  const double norm = weight.sum();
  if (!(norm > kNormalizationFloor))
    throw NumericalError("measurement normalization underflow; trajectory aborted");
  return norm;
}

}  // namespace detail

/// exp(-(g^2/2) * hamming(i, j)) for every pair of basis indices; equals the
/// N-fold tensor power of [[1, e^{-g^2/2}], [e^{-g^2/2}, 1]].
inline Eigen::MatrixXd backaction_matrix(int num_qubits, double g) {
  const Index dim = Index{1} << num_qubits;
  Eigen::VectorXd table(num_qubits + 1);
  for (int d = 0; d <= num_qubits; ++d) table(d) = std::exp(-0.5 * g * g * d);
  Eigen::MatrixXd m(dim, dim);
  for (Index j = 0; j < dim; ++j)
    for (Index i = 0; i < dim; ++i)
      m(i, j) = table(std::popcount(static_cast<std::uint32_t>(i ^ j)));
  return m;
}

/// Infinite-ensemble post-measurement state: M (.) rho in the measured frame.
inline DensityMatrix backaction_map(const DensityMatrix& rho, double g, Axis axis) {
  if (!(g >= 0.0)) throw std::invalid_argument("backaction_map: g must be >= 0");
  const int n = rho.num_qubits();
  Eigen::VectorXd table(n + 1);
  for (int d = 0; d <= n; ++d) table(d) = std::exp(-0.5 * g * g * d);
  CMatrix m = rho.matrix();
  detail::rotate_matrix(m, axis, true);
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (i != j) m(i, j) *= table(std::popcount(static_cast<std::uint32_t>(i ^ j)));
  detail::rotate_matrix(m, axis, false);
  return DensityMatrix(std::move(m));
}

struct CollapseResult {
  DensityMatrix state;
  OutcomeVector outcomes;
};

namespace detail {

inline CollapseResult sample_and_collapse(const DensityMatrix& rho, const MeasurementSpec& spec,
                                          Rng& rng, double sampling_sign) {
  CMatrix m = rho.matrix();
  rotate_matrix(m, spec.axis, true);
  const Eigen::VectorXd pop = m.diagonal().real();
  OutcomeVector outcomes;
  Eigen::VectorXd amp;
  const double norm = sample_frame_outcomes(pop, rho.num_qubits(), spec.g, rng,
                                            outcomes.values, amp, sampling_sign);
  const Eigen::VectorXd scaled = amp / std::sqrt(norm);
  m = scaled.asDiagonal() * m * scaled.asDiagonal();
  rotate_matrix(m, spec.axis, false);
  return CollapseResult{DensityMatrix(std::move(m)), std::move(outcomes)};
}

}  // namespace detail

/// Draws the joint outcome of measuring every qubit along spec.axis and
/// returns the renormalized conditional state. Throws NumericalError when
/// the normalization underflows.
inline CollapseResult sample_outcomes_and_collapse(const DensityMatrix& rho,
                                                   const MeasurementSpec& spec, Rng& rng) {
  return detail::sample_and_collapse(rho, spec, rng, 1.0);
}

struct EstimatorReport {
  double estimate = 0.0;
  /// Upper bound on the standard error of `estimate`.
  double nominal_uncertainty = 0.0;
  double g = 0.0;
  std::uint64_t n_meas = 0;
  int order = 1;
};

/// sqrt((g^2+1)/(g^2 N)) for order 1, sqrt((g^4+2g^2+1)/(g^4 N)) for order 2.
inline double uncertainty_bound(double g, double n_meas, int order) {
  if (order != 1 && order != 2) throw std::invalid_argument("observable order must be 1 or 2");
  if (!(g > 0.0)) throw std::invalid_argument("uncertainty undefined for g <= 0");
  const double g2 = g * g;
  if (order == 1) return std::sqrt((g2 + 1.0) / (g2 * n_meas));
  return std::sqrt((g2 * g2 + 2.0 * g2 + 1.0) / (g2 * g2 * n_meas));
}

/// Standard error for a state with the given exact expectation value; never
/// exceeds uncertainty_bound.
inline double state_dependent_uncertainty(double expectation_value, double g, double n_meas,
                                          int order) {
  if (order != 1 && order != 2) throw std::invalid_argument("observable order must be 1 or 2");
  if (!(g > 0.0)) throw std::invalid_argument("uncertainty undefined for g <= 0");
  const double g2 = g * g;
  const double spread = 1.0 - expectation_value * expectation_value;
  if (order == 1) return std::sqrt((1.0 + g2 * spread) / (g2 * n_meas));
  return std::sqrt((1.0 + 2.0 * g2 + g2 * g2 * spread) / (g2 * g2 * n_meas));
}

namespace detail {

inline EstimatorReport estimate(std::span<const double> samples, double g, int order) {
  if (!(g > 0.0))
    throw std::invalid_argument("estimator undefined at g = 0 (measurement carries no information)");
  if (samples.empty()) throw std::invalid_argument("estimator needs at least one outcome");
  CompensatedSum sum;
  for (double v : samples) sum.add(v);
  const double n = static_cast<double>(samples.size());
  const double scale = order == 1 ? g : g * g;
  return EstimatorReport{sum.value() / n / scale, uncertainty_bound(g, n, order), g,
                         static_cast<std::uint64_t>(samples.size()), order};
}

}  // namespace detail

/// <sigma> = mean(V) / g.
inline EstimatorReport estimate_single(std::span<const double> outcomes, double g) {
  return detail::estimate(outcomes, g, 1);
}

/// <sigma (x) sigma> = mean(V_i V_j) / g^2.
inline EstimatorReport estimate_pair(std::span<const double> outcome_products, double g) {
  return detail::estimate(outcome_products, g, 2);
}

/// ideal + N(0, s^2) with s the order's uncertainty bound; exact for an
/// infinite ensemble (no random numbers are consumed).
inline double gaussian_surrogate(double ideal, double g, const EnsembleSize& n_meas, int order,
                                 Rng& rng) {
  if (order != 1 && order != 2) throw std::invalid_argument("observable order must be 1 or 2");
  if (n_meas.is_infinite()) return ideal;
  return ideal + uncertainty_bound(g, n_meas.as_double(), order) * rng.normal();
}

/// Ensemble size at strength g giving the same uncertainty bound as
/// n_meas_prime measurements at strength g_prime (which may be +inf for a
/// projective reference). Rounded up.
inline std::uint64_t equivalent_measurements(double g, double g_prime,
                                             std::uint64_t n_meas_prime, int order) {
  if (order != 1 && order != 2) throw std::invalid_argument("observable order must be 1 or 2");
  if (!(g > 0.0) || !(g_prime > 0.0))
    throw std::invalid_argument("equivalent_measurements needs g, g' > 0");
  const double g2 = g * g;
  double ratio = (1.0 + g2) / g2;
  if (!std::isinf(g_prime)) {
    const double gp2 = g_prime * g_prime;
    ratio = ((1.0 + g2) * gp2) / ((1.0 + gp2) * g2);
  }
  if (order == 2) ratio *= ratio;
  const double v = static_cast<double>(n_meas_prime) * ratio;
  const double nearest = std::round(v);
  if (std::abs(v - nearest) <= 1e-9 * std::max(1.0, v)) return static_cast<std::uint64_t>(nearest);
  return static_cast<std::uint64_t>(std::ceil(v));
}

}  // namespace qrc
