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

// Disordered transverse-field Ising reservoir and its input-driven step map
//   L_k[rho] = U (rho_in(s_k) (x) Tr_0[rho]) U^dagger,   U = exp(-i H dt),
//   H = (h/2) sum_i Z_i + sum_{i<j} J_ij X_i X_j.
// Qubit 0 is the input qubit.

#include "qrc/quantum.hpp"
#include "qrc/random.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qrc {

/// An input value s in [0, 1] together with r = sqrt(s (1 - s)).
class InputSample {
 public:
  explicit InputSample(double s) : s_(s) {
    if (!(s >= 0.0 && s <= 1.0))
      throw std::invalid_argument("input sample " + std::to_string(s) +
                                  " outside [0, 1]");
    r_ = std::sqrt(s * (1.0 - s));
  }

  double s() const noexcept { return s_; }
  double r() const noexcept { return r_; }

 private:
  double s_;
  double r_;
};

class ReservoirSpec {
 public:
  ReservoirSpec(int num_qubits, double field, double coupling_scale, double dt,
                std::optional<std::uint64_t> seed, Eigen::MatrixXd couplings,
                QubitOperator hamiltonian, UnitaryMatrix unitary)
      : num_qubits_(num_qubits),
        field_(field),
        coupling_scale_(coupling_scale),
        dt_(dt),
        seed_(seed),
        couplings_(std::move(couplings)),
        hamiltonian_(std::move(hamiltonian)),
        unitary_(std::move(unitary)) {}

  int num_qubits() const noexcept { return num_qubits_; }
  Index dim() const noexcept { return unitary_.dim(); }
  double field() const noexcept { return field_; }
  /// J_s; couplings are drawn from [-J_s/2, J_s/2].
  double coupling_scale() const noexcept { return coupling_scale_; }
  double dt() const noexcept { return dt_; }
  /// Seed the couplings were drawn with; empty for explicit couplings.
  const std::optional<std::uint64_t>& seed() const noexcept { return seed_; }
  const Eigen::MatrixXd& couplings() const noexcept { return couplings_; }
  const QubitOperator& hamiltonian() const noexcept { return hamiltonian_; }
  const UnitaryMatrix& unitary() const noexcept { return unitary_; }

 private:
  int num_qubits_;
  double field_;
  double coupling_scale_;
  double dt_;
  std::optional<std::uint64_t> seed_;
  Eigen::MatrixXd couplings_;
  QubitOperator hamiltonian_;
  UnitaryMatrix unitary_;
};

inline QubitOperator ising_hamiltonian(int num_qubits, double field,
                                       const Eigen::MatrixXd& couplings) {
  const Index dim = Index{1} << num_qubits;
  CMatrix h = CMatrix::Zero(dim, dim);
  // (h/2) sum_i Z_i is diagonal: +1 per zero bit, -1 per one bit.
  for (Index b = 0; b < dim; ++b) {
    const int ones = std::popcount(static_cast<std::uint32_t>(b));
    h(b, b) = 0.5 * field * static_cast<double>(num_qubits - 2 * ones);
  }
  for (int i = 0; i < num_qubits; ++i) {
    for (int j = i + 1; j < num_qubits; ++j) {
      const double jij = couplings(i, j);
      if (jij == 0.0) continue;
      const std::uint32_t flip =
          detail::qubit_mask(num_qubits, i) | detail::qubit_mask(num_qubits, j);
      for (Index b = 0; b < dim; ++b)
        h(static_cast<Index>(static_cast<std::uint32_t>(b) ^ flip), b) += jij;
    }
  }
  return QubitOperator(std::move(h), true);
}

/// Reservoir with explicitly given couplings (symmetric, zero diagonal).
inline ReservoirSpec make_reservoir(int num_qubits, double field,
                                    Eigen::MatrixXd couplings, double dt) {
  if (num_qubits < 2 || num_qubits > kMaxQubits)
    throw std::invalid_argument("reservoir needs between 2 and " +
                                std::to_string(kMaxQubits) + " qubits, got " +
                                std::to_string(num_qubits));
  if (couplings.rows() != num_qubits || couplings.cols() != num_qubits)
    throw std::invalid_argument("coupling matrix must be N x N");
  for (int i = 0; i < num_qubits; ++i) {
    if (couplings(i, i) != 0.0)
      throw std::invalid_argument("coupling matrix must have zero diagonal");
    for (int j = i + 1; j < num_qubits; ++j)
      if (couplings(i, j) != couplings(j, i))
        throw std::invalid_argument("coupling matrix must be symmetric");
  }
  const double scale = 2.0 * couplings.cwiseAbs().maxCoeff();
  QubitOperator h = ising_hamiltonian(num_qubits, field, couplings);
  UnitaryMatrix u = hermitian_expm(h, dt);
  return ReservoirSpec(num_qubits, field, scale, dt, std::nullopt,
                       std::move(couplings), std::move(h), std::move(u));
}

/// Draws J_ij (i < j, row-major) uniformly from [-J_s/2, J_s/2) using the
/// couplings stream of `seed`, mirrors them, and caches U = exp(-i H dt).
inline ReservoirSpec build_reservoir(int num_qubits, double field,
                                     double coupling_scale, double dt,
                                     std::uint64_t seed) {
  if (num_qubits < 2 || num_qubits > kMaxQubits)
    throw std::invalid_argument("reservoir needs between 2 and " +
                                std::to_string(kMaxQubits) + " qubits, got " +
                                std::to_string(num_qubits));
  if (!(field > 0.0) || !(coupling_scale > 0.0) || !(dt > 0.0))
    throw std::invalid_argument("h, J_s and dt must be positive");
  Rng rng(seed, stream_id(StreamTag::couplings));
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(num_qubits, num_qubits);
  for (int a = 0; a < num_qubits; ++a)
    for (int b = a + 1; b < num_qubits; ++b) {
      j(a, b) = coupling_scale * (rng.uniform() - 0.5);
      j(b, a) = j(a, b);
    }
  QubitOperator h = ising_hamiltonian(num_qubits, field, j);
  UnitaryMatrix u = hermitian_expm(h, dt);
  return ReservoirSpec(num_qubits, field, coupling_scale, dt, seed, std::move(j),
                       std::move(h), std::move(u));
}

/// |psi><psi| with psi = sqrt(1 - s)|0> + sqrt(s)|1>.
inline DensityMatrix input_state(const InputSample& x) {
  CMatrix m(2, 2);
  m << 1.0 - x.s(), x.r(), x.r(), x.s();
  return DensityMatrix(std::move(m));
}

/// Replaces qubit 0 by the input state, then evolves with the cached unitary.
inline DensityMatrix step_unperturbed(const ReservoirSpec& res,
                                      const DensityMatrix& rho,
                                      const InputSample& x) {
  if (rho.dim() != res.dim())
    throw std::invalid_argument("step_unperturbed: state dimension " +
                                std::to_string(rho.dim()) +
                                " does not match reservoir dimension " +
                                std::to_string(res.dim()));
  const Index h = rho.dim() / 2;
  const CMatrix& m = rho.matrix();
  const CMatrix rest = m.topLeftCorner(h, h) + m.bottomRightCorner(h, h);
  CMatrix injected(rho.dim(), rho.dim());
  injected.topLeftCorner(h, h) = (1.0 - x.s()) * rest;
  injected.topRightCorner(h, h) = x.r() * rest;
  injected.bottomLeftCorner(h, h) = x.r() * rest;
  injected.bottomRightCorner(h, h) = x.s() * rest;
  const CMatrix& u = res.unitary().matrix();
  CMatrix tmp;
  tmp.noalias() = u * injected;
  CMatrix out;
  out.noalias() = tmp * u.adjoint();
  out = 0.5 * (out + out.adjoint()).eval();
  return DensityMatrix(std::move(out));
}

inline std::vector<InputSample> to_samples(std::span<const double> values) {
  std::vector<InputSample> out;
  out.reserve(values.size());
  for (double v : values) out.emplace_back(v);
  return out;
}

/// Trace distance between two copies driven by the same inputs, one entry
/// per step (after each injection).
inline std::vector<double> echo_state_convergence(const ReservoirSpec& res,
                                                  DensityMatrix a, DensityMatrix b,
                                                  std::span<const InputSample> inputs) {
  if (a.dim() != b.dim() || a.dim() != res.dim())
    throw std::invalid_argument("echo_state_convergence: dimension mismatch");
  std::vector<double> out;
  out.reserve(inputs.size());
  for (const auto& x : inputs) {
    a = step_unperturbed(res, a, x);
    b = step_unperturbed(res, b, x);
    out.push_back(trace_distance(a, b));
  }
  return out;
}

}  // namespace qrc
