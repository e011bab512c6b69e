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

// Self-checks run by `qrc validate`. Each check compares the library with an
// independent oracle and reports the measured deviation next to its
// threshold, so a failing build says by how much it failed.

#include "qrc/experiment.hpp"
#include "qrc/measurement.hpp"
#include "qrc/quantum.hpp"
#include "qrc/random.hpp"
#include "qrc/readout.hpp"
#include "qrc/reservoir.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace qrc {

/// Random Ginibre density matrix of the given rank (rank = dim is full).
inline DensityMatrix random_density_matrix(int num_qubits, Index rank, Rng& rng) {
  const Index dim = Index{1} << num_qubits;
  CMatrix g(dim, rank);
  for (Index j = 0; j < rank; ++j)
    for (Index i = 0; i < dim; ++i) g(i, j) = Complex(rng.normal(), rng.normal());
  CMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix(0.5 * (rho + rho.adjoint()));
}

struct ValidationCheck {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double threshold = 0.0;
  Json details = Json::object();
};

struct ValidationOptions {
  /// -1 mislabels sampled outcomes (negative control).
  double sampling_sign = 1.0;
  std::uint64_t seed = 20240601;
  std::uint64_t collapse_samples = 4000;
};

/// max over g, axis of || int Omega_V^dagger Omega_V dV - 1 ||_max.
inline ValidationCheck check_kraus_quadrature() {
  ValidationCheck c{"kraus_quadrature", false, 0.0, 1e-6, Json::array()};
  for (double g : {0.1, 0.3, 1.0, 10.0})
    for (Axis a : kAllAxes) {
      const double lo = -g - 14.0;
      const double hi = g + 14.0;
      const int steps = 40000;
      const double h = (hi - lo) / steps;
      Matrix2c acc = Matrix2c::Zero();
      for (int i = 0; i <= steps; ++i) {
        const double w = (i == 0 || i == steps) ? 0.5 * h : h;
        const Matrix2c k = kraus_axis(lo + i * h, g, a);
        acc += w * k.adjoint() * k;
      }
      const double dev = (acc - Matrix2c::Identity()).cwiseAbs().maxCoeff();
      c.measured = std::max(c.measured, dev);
      c.details.push_back({{"g", g}, {"axis", std::string(1, axis_char(a))}, {"deviation", dev}});
    }
  c.pass = c.measured < c.threshold;
  return c;
}

/// Mean of K sampled post-measurement states against the back-action map
/// on random 4-qubit states; threshold 10 / sqrt(K) in trace distance. The
/// qubit-0 estimator from the same outcomes is checked alongside.
inline ValidationCheck check_unraveling(const ValidationOptions& opt) {
  const auto k = opt.collapse_samples;
  ValidationCheck c{"unraveling_consistency", false, 0.0, 10.0 / std::sqrt(static_cast<double>(k)),
                    Json::array()};
  Rng state_rng(opt.seed, stream_id(StreamTag::validation, 1));
  int case_index = 0;
  double max_z = 0.0;
  for (double g : {0.5, 2.0})
    for (Axis a : kAllAxes) {
      const DensityMatrix rho = random_density_matrix(4, 2, state_rng);
      const DensityMatrix oracle = backaction_map(rho, g, a);
      const MeasurementSpec spec(g, a);
      Rng rng(opt.seed, stream_id(StreamTag::validation, 2, static_cast<std::uint64_t>(case_index++)));
      CMatrix mean = CMatrix::Zero(rho.dim(), rho.dim());
      CompensatedSum vsum;
      for (std::uint64_t i = 0; i < k; ++i) {
        auto r = detail::sample_and_collapse(rho, spec, rng, opt.sampling_sign);
        mean += r.state.matrix();
        vsum.add(r.outcomes.values[0]);
      }
      mean /= static_cast<double>(k);
      const double td = trace_distance(DensityMatrix(0.5 * (mean + mean.adjoint())), oracle);
      // Estimator of qubit 0 against the exact expectation.
      const double exact = expectation(rho, PauliString(4, {{0, a}}));
      const double est = vsum.value() / static_cast<double>(k) / g;
      const double z = std::abs(est - exact) / uncertainty_bound(g, static_cast<double>(k), 1);
      c.measured = std::max(c.measured, td);
      c.details.push_back({{"g", g},
                           {"axis", std::string(1, axis_char(a))},
                           {"trace_distance", td},
                           {"estimator_z", z}});
      max_z = std::max(max_z, z);
    }
  // The outcome labels must also reproduce the exact expectation (|z| < 5).
  c.pass = c.measured < c.threshold && max_z < 5.0;
  return c;
}

/// Observables after one step from a fixed prior state are affine in the
/// input amplitudes (s, r = sqrt(s(1 - s))), with and without back-action.
inline ValidationCheck check_affine_structure(const ValidationOptions& opt) {
  ValidationCheck c{"affine_structure", false, 0.0, 1e-8, Json::array()};
  Rng rng(opt.seed, stream_id(StreamTag::validation, 3));
  const ReservoirSpec res = build_reservoir(4, 10.0, 1.0, 10.0, opt.seed);
  const DensityMatrix prior = random_density_matrix(4, 4, rng);
  const std::vector<double> s_values{0.0, 0.07, 0.2, 0.35, 0.5, 0.64, 0.8, 0.93, 1.0};
  for (double g : {0.0, 0.3, 10.0}) {
    Eigen::MatrixXd design(static_cast<Index>(s_values.size()), 3);
    std::vector<DensityMatrix> states;
    for (std::size_t i = 0; i < s_values.size(); ++i) {
      const InputSample x(s_values[i]);
      design.row(static_cast<Index>(i)) << 1.0, x.s(), x.r();
      DensityMatrix next = step_unperturbed(res, prior, x);
      if (g > 0.0) next = backaction_map(next, g, Axis::x);
      states.push_back(std::move(next));
    }
    double worst = 0.0;
    for (int q = 0; q < 4; ++q)
      for (Axis a : kAllAxes) {
        Eigen::VectorXd y(static_cast<Index>(states.size()));
        for (std::size_t i = 0; i < states.size(); ++i)
          y(static_cast<Index>(i)) = expectation(states[i], PauliString(4, {{q, a}}));
        const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(y);
        worst = std::max(worst, (design * coef - y).cwiseAbs().maxCoeff());
      }
    c.measured = std::max(c.measured, worst);
    c.details.push_back({{"g", g}, {"max_residual", worst}});
  }
  c.pass = c.measured < c.threshold;
  return c;
}

/// Pseudoinverse readout against the normal equations on well-conditioned data.
inline ValidationCheck check_normal_equations(const ValidationOptions& opt) {
  ValidationCheck c{"normal_equations_oracle", false, 0.0, 1e-8, Json::array()};
  Rng rng(opt.seed, stream_id(StreamTag::validation, 4));
  for (int trial = 0; trial < 3; ++trial) {
    const Index rows = 200, cols = 8 + 4 * trial;
    Eigen::MatrixXd x(rows, cols);
    Eigen::VectorXd y(rows);
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) x(i, j) = rng.uniform() - 0.5;
      y(i) = rng.normal();
    }
    const ReadoutModel m = train_readout(x, y);
    Eigen::MatrixXd a(rows, cols + 1);
    a << x, Eigen::VectorXd::Ones(rows);
    const Eigen::VectorXd oracle = (a.transpose() * a).ldlt().solve(a.transpose() * y);
    Eigen::VectorXd got(cols + 1);
    got << m.weights, m.bias;
    const double dev = (got - oracle).cwiseAbs().maxCoeff();
    c.measured = std::max(c.measured, dev);
    c.details.push_back({{"rows", rows}, {"cols", cols}, {"max_weight_deviation", dev}});
  }
  c.pass = c.measured < c.threshold;
  return c;
}

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }

  Json to_json() const {
    Json j;
    j["version"] = kVersion;
    j["pass"] = pass();
    j["checks"] = Json::array();
    for (const auto& c : checks)
      j["checks"].push_back({{"name", c.name},
                             {"pass", c.pass},
                             {"measured", c.measured},
                             {"threshold", c.threshold},
                             {"details", c.details}});
    return j;
  }
};

inline ValidationReport run_validation(const ValidationOptions& opt = {}) {
  ValidationReport r;
  r.checks.push_back(check_kraus_quadrature());
  r.checks.push_back(check_unraveling(opt));
  r.checks.push_back(check_affine_structure(opt));
  r.checks.push_back(check_normal_equations(opt));
  return r;
}

}  // namespace qrc
