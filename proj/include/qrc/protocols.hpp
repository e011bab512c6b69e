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

// Measurement protocols over an input sequence.
//
//   RSP (restarting): every output step k re-runs the whole history s_1..s_k
//       from rho_0 and measures once; no back-action reaches later outputs.
//   RWP (rewinding): every output step re-runs only the last N_wo inputs from
//       a reset state.
//   OLP (online): one continuously monitored evolution per axis ensemble,
//       alternating input injection and a weak measurement of all qubits.
//
// Rows of the resulting ObservableSeries are the post-washout steps
// k = N_wo + 1 .. N_t (1-based, k = 1 is the first injected input).

#include "qrc/measurement.hpp"
#include "qrc/observables.hpp"
#include "qrc/parallel.hpp"
#include "qrc/quantum.hpp"
#include "qrc/random.hpp"
#include "qrc/reservoir.hpp"
#include "qrc/summation.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qrc {

enum class Protocol { rsp, rwp, olp };

enum class NoiseMode {
  /// Literal sampling of measurement outcomes.
  trajectory,
  /// Exact expectations plus zero-mean Gaussian noise with the analytic
  /// uncertainty bound as standard deviation.
  gaussian_surrogate,
  /// Exact expectations of the unmeasured dynamics.
  ideal_unperturbed,
  /// Exact infinite-ensemble expectations including back-action (OLP).
  ideal_with_backaction,
};

/// State carried by each OLP trajectory. `pure` unravels the input-qubit
/// reset as a discarded projective measurement, which leaves the joint law
/// of the outcome record unchanged and keeps trajectories pure. `density`
/// propagates the full conditional density matrix.
enum class TrajectoryState { pure, density };

inline std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::rsp: return "rsp";
    case Protocol::rwp: return "rwp";
    case Protocol::olp: return "olp";
  }
  return "?";
}

inline Protocol parse_protocol(std::string_view s) {
  if (s == "rsp") return Protocol::rsp;
  if (s == "rwp") return Protocol::rwp;
  if (s == "olp") return Protocol::olp;
  throw std::invalid_argument("unknown protocol '" + std::string(s) +
                              "' (expected rsp, rwp or olp)");
}

inline std::string to_string(NoiseMode m) {
  switch (m) {
    case NoiseMode::trajectory: return "trajectory";
    case NoiseMode::gaussian_surrogate: return "gaussian-surrogate";
    case NoiseMode::ideal_unperturbed: return "ideal-unperturbed";
    case NoiseMode::ideal_with_backaction: return "ideal-with-backaction";
  }
  return "?";
}

inline NoiseMode parse_noise_mode(std::string_view s) {
  if (s == "trajectory") return NoiseMode::trajectory;
  if (s == "gaussian-surrogate") return NoiseMode::gaussian_surrogate;
  if (s == "ideal-unperturbed") return NoiseMode::ideal_unperturbed;
  if (s == "ideal-with-backaction") return NoiseMode::ideal_with_backaction;
  throw std::invalid_argument("unknown noise mode '" + std::string(s) + "'");
}

/// Largest ensemble for which RSP/RWP outcomes are sampled literally.
inline constexpr std::uint64_t kLiteralSamplingLimit = 1000;

/// Realizations per reduction block in OLP trajectory mode.
inline constexpr std::uint64_t kTrajectoryBlock = 64;

struct ProtocolRun {
  Protocol protocol = Protocol::rwp;
  EnsembleSize n_meas = EnsembleSize::infinite();
  int n_wo = 20;
  NoiseMode noise = NoiseMode::ideal_unperturbed;
  /// Measurement strength; RSP/RWP use it for their (typically projective,
  /// g = 10) final measurement.
  double g = 10.0;
  ObservableSet observables;
  std::uint64_t seed = 0;
  /// RWP reset state; |0...0> when empty.
  std::optional<DensityMatrix> reset_state;
  /// 0 = QRC_WORKERS or hardware concurrency. Results do not depend on it.
  int workers = 0;
  TrajectoryState trajectory_state = TrajectoryState::pure;
};

struct ObservableSeries {
  /// 1-based step index of row 0.
  int first_step = 1;
  ObservableSet observables;
  Eigen::MatrixXd estimates;
  /// Nominal standard error per cell; zero for exact values.
  Eigen::MatrixXd uncertainties;

  Index rows() const noexcept { return estimates.rows(); }
  Index cols() const noexcept { return estimates.cols(); }
};

/// Exact expectations of every observable in `set`, written into `row`.
inline void evaluate_observables(const DensityMatrix& rho, const ObservableSet& set,
                                 Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) {
  for (std::size_t c = 0; c < set.size(); ++c)
    row(static_cast<Index>(c)) = expectation(rho, set[c].pauli(rho.num_qubits()));
}

namespace detail {

inline void check_common(const ReservoirSpec& res, std::span<const InputSample> inputs,
                         const ProtocolRun& run) {
  if (run.observables.empty()) throw std::invalid_argument("protocol run has no observables");
  if (run.observables.num_qubits() != res.num_qubits())
    throw std::invalid_argument("observable set is for " +
                                std::to_string(run.observables.num_qubits()) +
                                " qubits but the reservoir has " +
                                std::to_string(res.num_qubits()));
  if (run.n_wo < 0) throw std::invalid_argument("N_wo must be >= 0");
  if (inputs.size() <= static_cast<std::size_t>(run.n_wo))
    throw std::invalid_argument("input sequence of length " + std::to_string(inputs.size()) +
                                " leaves no steps after a washout of " +
                                std::to_string(run.n_wo));
}

inline void check_reset_protocol(const ProtocolRun& run, const char* name) {
  switch (run.noise) {
    case NoiseMode::ideal_unperturbed: break;
    case NoiseMode::gaussian_surrogate:
      if (!run.n_meas.is_infinite() && !(run.g > 0.0))
        throw std::invalid_argument(std::string(name) + ": finite N_meas needs g > 0");
      break;
    case NoiseMode::trajectory:
      if (run.n_meas.is_infinite() || run.n_meas.count() > kLiteralSamplingLimit)
        throw std::invalid_argument(
            std::string(name) +
            ": literal outcome sampling is limited to N_meas <= 1000; use the "
            "gaussian-surrogate noise mode for larger ensembles");
      if (!(run.g > 0.0)) throw std::invalid_argument(std::string(name) + ": g must be > 0");
      break;
    case NoiseMode::ideal_with_backaction:
      throw std::invalid_argument(std::string(name) +
                                  " is evaluated on the unperturbed dynamics; "
                                  "ideal-with-backaction applies to OLP only");
  }
}

inline void check_online_protocol(const ProtocolRun& run) {
  if (!(run.g >= 0.0)) throw std::invalid_argument("OLP: g must be >= 0");
  const bool finite = !run.n_meas.is_infinite();
  switch (run.noise) {
    case NoiseMode::ideal_unperturbed:
      throw std::invalid_argument("OLP always includes back-action; use ideal-with-backaction");
    case NoiseMode::trajectory:
      if (!finite) throw std::invalid_argument("OLP trajectory mode needs a finite N_meas");
      [[fallthrough]];
    case NoiseMode::gaussian_surrogate:
      if (finite && run.g == 0.0)
        throw std::invalid_argument("OLP with g = 0 extracts no information from a finite ensemble");
      break;
    case NoiseMode::ideal_with_backaction: break;
  }
}

}  // namespace detail

/// Input-independent checks of a run's protocol / noise-mode combination.
inline void validate_run(const ProtocolRun& run) {
  if (run.n_wo < 0) throw std::invalid_argument("N_wo must be >= 0");
  if (!run.n_meas.is_infinite() && run.n_meas.count() == 0)
    throw std::invalid_argument("N_meas must be >= 1");
  switch (run.protocol) {
    case Protocol::rsp: detail::check_reset_protocol(run, "RSP"); break;
    case Protocol::rwp:
      detail::check_reset_protocol(run, "RWP");
      if (run.n_wo < 1) throw std::invalid_argument("RWP needs N_wo >= 1");
      break;
    case Protocol::olp: detail::check_online_protocol(run); break;
  }
}

namespace detail {

inline ObservableSeries empty_series(std::span<const InputSample> inputs, const ProtocolRun& run) {
  ObservableSeries s;
  s.first_step = run.n_wo + 1;
  s.observables = run.observables;
  const auto rows = static_cast<Index>(inputs.size()) - run.n_wo;
  const auto cols = static_cast<Index>(run.observables.size());
  s.estimates = Eigen::MatrixXd::Zero(rows, cols);
  s.uncertainties = Eigen::MatrixXd::Zero(rows, cols);
  return s;
}

/// Adds surrogate noise in row-major order from one stream per run.
inline void apply_surrogate(ObservableSeries& s, const ProtocolRun& run) {
  if (run.n_meas.is_infinite()) return;
  Rng rng(run.seed, stream_id(StreamTag::surrogate_noise, static_cast<std::uint64_t>(run.protocol)));
  for (Index r = 0; r < s.rows(); ++r)
    for (Index c = 0; c < s.cols(); ++c) {
      const int order = s.observables[static_cast<std::size_t>(c)].order();
      s.estimates(r, c) = gaussian_surrogate(s.estimates(r, c), run.g, run.n_meas, order, rng);
      s.uncertainties(r, c) = uncertainty_bound(run.g, run.n_meas.as_double(), order);
    }
}

inline std::vector<Index> columns_for_axis(const ObservableSet& set, Axis a) {
  std::vector<Index> cols;
  for (std::size_t c = 0; c < set.size(); ++c)
    if (set[c].axis == a) cols.push_back(static_cast<Index>(c));
  return cols;
}

/// Per-(row, column) compensated sums of outcome monomials V_i or V_i V_j.
class OutcomeAccumulator {
 public:
  OutcomeAccumulator(Index rows, Index cols)
      : cols_(cols), cells_(static_cast<std::size_t>(rows * cols)) {}

  void add_round(Index row, const ObservableSet& set, std::span<const Index> columns,
                 std::span<const double> v) {
    for (std::size_t k = 0; k < columns.size(); ++k) {
      const Observable& o = set[static_cast<std::size_t>(columns[k])];
      const double monomial = o.order() == 1
                                  ? v[static_cast<std::size_t>(o.qubits[0])]
                                  : v[static_cast<std::size_t>(o.qubits[0])] *
                                        v[static_cast<std::size_t>(o.qubits[1])];
      cells_[static_cast<std::size_t>(row * cols_) + k].add(monomial);
    }
  }

  void merge(const OutcomeAccumulator& other) {
    for (std::size_t i = 0; i < cells_.size(); ++i) cells_[i].merge(other.cells_[i]);
  }

  double sum(Index row, std::size_t k) const {
    return cells_[static_cast<std::size_t>(row * cols_) + k].value();
  }

 private:
  Index cols_;
  std::vector<CompensatedSum> cells_;
};

/// Writes estimates (sum / N divided by g^order) and uncertainty bounds.
inline void finalize_estimates(ObservableSeries& s, const OutcomeAccumulator& acc,
                               std::span<const Index> columns, Index row_begin, Index row_end,
                               Index acc_row_offset, double g, std::uint64_t n) {
  const double nd = static_cast<double>(n);
  for (Index r = row_begin; r < row_end; ++r)
    for (std::size_t k = 0; k < columns.size(); ++k) {
      const Index c = columns[k];
      const int order = s.observables[static_cast<std::size_t>(c)].order();
      const double scale = order == 1 ? g : g * g;
      s.estimates(r, c) = acc.sum(r - acc_row_offset, k) / nd / scale;
      s.uncertainties(r, c) = uncertainty_bound(g, nd, order);
    }
}

/// Samples `n` independent outcome rounds on the exact state of one output
/// row (no state carried between rounds) and stores the row's estimates.
inline void literal_row(ObservableSeries& s, Index row, const DensityMatrix& rho,
                        const ProtocolRun& run) {
  const std::uint64_t n = run.n_meas.count();
  for (Axis a : kAllAxes) {
    const auto columns = columns_for_axis(s.observables, a);
    if (columns.empty()) continue;
    CMatrix frame = rho.matrix();
    rotate_matrix(frame, a, true);
    const Eigen::VectorXd pop = frame.diagonal().real();
    Rng rng(run.seed, stream_id(StreamTag::literal_sampling, static_cast<std::uint64_t>(a),
                                static_cast<std::uint64_t>(row)));
    OutcomeAccumulator acc(1, static_cast<Index>(columns.size()));
    std::vector<double> v;
    Eigen::VectorXd amp;
    for (std::uint64_t l = 0; l < n; ++l) {
      sample_frame_outcomes(pop, rho.num_qubits(), run.g, rng, v, amp);
      acc.add_round(0, s.observables, columns, v);
    }
    finalize_estimates(s, acc, columns, row, row + 1, row, run.g, n);
  }
}

}  // namespace detail

/// State at step k obtained by re-running the last `window` inputs
/// (s_{k-window+1} .. s_k) from `reset`; a window reaching past s_1 starts
/// from `reset` at step 0.
inline DensityMatrix rewound_state(const ReservoirSpec& res, std::span<const InputSample> inputs,
                                   std::size_t k, std::size_t window, const DensityMatrix& reset) {
  if (k < 1 || k > inputs.size()) throw std::out_of_range("rewound_state: step out of range");
  if (window < 1) throw std::invalid_argument("rewound_state: window must be >= 1");
  const std::size_t first = k > window ? k - window + 1 : 1;
  DensityMatrix rho = reset;
  for (std::size_t j = first; j <= k; ++j) rho = step_unperturbed(res, rho, inputs[j - 1]);
  return rho;
}

/// Restarting protocol. The state measured at output step k is the
/// unperturbed state after s_1..s_k, so the exact series is produced by one
/// forward sweep.
inline ObservableSeries run_rsp(const ReservoirSpec& res, std::span<const InputSample> inputs,
                                const ProtocolRun& run) {
  detail::check_common(res, inputs, run);
  validate_run(run);
  ObservableSeries s = detail::empty_series(inputs, run);
  DensityMatrix rho = DensityMatrix::zero_state(res.num_qubits());
  const bool literal = run.noise == NoiseMode::trajectory;
  for (std::size_t k = 1; k <= inputs.size(); ++k) {
    rho = step_unperturbed(res, rho, inputs[k - 1]);
    if (k <= static_cast<std::size_t>(run.n_wo)) continue;
    const auto row = static_cast<Index>(k) - run.n_wo - 1;
    if (literal)
      detail::literal_row(s, row, rho, run);
    else
      evaluate_observables(rho, run.observables, s.estimates.row(row));
  }
  if (run.noise == NoiseMode::gaussian_surrogate) detail::apply_surrogate(s, run);
  return s;
}

/// Rewinding protocol: output rows are independent and computed in parallel.
inline ObservableSeries run_rwp(const ReservoirSpec& res, std::span<const InputSample> inputs,
                                const ProtocolRun& run) {
  detail::check_common(res, inputs, run);
  validate_run(run);
  const DensityMatrix reset =
      run.reset_state ? *run.reset_state : DensityMatrix::zero_state(res.num_qubits());
  if (reset.dim() != res.dim()) throw std::invalid_argument("RWP reset state has wrong dimension");
  ObservableSeries s = detail::empty_series(inputs, run);
  const bool literal = run.noise == NoiseMode::trajectory;
  parallel_for(static_cast<std::size_t>(s.rows()), run.workers, [&](std::size_t r) {
    const std::size_t k = r + static_cast<std::size_t>(run.n_wo) + 1;
    const DensityMatrix rho =
        rewound_state(res, inputs, k, static_cast<std::size_t>(run.n_wo), reset);
    if (literal)
      detail::literal_row(s, static_cast<Index>(r), rho, run);
    else
      evaluate_observables(rho, run.observables, s.estimates.row(static_cast<Index>(r)));
  });
  if (run.noise == NoiseMode::gaussian_surrogate) detail::apply_surrogate(s, run);
  return s;
}

namespace detail {

inline void olp_ideal_axis(const ReservoirSpec& res, std::span<const InputSample> inputs,
                           const ProtocolRun& run, Axis a, ObservableSeries& s) {
  const auto columns = columns_for_axis(s.observables, a);
  if (columns.empty()) return;
  std::vector<PauliString> paulis;
  for (Index c : columns) paulis.push_back(s.observables[static_cast<std::size_t>(c)].pauli(res.num_qubits()));
  DensityMatrix rho = DensityMatrix::zero_state(res.num_qubits());
  for (std::size_t k = 1; k <= inputs.size(); ++k) {
    rho = backaction_map(step_unperturbed(res, rho, inputs[k - 1]), run.g, a);
    if (k <= static_cast<std::size_t>(run.n_wo)) continue;
    const auto row = static_cast<Index>(k) - run.n_wo - 1;
    for (std::size_t i = 0; i < columns.size(); ++i)
      s.estimates(row, columns[i]) = expectation(rho, paulis[i]);
  }
}

/// One pure-state trajectory step: discard-measure qubit 0, inject the
/// input, evolve, then measure every qubit along `a`.
inline void pure_trajectory_step(const ReservoirSpec& res, CVector& psi, const InputSample& x,
                                 double g, Axis a, Rng& rng, std::vector<double>& outcomes,
                                 Eigen::VectorXd& amp, CVector& scratch) {
  const Index half = psi.size() / 2;
  const double p0 = psi.head(half).squaredNorm();
  const double p1 = psi.tail(half).squaredNorm();
  const bool keep_zero = rng.uniform() * (p0 + p1) < p0;
  const double pk = keep_zero ? p0 : p1;
  if (!(pk > kNormalizationFloor)) throw NumericalError("trajectory reset branch underflow");
  const CVector rest = (keep_zero ? psi.head(half) : psi.tail(half)) / std::sqrt(pk);
  scratch.resize(psi.size());
  scratch.head(half) = std::sqrt(1.0 - x.s()) * rest;
  scratch.tail(half) = std::sqrt(x.s()) * rest;
  psi.noalias() = res.unitary().matrix() * scratch;
  rotate_vector(psi, a, true);
  const Eigen::VectorXd pop = psi.cwiseAbs2();
  const double norm = sample_frame_outcomes(pop, res.num_qubits(), g, rng, outcomes, amp);
  psi = psi.cwiseProduct(amp.cast<Complex>()) / std::sqrt(norm);
  rotate_vector(psi, a, false);
}

inline void olp_trajectory_axis(const ReservoirSpec& res, std::span<const InputSample> inputs,
                                const ProtocolRun& run, Axis a, ObservableSeries& s) {
  const auto columns = columns_for_axis(s.observables, a);
  if (columns.empty()) return;
  const std::uint64_t n = run.n_meas.count();
  const std::uint64_t blocks = (n + kTrajectoryBlock - 1) / kTrajectoryBlock;
  const Index rows = s.rows();
  const auto ncols = static_cast<Index>(columns.size());

  OutcomeAccumulator total(rows, ncols);
  std::map<std::uint64_t, OutcomeAccumulator> pending;
  std::uint64_t next_merge = 0;
  std::mutex merge_mutex;

  parallel_for(static_cast<std::size_t>(blocks), run.workers, [&](std::size_t b) {
    OutcomeAccumulator acc(rows, ncols);
    std::vector<double> v;
    Eigen::VectorXd amp;
    CVector scratch;
    const std::uint64_t begin = b * kTrajectoryBlock;
    const std::uint64_t end = std::min(n, begin + kTrajectoryBlock);
    for (std::uint64_t l = begin; l < end; ++l) {
      Rng rng(run.seed, stream_id(StreamTag::trajectory, static_cast<std::uint64_t>(a), l));
      if (run.trajectory_state == TrajectoryState::pure) {
        CVector psi = CVector::Zero(res.dim());
        psi(0) = 1.0;
        for (std::size_t k = 1; k <= inputs.size(); ++k) {
          pure_trajectory_step(res, psi, inputs[k - 1], run.g, a, rng, v, amp, scratch);
          if (k > static_cast<std::size_t>(run.n_wo))
            acc.add_round(static_cast<Index>(k) - run.n_wo - 1, s.observables, columns, v);
        }
      } else {
        DensityMatrix rho = DensityMatrix::zero_state(res.num_qubits());
        const MeasurementSpec spec(run.g, a);
        for (std::size_t k = 1; k <= inputs.size(); ++k) {
          auto collapsed = sample_outcomes_and_collapse(step_unperturbed(res, rho, inputs[k - 1]),
                                                        spec, rng);
          rho = std::move(collapsed.state);
          if (k > static_cast<std::size_t>(run.n_wo))
            acc.add_round(static_cast<Index>(k) - run.n_wo - 1, s.observables, columns,
                          collapsed.outcomes.values);
        }
      }
    }
    // Merge strictly in block order so the result is independent of the
    // worker count and of completion order.
    std::lock_guard lock(merge_mutex);
    pending.emplace(b, std::move(acc));
    for (auto it = pending.find(next_merge); it != pending.end(); it = pending.find(next_merge)) {
      total.merge(it->second);
      pending.erase(it);
      ++next_merge;
    }
  });
  finalize_estimates(s, total, columns, 0, rows, 0, run.g, n);
}

}  // namespace detail

/// Online protocol with weak measurements. The x, y and z observables come
/// from three independent ensembles, each measured along its own axis.
inline ObservableSeries run_olp(const ReservoirSpec& res, std::span<const InputSample> inputs,
                                const ProtocolRun& run) {
  detail::check_common(res, inputs, run);
  validate_run(run);
  ObservableSeries s = detail::empty_series(inputs, run);
  if (run.noise == NoiseMode::trajectory) {
    for (Axis a : kAllAxes) detail::olp_trajectory_axis(res, inputs, run, a, s);
    return s;
  }
  parallel_for(kAllAxes.size(), run.workers,
               [&](std::size_t i) { detail::olp_ideal_axis(res, inputs, run, kAllAxes[i], s); });
  if (run.noise == NoiseMode::gaussian_surrogate) detail::apply_surrogate(s, run);
  return s;
}

inline ObservableSeries run_protocol(const ReservoirSpec& res, std::span<const InputSample> inputs,
                                     const ProtocolRun& run) {
  switch (run.protocol) {
    case Protocol::rsp: return run_rsp(res, inputs, run);
    case Protocol::rwp: return run_rwp(res, inputs, run);
    case Protocol::olp: return run_olp(res, inputs, run);
  }
  throw std::logic_error("unhandled protocol");
}

}  // namespace qrc
