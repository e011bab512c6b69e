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

// Benchmark data, target construction and capacity metrics.
//
// Step indices k are 1-based throughout: inputs[k - 1] is s_k and an
// ObservableSeries row r holds step first_step + r. Targets are stored per
// step; steps whose target reaches outside the sequence hold no value and
// are dropped from training and testing alike.

#include "qrc/protocols.hpp"
#include "qrc/random.hpp"
#include "qrc/readout.hpp"
#include "qrc/reservoir.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace qrc {

inline constexpr int kDefaultWashout = 20;
inline constexpr double kStmTrainFraction = 0.75;
inline constexpr double kForecastTrainFraction = 0.70;
inline constexpr int kDefaultMaxDelay = 10;

struct Dataset {
  std::string name;
  std::vector<double> inputs;
  int n_wo = kDefaultWashout;
  int train_count = 0;
  int test_count = 0;

  int n_t() const noexcept { return static_cast<int>(inputs.size()); }
  /// Last step (1-based) belonging to the training segment.
  int last_train_step() const noexcept { return n_wo + train_count; }

  std::vector<InputSample> samples() const { return to_samples(inputs); }

  void validate() const {
    if (n_wo < 0 || train_count < 1 || test_count < 1)
      throw std::invalid_argument("dataset '" + name + "' needs N_wo >= 0 and non-empty splits");
    if (n_wo + train_count + test_count != n_t())
      throw std::invalid_argument("dataset '" + name + "' split does not cover N_t");
    for (double s : inputs)
      if (!(s >= 0.0 && s <= 1.0))
        throw std::invalid_argument("dataset '" + name + "' has inputs outside [0, 1]");
  }
};

/// Splits the post-washout remainder into train (rounded fraction) and test.
inline Dataset make_dataset(std::string name, std::vector<double> inputs, int n_wo,
                            double train_fraction) {
  const auto n_t = static_cast<int>(inputs.size());
  if (n_wo < 0 || n_t < n_wo + 2)
    throw std::invalid_argument("N_t = " + std::to_string(n_t) +
                                " is too small for a washout of " + std::to_string(n_wo) +
                                " plus train and test segments");
  Dataset d;
  d.name = std::move(name);
  d.inputs = std::move(inputs);
  d.n_wo = n_wo;
  const int rest = n_t - n_wo;
  d.train_count = std::clamp(static_cast<int>(std::lround(train_fraction * rest)), 1, rest - 1);
  d.test_count = rest - d.train_count;
  d.validate();
  return d;
}

/// i.i.d. uniform inputs; N_t = 1000 gives the 20 / 735 / 245 split.
inline Dataset generate_stm_inputs(int n_t, std::uint64_t seed, int n_wo = kDefaultWashout) {
  if (n_t < n_wo + 2) throw std::invalid_argument("generate_stm_inputs: N_t too small");
  Rng rng(seed, stream_id(StreamTag::stm_inputs));
  std::vector<double> s(static_cast<std::size_t>(n_t));
  for (double& v : s) v = rng.uniform();
  return make_dataset("stm", std::move(s), n_wo, kStmTrainFraction);
}

/// Min-max normalization to [0, 1]. A constant series is rejected.
inline std::vector<double> normalize_minmax(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("cannot normalize an empty series");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) throw std::invalid_argument("series has zero range; cannot normalize");
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    out[i] = std::clamp((values[i] - *lo) / range, 0.0, 1.0);
  return out;
}

/// Uses the first n_t values of `raw`, normalized, with the forecast split.
inline Dataset forecast_dataset(std::string name, std::span<const double> raw, int n_t,
                                int n_wo = kDefaultWashout) {
  if (n_t < n_wo + 2) throw std::invalid_argument("forecast dataset: N_t too small");
  if (raw.size() < static_cast<std::size_t>(n_t))
    throw std::invalid_argument("series '" + name + "' has " + std::to_string(raw.size()) +
                                " values, need " + std::to_string(n_t));
  return make_dataset(std::move(name), normalize_minmax(raw.first(static_cast<std::size_t>(n_t))),
                      n_wo, kForecastTrainFraction);
}

/// Reads one number per line (blank lines ignored).
inline std::vector<double> read_series_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open series file '" + path + "'");
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    const char* begin = line.data() + first;
    const char* end = line.data() + last + 1;
    if (*begin == '+') ++begin;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v))
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": not a number: '" +
                               line.substr(first, last - first + 1) + "'");
    values.push_back(v);
  }
  return values;
}

inline Dataset load_series_file(const std::string& path, int n_t, int n_wo = kDefaultWashout) {
  const auto raw = read_series_file(path);
  return forecast_dataset(path, raw, n_t, n_wo);
}

/// Stand-in chaotic intensity series from the Lorenz system (intensity
/// taken as x^2, sampled every 0.08 time units after a transient). This is
/// NOT the Santa Fe laser data; it only lets forecasting code run offline.
inline std::vector<double> synthetic_laser_series(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("synthetic series length must be >= 1");
  constexpr double sigma = 10.0, rho = 28.0, beta = 8.0 / 3.0, h = 0.01;
  constexpr int substeps = 8, transient = 2000;
  Rng rng(seed, stream_id(StreamTag::synthetic_series));
  Eigen::Vector3d u(1.0 + rng.uniform(), 1.0 + rng.uniform(), 20.0 + rng.uniform());
  auto f = [&](const Eigen::Vector3d& p) {
    return Eigen::Vector3d(sigma * (p.y() - p.x()), p.x() * (rho - p.z()) - p.y(),
                           p.x() * p.y() - beta * p.z());
  };
  auto rk4 = [&] {
    const Eigen::Vector3d k1 = f(u);
    const Eigen::Vector3d k2 = f(u + 0.5 * h * k1);
    const Eigen::Vector3d k3 = f(u + 0.5 * h * k2);
    const Eigen::Vector3d k4 = f(u + h * k3);
    u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  };
  for (int i = 0; i < transient; ++i) rk4();
  std::vector<double> out(static_cast<std::size_t>(n));
  for (double& v : out) {
    for (int i = 0; i < substeps; ++i) rk4();
    v = u.x() * u.x();
  }
  return out;
}

/// Per-step targets; element k - 1 belongs to step k.
using TargetSeries = std::vector<std::optional<double>>;

/// y_k = s_{k - tau}.
inline TargetSeries stm_targets(std::span<const double> inputs, int tau) {
  if (tau < 1) throw std::invalid_argument("STM delay must be >= 1");
  if (static_cast<std::size_t>(tau) >= inputs.size())
    throw std::invalid_argument("STM delay must be < N_t");
  TargetSeries y(inputs.size());
  for (std::size_t i = static_cast<std::size_t>(tau); i < inputs.size(); ++i)
    y[i] = inputs[i - static_cast<std::size_t>(tau)];
  return y;
}

/// y_k = s_{k + eta}.
inline TargetSeries forecast_targets(std::span<const double> inputs, int eta) {
  if (eta < 1) throw std::invalid_argument("forecast horizon must be >= 1");
  if (static_cast<std::size_t>(eta) >= inputs.size())
    throw std::invalid_argument("forecast horizon must be < N_t");
  TargetSeries y(inputs.size());
  for (std::size_t i = 0; i + static_cast<std::size_t>(eta) < inputs.size(); ++i)
    y[i] = inputs[i + static_cast<std::size_t>(eta)];
  return y;
}

/// Squared correlation; 0 when either series is (numerically) constant.
inline double capacity(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size())
    throw std::invalid_argument("capacity: length mismatch");
  if (predictions.size() < 2) throw std::invalid_argument("capacity: need at least 2 points");
  const auto n = static_cast<Eigen::Index>(predictions.size());
  const Eigen::Map<const Eigen::VectorXd> p(predictions.data(), n);
  const Eigen::Map<const Eigen::VectorXd> y(targets.data(), n);
  const Eigen::VectorXd dp = p.array() - p.mean();
  const Eigen::VectorXd dy = y.array() - y.mean();
  const double var_p = dp.squaredNorm() / static_cast<double>(n);
  const double var_y = dy.squaredNorm() / static_cast<double>(n);
  if (var_p < 1e-14 || var_y < 1e-14) return 0.0;
  const double cov = dp.dot(dy) / static_cast<double>(n);
  return std::clamp(cov * cov / (var_p * var_y), 0.0, 1.0);
}

inline double sum_capacity(std::span<const double> capacities) {
  double total = 0.0;
  for (double c : capacities) total += c;
  return total;
}

struct TaskResult {
  double capacity = 0.0;
  ReadoutModel model;
  std::vector<double> predictions;
  std::vector<double> targets;
  int train_rows = 0;
  int test_rows = 0;
};

/// Trains on the dataset's train segment and scores on its test segment,
/// using only rows with a defined target.
inline TaskResult evaluate_task(const ObservableSeries& series, const Dataset& data,
                                const TargetSeries& targets, double ridge = 0.0) {
  if (targets.size() != data.inputs.size())
    throw std::invalid_argument("targets do not cover the dataset");
  const int last_step = series.first_step + static_cast<int>(series.rows()) - 1;
  if (series.first_step > data.n_wo + 1 || last_step != data.n_t())
    throw std::invalid_argument("observable series does not cover the train and test segments");

  auto collect = [&](int step_begin, int step_end, Eigen::MatrixXd& x, std::vector<double>& y) {
    std::vector<Index> rows;
    y.clear();
    for (int k = step_begin; k <= step_end; ++k) {
      const auto& t = targets[static_cast<std::size_t>(k - 1)];
      if (!t) continue;
      rows.push_back(k - series.first_step);
      y.push_back(*t);
    }
    x.resize(static_cast<Index>(rows.size()), series.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
      x.row(static_cast<Index>(i)) = series.estimates.row(rows[i]);
  };

  Eigen::MatrixXd x_train, x_test;
  std::vector<double> y_train, y_test;
  collect(data.n_wo + 1, data.last_train_step(), x_train, y_train);
  collect(data.last_train_step() + 1, data.n_t(), x_test, y_test);
  if (y_train.empty()) throw std::invalid_argument("no training rows with a defined target");
  if (y_test.size() < 2) throw std::invalid_argument("fewer than 2 test rows with a defined target");

  TaskResult result;
  result.model = train_readout(x_train,
                               Eigen::Map<const Eigen::VectorXd>(
                                   y_train.data(), static_cast<Index>(y_train.size())),
                               ridge, series.observables.names());
  const Eigen::VectorXd pred = result.model.predict(x_test);
  result.predictions.assign(pred.data(), pred.data() + pred.size());
  result.targets = std::move(y_test);
  result.capacity = capacity(result.predictions, result.targets);
  result.train_rows = static_cast<int>(y_train.size());
  result.test_rows = static_cast<int>(result.targets.size());
  return result;
}

}  // namespace qrc
