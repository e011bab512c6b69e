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

// Wall-clock accounting for the three protocols and the minimum measurement
// strength at which online processing keeps pace with rewinding.

#include "qrc/measurement.hpp"
#include "qrc/protocols.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace qrc {

struct ResourceParams {
  double tau_m = 0.0;  ///< measurement duration
  double tau_r = 0.0;  ///< reset / preparation duration
  double dt = 1.0;     ///< duration of one input step
  std::int64_t n_t = 1000;
  std::int64_t n_wo = 20;
  EnsembleSize n_meas = EnsembleSize::finite(1);

  std::int64_t n_f() const noexcept { return n_t - n_wo; }
  double tau_wo() const noexcept { return static_cast<double>(n_wo) * dt; }

  void validate() const {
    if (!(tau_m >= 0.0) || !(tau_r >= 0.0) || !(dt >= 0.0))
      throw std::invalid_argument("resource durations must be >= 0");
    if (n_wo < 0) throw std::invalid_argument("N_wo must be >= 0");
    if (n_f() < 1) throw std::invalid_argument("N_t - N_wo must be >= 1");
    if (n_meas.is_infinite())
      throw std::invalid_argument("experimental time is unbounded for infinite N_meas");
  }
};

/// Total experimental time; the factor 3 counts one ensemble per axis.
inline double experimental_time(Protocol protocol, const ResourceParams& p) {
  p.validate();
  const double n = p.n_meas.as_double();
  const double nf = static_cast<double>(p.n_f());
  const double rwp = 3.0 * n * (p.tau_wo() + (p.tau_wo() + p.tau_r + p.tau_m) * nf);
  switch (protocol) {
    case Protocol::rwp: return rwp;
    case Protocol::rsp: return rwp + 3.0 * n * (0.5 * nf * (nf + 1.0) * p.dt);
    case Protocol::olp: return 3.0 * n * (p.tau_wo() + (p.dt + p.tau_m) * nf);
  }
  throw std::logic_error("unhandled protocol");
}

/// Uses the run's protocol, N_meas and N_wo; timing and N_t come from `p`.
inline double experimental_time(const ProtocolRun& run, ResourceParams p) {
  p.n_meas = run.n_meas;
  p.n_wo = run.n_wo;
  return experimental_time(run.protocol, p);
}

/// Smallest g for which an OLP with the same uncertainty as a projective RWP
/// needs no more total time (single-qubit order 1, pair order 2).
inline double g_threshold(int n_wo, int order) {
  double denom = 0.0;
  if (order == 1)
    denom = static_cast<double>(n_wo) - 1.0;
  else if (order == 2)
    denom = std::sqrt(static_cast<double>(n_wo)) - 1.0;
  else
    throw std::invalid_argument("g_threshold: order must be 1 or 2");
  if (!(denom > 0.0))
    throw std::invalid_argument("g_threshold: needs N_wo >= 2, got " + std::to_string(n_wo));
  return std::sqrt(1.0 / denom);
}

}  // namespace qrc
