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

#include "qrc/resources.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace {

using qrc::EnsembleSize;
using qrc::Protocol;
using qrc::ResourceParams;

ResourceParams desk() {
  ResourceParams p;
  p.dt = 1.0;
  p.n_t = 100;
  p.n_wo = 20;
  p.n_meas = EnsembleSize::finite(1);
  return p;
}

TEST(ExperimentalTime, DeskExample) {
  EXPECT_EQ(qrc::experimental_time(Protocol::olp, desk()), 300.0);
  EXPECT_EQ(qrc::experimental_time(Protocol::rwp, desk()), 4860.0);
  EXPECT_EQ(qrc::experimental_time(Protocol::rsp, desk()), 14580.0);
}

TEST(ExperimentalTime, SingleForecastStepDifference) {
  auto p = desk();
  p.n_t = p.n_wo + 1;
  p.dt = 2.5;
  p.n_meas = EnsembleSize::finite(7);
  EXPECT_DOUBLE_EQ(qrc::experimental_time(Protocol::rsp, p) - qrc::experimental_time(Protocol::rwp, p),
                   3.0 * 7 * 2.5);
}

TEST(ExperimentalTime, OnlineBeatsRewindingWithoutOverheads) {
  for (int n_wo : {2, 5, 20, 100})
    for (std::int64_t n_t : {n_wo + 1L, 500L, 5000L}) {
      auto p = desk();
      p.n_wo = n_wo;
      p.n_t = n_t;
      EXPECT_LT(qrc::experimental_time(Protocol::olp, p), qrc::experimental_time(Protocol::rwp, p));
    }
}

TEST(ExperimentalTime, LinearInEnsembleSize) {
  auto p = desk();
  p.tau_m = 0.1;
  p.tau_r = 0.3;
  auto q = p;
  q.n_meas = EnsembleSize::finite(2);
  for (auto proto : {Protocol::rsp, Protocol::rwp, Protocol::olp})
    EXPECT_DOUBLE_EQ(qrc::experimental_time(proto, q), 2.0 * qrc::experimental_time(proto, p));
}

TEST(ExperimentalTime, RestartingGrowsQuadratically) {
  auto at = [](Protocol proto, std::int64_t n_f) {
    auto p = desk();
    p.n_t = p.n_wo + n_f;
    return qrc::experimental_time(proto, p);
  };
  // Second differences in N_f: constant 3 N dt for RSP, zero for the others.
  for (std::int64_t n_f : {10, 100, 1000}) {
    EXPECT_NEAR(at(Protocol::rsp, n_f + 1) - 2 * at(Protocol::rsp, n_f) + at(Protocol::rsp, n_f - 1), 3.0, 1e-6);
    EXPECT_NEAR(at(Protocol::rwp, n_f + 1) - 2 * at(Protocol::rwp, n_f) + at(Protocol::rwp, n_f - 1), 0.0, 1e-6);
    EXPECT_NEAR(at(Protocol::olp, n_f + 1) - 2 * at(Protocol::olp, n_f) + at(Protocol::olp, n_f - 1), 0.0, 1e-6);
  }
}

TEST(ExperimentalTime, RejectsInvalidParameters) {
  auto p = desk();
  p.n_meas = EnsembleSize::infinite();
  EXPECT_THROW(qrc::experimental_time(Protocol::olp, p), std::invalid_argument);
  p = desk();
  p.n_t = p.n_wo;
  EXPECT_THROW(qrc::experimental_time(Protocol::olp, p), std::invalid_argument);
  p = desk();
  p.tau_m = -1;
  EXPECT_THROW(qrc::experimental_time(Protocol::rwp, p), std::invalid_argument);
}

TEST(ExperimentalTime, RunOverloadTakesProtocolEnsembleAndWashout) {
  qrc::ProtocolRun run;
  run.protocol = Protocol::rwp;
  run.n_meas = EnsembleSize::finite(1);
  run.n_wo = 20;
  auto p = desk();
  p.n_wo = 3;
  p.n_meas = EnsembleSize::finite(9);
  EXPECT_EQ(qrc::experimental_time(run, p), 4860.0);
}

TEST(GThreshold, Values) {
  EXPECT_NEAR(qrc::g_threshold(20, 1), 0.2294157, 1e-6);
  EXPECT_NEAR(qrc::g_threshold(20, 2), 0.5366630, 1e-6);
  EXPECT_DOUBLE_EQ(qrc::g_threshold(2, 1), 1.0);
  EXPECT_THROW(qrc::g_threshold(1, 1), std::invalid_argument);
  EXPECT_THROW(qrc::g_threshold(1, 2), std::invalid_argument);
  EXPECT_THROW(qrc::g_threshold(20, 3), std::invalid_argument);
}

// Equal-uncertainty/time chain: an online run at the threshold strength,
// with the ensemble that matches a strong rewinding measurement, costs no
// more time than that rewinding run (1% slack).
TEST(GThreshold, EqualUncertaintyOnlineRunIsNotSlower) {
  const double g_ref = 10.0;
  for (std::int64_t n_t : {1000, 2000, 10000})
    for (std::uint64_t n_ref : {1000ull, 1500000ull}) {
      auto p = desk();
      p.n_t = n_t;
      p.n_meas = EnsembleSize::finite(n_ref);
      const double rwp = qrc::experimental_time(Protocol::rwp, p);
      p.n_meas = EnsembleSize::finite(qrc::equivalent_measurements(qrc::g_threshold(20, 1), g_ref, n_ref, 1));
      EXPECT_LE(qrc::experimental_time(Protocol::olp, p), 1.01 * rwp) << n_t << " " << n_ref;
    }
}

}  // namespace
