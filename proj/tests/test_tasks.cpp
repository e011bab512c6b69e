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

#include "qrc/protocols.hpp"
#include "qrc/tasks.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;

qrc::Rng test_rng(std::uint64_t a) { return qrc::Rng(17, qrc::stream_id(qrc::StreamTag::test, 5, a)); }

std::string write_temp(const std::string& name, const std::string& text) {
  const auto path = fs::temp_directory_path() / ("qrc_test_" + name);
  std::ofstream(path) << text;
  return path.string();
}

TEST(StmInputs, ReproducibleUniformAndSplit) {
  const auto a = qrc::generate_stm_inputs(1000, 5);
  const auto b = qrc::generate_stm_inputs(1000, 5);
  EXPECT_EQ(a.inputs, b.inputs);
  EXPECT_NE(a.inputs, qrc::generate_stm_inputs(1000, 6).inputs);
  EXPECT_EQ(a.n_wo, 20);
  EXPECT_EQ(a.train_count, 735);
  EXPECT_EQ(a.test_count, 245);
  for (double s : a.inputs) {
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
  const auto big = qrc::generate_stm_inputs(100000, 9);
  const double mean = std::accumulate(big.inputs.begin(), big.inputs.end(), 0.0) / 100000.0;
  EXPECT_NEAR(mean, 0.5, 0.005);
  EXPECT_THROW(qrc::generate_stm_inputs(21, 1), std::invalid_argument);
}

TEST(SeriesFile, MinMaxNormalizationAndSplit) {
  std::string text;
  std::vector<double> raw;
  for (int i = 0; i < 2100; ++i) {
    const double v = -100.0 + 400.0 * ((i * 37) % 2000) / 1999.0;
    raw.push_back(v);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g\n", v);
    text += buf;
  }
  const auto path = write_temp("series.txt", "\n" + text + "\n");
  const auto d = qrc::load_series_file(path, 2000);
  EXPECT_EQ(d.n_t(), 2000);
  EXPECT_EQ(d.n_wo, 20);
  EXPECT_EQ(d.train_count, 1386);
  EXPECT_EQ(d.test_count, 594);
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.begin() + 2000);
  for (int i = 0; i < 2000; ++i)
    EXPECT_NEAR(d.inputs[static_cast<std::size_t>(i)], (raw[static_cast<std::size_t>(i)] - *lo) / (*hi - *lo), 1e-15);
  EXPECT_NEAR(*lo, -100.0, 1e-9);
  EXPECT_NEAR(*hi, 300.0, 1e-9);
}

TEST(SeriesFile, Errors) {
  EXPECT_THROW(qrc::load_series_file("/nonexistent/qrc.txt", 100), std::runtime_error);
  EXPECT_THROW(qrc::load_series_file(write_temp("short.txt", "1\n2\n3\n"), 100), std::invalid_argument);
  EXPECT_THROW(qrc::load_series_file(write_temp("bad.txt", "1\n2\nabc\n"), 2), std::runtime_error);
  std::string constant;
  for (int i = 0; i < 50; ++i) constant += "4.2\n";
  EXPECT_THROW(qrc::load_series_file(write_temp("const.txt", constant), 50), std::invalid_argument);
}

TEST(Targets, StmExamples) {
  const std::vector<double> s{0.1, 0.2, 0.3, 0.4};
  const auto y = qrc::stm_targets(s, 1);
  EXPECT_FALSE(y[0].has_value());
  EXPECT_EQ(*y[1], 0.1);
  EXPECT_EQ(*y[3], 0.3);
  const auto y2 = qrc::stm_targets(s, 2);
  EXPECT_EQ(*y2[2], s[0]);
  EXPECT_EQ(*y2[3], s[1]);
  EXPECT_THROW(qrc::stm_targets(s, 0), std::invalid_argument);
  EXPECT_THROW(qrc::stm_targets(s, 4), std::invalid_argument);
}

TEST(Targets, ForecastExamples) {
  const std::vector<double> s{0.1, 0.2, 0.3};
  const auto y = qrc::forecast_targets(s, 1);
  EXPECT_EQ(*y[0], 0.2);
  EXPECT_EQ(*y[1], 0.3);
  EXPECT_FALSE(y[2].has_value());
  const std::vector<double> longer(50, 0.5);
  for (int eta : {1, 5, 9}) {
    const auto t = qrc::forecast_targets(longer, eta);
    EXPECT_EQ(std::count_if(t.begin(), t.end(), [](const auto& v) { return v.has_value(); }), 50 - eta);
  }
  EXPECT_THROW(qrc::forecast_targets(s, 3), std::invalid_argument);
  EXPECT_THROW(qrc::forecast_targets(s, 0), std::invalid_argument);
}

TEST(Capacity, Properties) {
  auto rng = test_rng(1);
  std::vector<double> y(300), noise(300), affine(300), flipped(300);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = rng.uniform();
    noise[i] = rng.uniform();
    affine[i] = 3.0 * y[i] - 2.0;
    flipped[i] = -0.5 * y[i] + 7.0;
  }
  EXPECT_NEAR(qrc::capacity(y, y), 1.0, 1e-12);
  EXPECT_NEAR(qrc::capacity(affine, y), 1.0, 1e-12);
  EXPECT_NEAR(qrc::capacity(flipped, y), 1.0, 1e-12);
  EXPECT_LT(qrc::capacity(noise, y), 0.05);
  EXPECT_NEAR(qrc::capacity(noise, y), qrc::capacity(y, noise), 1e-15);
  std::vector<double> mixed(300);
  for (std::size_t i = 0; i < y.size(); ++i) mixed[i] = y[i] + noise[i];
  const double c = qrc::capacity(mixed, y);
  std::vector<double> mixed_affine(300);
  for (std::size_t i = 0; i < y.size(); ++i) mixed_affine[i] = -4.0 * mixed[i] + 0.3;
  EXPECT_NEAR(qrc::capacity(mixed_affine, y), c, 1e-12);
  EXPECT_GE(c, 0.0);
  EXPECT_LE(c, 1.0);
  const std::vector<double> flat(300, 0.25);
  EXPECT_EQ(qrc::capacity(flat, y), 0.0);
  EXPECT_THROW(qrc::capacity(std::vector<double>{1.0}, std::vector<double>{1.0}), std::invalid_argument);
  EXPECT_THROW(qrc::capacity(y, std::vector<double>(299, 0.0)), std::invalid_argument);
}

TEST(SumCapacity, Examples) {
  EXPECT_EQ(qrc::sum_capacity(std::vector<double>(10, 1.0)), 10.0);
  EXPECT_EQ(qrc::sum_capacity(std::vector<double>(10, 0.0)), 0.0);
}

TEST(Readout, ExactFeatureRecovery) {
  auto rng = test_rng(2);
  Eigen::MatrixXd x(100, 5);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const Eigen::VectorXd y = x.col(2);
  const auto m = qrc::train_readout(x, y);
  EXPECT_NEAR(m.weights(2), 1.0, 1e-10);
  for (int j : {0, 1, 3, 4}) EXPECT_NEAR(m.weights(j), 0.0, 1e-10);
  EXPECT_NEAR(m.bias, 0.0, 1e-10);
  EXPECT_LT((m.predict(x) - y).norm(), 1e-9);
}

TEST(Readout, ConstantTargetIsBiasOnly) {
  auto rng = test_rng(3);
  Eigen::MatrixXd x(60, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const auto m = qrc::train_readout(x, Eigen::VectorXd::Constant(60, 0.7));
  EXPECT_NEAR(m.bias, 0.7, 1e-10);
  EXPECT_LT(m.weights.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Readout, MatchesNormalEquationsOracle) {
  auto rng = test_rng(4);
  Eigen::MatrixXd x(300, 10);
  Eigen::VectorXd y(300);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = rng.normal();
  Eigen::MatrixXd a(300, 11);
  a << x, Eigen::VectorXd::Ones(300);
  const Eigen::VectorXd oracle = (a.transpose() * a).ldlt().solve(a.transpose() * y);
  const auto m = qrc::train_readout(x, y);
  EXPECT_LT((m.weights - oracle.head(10)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_NEAR(m.bias, oracle(10), 1e-8);
}

TEST(Readout, RankDeficientFeaturesStayFinite) {
  auto rng = test_rng(5);
  Eigen::MatrixXd x(50, 3);
  for (Eigen::Index i = 0; i < 50; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = 2.0 * x(i, 0);
    x(i, 2) = 1.0;  // duplicates the bias column
  }
  const Eigen::VectorXd y = 3.0 * x.col(0).array() + 1.0;
  const auto m = qrc::train_readout(x, y);
  EXPECT_TRUE(m.weights.allFinite());
  EXPECT_LT((m.predict(x) - y).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Readout, NestedResidualNeverIncreases) {
  auto rng = test_rng(6);
  Eigen::MatrixXd x(120, 12);
  Eigen::VectorXd y(120);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = rng.normal() + x(i, 0);
  double previous = INFINITY;
  for (Eigen::Index cols = 1; cols <= 12; ++cols) {
    const Eigen::MatrixXd sub = x.leftCols(cols);
    const double r = (qrc::train_readout(sub, y).predict(sub) - y).squaredNorm();
    EXPECT_LE(r, previous + 1e-10);
    previous = r;
  }
}

TEST(Readout, RidgeLeavesBiasUnpenalizedAndShrinksWeights) {
  auto rng = test_rng(7);
  Eigen::MatrixXd x(80, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const Eigen::VectorXd y = (x.col(0).array() + 50.0).matrix();
  const auto plain = qrc::train_readout(x, y);
  const auto ridge = qrc::train_readout(x, y, 10.0);
  EXPECT_LT(ridge.weights.norm(), plain.weights.norm());
  EXPECT_NEAR(ridge.predict(x).mean(), y.mean(), 1e-10);
  EXPECT_THROW(qrc::train_readout(x, y, -1.0), std::invalid_argument);
  EXPECT_THROW(qrc::train_readout(Eigen::MatrixXd(0, 3), Eigen::VectorXd(0)), std::invalid_argument);
}

class StmTask : public ::testing::Test {
 protected:
  qrc::ReservoirSpec res = qrc::build_reservoir(6, 10.0, 1.0, 10.0, 1);
  qrc::Dataset data = qrc::generate_stm_inputs(1000, 1);
  qrc::ObservableSeries series = [this] {
    qrc::ProtocolRun run;
    run.protocol = qrc::Protocol::rsp;
    run.observables = qrc::ObservableSet::build(6, qrc::OrderSelector::order1);
    return qrc::run_rsp(res, data.samples(), run);
  }();
};

TEST_F(StmTask, CapacityDecaysWithDelay) {
  std::vector<double> c;
  for (int tau = 1; tau <= 10; ++tau)
    c.push_back(qrc::evaluate_task(series, data, qrc::stm_targets(data.inputs, tau)).capacity);
  EXPECT_GT(0.5 * (c[0] + c[1]), 0.5 * (c[4] + c[5]));
  EXPECT_GT(c[0], 0.9);
}

TEST_F(StmTask, RowsWithoutTargetsAreDropped) {
  const auto r = qrc::evaluate_task(series, data, qrc::stm_targets(data.inputs, 3));
  EXPECT_EQ(r.train_rows, 735);  // washout covers the first delays
  EXPECT_EQ(r.test_rows, 245);
  const auto far = qrc::evaluate_task(series, data, qrc::stm_targets(data.inputs, 25));
  EXPECT_EQ(far.train_rows, 735 - 5);
}

TEST_F(StmTask, ShuffledTestTargetsDestroyCapacity) {
  auto targets = qrc::stm_targets(data.inputs, 1);
  // Element i holds step i + 1, so the test segment starts at last_train_step().
  const auto begin = static_cast<std::size_t>(data.last_train_step());
  std::vector<double> values;
  for (std::size_t i = begin; i < targets.size(); ++i) values.push_back(*targets[i]);
  auto rng = test_rng(8);
  std::shuffle(values.begin(), values.end(), rng);
  for (std::size_t i = begin; i < targets.size(); ++i) targets[i] = values[i - begin];
  EXPECT_LT(qrc::evaluate_task(series, data, targets).capacity, 0.1);
}

TEST(Forecast, SyntheticStandInIsDeterministicAndPredictable) {
  const auto a = qrc::synthetic_laser_series(500, 3);
  EXPECT_EQ(a, qrc::synthetic_laser_series(500, 3));
  const auto d = qrc::forecast_dataset("synthetic", a, 400);
  EXPECT_EQ(d.train_count, 266);
  const auto res = qrc::build_reservoir(4, 10.0, 1.0, 10.0, 2);
  qrc::ProtocolRun run;
  run.protocol = qrc::Protocol::rsp;
  run.observables = qrc::ObservableSet::build(4, qrc::OrderSelector::both);
  const auto s = qrc::run_rsp(res, d.samples(), run);
  const auto r = qrc::evaluate_task(s, d, qrc::forecast_targets(d.inputs, 1));
  EXPECT_GT(r.capacity, 0.5);
}

}  // namespace
