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

#include <cmath>
#include <vector>

namespace {

using qrc::EnsembleSize;
using qrc::NoiseMode;
using qrc::ObservableSet;
using qrc::OrderSelector;
using qrc::Protocol;
using qrc::ProtocolRun;

std::vector<qrc::InputSample> inputs(int n, std::uint64_t seed = 1) {
  return qrc::generate_stm_inputs(n, seed, 0 + 20).samples();
}

ProtocolRun make_run(Protocol p, NoiseMode m, int n_qubits, OrderSelector o = OrderSelector::both) {
  ProtocolRun run;
  run.protocol = p;
  run.noise = m;
  run.observables = ObservableSet::build(n_qubits, o);
  run.seed = 99;
  return run;
}

class PaperRegime : public ::testing::Test {
 protected:
  qrc::ReservoirSpec res = qrc::build_reservoir(6, 10.0, 1.0, 10.0, 1);
  std::vector<qrc::InputSample> xs = inputs(80);
};

TEST_F(PaperRegime, RspRowCountAndExactness) {
  auto run = make_run(Protocol::rsp, NoiseMode::ideal_unperturbed, 6);
  const auto s = qrc::run_rsp(res, xs, run);
  EXPECT_EQ(s.rows(), 80 - 20);
  EXPECT_EQ(s.first_step, 21);
  EXPECT_EQ(s.cols(), static_cast<qrc::Index>(6 * 3 + 15 * 3));
  // Independent forward evolution.
  qrc::DensityMatrix rho = qrc::DensityMatrix::zero_state(6);
  for (int k = 1; k <= 30; ++k) rho = qrc::step_unperturbed(res, rho, xs[k - 1]);
  EXPECT_NEAR(s.estimates(30 - 21, 0), qrc::expectation(rho, run.observables[0].pauli(6)), 1e-13);
  EXPECT_TRUE(s.uncertainties.isZero());
  // Surrogate at infinite N_meas is a no-op.
  run.noise = NoiseMode::gaussian_surrogate;
  EXPECT_EQ(qrc::run_rsp(res, xs, run).estimates, s.estimates);
}

TEST_F(PaperRegime, RwpWithFullWindowEqualsRsp) {
  const auto reset = qrc::DensityMatrix::zero_state(6);
  for (std::size_t k : {1u, 5u, 21u, 40u}) {
    const auto rho = qrc::rewound_state(res, xs, k, 40, reset);
    qrc::DensityMatrix direct = reset;
    for (std::size_t j = 1; j <= k; ++j) direct = qrc::step_unperturbed(res, direct, xs[j - 1]);
    EXPECT_EQ(rho.matrix(), direct.matrix());
  }
}

TEST_F(PaperRegime, RwpRowsAreRewoundStates) {
  auto run = make_run(Protocol::rwp, NoiseMode::ideal_unperturbed, 6, OrderSelector::order1);
  const auto s = qrc::run_rwp(res, xs, run);
  const auto reset = qrc::DensityMatrix::zero_state(6);
  for (std::size_t k : {21u, 50u, 80u}) {
    qrc::DensityMatrix rho = reset;
    for (std::size_t j = k - 19; j <= k; ++j) rho = qrc::step_unperturbed(res, rho, xs[j - 1]);
    const auto row = static_cast<qrc::Index>(k) - 21;
    for (qrc::Index c = 0; c < s.cols(); ++c)
      EXPECT_NEAR(s.estimates(row, c), qrc::expectation(rho, run.observables[c].pauli(6)), 1e-13);
  }
}

// At N_wo = 20 the rewound series still differs from the full history at the
// percent level for this coupling realization; the gap closes exponentially.
TEST(RwpConvergence, ApproachesRspAsWindowGrows) {
  const auto res = qrc::build_reservoir(6, 10.0, 1.0, 10.0, 1);
  const auto xs = inputs(160);
  std::vector<double> gaps;
  for (int n_wo : {20, 40, 60, 100}) {
    auto run = make_run(Protocol::rsp, NoiseMode::ideal_unperturbed, 6, OrderSelector::order1);
    run.n_wo = n_wo;
    const auto rsp = qrc::run_rsp(res, xs, run);
    run.protocol = Protocol::rwp;
    gaps.push_back((rsp.estimates - qrc::run_rwp(res, xs, run).estimates).cwiseAbs().maxCoeff());
  }
  for (std::size_t i = 1; i < gaps.size(); ++i) EXPECT_LT(gaps[i], gaps[i - 1]);
  EXPECT_LT(gaps.back(), 1e-3);
}

TEST(RwpConvergence, ResetStateIsIrrelevantForLongWindow) {
  const auto res = qrc::build_reservoir(6, 10.0, 1.0, 10.0, 1);
  const auto xs = inputs(140);
  auto run = make_run(Protocol::rwp, NoiseMode::ideal_unperturbed, 6, OrderSelector::order1);
  run.n_wo = 100;
  const auto a = qrc::run_rwp(res, xs, run);
  run.reset_state = qrc::DensityMatrix::maximally_mixed(6);
  const auto b = qrc::run_rwp(res, xs, run);
  EXPECT_LT((a.estimates - b.estimates).cwiseAbs().maxCoeff(), 1e-3);
}

TEST_F(PaperRegime, RwpWindowOneIsMemoryless) {
  auto run = make_run(Protocol::rwp, NoiseMode::ideal_unperturbed, 6, OrderSelector::order1);
  run.n_wo = 1;
  std::vector<qrc::InputSample> a = xs, b = xs;
  b[10] = qrc::InputSample(0.0);
  b[11] = qrc::InputSample(1.0);
  a[11] = qrc::InputSample(1.0);
  const auto sa = qrc::run_rwp(res, a, run);
  const auto sb = qrc::run_rwp(res, b, run);
  // Row for step 12 (index 10) depends only on s_12.
  EXPECT_EQ(sa.estimates.row(10), sb.estimates.row(10));
}

TEST_F(PaperRegime, OlpWeakLimitEqualsUnperturbed) {
  auto run = make_run(Protocol::olp, NoiseMode::ideal_with_backaction, 6);
  run.g = 1e-7;
  const auto olp = qrc::run_olp(res, xs, run);
  const auto rsp = qrc::run_rsp(res, xs, make_run(Protocol::rsp, NoiseMode::ideal_unperturbed, 6));
  EXPECT_LT((olp.estimates - rsp.estimates).cwiseAbs().maxCoeff(), 1e-9);
}

TEST_F(PaperRegime, StrongMeasurementDepartsFromUnperturbed) {
  auto obs = ObservableSet::build(6, OrderSelector::order1, {qrc::Axis::x});
  auto run = make_run(Protocol::olp, NoiseMode::ideal_with_backaction, 6);
  run.observables = obs;
  auto rsp_run = make_run(Protocol::rsp, NoiseMode::ideal_unperturbed, 6);
  rsp_run.observables = obs;
  const auto ideal = qrc::run_rsp(res, xs, rsp_run);
  run.g = 0.3;
  const double weak = (qrc::run_olp(res, xs, run).estimates - ideal.estimates).cwiseAbs().mean();
  run.g = 10.0;
  const double strong = (qrc::run_olp(res, xs, run).estimates - ideal.estimates).cwiseAbs().mean();
  EXPECT_GT(strong, 2.0 * weak);
}

TEST_F(PaperRegime, OlpIdealIsBitwiseDeterministic) {
  auto run = make_run(Protocol::olp, NoiseMode::ideal_with_backaction, 6);
  run.g = 0.5;
  run.workers = 1;
  const auto a = qrc::run_olp(res, xs, run);
  run.workers = 3;
  EXPECT_EQ(a.estimates, qrc::run_olp(res, xs, run).estimates);
}

TEST_F(PaperRegime, TrajectoryEstimatesAgreeWithBackactionOracle) {
  const auto short_inputs = std::vector<qrc::InputSample>(xs.begin(), xs.begin() + 30);
  auto run = make_run(Protocol::olp, NoiseMode::trajectory, 6);
  run.g = 0.3;
  run.n_meas = EnsembleSize::finite(10000);
  const auto traj = qrc::run_olp(res, short_inputs, run);
  run.noise = NoiseMode::ideal_with_backaction;
  const auto ideal = qrc::run_olp(res, short_inputs, run);
  const Eigen::ArrayXXd z = (traj.estimates - ideal.estimates).array().abs() / traj.uncertainties.array();
  const double within = (z <= 4.0).cast<double>().mean();
  EXPECT_GE(within, 0.99) << "max z " << z.maxCoeff();
}

TEST(Trajectory, IdenticalAcrossWorkerCountsAndRepresentations) {
  const auto res = qrc::build_reservoir(3, 10.0, 1.0, 10.0, 2);
  const auto xs = inputs(30, 2);
  auto run = make_run(Protocol::olp, NoiseMode::trajectory, 3);
  run.g = 0.6;
  run.n_meas = EnsembleSize::finite(300);  // spans several 64-realization blocks
  run.workers = 1;
  const auto a = qrc::run_olp(res, xs, run);
  for (int w : {2, 5}) {
    run.workers = w;
    EXPECT_EQ(a.estimates, qrc::run_olp(res, xs, run).estimates) << w << " workers";
  }
  run.seed = 100;
  EXPECT_NE(a.estimates, qrc::run_olp(res, xs, run).estimates);
}

TEST(Trajectory, DensityRepresentationAgreesStatistically) {
  const auto res = qrc::build_reservoir(3, 10.0, 1.0, 10.0, 3);
  const auto xs = inputs(30, 3);
  auto run = make_run(Protocol::olp, NoiseMode::trajectory, 3);
  run.g = 1.0;
  run.n_meas = EnsembleSize::finite(4000);
  const auto pure = qrc::run_olp(res, xs, run);
  run.trajectory_state = qrc::TrajectoryState::density;
  run.seed = 7;
  const auto dens = qrc::run_olp(res, xs, run);
  const Eigen::ArrayXXd z =
      (pure.estimates - dens.estimates).array().abs() / (std::sqrt(2.0) * pure.uncertainties.array());
  EXPECT_GE((z <= 4.0).cast<double>().mean(), 0.99);
}

TEST(Trajectory, BatchMeansAreUnbiased) {
  const auto res = qrc::build_reservoir(3, 10.0, 1.0, 10.0, 4);
  const auto xs = inputs(24, 4);
  auto run = make_run(Protocol::olp, NoiseMode::ideal_with_backaction, 3, OrderSelector::order1);
  run.g = 0.5;
  const auto ideal = qrc::run_olp(res, xs, run);
  run.noise = NoiseMode::trajectory;
  run.n_meas = EnsembleSize::finite(500);
  const int batches = 20;
  Eigen::MatrixXd drift = Eigen::MatrixXd::Zero(ideal.rows(), ideal.cols());
  for (int b = 0; b < batches; ++b) {
    run.seed = 1000 + static_cast<std::uint64_t>(b);
    drift += qrc::run_olp(res, xs, run).estimates - ideal.estimates;
  }
  drift /= batches;
  const double se = qrc::uncertainty_bound(0.5, 500.0 * batches, 1);
  // Aggregate z-score over all cells of one column: consistent with zero at 3 sigma.
  for (qrc::Index c = 0; c < drift.cols(); ++c) {
    const double col_mean = drift.col(c).mean();
    EXPECT_LT(std::abs(col_mean), 3.0 * se) << ideal.observables[static_cast<std::size_t>(c)].name();
  }
}

TEST(LiteralMode, RspSamplingMatchesExactWithinNoise) {
  const auto res = qrc::build_reservoir(3, 10.0, 1.0, 10.0, 5);
  const auto xs = inputs(40, 5);
  auto run = make_run(Protocol::rsp, NoiseMode::trajectory, 3);
  run.g = 10.0;
  run.n_meas = EnsembleSize::finite(1000);
  const auto lit = qrc::run_rsp(res, xs, run);
  run.noise = NoiseMode::ideal_unperturbed;
  const auto exact = qrc::run_rsp(res, xs, run);
  const Eigen::ArrayXXd z = (lit.estimates - exact.estimates).array().abs() / lit.uncertainties.array();
  EXPECT_GE((z <= 4.0).cast<double>().mean(), 0.99);
  run.protocol = Protocol::rwp;
  run.noise = NoiseMode::trajectory;
  EXPECT_EQ(qrc::run_rwp(res, xs, run).rows(), exact.rows());
}

TEST(Surrogate, NoiseHasBoundAsStandardDeviation) {
  const auto res = qrc::build_reservoir(4, 10.0, 1.0, 10.0, 6);
  const auto xs = inputs(400, 6);
  auto run = make_run(Protocol::rwp, NoiseMode::ideal_unperturbed, 4);
  run.g = 10.0;
  const auto exact = qrc::run_rwp(res, xs, run);
  run.noise = NoiseMode::gaussian_surrogate;
  run.n_meas = EnsembleSize::finite(1000);
  const auto noisy = qrc::run_rwp(res, xs, run);
  for (qrc::Index c : {0, 20}) {
    const int order = run.observables[static_cast<std::size_t>(c)].order();
    const double s = qrc::uncertainty_bound(10.0, 1000.0, order);
    const Eigen::VectorXd d = noisy.estimates.col(c) - exact.estimates.col(c);
    const double sd = std::sqrt(d.squaredNorm() / static_cast<double>(d.size()));
    EXPECT_NEAR(sd, s, 0.15 * s);
    EXPECT_DOUBLE_EQ(noisy.uncertainties(0, c), s);
  }
}

TEST(Errors, InvalidCombinationsAreRejected) {
  const auto res = qrc::build_reservoir(3, 10.0, 1.0, 10.0, 7);
  const auto xs = inputs(30, 7);
  auto run = make_run(Protocol::olp, NoiseMode::gaussian_surrogate, 3);
  run.g = 0.0;
  run.n_meas = EnsembleSize::finite(100);
  EXPECT_THROW(qrc::run_olp(res, xs, run), std::invalid_argument);
  run.noise = NoiseMode::ideal_unperturbed;
  run.g = 0.3;
  EXPECT_THROW(qrc::run_olp(res, xs, run), std::invalid_argument);
  run.noise = NoiseMode::trajectory;
  run.n_meas = EnsembleSize::infinite();
  EXPECT_THROW(qrc::run_olp(res, xs, run), std::invalid_argument);

  auto rsp = make_run(Protocol::rsp, NoiseMode::trajectory, 3);
  rsp.n_meas = EnsembleSize::finite(1500000);
  EXPECT_THROW(qrc::run_rsp(res, xs, rsp), std::invalid_argument);
  rsp.noise = NoiseMode::ideal_with_backaction;
  EXPECT_THROW(qrc::run_rsp(res, xs, rsp), std::invalid_argument);

  auto rwp = make_run(Protocol::rwp, NoiseMode::ideal_unperturbed, 3);
  rwp.n_wo = 30;
  EXPECT_THROW(qrc::run_rwp(res, xs, rwp), std::invalid_argument);
  rwp.n_wo = 0;
  EXPECT_THROW(qrc::run_rwp(res, xs, rwp), std::invalid_argument);
  rwp.n_wo = 20;
  rwp.observables = ObservableSet::build(4, OrderSelector::order1);
  EXPECT_THROW(qrc::run_rwp(res, xs, rwp), std::invalid_argument);
}

TEST(Protocol, NamesRoundTrip) {
  for (auto p : {Protocol::rsp, Protocol::rwp, Protocol::olp}) EXPECT_EQ(qrc::parse_protocol(qrc::to_string(p)), p);
  for (auto m : {NoiseMode::trajectory, NoiseMode::gaussian_surrogate, NoiseMode::ideal_unperturbed,
                 NoiseMode::ideal_with_backaction})
    EXPECT_EQ(qrc::parse_noise_mode(qrc::to_string(m)), m);
  EXPECT_THROW(qrc::parse_protocol("xyz"), std::invalid_argument);
}

}  // namespace
