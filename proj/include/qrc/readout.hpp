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

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qrc {

/// Linear map y = w . x + bias over one observable set.
struct ReadoutModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  std::vector<std::string> observables;

  Eigen::VectorXd predict(const Eigen::MatrixXd& features) const {
    if (features.cols() != weights.size())
      throw std::invalid_argument("readout expects " + std::to_string(weights.size()) +
                                  " feature columns, got " + std::to_string(features.cols()));
    return (features * weights).array() + bias;
  }
};

/// Relative singular-value cutoff of the least-squares pseudoinverse.
inline constexpr double kPseudoinverseCutoff = 1e-10;

/// Least squares on [X 1] through a thresholded SVD. With ridge > 0 the
/// problem is centered first so that only the weights are penalized.
inline ReadoutModel train_readout(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                                  double ridge = 0.0, std::vector<std::string> names = {}) {
  if (features.rows() == 0) throw std::invalid_argument("empty training set");
  if (features.rows() != targets.size())
    throw std::invalid_argument("feature rows and targets differ in length");
  if (!(ridge >= 0.0)) throw std::invalid_argument("ridge must be >= 0");
  if (!names.empty() && static_cast<Eigen::Index>(names.size()) != features.cols())
    throw std::invalid_argument("observable names do not match feature columns");
  const Eigen::Index rows = features.rows();
  const Eigen::Index cols = features.cols();

  ReadoutModel model;
  model.observables = std::move(names);
  if (ridge == 0.0) {
    Eigen::MatrixXd a(rows, cols + 1);
    a.leftCols(cols) = features;
    a.col(cols).setOnes();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(kPseudoinverseCutoff);
    const Eigen::VectorXd w = svd.solve(targets);
    model.weights = w.head(cols);
    model.bias = w(cols);
    return model;
  }
  const Eigen::RowVectorXd mean_x = features.colwise().mean();
  const double mean_y = targets.mean();
  Eigen::MatrixXd a(rows + cols, cols);
  a.topRows(rows) = features.rowwise() - mean_x;
  a.bottomRows(cols) = std::sqrt(ridge) * Eigen::MatrixXd::Identity(cols, cols);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(rows + cols);
  b.head(rows) = targets.array() - mean_y;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(kPseudoinverseCutoff);
  model.weights = svd.solve(b);
  model.bias = mean_y - mean_x.dot(model.weights);
  return model;
}

}  // namespace qrc
