#pragma once

#include <Eigen/Dense>
#include <vector>

namespace rnml {

/// Dense data matrix; rows are observations, columns are coordinates.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Code-length in nats. +infinity marks an input the model cannot encode.
using CodeLength = double;

/// Cluster labels, one per observation, each in 1..K.
using ClusterAssignment = std::vector<int>;

}  // namespace rnml
