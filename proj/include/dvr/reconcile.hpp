#pragma once

#include "dvr/topology.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dvr {

/// Measured values y (Sm3/d) and variances sigma^2 ((Sm3/d)^2), aligned with
/// channel_order.
struct MeasurementVector {
  Eigen::VectorXd values;
  Eigen::VectorXd sigma2;
  std::vector<std::string> channel_order;

  /// Throws InputError on length mismatch or a nonpositive variance.
  void validate() const;
};

enum class ReconcileMethod { Analytic, Kkt };
std::string_view to_string(ReconcileMethod method);

struct ReconciliationResult {
  ReconcileMethod method = ReconcileMethod::Analytic;
  Eigen::VectorXd y_hat_nodes;
  /// C * y_hat, one entry per channel.
  Eigen::VectorXd y_hat_channels;
  /// y - C * y_hat.
  Eigen::VectorXd adjustments;
  /// A applied to the per-node inverse-variance means of the raw readings;
  /// NaN for a constraint touching an unmeasured node.
  Eigen::VectorXd imbalance_pre;
  /// Gain R with y_hat = R * y (M x N).
  Eigen::MatrixXd gain;
  /// V = (C' Sigma^-1 C)^-1, present only on the analytic path.
  std::optional<Eigen::MatrixXd> unconstrained_cov;
  /// max |A * y_hat|.
  double balance_residual = 0.0;
};

/// Closed form y_hat = R y with R = V (I - A'(A V A')^-1 A V) C' Sigma^-1.
/// Requires every node to carry at least one channel.
ReconciliationResult reconcile_analytic(const MeasurementVector& y, const SystemMatrices& m);

/// Solves the saddle-point system of the equality-constrained weighted least
/// squares problem. Only needs [C; A] to have full column rank.
ReconciliationResult reconcile_kkt(const MeasurementVector& y, const SystemMatrices& m);

/// Analytic path when every node is measured, saddle-point path otherwise.
ReconciliationResult reconcile(const MeasurementVector& y, const SystemMatrices& m);

/// a = y - C * y_hat.
Eigen::VectorXd adjustments(const MeasurementVector& y, const SystemMatrices& m,
                            const Eigen::VectorXd& y_hat_nodes);

/// Inverse-variance weighted mean of the channels on each node; NaN for nodes
/// without a channel.
Eigen::VectorXd naive_node_estimates(const MeasurementVector& y, const SystemMatrices& m);

/// Covariance of the reconciled node values, R Sigma R'.
Eigen::MatrixXd estimate_covariance(const ReconciliationResult& result, const Eigen::VectorXd& sigma2);

/// Permitted |A y_hat| for a reconciliation of `y`: 1e-9 * max(1, max|y|).
double balance_tolerance(const Eigen::VectorXd& y);

} // namespace dvr
