#include "dvr/reconcile.hpp"

#include "dvr/error.hpp"
#include "linalg.hpp"

#include <cmath>
#include <limits>

namespace dvr {

namespace {

void check_dimensions(const MeasurementVector& y, const SystemMatrices& m) {
  y.validate();
  if (static_cast<std::size_t>(y.values.size()) != m.channels()) {
    throw InputError("measurement vector has " + std::to_string(y.values.size()) +
                     " entries but the system has " + std::to_string(m.channels()) + " channels");
  }
  if (y.channel_order != m.channel_order) {
    throw InputError("measurement vector channel order does not match the system matrices");
  }
}

void finish(ReconciliationResult& r, const MeasurementVector& y, const SystemMatrices& m) {
  r.y_hat_channels = m.C * r.y_hat_nodes;
  if (r.adjustments.size() == 0) r.adjustments = y.values - r.y_hat_channels;

  const Eigen::VectorXd naive = naive_node_estimates(y, m);
  r.imbalance_pre.resize(m.A.rows());
  for (Eigen::Index q = 0; q < m.A.rows(); ++q) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < m.A.cols(); ++j) {
      if (m.A(q, j) != 0.0) sum += m.A(q, j) * naive(j);
    }
    r.imbalance_pre(q) = sum;
  }

  r.balance_residual = m.A.rows() > 0 ? (m.A * r.y_hat_nodes).cwiseAbs().maxCoeff() : 0.0;
  if (!std::isfinite(r.balance_residual) || !r.y_hat_nodes.allFinite()) {
    throw NumericalError("reconciliation produced non-finite values");
  }
  if (r.balance_residual > balance_tolerance(y.values)) {
    throw NumericalError("reconciled values violate the balance constraints (residual " +
                         std::to_string(r.balance_residual) + ")");
  }
}

} // namespace

void MeasurementVector::validate() const {
  if (values.size() != sigma2.size() ||
      static_cast<std::size_t>(values.size()) != channel_order.size()) {
    throw InputError("measurement vector lengths differ");
  }
  for (Eigen::Index i = 0; i < sigma2.size(); ++i) {
    if (!(sigma2(i) > 0.0) || !std::isfinite(sigma2(i))) {
      throw InputError("variance of channel '" + channel_order[static_cast<std::size_t>(i)] +
                       "' must be strictly positive");
    }
    if (!std::isfinite(values(i))) {
      throw InputError("measurement of channel '" + channel_order[static_cast<std::size_t>(i)] +
                       "' is not finite");
    }
  }
}

std::string_view to_string(ReconcileMethod method) {
  return method == ReconcileMethod::Analytic ? "analytic" : "kkt";
}

double balance_tolerance(const Eigen::VectorXd& y) {
  const double scale = y.size() > 0 ? y.cwiseAbs().maxCoeff() : 0.0;
  return 1e-9 * std::max(1.0, scale);
}

ReconciliationResult reconcile_analytic(const MeasurementVector& y, const SystemMatrices& m) {
  check_dimensions(y, m);
  const auto n_nodes = static_cast<Eigen::Index>(m.nodes());
  const Eigen::VectorXd w = y.sigma2.cwiseInverse();
  const Eigen::MatrixXd info = m.C.transpose() * w.asDiagonal() * m.C;
  if (detail::condition_number(info) > kConditionLimit) {
    throw EstimabilityError("C' Sigma^-1 C is singular: some node has no active channel");
  }
  const Eigen::MatrixXd V = info.ldlt().solve(Eigen::MatrixXd::Identity(n_nodes, n_nodes));

  // Unconstrained estimate, then the correction that removes its imbalance.
  // Forming the adjustments from the imbalance rather than as y - C y_hat
  // avoids cancellation when the adjustments are small next to the readings.
  const Eigen::VectorXd x = naive_node_estimates(y, m);
  Eigen::MatrixXd projector = Eigen::MatrixXd::Identity(n_nodes, n_nodes);
  Eigen::VectorXd correction = Eigen::VectorXd::Zero(n_nodes);
  if (m.A.rows() > 0) {
    const Eigen::MatrixXd S = m.A * V * m.A.transpose();
    if (detail::condition_number(S) > kConditionLimit) {
      throw EstimabilityError("A V A' is singular: balance constraints are linearly dependent");
    }
    const auto S_ldlt = S.ldlt();
    projector -= m.A.transpose() * S_ldlt.solve(m.A * V);
    correction = V * m.A.transpose() * S_ldlt.solve(m.A * x);
  }

  ReconciliationResult r;
  r.method = ReconcileMethod::Analytic;
  r.gain = V * projector * m.C.transpose() * w.asDiagonal();
  r.y_hat_nodes = x - correction;
  r.adjustments = (y.values - m.C * x) + m.C * correction;
  r.unconstrained_cov = V;
  finish(r, y, m);
  return r;
}

ReconciliationResult reconcile_kkt(const MeasurementVector& y, const SystemMatrices& m) {
  check_dimensions(y, m);
  const auto n_nodes = static_cast<Eigen::Index>(m.nodes());
  const auto n_cons = m.A.rows();
  const auto n_chan = static_cast<Eigen::Index>(m.channels());
  const Eigen::VectorXd w = y.sigma2.cwiseInverse();
  const Eigen::MatrixXd H = m.C.transpose() * w.asDiagonal() * m.C;

  // Constraint rows scaled to the magnitude of H keep the condition number
  // independent of the measurement units.
  const double scale = std::max(H.diagonal().maxCoeff(), std::numeric_limits<double>::min());

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n_nodes + n_cons, n_nodes + n_cons);
  K.topLeftCorner(n_nodes, n_nodes) = H;
  K.topRightCorner(n_nodes, n_cons) = scale * m.A.transpose();
  K.bottomLeftCorner(n_cons, n_nodes) = scale * m.A;
  if (detail::condition_number(K) > kConditionLimit) {
    throw EstimabilityError(
        "saddle-point system is singular: node values are not determined or constraints are dependent");
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(K);

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_nodes + n_cons);
  rhs.head(n_nodes) = m.C.transpose() * w.asDiagonal() * y.values;

  Eigen::MatrixXd rhs_gain = Eigen::MatrixXd::Zero(n_nodes + n_cons, n_chan);
  rhs_gain.topRows(n_nodes) = m.C.transpose() * w.asDiagonal();

  ReconciliationResult r;
  r.method = ReconcileMethod::Kkt;
  r.y_hat_nodes = lu.solve(rhs).head(n_nodes);
  r.gain = lu.solve(rhs_gain).topRows(n_nodes);
  finish(r, y, m);
  return r;
}

ReconciliationResult reconcile(const MeasurementVector& y, const SystemMatrices& m) {
  bool every_node_measured = true;
  for (Eigen::Index j = 0; j < m.C.cols(); ++j) {
    every_node_measured = every_node_measured && m.C.col(j).sum() > 0.0;
  }
  return every_node_measured ? reconcile_analytic(y, m) : reconcile_kkt(y, m);
}

Eigen::VectorXd adjustments(const MeasurementVector& y, const SystemMatrices& m,
                            const Eigen::VectorXd& y_hat_nodes) {
  if (static_cast<std::size_t>(y.values.size()) != m.channels() ||
      static_cast<std::size_t>(y_hat_nodes.size()) != m.nodes()) {
    throw InputError("adjustments: dimension mismatch");
  }
  return y.values - m.C * y_hat_nodes;
}

Eigen::VectorXd naive_node_estimates(const MeasurementVector& y, const SystemMatrices& m) {
  const Eigen::VectorXd w = y.sigma2.cwiseInverse();
  const Eigen::VectorXd weight_sum = m.C.transpose() * w;
  const Eigen::VectorXd weighted = m.C.transpose() * w.cwiseProduct(y.values);
  Eigen::VectorXd out(weight_sum.size());
  for (Eigen::Index j = 0; j < out.size(); ++j) {
    out(j) = weight_sum(j) > 0.0 ? weighted(j) / weight_sum(j)
                                 : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

Eigen::MatrixXd estimate_covariance(const ReconciliationResult& result, const Eigen::VectorXd& sigma2) {
  return result.gain * sigma2.asDiagonal() * result.gain.transpose();
}

} // namespace dvr
