#pragma once

#include <Eigen/Dense>

#include <limits>

namespace dvr::detail {

/// Ratio of extreme singular values; infinity for a singular or empty matrix.
inline double condition_number(const Eigen::MatrixXd& m) {
  if (m.size() == 0) {
    return std::numeric_limits<double>::infinity();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (!(smin > 0.0)) {
    return std::numeric_limits<double>::infinity();
  }
  return s(0) / smin;
}

inline Eigen::Index numeric_rank(const Eigen::MatrixXd& m) {
  if (m.size() == 0) {
    return 0;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  const double tol = s(0) * static_cast<double>(std::max(m.rows(), m.cols())) *
                     std::numeric_limits<double>::epsilon();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > tol) {
      ++rank;
    }
  }
  return rank;
}

/// [C; A]
inline Eigen::MatrixXd stack_rows(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  Eigen::MatrixXd out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

} // namespace dvr::detail
