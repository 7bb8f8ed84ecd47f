#pragma once

#include "dvr/reconcile.hpp"
#include "dvr/topology.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dvr {

/// Channels whose dimensionless redundancy sigma_i^2 * W_ii falls below this
/// are not tested.
inline constexpr double kTestableFloor = 1e-10;

/// Two |z| values closer than this are treated as equal when deciding whether
/// a detection pinpoints one channel.
inline constexpr double kTieTolerance = 1e-6;

/// Measurement-test statistics, aligned with channel_order.
struct TestStatistics {
  std::vector<std::string> channel_order;
  /// d = Sigma^-1 a.
  Eigen::VectorXd d;
  /// Diagonal of W = Cov(d).
  Eigen::VectorXd w_diag;
  /// d_i / sqrt(W_ii); NaN where the channel is not testable.
  Eigen::VectorXd z;
  std::vector<bool> testable;
};

/// Diagonal of W = Sigma^-1 (I - C R) Sigma (I - C R)' Sigma^-1 for any
/// linear reconciliation gain R.
Eigen::VectorXd test_covariance(const SystemMatrices& m, const Eigen::VectorXd& sigma2,
                                const Eigen::MatrixXd& gain);

TestStatistics normalized_statistics(const MeasurementVector& y, const SystemMatrices& m);
TestStatistics normalized_statistics(const MeasurementVector& y, const SystemMatrices& m,
                                     const ReconciliationResult& reconciled);

/// Two-sided criterion z_{alpha/2} = Phi^-1(1 - alpha/2).
double test_criterion(double alpha);

/// Channel ids of testable channels by |z| descending, ties by id ascending.
/// Magnitudes agreeing to 1e-9 count as ties.
std::vector<std::string> rank_statistics(const TestStatistics& stats);

enum class DetectionStatus { Clean, Identified, LocalizedNotIdentified, Untestable };
std::string_view to_string(DetectionStatus status);

struct ChannelDecision {
  std::string id;
  double z = 0.0;
  double threshold = 0.0;
  bool flagged = false;
  bool testable = false;
};

struct DetectionReport {
  std::vector<ChannelDecision> channels;
  std::vector<std::string> ranked;
  DetectionStatus status = DetectionStatus::Clean;

  std::vector<std::string> flagged() const;
  const ChannelDecision* find(std::string_view id) const;
};

/// Applies each channel's own alpha. The status is LocalizedNotIdentified when
/// two or more flagged channels share the largest |z|.
DetectionReport detect(const TestStatistics& stats, std::span<const MeasurementChannel> channels);

struct EliminationPolicy {
  enum class Kind { MaxAbsZ, ThresholdRule, Never };

  Kind kind = Kind::Never;
  /// ThresholdRule: a flagged channel is removed only if it reads below this...
  std::optional<double> low_production_threshold;
  /// ...while its node is expected, from the remaining channels, to produce at least this.
  std::optional<double> expected_production_floor;

  void validate() const;
};

std::string_view to_string(EliminationPolicy::Kind kind);
EliminationPolicy::Kind parse_policy_kind(std::string_view text);

struct Iteration {
  /// Channels removed before this pass, in elimination order.
  std::vector<std::string> eliminated;
  SystemMatrices matrices;
  MeasurementVector measurements;
  ReconciliationResult reconciliation;
  TestStatistics statistics;
  DetectionReport detection;
  int degrees_of_freedom = 0;
};

enum class TerminalStatus { Clean, GuardStop, NonRedundant };
std::string_view to_string(TerminalStatus status);

struct IterationTrace {
  std::vector<Iteration> iterations;
  TerminalStatus terminal_status = TerminalStatus::Clean;
  std::string stop_reason;

  const Iteration& last() const { return iterations.back(); }
};

/// Reconcile, test, remove at most one channel chosen by `policy`, repeat.
/// A removal is refused when the reduced system would not be estimable or
/// would have fewer than one degree of freedom. `max_iter` bounds the number
/// of reconciliation passes. `y` must cover exactly the active channels.
IterationTrace detect_and_eliminate(const MeasurementVector& y, const NetworkTopology& topology,
                                    std::span<const MeasurementChannel> channels,
                                    const EliminationPolicy& policy, int max_iter = 5);

} // namespace dvr
