#include "dvr/ged.hpp"

#include "dvr/error.hpp"
#include "dvr/normal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace dvr {

Eigen::VectorXd test_covariance(const SystemMatrices& m, const Eigen::VectorXd& sigma2,
                                const Eigen::MatrixXd& gain) {
  const auto n = static_cast<Eigen::Index>(m.channels());
  if (sigma2.size() != n || gain.rows() != static_cast<Eigen::Index>(m.nodes()) || gain.cols() != n) {
    throw InputError("test_covariance: dimension mismatch");
  }
  const Eigen::MatrixXd residual_map = Eigen::MatrixXd::Identity(n, n) - m.C * gain;
  const Eigen::MatrixXd scaled = sigma2.cwiseInverse().asDiagonal() * residual_map;
  // diag(S Sigma S') without forming the full product.
  return scaled.array().square().matrix() * sigma2;
}

TestStatistics normalized_statistics(const MeasurementVector& y, const SystemMatrices& m) {
  return normalized_statistics(y, m, reconcile(y, m));
}

TestStatistics normalized_statistics(const MeasurementVector& y, const SystemMatrices& m,
                                     const ReconciliationResult& reconciled) {
  TestStatistics s;
  s.channel_order = m.channel_order;
  s.d = reconciled.adjustments.cwiseQuotient(y.sigma2);
  s.w_diag = test_covariance(m, y.sigma2, reconciled.gain);
  s.z.resize(s.d.size());
  s.testable.resize(static_cast<std::size_t>(s.d.size()));
  for (Eigen::Index i = 0; i < s.d.size(); ++i) {
    const bool ok = s.w_diag(i) * y.sigma2(i) > kTestableFloor;
    s.testable[static_cast<std::size_t>(i)] = ok;
    s.z(i) = ok ? s.d(i) / std::sqrt(s.w_diag(i)) : std::numeric_limits<double>::quiet_NaN();
  }
  return s;
}

double test_criterion(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw InputError("significance level must lie in (0, 1]");
  }
  // Lower tail keeps precision for small alpha.
  return -normal_quantile(0.5 * alpha);
}

std::vector<std::string> rank_statistics(const TestStatistics& stats) {
  struct Entry {
    double key;
    const std::string* id;
  };
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < stats.channel_order.size(); ++i) {
    if (!stats.testable[i]) continue;
    const double mag = std::abs(stats.z(static_cast<Eigen::Index>(i)));
    entries.push_back({std::round(mag * 1e9), &stats.channel_order[i]});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.key != b.key) return a.key > b.key;
    return *a.id < *b.id;
  });
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(*e.id);
  return out;
}

std::string_view to_string(DetectionStatus status) {
  switch (status) {
  case DetectionStatus::Clean: return "clean";
  case DetectionStatus::Identified: return "identified";
  case DetectionStatus::LocalizedNotIdentified: return "localized_not_identified";
  case DetectionStatus::Untestable: return "untestable";
  }
  return "clean";
}

std::vector<std::string> DetectionReport::flagged() const {
  std::vector<std::string> out;
  for (const auto& c : channels) {
    if (c.flagged) out.push_back(c.id);
  }
  return out;
}

const ChannelDecision* DetectionReport::find(std::string_view id) const {
  for (const auto& c : channels) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

DetectionReport detect(const TestStatistics& stats, std::span<const MeasurementChannel> channels) {
  std::map<std::string_view, const MeasurementChannel*> by_id;
  for (const auto& ch : channels) by_id[ch.id] = &ch;

  DetectionReport report;
  bool any_testable = false;
  double top = -1.0;
  for (std::size_t i = 0; i < stats.channel_order.size(); ++i) {
    const auto& id = stats.channel_order[i];
    const auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw InputError("detect: no channel definition for '" + id + "'");
    }
    ChannelDecision c;
    c.id = id;
    c.testable = stats.testable[i];
    c.z = stats.z(static_cast<Eigen::Index>(i));
    c.threshold = test_criterion(it->second->alpha);
    c.flagged = c.testable && std::abs(c.z) > c.threshold;
    any_testable = any_testable || c.testable;
    if (c.flagged) top = std::max(top, std::abs(c.z));
    report.channels.push_back(std::move(c));
  }
  report.ranked = rank_statistics(stats);

  if (!any_testable) {
    report.status = DetectionStatus::Untestable;
  } else if (top < 0.0) {
    report.status = DetectionStatus::Clean;
  } else {
    const double tol = kTieTolerance * std::max(1.0, top);
    const auto tied = std::count_if(report.channels.begin(), report.channels.end(), [&](const auto& c) {
      return c.flagged && std::abs(c.z) >= top - tol;
    });
    report.status = tied >= 2 ? DetectionStatus::LocalizedNotIdentified : DetectionStatus::Identified;
  }
  return report;
}

void EliminationPolicy::validate() const {
  if (kind != Kind::ThresholdRule) return;
  if (!low_production_threshold || !expected_production_floor) {
    throw InputError("threshold_rule policy needs both a low-production threshold and an expected-production floor");
  }
  if (*low_production_threshold < 0.0 || *expected_production_floor < 0.0) {
    throw InputError("threshold_rule thresholds must be nonnegative");
  }
}

std::string_view to_string(EliminationPolicy::Kind kind) {
  switch (kind) {
  case EliminationPolicy::Kind::MaxAbsZ: return "max_abs_z";
  case EliminationPolicy::Kind::ThresholdRule: return "threshold_rule";
  case EliminationPolicy::Kind::Never: return "never";
  }
  return "never";
}

EliminationPolicy::Kind parse_policy_kind(std::string_view text) {
  for (auto k : {EliminationPolicy::Kind::MaxAbsZ, EliminationPolicy::Kind::ThresholdRule,
                 EliminationPolicy::Kind::Never}) {
    if (to_string(k) == text) return k;
  }
  throw InputError("unknown elimination policy '" + std::string(text) + "'");
}

std::string_view to_string(TerminalStatus status) {
  switch (status) {
  case TerminalStatus::Clean: return "clean";
  case TerminalStatus::GuardStop: return "guard_stop";
  case TerminalStatus::NonRedundant: return "non_redundant";
  }
  return "clean";
}

namespace {

MeasurementVector select(const MeasurementVector& y, const std::vector<std::string>& order) {
  MeasurementVector out;
  out.channel_order = order;
  out.values.resize(static_cast<Eigen::Index>(order.size()));
  out.sigma2.resize(static_cast<Eigen::Index>(order.size()));
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto it = std::find(y.channel_order.begin(), y.channel_order.end(), order[i]);
    if (it == y.channel_order.end()) {
      throw InputError("no measurement for active channel '" + order[i] + "'");
    }
    const auto src = it - y.channel_order.begin();
    out.values(static_cast<Eigen::Index>(i)) = y.values(src);
    out.sigma2(static_cast<Eigen::Index>(i)) = y.sigma2(src);
  }
  return out;
}

std::vector<MeasurementChannel> without(std::span<const MeasurementChannel> channels, std::string_view id) {
  std::vector<MeasurementChannel> out(channels.begin(), channels.end());
  for (auto& ch : out) {
    if (ch.id == id) ch.active = false;
  }
  return out;
}

bool any_active(std::span<const MeasurementChannel> channels) {
  return std::any_of(channels.begin(), channels.end(), [](const auto& c) { return c.active; });
}

/// Estimable with at least one degree of freedom after removing `id`.
bool removal_permitted(const NetworkTopology& topology, std::span<const MeasurementChannel> channels,
                       std::string_view id, const MeasurementVector& y) {
  const auto trial = without(channels, id);
  if (!any_active(trial)) return false;
  const auto m = build_system_matrices(topology, trial);
  const auto est = validate_estimability(m, select(y, m.channel_order).sigma2);
  if (!est.general_ok || !est.constraints_independent) return false;
  return degrees_of_freedom(m) >= 1;
}

/// Node production implied by every channel except `id`; falls back to the
/// current reconciled value when the remaining channels cannot determine it.
double expected_without(const NetworkTopology& topology, std::span<const MeasurementChannel> channels,
                        std::string_view id, const MeasurementVector& y, const Iteration& current) {
  const auto ch_index = *current.matrices.channel_index(id);
  const auto node = current.matrices.node_of_channel(ch_index);
  const double fallback = current.reconciliation.y_hat_nodes(static_cast<Eigen::Index>(node));
  const auto trial = without(channels, id);
  if (!any_active(trial)) return fallback;
  const auto m = build_system_matrices(topology, trial);
  const auto yt = select(y, m.channel_order);
  const auto est = validate_estimability(m, yt.sigma2);
  if (!est.general_ok || !est.constraints_independent) return fallback;
  const auto r = reconcile(yt, m);
  return r.y_hat_nodes(static_cast<Eigen::Index>(*m.node_index(current.matrices.node_order[node])));
}

std::optional<std::string> choose(const EliminationPolicy& policy, const NetworkTopology& topology,
                                  std::span<const MeasurementChannel> channels,
                                  const MeasurementVector& y, const Iteration& current) {
  const auto& det = current.detection;
  switch (policy.kind) {
  case EliminationPolicy::Kind::Never:
    return std::nullopt;
  case EliminationPolicy::Kind::MaxAbsZ:
    if (det.status != DetectionStatus::Identified) return std::nullopt;
    for (const auto& id : det.ranked) {
      if (det.find(id)->flagged) return id;
    }
    return std::nullopt;
  case EliminationPolicy::Kind::ThresholdRule:
    for (const auto& id : det.ranked) {
      if (!det.find(id)->flagged) continue;
      const auto i = static_cast<Eigen::Index>(*current.matrices.channel_index(id));
      if (current.measurements.values(i) >= *policy.low_production_threshold) continue;
      if (expected_without(topology, channels, id, y, current) >= *policy.expected_production_floor) {
        return id;
      }
    }
    return std::nullopt;
  }
  return std::nullopt;
}

} // namespace

IterationTrace detect_and_eliminate(const MeasurementVector& y, const NetworkTopology& topology,
                                    std::span<const MeasurementChannel> channels,
                                    const EliminationPolicy& policy, int max_iter) {
  policy.validate();
  if (max_iter < 1) {
    throw InputError("max_iter must be at least 1");
  }
  y.validate();
  std::vector<MeasurementChannel> current(channels.begin(), channels.end());
  {
    const auto m0 = build_system_matrices(topology, current);
    if (m0.channel_order.size() != y.channel_order.size()) {
      throw InputError("measurement vector does not cover exactly the active channels");
    }
  }

  IterationTrace trace;
  std::vector<std::string> eliminated;
  for (int pass = 0; pass < max_iter; ++pass) {
    Iteration it;
    it.eliminated = eliminated;
    it.matrices = build_system_matrices(topology, current);
    it.measurements = select(y, it.matrices.channel_order);
    const auto est = validate_estimability(it.matrices, it.measurements.sigma2);
    if (!est.general_ok) {
      throw EstimabilityError("node values are not uniquely determined by measurements and constraints");
    }
    if (!est.constraints_independent) {
      throw EstimabilityError("balance constraints are linearly dependent");
    }
    it.degrees_of_freedom = degrees_of_freedom(it.matrices);
    it.reconciliation = reconcile(it.measurements, it.matrices);
    it.statistics = normalized_statistics(it.measurements, it.matrices, it.reconciliation);
    it.detection = detect(it.statistics, current);
    trace.iterations.push_back(std::move(it));
    const auto& last = trace.iterations.back();

    if (last.detection.status == DetectionStatus::Clean) {
      trace.terminal_status = TerminalStatus::Clean;
      trace.stop_reason = "no gross error detected";
      return trace;
    }
    if (last.detection.status == DetectionStatus::Untestable) {
      trace.terminal_status = TerminalStatus::NonRedundant;
      trace.stop_reason = "no channel is testable";
      return trace;
    }
    if (pass + 1 == max_iter) {
      trace.terminal_status = TerminalStatus::GuardStop;
      trace.stop_reason = "iteration limit reached";
      return trace;
    }
    const auto candidate = choose(policy, topology, current, y, last);
    if (!candidate) {
      trace.terminal_status = TerminalStatus::GuardStop;
      trace.stop_reason = "policy declined to eliminate";
      return trace;
    }
    if (!removal_permitted(topology, current, *candidate, y)) {
      trace.terminal_status = TerminalStatus::GuardStop;
      trace.stop_reason = "removing '" + *candidate + "' would leave the system without redundancy";
      return trace;
    }
    current = without(current, *candidate);
    eliminated.push_back(*candidate);
  }
  trace.terminal_status = TerminalStatus::GuardStop;
  trace.stop_reason = "iteration limit reached";
  return trace;
}

} // namespace dvr
