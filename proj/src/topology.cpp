#include "dvr/topology.hpp"

#include "dvr/error.hpp"
#include "linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace dvr {

std::string_view to_string(NodeRole role) {
  switch (role) {
  case NodeRole::Well: return "well";
  case NodeRole::Header: return "header";
  case NodeRole::Separator: return "separator";
  case NodeRole::Export: return "export";
  }
  return "well";
}

std::string_view to_string(MeterType type) {
  switch (type) {
  case MeterType::Mpfm: return "mpfm";
  case MeterType::DdVfm: return "dd_vfm";
  case MeterType::MVfm: return "m_vfm";
  case MeterType::Fiscal: return "fiscal";
  case MeterType::Other: return "other";
  }
  return "other";
}

NodeRole parse_node_role(std::string_view text) {
  for (auto r : {NodeRole::Well, NodeRole::Header, NodeRole::Separator, NodeRole::Export}) {
    if (to_string(r) == text) return r;
  }
  throw InputError("unknown node role '" + std::string(text) + "'");
}

std::optional<MeterType> try_parse_meter_type(std::string_view text) {
  for (auto t : {MeterType::Mpfm, MeterType::DdVfm, MeterType::MVfm, MeterType::Fiscal,
                 MeterType::Other}) {
    if (to_string(t) == text) return t;
  }
  return std::nullopt;
}

MeterType parse_meter_type(std::string_view text) {
  if (auto t = try_parse_meter_type(text)) return *t;
  throw InputError("unknown meter type '" + std::string(text) + "'");
}

double default_alpha(MeterType type) {
  switch (type) {
  case MeterType::Fiscal: return 1e-4;
  case MeterType::Mpfm: return 1e-3;
  case MeterType::DdVfm: return 1e-2;
  case MeterType::MVfm: return 1e-2;
  case MeterType::Other: return 1e-2;
  }
  return 1e-2;
}

NetworkTopology::NetworkTopology(std::vector<Node> nodes, std::vector<BalanceConstraint> constraints)
    : nodes_(std::move(nodes)), constraints_(std::move(constraints)) {
  if (nodes_.empty()) throw InputError("topology has no nodes");
  std::set<std::string> ids;
  for (const auto& n : nodes_) {
    if (n.id.empty()) throw InputError("node with empty id");
    if (n.tier < 0) throw InputError("node '" + n.id + "' has negative tier");
    if (!ids.insert(n.id).second) throw InputError("duplicate node id '" + n.id + "'");
  }
  for (const auto& c : constraints_) {
    std::size_t nonzero = 0;
    for (const auto& [node_id, coeff] : c.coefficients) {
      if (!ids.contains(node_id)) {
        throw InputError("constraint '" + c.label + "' references unknown node '" + node_id + "'");
      }
      if (coeff != 1 && coeff != -1) {
        throw InputError("constraint '" + c.label + "' has a coefficient other than +1/-1");
      }
      ++nonzero;
    }
    if (nonzero < 2) {
      throw InputError("constraint '" + c.label + "' must involve at least two nodes");
    }
  }
}

bool NetworkTopology::has_node(std::string_view id) const {
  return std::any_of(nodes_.begin(), nodes_.end(), [&](const Node& n) { return n.id == id; });
}

const Node& NetworkTopology::node(std::string_view id) const {
  for (const auto& n : nodes_) {
    if (n.id == id) return n;
  }
  throw InputError("unknown node '" + std::string(id) + "'");
}

void validate_channels(const NetworkTopology& topology, std::span<const MeasurementChannel> channels) {
  std::set<std::string> ids;
  for (const auto& ch : channels) {
    if (ch.id.empty()) throw InputError("channel with empty id");
    if (!ids.insert(ch.id).second) throw InputError("duplicate channel id '" + ch.id + "'");
    if (!topology.has_node(ch.node_id)) {
      throw InputError("channel '" + ch.id + "' references unknown node '" + ch.node_id + "'");
    }
    if (!(ch.alpha > 0.0 && ch.alpha < 1.0)) {
      throw InputError("channel '" + ch.id + "' alpha must lie strictly between 0 and 1");
    }
    validate(ch.uncertainty);
  }
}

std::optional<std::size_t> SystemMatrices::channel_index(std::string_view id) const {
  auto it = std::lower_bound(channel_order.begin(), channel_order.end(), id);
  if (it == channel_order.end() || *it != id) return std::nullopt;
  return static_cast<std::size_t>(it - channel_order.begin());
}

std::optional<std::size_t> SystemMatrices::node_index(std::string_view id) const {
  auto it = std::lower_bound(node_order.begin(), node_order.end(), id);
  if (it == node_order.end() || *it != id) return std::nullopt;
  return static_cast<std::size_t>(it - node_order.begin());
}

std::size_t SystemMatrices::node_of_channel(std::size_t channel) const {
  Eigen::Index col = 0;
  C.row(static_cast<Eigen::Index>(channel)).maxCoeff(&col);
  return static_cast<std::size_t>(col);
}

SystemMatrices build_system_matrices(const NetworkTopology& topology,
                                     std::span<const MeasurementChannel> channels) {
  if (topology.nodes().empty()) {
    throw InputError("topology has no nodes");
  }
  validate_channels(topology, channels);

  SystemMatrices m;
  for (const auto& n : topology.nodes()) m.node_order.push_back(n.id);
  std::sort(m.node_order.begin(), m.node_order.end());

  std::vector<const MeasurementChannel*> active;
  for (const auto& ch : channels) {
    if (ch.active) active.push_back(&ch);
  }
  if (active.empty()) {
    throw InputError("no active measurement channels");
  }
  std::sort(active.begin(), active.end(),
            [](const auto* a, const auto* b) { return a->id < b->id; });

  const auto n_nodes = static_cast<Eigen::Index>(m.node_order.size());
  m.C = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(active.size()), n_nodes);
  for (std::size_t i = 0; i < active.size(); ++i) {
    m.channel_order.push_back(active[i]->id);
    const auto col = *m.node_index(active[i]->node_id);
    m.C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col)) = 1.0;
  }

  const auto& cons = topology.constraints();
  m.A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cons.size()), n_nodes);
  for (std::size_t q = 0; q < cons.size(); ++q) {
    m.constraint_labels.push_back(cons[q].label);
    for (const auto& [node_id, coeff] : cons[q].coefficients) {
      const auto col = *m.node_index(node_id);
      m.A(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(col)) = coeff;
    }
  }
  return m;
}

EstimabilityReport validate_estimability(const SystemMatrices& m, const Eigen::VectorXd& sigma2) {
  if (sigma2.size() != static_cast<Eigen::Index>(m.channels())) {
    throw InputError("variance vector length does not match channel count");
  }
  for (Eigen::Index i = 0; i < sigma2.size(); ++i) {
    if (!(sigma2(i) > 0.0) || !std::isfinite(sigma2(i))) {
      throw InputError("variance of channel '" + m.channel_order[static_cast<std::size_t>(i)] +
                       "' must be strictly positive");
    }
  }

  EstimabilityReport report;
  const Eigen::VectorXd weights = sigma2.cwiseInverse();
  const Eigen::MatrixXd info = m.C.transpose() * weights.asDiagonal() * m.C;
  report.analytic_ok = detail::condition_number(info) <= kConditionLimit;

  for (std::size_t j = 0; j < m.nodes(); ++j) {
    if (m.C.col(static_cast<Eigen::Index>(j)).sum() == 0.0) {
      report.unmeasured_nodes.push_back(m.node_order[j]);
    }
  }

  const auto stacked = detail::stack_rows(m.C, m.A);
  report.stacked_rank = static_cast<std::size_t>(detail::numeric_rank(stacked));
  report.general_ok = report.stacked_rank == m.nodes();
  report.constraints_independent =
      static_cast<std::size_t>(detail::numeric_rank(m.A)) == m.constraints();
  return report;
}

int degrees_of_freedom(const SystemMatrices& m) {
  const auto stacked = detail::stack_rows(m.C, m.A);
  if (static_cast<std::size_t>(detail::numeric_rank(stacked)) != m.nodes()) {
    throw EstimabilityError("node values are not uniquely determined by measurements and constraints");
  }
  return static_cast<int>(m.channels() + m.constraints()) - static_cast<int>(m.nodes());
}

} // namespace dvr
