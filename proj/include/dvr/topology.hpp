#pragma once

#include "dvr/uncertainty.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dvr {

enum class NodeRole { Well, Header, Separator, Export };
enum class MeterType { Mpfm, DdVfm, MVfm, Fiscal, Other };

std::string_view to_string(NodeRole role);
std::string_view to_string(MeterType type);
NodeRole parse_node_role(std::string_view text);
MeterType parse_meter_type(std::string_view text);
std::optional<MeterType> try_parse_meter_type(std::string_view text);

/// Significance level used when a channel does not declare its own.
double default_alpha(MeterType type);

struct Node {
  std::string id;
  std::string name;
  NodeRole role = NodeRole::Well;
  int tier = 0;
};

/// One mass balance: sum over coefficients[node] * value(node) = 0, with every
/// coefficient either +1 or -1.
struct BalanceConstraint {
  std::string label;
  std::map<std::string, int> coefficients;
};

struct MeasurementChannel {
  std::string id;
  std::string node_id;
  MeterType meter_type = MeterType::Other;
  double alpha = 0.01;
  UncertaintySpec uncertainty;
  bool active = true;
};

/// Nodes and balance constraints of a process network. Immutable; the
/// constructor rejects duplicate ids, unknown references, coefficients other
/// than +/-1 and constraints with fewer than two nodes.
class NetworkTopology {
public:
  NetworkTopology(std::vector<Node> nodes, std::vector<BalanceConstraint> constraints);

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<BalanceConstraint>& constraints() const { return constraints_; }
  bool has_node(std::string_view id) const;
  const Node& node(std::string_view id) const;

private:
  std::vector<Node> nodes_;
  std::vector<BalanceConstraint> constraints_;
};

/// Checks ids are unique, nodes resolve, alpha lies in (0,1) and the
/// uncertainty spec is valid.
void validate_channels(const NetworkTopology& topology, std::span<const MeasurementChannel> channels);

/// Measurement matrix C (N x M) and constraint matrix A (Q x M). Rows of C
/// follow channel_order, columns of both follow node_order; both orders are
/// lexicographic by id.
struct SystemMatrices {
  Eigen::MatrixXd C;
  Eigen::MatrixXd A;
  std::vector<std::string> channel_order;
  std::vector<std::string> node_order;
  std::vector<std::string> constraint_labels;

  std::size_t channels() const { return channel_order.size(); }
  std::size_t nodes() const { return node_order.size(); }
  std::size_t constraints() const { return static_cast<std::size_t>(A.rows()); }

  std::optional<std::size_t> channel_index(std::string_view id) const;
  std::optional<std::size_t> node_index(std::string_view id) const;
  /// Column of C holding the channel's node.
  std::size_t node_of_channel(std::size_t channel) const;
};

SystemMatrices build_system_matrices(const NetworkTopology& topology,
                                     std::span<const MeasurementChannel> channels);

/// Largest accepted condition number of any factorized system.
inline constexpr double kConditionLimit = 1e12;

struct EstimabilityReport {
  /// C' Sigma^-1 C is nonsingular: every node carries at least one channel.
  bool analytic_ok = false;
  /// [C; A] has full column rank: node values are uniquely determined.
  bool general_ok = false;
  /// A has full row rank (no redundant constraints).
  bool constraints_independent = false;
  std::size_t stacked_rank = 0;
  std::vector<std::string> unmeasured_nodes;
};

EstimabilityReport validate_estimability(const SystemMatrices& m, const Eigen::VectorXd& sigma2);

/// N + Q - M; throws EstimabilityError when [C; A] lacks full column rank.
int degrees_of_freedom(const SystemMatrices& m);

} // namespace dvr
