#pragma once

#include "dvr/reconcile.hpp"
#include "dvr/topology.hpp"

#include <string>
#include <utility>
#include <vector>

namespace dvr::fixture {

struct System {
  NetworkTopology topology;
  std::vector<MeasurementChannel> channels;
  SystemMatrices m;
};

inline MeasurementChannel channel(std::string id, std::string node, double alpha = 0.01,
                                  MeterType type = MeterType::Other) {
  MeasurementChannel c;
  c.id = std::move(id);
  c.node_id = std::move(node);
  c.meter_type = type;
  c.alpha = alpha;
  return c;
}

inline System make(std::vector<Node> nodes, std::vector<BalanceConstraint> constraints,
                   std::vector<MeasurementChannel> channels) {
  NetworkTopology t(std::move(nodes), std::move(constraints));
  SystemMatrices m = build_system_matrices(t, channels);
  return System{std::move(t), std::move(channels), std::move(m)};
}

/// Two wells into a separator, one meter each: n1 + n2 - n3 = 0.
/// Node and channel ids sort so that C is the identity.
inline System single_tier(double alpha = 0.01) {
  return make({{"n1", "well 1", NodeRole::Well, 0},
               {"n2", "well 2", NodeRole::Well, 0},
               {"n3", "separator", NodeRole::Separator, 1}},
              {{"sep", {{"n1", 1}, {"n2", 1}, {"n3", -1}}}},
              {channel("m1", "n1", alpha), channel("m2", "n2", alpha), channel("m3", "n3", alpha)});
}

/// One well with two meters exporting through a third: n1 - n2 = 0.
inline System two_meter(double alpha = 0.01) {
  return make({{"n1", "well", NodeRole::Well, 0}, {"n2", "export", NodeRole::Export, 1}},
              {{"export", {{"n1", 1}, {"n2", -1}}}},
              {channel("m1", "n1", alpha), channel("m2", "n1", alpha), channel("m3", "n2", alpha)});
}

inline MeasurementVector measure(const SystemMatrices& m, std::vector<double> y,
                                 std::vector<double> sigma2 = {}) {
  MeasurementVector v;
  v.values = Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  v.sigma2 = sigma2.empty() ? Eigen::VectorXd::Ones(static_cast<Eigen::Index>(y.size()))
                            : Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(
                                  sigma2.data(), static_cast<Eigen::Index>(sigma2.size())));
  v.channel_order = m.channel_order;
  return v;
}

} // namespace dvr::fixture
