#pragma once

#include "dvr/topology.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace dvr {

/// A network topology together with the channels metering it.
struct FieldConfig {
  NetworkTopology topology;
  std::vector<MeasurementChannel> channels;
};

/// Parses the topology document:
///   nodes:       [{id, name, role, tier}]
///   constraints: [{label, plus: [node ids], minus: [node ids]}]
///   channels:    [{id, node, type, alpha, uncertainty: {relative, absolute_floor, mode}}]
/// Unknown fields are rejected. `name` defaults to the id, `tier` to 0, `alpha`
/// to the meter type's default and `mode` to a_priori.
FieldConfig parse_field_config(std::string_view json_text);
FieldConfig load_field_config(const std::string& path);

/// Applies `key=value` significance overrides, where key is a meter type name
/// or a channel id (channel ids win).
void apply_alpha_overrides(std::vector<MeasurementChannel>& channels,
                           const std::vector<std::string>& overrides);

} // namespace dvr
