#include "dvr/config.hpp"

#include "csv.hpp"
#include "dvr/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <set>

namespace dvr {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!obj.is_object()) {
    throw InputError(std::string(where) + ": expected an object");
  }
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw InputError(std::string(where) + ": unknown field '" + key + "'");
    }
  }
}

const json& required(const json& obj, const char* key, std::string_view where) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw InputError(std::string(where) + ": missing field '" + key + "'");
  }
  return *it;
}

std::string get_string(const json& v, std::string_view what) {
  if (!v.is_string()) throw InputError(std::string(what) + " must be a string");
  return v.get<std::string>();
}

double get_number(const json& v, std::string_view what) {
  if (!v.is_number()) throw InputError(std::string(what) + " must be a number");
  return v.get<double>();
}

UncertaintySpec parse_uncertainty(const json& u, const std::string& where) {
  reject_unknown(u, {"relative", "absolute_floor", "mode"}, where);
  UncertaintySpec spec;
  spec.relative = get_number(required(u, "relative", where), where + ".relative");
  spec.absolute_floor = get_number(required(u, "absolute_floor", where), where + ".absolute_floor");
  if (const auto it = u.find("mode"); it != u.end()) {
    const auto mode = get_string(*it, where + ".mode");
    if (mode == "a_priori") {
      spec.mode = UncertaintyMode::APriori;
    } else if (mode == "calibrated") {
      spec.mode = UncertaintyMode::Calibrated;
    } else {
      throw InputError(where + ".mode: unknown mode '" + mode + "'");
    }
  }
  validate(spec);
  return spec;
}

} // namespace

FieldConfig parse_field_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("topology: ") + e.what());
  }
  reject_unknown(doc, {"nodes", "constraints", "channels"}, "topology");

  std::vector<Node> nodes;
  const auto& jnodes = required(doc, "nodes", "topology");
  if (!jnodes.is_array()) throw InputError("topology.nodes must be an array");
  for (std::size_t i = 0; i < jnodes.size(); ++i) {
    const auto where = "topology.nodes[" + std::to_string(i) + "]";
    const auto& jn = jnodes[i];
    reject_unknown(jn, {"id", "name", "role", "tier"}, where);
    Node n;
    n.id = get_string(required(jn, "id", where), where + ".id");
    n.name = jn.contains("name") ? get_string(jn["name"], where + ".name") : n.id;
    n.role = parse_node_role(get_string(required(jn, "role", where), where + ".role"));
    if (jn.contains("tier")) {
      if (!jn["tier"].is_number_integer()) throw InputError(where + ".tier must be an integer");
      n.tier = jn["tier"].get<int>();
    }
    nodes.push_back(std::move(n));
  }

  std::vector<BalanceConstraint> constraints;
  if (const auto it = doc.find("constraints"); it != doc.end()) {
    if (!it->is_array()) throw InputError("topology.constraints must be an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto where = "topology.constraints[" + std::to_string(i) + "]";
      const auto& jc = (*it)[i];
      reject_unknown(jc, {"label", "plus", "minus"}, where);
      BalanceConstraint c;
      c.label = get_string(required(jc, "label", where), where + ".label");
      for (const auto& [key, sign] : {std::pair{"plus", 1}, std::pair{"minus", -1}}) {
        if (!jc.contains(key)) continue;
        if (!jc[key].is_array()) throw InputError(where + "." + key + " must be an array");
        for (const auto& jid : jc[key]) {
          const auto id = get_string(jid, where + "." + key + " entry");
          if (!c.coefficients.emplace(id, sign).second) {
            throw InputError(where + ": node '" + id + "' listed more than once");
          }
        }
      }
      constraints.push_back(std::move(c));
    }
  }

  NetworkTopology topology(std::move(nodes), std::move(constraints));

  std::vector<MeasurementChannel> channels;
  const auto& jchannels = required(doc, "channels", "topology");
  if (!jchannels.is_array()) throw InputError("topology.channels must be an array");
  for (std::size_t i = 0; i < jchannels.size(); ++i) {
    const auto where = "topology.channels[" + std::to_string(i) + "]";
    const auto& jc = jchannels[i];
    reject_unknown(jc, {"id", "node", "type", "alpha", "uncertainty"}, where);
    MeasurementChannel ch;
    ch.id = get_string(required(jc, "id", where), where + ".id");
    ch.node_id = get_string(required(jc, "node", where), where + ".node");
    ch.meter_type = parse_meter_type(get_string(required(jc, "type", where), where + ".type"));
    ch.alpha = jc.contains("alpha") ? get_number(jc["alpha"], where + ".alpha") : default_alpha(ch.meter_type);
    ch.uncertainty = parse_uncertainty(required(jc, "uncertainty", where), where + ".uncertainty");
    channels.push_back(std::move(ch));
  }
  validate_channels(topology, channels);
  return FieldConfig{std::move(topology), std::move(channels)};
}

FieldConfig load_field_config(const std::string& path) {
  return parse_field_config(detail::read_file(path));
}

void apply_alpha_overrides(std::vector<MeasurementChannel>& channels,
                           const std::vector<std::string>& overrides) {
  std::vector<std::pair<std::string, double>> by_type;
  std::vector<std::pair<std::string, double>> by_channel;
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) {
      throw InputError("alpha override '" + o + "' must look like key=value");
    }
    const auto key = o.substr(0, eq);
    const double value = detail::parse_double(detail::trim(std::string_view(o).substr(eq + 1)), 0);
    if (!(value > 0.0 && value < 1.0)) {
      throw InputError("alpha override '" + o + "' must lie strictly between 0 and 1");
    }
    const bool is_channel = std::any_of(channels.begin(), channels.end(),
                                        [&](const auto& c) { return c.id == key; });
    if (is_channel) {
      by_channel.emplace_back(key, value);
    } else if (key == "all" || try_parse_meter_type(key)) {
      by_type.emplace_back(key, value);
    } else {
      throw InputError("alpha override '" + o + "' names neither a meter type nor a channel");
    }
  }
  for (auto& ch : channels) {
    for (const auto& [key, value] : by_type) {
      if (key == "all" || key == to_string(ch.meter_type)) ch.alpha = value;
    }
    for (const auto& [key, value] : by_channel) {
      if (key == ch.id) ch.alpha = value;
    }
  }
}

} // namespace dvr
