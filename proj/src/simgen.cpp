#include "dvr/simgen.hpp"

#include "csv.hpp"
#include "dvr/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <random>
#include <set>

namespace dvr {

double GrossErrorScenario::apply(Timestamp t, double value) const {
  if (!active_at(t)) return value;
  switch (kind) {
  case Kind::Bias:
    return value + magnitude;
  case Kind::Drift:
    return value + magnitude * static_cast<double>((t - start).count()) / 86400.0;
  case Kind::DropoutZero:
    return 0.0;
  }
  return value;
}

std::string_view to_string(GrossErrorScenario::Kind kind) {
  switch (kind) {
  case GrossErrorScenario::Kind::Bias: return "bias";
  case GrossErrorScenario::Kind::Drift: return "drift";
  case GrossErrorScenario::Kind::DropoutZero: return "dropout_zero";
  }
  return "bias";
}

GrossErrorScenario::Kind parse_scenario_kind(std::string_view text) {
  for (auto k : {GrossErrorScenario::Kind::Bias, GrossErrorScenario::Kind::Drift,
                 GrossErrorScenario::Kind::DropoutZero}) {
    if (to_string(k) == text) return k;
  }
  throw InputError("unknown scenario kind '" + std::string(text) + "'");
}

void ScenarioConfig::validate() const {
  if (window.count() <= 0 || cadence.count() <= 0 || horizon.count() <= 0) {
    throw InputError("scenario: horizon, cadence and window must be positive");
  }
  if (window.count() % cadence.count() != 0) {
    throw InputError("scenario: window must be a whole number of cadence steps");
  }
  if (horizon.count() % window.count() != 0) {
    throw InputError("scenario: horizon must be a whole number of windows");
  }
  if (window_floor(start, window) != start) {
    throw InputError("scenario: start must lie on a window boundary");
  }
  if (!(sample_jitter >= 0.0)) {
    throw InputError("scenario: sample_jitter must be nonnegative");
  }
  if (!(noise_scale >= 0.0 && std::isfinite(noise_scale))) {
    throw InputError("scenario: noise_scale must be nonnegative");
  }
  std::set<std::string> seen;
  for (const auto& w : wells) {
    if (!field.topology.has_node(w.node)) {
      throw InputError("scenario: well '" + w.node + "' is not a topology node");
    }
    if (!seen.insert(w.node).second) {
      throw InputError("scenario: well '" + w.node + "' listed twice");
    }
    if (!(w.baseline > 0.0) || !(w.noise >= 0.0) || !(w.seasonal_period_days > 0.0) ||
        !(std::abs(w.seasonal_amplitude) < 1.0)) {
      throw InputError("scenario: well '" + w.node + "' has invalid rate parameters");
    }
  }
  for (const auto& s : scenarios) {
    const bool known = std::any_of(field.channels.begin(), field.channels.end(),
                                   [&](const auto& c) { return c.id == s.channel_id; });
    if (!known) {
      throw InputError("scenario references unknown channel '" + s.channel_id + "'");
    }
    if (!(s.start < s.end)) {
      throw InputError("scenario on '" + s.channel_id + "': start must precede end");
    }
    if (!std::isfinite(s.magnitude)) {
      throw InputError("scenario on '" + s.channel_id + "': magnitude must be finite");
    }
  }
}

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) throw InputError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw InputError(where + ": unknown field '" + key + "'");
    }
  }
}

template <typename T>
T field_or(const json& obj, const char* key, T fallback, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw InputError(where + "." + key + ": wrong type");
  }
}

template <typename T>
T field_req(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw InputError(where + ": missing field '" + key + "'");
  return field_or<T>(obj, key, T{}, where);
}

/// Nearest multiple of 2^-10; sums of such values are exact in double.
double quantize(double v) {
  return std::round(v * 1024.0) / 1024.0;
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint32_t stream, std::uint32_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream, index};
  return std::mt19937_64(seq);
}

/// Fills every non-well node from the balances by repeated substitution.
std::vector<double> complete_truth(const NetworkTopology& topology, const std::vector<std::string>& node_order,
                                   std::map<std::string, double> known) {
  bool progress = true;
  while (progress) {
    progress = false;
    for (const auto& c : topology.constraints()) {
      const std::string* unknown = nullptr;
      int n_unknown = 0;
      double partial = 0.0;
      for (const auto& [id, coeff] : c.coefficients) {
        if (const auto it = known.find(id); it != known.end()) {
          partial += coeff * it->second;
        } else {
          unknown = &id;
          ++n_unknown;
        }
      }
      if (n_unknown == 1) {
        known[*unknown] = -partial / c.coefficients.at(*unknown);
        progress = true;
      }
    }
  }
  std::vector<double> out;
  for (const auto& id : node_order) {
    const auto it = known.find(id);
    if (it == known.end()) {
      throw InputError("scenario: node '" + id + "' is neither a well nor determined by the balances");
    }
    if (it->second < 0.0) {
      throw InputError("scenario: balances give node '" + id + "' a negative rate");
    }
    out.push_back(it->second);
  }
  for (const auto& c : topology.constraints()) {
    double sum = 0.0;
    for (const auto& [id, coeff] : c.coefficients) sum += coeff * known.at(id);
    if (sum != 0.0) {
      throw InputError("scenario: well rates cannot satisfy constraint '" + c.label + "'");
    }
  }
  return out;
}

} // namespace

ScenarioConfig parse_scenario_config(std::string_view json_text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("scenario: ") + e.what());
  }
  const std::string where = "scenario";
  reject_unknown(doc,
                 {"topology", "start", "horizon", "cadence", "window", "sample_jitter", "noise_scale", "wells",
                  "scenarios"},
                 where);

  auto topo_path = std::filesystem::path(field_req<std::string>(doc, "topology", where));
  if (topo_path.is_relative()) topo_path = std::filesystem::path(base_dir) / topo_path;

  ScenarioConfig cfg{.field = load_field_config(topo_path.string())};
  cfg.start = parse_timestamp(field_or<std::string>(doc, "start", "2021-01-01T00:00:00Z", where));
  cfg.horizon = parse_duration(field_req<std::string>(doc, "horizon", where));
  cfg.cadence = parse_duration(field_or<std::string>(doc, "cadence", "1h", where));
  cfg.window = parse_duration(field_or<std::string>(doc, "window", "24h", where));
  cfg.sample_jitter = field_or<double>(doc, "sample_jitter", 1.0, where);
  cfg.noise_scale = field_or<double>(doc, "noise_scale", 1.0, where);

  const auto& wells = doc.value("wells", json::array());
  if (!wells.is_array()) throw InputError("scenario.wells must be an array");
  for (std::size_t i = 0; i < wells.size(); ++i) {
    const auto w_where = where + ".wells[" + std::to_string(i) + "]";
    reject_unknown(wells[i], {"node", "baseline", "noise", "seasonal_amplitude", "seasonal_period_days"}, w_where);
    WellSpec w;
    w.node = field_req<std::string>(wells[i], "node", w_where);
    w.baseline = field_req<double>(wells[i], "baseline", w_where);
    w.noise = field_or<double>(wells[i], "noise", 0.0, w_where);
    w.seasonal_amplitude = field_or<double>(wells[i], "seasonal_amplitude", 0.0, w_where);
    w.seasonal_period_days = field_or<double>(wells[i], "seasonal_period_days", 30.0, w_where);
    cfg.wells.push_back(std::move(w));
  }

  const auto& scenarios = doc.value("scenarios", json::array());
  if (!scenarios.is_array()) throw InputError("scenario.scenarios must be an array");
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const auto s_where = where + ".scenarios[" + std::to_string(i) + "]";
    reject_unknown(scenarios[i], {"channel", "kind", "magnitude", "start", "end"}, s_where);
    GrossErrorScenario s;
    s.channel_id = field_req<std::string>(scenarios[i], "channel", s_where);
    s.kind = parse_scenario_kind(field_req<std::string>(scenarios[i], "kind", s_where));
    s.magnitude = field_or<double>(scenarios[i], "magnitude", 0.0, s_where);
    s.start = parse_timestamp(field_req<std::string>(scenarios[i], "start", s_where));
    s.end = parse_timestamp(field_req<std::string>(scenarios[i], "end", s_where));
    cfg.scenarios.push_back(std::move(s));
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario_config(const std::string& path) {
  const auto dir = std::filesystem::path(path).parent_path().string();
  return parse_scenario_config(detail::read_file(path), dir.empty() ? "." : dir);
}

bool CampaignTruth::faulty(std::string_view channel, Timestamp window_start) const {
  const auto window_end = window_start + window;
  return std::any_of(scenarios.begin(), scenarios.end(), [&](const GrossErrorScenario& s) {
    return s.channel_id == channel && s.overlaps(window_start, window_end);
  });
}

SyntheticCampaign simulate_campaign(const ScenarioConfig& config, std::uint64_t seed) {
  config.validate();
  const auto& topology = config.field.topology;

  SyntheticCampaign campaign;
  auto& truth = campaign.truth;
  truth.seed = seed;
  truth.window = config.window;
  truth.scenarios = config.scenarios;
  for (const auto& n : topology.nodes()) truth.node_order.push_back(n.id);
  std::sort(truth.node_order.begin(), truth.node_order.end());

  const auto n_windows = static_cast<std::size_t>(config.horizon.count() / config.window.count());
  for (std::size_t w = 0; w < n_windows; ++w) {
    truth.window_starts.push_back(config.start + config.window * static_cast<long long>(w));
  }

  std::vector<WellSpec> wells = config.wells;
  std::sort(wells.begin(), wells.end(), [](const auto& a, const auto& b) { return a.node < b.node; });
  std::vector<std::vector<double>> well_rates(wells.size());
  for (std::size_t k = 0; k < wells.size(); ++k) {
    auto engine = make_engine(seed, 1, static_cast<std::uint32_t>(k));
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto& spec = wells[k];
    for (std::size_t w = 0; w < n_windows; ++w) {
      const double days = static_cast<double>((truth.window_starts[w] - config.start).count()) / 86400.0;
      const double seasonal =
          1.0 + spec.seasonal_amplitude * std::sin(2.0 * std::numbers::pi * days / spec.seasonal_period_days);
      well_rates[k].push_back(quantize(spec.baseline * std::exp(spec.noise * gauss(engine)) * seasonal));
    }
  }
  for (std::size_t w = 0; w < n_windows; ++w) {
    std::map<std::string, double> known;
    for (std::size_t k = 0; k < wells.size(); ++k) known[wells[k].node] = well_rates[k][w];
    truth.true_rates.push_back(complete_truth(topology, truth.node_order, std::move(known)));
  }

  std::vector<const MeasurementChannel*> channels;
  for (const auto& ch : config.field.channels) {
    if (ch.active) channels.push_back(&ch);
  }
  std::sort(channels.begin(), channels.end(), [](const auto* a, const auto* b) { return a->id < b->id; });

  const auto n_per_window = static_cast<std::size_t>(config.window.count() / config.cadence.count());
  const double jitter = std::min(config.sample_jitter, std::sqrt(static_cast<double>(n_per_window)));
  const double held_share = 1.0 - jitter * jitter / static_cast<double>(n_per_window);

  for (std::size_t k = 0; k < channels.size(); ++k) {
    const auto& ch = *channels[k];
    const auto node = static_cast<std::size_t>(
        std::lower_bound(truth.node_order.begin(), truth.node_order.end(), ch.node_id) - truth.node_order.begin());
    auto engine = make_engine(seed, 2, static_cast<std::uint32_t>(k));
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<Sample> samples;
    samples.reserve(n_windows * n_per_window);
    for (std::size_t w = 0; w < n_windows; ++w) {
      const double rate = truth.true_rates[w][node];
      const double sigma = config.noise_scale * std::sqrt(a_priori_variance(ch.uncertainty, rate));
      const double held = sigma * std::sqrt(held_share) * gauss(engine);
      for (std::size_t s = 0; s < n_per_window; ++s) {
        Sample sample;
        sample.time = truth.window_starts[w] + config.cadence * static_cast<long long>(s);
        sample.value = rate + held + sigma * jitter * gauss(engine);
        for (const auto& sc : config.scenarios) {
          if (sc.channel_id == ch.id) sample.value = sc.apply(sample.time, sample.value);
        }
        samples.push_back(sample);
      }
    }
    campaign.channel_series.emplace(ch.id, RawSeries(ch.id, std::move(samples)));
  }
  return campaign;
}

double ChannelScore::tpr() const {
  const auto n = true_positive + false_negative;
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : static_cast<double>(true_positive) / n;
}

double ChannelScore::fpr() const {
  const auto n = false_positive + true_negative;
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : static_cast<double>(false_positive) / n;
}

double DetectionMetrics::localization_accuracy() const {
  return faulty_windows == 0 ? std::numeric_limits<double>::quiet_NaN()
                             : static_cast<double>(localized_windows) / faulty_windows;
}

DetectionMetrics score_detections(const std::vector<WindowDetection>& reports, const CampaignTruth& truth) {
  const std::set<Timestamp> campaign_windows(truth.window_starts.begin(), truth.window_starts.end());
  std::set<Timestamp> seen;
  for (const auto& r : reports) {
    if (!campaign_windows.contains(r.window_start)) {
      throw InputError("window mismatch: report window " + format_timestamp(r.window_start) +
                       " is not part of the campaign");
    }
    if (!seen.insert(r.window_start).second) {
      throw InputError("window mismatch: duplicate report for " + format_timestamp(r.window_start));
    }
  }
  if (seen.size() != campaign_windows.size()) {
    throw InputError("window mismatch: reports cover " + std::to_string(seen.size()) + " of " +
                     std::to_string(campaign_windows.size()) + " campaign windows");
  }

  std::map<std::string, ChannelScore> per_channel;
  DetectionMetrics metrics;
  for (const auto& r : reports) {
    bool window_faulty = false;
    for (const auto& c : r.report.channels) {
      auto& score = per_channel[c.id];
      score.channel_id = c.id;
      const bool faulty = truth.faulty(c.id, r.window_start);
      window_faulty = window_faulty || faulty;
      if (faulty) {
        (c.flagged ? score.true_positive : score.false_negative)++;
      } else {
        (c.flagged ? score.false_positive : score.true_negative)++;
      }
    }
    if (window_faulty) {
      ++metrics.faulty_windows;
      if (!r.report.ranked.empty() && truth.faulty(r.report.ranked.front(), r.window_start)) {
        ++metrics.localized_windows;
      }
    }
  }
  for (auto& [id, score] : per_channel) {
    metrics.total.true_positive += score.true_positive;
    metrics.total.false_negative += score.false_negative;
    metrics.total.false_positive += score.false_positive;
    metrics.total.true_negative += score.true_negative;
    metrics.channels.push_back(std::move(score));
  }
  metrics.total.channel_id = "all";
  return metrics;
}

} // namespace dvr
