#include "dvr/report.hpp"

#include "dvr/error.hpp"
#include "dvr/ingest.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace dvr {

namespace {

using nlohmann::json;

ordered_json number_or_null(double v) {
  return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

std::string_view to_string(WindowError e) {
  switch (e) {
  case WindowError::None: return "none";
  case WindowError::Input: return "input";
  case WindowError::Estimability: return "estimability";
  case WindowError::Numerical: return "numerical";
  }
  return "none";
}

} // namespace

ordered_json to_json(const DetectionReport& report) {
  ordered_json j;
  j["status"] = to_string(report.status);
  j["ranked"] = report.ranked;
  j["channels"] = ordered_json::array();
  for (const auto& c : report.channels) {
    ordered_json jc;
    jc["id"] = c.id;
    jc["z"] = number_or_null(c.z);
    jc["threshold"] = c.threshold;
    jc["flagged"] = c.flagged;
    jc["testable"] = c.testable;
    j["channels"].push_back(std::move(jc));
  }
  return j;
}

ordered_json to_json(const ReconciliationResult& result, const SystemMatrices& m, const MeasurementVector& y) {
  const Eigen::MatrixXd cov = estimate_covariance(result, y.sigma2);
  ordered_json j;
  j["method"] = to_string(result.method);
  j["nodes"] = ordered_json::array();
  for (std::size_t k = 0; k < m.nodes(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    j["nodes"].push_back({{"id", m.node_order[k]},
                          {"y_hat", result.y_hat_nodes(i)},
                          {"std", std::sqrt(std::max(cov(i, i), 0.0))}});
  }
  j["channels"] = ordered_json::array();
  for (std::size_t k = 0; k < m.channels(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    j["channels"].push_back({{"id", m.channel_order[k]},
                             {"y", y.values(i)},
                             {"sigma2", y.sigma2(i)},
                             {"y_hat", result.y_hat_channels(i)},
                             {"adjustment", result.adjustments(i)}});
  }
  j["imbalance_pre"] = ordered_json::array();
  for (std::size_t q = 0; q < m.constraints(); ++q) {
    j["imbalance_pre"].push_back(
        {{"label", m.constraint_labels[q]}, {"residual", number_or_null(result.imbalance_pre(static_cast<Eigen::Index>(q)))}});
  }
  j["balance_residual"] = result.balance_residual;
  return j;
}

ordered_json to_json(const IterationTrace& trace) {
  ordered_json j;
  j["terminal_status"] = to_string(trace.terminal_status);
  j["stop_reason"] = trace.stop_reason;
  j["iterations"] = ordered_json::array();
  for (const auto& it : trace.iterations) {
    ordered_json ji;
    ji["eliminated"] = it.eliminated;
    ji["degrees_of_freedom"] = it.degrees_of_freedom;
    ji["reconciliation"] = to_json(it.reconciliation, it.matrices, it.measurements);
    ji["detection"] = to_json(it.detection);
    j["iterations"].push_back(std::move(ji));
  }
  return j;
}

ordered_json to_json(const WindowResult& w) {
  ordered_json j;
  j["window_start"] = format_timestamp(w.window_start);
  j["window_end"] = format_timestamp(w.window_end);
  j["inputs"] = ordered_json::array();
  for (const auto& [id, agg] : w.aggregates) {
    const auto s = w.sigma2.find(id);
    j["inputs"].push_back({{"channel", id},
                           {"mean", number_or_null(agg.mean_value)},
                           {"coverage", agg.coverage},
                           {"n_samples", agg.n_samples},
                           {"sigma2", s == w.sigma2.end() ? ordered_json(nullptr) : number_or_null(s->second)}});
  }
  j["excluded"] = w.excluded;
  if (w.trace) {
    const auto& last = w.trace->last();
    j["status"] = to_string(last.detection.status);
    j["eliminated"] = last.eliminated;
    j["trace"] = to_json(*w.trace);
    j["error"] = nullptr;
  } else {
    j["status"] = "error";
    j["eliminated"] = ordered_json::array();
    j["trace"] = nullptr;
    j["error"] = {{"kind", to_string(w.error)}, {"message", w.message}};
  }
  return j;
}

ordered_json make_report(const std::vector<WindowResult>& windows, const RunInfo& info) {
  ordered_json j;
  j["schema"] = kReportSchemaId;
  const auto& o = info.options;
  j["settings"] = {{"window", format_duration(o.window)},
                   {"window_offset", format_duration(o.window_offset)},
                   {"cadence", format_duration(o.cadence)},
                   {"min_coverage", o.min_coverage},
                   {"policy", to_string(o.policy.kind)},
                   {"max_iter", o.max_iter}};
  j["unknown_channels"] = info.unknown_channels;
  j["windows"] = ordered_json::array();
  for (const auto& w : windows) j["windows"].push_back(to_json(w));
  return j;
}

void write_rates_csv(std::ostream& out, const std::vector<WindowResult>& windows) {
  out << "window_start,node_id,y_hat\n";
  for (const auto& w : windows) {
    if (!w.trace) continue;
    const auto& last = w.trace->last();
    for (std::size_t k = 0; k < last.matrices.nodes(); ++k) {
      out << format_timestamp(w.window_start) << ',' << last.matrices.node_order[k] << ','
          << format_number(last.reconciliation.y_hat_nodes(static_cast<Eigen::Index>(k))) << '\n';
    }
  }
}

DetectionReport detection_from_json(const json& j) {
  DetectionReport r;
  const auto status = j.at("status").get<std::string>();
  for (auto s : {DetectionStatus::Clean, DetectionStatus::Identified, DetectionStatus::LocalizedNotIdentified,
                 DetectionStatus::Untestable}) {
    if (to_string(s) == status) r.status = s;
  }
  r.ranked = j.at("ranked").get<std::vector<std::string>>();
  for (const auto& jc : j.at("channels")) {
    ChannelDecision c;
    c.id = jc.at("id").get<std::string>();
    c.z = jc.at("z").is_null() ? std::numeric_limits<double>::quiet_NaN() : jc.at("z").get<double>();
    c.threshold = jc.at("threshold").get<double>();
    c.flagged = jc.at("flagged").get<bool>();
    c.testable = jc.at("testable").get<bool>();
    r.channels.push_back(std::move(c));
  }
  return r;
}

std::vector<WindowDetection> detections_from_report(const json& report) {
  std::vector<WindowDetection> out;
  try {
    if (report.at("schema").get<std::string>() != kReportSchemaId) {
      throw InputError("report: unsupported schema");
    }
    for (const auto& w : report.at("windows")) {
      WindowDetection d{parse_timestamp(w.at("window_start").get<std::string>()), {}};
      // a failed window counts as one without detections
      const auto& trace = w.at("trace");
      if (!trace.is_null() && !trace.at("iterations").empty()) {
        d.report = detection_from_json(trace.at("iterations").front().at("detection"));
      }
      out.push_back(std::move(d));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("report: ") + e.what());
  }
  return out;
}

ordered_json to_json(const CampaignTruth& truth) {
  ordered_json j;
  j["seed"] = truth.seed;
  j["window"] = format_duration(truth.window);
  j["node_order"] = truth.node_order;
  j["windows"] = ordered_json::array();
  for (std::size_t w = 0; w < truth.window_starts.size(); ++w) {
    ordered_json rates = ordered_json::object();
    for (std::size_t k = 0; k < truth.node_order.size(); ++k) {
      rates[truth.node_order[k]] = truth.true_rates[w][k];
    }
    j["windows"].push_back({{"start", format_timestamp(truth.window_starts[w])}, {"rates", std::move(rates)}});
  }
  j["scenarios"] = ordered_json::array();
  for (const auto& s : truth.scenarios) {
    j["scenarios"].push_back({{"channel", s.channel_id},
                              {"kind", to_string(s.kind)},
                              {"magnitude", s.magnitude},
                              {"start", format_timestamp(s.start)},
                              {"end", format_timestamp(s.end)}});
  }
  return j;
}

CampaignTruth truth_from_json(const json& j) {
  CampaignTruth t;
  try {
    t.seed = j.at("seed").get<std::uint64_t>();
    t.window = parse_duration(j.at("window").get<std::string>());
    t.node_order = j.at("node_order").get<std::vector<std::string>>();
    for (const auto& w : j.at("windows")) {
      t.window_starts.push_back(parse_timestamp(w.at("start").get<std::string>()));
      std::vector<double> rates;
      for (const auto& id : t.node_order) rates.push_back(w.at("rates").at(id).get<double>());
      t.true_rates.push_back(std::move(rates));
    }
    for (const auto& s : j.at("scenarios")) {
      GrossErrorScenario sc;
      sc.channel_id = s.at("channel").get<std::string>();
      sc.kind = parse_scenario_kind(s.at("kind").get<std::string>());
      sc.magnitude = s.at("magnitude").get<double>();
      sc.start = parse_timestamp(s.at("start").get<std::string>());
      sc.end = parse_timestamp(s.at("end").get<std::string>());
      t.scenarios.push_back(std::move(sc));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("truth file: ") + e.what());
  }
  return t;
}

ordered_json to_json(const DetectionMetrics& metrics) {
  auto counts = [](const ChannelScore& s) {
    ordered_json j;
    j["tpr"] = number_or_null(s.tpr());
    j["fpr"] = number_or_null(s.fpr());
    j["true_positive"] = s.true_positive;
    j["false_negative"] = s.false_negative;
    j["false_positive"] = s.false_positive;
    j["true_negative"] = s.true_negative;
    return j;
  };
  ordered_json j = counts(metrics.total);
  j["localization_accuracy"] = number_or_null(metrics.localization_accuracy());
  j["faulty_windows"] = metrics.faulty_windows;
  j["channels"] = ordered_json::array();
  for (const auto& c : metrics.channels) {
    auto jc = counts(c);
    jc["id"] = c.channel_id;
    j["channels"].push_back(std::move(jc));
  }
  return j;
}

} // namespace dvr
