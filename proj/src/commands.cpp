#include "dvr/commands.hpp"

#include "csv.hpp"
#include "dvr/config.hpp"
#include "dvr/error.hpp"
#include "dvr/pipeline.hpp"
#include "dvr/report.hpp"
#include "dvr/simgen.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

namespace dvr {

namespace {

namespace fs = std::filesystem;

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw InputError(std::string("missing ") + what + " path");
  if (!fs::is_regular_file(path)) throw InputError(std::string(what) + " '" + path + "' does not exist");
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    throw InputError("an output path is required");
  }
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
  if (!out) throw InputError("failed writing '" + path + "'");
}

PipelineOptions options_from(const RunConfig& config) {
  PipelineOptions o;
  o.window = parse_duration(config.window);
  o.window_offset = parse_duration(config.window_offset);
  o.cadence = parse_duration(config.cadence);
  if (o.window.count() <= 0 || o.cadence.count() <= 0) {
    throw InputError("window and cadence must be positive");
  }
  o.filter.frozen_count = config.frozen_count;
  o.filter.reject_negative = !config.keep_negative;
  o.min_coverage = config.min_coverage;
  o.policy.kind = parse_policy_kind(config.policy);
  o.policy.low_production_threshold = config.low_production_threshold;
  o.policy.expected_production_floor = config.expected_production_floor;
  o.policy.validate();
  o.max_iter = config.max_iter;
  o.workers = config.workers;
  if (!(o.min_coverage >= 0.0 && o.min_coverage <= 1.0)) {
    throw InputError("min-coverage must lie in [0, 1]");
  }
  if (o.max_iter < 1) throw InputError("max-iter must be at least 1");
  return o;
}

CampaignTruth read_truth(const std::string& path) {
  require_file(path, "truth");
  try {
    return truth_from_json(nlohmann::json::parse(detail::read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(e.what());
  }
}

} // namespace

int cmd_reconcile(const RunConfig& config, std::ostream& err) {
  try {
    require_file(config.topology_path, "topology");
    require_file(config.data_path, "data");
    if (config.format != "json" && config.format != "csv") {
      throw InputError("format must be json or csv");
    }
    const auto options = options_from(config);
    auto field = load_field_config(config.topology_path);
    apply_alpha_overrides(field.channels, config.alpha_overrides);
    const auto series = read_series_csv(config.data_path);
    ReferenceTable references;
    if (!config.references_path.empty()) {
      require_file(config.references_path, "references");
      references = read_reference_csv(config.references_path);
    }

    std::optional<CampaignTruth> truth;
    if (!config.score_truth_path.empty()) truth = read_truth(config.score_truth_path);

    RunInfo info{options, {}};
    for (const auto& [id, s] : series) {
      const bool known = std::any_of(field.channels.begin(), field.channels.end(),
                                     [&](const auto& c) { return c.id == id; });
      if (!known) info.unknown_channels.push_back(id);
    }

    const auto windows = run_pipeline(field, series, references, options);

    const auto report = make_report(windows, info);
    std::ostringstream text;
    if (config.format == "csv") {
      write_rates_csv(text, windows);
    } else {
      text << report.dump(2) << '\n';
    }
    write_text(config.output_path, text.str());
    if (truth) {
      const auto metrics = score_detections(detections_from_report(nlohmann::json::parse(report.dump())), *truth);
      const auto path =
          config.score_output_path.empty() ? config.output_path + ".metrics.json" : config.score_output_path;
      write_text(path, to_json(metrics).dump(2) + "\n");
    }

    int code = kExitOk;
    const WindowResult* first = nullptr;
    std::size_t failed = 0;
    for (const auto& w : windows) {
      if (w.error == WindowError::None) continue;
      ++failed;
      const int c = w.error == WindowError::Numerical      ? kExitNumerical
                    : w.error == WindowError::Estimability ? kExitEstimability
                                                           : kExitInput;
      if (c > code || !first) {
        code = std::max(code, c);
        first = &w;
      }
    }
    if (first) {
      err << "dvr: window " << format_timestamp(first->window_start) << ": " << first->message << " ("
          << failed << " of " << windows.size() << " windows failed)\n";
    }
    return code;
  } catch (const EstimabilityError& e) {
    err << "dvr: " << e.what() << '\n';
    return kExitEstimability;
  } catch (const NumericalError& e) {
    err << "dvr: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    err << "dvr: " << e.what() << '\n';
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "dvr: " << e.what() << '\n';
    return kExitInput;
  }
}

int cmd_simulate(const std::string& scenario_path, std::uint64_t seed, const std::string& output_dir,
                 std::ostream& err) {
  try {
    require_file(scenario_path, "scenario");
    if (output_dir.empty()) throw InputError("an output directory is required");
    const auto config = load_scenario_config(scenario_path);
    const auto campaign = simulate_campaign(config, seed);

    std::ostringstream data;
    write_series_csv(data, campaign.channel_series);
    write_text((fs::path(output_dir) / "data.csv").string(), data.str());
    write_text((fs::path(output_dir) / "truth.json").string(), to_json(campaign.truth).dump(2) + "\n");
    return kExitOk;
  } catch (const Error& e) {
    err << "dvr: " << e.what() << '\n';
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "dvr: " << e.what() << '\n';
    return kExitInput;
  }
}

int cmd_score(const std::string& truth_path, const std::string& report_path, const std::string& output_path,
              std::ostream& err) {
  try {
    const auto truth = read_truth(truth_path);
    require_file(report_path, "report");
    nlohmann::json report_doc;
    try {
      report_doc = nlohmann::json::parse(detail::read_file(report_path));
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError(e.what());
    }
    const auto metrics = score_detections(detections_from_report(report_doc), truth);
    write_text(output_path, to_json(metrics).dump(2) + "\n");
    return kExitOk;
  } catch (const Error& e) {
    err << "dvr: " << e.what() << '\n';
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "dvr: " << e.what() << '\n';
    return kExitInput;
  }
}

} // namespace dvr
