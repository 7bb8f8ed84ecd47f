#include "dvr/pipeline.hpp"

#include "dvr/error.hpp"

#include <algorithm>
#include <atomic>
#include <set>
#include <thread>

namespace dvr {

namespace {

void process_window(WindowResult& out, const FieldConfig& field,
                    const std::map<std::string, std::map<Timestamp, WindowedMeasurement>>& aggregated,
                    const ReferenceTable& references, const PipelineOptions& options) {
  static const std::vector<ReferencePair> no_history;
  try {
    for (const auto& ch : field.channels) {
      const auto per_channel = aggregated.find(ch.id);
      if (per_channel == aggregated.end()) continue;
      const auto agg = per_channel->second.find(out.window_start);
      if (agg == per_channel->second.end()) continue;
      out.aggregates.emplace(ch.id, agg->second);
      const auto refs = references.find(ch.id);
      out.sigma2[ch.id] = channel_variance(ch.uncertainty, agg->second.mean_value,
                                           refs == references.end() ? no_history : refs->second,
                                           out.window_end, options.calibration_decay);
    }
    auto problem = assemble_problem(field.topology, field.channels, out.aggregates, out.sigma2,
                                    options.min_coverage);
    out.excluded = problem.excluded;
    out.trace = detect_and_eliminate(problem.measurements, field.topology, problem.channels,
                                     options.policy, options.max_iter);
  } catch (const EstimabilityError& e) {
    out.error = WindowError::Estimability;
    out.message = e.what();
  } catch (const NumericalError& e) {
    out.error = WindowError::Numerical;
    out.message = e.what();
  } catch (const InputError& e) {
    out.error = WindowError::Input;
    out.message = e.what();
  }
}

} // namespace

std::vector<WindowResult> run_pipeline(const FieldConfig& field, const SeriesTable& series,
                                       const ReferenceTable& references, const PipelineOptions& options) {
  options.policy.validate();
  if (options.window.count() <= 0 || options.cadence.count() <= 0) {
    throw InputError("window and cadence must be positive");
  }
  const double expected = static_cast<double>(options.window.count()) /
                          static_cast<double>(options.cadence.count());

  std::set<Timestamp> window_starts;
  std::map<std::string, std::map<Timestamp, WindowedMeasurement>> aggregated;
  for (const auto& ch : field.channels) {
    const auto it = series.find(ch.id);
    if (it == series.end()) continue;
    for (const auto& s : it->second.samples()) {
      window_starts.insert(window_floor(s.time, options.window, options.window_offset));
    }
    auto& dest = aggregated[ch.id];
    const auto filtered = filter_invalid(it->second, options.filter);
    for (auto& w : aggregate_window(filtered, options.window, expected, options.window_offset)) {
      dest.emplace(w.window_start, std::move(w));
    }
  }

  std::vector<WindowResult> results(window_starts.size());
  std::size_t k = 0;
  for (const auto start : window_starts) {
    results[k].window_start = start;
    results[k].window_end = start + options.window;
    ++k;
  }

  unsigned workers = options.workers ? options.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, results.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < results.size(); i = next++) {
      process_window(results[i], field, aggregated, references, options);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
  }
  return results;
}

} // namespace dvr
