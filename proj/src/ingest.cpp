#include "dvr/ingest.hpp"

#include "csv.hpp"
#include "dvr/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <tuple>

namespace dvr {

std::string_view to_string(Quality q) {
  switch (q) {
  case Quality::Good: return "good";
  case Quality::Bad: return "bad";
  case Quality::Unknown: return "unknown";
  }
  return "unknown";
}

Quality parse_quality(std::string_view text) {
  for (auto q : {Quality::Good, Quality::Bad, Quality::Unknown}) {
    if (to_string(q) == text) return q;
  }
  throw InputError("unknown quality flag '" + std::string(text) + "'");
}

RawSeries::RawSeries(std::string channel_id, std::vector<Sample> samples)
    : channel_id_(std::move(channel_id)), samples_(std::move(samples)) {
  for (std::size_t i = 1; i < samples_.size(); ++i) {
    if (!(samples_[i - 1].time < samples_[i].time)) {
      throw InputError("series '" + channel_id_ + "': timestamps must be strictly increasing (" +
                       format_timestamp(samples_[i].time) + ")");
    }
  }
}

RawSeries filter_invalid(const RawSeries& raw, const FilterRules& rules) {
  std::vector<Sample> kept;
  kept.reserve(raw.size());
  for (const auto& s : raw.samples()) {
    if (!std::isfinite(s.value)) continue;
    if (rules.reject_negative && s.value < 0.0) continue;
    if (rules.reject_bad_quality && s.quality == Quality::Bad) continue;
    kept.push_back(s);
  }
  if (rules.frozen_count > 0) {
    std::vector<Sample> unfrozen;
    unfrozen.reserve(kept.size());
    std::size_t run = 0;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      run = (i > 0 && kept[i].value == kept[i - 1].value) ? run + 1 : 1;
      if (run <= rules.frozen_count) unfrozen.push_back(kept[i]);
    }
    kept = std::move(unfrozen);
  }
  return RawSeries(raw.channel_id(), std::move(kept));
}

std::vector<WindowedMeasurement> aggregate_window(const RawSeries& raw, Duration window,
                                                  double expected_samples, Duration offset) {
  if (window.count() <= 0) {
    throw InputError("window duration must be positive");
  }
  if (!(expected_samples > 0.0)) {
    throw InputError("expected samples per window must be positive");
  }
  std::vector<WindowedMeasurement> out;
  const auto& samples = raw.samples();
  std::size_t i = 0;
  while (i < samples.size()) {
    const auto start = window_floor(samples[i].time, window, offset);
    const auto end = start + window;
    double sum = 0.0;
    std::size_t n = 0;
    while (i < samples.size() && samples[i].time < end) {
      sum += samples[i].value;
      ++n;
      ++i;
    }
    WindowedMeasurement w;
    w.channel_id = raw.channel_id();
    w.window_start = start;
    w.window_end = end;
    w.n_samples = n;
    w.mean_value = sum / static_cast<double>(n);
    w.coverage = std::min(1.0, static_cast<double>(n) / expected_samples);
    out.push_back(std::move(w));
  }
  return out;
}

AssembledProblem assemble_problem(const NetworkTopology& topology,
                                  std::span<const MeasurementChannel> channels,
                                  const std::map<std::string, WindowedMeasurement>& windows,
                                  const std::map<std::string, double>& sigma2, double min_coverage) {
  if (!(min_coverage >= 0.0 && min_coverage <= 1.0)) {
    throw InputError("min_coverage must lie in [0, 1]");
  }
  AssembledProblem p;
  p.channels.assign(channels.begin(), channels.end());
  for (auto& ch : p.channels) {
    if (!ch.active) continue;
    const auto it = windows.find(ch.id);
    if (it == windows.end() || it->second.n_samples == 0 || it->second.coverage < min_coverage) {
      ch.active = false;
      p.excluded.push_back(ch.id);
    }
  }
  std::sort(p.excluded.begin(), p.excluded.end());
  if (std::none_of(p.channels.begin(), p.channels.end(), [](const auto& c) { return c.active; })) {
    throw EstimabilityError("every channel was excluded for insufficient coverage");
  }

  p.matrices = build_system_matrices(topology, p.channels);
  const auto n = static_cast<Eigen::Index>(p.matrices.channels());
  p.measurements.channel_order = p.matrices.channel_order;
  p.measurements.values.resize(n);
  p.measurements.sigma2.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& id = p.matrices.channel_order[static_cast<std::size_t>(i)];
    const auto s = sigma2.find(id);
    if (s == sigma2.end()) {
      throw InputError("no variance supplied for channel '" + id + "'");
    }
    p.measurements.values(i) = windows.at(id).mean_value;
    p.measurements.sigma2(i) = s->second;
  }
  p.measurements.validate();

  const auto est = validate_estimability(p.matrices, p.measurements.sigma2);
  if (!est.general_ok) {
    std::string nodes;
    for (const auto& id : est.unmeasured_nodes) nodes += (nodes.empty() ? "" : ", ") + id;
    throw EstimabilityError("after exclusions node values are not determined (unmeasured: " + nodes + ")");
  }
  return p;
}

SeriesTable parse_series_csv(const std::string& text) {
  const auto lines = detail::lines_of(text);
  if (lines.empty()) {
    throw InputError("data CSV is empty");
  }
  detail::expect_header(lines.front().second, {"timestamp", "channel_id", "value", "quality"}, "data CSV");

  std::map<std::string, std::vector<Sample>> grouped;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto [no, line] = lines[i];
    const auto f = detail::split_fields(line);
    if (f.size() != 4) {
      throw InputError("data CSV line " + std::to_string(no) + ": expected 4 fields");
    }
    Sample s;
    s.time = parse_timestamp(f[0]);
    s.value = f[2].empty() ? std::numeric_limits<double>::quiet_NaN() : detail::parse_double(f[2], no);
    s.quality = parse_quality(f[3]);
    grouped[std::string(f[1])].push_back(s);
  }

  SeriesTable table;
  for (auto& [id, samples] : grouped) {
    std::stable_sort(samples.begin(), samples.end(),
                     [](const Sample& a, const Sample& b) { return a.time < b.time; });
    table.emplace(id, RawSeries(id, std::move(samples)));
  }
  return table;
}

SeriesTable read_series_csv(const std::string& path) {
  return parse_series_csv(detail::read_file(path));
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_series_csv(std::ostream& out, const SeriesTable& table) {
  struct Row {
    Timestamp time;
    const std::string* id;
    const Sample* sample;
  };
  std::vector<Row> rows;
  for (const auto& [id, series] : table) {
    for (const auto& s : series.samples()) rows.push_back({s.time, &id, &s});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::tie(a.time, *a.id) < std::tie(b.time, *b.id);
  });
  out << "timestamp,channel_id,value,quality\n";
  for (const auto& r : rows) {
    out << format_timestamp(r.time) << ',' << *r.id << ',' << format_number(r.sample->value) << ','
        << to_string(r.sample->quality) << '\n';
  }
}

} // namespace dvr
