#include "dvr/uncertainty.hpp"

#include "csv.hpp"
#include "dvr/error.hpp"

#include <algorithm>
#include <cmath>

namespace dvr {

void validate(const UncertaintySpec& spec) {
  if (!(spec.relative >= 0.0) || !std::isfinite(spec.relative)) {
    throw InputError("uncertainty 'relative' must be nonnegative");
  }
  if (!(spec.absolute_floor > 0.0) || !std::isfinite(spec.absolute_floor)) {
    throw InputError("uncertainty 'absolute_floor' must be strictly positive");
  }
}

double a_priori_variance(const UncertaintySpec& spec, double reading) {
  validate(spec);
  if (!(reading >= 0.0)) {
    throw InputError("reading must be nonnegative for the a-priori uncertainty band");
  }
  const double sigma = std::max(spec.relative * reading, spec.absolute_floor);
  return sigma * sigma;
}

double calibrate_variance(std::span<const ReferencePair> history, double decay, double floor) {
  if (history.empty()) {
    throw InputError("calibration history is empty");
  }
  if (!(decay > 0.0 && decay <= 1.0)) {
    throw InputError("calibration decay must lie in (0, 1]");
  }
  if (!(floor > 0.0)) {
    throw InputError("calibration floor must be strictly positive");
  }
  double weighted = 0.0;
  double total = 0.0;
  double w = 1.0;
  for (auto it = history.rbegin(); it != history.rend(); ++it) {
    const double dev = it->measured - it->reference;
    weighted += w * dev * dev;
    total += w;
    w *= decay;
  }
  return std::max(weighted / total, floor * floor);
}

double channel_variance(const UncertaintySpec& spec, double reading,
                        std::span<const ReferencePair> history, Timestamp as_of, double decay) {
  if (spec.mode == UncertaintyMode::Calibrated) {
    const auto end = std::find_if(history.begin(), history.end(),
                                  [&](const ReferencePair& p) { return p.timestamp >= as_of; });
    const auto n = static_cast<std::size_t>(end - history.begin());
    if (n > 0) {
      return calibrate_variance(history.first(n), decay, spec.absolute_floor);
    }
  }
  return a_priori_variance(spec, std::max(reading, 0.0));
}

ReferenceTable parse_reference_csv(const std::string& text) {
  ReferenceTable table;
  const auto lines = detail::lines_of(text);
  if (lines.empty()) {
    throw InputError("reference CSV is empty");
  }
  detail::expect_header(lines.front().second, {"channel_id", "timestamp", "measured", "reference"},
                        "reference CSV");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto [no, line] = lines[i];
    const auto f = detail::split_fields(line);
    if (f.size() != 4) {
      throw InputError("reference CSV line " + std::to_string(no) + ": expected 4 fields");
    }
    ReferencePair p;
    p.timestamp = parse_timestamp(f[1]);
    p.measured = detail::parse_double(f[2], no);
    p.reference = detail::parse_double(f[3], no);
    if (!(p.reference > 0.0)) {
      throw InputError("reference CSV line " + std::to_string(no) + ": reference must be positive");
    }
    table[std::string(f[0])].push_back(p);
  }
  for (auto& [id, pairs] : table) {
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  }
  return table;
}

ReferenceTable read_reference_csv(const std::string& path) {
  return parse_reference_csv(detail::read_file(path));
}

} // namespace dvr
