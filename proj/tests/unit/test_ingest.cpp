#include "catch_amalgamated.hpp"

#include "dvr/error.hpp"
#include "dvr/ingest.hpp"
#include "support/fixtures.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

using namespace dvr;
using namespace std::chrono;

namespace {

const Timestamp kDay = parse_timestamp("2022-05-01T00:00:00Z");

RawSeries hourly(const std::vector<double>& values, Timestamp start = kDay) {
  std::vector<Sample> s;
  for (std::size_t i = 0; i < values.size(); ++i) s.push_back({start + hours(i), values[i], Quality::Good});
  return RawSeries("c", std::move(s));
}

WindowedMeasurement window(const std::string& id, double mean, double coverage) {
  return {id, kDay, kDay + hours(24), mean, coverage, static_cast<std::size_t>(coverage * 24)};
}

} // namespace

TEST_CASE("filtering") {
  SECTION("non-finite samples always go") {
    std::vector<double> v(10, 5.0);
    std::iota(v.begin(), v.end(), 1.0);
    v.insert(v.begin() + 4, NAN);
    CHECK(filter_invalid(hourly(v), {}).size() == 10);
    CHECK(filter_invalid(hourly(v), {false, false, 0}).size() == 10);
  }
  SECTION("frozen signal keeps its first samples") {
    const auto out = filter_invalid(hourly(std::vector<double>(100, 42.0)), {true, true, 50});
    REQUIRE(out.size() == 50);
    CHECK(out.samples().back().time == kDay + hours(49));
  }
  SECTION("negatives dropped under the rule") {
    CHECK(filter_invalid(hourly(std::vector<double>(7, -1.0)), {}).size() == 0);
    CHECK(filter_invalid(hourly(std::vector<double>(7, -1.0)), {false, true, 0}).size() == 7);
  }
  SECTION("bad quality dropped, unknown kept") {
    RawSeries raw("c", {{kDay, 1, Quality::Good}, {kDay + hours(1), 2, Quality::Bad},
                        {kDay + hours(2), 3, Quality::Unknown}});
    CHECK(filter_invalid(raw, {}).size() == 2);
    CHECK(filter_invalid(raw, {true, false, 0}).size() == 3);
  }
}

TEST_CASE("series must be strictly increasing in time") {
  CHECK_THROWS_AS(RawSeries("c", {{kDay, 1, Quality::Good}, {kDay, 2, Quality::Good}}), InputError);
  CHECK_THROWS_AS(RawSeries("c", {{kDay + hours(1), 1, Quality::Good}, {kDay, 2, Quality::Good}}), InputError);
}

TEST_CASE("window aggregation") {
  SECTION("constant over a full window") {
    const auto w = aggregate_window(hourly(std::vector<double>(24, 100.0)), hours(24), 24);
    REQUIRE(w.size() == 1);
    CHECK(w[0].mean_value == 100.0);
    CHECK(w[0].coverage == 1.0);
    CHECK(w[0].window_start == kDay);
    CHECK(w[0].window_end == kDay + hours(24));
  }
  SECTION("half the samples missing") {
    std::vector<Sample> s;
    for (int h = 0; h < 24; h += 2) s.push_back({kDay + hours(h), 100.0, Quality::Good});
    const auto w = aggregate_window(RawSeries("c", s), hours(24), 24);
    REQUIRE(w.size() == 1);
    CHECK(w[0].mean_value == 100.0);
    CHECK(w[0].coverage == 0.5);
    CHECK(w[0].n_samples == 12);
  }
  SECTION("step signal averages to its midpoint") {
    std::vector<double> v(24, 0.0);
    std::fill(v.begin() + 12, v.end(), 200.0);
    CHECK(aggregate_window(hourly(v), hours(24), 24).at(0).mean_value == 100.0);
  }
  SECTION("windows split at midnight and gaps emit nothing") {
    std::vector<double> v(72, 1.0);
    auto raw = hourly(v);
    std::vector<Sample> s(raw.samples().begin(), raw.samples().begin() + 24);
    s.insert(s.end(), raw.samples().begin() + 48, raw.samples().end());
    const auto w = aggregate_window(RawSeries("c", s), hours(24), 24);
    REQUIRE(w.size() == 2);
    CHECK(w[1].window_start == kDay + hours(48));
  }
  SECTION("coverage never exceeds one") {
    std::vector<Sample> s;
    for (int m = 0; m < 24 * 60; m += 30) s.push_back({kDay + minutes(m), 1.0, Quality::Good});
    CHECK(aggregate_window(RawSeries("c", s), hours(24), 24).at(0).coverage == 1.0);
  }
  SECTION("offset windows") {
    const auto w = aggregate_window(hourly(std::vector<double>(24, 1.0)), hours(24), 24, hours(6));
    REQUIRE(w.size() == 2);
    CHECK(w[0].window_start == kDay - hours(18));
    CHECK(w[0].n_samples == 6);
    CHECK(w[1].n_samples == 18);
  }
}

TEST_CASE("filtering and aggregation properties") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> count(1, 300);
  std::uniform_int_distribution<int> level(-3, 8);
  std::uniform_int_distribution<int> q(0, 9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Sample> s;
    Timestamp t = kDay;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      // at most one sample per hour keeps coverage below its cap
      t += minutes(std::uniform_int_distribution<int>(60, 180)(rng));
      // coarse integer levels make frozen runs common
      const double v = q(rng) == 0 ? NAN : static_cast<double>(level(rng));
      s.push_back({t, v, q(rng) == 0 ? Quality::Bad : Quality::Good});
    }
    const RawSeries raw("c", s);
    const FilterRules rules{true, true, static_cast<std::size_t>(std::uniform_int_distribution<int>(0, 3)(rng))};
    const auto once = filter_invalid(raw, rules);
    const auto twice = filter_invalid(once, rules);
    REQUIRE(twice.size() == once.size());
    for (std::size_t i = 0; i < once.size(); ++i) {
      REQUIRE(twice.samples()[i].time == once.samples()[i].time);
      REQUIRE(twice.samples()[i].value == once.samples()[i].value);
    }

    const double expected = 24.0;
    double mass = 0.0;
    for (const auto& w : aggregate_window(once, hours(24), expected)) {
      REQUIRE(w.coverage == static_cast<double>(w.n_samples) / expected);
      mass += w.mean_value * w.coverage * expected;
    }
    double raw_sum = 0.0;
    for (const auto& x : once.samples()) raw_sum += x.value;
    REQUIRE_THAT(mass, Catch::Matchers::WithinAbs(raw_sum, 1e-9 * std::max(1.0, std::abs(raw_sum))));
  }
}

TEST_CASE("aggregation does not depend on input row order") {
  std::string csv = "timestamp,channel_id,value,quality\n";
  for (int h = 0; h < 24; ++h) {
    char line[96];
    std::snprintf(line, sizeof line, "2022-05-01T%02d:00:00Z,c,%d,good\n", h, h);
    csv += line;
  }
  const auto a = parse_series_csv(csv);
  std::vector<std::string> rows;
  std::istringstream in(csv);
  std::string header;
  std::getline(in, header);
  for (std::string l; std::getline(in, l);) rows.push_back(l);
  std::mt19937_64 rng(2);
  std::shuffle(rows.begin(), rows.end(), rng);
  std::string shuffled = header + "\n";
  for (const auto& r : rows) shuffled += r + "\n";
  const auto b = parse_series_csv(shuffled);
  const auto wa = aggregate_window(a.at("c"), hours(24), 24);
  const auto wb = aggregate_window(b.at("c"), hours(24), 24);
  REQUIRE(wa.size() == 1);
  CHECK(wa[0].mean_value == wb[0].mean_value);
  CHECK(wa[0].mean_value == 11.5);
}

TEST_CASE("series CSV") {
  const auto table = parse_series_csv(
      "timestamp,channel_id,value,quality\n"
      "2022-05-01T01:00:00Z,b,2.5,good\n"
      "2022-05-01T00:00:00Z,a,1,bad\n"
      "2022-05-01T00:00:00Z,b,nan,unknown\n");
  REQUIRE(table.size() == 2);
  CHECK(table.at("a").samples()[0].quality == Quality::Bad);
  CHECK(std::isnan(table.at("b").samples()[0].value));
  CHECK(table.at("b").samples()[1].value == 2.5);

  std::ostringstream out;
  write_series_csv(out, table);
  CHECK(out.str() ==
        "timestamp,channel_id,value,quality\n"
        "2022-05-01T00:00:00Z,a,1,bad\n"
        "2022-05-01T00:00:00Z,b,nan,unknown\n"
        "2022-05-01T01:00:00Z,b,2.5,good\n");

  CHECK_THROWS_AS(parse_series_csv(""), InputError);
  CHECK_THROWS_AS(parse_series_csv("time,id,v,q\n"), InputError);
  CHECK_THROWS_AS(parse_series_csv("timestamp,channel_id,value,quality\n2022-05-01T00:00:00Z,a,1\n"), InputError);
  CHECK_THROWS_AS(parse_series_csv("timestamp,channel_id,value,quality\n2022-05-01T00:00:00Z,a,x,good\n"),
                  InputError);
  CHECK_THROWS_AS(parse_series_csv("timestamp,channel_id,value,quality\n2022-05-01T00:00:00Z,a,1,fine\n"),
                  InputError);
  CHECK_THROWS_AS(parse_series_csv("timestamp,channel_id,value,quality\n"
                                   "2022-05-01T00:00:00Z,a,1,good\n2022-05-01T00:00:00Z,a,2,good\n"),
                  InputError);
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1e21) == "1e+21");
}

TEST_CASE("problem assembly per window") {
  const auto s = fixture::single_tier();
  const std::map<std::string, double> sigma2{{"m1", 1.0}, {"m2", 4.0}, {"m3", 9.0}};
  SECTION("everything covered") {
    const auto p = assemble_problem(s.topology, s.channels,
                                    {{"m1", window("m1", 10, 1)}, {"m2", window("m2", 20, 1)},
                                     {"m3", window("m3", 30, 1)}},
                                    sigma2, 0.5);
    CHECK(p.excluded.empty());
    CHECK(p.matrices.channels() == 3);
    CHECK(p.measurements.values == Eigen::Vector3d(10, 20, 30));
    CHECK(p.measurements.sigma2 == Eigen::Vector3d(1, 4, 9));
  }
  SECTION("low coverage channel is dropped and the node follows from the balance") {
    const auto p = assemble_problem(s.topology, s.channels,
                                    {{"m1", window("m1", 10, 1)}, {"m2", window("m2", 20, 0.2)},
                                     {"m3", window("m3", 30, 1)}},
                                    sigma2, 0.5);
    CHECK(p.excluded == std::vector<std::string>{"m2"});
    CHECK(p.matrices.channels() == 2);
    CHECK_FALSE(p.channels[1].active);
  }
  SECTION("missing window counts as excluded") {
    const auto p = assemble_problem(s.topology, s.channels,
                                    {{"m1", window("m1", 10, 1)}, {"m3", window("m3", 30, 1)}}, sigma2, 0.5);
    CHECK(p.excluded == std::vector<std::string>{"m2"});
  }
  SECTION("unmeasured and unconstrained node") {
    const auto t = fixture::make({{"n1", "", NodeRole::Well, 0}, {"n2", "", NodeRole::Well, 0}}, {},
                                 {fixture::channel("m1", "n1"), fixture::channel("m2", "n2")});
    CHECK_THROWS_AS(assemble_problem(t.topology, t.channels,
                                     {{"m1", window("m1", 10, 1)}, {"m2", window("m2", 20, 0.1)}},
                                     {{"m1", 1.0}, {"m2", 1.0}}, 0.5),
                    EstimabilityError);
  }
  SECTION("nothing left") {
    CHECK_THROWS_AS(assemble_problem(s.topology, s.channels, {}, sigma2, 0.5), EstimabilityError);
  }
  SECTION("missing variance") {
    CHECK_THROWS_AS(assemble_problem(s.topology, s.channels,
                                     {{"m1", window("m1", 10, 1)}, {"m2", window("m2", 20, 1)},
                                      {"m3", window("m3", 30, 1)}},
                                     {{"m1", 1.0}}, 0.5),
                    InputError);
  }
}
