#include "catch_amalgamated.hpp"

#include "dvr/error.hpp"
#include "dvr/simgen.hpp"
#include "support/campaigns.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace dvr;
using namespace std::chrono;
using Kind = GrossErrorScenario::Kind;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<WellSpec> wells_2() { return {{"W1", 1000, 0.1, 0.2, 30}, {"W2", 600, 0.1, 0.0, 30}}; }

const std::vector<double>& samples_of(const SyntheticCampaign& c, const std::string& id, std::vector<double>& buf) {
  buf.clear();
  for (const auto& s : c.channel_series.at(id).samples()) buf.push_back(s.value);
  return buf;
}

std::size_t node_col(const CampaignTruth& t, const std::string& id) {
  return static_cast<std::size_t>(std::find(t.node_order.begin(), t.node_order.end(), id) - t.node_order.begin());
}

} // namespace

TEST_CASE("noiseless campaign reproduces the truth") {
  auto cfg = campaign::daily(campaign::single_tier(0.01, 10), 20, wells_2());
  cfg.noise_scale = 0.0;
  const auto c = simulate_campaign(cfg, 1);
  REQUIRE(c.truth.window_starts.size() == 20);
  for (const auto& [id, node] : {std::pair{"c1", "W1"}, {"c2", "W2"}, {"c3", "S"}}) {
    const auto& samples = c.channel_series.at(id).samples();
    REQUIRE(samples.size() == 20 * 24);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      REQUIRE(samples[i].value == c.truth.true_rates[i / 24][node_col(c.truth, node)]);
    }
  }
}

TEST_CASE("truth satisfies every balance exactly") {
  const auto cfg = campaign::daily(campaign::single_tier(0.01, 10), 200, wells_2());
  const auto c = simulate_campaign(cfg, 5);
  for (const auto& row : c.truth.true_rates) {
    REQUIRE(row[node_col(c.truth, "W1")] + row[node_col(c.truth, "W2")] - row[node_col(c.truth, "S")] == 0.0);
    REQUIRE(row[node_col(c.truth, "W1")] > 0.0);
  }
}

TEST_CASE("identical seed gives an identical campaign") {
  const auto cfg = campaign::daily(campaign::single_tier(0.01, 10), 30, wells_2());
  const auto a = simulate_campaign(cfg, 42);
  const auto b = simulate_campaign(cfg, 42);
  const auto d = simulate_campaign(cfg, 43);
  CHECK(a.truth.true_rates == b.truth.true_rates);
  std::vector<double> x, y, z;
  for (const auto& id : {"c1", "c2", "c3"}) {
    CHECK(samples_of(a, id, x) == samples_of(b, id, y));
    CHECK(samples_of(a, id, x) != samples_of(d, id, z));
  }
}

TEST_CASE("fault archetypes alter only their channel and interval") {
  auto clean_cfg = campaign::daily(campaign::single_tier(0.01, 10), 10, wells_2());
  const auto t1 = clean_cfg.start + days(3) + hours(5);
  const auto t2 = clean_cfg.start + days(6);
  const auto clean = simulate_campaign(clean_cfg, 9);

  auto check = [&](Kind kind, double magnitude, auto&& inside) {
    auto cfg = clean_cfg;
    cfg.scenarios = {{"c2", kind, magnitude, t1, t2}};
    const auto faulty = simulate_campaign(cfg, 9);
    for (const auto& id : {"c1", "c3"}) {
      std::vector<double> x, y;
      REQUIRE(samples_of(faulty, id, x) == samples_of(clean, id, y));
    }
    const auto& f = faulty.channel_series.at("c2").samples();
    const auto& g = clean.channel_series.at("c2").samples();
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (f[i].time >= t1 && f[i].time < t2) {
        inside(f[i], g[i]);
      } else {
        REQUIRE(f[i].value == g[i].value);
      }
    }
  };
  SECTION("dropout reads exactly zero") {
    check(Kind::DropoutZero, 123.0, [](const Sample& f, const Sample&) { REQUIRE(f.value == 0.0); });
  }
  SECTION("bias adds its magnitude") {
    check(Kind::Bias, 10.0, [](const Sample& f, const Sample& g) { REQUIRE_THAT(f.value - g.value, WithinAbs(10, 1e-9)); });
  }
  SECTION("drift grows linearly from zero") {
    check(Kind::Drift, 48.0, [&](const Sample& f, const Sample& g) {
      const double days_in = static_cast<double>((f.time - t1).count()) / 86400.0;
      REQUIRE_THAT(f.value - g.value, WithinAbs(48.0 * days_in, 1e-9));
    });
  }
}

TEST_CASE("fully covered window means carry the declared variance") {
  const double sigma = 10.0;
  auto cfg = campaign::daily(campaign::single_tier(0.01, sigma), 4000, wells_2());
  cfg.sample_jitter = 2.0;
  const auto c = simulate_campaign(cfg, 77);
  const auto windows = aggregate_window(c.channel_series.at("c1"), hours(24), 24);
  REQUIRE(windows.size() == 4000);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const double e = (windows[w].mean_value - c.truth.true_rates[w][node_col(c.truth, "W1")]) / sigma;
    sum += e;
    sum2 += e * e;
  }
  const double n = static_cast<double>(windows.size());
  CHECK(std::abs(sum / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(sum2 / n - 1.0) < 0.07);
}

TEST_CASE("scenario validation") {
  const auto base = campaign::daily(campaign::single_tier(0.01, 10), 10, wells_2());
  auto cfg = base;
  cfg.scenarios = {{"nope", Kind::Bias, 1.0, cfg.start, cfg.start + days(1)}};
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = base;
  cfg.scenarios = {{"c1", Kind::Bias, 1.0, cfg.start + days(1), cfg.start}};
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = base;
  cfg.wells = {{"S", 1000, 0.1}};
  CHECK_THROWS_AS(simulate_campaign(cfg, 1), InputError);  // W1, W2 undetermined
  cfg = base;
  cfg.wells.push_back({"W9", 1, 0});
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = base;
  cfg.cadence = minutes(7);
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = base;
  cfg.start += hours(1);
  CHECK_THROWS_AS(cfg.validate(), InputError);
  CHECK(parse_scenario_kind("dropout_zero") == Kind::DropoutZero);
  CHECK_THROWS_AS(parse_scenario_kind("spike"), InputError);
}

TEST_CASE("scenario file resolves its topology relative to itself") {
  const auto dir = std::filesystem::temp_directory_path() / "dvr_test_scenario";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "field.json") << R"({
    "nodes": [{"id": "W1", "role": "well"}, {"id": "E", "role": "export"}],
    "constraints": [{"label": "q", "plus": ["W1"], "minus": ["E"]}],
    "channels": [
      {"id": "a", "node": "W1", "type": "mpfm", "uncertainty": {"relative": 0.05, "absolute_floor": 1}},
      {"id": "b", "node": "E", "type": "fiscal", "uncertainty": {"relative": 0.01, "absolute_floor": 1}}]})";
  std::ofstream(dir / "scenario.json") << R"({
    "topology": "field.json", "horizon": "3d",
    "wells": [{"node": "W1", "baseline": 500}],
    "scenarios": [{"channel": "a", "kind": "bias", "magnitude": 25,
                   "start": "2021-01-02T00:00:00Z", "end": "2021-01-03T00:00:00Z"}]})";
  const auto cfg = load_scenario_config((dir / "scenario.json").string());
  CHECK(cfg.horizon == days(3));
  CHECK(cfg.cadence == hours(1));
  CHECK(cfg.samples_per_window() == 24.0);
  CHECK(cfg.scenarios.at(0).magnitude == 25.0);
  const auto c = simulate_campaign(cfg, 3);
  CHECK(c.truth.faulty("a", parse_timestamp("2021-01-02T00:00:00Z")));
  CHECK_FALSE(c.truth.faulty("a", parse_timestamp("2021-01-01T00:00:00Z")));
  CHECK_FALSE(c.truth.faulty("b", parse_timestamp("2021-01-02T00:00:00Z")));

  std::ofstream(dir / "bad.json") << R"({"topology": "field.json", "horizon": "3d", "color": "red"})";
  CHECK_THROWS_AS(load_scenario_config((dir / "bad.json").string()), InputError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("scoring bookkeeping") {
  const auto cfg = campaign::daily(campaign::single_tier(0.01, 10), 4, wells_2(), {});
  auto truth = simulate_campaign(cfg, 1).truth;
  truth.scenarios = {{"c2", Kind::Bias, 50, cfg.start + days(1), cfg.start + days(3)}};

  auto report = [](std::vector<std::string> flagged) {
    DetectionReport r;
    for (const auto* id : {"c1", "c2", "c3"}) {
      const bool f = std::find(flagged.begin(), flagged.end(), id) != flagged.end();
      r.channels.push_back({id, f ? 5.0 : 0.1, 2.5, f, true});
    }
    r.ranked = flagged;
    for (const auto* id : {"c1", "c2", "c3"}) {
      if (std::find(flagged.begin(), flagged.end(), id) == flagged.end()) r.ranked.push_back(id);
    }
    return r;
  };

  SECTION("perfect detector") {
    std::vector<WindowDetection> d;
    for (std::size_t w = 0; w < 4; ++w) {
      d.push_back({truth.window_starts[w], report(w == 1 || w == 2 ? std::vector<std::string>{"c2"}
                                                                   : std::vector<std::string>{})});
    }
    const auto m = score_detections(d, truth);
    CHECK(m.tpr() == 1.0);
    CHECK(m.fpr() == 0.0);
    CHECK(m.faulty_windows == 2);
    CHECK(m.localization_accuracy() == 1.0);
  }
  SECTION("silent detector") {
    std::vector<WindowDetection> d;
    for (auto t : truth.window_starts) d.push_back({t, report({})});
    const auto m = score_detections(d, truth);
    CHECK(m.tpr() == 0.0);
    CHECK(m.total.false_negative == 2);
  }
  SECTION("window sets must match") {
    std::vector<WindowDetection> d;
    for (auto t : truth.window_starts) d.push_back({t, report({})});
    d.pop_back();
    CHECK_THROWS_AS(score_detections(d, truth), InputError);
    d.push_back({truth.window_starts.front(), report({})});
    CHECK_THROWS_AS(score_detections(d, truth), InputError);
  }
}

TEST_CASE("single balance campaign: shared flags, localization by rank ties") {
  const double sigma = 10.0;
  auto cfg = campaign::daily(campaign::single_tier(0.01, sigma), 300, wells_2());
  cfg.scenarios = {campaign::whole_campaign(cfg, "c2", Kind::Bias, 15 * sigma)};
  const auto c = simulate_campaign(cfg, 2024);
  const auto results = campaign::run(cfg, c);
  const auto m = score_detections(campaign::first_pass(results), c.truth);
  CHECK(m.tpr() > 0.99);
  // every flagged window flags all three channels together
  for (const auto& r : results) {
    const auto& det = r.trace->iterations.front().detection;
    CHECK((det.flagged().empty() || det.flagged().size() == 3));
  }
  // ties resolve by id, so the top rank is always c1 and never the faulty c2
  CHECK(m.localization_accuracy() == 0.0);
}

TEST_CASE("detection power grows with bias and the null rate matches alpha") {
  const double sigma = 10.0;
  const double alpha = 0.01;
  const int n = 2000;
  double previous = -1.0;
  for (double k : {2.0, 5.0, 10.0}) {
    auto cfg = campaign::daily(campaign::two_meter_export(alpha, sigma), n, {{"W1", 1000, 0.1}});
    cfg.scenarios = {campaign::whole_campaign(cfg, "m1", Kind::Bias, k * sigma)};
    const auto c = simulate_campaign(cfg, 100 + static_cast<int>(k));
    const auto m = score_detections(campaign::first_pass(campaign::run(cfg, c)), c.truth);
    INFO("bias " << k << " sigma, tpr " << m.tpr());
    CHECK(m.tpr() >= previous);
    previous = m.tpr();
  }
  CHECK(previous >= 0.99);

  const auto cfg = campaign::daily(campaign::two_meter_export(alpha, sigma), n, {{"W1", 1000, 0.1}});
  const auto c = simulate_campaign(cfg, 7);
  const auto m = score_detections(campaign::first_pass(campaign::run(cfg, c)), c.truth);
  for (const auto& ch : m.channels) {
    INFO(ch.channel_id << " fpr " << ch.fpr());
    CHECK(std::abs(ch.fpr() - alpha) <= 3.0 * std::sqrt(alpha * (1 - alpha) / n));
  }
}
