#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <random>

#include "delib/datatools.hpp"
#include "json.hpp"

using namespace delib;
namespace fs = std::filesystem;

namespace {

EpisodeTrace small_trace(const std::string& dir) {
  fs::create_directories(dir);
  RasterImage shot = RasterImage::filled(60, 100, {240, 240, 240});
  write_png(shot, dir + "/step_001_before.png");
  write_png(shot, dir + "/step_002_before.png");

  EpisodeTrace t;
  t.task = "Create a note";
  StepTrace s1;
  s1.step = 1;
  s1.proposal = {"tap the button", "Tap the new-note button.",
                 R"({"name":"click","arguments":{"coordinate":[500,500]}})", "raw"};
  s1.before_ref = "step_001_before.png";
  StepTrace s2;
  s2.step = 2;
  s2.proposal = {"enter the text", "Type the body.",
                 R"({"name":"type","arguments":{"text":"milk"}})", "raw"};
  s2.before_ref = "step_002_before.png";
  t.steps = {s1, s2};
  t.status = EpisodeStatus::MaxSteps;
  return t;
}

}  // namespace

TEST_CASE("unroll emits one sample per step with markers for coordinates") {
  std::string dir = "dt_unroll";
  std::string out = "dt_unroll_out";
  EpisodeTrace trace = small_trace(dir);
  auto samples = unroll_trajectories({{trace, dir}}, out);
  REQUIRE(samples.size() == 2);
  CHECK(samples[0].thought == "tap the button");
  REQUIRE(samples[0].marked_screenshot.has_value());
  CHECK(fs::exists(out + "/" + *samples[0].marked_screenshot));
  CHECK_FALSE(samples[1].marked_screenshot.has_value());
  CHECK_FALSE(samples[0].label.has_value());
  CHECK(samples[0].screenshot_digest.size() == 64);

  // identical second trace: same content, distinct ids
  auto twice = unroll_trajectories({{trace, dir}, {trace, dir}}, out);
  REQUIRE(twice.size() == 4);
  CHECK(twice[0].thought == twice[2].thought);
  CHECK(twice[0].sample_id != twice[2].sample_id);

  fs::remove_all(dir);
  fs::remove_all(out);
}

TEST_CASE("unroll requires the screenshot to exist") {
  EpisodeTrace t;
  t.task = "x";
  StepTrace s;
  s.step = 1;
  s.proposal = {"t", "d", R"({"name":"wait","arguments":{"time":1}})", "raw"};
  s.before_ref = "gone.png";
  t.steps = {s};
  try {
    unroll_trajectories({{t, "no_such_dir"}}, "");
    FAIL("expected MissingScreenshot");
  } catch (const DataError& e) {
    CHECK(e.kind == DataErr::MissingScreenshot);
  }
}

TEST_CASE("filters remove duplicates, parse errors and empty thoughts") {
  TacSample good{"s1", "t", "think", "{\"name\":\"wait\"}", "d", "a.png",
                 std::nullopt, std::nullopt, false, "digest1"};
  TacSample dup = good;
  dup.sample_id = "s2";
  TacSample empty_thought = good;
  empty_thought.sample_id = "s3";
  empty_thought.thought = "";
  TacSample bad_parse = good;
  bad_parse.sample_id = "s4";
  bad_parse.parse_error = true;
  bad_parse.screenshot_digest = "digest2";

  FilterReport report;
  auto kept = filter_samples({good, dup, empty_thought, bad_parse}, {}, report);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].sample_id == "s1");
  CHECK(report.input == 4);
  CHECK(report.removed_duplicates == 1);
  CHECK(report.removed_empty_thoughts == 1);
  CHECK(report.removed_parse_errors == 1);
  CHECK(report.survivors == 1);
  CHECK(report.removed_duplicates + report.removed_parse_errors +
            report.removed_empty_thoughts + report.survivors ==
        report.input);

  FilterRules off{false, false, false};
  auto all = filter_samples({good, dup, empty_thought, bad_parse}, off, report);
  CHECK(all.size() == 4);
}

TEST_CASE("sample jsonl round trips with the annotation field names") {
  TacSample s{"s1", "task", "think", "{\"name\":\"wait\"}", "desc", "orig.png",
              std::string("marked.png"), 1, false, std::string(64, 'a')};
  std::string text = serialize_samples({s});
  auto line = nlohmann::json::parse(text.substr(0, text.find('\n')));
  CHECK(line.contains("ACTION_THOUGHT"));
  CHECK(line.contains("ACTION"));
  CHECK(line.contains("ACTION_DESCRIPTION"));
  CHECK(line.contains("original_screenshot"));
  CHECK(line.contains("marked_screenshot"));

  auto back = parse_samples(text);
  REQUIRE(back.size() == 1);
  CHECK(back[0].sample_id == s.sample_id);
  CHECK(back[0].thought == s.thought);
  CHECK(back[0].marked_screenshot == s.marked_screenshot);
  CHECK(back[0].label == s.label);
}

TEST_CASE("rating matrix parsing") {
  RatingMatrix m = parse_rating_matrix("3,0\n2,1\n");
  REQUIRE(m.counts.size() == 2);
  CHECK(m.counts[0] == std::vector<int>{3, 0});
  CHECK_THROWS_AS(parse_rating_matrix("1,x\n"), DataError);
}

TEST_CASE("kappa on known matrices") {
  // all three raters agree on every item across two categories
  CHECK(fleiss_kappa({{{3, 0}, {0, 3}}}) == doctest::Approx(1.0));
  // hand-computed: P_bar = 2/3, P_e = 13/18
  CHECK(fleiss_kappa({{{3, 0}, {2, 1}}}) == doctest::Approx(-0.2).epsilon(1e-12));

  try {
    fleiss_kappa({{{3, 0}, {3, 0}}});
    FAIL("expected DegenerateAgreement");
  } catch (const DataError& e) {
    CHECK(e.kind == DataErr::DegenerateAgreement);
  }
  CHECK_THROWS_AS(fleiss_kappa({{{3, 0}, {2, 2}}}), DataError);  // ragged rater count
  CHECK_THROWS_AS(fleiss_kappa({{}}), DataError);
  CHECK_THROWS_AS(fleiss_kappa({{{1, 0}}}), DataError);  // one rater
}

TEST_CASE("kappa matches a brute-force evaluation on random matrices") {
  std::mt19937 rng(17);
  std::uniform_int_distribution<int> n_items(1, 10), raters(2, 6), cats(2, 5);
  int checked = 0;
  while (checked < 200) {
    int N = n_items(rng), n = raters(rng), k = cats(rng);
    RatingMatrix m;
    for (int i = 0; i < N; ++i) {
      std::vector<int> row(k, 0);
      for (int r = 0; r < n; ++r) ++row[rng() % k];
      m.counts.push_back(row);
    }
    // independent evaluation, written differently on purpose
    double p_bar = 0, p_e = 0;
    std::vector<double> share(k, 0);
    for (const auto& row : m.counts) {
      double agree = 0;
      for (int j = 0; j < k; ++j) {
        agree += row[j] * (row[j] - 1);
        share[j] += row[j];
      }
      p_bar += agree / (n * (n - 1.0));
    }
    p_bar /= N;
    for (int j = 0; j < k; ++j) p_e += (share[j] / (N * n)) * (share[j] / (N * n));
    if (p_e >= 1.0) continue;
    double expect = (p_bar - p_e) / (1 - p_e);
    CHECK(fleiss_kappa(m) == doctest::Approx(expect).epsilon(1e-9));
    ++checked;
  }
}

TEST_CASE("failure tallies are proportions of label occurrences") {
  using L = FailureLabel;
  auto tally = tally_failures({{L::Planning, L::Planning}, {L::Grounding}, {L::Others}});
  CHECK(tally[L::Planning] == doctest::Approx(0.5));
  CHECK(tally[L::Grounding] == doctest::Approx(0.25));
  CHECK(tally[L::Others] == doctest::Approx(0.25));
  double sum = 0;
  for (auto& [label, share] : tally) sum += share;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(tally_failures({}).empty());

  CHECK(parse_failure_label("planning") == L::Planning);
  CHECK(parse_failure_label("Perception") == L::Perception);
  CHECK_FALSE(parse_failure_label("bogus").has_value());
  CHECK(std::string(failure_label_name(L::Navigation)) == "Navigation");
}
