#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "delib/memory.hpp"

using namespace delib;

namespace {

StepRecord rec(int i) {
  return {i, "thought " + std::to_string(i), ClickAction{{i % 1000, 1}},
          "desc " + std::to_string(i)};
}

}  // namespace

TEST_CASE("history keeps the last five steps") {
  WorkingMemory m;
  for (int i = 1; i <= 9; ++i) m.push_step(rec(i));
  REQUIRE(m.history().size() == 5);
  CHECK(m.history().front().step_index == 5);
  CHECK(m.history().back().step_index == 9);
}

TEST_CASE("push_step rejects non-monotonic indices") {
  WorkingMemory m;
  m.push_step(rec(1));
  CHECK_THROWS_AS(m.push_step(rec(1)), MemoryError);
  CHECK_THROWS_AS(m.push_step(rec(3)), MemoryError);
  m.push_step(rec(2));
  CHECK(m.last_step_index() == 2);
}

TEST_CASE("reflection is last-writer-wins") {
  WorkingMemory m;
  CHECK_FALSE(m.last_reflection().has_value());
  m.set_reflection(ReflectionText{"t1", "click(coordinate=[1, 2])", "missed"});
  m.set_reflection(ReflectionText{"t2", "wait(time=1)", "worked"});
  REQUIRE(m.last_reflection().has_value());
  CHECK(m.last_reflection()->feedback == "worked");
  m.set_reflection(std::nullopt);
  CHECK_FALSE(m.last_reflection().has_value());
}

TEST_CASE("notes persist beyond the sliding window") {
  WorkingMemory m;
  m.add_note("verification code 8141");
  for (int i = 1; i <= 12; ++i) m.push_step(rec(i));
  REQUIRE(m.notes().size() == 1);
  CHECK(m.render_sections().memory.find("verification code 8141") != std::string::npos);
  CHECK_THROWS_AS(m.add_note(""), MemoryError);
}

TEST_CASE("rendered sections carry the prompt headers") {
  WorkingMemory m;
  m.push_step(rec(1));
  m.add_note("note body");
  m.set_reflection(ReflectionText{"t", "a()", "f"});
  MemorySections s = m.render_sections();
  CHECK(s.history.find("### History Operations ###") != std::string::npos);
  CHECK(s.memory.find("### Memory ###") != std::string::npos);
  CHECK(s.latest_reflection.find("### Latest Reflection ###") != std::string::npos);
  CHECK(s.history_body.find("###") == std::string::npos);
  CHECK(s.memory_body.find("###") == std::string::npos);
  CHECK(s.history_body.find("thought 1") != std::string::npos);
}

TEST_CASE("window law over random lengths") {
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> len(0, 12);
  for (int trial = 0; trial < 200; ++trial) {
    WorkingMemory m;
    int t = len(rng) + 1;  // next step index after pushing t-1 records
    for (int i = 1; i < t; ++i) m.push_step(rec(i));
    std::string body = m.render_sections().history_body;
    for (int i = 1; i < t; ++i) {
      bool expected = i >= std::max(1, t - 5);
      std::string needle = "Thought: thought " + std::to_string(i) + " |";
      CHECK((body.find(needle) != std::string::npos) == expected);
    }
  }
}
