#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "delib/action.hpp"
#include "delib/image.hpp"

namespace delib {

enum class EnvErr {
  EnvClosed,
  UnknownState,
  UnreachableInitial,
  OverlappingMatchers,
  BadScenario,
};

class EnvError : public std::runtime_error {
 public:
  EnvError(EnvErr kind, const std::string& what)
      : std::runtime_error(what), kind(kind) {}
  EnvErr kind;
};

struct Observation {
  RasterImage screenshot;
  int width = 0;
  int height = 0;
  std::string device_time;
};

// Matches one executed action within a state. Regions are in thousandths so
// scenarios stay resolution-independent.
struct ActionMatcher {
  std::string kind;                          // action name, e.g. "click"
  std::optional<std::array<int, 4>> region;  // [left, top, right, bottom], 0-999
  std::optional<std::string> text_pattern;   // case-insensitive substring
  std::optional<std::string> direction;      // swipe: up|down|left|right
};

struct Transition {
  std::string state;
  ActionMatcher match;
  std::string next;
};

struct StateSpec {
  std::string name;
  std::string screenshot_path;  // either a PNG path ...
  std::optional<RasterImage> synthetic;  // ... or a generated raster
};

struct Scenario {
  std::string initial;
  std::map<std::string, StateSpec> states;
  std::vector<Transition> transitions;  // priority = list order within a state
};

// Scenario file: JSON with initial/states/transitions. States carry either a
// "screenshot" path or a synthetic "fill" description.
Scenario load_scenario(const std::string& json_text, const std::string& base_dir = ".");
Scenario load_scenario_file(const std::string& path);

struct ExecResult {
  bool state_changed = false;
  bool closed = false;
  std::optional<TerminateStatus> terminate_status;
  std::string state;
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual Observation observe() = 0;
  virtual ExecResult execute(const Action& action) = 0;
};

// Deterministic state machine over a Scenario; unmatched actions leave the
// state (and the screenshot, bitwise) unchanged.
class MockEnvironment : public Environment {
 public:
  explicit MockEnvironment(Scenario scenario);
  Observation observe() override;
  ExecResult execute(const Action& action) override;
  const std::string& state() const { return state_; }

 private:
  const RasterImage& state_image(const std::string& name);

  Scenario scenario_;
  std::string state_;
  bool closed_ = false;
  int clock_ = 0;
  std::map<std::string, RasterImage> image_cache_;
};

bool matcher_applies(const ActionMatcher& m, const Action& action);

// Device-bridge command mapping: each action as an input shell command for a
// device bridge binary (tap/swipe/text/keyevent). Wire-level runtime only;
// never exercised in tests.
std::vector<std::string> bridge_command(const Action& action, int width, int height);

class DeviceEnvironment : public Environment {
 public:
  explicit DeviceEnvironment(std::string adb_binary = "adb");
  Observation observe() override;
  ExecResult execute(const Action& action) override;

 private:
  std::string adb_;
  bool closed_ = false;
};

}  // namespace delib
