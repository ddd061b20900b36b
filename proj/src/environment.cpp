#include "delib/environment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace delib {
namespace {

using nlohmann::json;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool region_contains(const std::array<int, 4>& r, Coordinate c) {
  return c.x >= r[0] && c.x <= r[2] && c.y >= r[1] && c.y <= r[3];
}

bool regions_overlap(const std::array<int, 4>& a, const std::array<int, 4>& b) {
  return a[0] <= b[2] && b[0] <= a[2] && a[1] <= b[3] && b[1] <= a[3];
}

std::string swipe_direction(const SwipeAction& s) {
  int dx = s.to.x - s.from.x;
  int dy = s.to.y - s.from.y;
  if (std::abs(dx) >= std::abs(dy)) return dx >= 0 ? "right" : "left";
  return dy >= 0 ? "down" : "up";
}

bool text_matches(const std::optional<std::string>& pattern, const std::string& text) {
  if (!pattern) return true;
  return lower(text).find(lower(*pattern)) != std::string::npos;
}

RasterImage synth_image(const json& fill) {
  auto size = fill.at("size");
  Rgb bg{255, 255, 255};
  if (fill.contains("color")) {
    bg = Rgb{fill["color"][0].get<uint8_t>(), fill["color"][1].get<uint8_t>(),
             fill["color"][2].get<uint8_t>()};
  }
  RasterImage img = RasterImage::filled(size[0].get<int>(), size[1].get<int>(), bg);
  for (const auto& rect : fill.value("rects", json::array())) {
    auto box = rect.at("box");
    Rgb c{rect["color"][0].get<uint8_t>(), rect["color"][1].get<uint8_t>(),
          rect["color"][2].get<uint8_t>()};
    int l = std::max(0, box[0].get<int>()), t = std::max(0, box[1].get<int>());
    int r = std::min(img.width, box[2].get<int>()), b = std::min(img.height, box[3].get<int>());
    for (int y = t; y < b; ++y)
      for (int x = l; x < r; ++x) img.set(x, y, c);
  }
  return img;
}

}  // namespace

bool matcher_applies(const ActionMatcher& m, const Action& action) {
  if (m.kind != action_name(action)) return false;
  if (const auto* click = std::get_if<ClickAction>(&action)) {
    return !m.region || region_contains(*m.region, click->at);
  }
  if (const auto* lp = std::get_if<LongPressAction>(&action)) {
    return !m.region || region_contains(*m.region, lp->at);
  }
  if (const auto* swipe = std::get_if<SwipeAction>(&action)) {
    if (m.region && !region_contains(*m.region, swipe->from)) return false;
    if (m.direction && *m.direction != swipe_direction(*swipe)) return false;
    return true;
  }
  if (const auto* type = std::get_if<TypeAction>(&action)) {
    return text_matches(m.text_pattern, type->text);
  }
  if (const auto* open = std::get_if<OpenAction>(&action)) {
    return text_matches(m.text_pattern, open->app);
  }
  if (const auto* key = std::get_if<KeyAction>(&action)) {
    return text_matches(m.text_pattern, key->text);
  }
  if (const auto* note = std::get_if<TakeNoteAction>(&action)) {
    return text_matches(m.text_pattern, note->text);
  }
  if (const auto* sys = std::get_if<SystemButtonAction>(&action)) {
    return text_matches(m.text_pattern, system_button_name(sys->button));
  }
  return true;  // clear_text, wait
}

Scenario load_scenario(const std::string& json_text, const std::string& base_dir) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw EnvError(EnvErr::BadScenario, "scenario is not a JSON object");
  }
  Scenario scenario;
  scenario.initial = doc.value("initial", "");
  const json states = doc.value("states", json::object());
  for (auto it = states.begin(); it != states.end(); ++it) {
    StateSpec spec;
    spec.name = it.key();
    const json& body = it.value();
    if (body.contains("screenshot")) {
      std::string path = body["screenshot"].get<std::string>();
      spec.screenshot_path =
          path.empty() || path.front() == '/' ? path : base_dir + "/" + path;
    } else if (body.contains("fill")) {
      spec.synthetic = synth_image(body["fill"]);
    } else {
      throw EnvError(EnvErr::BadScenario,
                     "state '" + spec.name + "' needs a screenshot or fill");
    }
    scenario.states[spec.name] = std::move(spec);
  }

  if (scenario.initial.empty() || !scenario.states.count(scenario.initial)) {
    throw EnvError(EnvErr::UnreachableInitial,
                   "initial state '" + scenario.initial + "' is not declared");
  }

  for (const auto& t : doc.value("transitions", json::array())) {
    Transition tr;
    tr.state = t.at("state").get<std::string>();
    tr.next = t.at("next").get<std::string>();
    const json& m = t.at("match");
    tr.match.kind = m.at("kind").get<std::string>();
    if (m.contains("region")) {
      const auto& r = m["region"];
      tr.match.region = std::array<int, 4>{r[0].get<int>(), r[1].get<int>(),
                                           r[2].get<int>(), r[3].get<int>()};
    }
    if (m.contains("text")) tr.match.text_pattern = m["text"].get<std::string>();
    if (m.contains("direction")) tr.match.direction = m["direction"].get<std::string>();
    if (!scenario.states.count(tr.state)) {
      throw EnvError(EnvErr::UnknownState, "transition from undeclared state " + tr.state);
    }
    if (!scenario.states.count(tr.next)) {
      throw EnvError(EnvErr::UnknownState, "transition to undeclared state " + tr.next);
    }
    scenario.transitions.push_back(std::move(tr));
  }

  // Matchers are priority-ordered by default; a scenario declaring
  // priority_ordered=false must keep same-kind regions disjoint.
  if (!doc.value("priority_ordered", true)) {
    for (size_t i = 0; i < scenario.transitions.size(); ++i) {
      for (size_t j = i + 1; j < scenario.transitions.size(); ++j) {
        const auto& a = scenario.transitions[i];
        const auto& b = scenario.transitions[j];
        if (a.state != b.state || a.match.kind != b.match.kind) continue;
        if (a.match.region && b.match.region &&
            !regions_overlap(*a.match.region, *b.match.region)) {
          continue;
        }
        throw EnvError(EnvErr::OverlappingMatchers,
                       "ambiguous matchers in state " + a.state);
      }
    }
  }
  return scenario;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw EnvError(EnvErr::BadScenario, "cannot open scenario: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string dir = ".";
  size_t slash = path.find_last_of('/');
  if (slash != std::string::npos) dir = path.substr(0, slash);
  return load_scenario(buf.str(), dir);
}

MockEnvironment::MockEnvironment(Scenario scenario)
    : scenario_(std::move(scenario)), state_(scenario_.initial) {}

const RasterImage& MockEnvironment::state_image(const std::string& name) {
  auto it = image_cache_.find(name);
  if (it != image_cache_.end()) return it->second;
  const StateSpec& spec = scenario_.states.at(name);
  RasterImage img =
      spec.synthetic ? *spec.synthetic : read_png(spec.screenshot_path);
  return image_cache_.emplace(name, std::move(img)).first->second;
}

Observation MockEnvironment::observe() {
  if (closed_) throw EnvError(EnvErr::EnvClosed, "environment is closed");
  Observation obs;
  obs.screenshot = state_image(state_);
  obs.width = obs.screenshot.width;
  obs.height = obs.screenshot.height;
  // synthetic monotone clock, 30 s per observation
  int seconds = clock_ * 30;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "2025-01-01 %02d:%02d:%02d", 9 + seconds / 3600,
                (seconds / 60) % 60, seconds % 60);
  ++clock_;
  obs.device_time = buf;
  return obs;
}

ExecResult MockEnvironment::execute(const Action& action) {
  if (closed_) throw EnvError(EnvErr::EnvClosed, "environment is closed");
  ExecResult result;
  if (const auto* term = std::get_if<TerminateAction>(&action)) {
    closed_ = true;
    result.closed = true;
    result.terminate_status = term->status;
    result.state = state_;
    return result;
  }
  for (const auto& tr : scenario_.transitions) {
    if (tr.state != state_) continue;
    if (!matcher_applies(tr.match, action)) continue;
    result.state_changed = tr.next != state_;
    state_ = tr.next;
    result.state = state_;
    return result;
  }
  result.state = state_;  // no match: state unchanged
  return result;
}

std::vector<std::string> bridge_command(const Action& action, int width, int height) {
  struct Mapper {
    int w, h;
    std::vector<std::string> operator()(const KeyAction& a) const {
      return {"shell input keyevent " + a.text};
    }
    std::vector<std::string> operator()(const ClickAction& a) const {
      PixelPoint p = scale_coordinate(a.at, w, h);
      return {"shell input tap " + std::to_string(p.x) + " " + std::to_string(p.y)};
    }
    std::vector<std::string> operator()(const LongPressAction& a) const {
      PixelPoint p = scale_coordinate(a.at, w, h);
      std::string xy = std::to_string(p.x) + " " + std::to_string(p.y);
      return {"shell input swipe " + xy + " " + xy + " " +
              std::to_string(static_cast<int>(a.seconds * 1000))};
    }
    std::vector<std::string> operator()(const SwipeAction& a) const {
      PixelPoint p1 = scale_coordinate(a.from, w, h);
      PixelPoint p2 = scale_coordinate(a.to, w, h);
      return {"shell input swipe " + std::to_string(p1.x) + " " + std::to_string(p1.y) +
              " " + std::to_string(p2.x) + " " + std::to_string(p2.y) + " 300"};
    }
    std::vector<std::string> operator()(const TypeAction& a) const {
      std::string escaped;
      for (char c : a.text) {
        if (c == ' ') escaped += "%s";
        else if (c == '\'' || c == '"' || c == '\\') { escaped += '\\'; escaped += c; }
        else escaped += c;
      }
      return {"shell input text '" + escaped + "'"};
    }
    std::vector<std::string> operator()(const ClearTextAction&) const {
      return {"shell input keyevent KEYCODE_MOVE_END",
              "shell input keyevent --longpress $(printf 'KEYCODE_DEL %.0s' $(seq 50))"};
    }
    std::vector<std::string> operator()(const SystemButtonAction& a) const {
      switch (a.button) {
        case SystemButton::Back: return {"shell input keyevent KEYCODE_BACK"};
        case SystemButton::Home: return {"shell input keyevent KEYCODE_HOME"};
        case SystemButton::Enter: return {"shell input keyevent KEYCODE_ENTER"};
      }
      return {};
    }
    std::vector<std::string> operator()(const OpenAction& a) const {
      // launcher intent by app label; resolution happens on-device
      return {"shell monkey -p $(pm list packages | grep -i '" + a.app +
              "' | head -1 | cut -d: -f2) -c android.intent.category.LAUNCHER 1"};
    }
    std::vector<std::string> operator()(const WaitAction& a) const {
      return {"shell sleep " + std::to_string(a.seconds)};
    }
    std::vector<std::string> operator()(const TakeNoteAction&) const { return {}; }
    std::vector<std::string> operator()(const TerminateAction&) const { return {}; }
  };
  return std::visit(Mapper{width, height}, action);
}

DeviceEnvironment::DeviceEnvironment(std::string adb_binary)
    : adb_(std::move(adb_binary)) {}

Observation DeviceEnvironment::observe() {
  if (closed_) throw EnvError(EnvErr::EnvClosed, "device session closed");
  std::string tmp = "/tmp/delib_screencap.png";
  std::string cmd = adb_ + " exec-out screencap -p > " + tmp;
  if (std::system(cmd.c_str()) != 0) {
    throw EnvError(EnvErr::EnvClosed, "screencap failed");
  }
  Observation obs;
  obs.screenshot = read_png(tmp);
  obs.width = obs.screenshot.width;
  obs.height = obs.screenshot.height;
  std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%d %H:%M:%S", std::localtime(&now));
  obs.device_time = buf;
  return obs;
}

ExecResult DeviceEnvironment::execute(const Action& action) {
  if (closed_) throw EnvError(EnvErr::EnvClosed, "device session closed");
  ExecResult result;
  if (const auto* term = std::get_if<TerminateAction>(&action)) {
    closed_ = true;
    result.closed = true;
    result.terminate_status = term->status;
    return result;
  }
  Observation probe = observe();
  for (const auto& cmd : bridge_command(action, probe.width, probe.height)) {
    std::string full = adb_ + " " + cmd;
    if (std::system(full.c_str()) != 0) {
      throw EnvError(EnvErr::EnvClosed, "device command failed: " + full);
    }
  }
  result.state_changed = true;  // unknown; the reflection stage judges it
  return result;
}

}  // namespace delib
