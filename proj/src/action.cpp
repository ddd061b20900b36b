#include "delib/action.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <cstdlib>
#include <set>
#include <vector>

namespace delib {
namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

[[noreturn]] void bad_args(const std::string& msg) {
  throw ActionParseError(ActionErr::BadArguments, msg);
}

void require_keys(const std::string& name, const json& args,
                  const std::vector<std::string>& required,
                  const std::vector<std::string>& optional = {}) {
  for (const auto& k : required) {
    if (!args.contains(k)) bad_args(name + ": missing argument '" + k + "'");
  }
  for (auto it = args.begin(); it != args.end(); ++it) {
    const std::string& k = it.key();
    if (std::find(required.begin(), required.end(), k) == required.end() &&
        std::find(optional.begin(), optional.end(), k) == optional.end()) {
      bad_args(name + ": unexpected argument '" + k + "'");
    }
  }
}

std::string get_text(const std::string& name, const json& args, const char* key) {
  const json& v = args.at(key);
  if (!v.is_string()) bad_args(name + ": '" + std::string(key) + "' must be a string");
  return v.get<std::string>();
}

Coordinate get_coordinate(const std::string& name, const json& args, const char* key) {
  const json& v = args.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() ||
      !v[1].is_number_integer()) {
    bad_args(name + ": '" + std::string(key) + "' must be [x, y] integers");
  }
  Coordinate c{v[0].get<int>(), v[1].get<int>()};
  if (c.x < 0 || c.x > 999 || c.y < 0 || c.y > 999) {
    bad_args(name + ": coordinate out of thousandths range 0-999");
  }
  return c;
}

double get_duration(const std::string& name, const json& args, const char* key) {
  const json& v = args.at(key);
  if (!v.is_number()) bad_args(name + ": '" + std::string(key) + "' must be a number");
  double t = v.get<double>();
  if (!(t > 0)) bad_args(name + ": '" + std::string(key) + "' must be positive");
  return t;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

// Number rendering with shortest round-trip form; integral values drop the
// fractional part ("1" not "1.0") and re-parse identically.
std::string render_number(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    return std::to_string(static_cast<long long>(v));
  }
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

ordered_json arguments_json(const Action& a) {
  ordered_json args = ordered_json::object();
  std::visit(
      [&](const auto& act) {
        using T = std::decay_t<decltype(act)>;
        if constexpr (std::is_same_v<T, KeyAction>) {
          args["text"] = act.text;
        } else if constexpr (std::is_same_v<T, ClickAction>) {
          args["coordinate"] = {act.at.x, act.at.y};
        } else if constexpr (std::is_same_v<T, LongPressAction>) {
          args["coordinate"] = {act.at.x, act.at.y};
          args["time"] = act.seconds;
        } else if constexpr (std::is_same_v<T, SwipeAction>) {
          args["coordinate"] = {act.from.x, act.from.y};
          args["coordinate2"] = {act.to.x, act.to.y};
        } else if constexpr (std::is_same_v<T, TypeAction>) {
          args["text"] = act.text;
        } else if constexpr (std::is_same_v<T, ClearTextAction>) {
          // no arguments
        } else if constexpr (std::is_same_v<T, SystemButtonAction>) {
          args["button"] = system_button_name(act.button);
        } else if constexpr (std::is_same_v<T, OpenAction>) {
          args["text"] = act.app;
        } else if constexpr (std::is_same_v<T, WaitAction>) {
          args["time"] = act.seconds;
        } else if constexpr (std::is_same_v<T, TakeNoteAction>) {
          args["text"] = act.text;
        } else if constexpr (std::is_same_v<T, TerminateAction>) {
          args["status"] = terminate_status_name(act.status);
        }
      },
      a);
  return args;
}

std::string quote_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

const char* action_name(const Action& a) {
  struct Namer {
    const char* operator()(const KeyAction&) const { return "key"; }
    const char* operator()(const ClickAction&) const { return "click"; }
    const char* operator()(const LongPressAction&) const { return "long_press"; }
    const char* operator()(const SwipeAction&) const { return "swipe"; }
    const char* operator()(const TypeAction&) const { return "type"; }
    const char* operator()(const ClearTextAction&) const { return "clear_text"; }
    const char* operator()(const SystemButtonAction&) const { return "system_button"; }
    const char* operator()(const OpenAction&) const { return "open"; }
    const char* operator()(const WaitAction&) const { return "wait"; }
    const char* operator()(const TakeNoteAction&) const { return "take_note"; }
    const char* operator()(const TerminateAction&) const { return "terminate"; }
  };
  return std::visit(Namer{}, a);
}

bool is_coordinate_based(const Action& a) {
  return std::holds_alternative<ClickAction>(a) ||
         std::holds_alternative<LongPressAction>(a) ||
         std::holds_alternative<SwipeAction>(a);
}

const char* system_button_name(SystemButton b) {
  switch (b) {
    case SystemButton::Back: return "Back";
    case SystemButton::Home: return "Home";
    case SystemButton::Enter: return "Enter";
  }
  return "Back";
}

const char* terminate_status_name(TerminateStatus s) {
  return s == TerminateStatus::Success ? "success" : "failure";
}

Action build_action(const std::string& name, const json& arguments) {
  if (!arguments.is_object()) bad_args(name + ": arguments must be an object");
  if (name == "key") {
    require_keys(name, arguments, {"text"});
    return KeyAction{get_text(name, arguments, "text")};
  }
  if (name == "click") {
    require_keys(name, arguments, {"coordinate"});
    return ClickAction{get_coordinate(name, arguments, "coordinate")};
  }
  if (name == "long_press") {
    require_keys(name, arguments, {"coordinate"}, {"time"});
    LongPressAction a{get_coordinate(name, arguments, "coordinate")};
    if (arguments.contains("time")) a.seconds = get_duration(name, arguments, "time");
    return a;
  }
  if (name == "swipe") {
    require_keys(name, arguments, {"coordinate", "coordinate2"});
    return SwipeAction{get_coordinate(name, arguments, "coordinate"),
                       get_coordinate(name, arguments, "coordinate2")};
  }
  if (name == "type") {
    require_keys(name, arguments, {"text"});
    return TypeAction{get_text(name, arguments, "text")};
  }
  if (name == "clear_text") {
    require_keys(name, arguments, {});
    return ClearTextAction{};
  }
  if (name == "system_button") {
    require_keys(name, arguments, {"button"});
    std::string b = lower(get_text(name, arguments, "button"));
    if (b == "back") return SystemButtonAction{SystemButton::Back};
    if (b == "home") return SystemButtonAction{SystemButton::Home};
    if (b == "enter") return SystemButtonAction{SystemButton::Enter};
    bad_args(name + ": unknown button '" + b + "' (Back|Home|Enter)");
  }
  if (name == "open") {
    require_keys(name, arguments, {"text"});
    std::string app = get_text(name, arguments, "text");
    if (app.empty()) bad_args("open: app name must be non-empty");
    return OpenAction{app};
  }
  if (name == "wait") {
    require_keys(name, arguments, {"time"});
    return WaitAction{get_duration(name, arguments, "time")};
  }
  if (name == "take_note") {
    require_keys(name, arguments, {"text"});
    return TakeNoteAction{get_text(name, arguments, "text")};
  }
  if (name == "terminate") {
    require_keys(name, arguments, {"status"});
    std::string s = lower(get_text(name, arguments, "status"));
    if (s == "success") return TerminateAction{TerminateStatus::Success};
    if (s == "failure") return TerminateAction{TerminateStatus::Failure};
    bad_args("terminate: status must be success or failure");
  }
  throw ActionParseError(ActionErr::UnknownAction, "unknown action '" + name + "'");
}

StepOutput parse_step_output(const std::string& raw) {
  static constexpr const char* kOpen = "<tool_call>";
  static constexpr const char* kClose = "</tool_call>";

  size_t first = raw.find(kOpen);
  if (first == std::string::npos) {
    throw ActionParseError(ActionErr::MissingToolCall, "no <tool_call> block");
  }
  if (raw.find(kOpen, first + 1) != std::string::npos) {
    throw ActionParseError(ActionErr::MultipleToolCalls,
                           "more than one <tool_call> block");
  }
  size_t body_begin = first + std::char_traits<char>::length(kOpen);
  size_t end = raw.find(kClose, body_begin);
  if (end == std::string::npos) {
    throw ActionParseError(ActionErr::MissingToolCall, "unterminated <tool_call>");
  }
  std::string body = raw.substr(body_begin, end - body_begin);

  json call = json::parse(body, nullptr, false);
  if (call.is_discarded() || !call.is_object() || !call.contains("name") ||
      !call["name"].is_string() || !call.contains("arguments") ||
      !call["arguments"].is_object()) {
    throw ActionParseError(ActionErr::MalformedBody,
                           "tool-call body is not a {name, arguments} object");
  }

  auto section = [&](const char* marker) -> std::string {
    size_t pos = raw.rfind(marker, first);
    if (pos == std::string::npos) return {};
    pos += std::strlen(marker);
    size_t stop = raw.find('\n', pos);
    std::string text = raw.substr(pos, (stop == std::string::npos || stop > first
                                            ? first
                                            : stop) -
                                           pos);
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.erase(0, 1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back())))
      text.pop_back();
    return text;
  };

  StepOutput out;
  out.thought = section("Thought:");
  out.action_description = section("Action:");
  if (out.thought.empty()) {
    throw ActionParseError(ActionErr::MissingThought, "no Thought line before tool call");
  }
  out.action = build_action(call["name"].get<std::string>(), call["arguments"]);
  return out;
}

namespace {

// Minimal parser for name(arg=value, ...) call syntax.
struct CallScanner {
  const std::string& s;
  size_t i = 0;

  explicit CallScanner(const std::string& text) : s(text) {}

  void skip_ws() {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  }
  [[noreturn]] void fail(const std::string& msg) {
    throw ActionParseError(ActionErr::MalformedCall,
                           "call syntax: " + msg + " at offset " + std::to_string(i));
  }
  char peek() { return i < s.size() ? s[i] : '\0'; }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++i;
  }
  std::string identifier() {
    skip_ws();
    size_t start = i;
    while (i < s.size() &&
           (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_'))
      ++i;
    if (i == start) fail("expected identifier");
    return s.substr(start, i - start);
  }
  json value() {
    skip_ws();
    char c = peek();
    if (c == '"' || c == '\'') {
      char q = c;
      ++i;
      std::string out;
      while (i < s.size() && s[i] != q) {
        if (s[i] == '\\' && i + 1 < s.size()) ++i;
        out += s[i++];
      }
      if (i >= s.size()) fail("unterminated string");
      ++i;
      return json(out);
    }
    if (c == '[') {
      ++i;
      json arr = json::array();
      skip_ws();
      if (peek() == ']') { ++i; return arr; }
      while (true) {
        arr.push_back(value());
        skip_ws();
        if (peek() == ',') { ++i; continue; }
        expect(']');
        return arr;
      }
    }
    // number
    size_t start = i;
    if (peek() == '-' || peek() == '+') ++i;
    bool has_dot = false;
    while (i < s.size() &&
           (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) {
      if (s[i] == '.') has_dot = true;
      ++i;
    }
    if (i == start) fail("expected value");
    std::string num = s.substr(start, i - start);
    if (has_dot) return json(std::stod(num));
    return json(std::stoll(num));
  }
};

}  // namespace

Action parse_call_string(const std::string& raw) {
  CallScanner sc(raw);
  std::string name = sc.identifier();
  sc.skip_ws();
  sc.expect('(');
  json args = json::object();
  sc.skip_ws();
  if (sc.peek() == ')') {
    ++sc.i;
  } else {
    while (true) {
      std::string key = sc.identifier();
      sc.skip_ws();
      sc.expect('=');
      args[key] = sc.value();
      sc.skip_ws();
      if (sc.peek() == ',') { ++sc.i; continue; }
      sc.expect(')');
      break;
    }
  }
  sc.skip_ws();
  if (sc.i != raw.size()) sc.fail("trailing characters");
  return build_action(name, args);
}

std::string canonical_encode(const Action& a) {
  ordered_json call;
  call["name"] = action_name(a);
  call["arguments"] = arguments_json(a);
  return call.dump();
}

std::string render_call(const Action& a) {
  ordered_json args = arguments_json(a);
  std::string out = action_name(a);
  out += '(';
  bool first = true;
  for (auto it = args.begin(); it != args.end(); ++it) {
    if (!first) out += ", ";
    first = false;
    out += it.key();
    out += '=';
    const auto& v = it.value();
    if (v.is_string()) {
      out += quote_string(v.get<std::string>());
    } else if (v.is_array()) {
      out += '[' + std::to_string(v[0].get<int>()) + ", " +
             std::to_string(v[1].get<int>()) + ']';
    } else {
      out += render_number(v.get<double>());
    }
  }
  out += ')';
  return out;
}

std::optional<FaultCategory> schema_fault(const std::string& name,
                                          const nlohmann::json& arguments) {
  try {
    build_action(name, arguments);
    return std::nullopt;
  } catch (const ActionParseError& e) {
    if (e.kind == ActionErr::UnknownAction) return FaultCategory::InvalidAction;
    return FaultCategory::ActionParametersError;
  }
}

PixelPoint scale_coordinate(Coordinate c, int width, int height) {
  auto scale = [](int v, int dim) {
    long px = std::lround(static_cast<double>(v) * (dim - 1) / 999.0);
    return static_cast<int>(std::clamp(px, 0L, static_cast<long>(dim - 1)));
  };
  return PixelPoint{scale(c.x, width), scale(c.y, height)};
}

}  // namespace delib
