#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include "json.hpp"

namespace delib {

// Screen position in thousandths of the screen extent, 0-999 per axis.
struct Coordinate {
  int x = 0;
  int y = 0;
  friend bool operator==(const Coordinate&, const Coordinate&) = default;
};

struct KeyAction {
  std::string text;
  friend bool operator==(const KeyAction&, const KeyAction&) = default;
};

struct ClickAction {
  Coordinate at;
  friend bool operator==(const ClickAction&, const ClickAction&) = default;
};

struct LongPressAction {
  Coordinate at;
  double seconds = 1.0;
  friend bool operator==(const LongPressAction&, const LongPressAction&) = default;
};

struct SwipeAction {
  Coordinate from;
  Coordinate to;
  friend bool operator==(const SwipeAction&, const SwipeAction&) = default;
};

struct TypeAction {
  std::string text;
  friend bool operator==(const TypeAction&, const TypeAction&) = default;
};

struct ClearTextAction {
  friend bool operator==(const ClearTextAction&, const ClearTextAction&) = default;
};

enum class SystemButton { Back, Home, Enter };

struct SystemButtonAction {
  SystemButton button = SystemButton::Back;
  friend bool operator==(const SystemButtonAction&, const SystemButtonAction&) = default;
};

struct OpenAction {
  std::string app;
  friend bool operator==(const OpenAction&, const OpenAction&) = default;
};

struct WaitAction {
  double seconds = 1.0;
  friend bool operator==(const WaitAction&, const WaitAction&) = default;
};

struct TakeNoteAction {
  std::string text;
  friend bool operator==(const TakeNoteAction&, const TakeNoteAction&) = default;
};

enum class TerminateStatus { Success, Failure };

struct TerminateAction {
  TerminateStatus status = TerminateStatus::Success;
  friend bool operator==(const TerminateAction&, const TerminateAction&) = default;
};

using Action = std::variant<KeyAction, ClickAction, LongPressAction, SwipeAction,
                            TypeAction, ClearTextAction, SystemButtonAction,
                            OpenAction, WaitAction, TakeNoteAction, TerminateAction>;

// Mechanical fault buckets for raw tool calls. InvalidAction is decidable
// from the name alone; the other two require semantic judgment and are only
// reported here when the arguments fail arity/type/range checks.
enum class FaultCategory { ActionTypeError, ActionParametersError, InvalidAction };

enum class ActionErr {
  MissingToolCall,
  MultipleToolCalls,
  MalformedBody,
  UnknownAction,
  BadArguments,
  MalformedCall,
  MissingThought,
};

class ActionParseError : public std::runtime_error {
 public:
  ActionParseError(ActionErr kind, const std::string& what)
      : std::runtime_error(what), kind(kind) {}
  ActionErr kind;
};

// One parsed manager turn: thought, action description, and the tool call.
struct StepOutput {
  std::string thought;
  std::string action_description;
  Action action;
  friend bool operator==(const StepOutput&, const StepOutput&) = default;
};

const char* action_name(const Action& a);
bool is_coordinate_based(const Action& a);
const char* system_button_name(SystemButton b);
const char* terminate_status_name(TerminateStatus s);

// Builds an Action from raw name/arguments, throwing UnknownAction or
// BadArguments on schema violations.
Action build_action(const std::string& name, const nlohmann::json& arguments);

// Extracts Thought / Action description / the single <tool_call> block from a
// raw manager completion.
StepOutput parse_step_output(const std::string& raw);

// Parses the call syntax used by the corrector, e.g.
// click(coordinate=[450, 300]) or open(text="Google Maps").
Action parse_call_string(const std::string& raw);

// Renders the tool-call JSON object, deterministic key order; inverse of
// parse_step_output's tool-call handling.
std::string canonical_encode(const Action& a);

// Renders call syntax; inverse of parse_call_string.
std::string render_call(const Action& a);

// Classifies a raw (name, arguments) pair without constructing the action.
// Absent result means the pair is mechanically well-formed.
std::optional<FaultCategory> schema_fault(const std::string& name,
                                          const nlohmann::json& arguments);

// Maps thousandth coordinates onto a concrete raster: 0 -> 0, 999 -> dim-1.
struct PixelPoint {
  int x = 0;
  int y = 0;
  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};
PixelPoint scale_coordinate(Coordinate c, int width, int height);

}  // namespace delib
