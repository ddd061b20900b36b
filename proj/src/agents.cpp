#include "delib/agents.hpp"

#include <algorithm>
#include <cctype>

#include "json.hpp"

namespace delib {
namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Extracts the single balanced top-level JSON object, tolerating markdown
// code fences around it.
std::string extract_json_object(const std::string& text) {
  std::string stripped = text;
  size_t fence = stripped.find("```");
  if (fence != std::string::npos) {
    size_t body = stripped.find('\n', fence);
    size_t close = body == std::string::npos ? std::string::npos
                                             : stripped.find("```", body);
    if (body != std::string::npos && close != std::string::npos) {
      stripped = stripped.substr(body + 1, close - body - 1);
    }
  }
  stripped = trim(stripped);
  if (!stripped.empty() && stripped.front() == '[') {
    throw AgentParseError(AgentErr::MalformedJson,
                          "expected a single JSON object, got an array");
  }
  size_t open = stripped.find('{');
  if (open == std::string::npos) {
    throw AgentParseError(AgentErr::MalformedJson, "no JSON object found");
  }
  int depth = 0;
  bool in_string = false;
  for (size_t i = open; i < stripped.size(); ++i) {
    char c = stripped[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}') {
      if (--depth == 0) {
        std::string obj = stripped.substr(open, i - open + 1);
        // reject trailing second object
        std::string rest = trim(stripped.substr(i + 1));
        if (!rest.empty() && rest.front() == '{') {
          throw AgentParseError(AgentErr::MalformedJson,
                                "more than one JSON object in completion");
        }
        return obj;
      }
    }
  }
  throw AgentParseError(AgentErr::MalformedJson, "unbalanced JSON object");
}

}  // namespace

const char* error_category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::ClickError: return "CLICK_ERROR";
    case ErrorCategory::PlanningError: return "PLANNING_ERROR";
    case ErrorCategory::ActionImpossibilityError: return "ACTION_IMPOSSIBILITY_ERROR";
  }
  return "CLICK_ERROR";
}

const char* correction_type_name(CorrectionType c) {
  switch (c) {
    case CorrectionType::ReplaceAction: return "REPLACE_ACTION";
    case CorrectionType::ModifyCoordinates: return "MODIFY_COORDINATES";
    case CorrectionType::Replan: return "REPLAN";
  }
  return "REPLAN";
}

TacVerdict parse_tac_verdict(const std::string& completion) {
  static constexpr const char* kOpen = "<verdict>";
  static constexpr const char* kClose = "</verdict>";
  std::vector<char> digits;
  size_t pos = 0;
  while ((pos = completion.find(kOpen, pos)) != std::string::npos) {
    size_t body = pos + std::char_traits<char>::length(kOpen);
    size_t end = completion.find(kClose, body);
    if (end == std::string::npos) break;
    std::string inner = trim(completion.substr(body, end - body));
    if (inner == "0" || inner == "1") digits.push_back(inner[0]);
    pos = end;
  }
  if (digits.empty()) {
    throw AgentParseError(AgentErr::MissingVerdict, "no <verdict> tag with 0 or 1");
  }
  if (digits.size() > 1) {
    throw AgentParseError(AgentErr::AmbiguousVerdict,
                          "multiple verdict tags in completion");
  }
  return TacVerdict{digits[0] == '1'};
}

AcaOutput parse_aca_output(const std::string& completion) {
  std::string obj_text = extract_json_object(completion);
  json obj = json::parse(obj_text, nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) {
    throw AgentParseError(AgentErr::MalformedJson, "invalid JSON object");
  }
  AcaOutput out;
  if (!obj.contains("analysis") || !obj["analysis"].is_string()) {
    throw AgentParseError(AgentErr::MalformedJson, "missing analysis field");
  }
  out.analysis = obj["analysis"].get<std::string>();

  std::string category = obj.value("error_category", "");
  if (category == "CLICK_ERROR") {
    out.error_category = ErrorCategory::ClickError;
  } else if (category == "PLANNING_ERROR") {
    out.error_category = ErrorCategory::PlanningError;
  } else if (category == "ACTION_IMPOSSIBILITY_ERROR" ||
             category == "ACTION_INVALID_ERROR") {
    // the prompt names this category both ways; canonicalized here
    out.error_category = ErrorCategory::ActionImpossibilityError;
  } else {
    throw AgentParseError(AgentErr::UnknownCategory,
                          "unknown error_category '" + category + "'");
  }

  std::string correction = obj.value("correction_type", "");
  if (correction == "REPLACE_ACTION") {
    out.correction_type = CorrectionType::ReplaceAction;
  } else if (correction == "MODIFY_COORDINATES") {
    out.correction_type = CorrectionType::ModifyCoordinates;
  } else if (correction == "REPLAN") {
    out.correction_type = CorrectionType::Replan;
  } else {
    throw AgentParseError(AgentErr::UnknownCorrectionType,
                          "unknown correction_type '" + correction + "'");
  }

  const json& corrected = obj.contains("corrected_action") ? obj["corrected_action"]
                                                           : json(nullptr);
  if (out.correction_type == CorrectionType::Replan) {
    if (!corrected.is_null()) {
      throw AgentParseError(AgentErr::InconsistentFields,
                            "REPLAN must carry a null corrected_action");
    }
  } else {
    if (!corrected.is_string()) {
      throw AgentParseError(AgentErr::InconsistentFields,
                            "corrected_action required for " + correction);
    }
    try {
      out.corrected_action = parse_call_string(corrected.get<std::string>());
    } catch (const ActionParseError& e) {
      throw AgentParseError(AgentErr::InconsistentFields,
                            std::string("unparseable corrected_action: ") + e.what());
    }
    if (out.correction_type == CorrectionType::ModifyCoordinates &&
        !is_coordinate_based(*out.corrected_action)) {
      throw AgentParseError(AgentErr::InconsistentFields,
                            "MODIFY_COORDINATES needs a coordinate-bearing action");
    }
  }

  const json& conf = obj.contains("confidence_score") ? obj["confidence_score"]
                                                      : json(nullptr);
  if (conf.is_number()) {
    out.confidence = conf.get<double>();
  } else if (conf.is_string()) {
    try {
      out.confidence = std::stod(conf.get<std::string>());
    } catch (const std::exception&) {
      throw AgentParseError(AgentErr::MalformedJson, "confidence_score not numeric");
    }
  } else {
    throw AgentParseError(AgentErr::MalformedJson, "missing confidence_score");
  }
  if (out.confidence < 0.0 || out.confidence > 1.0) {
    throw AgentParseError(AgentErr::InconsistentFields,
                          "confidence_score outside [0, 1]");
  }
  return out;
}

SraOutput parse_sra_output(const std::string& completion) {
  static const std::string kOutcome = "### Outcome ###";
  static const std::string kError = "### Error Description ###";
  size_t opos = completion.find(kOutcome);
  if (opos == std::string::npos) {
    throw AgentParseError(AgentErr::MissingOutcome, "no Outcome section");
  }
  size_t epos = completion.find(kError, opos);
  std::string outcome_body = completion.substr(
      opos + kOutcome.size(),
      (epos == std::string::npos ? completion.size() : epos) - opos - kOutcome.size());
  std::string letter_text = trim(outcome_body);
  // tolerate quoting and trailing punctuation around the letter
  while (!letter_text.empty() &&
         (letter_text.front() == '"' || letter_text.front() == '\'')) {
    letter_text.erase(0, 1);
  }
  if (letter_text.empty()) {
    throw AgentParseError(AgentErr::MissingOutcome, "empty Outcome section");
  }
  char letter = letter_text[0];
  if (letter_text.size() > 1) {
    char next = letter_text[1];
    if (std::isalnum(static_cast<unsigned char>(next))) {
      throw AgentParseError(AgentErr::InvalidOutcomeLetter,
                            "outcome is not a single letter: " + letter_text);
    }
  }
  SraOutput out;
  switch (letter) {
    case 'A': out.outcome = SraOutcome::A; break;
    case 'B': out.outcome = SraOutcome::B; break;
    case 'C': out.outcome = SraOutcome::C; break;
    case 'D': out.outcome = SraOutcome::D; break;
    default:
      throw AgentParseError(AgentErr::InvalidOutcomeLetter,
                            std::string("outcome letter '") + letter + "' not in A-D");
  }

  std::optional<std::string> description;
  if (epos != std::string::npos) {
    std::string body = trim(completion.substr(epos + kError.size()));
    std::string lowered = body;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (!body.empty() && lowered != "none" && lowered != "none.") description = body;
  }
  if (out.outcome == SraOutcome::A) {
    description.reset();
  } else if ((out.outcome == SraOutcome::B || out.outcome == SraOutcome::C) &&
             !description) {
    throw AgentParseError(AgentErr::MissingDescription,
                          "failed outcome requires an error description");
  }
  out.error_description = std::move(description);
  return out;
}

ManagerResult manager_propose(const ManagerInputs& in, Backend& backend,
                              const ModelConfig& cfg) {
  ManagerSlots slots;
  slots.retrieval_tips = in.tips;
  slots.task = in.task;
  slots.device_time = in.device_time;
  // section bodies only; the template supplies the headers
  slots.history_steps = in.memory.history_body;
  slots.memory = in.memory.memory_body;
  slots.reflection_thought = in.reflection_thought;
  slots.reflection_action = in.reflection_action;
  slots.reflection_feedback = in.reflection_feedback;
  slots.resized_width = in.screen_width;
  slots.resized_height = in.screen_height;

  std::vector<ChatMessage> messages;
  messages.push_back(ChatMessage::system(manager_system_prompt()));
  messages.push_back(
      ChatMessage{Role::User, build_manager_user_message(slots, in.screenshot)});

  std::string raw = backend.complete(messages, cfg);
  ManagerResult result;
  result.raw = raw;
  result.call = {"manager", request_digest(messages), raw};
  result.step = parse_step_output(raw);
  return result;
}

TacResult tac_check(const std::string& task, const StepOutput& step,
                    ImagePart image_before, ImagePart image_after, Backend& backend,
                    const ModelConfig& cfg) {
  TacSlots slots{task, step.thought, render_call(step.action), step.action_description};
  std::vector<ChatMessage> messages;
  messages.push_back(ChatMessage{
      Role::User, build_tac_message(slots, std::move(image_before), std::move(image_after))});
  std::string raw = backend.complete(messages, cfg);
  TacResult result;
  result.call = {"tac", request_digest(messages), raw};
  result.verdict = parse_tac_verdict(raw);
  return result;
}

AcaResult aca_correct(const StepOutput& step, ImagePart image_before,
                      ImagePart annotated, Backend& backend, const ModelConfig& cfg) {
  AcaSlots slots{step.thought, render_call(step.action), step.action_description};
  std::vector<ChatMessage> messages;
  messages.push_back(ChatMessage{
      Role::User, build_aca_message(slots, std::move(image_before), std::move(annotated))});
  std::string raw = backend.complete(messages, cfg);
  AcaResult result;
  result.call = {"aca", request_digest(messages), raw};
  result.output = parse_aca_output(raw);
  return result;
}

std::variant<StepOutput, ReplanSignal> apply_correction(const StepOutput& original,
                                                        const AcaOutput& out) {
  if (out.correction_type == CorrectionType::Replan) {
    return ReplanSignal{out.analysis};
  }
  StepOutput revised = original;
  revised.action = *out.corrected_action;
  if (!out.analysis.empty()) {
    revised.thought += " [corrected: " + out.analysis + "]";
  }
  return revised;
}

SraResult sra_reflect(const std::string& task, const StepRecord& step,
                      ImagePart before, ImagePart after, bool diff, int width,
                      int height, Backend& backend, const ModelConfig& cfg) {
  SraSlots slots;
  slots.goal = task;
  slots.sub_goal = step.thought;
  slots.action = render_call(step.action);
  slots.action_desc = step.description;
  slots.resized_width = width;
  slots.resized_height = height;
  slots.diff_flag = diff;
  std::vector<ChatMessage> messages;
  messages.push_back(
      ChatMessage{Role::User, build_sra_message(slots, std::move(before), std::move(after))});
  std::string raw = backend.complete(messages, cfg);
  SraResult result;
  result.call = {"sra", request_digest(messages), raw};
  result.output = parse_sra_output(raw);
  return result;
}

std::string reflection_feedback_text(const SraOutput& out) {
  switch (out.outcome) {
    case SraOutcome::A:
      return "The last action met the expectation.";
    case SraOutcome::B:
      return "The last action results in a wrong page. " +
             out.error_description.value_or("");
    case SraOutcome::C:
      return "The last action produces no changes. " +
             out.error_description.value_or("");
    case SraOutcome::D:
      return "Uncertain whether the last action met the expectation.";
  }
  return {};
}

}  // namespace delib
