#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include "delib/action.hpp"
#include "delib/gateway.hpp"
#include "delib/image.hpp"
#include "delib/memory.hpp"
#include "delib/prompts.hpp"

namespace delib {

enum class AgentErr {
  MissingVerdict,
  AmbiguousVerdict,
  MalformedJson,
  UnknownCategory,
  UnknownCorrectionType,
  InconsistentFields,
  MissingOutcome,
  InvalidOutcomeLetter,
  MissingDescription,
};

class AgentParseError : public std::runtime_error {
 public:
  AgentParseError(AgentErr kind, const std::string& what)
      : std::runtime_error(what), kind(kind) {}
  AgentErr kind;
};

struct TacVerdict {
  bool consistent = false;
};

enum class ErrorCategory { ClickError, PlanningError, ActionImpossibilityError };
enum class CorrectionType { ReplaceAction, ModifyCoordinates, Replan };

const char* error_category_name(ErrorCategory c);
const char* correction_type_name(CorrectionType c);

struct AcaOutput {
  std::string analysis;
  ErrorCategory error_category = ErrorCategory::ClickError;
  CorrectionType correction_type = CorrectionType::ReplaceAction;
  std::optional<Action> corrected_action;  // present iff not Replan
  double confidence = 0.0;
};

enum class SraOutcome { A, B, C, D };

struct SraOutput {
  SraOutcome outcome = SraOutcome::D;
  std::optional<std::string> error_description;
};

struct ReplanSignal {
  std::string analysis;
};

// Raw-completion parsers; total over the documented grammars.
TacVerdict parse_tac_verdict(const std::string& completion);
AcaOutput parse_aca_output(const std::string& completion);
SraOutput parse_sra_output(const std::string& completion);

struct Observation;  // environment.hpp

struct AgentCallRecord {
  std::string role;  // manager | tac | aca | sra
  std::string request_digest;
  std::string response;
};

struct ManagerInputs {
  std::string task;
  std::string tips;  // rendered tips prompt
  std::string device_time;
  int screen_width = 0;
  int screen_height = 0;
  ImagePart screenshot;
  MemorySections memory;
  // Reflection slots; feedback empty means no reflection body.
  std::string reflection_thought;
  std::string reflection_action;
  std::string reflection_feedback;
};

struct ManagerResult {
  StepOutput step;
  std::string raw;
  AgentCallRecord call;
};

ManagerResult manager_propose(const ManagerInputs& in, Backend& backend,
                              const ModelConfig& cfg);

struct TacResult {
  TacVerdict verdict;
  AgentCallRecord call;
};

TacResult tac_check(const std::string& task, const StepOutput& step,
                    ImagePart image_before, ImagePart image_after, Backend& backend,
                    const ModelConfig& cfg);

struct AcaResult {
  AcaOutput output;
  AgentCallRecord call;
};

AcaResult aca_correct(const StepOutput& step, ImagePart image_before,
                      ImagePart annotated, Backend& backend, const ModelConfig& cfg);

// Routes the corrector's output: replacement/coordinate fixes yield a revised
// pair (thought annotated with the analysis); a replan yields the signal.
std::variant<StepOutput, ReplanSignal> apply_correction(const StepOutput& original,
                                                        const AcaOutput& out);

struct SraResult {
  SraOutput output;
  AgentCallRecord call;
};

SraResult sra_reflect(const std::string& task, const StepRecord& step,
                      ImagePart before, ImagePart after, bool diff, int width,
                      int height, Backend& backend, const ModelConfig& cfg);

// Feedback sentence stored into working memory for a given reflection.
std::string reflection_feedback_text(const SraOutput& out);

}  // namespace delib
