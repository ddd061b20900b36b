#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "delib/agents.hpp"
#include "delib/environment.hpp"

using namespace delib;

namespace {

ImagePart tiny_image() {
  RasterImage img = RasterImage::filled(8, 6, {80, 80, 80});
  return ImagePart{encode_png(img), img.width, img.height};
}

AgentErr parse_err(auto fn) {
  try {
    fn();
  } catch (const AgentParseError& e) {
    return e.kind;
  }
  throw std::logic_error("expected AgentParseError");
}

}  // namespace

TEST_CASE("verdict parsing") {
  CHECK(parse_tac_verdict("Analysis...\n<verdict>1</verdict>").consistent);
  CHECK_FALSE(parse_tac_verdict("<verdict>0</verdict> trailing").consistent);
  CHECK(parse_err([] { parse_tac_verdict("no verdict at all"); }) ==
        AgentErr::MissingVerdict);
  CHECK(parse_err([] { parse_tac_verdict("<verdict>2</verdict>"); }) ==
        AgentErr::MissingVerdict);
  CHECK(parse_err([] {
          parse_tac_verdict("<verdict>1</verdict><verdict>0</verdict>");
        }) == AgentErr::AmbiguousVerdict);
}

TEST_CASE("corrector json parsing, plain and fenced") {
  std::string body = R"json({
    "analysis": "the tap missed the button",
    "error_category": "CLICK_ERROR",
    "correction_type": "MODIFY_COORDINATES",
    "corrected_action": "click(coordinate=[470, 310])",
    "confidence_score": 0.9
  })json";
  AcaOutput out = parse_aca_output(body);
  CHECK(out.error_category == ErrorCategory::ClickError);
  CHECK(out.correction_type == CorrectionType::ModifyCoordinates);
  REQUIRE(out.corrected_action.has_value());
  CHECK(*out.corrected_action == Action{ClickAction{{470, 310}}});
  CHECK(out.confidence == doctest::Approx(0.9));

  AcaOutput fenced = parse_aca_output("```json\n" + body + "\n```");
  CHECK(fenced.analysis == out.analysis);
}

TEST_CASE("corrector replan and alias category") {
  std::string body = R"({
    "analysis": "the plan itself is wrong",
    "error_category": "ACTION_INVALID_ERROR",
    "correction_type": "REPLAN",
    "corrected_action": null,
    "confidence_score": 0.6
  })";
  AcaOutput out = parse_aca_output(body);
  CHECK(out.error_category == ErrorCategory::ActionImpossibilityError);
  CHECK(out.correction_type == CorrectionType::Replan);
  CHECK_FALSE(out.corrected_action.has_value());
}

TEST_CASE("corrector output strictness") {
  auto obj = [](const char* category, const char* type, const char* action,
                double conf) {
    std::string a = action ? "\"" + std::string(action) + "\"" : "null";
    return std::string("{\"analysis\":\"x\",\"error_category\":\"") + category +
           "\",\"correction_type\":\"" + type + "\",\"corrected_action\":" + a +
           ",\"confidence_score\":" + std::to_string(conf) + "}";
  };
  CHECK(parse_err([] { parse_aca_output("not json"); }) == AgentErr::MalformedJson);
  CHECK(parse_err([] { parse_aca_output("[1, 2]"); }) == AgentErr::MalformedJson);
  CHECK(parse_err([&] {
          parse_aca_output(obj("SPELLING_ERROR", "REPLAN", nullptr, 0.5));
        }) == AgentErr::UnknownCategory);
  CHECK(parse_err([&] {
          parse_aca_output(obj("CLICK_ERROR", "UNDO", "wait(time=1)", 0.5));
        }) == AgentErr::UnknownCorrectionType);
  // REPLAN must carry a null corrected_action, and vice versa
  CHECK(parse_err([&] {
          parse_aca_output(obj("PLANNING_ERROR", "REPLAN", "wait(time=1)", 0.5));
        }) == AgentErr::InconsistentFields);
  CHECK(parse_err([&] {
          parse_aca_output(obj("CLICK_ERROR", "REPLACE_ACTION", nullptr, 0.5));
        }) == AgentErr::InconsistentFields);
  CHECK(parse_err([&] {
          parse_aca_output(obj("CLICK_ERROR", "MODIFY_COORDINATES", "wait(time=1)", 0.5));
        }) == AgentErr::InconsistentFields);
  CHECK(parse_err([&] {
          parse_aca_output(obj("CLICK_ERROR", "REPLACE_ACTION", "click(coordinate=[1, 2])", 1.5));
        }) == AgentErr::InconsistentFields);
}

TEST_CASE("reflection parsing") {
  SraOutput a = parse_sra_output("### Outcome ###\nA\n### Error Description ###\nNone");
  CHECK(a.outcome == SraOutcome::A);
  CHECK_FALSE(a.error_description.has_value());

  SraOutput b = parse_sra_output(
      "### Outcome ###\nB\n### Error Description ###\nThe tap opened the wrong menu.");
  CHECK(b.outcome == SraOutcome::B);
  REQUIRE(b.error_description.has_value());
  CHECK(*b.error_description == "The tap opened the wrong menu.");

  CHECK(parse_sra_output("### Outcome ###\nD\n### Error Description ###\nNone").outcome ==
        SraOutcome::D);

  CHECK(parse_err([] { parse_sra_output("no sections"); }) == AgentErr::MissingOutcome);
  CHECK(parse_err([] {
          parse_sra_output("### Outcome ###\nE\n### Error Description ###\nNone");
        }) == AgentErr::InvalidOutcomeLetter);
  CHECK(parse_err([] {
          parse_sra_output("### Outcome ###\nC\n### Error Description ###\nNone");
        }) == AgentErr::MissingDescription);
}

TEST_CASE("manager call renders the full prompt and parses the reply") {
  ManagerInputs in;
  in.task = "Create a note in Markor";
  in.tips = "[General Tips]\n- stay focused\n";
  in.device_time = "2025-01-01 09:00:00";
  in.screen_width = 8;
  in.screen_height = 6;
  in.screenshot = tiny_image();
  WorkingMemory mem;
  in.memory = mem.render_sections();

  ScriptedBackend backend({
      "Thought: Open the app drawer first.\n"
      "Action: Open Markor from the app list.\n"
      "<tool_call>{\"name\": \"open\", \"arguments\": {\"text\": \"Markor\"}}</tool_call>"});
  ModelConfig cfg;
  ManagerResult res = manager_propose(in, backend, cfg);
  CHECK(res.step.action == Action{OpenAction{"Markor"}});
  CHECK(res.call.role == "manager");
  CHECK(res.call.request_digest.size() == 64);
}

TEST_CASE("prompt golden headers") {
  ManagerSlots slots;
  slots.retrieval_tips = "TIPS_MARK";
  slots.task = "TASK_MARK";
  slots.device_time = "TIME_MARK";
  slots.history_steps = "HIST_MARK";
  slots.memory = "MEM_MARK";
  slots.resized_width = 8;
  slots.resized_height = 6;
  auto parts = build_manager_user_message(slots, tiny_image());
  std::string text = message_text(parts);
  for (const char* header :
       {"### Tips ###", "### Task ###", "### Current Time ###",
        "### History Operations ###", "### Memory ###", "### Latest Reflection ###",
        "### Observation ###", "### Response Requirements ###", "### Format ###"}) {
    CHECK(text.find(header) != std::string::npos);
  }
  CHECK(text.find("TIPS_MARK") != std::string::npos);
  CHECK(text.find("TASK_MARK") != std::string::npos);
  CHECK(text.find("8x6") != std::string::npos);
  // empty feedback renders the bare section
  CHECK(text.find("None") != std::string::npos);
  // exactly one image slot
  int images = 0;
  for (const auto& p : parts) images += std::holds_alternative<ImagePart>(p);
  CHECK(images == 1);

  TacSlots ts{"QUERY_MARK", "THOUGHT_MARK", "click(coordinate=[1, 2])", "DESC_MARK"};
  auto tac = build_tac_message(ts, tiny_image(), tiny_image());
  std::string tac_text = message_text(tac);
  CHECK(tac_text.find("<verdict>") != std::string::npos);
  CHECK(tac_text.find("QUERY_MARK") != std::string::npos);
  CHECK(tac_text.find("ACTION THOUGHT: THOUGHT_MARK") != std::string::npos);
  images = 0;
  for (const auto& p : tac) images += std::holds_alternative<ImagePart>(p);
  CHECK(images == 2);
}

TEST_CASE("apply_correction routes replace vs replan") {
  StepOutput original{"reach the button", "Tap the save icon",
                      ClickAction{{100, 100}}};
  AcaOutput fix;
  fix.analysis = "coordinates were off";
  fix.error_category = ErrorCategory::ClickError;
  fix.correction_type = CorrectionType::ModifyCoordinates;
  fix.corrected_action = ClickAction{{120, 130}};
  fix.confidence = 0.8;
  auto routed = apply_correction(original, fix);
  REQUIRE(std::holds_alternative<StepOutput>(routed));
  const auto& revised = std::get<StepOutput>(routed);
  CHECK(revised.action == Action{ClickAction{{120, 130}}});
  CHECK(revised.thought.find("coordinates were off") != std::string::npos);

  AcaOutput replan;
  replan.analysis = "wrong screen entirely";
  replan.error_category = ErrorCategory::PlanningError;
  replan.correction_type = CorrectionType::Replan;
  auto routed2 = apply_correction(original, replan);
  REQUIRE(std::holds_alternative<ReplanSignal>(routed2));
  CHECK(std::get<ReplanSignal>(routed2).analysis == "wrong screen entirely");
}
