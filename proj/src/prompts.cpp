#include "delib/prompts.hpp"

#include <sstream>

#include "json.hpp"

namespace delib {
namespace {

// Replaces every occurrence of {slot} in the template.
std::string substitute(std::string text, const std::string& slot,
                       const std::string& value) {
  std::string needle = "{" + slot + "}";
  size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), value);
    pos += value.size();
  }
  return text;
}

// Splits the template at the image placeholder and interleaves image parts.
std::vector<MessagePart> with_images(const std::string& text,
                                     std::vector<ImagePart> images) {
  static const std::string kPlaceholder = "{IMAGE_PLACEHOLDER}";
  std::vector<MessagePart> parts;
  size_t start = 0;
  size_t img = 0;
  while (true) {
    size_t pos = text.find(kPlaceholder, start);
    if (pos == std::string::npos) break;
    parts.push_back(TextPart{text.substr(start, pos - start)});
    if (img < images.size()) parts.push_back(std::move(images[img++]));
    start = pos + kPlaceholder.size();
  }
  parts.push_back(TextPart{text.substr(start)});
  return parts;
}

}  // namespace

const std::string& action_space_text() {
  static const std::string text = R"(key(text): Performs a key event on the device (e.g., volume up, power).
click(coordinate): Clicks a specific (x, y) coordinate on the screen.
long_press(coordinate, time): Long-presses a coordinate for a specified duration.
swipe(coordinate, coordinate2): Swipes from a start coordinate to an end coordinate.
type(text): Inputs specified text into the active element.
clear_text(): Clears all text in the active input field.
system_button(button): Presses a system-level button (e.g., Back, Home).
open(text): Opens a specified application.
wait(time): Pauses execution for a specified duration.
take_note(text): Extracts and saves important information for future use.
terminate(status): Terminates the task and reports the final status.
)";
  return text;
}

const std::string& manager_tools_json() {
  static const std::string text = [] {
    using nlohmann::ordered_json;
    auto coord = ordered_json{{"type", "array"}, {"items", {{"type", "integer"}}},
                              {"description", "[x, y] in thousandths (0-999)"}};
    auto tool = [](const char* name, const char* desc, ordered_json props,
                   ordered_json required) {
      return ordered_json{
          {"type", "function"},
          {"function",
           {{"name", name},
            {"description", desc},
            {"parameters",
             {{"type", "object"}, {"properties", props}, {"required", required}}}}}};
    };
    ordered_json tools = ordered_json::array();
    tools.push_back(tool("key", "Performs a key event on the device (e.g., volume up, power).",
                         {{"text", {{"type", "string"}}}}, {"text"}));
    tools.push_back(tool("click", "Clicks a specific (x, y) coordinate on the screen.",
                         {{"coordinate", coord}}, {"coordinate"}));
    tools.push_back(tool("long_press", "Long-presses a coordinate for a specified duration.",
                         {{"coordinate", coord}, {"time", {{"type", "number"}}}},
                         {"coordinate"}));
    tools.push_back(tool("swipe", "Swipes from a start coordinate to an end coordinate.",
                         {{"coordinate", coord}, {"coordinate2", coord}},
                         {"coordinate", "coordinate2"}));
    tools.push_back(tool("type", "Inputs specified text into the active element.",
                         {{"text", {{"type", "string"}}}}, {"text"}));
    tools.push_back(tool("clear_text", "Clears all text in the active input field.",
                         ordered_json::object(), ordered_json::array()));
    tools.push_back(tool("system_button", "Presses a system-level button (e.g., Back, Home).",
                         {{"button", {{"type", "string"}, {"enum", {"Back", "Home", "Enter"}}}}},
                         {"button"}));
    tools.push_back(tool("open", "Opens a specified application.",
                         {{"text", {{"type", "string"}}}}, {"text"}));
    tools.push_back(tool("wait", "Pauses execution for a specified duration.",
                         {{"time", {{"type", "number"}}}}, {"time"}));
    tools.push_back(tool("take_note", "Extracts and saves important information for future use.",
                         {{"text", {{"type", "string"}}}}, {"text"}));
    tools.push_back(tool("terminate", "Terminates the task and reports the final status.",
                         {{"status", {{"type", "string"}, {"enum", {"success", "failure"}}}}},
                         {"status"}));
    return tools.dump(2);
  }();
  return text;
}

const std::string& manager_system_prompt() {
  static const std::string text = [] {
    std::string t = R"(You are a helpful AI assistant for operating mobile phones. Your goal is to choose the correct actions to complete the user's instruction. Think as if you are a human user operating the phone.

#Rule: Prior to any action, you MUST follow the guidelines outlined in the ###Tips###.

# Tools

You may call one or more functions to assist with the user query.

You are provided with function signatures within <tools></tools> XML tags:
<tools>
{tool_signatures}
</tools>
)";
    return substitute(t, "tool_signatures", manager_tools_json());
  }();
  return text;
}

namespace {

const std::string kManagerUserTemplate = R"(You are a GUI Agent, and your primary task is to respond accurately to user requests or questions. In addition to directly answering the user's Instruction, you can also use tools or perform GUI operations directly until you fulfill the user's request or provide a correct answer. You should carefully read and understand the images and questions provided by the user, and engage in thinking and reflection when appropriate. The coordinates involved are all represented in thousandths (0-999).
For the task to succeed, you MUST follow the provided ###Tips###.
Check the operations already executed in the ### Latest History Operations ### to avoid duplication.

### Tips ###
You are provided with the following tips, which should be used as reference information to inform your decisions :
{retrieval_tips}

### Task ###
{task}
### Current Time ###
{device_time}

### History Operations ###
You have done the following operation on the current device:
{history_steps}

### Memory ###
During previous operations, you have used the action `take_note` to record the following contents on the screenshot:
{memory}

### Latest Reflection ###
{reflection_body}

### Observation ###
This is the current screenshot of the phone. The screen's resolution is {resized_width}x{resized_height}.
{IMAGE_PLACEHOLDER}

### Response Requirements ###
First, think about the requirements that have been completed in previous operations and the requirements that need to be completed in the next one operation. Put your thinking process in one sentence in `Thought` part.
Secend, provide a brief description of the chosen action in `Action` part. Only describe the current ONE action. Don't describe the future ones or the whole plan.
Last, execute an action in the form of function. For each function call, return a json object with function name and arguments within <tool_call></tool_call> XML tags:

### Format ###
Thought: ... (Your thinking process)
Action: ... (Your action description)
<tool_call>
{"name": <function-name>, "arguments": <args-json-object>}
</tool_call>
)";

const std::string kReflectionBodyTemplate =
    R"(You previously wanted to perform the operation "{thought}" on this page and executed the Action "{action}". But the reflector find that this operation may not meet your expectation.
Feedback:{reflection}
 If you think it is reasonable, you need to reflect and revise your operation this time. If you think the reflector is not correct, you can ignore the feedback.)";

}  // namespace

std::vector<MessagePart> build_manager_user_message(const ManagerSlots& slots,
                                                    ImagePart screenshot) {
  std::string reflection_body = "None";
  if (!slots.reflection_feedback.empty()) {
    reflection_body = kReflectionBodyTemplate;
    reflection_body = substitute(reflection_body, "thought", slots.reflection_thought);
    reflection_body = substitute(reflection_body, "action", slots.reflection_action);
    reflection_body = substitute(reflection_body, "reflection", slots.reflection_feedback);
  }
  std::string text = kManagerUserTemplate;
  text = substitute(text, "retrieval_tips", slots.retrieval_tips);
  text = substitute(text, "task", slots.task);
  text = substitute(text, "device_time", slots.device_time);
  text = substitute(text, "history_steps", slots.history_steps);
  text = substitute(text, "memory", slots.memory);
  text = substitute(text, "reflection_body", reflection_body);
  text = substitute(text, "resized_width", std::to_string(slots.resized_width));
  text = substitute(text, "resized_height", std::to_string(slots.resized_height));
  std::vector<ImagePart> images;
  images.push_back(std::move(screenshot));
  return with_images(text, std::move(images));
}

namespace {

const std::string kTacTemplate = R"(Role Definition
You are a highly precise UI Action Validator. Your sole purpose is to evaluate a proposed UI action based on visual and textual evidence, following a strict set of rules.
ACTION SPACE
{action_space}
VALIDATION RULES
Rule 0: Foundational Checks (Perform these first)
ACTION SPACE CHECK: If the proposed ACTION function name (e.g., click, type) isn't one of the valid actions listed in the ACTION SPACE, it is INVALID. No further checks are needed.
CONSISTENCY CHECK: Does the ACTION (the code) perfectly match the ACTION DESCRIPTION (the text)? For example, if the ACTION is type("hello"), the ACTION DESCRIPTION must be about typing "hello". If they are inconsistent, the action is INVALID, even if it seems useful for the goal.
THOUGHT vs. REALITY CHECK: The ACTION THOUGHT is the agent's intention. The ACTION and <image_after> represent the reality. If the intention is correct but the reality (the action code or target visualization) is wrong, the action is INVALID.
Your decision MUST be based on the provided images. The primary reference is <image_after>, which shows the exact target.
Context: Use <image_before> to understand the UI.
Target: Use <image_after> to identify the action's target.
click & long_press: A red circle marks the target coordinate.
swipe: A green circle marks the start point, and a blue line shows the trajectory to the end point.
Check: Does the visualization in <image_after> mark a logical UI element that effectively accomplishes the step described in the ACTION DESCRIPTION?
Precision Check (click, long_press): Is the red circle accurately placed on the intended element (e.g., a button, a text field)? Significant deviation makes the action INVALID.
Trajectory Check (swipe): Does the swipe action (green circle to the end of the blue line) cover the correct area and direction needed (e.g., scrolling a list, swiping a card)?
Your decision MUST be based on logical coherence. The images are for context only.
Check: Based on the ACTION THOUGHT and the current UI state in <image_before>, is the proposed ACTION a rational and timely step towards the overall user_query?
Specific Checks:
type, clear_text: Should an input action be performed at this moment? Is there an active text field?
key, system_button: Is a system-level action (like pressing volume up or back) logical at this stage?
terminate: Based on the user_query and the current screen, has the task been fully completed? If yes, terminate is VALID. If the task is incomplete, terminate is INVALID.
OUTPUT INSTRUCTIONS
YOU MUST WRAP YOUR FINAL VERDICT IN <verdict> XML TAGS.
Your final output must be a single character inside the tags:
<verdict>1</verdict>: If the action is VALID and plausible.
<verdict>0</verdict>: If the action is INVALID or implausible.
TASK TO EVALUATE
CONTEXT:
USER_QUERY: {user_query}
IMAGE_BEFORE: {IMAGE_PLACEHOLDER}
IMAGE_AFTER: {IMAGE_PLACEHOLDER}
ACTION THOUGHT: {action_thought}
ACTION: {action}
ACTION DESCRIPTION: {action_description}
)";

}  // namespace

std::vector<MessagePart> build_tac_message(const TacSlots& slots, ImagePart image_before,
                                           ImagePart image_after) {
  std::string text = kTacTemplate;
  text = substitute(text, "action_space", action_space_text());
  text = substitute(text, "user_query", slots.user_query);
  text = substitute(text, "action_thought", slots.action_thought);
  text = substitute(text, "action", slots.action);
  text = substitute(text, "action_description", slots.action_description);
  std::vector<ImagePart> images;
  images.push_back(std::move(image_before));
  images.push_back(std::move(image_after));
  return with_images(text, std::move(images));
}

namespace {

const std::string kAcaTemplate = R"(# ROLE AND GOAL
You are **GUI-Corrector**, an expert AI agent specializing in Quality Assurance (QA) and error correction for **mobile GUI automation tasks**. Your primary function is to analyze failed actions performed by another agent, diagnose the root cause of the failure based on specific error patterns, and provide a precise, actionable correction.

# ACTION SPACE CONTEXT
{action_space}
The original agent that you are correcting operates with the following **single** action space. Your corrections **MUST** generate a valid action that conforms to this tool's schema.

# CORE ANALYSIS PROCESS
For each failed action, you will receive five pieces of information (action_thought, action, action_description, and two images). You must:
1.  **Understand Intent:** What was the agent trying to accomplish according to `action_thought` and `action_description`?
2.  **Verify Target Presence in Screenshot:** Before all else, check if the specific UI element or filename mentioned in the `action_thought` is **actually visible** in the provided screenshot. If the intended target (e.g., the exact filename 'shy_king_copy.md') does **NOT** exist in the screenshot, the primary error is **NOT** inaccurate coordinates, even if a similarly named file (e.g., '2023_02_13_shy_king_copy.md') is present. This is a critical `PLANNING_ERROR` (see Sub-type C).
3.  **Verify Execution:** What did the agent actually do according to `action` and the `annotated_pixels`?
4.  **Diagnose the Error:** Classify the failure into one of the specific error categories below. This is your primary task.
5.  **Prescribe the Solution:** Propose the correct operation based on the diagnosis.
6.  **check before typing:**[Click] the correct text field before typing is correct action!
# ERROR CATEGORIES & SOLUTIONS (Mandatory Classification)
You must classify the error into one of these three categories and follow the prescribed solution logic.
### 1. `CLICK_ERROR`
This occurs when the `click` action was used, but it failed.
* **Sub-type A: Inefficient Action Choice.** The agent tried to `click` an app icon to open it.
    * **Solution:** Replace the `click` action with the more robust `open` action. The `corrected_action` should be `open(text="AppName")`.
* **Sub-type B: Inaccurate Coordinates.** The agent intended to click a specific UI element (button, link, etc.) or text filed but missed.
    * **Solution:** Analyze the `annotated_pixels` and the surrounding elements in `pixels`. Provide a new `click` action with adjusted coordinates that correctly target the center of the intended element
* **Sub-type C: Misused Click for System Actions.** The agent tried to `click` a UI element (e.g., a back arrow icon) to perform a system-level navigation like 'Back'.
    * **Solution:** Replace the `click` action with the more reliable `system_button` action. The `corrected_action` should be `system_button(button="Back")`.**
### 2. `PLANNING_ERROR`
This occurs when the action is technically valid but logically flawed in the context of the overall goal.
* **Sub-type A: Ineffective Action.** The chosen action does not logically lead to the goal stated in `action_thought`.
    * **Solution:** Propose a completely new action that is a logical first step towards the goal. Analyze the screen and `action_thought` to determine a better action.
* **Sub-type B: Premature Termination.** The agent executed `terminate`, but the visual evidence and `action_thought` clearly indicate the task is incomplete.
    * **Solution:** This is a critical planning failure. You must issue a `REPLAN` correction.
* **Sub-type C: Target Not Visible.** The agent attempts to interact with a specific element or filename (e.g., 'shy_king_copy.md') that is **not visible** on the current screen.
    * **Solution:** The agent's plan has failed because its target is unavailable. Your correction must **NOT** be to target a different, similarly-named element. Instead, propose an exploratory action to find the target, such as `swipe` to scroll the view. If no such action is logical, issue a `REPLAN`.
### 3. `ACTION_INVALID_ERROR`
This occurs when the `action_thought` describes a goal that cannot be achieved with the available actions.
* **Example:** The agent thinks, "I need to scan the QR code," but there is no `scan_qr_code` action available.
* **Solution:** The agent is stuck. You must issue a `REPLAN` correction to force a new strategy.
# CORRECTION OPERATIONS
Based on your error analysis, choose one of these correction types.
* **`REPLACE_ACTION`**: Use for `CLICK_ERROR` (Sub-type A, C) or `PLANNING_ERROR` (Sub-type A). The entire action needs to be replaced with a better one.
* **`MODIFY_COORDINATES`**: Use for `CLICK_ERROR` (Sub-type B). Only the coordinates of a `click` action need to be adjusted.
* **`REPLAN`**: Use for `PLANNING_ERROR` (Sub-type B) or `ACTION_IMPOSSIBILITY_ERROR`. This signals a critical failure in the agent's logic, requiring a completely new plan.
# OUTPUT FORMAT
Your response **MUST** be a single, raw JSON object, with no explanatory text or markdown formatting outside of the JSON structure. **This JSON object must represent a single correction and result in a single `corrected_action`.**

**JSON Schema:**
```json
{
  "analysis": "A brief but clear explanation of your reasoning, detailing the error and why your proposed solution is correct.",
  "error_category": "ONE OF ['CLICK_ERROR', 'PLANNING_ERROR', 'ACTION_IMPOSSIBILITY_ERROR']",
  "correction_type": "ONE OF ['REPLACE_ACTION', 'MODIFY_COORDINATES', 'REPLAN']",
  "corrected_action": "The new, corrected action string (e.g., 'open(text=\"Google Maps\")', 'click(coordinate=[450, 300])') OR null if the correction_type is 'REPLAN'.",
  "confidence_score": "A float between 0.0 and 1.0 indicating your confidence in the correction."
}
```

# FAILED ACTION TO ANALYZE
action_thought: {action_thought}
action: {action}
action_description: {action_description}
image_before: {IMAGE_PLACEHOLDER}
annotated_pixels: {IMAGE_PLACEHOLDER}
)";

}  // namespace

std::vector<MessagePart> build_aca_message(const AcaSlots& slots, ImagePart image_before,
                                           ImagePart image_after) {
  std::string text = kAcaTemplate;
  text = substitute(text, "action_space", action_space_text());
  text = substitute(text, "action_thought", slots.action_thought);
  text = substitute(text, "action", slots.action);
  text = substitute(text, "action_description", slots.action_description);
  std::vector<ImagePart> images;
  images.push_back(std::move(image_before));
  images.push_back(std::move(image_after));
  return with_images(text, std::move(images));
}

namespace {

const std::string kSraTemplate = R"(You are a helpful AI assistant for operating mobile phones. Your goal is to verify whether the latest action produced the expected behavior.
### User Instruction ###
{goal}

### Current Subgoal ###
{sub_goal}

---
Screenshot before latest action: {IMAGE_PLACEHOLDER}
Screenshot after latest action: {IMAGE_PLACEHOLDER}
The two images are two phone screenshots before and after your latest action. The width and height are {resized_width} and {resized_height} pixels, respectively.
{diff_sentence}
---
### Latest Action ###
Action: {action}
Expectation: {action_desc}

---
Carefully examine the information provided above to determine whether the last action meets the expectation. If not, identify the failure mode and provide reasoning on the potential reason causing this failure. Note that for the "Swipe" action, it may take multiple attempts to display the expected content. Thus, for a "Swipe" action, if the screen shows new content, it usually meets the expectation.

Provide your output in the following format containing two parts:

### Outcome ###
Choose from the following options. Give your answer as "A", "B","C" or "D":
A: Successful or Partially Successful. The result of the last action meets the expectation, or on the right path to meet the expectation.
B: Failed. The last action results in a wrong page. I need to return to the previous state.
C: Failed. The last action produces no changes.
D: Uncertain. Can't determine whether the last action meets the expectation.
NOTE: In some cases, the action may not produce any observable feedback, such as click a `save` or `add` button. You can't determine whether the action meets the expectation. In this case, you can choose "D".

### Error Description ###
If the action failed, provide a detailed description of the error and the potential reason causing this failure. If the action succeeded, put "None" here.
)";

}  // namespace

std::vector<MessagePart> build_sra_message(const SraSlots& slots, ImagePart before,
                                           ImagePart after) {
  std::string text = kSraTemplate;
  text = substitute(text, "goal", slots.goal);
  text = substitute(text, "sub_goal", slots.sub_goal);
  text = substitute(text, "action", slots.action);
  text = substitute(text, "action_desc", slots.action_desc);
  text = substitute(text, "resized_width", std::to_string(slots.resized_width));
  text = substitute(text, "resized_height", std::to_string(slots.resized_height));
  text = substitute(text, "diff_sentence",
                    slots.diff_flag
                        ? "The last action successfully produces some observable "
                          "changes. The difference between the two images is "
                          "highlighted in red boxes. You can find it on the images.\n"
                        : "");
  std::vector<ImagePart> images;
  images.push_back(std::move(before));
  images.push_back(std::move(after));
  return with_images(text, std::move(images));
}

std::string message_text(const std::vector<MessagePart>& parts) {
  std::string out;
  for (const auto& part : parts) {
    if (const auto* text = std::get_if<TextPart>(&part)) out += text->text;
  }
  return out;
}

}  // namespace delib
