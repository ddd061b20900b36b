#pragma once

#include <string>
#include <vector>

#include "delib/gateway.hpp"

namespace delib {

// Plain-text listing of the action space, shared by every role prompt.
const std::string& action_space_text();

// Function signatures for the manager's <tools> block.
const std::string& manager_tools_json();

const std::string& manager_system_prompt();

struct ManagerSlots {
  std::string retrieval_tips;
  std::string task;
  std::string device_time;
  std::string history_steps;
  std::string memory;
  // Latest Reflection slots; empty feedback renders the section body "None".
  std::string reflection_thought;
  std::string reflection_action;
  std::string reflection_feedback;
  int resized_width = 0;
  int resized_height = 0;
};

// Manager user message: template text with the screenshot inserted at the
// observation placeholder.
std::vector<MessagePart> build_manager_user_message(const ManagerSlots& slots,
                                                    ImagePart screenshot);

struct TacSlots {
  std::string user_query;
  std::string action_thought;
  std::string action;  // call syntax
  std::string action_description;
};

std::vector<MessagePart> build_tac_message(const TacSlots& slots, ImagePart image_before,
                                           ImagePart image_after);

struct AcaSlots {
  std::string action_thought;
  std::string action;  // call syntax
  std::string action_description;
};

std::vector<MessagePart> build_aca_message(const AcaSlots& slots, ImagePart image_before,
                                           ImagePart image_after);

struct SraSlots {
  std::string goal;
  std::string sub_goal;
  std::string action;  // call syntax
  std::string action_desc;
  int resized_width = 0;
  int resized_height = 0;
  bool diff_flag = false;
};

std::vector<MessagePart> build_sra_message(const SraSlots& slots, ImagePart before,
                                           ImagePart after);

// Joins the text parts of a message, for golden tests over section headers.
std::string message_text(const std::vector<MessagePart>& parts);

}  // namespace delib
