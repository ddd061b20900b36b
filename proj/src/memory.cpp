#include "delib/memory.hpp"

#include <sstream>

namespace delib {

void WorkingMemory::push_step(StepRecord record) {
  if (record.step_index != last_index_ + 1) {
    throw MemoryError(MemoryErr::NonMonotonicIndex,
                      "expected step " + std::to_string(last_index_ + 1) + ", got " +
                          std::to_string(record.step_index));
  }
  last_index_ = record.step_index;
  history_.push_back(std::move(record));
  while (history_.size() > kWindowSize) history_.pop_front();
}

void WorkingMemory::set_reflection(std::optional<ReflectionText> r) {
  reflection_ = std::move(r);
}

void WorkingMemory::add_note(const std::string& text) {
  if (text.empty()) throw MemoryError(MemoryErr::EmptyNote, "note text is empty");
  notes_.push_back(text);
}

MemorySections WorkingMemory::render_sections() const {
  MemorySections out;

  std::ostringstream hist;
  for (const auto& rec : history_) {
    hist << "Step " << rec.step_index << ": " << rec.description
         << " | Thought: " << rec.thought << " | Action: " << render_call(rec.action)
         << "\n";
  }
  out.history_body = hist.str();
  out.history =
      "### History Operations ###\n"
      "You have done the following operation on the current device:\n" +
      out.history_body;

  std::ostringstream mem;
  for (const auto& note : notes_) mem << "- " << note << "\n";
  out.memory_body = mem.str();
  out.memory =
      "### Memory ###\n"
      "During previous operations, you have used the action `take_note` to record "
      "the following contents on the screenshot:\n" +
      out.memory_body;

  std::ostringstream refl;
  refl << "### Latest Reflection ###\n";
  if (reflection_) {
    refl << "You previously wanted to perform the operation \"" << reflection_->prior_thought
         << "\" on this page and executed the Action \"" << reflection_->prior_action
         << "\". But the reflector find that this operation may not meet your "
            "expectation.\nFeedback:"
         << reflection_->feedback
         << "\n If you think it is reasonable, you need to reflect and revise your "
            "operation this time. If you think the reflector is not correct, you can "
            "ignore the feedback.\n";
  }
  out.latest_reflection = refl.str();
  return out;
}

}  // namespace delib
