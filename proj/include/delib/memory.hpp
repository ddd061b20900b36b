#pragma once

#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "delib/action.hpp"

namespace delib {

enum class MemoryErr { NonMonotonicIndex, EmptyNote };

class MemoryError : public std::runtime_error {
 public:
  MemoryError(MemoryErr kind, const std::string& what)
      : std::runtime_error(what), kind(kind) {}
  MemoryErr kind;
};

// One executed step as archived in the history window.
struct StepRecord {
  int step_index = 0;
  std::string thought;
  Action action;
  std::string description;
  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

// Feedback from the post-execution reflection, rendered into the next
// manager prompt together with the step it judged.
struct ReflectionText {
  std::string prior_thought;
  std::string prior_action;  // call syntax
  std::string feedback;
  friend bool operator==(const ReflectionText&, const ReflectionText&) = default;
};

struct MemorySections {
  // Full fragments with the manager prompt's section headers.
  std::string history;
  std::string memory;
  std::string latest_reflection;
  // Header-less bodies for substitution into the prompt template.
  std::string history_body;
  std::string memory_body;
};

// Per-episode working memory: a five-step sliding window of executed
// thought-action pairs, the latest reflection, and the note store.
class WorkingMemory {
 public:
  static constexpr int kWindowSize = 5;

  void push_step(StepRecord record);
  void set_reflection(std::optional<ReflectionText> r);
  void add_note(const std::string& text);

  const std::deque<StepRecord>& history() const { return history_; }
  const std::optional<ReflectionText>& last_reflection() const { return reflection_; }
  const std::vector<std::string>& notes() const { return notes_; }
  int last_step_index() const { return last_index_; }

  // Prompt fragments in the manager prompt's section-header format.
  MemorySections render_sections() const;

 private:
  std::deque<StepRecord> history_;
  std::optional<ReflectionText> reflection_;
  std::vector<std::string> notes_;
  int last_index_ = 0;
};

}  // namespace delib
