#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "delib/orchestrator.hpp"

namespace delib {

enum class DataErr { MissingScreenshot, DegenerateAgreement, BadMatrix };

class DataError : public std::runtime_error {
 public:
  DataError(DataErr kind, const std::string& what)
      : std::runtime_error(what), kind(kind) {}
  DataErr kind;
};

// One consistency-check training sample unrolled from a trajectory step.
// Field names at the file boundary follow the annotation record schema
// (ACTION_THOUGHT, ACTION, ACTION_DESCRIPTION, original/marked screenshot).
struct TacSample {
  std::string sample_id;
  std::string task;
  std::string thought;
  std::string action;  // canonical tool-call JSON
  std::string action_description;
  std::string original_screenshot;          // relative path
  std::optional<std::string> marked_screenshot;  // present iff coordinate-based
  std::optional<int> label;                 // empty at construction
  bool parse_error = false;
  std::string screenshot_digest;
};

struct LoadedTrace {
  EpisodeTrace trace;
  std::string dir;  // directory holding the referenced screenshots
};

// One sample per step, built from the pre-alignment proposal; coordinate
// actions get a marked screenshot written into out_dir.
std::vector<TacSample> unroll_trajectories(const std::vector<LoadedTrace>& traces,
                                           const std::string& out_dir,
                                           const MarkerStyle& style = {});

struct FilterRules {
  bool dedup_exact = true;        // by (thought, action, screenshot digest)
  bool drop_parse_errors = true;
  bool drop_empty_thoughts = true;
};

struct FilterReport {
  int input = 0;
  int removed_duplicates = 0;
  int removed_parse_errors = 0;
  int removed_empty_thoughts = 0;
  int survivors = 0;
};

std::vector<TacSample> filter_samples(const std::vector<TacSample>& samples,
                                      const FilterRules& rules, FilterReport& report);

std::string serialize_samples(const std::vector<TacSample>& samples);
std::vector<TacSample> parse_samples(const std::string& jsonl);

// N items x k categories of rating counts; each row sums to the rater count.
struct RatingMatrix {
  std::vector<std::vector<int>> counts;
};

RatingMatrix parse_rating_matrix(const std::string& csv);

// Standard chance-corrected agreement over the matrix.
double fleiss_kappa(const RatingMatrix& m);

enum class FailureLabel { Planning, Navigation, Grounding, Perception, Others };

const char* failure_label_name(FailureLabel label);
std::optional<FailureLabel> parse_failure_label(const std::string& name);

// Proportion of each label among all observed labels; a failed task may
// contribute several labels.
std::map<FailureLabel, double> tally_failures(
    const std::vector<std::vector<FailureLabel>>& labels_per_task);

}  // namespace delib
