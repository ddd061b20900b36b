#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "delib/agents.hpp"
#include "delib/environment.hpp"
#include "delib/gateway.hpp"
#include "delib/memory.hpp"
#include "delib/tips.hpp"

namespace delib {

enum class TraceErr { CorruptTrace };

class TraceError : public std::runtime_error {
 public:
  TraceError(TraceErr kind, const std::string& what)
      : std::runtime_error(what), kind(kind) {}
  TraceErr kind;
};

struct EpisodeConfig {
  int max_steps = 15;
  int diff_threshold = 12;
  int min_area = 64;
  int replan_retry_cap = 1;
  MarkerStyle style;
};

struct RoleModels {
  ModelConfig manager, tac, aca, sra;
};

struct RoleBackends {
  std::shared_ptr<Backend> manager, tac, aca, sra;
};

struct ProposalTrace {
  std::string thought;
  std::string description;
  std::string action;  // canonical tool-call JSON
  std::string raw;
};

struct ExecutedPair {
  std::string thought;
  std::string description;
  std::string action;  // canonical tool-call JSON
};

struct StepTrace {
  int step = 0;
  ProposalTrace proposal;
  bool not_visualizable = false;
  std::string annotated_ref;
  bool tac_consistent = false;
  bool aca_invoked = false;
  std::optional<std::string> aca_error_category;
  std::optional<std::string> aca_correction_type;
  std::optional<std::string> aca_analysis;
  std::optional<double> aca_confidence;
  int replan_count = 0;
  bool replan_exhausted = false;
  ExecutedPair executed;
  std::string before_ref;
  std::string after_ref;
  std::vector<DiffRegion> regions;
  std::optional<std::string> sra_outcome;
  std::optional<std::string> sra_error_description;
  std::string reflection;  // feedback stored into memory
  std::vector<AgentCallRecord> calls;
  double elapsed_ms = 0.0;  // wall clock; excluded from determinism checks
};

enum class EpisodeStatus { TerminatedSuccess, TerminatedFailure, MaxSteps, AbortedError };

const char* episode_status_name(EpisodeStatus s);

struct EpisodeTrace {
  std::string task;
  EpisodeConfig config;
  std::vector<StepTrace> steps;
  EpisodeStatus status = EpisodeStatus::AbortedError;
  std::string abort_error;  // classified error text when aborted
};

class Orchestrator {
 public:
  Orchestrator(Environment& env, RoleBackends backends, RoleModels models,
               EpisodeConfig config, TipBase tip_base, std::string out_dir = {});

  EpisodeTrace run_episode(const std::string& task);

 private:
  StepTrace run_step(const std::string& task, const std::string& tips, int step_index,
                     ExecResult& exec_out);
  std::string store_image(const RasterImage& img, int step, const char* tag);

  Environment& env_;
  RoleBackends backends_;
  RoleModels models_;
  EpisodeConfig config_;
  TipBase tip_base_;
  std::string out_dir_;  // empty: screenshots not persisted
  WorkingMemory memory_;
};

// Trace file: one header line (task, config, schema version), then one JSON
// object per step; screenshots live beside it as PNGs by relative path.
void write_trace(const EpisodeTrace& trace, const std::string& path);
EpisodeTrace read_trace(const std::string& path);
std::string serialize_trace(const EpisodeTrace& trace, bool include_timings = true);

}  // namespace delib
