#include "delib/orchestrator.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace delib {
namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr int kSchemaVersion = 1;

ImagePart to_image_part(const RasterImage& img) {
  return ImagePart{encode_png(img), img.width, img.height};
}

ordered_json step_to_json(const StepTrace& s, bool include_timings) {
  ordered_json j;
  j["step"] = s.step;
  j["proposal"] = {{"thought", s.proposal.thought},
                   {"description", s.proposal.description},
                   {"action", s.proposal.action},
                   {"raw", s.proposal.raw}};
  j["not_visualizable"] = s.not_visualizable;
  j["annotated_ref"] = s.annotated_ref;
  j["tac_consistent"] = s.tac_consistent;
  j["aca_invoked"] = s.aca_invoked;
  if (s.aca_invoked) {
    ordered_json aca;
    aca["error_category"] = s.aca_error_category.value_or("");
    aca["correction_type"] = s.aca_correction_type.value_or("");
    aca["analysis"] = s.aca_analysis.value_or("");
    aca["confidence"] = s.aca_confidence.value_or(0.0);
    j["aca"] = std::move(aca);
  }
  j["replan_count"] = s.replan_count;
  j["replan_exhausted"] = s.replan_exhausted;
  j["executed"] = {{"thought", s.executed.thought},
                   {"description", s.executed.description},
                   {"action", s.executed.action}};
  j["before_ref"] = s.before_ref;
  j["after_ref"] = s.after_ref;
  ordered_json regions = ordered_json::array();
  for (const auto& r : s.regions) regions.push_back({r.left, r.top, r.right, r.bottom});
  j["regions"] = std::move(regions);
  if (s.sra_outcome) {
    j["sra"] = {{"outcome", *s.sra_outcome},
                {"error_description", s.sra_error_description.value_or("None")}};
  }
  j["reflection"] = s.reflection;
  ordered_json calls = ordered_json::array();
  for (const auto& c : s.calls) {
    calls.push_back({{"role", c.role}, {"digest", c.request_digest}, {"response", c.response}});
  }
  j["calls"] = std::move(calls);
  if (include_timings) j["elapsed_ms"] = s.elapsed_ms;
  return j;
}

StepTrace step_from_json(const ordered_json& j) {
  StepTrace s;
  s.step = j.at("step").get<int>();
  const auto& p = j.at("proposal");
  s.proposal = {p.at("thought"), p.at("description"), p.at("action"), p.at("raw")};
  s.not_visualizable = j.at("not_visualizable").get<bool>();
  s.annotated_ref = j.at("annotated_ref").get<std::string>();
  s.tac_consistent = j.at("tac_consistent").get<bool>();
  s.aca_invoked = j.at("aca_invoked").get<bool>();
  if (j.contains("aca")) {
    s.aca_error_category = j["aca"].at("error_category").get<std::string>();
    s.aca_correction_type = j["aca"].at("correction_type").get<std::string>();
    s.aca_analysis = j["aca"].at("analysis").get<std::string>();
    s.aca_confidence = j["aca"].at("confidence").get<double>();
  }
  s.replan_count = j.at("replan_count").get<int>();
  s.replan_exhausted = j.at("replan_exhausted").get<bool>();
  const auto& e = j.at("executed");
  s.executed = {e.at("thought"), e.at("description"), e.at("action")};
  s.before_ref = j.at("before_ref").get<std::string>();
  s.after_ref = j.at("after_ref").get<std::string>();
  for (const auto& r : j.at("regions")) {
    s.regions.push_back({r[0].get<int>(), r[1].get<int>(), r[2].get<int>(), r[3].get<int>()});
  }
  if (j.contains("sra")) {
    s.sra_outcome = j["sra"].at("outcome").get<std::string>();
    std::string desc = j["sra"].at("error_description").get<std::string>();
    if (desc != "None") s.sra_error_description = desc;
  }
  s.reflection = j.at("reflection").get<std::string>();
  for (const auto& c : j.at("calls")) {
    s.calls.push_back({c.at("role"), c.at("digest"), c.at("response")});
  }
  s.elapsed_ms = j.value("elapsed_ms", 0.0);
  return s;
}

const char* sra_outcome_letter(SraOutcome o) {
  switch (o) {
    case SraOutcome::A: return "A";
    case SraOutcome::B: return "B";
    case SraOutcome::C: return "C";
    case SraOutcome::D: return "D";
  }
  return "D";
}

}  // namespace

const char* episode_status_name(EpisodeStatus s) {
  switch (s) {
    case EpisodeStatus::TerminatedSuccess: return "terminated-success";
    case EpisodeStatus::TerminatedFailure: return "terminated-failure";
    case EpisodeStatus::MaxSteps: return "max-steps";
    case EpisodeStatus::AbortedError: return "aborted-error";
  }
  return "aborted-error";
}

Orchestrator::Orchestrator(Environment& env, RoleBackends backends, RoleModels models,
                           EpisodeConfig config, TipBase tip_base, std::string out_dir)
    : env_(env),
      backends_(std::move(backends)),
      models_(std::move(models)),
      config_(config),
      tip_base_(std::move(tip_base)),
      out_dir_(std::move(out_dir)) {
  if (!out_dir_.empty()) fs::create_directories(out_dir_);
}

std::string Orchestrator::store_image(const RasterImage& img, int step, const char* tag) {
  if (out_dir_.empty()) return {};
  char name[64];
  std::snprintf(name, sizeof(name), "step_%03d_%s.png", step, tag);
  write_png(img, out_dir_ + "/" + name);
  return name;
}

StepTrace Orchestrator::run_step(const std::string& task, const std::string& tips,
                                 int step_index, ExecResult& exec_out) {
  auto start = std::chrono::steady_clock::now();
  StepTrace trace;
  trace.step = step_index;

  Observation before = env_.observe();
  trace.before_ref = store_image(before.screenshot, step_index, "before");
  ImagePart before_part = to_image_part(before.screenshot);

  ManagerInputs inputs;
  inputs.task = task;
  inputs.tips = tips;
  inputs.device_time = before.device_time;
  inputs.screen_width = before.width;
  inputs.screen_height = before.height;
  inputs.screenshot = before_part;
  inputs.memory = memory_.render_sections();
  if (const auto& r = memory_.last_reflection()) {
    inputs.reflection_thought = r->prior_thought;
    inputs.reflection_action = r->prior_action;
    inputs.reflection_feedback = r->feedback;
  }

  // generate -> visualize -> gate -> correct, with bounded replanning
  StepOutput executed;
  AnnotatedImage annotated;
  for (int attempt = 0;; ++attempt) {
    ManagerResult proposal = manager_propose(inputs, *backends_.manager, models_.manager);
    trace.calls.push_back(proposal.call);
    if (attempt == 0) {
      trace.proposal = {proposal.step.thought, proposal.step.action_description,
                        canonical_encode(proposal.step.action), proposal.raw};
    }

    annotated = render_action_marker(before.screenshot, proposal.step.action, config_.style);
    trace.not_visualizable = !annotated.visualized;
    if (annotated.visualized) {
      trace.annotated_ref = store_image(annotated.image, step_index, "annotated");
    }

    ImagePart annotated_part =
        annotated.visualized ? to_image_part(annotated.image) : before_part;
    TacResult tac = tac_check(task, proposal.step, before_part, annotated_part,
                              *backends_.tac, models_.tac);
    trace.calls.push_back(tac.call);
    trace.tac_consistent = tac.verdict.consistent;

    if (tac.verdict.consistent) {
      trace.aca_invoked = false;
      executed = proposal.step;
      break;
    }

    AcaResult aca = aca_correct(proposal.step, before_part, annotated_part,
                                *backends_.aca, models_.aca);
    trace.calls.push_back(aca.call);
    trace.aca_invoked = true;
    trace.aca_error_category = error_category_name(aca.output.error_category);
    trace.aca_correction_type = correction_type_name(aca.output.correction_type);
    trace.aca_analysis = aca.output.analysis;
    trace.aca_confidence = aca.output.confidence;

    auto routed = apply_correction(proposal.step, aca.output);
    if (auto* revised = std::get_if<StepOutput>(&routed)) {
      executed = *revised;
      break;
    }
    const auto& replan = std::get<ReplanSignal>(routed);
    if (trace.replan_count >= config_.replan_retry_cap) {
      // retries exhausted: proceed with the original proposal, flagged
      trace.replan_exhausted = true;
      executed = proposal.step;
      break;
    }
    ++trace.replan_count;
    inputs.reflection_thought = proposal.step.thought;
    inputs.reflection_action = render_call(proposal.step.action);
    inputs.reflection_feedback = replan.analysis;
  }

  trace.executed = {executed.thought, executed.action_description,
                    canonical_encode(executed.action)};

  exec_out = env_.execute(executed.action);

  StepRecord record{step_index, executed.thought, executed.action,
                    executed.action_description};

  if (!exec_out.closed) {
    Observation after = env_.observe();
    trace.after_ref = store_image(after.screenshot, step_index, "after");
    trace.regions = diff_regions(before.screenshot, after.screenshot,
                                 config_.diff_threshold, config_.min_area);
    bool flag = diff_flag(trace.regions);
    RasterImage after_for_sra =
        flag ? draw_boxes(after.screenshot, trace.regions, config_.style)
             : after.screenshot;
    SraResult sra = sra_reflect(task, record, before_part, to_image_part(after_for_sra),
                                flag, after.width, after.height, *backends_.sra,
                                models_.sra);
    trace.calls.push_back(sra.call);
    trace.sra_outcome = sra_outcome_letter(sra.output.outcome);
    trace.sra_error_description = sra.output.error_description;
    trace.reflection = reflection_feedback_text(sra.output);
    memory_.set_reflection(ReflectionText{executed.thought, render_call(executed.action),
                                          trace.reflection});
  }

  memory_.push_step(record);
  if (const auto* note = std::get_if<TakeNoteAction>(&executed.action)) {
    memory_.add_note(note->text);
  }

  trace.elapsed_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
  return trace;
}

EpisodeTrace Orchestrator::run_episode(const std::string& task) {
  EpisodeTrace trace;
  trace.task = task;
  trace.config = config_;
  memory_ = WorkingMemory{};

  TipSelection sel = retrieve_tips(tip_base_, detect_apps(task, tip_base_.app_names()));
  std::string tips = format_tips(sel);

  for (int step = 1; step <= config_.max_steps; ++step) {
    ExecResult exec;
    try {
      trace.steps.push_back(run_step(task, tips, step, exec));
    } catch (const std::exception& e) {
      trace.status = EpisodeStatus::AbortedError;
      trace.abort_error = e.what();
      return trace;
    }
    if (exec.closed) {
      trace.status = exec.terminate_status == TerminateStatus::Success
                         ? EpisodeStatus::TerminatedSuccess
                         : EpisodeStatus::TerminatedFailure;
      return trace;
    }
  }
  trace.status = EpisodeStatus::MaxSteps;
  return trace;
}

std::string serialize_trace(const EpisodeTrace& trace, bool include_timings) {
  std::ostringstream out;
  ordered_json header;
  header["schema_version"] = kSchemaVersion;
  header["task"] = trace.task;
  header["config"] = {{"max_steps", trace.config.max_steps},
                      {"diff_threshold", trace.config.diff_threshold},
                      {"min_area", trace.config.min_area},
                      {"replan_retry_cap", trace.config.replan_retry_cap}};
  header["status"] = episode_status_name(trace.status);
  header["abort_error"] = trace.abort_error;
  out << header.dump() << "\n";
  for (const auto& step : trace.steps) {
    out << step_to_json(step, include_timings).dump() << "\n";
  }
  return out.str();
}

void write_trace(const EpisodeTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw TraceError(TraceErr::CorruptTrace, "cannot write " + path);
  out << serialize_trace(trace);
}

EpisodeTrace read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TraceError(TraceErr::CorruptTrace, "cannot read " + path);
  std::string line;
  int line_no = 0;
  EpisodeTrace trace;
  if (!std::getline(in, line)) {
    throw TraceError(TraceErr::CorruptTrace, "empty trace file at line 1");
  }
  ++line_no;
  ordered_json header = ordered_json::parse(line, nullptr, false);
  if (header.is_discarded() || !header.is_object() ||
      header.value("schema_version", -1) != kSchemaVersion) {
    throw TraceError(TraceErr::CorruptTrace,
                     "bad header (schema version) at line 1 of " + path);
  }
  trace.task = header.at("task").get<std::string>();
  trace.config.max_steps = header["config"].value("max_steps", 15);
  trace.config.diff_threshold = header["config"].value("diff_threshold", 12);
  trace.config.min_area = header["config"].value("min_area", 64);
  trace.config.replan_retry_cap = header["config"].value("replan_retry_cap", 1);
  trace.abort_error = header.value("abort_error", "");
  std::string status = header.value("status", "");
  if (status == "terminated-success") trace.status = EpisodeStatus::TerminatedSuccess;
  else if (status == "terminated-failure") trace.status = EpisodeStatus::TerminatedFailure;
  else if (status == "max-steps") trace.status = EpisodeStatus::MaxSteps;
  else if (status == "aborted-error") trace.status = EpisodeStatus::AbortedError;
  else throw TraceError(TraceErr::CorruptTrace, "bad status at line 1");

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json j = ordered_json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw TraceError(TraceErr::CorruptTrace,
                       "unparseable step at line " + std::to_string(line_no));
    }
    try {
      trace.steps.push_back(step_from_json(j));
    } catch (const std::exception& e) {
      throw TraceError(TraceErr::CorruptTrace, "bad step at line " +
                                                   std::to_string(line_no) + ": " +
                                                   e.what());
    }
  }
  for (size_t i = 0; i < trace.steps.size(); ++i) {
    if (trace.steps[i].step != static_cast<int>(i) + 1) {
      throw TraceError(TraceErr::CorruptTrace, "non-contiguous step indices");
    }
  }
  return trace;
}

}  // namespace delib
