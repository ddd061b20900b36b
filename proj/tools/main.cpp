#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "delib/datatools.hpp"
#include "delib/orchestrator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace delib;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct RunConfig {
  RoleModels models;
  EpisodeConfig episode;
  std::string tip_base_path;
};

ModelConfig role_model(const json& doc, const char* role, const ModelConfig& base) {
  ModelConfig m = base;
  if (doc.contains(role)) {
    const json& r = doc[role];
    if (r.contains("endpoint")) m.endpoint = r["endpoint"];
    if (r.contains("model")) m.model = r["model"];
    if (r.contains("temperature")) m.temperature = r["temperature"];
    if (r.contains("max_tokens")) m.max_tokens = r["max_tokens"];
    if (r.contains("timeout_ms")) m.timeout_ms = r["timeout_ms"];
  }
  return m;
}

RunConfig load_run_config(const std::string& path) {
  RunConfig cfg;
  json doc = path.empty() ? json::object() : json::parse(slurp(path));
  ModelConfig base;
  base.endpoint = doc.value("endpoint", "http://127.0.0.1:8000");
  base.model = doc.value("model", "local");
  if (const char* env = std::getenv("DELIB_ENDPOINT")) base.endpoint = env;
  cfg.models.manager = role_model(doc, "manager", base);
  cfg.models.tac = role_model(doc, "tac", base);
  cfg.models.aca = role_model(doc, "aca", base);
  cfg.models.sra = role_model(doc, "sra", base);
  cfg.episode.max_steps = doc.value("max_steps", cfg.episode.max_steps);
  cfg.episode.diff_threshold = doc.value("diff_threshold", cfg.episode.diff_threshold);
  cfg.episode.min_area = doc.value("min_area", cfg.episode.min_area);
  cfg.episode.replan_retry_cap = doc.value("replan_retry_cap", cfg.episode.replan_retry_cap);
  cfg.tip_base_path = doc.value("tip_base", "");
  return cfg;
}

int cmd_run(const std::string& task, const std::string& scenario_path, bool device,
            const std::string& config_path, const std::string& cassette_dir,
            bool record, bool replay, const std::string& out_dir) {
  RunConfig cfg = load_run_config(config_path);

  TipBase tips = cfg.tip_base_path.empty() ? load_tip_base(default_tip_base_text())
                                           : load_tip_base_file(cfg.tip_base_path);

  std::unique_ptr<Environment> env;
  if (device) {
    env = std::make_unique<DeviceEnvironment>();
  } else {
    env = std::make_unique<MockEnvironment>(load_scenario_file(scenario_path));
  }

  RoleBackends backends;
  std::vector<std::shared_ptr<CassetteRecorder>> recorders;
  auto make_backend = [&](const char* role) -> std::shared_ptr<Backend> {
    if (replay) {
      return std::make_shared<CassetteReplayer>(cassette_dir + "/" + role + ".cass");
    }
    std::shared_ptr<Backend> live = std::make_shared<HttpBackend>();
    if (record) {
      auto rec = std::make_shared<CassetteRecorder>(live, cassette_dir + "/" + role + ".cass");
      recorders.push_back(rec);
      return rec;
    }
    return live;
  };
  backends.manager = make_backend("manager");
  backends.tac = make_backend("tac");
  backends.aca = make_backend("aca");
  backends.sra = make_backend("sra");

  if (!out_dir.empty()) fs::create_directories(out_dir);
  Orchestrator orch(*env, backends, cfg.models, cfg.episode, tips, out_dir);
  EpisodeTrace trace = orch.run_episode(task);

  if (record) {
    fs::create_directories(cassette_dir);
    for (auto& rec : recorders) rec->save();
  }
  if (!out_dir.empty()) write_trace(trace, out_dir + "/trace.jsonl");

  std::cout << episode_status_name(trace.status) << " after "
            << trace.steps.size() << " step(s)\n";
  switch (trace.status) {
    case EpisodeStatus::TerminatedSuccess: return 0;
    case EpisodeStatus::TerminatedFailure: return 1;
    case EpisodeStatus::MaxSteps: return 1;
    case EpisodeStatus::AbortedError:
      std::cerr << trace.abort_error << "\n";
      return 2;
  }
  return 2;
}

int cmd_visualize(const std::string& image_path, const std::string& call,
                  const std::string& out_path) {
  Action action = parse_call_string(call);
  RasterImage img = read_png(image_path);
  AnnotatedImage marked = render_action_marker(img, action, {});
  if (!marked.visualized) {
    std::cout << "action has no visual marker; copied input unchanged\n";
  }
  write_png(marked.image, out_path);
  return 0;
}

int cmd_diff(const std::string& before_path, const std::string& after_path,
             const std::string& out_path, int threshold, int min_area) {
  RasterImage before = read_png(before_path);
  RasterImage after = read_png(after_path);
  auto regions = diff_regions(before, after, threshold, min_area);
  for (const auto& r : regions) {
    std::cout << r.left << " " << r.top << " " << r.right << " " << r.bottom << "\n";
  }
  if (!out_path.empty()) write_png(draw_boxes(after, regions), out_path);
  return 0;
}

int cmd_tips(const std::string& base_path, const std::string& task) {
  TipBase base = base_path.empty() ? load_tip_base(default_tip_base_text())
                                   : load_tip_base_file(base_path);
  auto apps = detect_apps(task, base.app_names());
  std::cout << format_tips(retrieve_tips(base, apps));
  return 0;
}

int cmd_unroll(const std::vector<std::string>& trace_paths, const std::string& out_dir) {
  std::vector<LoadedTrace> traces;
  for (const auto& p : trace_paths) {
    traces.push_back({read_trace(p), fs::path(p).parent_path().string()});
  }
  fs::create_directories(out_dir);
  auto samples = unroll_trajectories(traces, out_dir);
  FilterReport report;
  auto kept = filter_samples(samples, {}, report);
  std::ofstream out(out_dir + "/samples.jsonl", std::ios::binary);
  out << serialize_samples(kept);
  std::cout << "input " << report.input << "\n"
            << "removed_duplicates " << report.removed_duplicates << "\n"
            << "removed_parse_errors " << report.removed_parse_errors << "\n"
            << "removed_empty_thoughts " << report.removed_empty_thoughts << "\n"
            << "survivors " << report.survivors << "\n";
  return 0;
}

int cmd_kappa(const std::string& matrix_path) {
  RatingMatrix m = parse_rating_matrix(slurp(matrix_path));
  std::printf("%.6f\n", fleiss_kappa(m));
  return 0;
}

int cmd_analyze_errors(const std::string& labels_path) {
  // one failed task per line, comma-separated labels
  std::istringstream in(slurp(labels_path));
  std::vector<std::vector<FailureLabel>> tasks;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::vector<FailureLabel> labels;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      size_t a = cell.find_first_not_of(" \t\r\n");
      size_t b = cell.find_last_not_of(" \t\r\n");
      if (a == std::string::npos) continue;
      auto label = parse_failure_label(cell.substr(a, b - a + 1));
      if (!label) {
        throw std::runtime_error("line " + std::to_string(lineno) +
                                 ": unknown label '" + cell + "'");
      }
      labels.push_back(*label);
    }
    tasks.push_back(std::move(labels));
  }
  for (const auto& [label, share] : tally_failures(tasks)) {
    std::printf("%s %.2f\n", failure_label_name(label), share);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deliberative GUI-agent engine and tooling"};
  app.require_subcommand(1);

  std::string task, scenario, config_path, cassette_dir, out_dir;
  bool device = false, record = false, replay = false;
  auto* run = app.add_subcommand("run", "run one task episode");
  run->add_option("task", task, "task instruction")->required();
  auto* scen_opt = run->add_option("--scenario", scenario, "mock scenario JSON");
  run->add_flag("--device", device, "drive a connected device instead of a scenario");
  run->add_option("--config", config_path, "engine config JSON");
  run->add_option("--cassette", cassette_dir, "cassette directory");
  run->add_flag("--record", record, "record model traffic into the cassette");
  run->add_flag("--replay", replay, "replay model traffic from the cassette");
  run->add_option("--out", out_dir, "trace output directory");
  scen_opt->excludes("--device");

  std::string image_path, call, viz_out;
  auto* viz = app.add_subcommand("visualize", "render an action marker onto a screenshot");
  viz->add_option("--image", image_path)->required();
  viz->add_option("--action", call, "action call string")->required();
  viz->add_option("--out", viz_out)->required();

  std::string before_path, after_path, diff_out;
  int threshold = 12, min_area = 64;
  auto* diff = app.add_subcommand("diff", "find changed regions between two screenshots");
  diff->add_option("--before", before_path)->required();
  diff->add_option("--after", after_path)->required();
  diff->add_option("--out", diff_out, "boxed output PNG");
  diff->add_option("--threshold", threshold);
  diff->add_option("--min-area", min_area);

  std::string tip_base_path, tip_task;
  auto* tips = app.add_subcommand("tips", "render the tip section for a task");
  tips->add_option("--base", tip_base_path, "tip base file (bundled default if absent)");
  tips->add_option("--task", tip_task)->required();

  std::vector<std::string> trace_paths;
  std::string unroll_out;
  auto* unroll = app.add_subcommand("unroll", "unroll traces into consistency samples");
  unroll->add_option("--traces", trace_paths)->required()->expected(-1);
  unroll->add_option("--out", unroll_out)->required();

  std::string matrix_path;
  auto* kap = app.add_subcommand("kappa", "inter-rater agreement from a count matrix");
  kap->add_option("--matrix", matrix_path)->required();

  std::string labels_path;
  auto* ana = app.add_subcommand("analyze-errors", "failure label proportions");
  ana->add_option("--labels", labels_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      if (!device && scenario.empty()) {
        std::cerr << "run: need --scenario or --device\n";
        return 3;
      }
      if ((record || replay) && cassette_dir.empty()) {
        std::cerr << "run: --record/--replay need --cassette\n";
        return 3;
      }
      return cmd_run(task, scenario, device, config_path, cassette_dir, record,
                     replay, out_dir);
    }
    if (*viz) return cmd_visualize(image_path, call, viz_out);
    if (*diff) return cmd_diff(before_path, after_path, diff_out, threshold, min_area);
    if (*tips) return cmd_tips(tip_base_path, tip_task);
    if (*unroll) return cmd_unroll(trace_paths, unroll_out);
    if (*kap) return cmd_kappa(matrix_path);
    if (*ana) return cmd_analyze_errors(labels_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 3;
}
