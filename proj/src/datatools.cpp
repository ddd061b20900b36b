#include "delib/datatools.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace delib {
namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataErr::MissingScreenshot, "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string bytes = buf.str();
  return sha256_hex(reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size());
}

}  // namespace

std::vector<TacSample> unroll_trajectories(const std::vector<LoadedTrace>& traces,
                                           const std::string& out_dir,
                                           const MarkerStyle& style) {
  if (!out_dir.empty()) fs::create_directories(out_dir);
  std::vector<TacSample> samples;
  int trace_idx = 0;
  for (const auto& loaded : traces) {
    ++trace_idx;
    for (const auto& step : loaded.trace.steps) {
      TacSample s;
      char id[32];
      std::snprintf(id, sizeof(id), "t%03d_s%03d", trace_idx, step.step);
      s.sample_id = id;
      s.task = loaded.trace.task;
      s.thought = step.proposal.thought;
      s.action = step.proposal.action;
      s.action_description = step.proposal.description;
      s.parse_error = step.proposal.action.empty();

      if (step.before_ref.empty()) {
        throw DataError(DataErr::MissingScreenshot,
                        "step " + std::to_string(step.step) + " has no screenshot ref");
      }
      std::string src = loaded.dir + "/" + step.before_ref;
      s.original_screenshot = step.before_ref;
      s.screenshot_digest = file_digest(src);

      if (!s.parse_error) {
        ordered_json call = ordered_json::parse(s.action, nullptr, false);
        if (!call.is_discarded()) {
          try {
            Action action = build_action(call.at("name"), call.at("arguments"));
            if (is_coordinate_based(action) && !out_dir.empty()) {
              RasterImage img = read_png(src);
              AnnotatedImage marked = render_action_marker(img, action, style);
              std::string name = s.sample_id + "_marked.png";
              write_png(marked.image, out_dir + "/" + name);
              s.marked_screenshot = name;
            }
          } catch (const ActionParseError&) {
            s.parse_error = true;
          }
        } else {
          s.parse_error = true;
        }
      }
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

std::vector<TacSample> filter_samples(const std::vector<TacSample>& samples,
                                      const FilterRules& rules, FilterReport& report) {
  report = FilterReport{};
  report.input = static_cast<int>(samples.size());
  std::vector<TacSample> out;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (const auto& s : samples) {
    if (rules.drop_parse_errors && s.parse_error) {
      ++report.removed_parse_errors;
      continue;
    }
    if (rules.drop_empty_thoughts && s.thought.empty()) {
      ++report.removed_empty_thoughts;
      continue;
    }
    if (rules.dedup_exact) {
      auto key = std::make_tuple(s.thought, s.action, s.screenshot_digest);
      if (!seen.insert(key).second) {
        ++report.removed_duplicates;
        continue;
      }
    }
    out.push_back(s);
  }
  report.survivors = static_cast<int>(out.size());
  return out;
}

std::string serialize_samples(const std::vector<TacSample>& samples) {
  std::ostringstream out;
  for (const auto& s : samples) {
    ordered_json j;
    j["sample_id"] = s.sample_id;
    j["task"] = s.task;
    j["ACTION_THOUGHT"] = s.thought;
    j["ACTION"] = s.action;
    j["ACTION_DESCRIPTION"] = s.action_description;
    j["original_screenshot"] = s.original_screenshot;
    j["marked_screenshot"] =
        s.marked_screenshot ? ordered_json(*s.marked_screenshot) : ordered_json(nullptr);
    j["label"] = s.label ? ordered_json(*s.label) : ordered_json(nullptr);
    j["parse_error"] = s.parse_error;
    j["screenshot_digest"] = s.screenshot_digest;
    out << j.dump() << "\n";
  }
  return out.str();
}

std::vector<TacSample> parse_samples(const std::string& jsonl) {
  std::vector<TacSample> samples;
  std::istringstream in(jsonl);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ordered_json j = ordered_json::parse(line);
    TacSample s;
    s.sample_id = j.at("sample_id");
    s.task = j.at("task");
    s.thought = j.at("ACTION_THOUGHT");
    s.action = j.at("ACTION");
    s.action_description = j.at("ACTION_DESCRIPTION");
    s.original_screenshot = j.at("original_screenshot");
    if (!j.at("marked_screenshot").is_null()) s.marked_screenshot = j["marked_screenshot"];
    if (!j.at("label").is_null()) s.label = j["label"].get<int>();
    s.parse_error = j.value("parse_error", false);
    s.screenshot_digest = j.value("screenshot_digest", "");
    samples.push_back(std::move(s));
  }
  return samples;
}

RatingMatrix parse_rating_matrix(const std::string& csv) {
  RatingMatrix m;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::vector<int> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        row.push_back(std::stoi(cell));
      } catch (const std::exception&) {
        throw DataError(DataErr::BadMatrix, "non-integer cell: " + cell);
      }
    }
    m.counts.push_back(std::move(row));
  }
  return m;
}

double fleiss_kappa(const RatingMatrix& m) {
  const auto& counts = m.counts;
  size_t n_items = counts.size();
  if (n_items == 0) throw DataError(DataErr::BadMatrix, "empty rating matrix");
  size_t k = counts[0].size();
  if (k < 2) throw DataError(DataErr::BadMatrix, "need at least 2 categories");
  long raters = 0;
  for (int c : counts[0]) raters += c;
  if (raters < 2) throw DataError(DataErr::BadMatrix, "need at least 2 raters");

  double sum_item_agreement = 0.0;
  std::vector<double> category_share(k, 0.0);
  for (const auto& row : counts) {
    if (row.size() != k) throw DataError(DataErr::BadMatrix, "ragged matrix");
    long row_sum = 0;
    double sq = 0.0;
    for (size_t j = 0; j < k; ++j) {
      if (row[j] < 0) throw DataError(DataErr::BadMatrix, "negative count");
      row_sum += row[j];
      sq += static_cast<double>(row[j]) * row[j];
      category_share[j] += row[j];
    }
    if (row_sum != raters) {
      throw DataError(DataErr::BadMatrix, "rows disagree on rater count");
    }
    sum_item_agreement +=
        (sq - raters) / (static_cast<double>(raters) * (raters - 1));
  }
  double p_bar = sum_item_agreement / static_cast<double>(n_items);
  double p_e = 0.0;
  for (size_t j = 0; j < k; ++j) {
    double share = category_share[j] / (static_cast<double>(n_items) * raters);
    p_e += share * share;
  }
  if (p_e >= 1.0) {
    throw DataError(DataErr::DegenerateAgreement,
                    "all ratings fall in one category; kappa undefined");
  }
  return (p_bar - p_e) / (1.0 - p_e);
}

const char* failure_label_name(FailureLabel label) {
  switch (label) {
    case FailureLabel::Planning: return "Planning";
    case FailureLabel::Navigation: return "Navigation";
    case FailureLabel::Grounding: return "Grounding";
    case FailureLabel::Perception: return "Perception";
    case FailureLabel::Others: return "Others";
  }
  return "Others";
}

std::optional<FailureLabel> parse_failure_label(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (n == "planning") return FailureLabel::Planning;
  if (n == "navigation") return FailureLabel::Navigation;
  if (n == "grounding") return FailureLabel::Grounding;
  if (n == "perception") return FailureLabel::Perception;
  if (n == "others" || n == "other") return FailureLabel::Others;
  return std::nullopt;
}

std::map<FailureLabel, double> tally_failures(
    const std::vector<std::vector<FailureLabel>>& labels_per_task) {
  std::map<FailureLabel, long> counts;
  long total = 0;
  for (const auto& task_labels : labels_per_task) {
    for (FailureLabel label : task_labels) {
      ++counts[label];
      ++total;
    }
  }
  std::map<FailureLabel, double> out;
  if (total == 0) return out;
  for (const auto& [label, count] : counts) {
    out[label] = static_cast<double>(count) / static_cast<double>(total);
  }
  return out;
}

}  // namespace delib
