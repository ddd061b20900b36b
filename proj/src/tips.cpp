#include "delib/tips.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace delib {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// First case-insensitive word-boundary occurrence of needle in haystack.
size_t find_word(const std::string& haystack, const std::string& needle) {
  if (needle.empty()) return std::string::npos;
  std::string h = lower(haystack), n = lower(needle);
  size_t pos = 0;
  while ((pos = h.find(n, pos)) != std::string::npos) {
    bool left_ok = pos == 0 || !is_word_char(h[pos - 1]) || !is_word_char(n.front());
    size_t end = pos + n.size();
    bool right_ok = end == h.size() || !is_word_char(h[end]) || !is_word_char(n.back());
    if (left_ok && right_ok) return pos;
    ++pos;
  }
  return std::string::npos;
}

}  // namespace

const std::vector<std::string>* TipBase::module_for(const std::string& app) const {
  std::string key = lower(app);
  for (const auto& [name, tips] : app_modules) {
    if (lower(name) == key) return &tips;
  }
  return nullptr;
}

std::vector<std::string> TipBase::app_names() const {
  std::vector<std::string> names;
  names.reserve(app_modules.size());
  for (const auto& [name, tips] : app_modules) names.push_back(name);
  return names;
}

TipBase load_tip_base(const std::string& source) {
  TipBase base;
  std::vector<std::string> seen_headers;

  std::istringstream in(source);
  std::string line;
  std::string current_header;
  std::vector<std::string>* current_tips = nullptr;
  bool saw_bullet = false;

  auto close_section = [&]() {
    if (!current_header.empty() && !saw_bullet) {
      throw TipError(TipErr::EmptySection, "section '" + current_header + "' has no tips");
    }
    current_header.clear();
    current_tips = nullptr;
    saw_bullet = false;
  };

  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t == "---") {
      close_section();
      continue;
    }
    if (t.front() == '[' && t.back() == ']') {
      close_section();
      std::string inner = trim(t.substr(1, t.size() - 2));
      const std::string suffix = " Tips";
      if (inner.size() <= suffix.size() || inner.substr(inner.size() - suffix.size()) != suffix) {
        throw TipError(TipErr::MalformedBullet, "bad section header: " + t);
      }
      std::string app = trim(inner.substr(0, inner.size() - suffix.size()));
      std::string key = lower(app);
      if (std::find(seen_headers.begin(), seen_headers.end(), key) != seen_headers.end()) {
        throw TipError(TipErr::DuplicateHeader, "duplicate section: " + t);
      }
      seen_headers.push_back(key);
      current_header = app;
      if (key == "general") {
        current_tips = &base.general_tips;
      } else {
        base.app_modules.emplace_back(app, std::vector<std::string>{});
        current_tips = &base.app_modules.back().second;
      }
      continue;
    }
    if (t.rfind("- ", 0) == 0) {
      if (!current_tips) {
        throw TipError(TipErr::MalformedBullet, "bullet outside any section: " + t);
      }
      std::string tip = trim(t.substr(2));
      if (tip.empty()) throw TipError(TipErr::MalformedBullet, "empty tip bullet");
      current_tips->push_back(tip);
      saw_bullet = true;
      continue;
    }
    throw TipError(TipErr::MalformedBullet, "unrecognized line: " + t);
  }
  close_section();
  return base;
}

TipBase load_tip_base_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TipError(TipErr::MalformedBullet, "cannot open tip base: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_tip_base(buf.str());
}

std::string serialize_tip_base(const TipBase& base) {
  std::ostringstream out;
  out << "[General Tips]\n";
  for (const auto& tip : base.general_tips) out << "- " << tip << "\n";
  for (const auto& [app, tips] : base.app_modules) {
    out << "\n---\n\n[" << app << " Tips]\n";
    for (const auto& tip : tips) out << "- " << tip << "\n";
  }
  return out.str();
}

const std::string& default_tip_base_text() {
  static const std::string text = R"(
[General Tips]
- Must Click the correct text field before use type!
- If the task is finished, you should terminate the task in time!
- Check the ### History Operations ### If you stuck in an action, you should try to change the action or the correspoinding parameters.
- When you want to paste text, you should use long press and then click paste. Don't use the clipboard button on the keyboard.

---

[Markor Tips]
- To change the name or rename of a file in [Markor], in the note list, long press the item and click the ["A"] button on the right top corner!
- To delete a note in [Markor], you should first return to the note list, long press the item to be deleted, and then click the "trash bin" button on the right top corner.
- To create a folder in [Markor], after entering the folder name, you should click [FOLDER] button to confirm!
- To create a note in [Markor], long_press the original suffix and use 'type' to input correct suffix, such as 'md', 'txt', etc.
- After deleting / moving / creating the notes required, you should terminate the task in time!

---

[Pro Expense Tips]
- For more Expenses, 'click' the [MORE]button.
- **Duplicate entriesin [pro expense] only when the[UI], [name], [date], and [cost] are exactly same! **
- After deleting the expenses required, you should terminate the task in time!
- It is prohibited to delete any expenses that are not explicitly specified in the #Instruction#.
- When the screen remains visually identical for two consecutive swipes, do not swipe again. If task has been finished, consider terminating the task.

---

[Retro Music Tips]
- Strictly check the ###History Operations ### before determining the next song.
- To add songs to the playlist, click three-dot menu beside the song! click 'Add to playlist' to confirm, do not click the song name directly!
- All songs in the Instruction must be processed correctly.
- When the screen remains visually identical for two consecutive swipes, do not swipe again. If task has been finished, consider terminating the task.
)";
  return text;
}

const AppAliases& default_app_aliases() {
  static const AppAliases aliases = {
      {"SMS Messenger", "Simple SMS Messenger"},
      {"Calendar", "Simple Calendar Pro"},
      {"Gallery", "Simple Gallery Pro"},
      {"Broccoli", "Broccoli - Recipe App"},
      {"Recipe App", "Broccoli - Recipe App"},
      {"Simple Draw", "Simple Draw Pro"},
  };
  return aliases;
}

std::vector<std::string> detect_apps(const std::string& task,
                                     const std::vector<std::string>& known,
                                     const AppAliases& aliases) {
  std::vector<std::pair<size_t, std::string>> hits;
  for (const auto& app : known) {
    size_t best = find_word(task, app);
    for (const auto& [alias, canonical] : aliases) {
      if (lower(canonical) != lower(app)) continue;
      size_t pos = find_word(task, alias);
      if (pos != std::string::npos && pos < best) best = pos;
    }
    if (best != std::string::npos) hits.emplace_back(best, app);
  }
  std::stable_sort(hits.begin(), hits.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::string> out;
  for (auto& [pos, app] : hits) out.push_back(std::move(app));
  return out;
}

TipSelection retrieve_tips(const TipBase& base, const std::vector<std::string>& apps) {
  TipSelection sel;
  sel.general = base.general_tips;
  for (const auto& app : apps) {
    if (const auto* tips = base.module_for(app)) {
      sel.per_app.emplace_back(app, *tips);
    } else {
      sel.unmatched_apps.push_back(app);
    }
  }
  return sel;
}

std::string format_tips(const TipSelection& sel) {
  std::ostringstream out;
  out << "[General Tips]\n";
  for (const auto& tip : sel.general) out << "- " << tip << "\n";
  out << "\n[Action Tips for app]\n";
  for (const auto& [app, tips] : sel.per_app) {
    out << "[" << app << " Tips]\n";
    for (const auto& tip : tips) out << "- " << tip << "\n";
  }
  return out.str();
}

}  // namespace delib
