#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace delib {

enum class TipErr { DuplicateHeader, EmptySection, MalformedBullet };

class TipError : public std::runtime_error {
 public:
  TipError(TipErr kind, const std::string& what)
      : std::runtime_error(what), kind(kind) {}
  TipErr kind;
};

// App-keyed knowledge base of operational tips. App names are unique
// case-insensitively; general tips live in their own section.
struct TipBase {
  std::vector<std::string> general_tips;
  std::vector<std::pair<std::string, std::vector<std::string>>> app_modules;

  const std::vector<std::string>* module_for(const std::string& app) const;
  std::vector<std::string> app_names() const;
};

struct TipSelection {
  std::vector<std::string> general;
  std::vector<std::pair<std::string, std::vector<std::string>>> per_app;
  std::vector<std::string> unmatched_apps;  // detected but without a module
};

// Parses the bracket-header format: "[<App> Tips]" header lines followed by
// "- " bullets, sections separated by "---"; "[General Tips]" is special.
TipBase load_tip_base(const std::string& source);
TipBase load_tip_base_file(const std::string& path);
std::string serialize_tip_base(const TipBase& base);

// The bundled knowledge base (general tips plus a handful of app modules).
const std::string& default_tip_base_text();

// Alias table entry: alternate spelling -> canonical app name.
using AppAliases = std::vector<std::pair<std::string, std::string>>;
const AppAliases& default_app_aliases();

// Case-insensitive word-boundary matching of known app names (and aliases)
// against the task text, ordered by first occurrence.
std::vector<std::string> detect_apps(const std::string& task,
                                     const std::vector<std::string>& known,
                                     const AppAliases& aliases = default_app_aliases());

// All general tips plus exactly the modules of the listed apps.
TipSelection retrieve_tips(const TipBase& base, const std::vector<std::string>& apps);

// Renders the tips prompt template: the general section, then the per-app
// sections in place of the retrieval slot.
std::string format_tips(const TipSelection& sel);

}  // namespace delib
