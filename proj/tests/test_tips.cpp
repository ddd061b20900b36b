#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "delib/tips.hpp"

using namespace delib;

TEST_CASE("bundled base parses and contains the stock modules") {
  TipBase base = load_tip_base(default_tip_base_text());
  CHECK_FALSE(base.general_tips.empty());
  REQUIRE(base.module_for("Markor") != nullptr);
  REQUIRE(base.module_for("Pro Expense") != nullptr);
  REQUIRE(base.module_for("Retro Music") != nullptr);
  CHECK(base.module_for("Markor")->size() == 5);
}

TEST_CASE("parse enforces the bracket-header grammar") {
  TipBase base = load_tip_base(
      "[General Tips]\n- be careful\n---\n[Foo Tips]\n- tip one\n- tip two\n");
  CHECK(base.general_tips == std::vector<std::string>{"be careful"});
  REQUIRE(base.module_for("Foo") != nullptr);
  CHECK(base.module_for("foo") != nullptr);  // case-insensitive lookup
  CHECK(*base.module_for("Foo") == std::vector<std::string>{"tip one", "tip two"});

  auto kind = [](const std::string& src) {
    try {
      load_tip_base(src);
    } catch (const TipError& e) {
      return e.kind;
    }
    return TipErr::MalformedBullet;  // sentinel
  };
  CHECK(kind("[Foo Tips]\n- a\n---\n[foo Tips]\n- b\n") == TipErr::DuplicateHeader);
  CHECK(kind("[Foo Tips]\n---\n[Bar Tips]\n- b\n") == TipErr::EmptySection);
  CHECK(kind("[Foo Tips]\nnot a bullet\n") == TipErr::MalformedBullet);
}

TEST_CASE("serialize then load round trips") {
  TipBase base = load_tip_base(default_tip_base_text());
  TipBase back = load_tip_base(serialize_tip_base(base));
  CHECK(back.general_tips == base.general_tips);
  CHECK(back.app_modules == base.app_modules);
}

TEST_CASE("detect_apps is word-boundary and order-of-occurrence") {
  std::vector<std::string> known{"Markor", "Pro Expense", "Retro Music", "Camera"};
  CHECK(detect_apps("Create a note in Markor", known) ==
        std::vector<std::string>{"Markor"});
  CHECK(detect_apps("open markor now", known) == std::vector<std::string>{"Markor"});
  CHECK(detect_apps("Remarkorable text", known).empty());
  CHECK(detect_apps("Use Retro Music then log it in Pro Expense", known) ==
        std::vector<std::string>{"Retro Music", "Pro Expense"});
  CHECK(detect_apps("nothing relevant here", known).empty());
}

TEST_CASE("aliases map to canonical names") {
  std::vector<std::string> known{"Simple SMS Messenger"};
  auto hits = detect_apps("send a text with SMS Messenger", known);
  CHECK(hits == std::vector<std::string>{"Simple SMS Messenger"});
}

TEST_CASE("retrieve_tips selects exactly the detected modules") {
  TipBase base = load_tip_base(default_tip_base_text());
  TipSelection sel = retrieve_tips(base, {"Markor"});
  CHECK(sel.general == base.general_tips);
  REQUIRE(sel.per_app.size() == 1);
  CHECK(sel.per_app[0].first == "Markor");
  CHECK(sel.unmatched_apps.empty());

  TipSelection missing = retrieve_tips(base, {"Unknown App"});
  CHECK(missing.per_app.empty());
  CHECK(missing.unmatched_apps == std::vector<std::string>{"Unknown App"});
}

TEST_CASE("format_tips renders selected tips only") {
  TipBase base = load_tip_base(default_tip_base_text());
  std::string text = format_tips(retrieve_tips(base, {"Markor"}));
  CHECK(text.find("[General Tips]") != std::string::npos);
  CHECK(text.find("[Markor Tips]") != std::string::npos);
  for (const auto& tip : *base.module_for("Pro Expense")) {
    CHECK(text.find(tip) == std::string::npos);
  }
  for (const auto& tip : *base.module_for("Markor")) {
    CHECK(text.find(tip) != std::string::npos);
  }
}
