#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "uiwf/error.hpp"
#include "uiwf/labels.hpp"
#include "uiwf/rng.hpp"

using namespace uiwf;

namespace {

ChainLabel random_label(const LabelRegistry& reg, Rng& rng) {
  const auto& pairs = reg.software_views();
  const auto& [software, view] = pairs[uniform_index(rng, pairs.size())];
  return {software, view, kAllContexts[uniform_index(rng, kAllContexts.size())]};
}

}  // namespace

TEST_CASE("projection keeps the chain prefix") {
  const ChainLabel gmail{"Mail", "Gmail", ContextValue::SelectedText};
  CHECK(project(gmail, Level::SV) == project(ChainLabel{"Mail", "Gmail", ContextValue::None}, Level::SV));
  CHECK(project(gmail, Level::SV).display() == "Mail / Gmail");
  CHECK(project(ChainLabel{"Terminal", "Main View", ContextValue::None}, Level::S).display() ==
        "Terminal");
  CHECK(project(gmail, Level::SVC).display() == "Mail / Gmail / SelectedText");
}

TEST_CASE("default registry validates table rows and rejects others") {
  const auto reg = LabelRegistry::default_registry();
  CHECK_NOTHROW(validate(ChainLabel{"Web Browser", "Maps", ContextValue::None}, reg));
  CHECK_THROWS_AS(validate(ChainLabel{"Terminal", "Save", ContextValue::None}, reg), UnknownClass);
  CHECK_THROWS_AS(validate(ChainLabel{"", "Gmail", ContextValue::None}, reg), UnknownClass);
}

TEST_CASE("default registry cardinalities") {
  const auto reg = LabelRegistry::default_registry();
  CHECK(reg.class_count(Level::SV) == 25);
  CHECK(reg.class_count(Level::SVC) == 75);
  CHECK(reg.class_count(Level::S) <= reg.class_count(Level::SV));
  CHECK(reg.class_count(Level::SVC) == 3 * reg.class_count(Level::SV));
  CHECK(reg.chain_labels().size() == 75);
}

TEST_CASE("property: registry closure") {
  const auto reg = LabelRegistry::default_registry();
  std::set<std::string> keys;
  for (const auto& label : reg.chain_labels()) {
    CHECK_NOTHROW(validate(label, reg));
    keys.insert(project(label, Level::SVC).value);
  }
  CHECK(keys.size() == reg.class_count(Level::SVC));
}

TEST_CASE("property: equal keys at a level imply equal keys at every coarser level") {
  const auto reg = LabelRegistry::default_registry();
  Rng rng(11);
  for (int trial = 0; trial < 5000; ++trial) {
    // Draw pairs that often collide at fine levels.
    const auto a = random_label(reg, rng);
    auto b = bernoulli(rng, 0.5) ? a : random_label(reg, rng);
    if (bernoulli(rng, 0.3)) b.context = kAllContexts[uniform_index(rng, 3)];
    for (std::size_t hi = 0; hi < kAllLevels.size(); ++hi)
      for (std::size_t lo = 0; lo <= hi; ++lo)
        if (project(a, kAllLevels[hi]) == project(b, kAllLevels[hi]))
          REQUIRE(project(a, kAllLevels[lo]) == project(b, kAllLevels[lo]));
  }
}

TEST_CASE("ordinal follows registry order") {
  const auto reg = LabelRegistry::default_registry();
  std::size_t previous = 0;
  bool first = true;
  for (const auto& label : reg.chain_labels()) {
    const auto o = reg.ordinal(project(label, Level::SVC), Level::SVC);
    if (!first) CHECK(o == previous + 1);
    previous = o;
    first = false;
  }
}

TEST_CASE("registry text round trip and parse errors") {
  const auto reg = LabelRegistry::parse("# comment\nA\tOne\n\nA\tTwo\nB\tOne\n");
  CHECK(reg.software_classes() == std::vector<std::string>{"A", "B"});
  CHECK(reg.class_count(Level::SV) == 3);
  CHECK(reg.contains("A", "Two"));
  CHECK_FALSE(reg.contains("B", "Two"));
  try {
    LabelRegistry::parse("A\tOne\nbroken line\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("level identifiers") {
  CHECK(levels_from_string("s,sv,svc") == std::vector<Level>{Level::S, Level::SV, Level::SVC});
  CHECK_THROWS_AS(level_from_string("vc"), InvalidArgument);
  CHECK(context_from_string("SelectedText") == ContextValue::SelectedText);
}
