#include <doctest.h>

#include <filesystem>

#include "evtrace/scenario.hpp"

using namespace evtrace;

namespace {

Scenario shipped(const std::string& name) {
  return load_scenario(std::filesystem::path(EVTRACE_SCENARIO_DIR) / (name + ".scn"));
}

std::size_t error_line(const std::string& text) {
  try {
    auto s = parse_scenario(text);
    build_core(s);
  } catch (const ScenarioError& e) {
    return e.line();
  }
  return static_cast<std::size_t>(-1);
}

const char* const kHeader =
    "scenario t\n"                       // 1
    "window 1 Frame 0 0 100 100\n"       // 2
    "widget 2 1 Button 0 0 10 10\n"      // 3
    "widget 3 1 Field 0 20 10 10 focusable\n";  // 4

}  // namespace

TEST_CASE("shipped scenarios fire their expected event counts") {
  struct Row {
    const char* name;
    std::uint64_t total;
    std::uint64_t handled;
  };
  const Row rows[] = {{"atunes", 155502, 1724},
                      {"azureus", 11149, 230},
                      {"freemind", 356762, 5308},
                      {"jedit", 38708, 1940},
                      {"tuxguitar", 13696, 1802}};
  std::uint64_t total = 0;
  std::uint64_t handled = 0;
  for (const auto& row : rows) {
    CAPTURE(row.name);
    const auto scenario = shipped(row.name);
    CHECK(scenario.name == row.name);
    const auto counts = count_events(scenario);
    CHECK(counts.total == row.total);
    CHECK(counts.handled == row.handled);
    CHECK(counts.pre_visible > 0);
    total += counts.total;
    handled += counts.handled;
  }
  CHECK(total == 575817);
  CHECK(handled == 11004);
}

TEST_CASE("replays are deterministic") {
  for (const char* name : {"azureus", "jedit", "tuxguitar"}) {
    CAPTURE(name);
    const auto scenario = shipped(name);
    auto a = build_core(scenario);
    run_actions(scenario, *a);
    auto b = build_core(scenario);
    run_actions(scenario, *b);
    REQUIRE(a->log().size() == b->log().size());
    CHECK(std::equal(a->log().begin(), a->log().end(), b->log().begin()));
    CHECK(count_events(scenario) == count_events(scenario));
  }
}

TEST_CASE("actions expand as documented") {
  const auto s = parse_scenario(std::string(kHeader) +
                                "handler 2 ACTION Go\n"
                                "show 1\n"
                                "click 2 2\n"
                                "select 2\n"
                                "type 3 \"a b\"\n"
                                "key 3 10 2\n"
                                "repeat 3\n"
                                "  fire 2 PAINT 4\n"
                                "end\n"
                                "register 2 PAINT Painter\n"
                                "fire 2 PAINT\n"
                                "unregister 2 PAINT Painter\n"
                                "fire 2 PAINT\n"
                                "hide 1\n");
  auto core = build_core(s);
  run_actions(s, *core);
  // open 1 + click 4 + select 1 + type 9 + key 6 + repeat 12 + 2 paints + close 1
  CHECK(core->fired_count() == 36);
  const auto log = core->log();
  CHECK(log[0].type == EventType::WindowOpened);
  CHECK(log[1].type == EventType::MouseClicked);
  CHECK(log[2].type == EventType::Action);
  CHECK(log[2].handler_ids == std::vector<std::string>{"Go"});
  CHECK(log[5].type == EventType::Selection);
  CHECK(log[6].type == EventType::KeyPressed);
  CHECK(log[33].handler_ids == std::vector<std::string>{"Painter"});
  CHECK(log[34].handler_ids.empty());
  CHECK(log[35].type == EventType::WindowClosed);
  CHECK_FALSE(core->active_window().has_value());
}

TEST_CASE("parse errors carry line numbers") {
  const std::string h = kHeader;
  CHECK(error_line(h + "jump 2\n") == 5);
  CHECK(error_line(h + "\n# comment\nfire 2 DRAG\n") == 7);
  CHECK(error_line(h + "fire 9 PAINT\n") == 5);
  CHECK(error_line(h + "fire 2 PAINT\nwidget 4 1 X 0 0 1 1\n") == 6);
  CHECK(error_line(h + "fire 2 PAINT\nrepeat 2\n  fire 2 PAINT\n") == 6);
  CHECK(error_line(h + "end\n") == 5);
  CHECK(error_line(h + "type 2 \"abc\"\n") == 5);
  CHECK(error_line(h + "type 3 \"abc\n") == 5);
  CHECK(error_line(h + "show 2\n") == 5);
  CHECK(error_line(h + "fire 2 PAINT -3\n") == 5);
  CHECK(error_line(h + "widget 5 1 Z 0 0 0 4\n") == 5);
  CHECK(error_line(h + "widget 5 1 Z 0 0 4 4 shiny\n") == 5);
  CHECK(error_line("window 1 F 0 0 1 1\n") == 1);

  try {
    parse_scenario(h + "fire 2 DRAG\n");
    FAIL("expected ScenarioError");
  } catch (const ScenarioError& e) {
    CHECK(std::string(e.what()) == "line 5: unknown event type 'DRAG'");
  }
}

TEST_CASE("tree errors surface from build_core") {
  auto s = parse_scenario("scenario t\nwindow 1 F 0 0 5 5\nwidget 2 7 X 0 0 1 1\n");
  CHECK_THROWS_AS(build_core(s), ScenarioError);
  auto dup = parse_scenario("scenario t\nwindow 1 F 0 0 5 5\nhandler 1 ACTION A\nhandler 1 ACTION A\n");
  CHECK_THROWS_AS(build_core(dup), ScenarioError);
}

TEST_CASE("empty scenario") {
  const auto s = parse_scenario("scenario empty\n");
  CHECK(s.widgets.empty());
  CHECK(s.script.empty());
  CHECK(count_events(s) == ScenarioCounts{});
}

TEST_CASE("missing file") {
  CHECK_THROWS(load_scenario("/nonexistent/evtrace.scn"));
}
