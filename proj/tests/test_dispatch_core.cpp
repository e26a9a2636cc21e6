#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <functional>
#include <map>
#include <random>
#include <thread>

#include "evtrace/dispatch_core.hpp"
#include "evtrace/scenario.hpp"

using namespace evtrace;

namespace {

WidgetSpec spec(std::uint32_t id, std::string cls, std::optional<std::uint32_t> parent, Geometry g,
                bool visible = true) {
  std::optional<WidgetId> p;
  if (parent) p = WidgetId{*parent};
  return {WidgetId{id}, std::move(cls), p, g, visible, true};
}

WidgetTree three_buttons() {
  const std::vector<WidgetSpec> specs{
      spec(1, "Window", std::nullopt, {0, 0, 100, 50}),
      spec(2, "Button", 1, {0, 0, 10, 10}),
      spec(3, "Button", 1, {10, 0, 10, 10}),
      spec(4, "Button", 1, {20, 0, 10, 10}),
  };
  return WidgetTree::build(specs);
}

// Naive per-pixel reference: the topmost visible widget covering a pixel wins,
// where "topmost" is the later one in a depth-first walk.
std::vector<std::uint8_t> reference_render(const std::vector<WidgetSpec>& specs, std::uint32_t window) {
  std::map<std::uint32_t, std::vector<std::uint32_t>> children;
  std::map<std::uint32_t, const WidgetSpec*> by_id;
  for (const auto& s : specs) {
    by_id[to_underlying(s.id)] = &s;
    if (s.parent) children[to_underlying(*s.parent)].push_back(to_underlying(s.id));
  }
  std::vector<std::uint32_t> paint_order;
  std::function<void(std::uint32_t)> walk = [&](std::uint32_t id) {
    if (!by_id[id]->visible) return;
    paint_order.push_back(id);
    for (auto c : children[id]) walk(c);
  };
  walk(window);
  const auto& win = *by_id[window];
  const int w = win.geometry.width, h = win.geometry.height;
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * 4, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int ax = x + win.geometry.x, ay = y + win.geometry.y;
      for (auto id : paint_order) {
        const auto& g = by_id[id]->geometry;
        if (ax >= g.x && ax < g.x + g.width && ay >= g.y && ay < g.y + g.height) {
          const auto c = widget_color(WidgetId{id});
          std::copy(c.begin(), c.end(), px.begin() + (static_cast<std::ptrdiff_t>(y) * w + x) * 4);
        }
      }
    }
  }
  return px;
}

}  // namespace

TEST_CASE("widget tree indices") {
  const auto tree = three_buttons();
  CHECK(tree.at(WidgetId{1}).index_in_parent == -1);
  CHECK(tree.at(WidgetId{2}).index_in_parent == 0);
  CHECK(tree.at(WidgetId{3}).index_in_parent == 1);
  CHECK(tree.at(WidgetId{4}).index_in_parent == 2);
  CHECK(tree.root_of(WidgetId{4}) == WidgetId{1});
  CHECK(tree.roots().size() == 1);
}

TEST_CASE("widget tree construction errors") {
  std::vector<WidgetSpec> dup{spec(1, "W", std::nullopt, {0, 0, 1, 1}), spec(1, "X", std::nullopt, {0, 0, 1, 1})};
  CHECK_THROWS_WITH_AS(WidgetTree::build(dup), doctest::Contains("duplicate"), TreeError);

  std::vector<WidgetSpec> cycle{spec(1, "W", std::nullopt, {0, 0, 1, 1}), spec(2, "A", 3, {0, 0, 1, 1}),
                                spec(3, "B", 2, {0, 0, 1, 1})};
  CHECK_THROWS_WITH_AS(WidgetTree::build(cycle), doctest::Contains("cycle"), TreeError);

  std::vector<WidgetSpec> self{spec(1, "W", 1, {0, 0, 1, 1})};
  CHECK_THROWS_AS(WidgetTree::build(self), TreeError);

  std::vector<WidgetSpec> orphan{spec(2, "A", 9, {0, 0, 1, 1})};
  CHECK_THROWS_WITH_AS(WidgetTree::build(orphan), doctest::Contains("unknown parent"), TreeError);

  std::vector<WidgetSpec> empty_size{spec(1, "W", std::nullopt, {0, 0, 0, 1})};
  CHECK_THROWS_AS(WidgetTree::build(empty_size), TreeError);
}

TEST_CASE("depth-4 fixture: preorder matches fixture order") {
  const auto scenario = load_scenario(EVTRACE_TEST_DATA "/nested_tree.scn");
  const auto tree = WidgetTree::build(scenario.widgets);

  // Independent oracle: recursive walk over the spec's parent links.
  std::vector<WidgetId> oracle;
  std::function<void(std::optional<WidgetId>)> walk = [&](std::optional<WidgetId> parent) {
    for (const auto& s : scenario.widgets) {
      if (s.parent == parent) {
        oracle.push_back(s.id);
        walk(s.id);
      }
    }
  };
  walk(std::nullopt);

  std::vector<WidgetId> declared;
  for (const auto& s : scenario.widgets) declared.push_back(s.id);

  CHECK(tree.preorder() == oracle);
  CHECK(tree.preorder() == declared);

  std::size_t depth = 0;
  for (const auto& s : scenario.widgets) {
    std::size_t d = 0;
    for (auto p = s.parent; p; p = tree.at(*p).parent) ++d;
    depth = std::max(depth, d);
  }
  CHECK(depth >= 4);
}

TEST_CASE("listener registration") {
  DispatchCore core(three_buttons());
  const WidgetId w{2};
  core.register_listener(w, EventType::Action, "h1");
  core.register_listener(w, EventType::Action, "h2");
  const auto listeners = core.table().listeners(w, EventType::Action);
  REQUIRE(listeners.size() == 2);
  CHECK(listeners[0].handler_id == "h1");
  CHECK(listeners[1].handler_id == "h2");
  CHECK(listeners[0].registration_order < listeners[1].registration_order);

  CHECK_THROWS_AS(core.register_listener(w, EventType::Action, "h1"), DispatchError);
  CHECK_NOTHROW(core.register_listener(w, EventType::Paint, "h1"));
  CHECK_FALSE(core.unregister_listener(w, EventType::Action, "absent"));
  CHECK_THROWS_AS(core.register_listener(WidgetId{99}, EventType::Action, "x"), TreeError);

  CHECK(core.unregister_listener(w, EventType::Action, "h1"));
  CHECK(core.unregister_listener(w, EventType::Action, "h2"));
  std::vector<std::size_t> seen;
  core.add_hooks([&](const FireContext& c) { seen.push_back(c.listeners.size()); });
  const auto record = core.fire_event(w, EventType::Action);
  CHECK(record.handler_ids.empty());
  CHECK(seen == std::vector<std::size_t>{0});
}

TEST_CASE("fire_event invokes handlers in order between hooks") {
  DispatchCore core(three_buttons());
  std::vector<std::string> trace;
  core.register_listener(WidgetId{2}, EventType::Action, "h1",
                         [&](DispatchCore&, const HandlerInvocation&) { trace.push_back("h1"); });
  core.register_listener(WidgetId{2}, EventType::Action, "h2",
                         [&](DispatchCore&, const HandlerInvocation&) { trace.push_back("h2"); });
  core.add_hooks([&](const FireContext&) { trace.push_back("pre"); },
                 [&](const FireContext&, const DispatchRecord&) { trace.push_back("post"); });
  const auto record = core.fire_event(WidgetId{2}, EventType::Action);
  CHECK(record.handler_ids == std::vector<std::string>{"h1", "h2"});
  CHECK(trace == std::vector<std::string>{"pre", "h1", "h2", "post"});
}

TEST_CASE("snapshot semantics: unregistering during dispatch applies to the next fire") {
  DispatchCore core(three_buttons());
  const WidgetId w{3};
  core.register_listener(w, EventType::Action, "h1", [&](DispatchCore& c, const HandlerInvocation& inv) {
    c.unregister_listener(inv.widget, inv.type, "h2");
    c.register_listener(inv.widget, inv.type, "late");
  });
  int h2_calls = 0;
  core.register_listener(w, EventType::Action, "h2", [&](DispatchCore&, const HandlerInvocation&) { ++h2_calls; });
  const auto first = core.fire_event(w, EventType::Action);
  CHECK(first.handler_ids == std::vector<std::string>{"h1", "h2"});
  CHECK(h2_calls == 1);

  core.unregister_listener(w, EventType::Action, "late");
  core.unregister_listener(w, EventType::Action, "h1");
  core.register_listener(w, EventType::Action, "h1");
  const auto second = core.fire_event(w, EventType::Action);
  CHECK(second.handler_ids == std::vector<std::string>{"h1"});
  CHECK(h2_calls == 1);
}

TEST_CASE("handler exceptions are recorded and do not stop dispatch") {
  DispatchCore core(three_buttons());
  int ran = 0;
  core.register_listener(WidgetId{2}, EventType::Selection, "bad",
                         [](DispatchCore&, const HandlerInvocation&) { throw std::runtime_error("boom"); });
  core.register_listener(WidgetId{2}, EventType::Selection, "good",
                         [&](DispatchCore&, const HandlerInvocation&) { ++ran; });
  const auto record = core.fire_event(WidgetId{2}, EventType::Selection);
  CHECK(ran == 1);
  REQUIRE(record.failures.size() == 1);
  CHECK(record.failures[0] == HandlerFailure{"bad", "boom"});
  CHECK(record.handler_ids == std::vector<std::string>{"bad", "good"});
}

TEST_CASE("sequence numbers are gap-free") {
  DispatchCore core(three_buttons());
  for (int i = 0; i < 100; ++i) core.fire_event(WidgetId{4}, EventType::Paint);
  REQUIRE(core.log().size() == 100);
  for (std::size_t i = 0; i < 100; ++i) CHECK(core.log()[i].seq == i + 1);
  CHECK(core.fired_count() == 100);

  DispatchCore quiet(three_buttons(), DispatchOptions{false, false});
  quiet.fire_event(WidgetId{2}, EventType::Paint);
  CHECK(quiet.log().empty());
  CHECK(quiet.fired_count() == 1);
}

TEST_CASE("key actuation triple") {
  DispatchCore core(three_buttons());
  const auto records = core.synthesize_key_actuation(WidgetId{2}, 'a');
  REQUIRE(records.size() == 3);
  CHECK(records[0].type == EventType::KeyPressed);
  CHECK(records[1].type == EventType::KeyReleased);
  CHECK(records[2].type == EventType::KeyTyped);
  CHECK(records[1].seq == records[0].seq + 1);
  CHECK(records[2].seq == records[1].seq + 1);

  CHECK(core.type_text(WidgetId{2}, "").empty());
  CHECK(core.type_text(WidgetId{2}, "hi").size() == 6);

  std::vector<WidgetSpec> specs{spec(1, "W", std::nullopt, {0, 0, 5, 5})};
  specs[0].focusable = false;
  DispatchCore unfocusable(WidgetTree::build(specs));
  CHECK_THROWS_AS(unfocusable.synthesize_key_actuation(WidgetId{1}, 1), DispatchError);
}

TEST_CASE("hooks see every fire once, in order, with the invoked listener list") {
  const auto scenario = load_scenario(EVTRACE_TEST_DATA "/nested_tree.scn");
  auto core = build_core(scenario);
  std::vector<std::pair<WidgetId, EventType>> pre;
  std::vector<std::vector<std::string>> listed;
  core->add_hooks([&](const FireContext& c) {
    pre.emplace_back(c.widget.id, c.type);
    std::vector<std::string> ids;
    for (const auto& h : c.listeners) ids.push_back(h.handler_id);
    listed.push_back(std::move(ids));
  });
  std::mt19937_64 rng(3);
  const auto ids = core->tree().preorder();
  for (int i = 0; i < 2000; ++i) {
    const auto w = ids[rng() % ids.size()];
    const auto t = all_event_types()[rng() % all_event_types().size()];
    core->fire_event(w, t);
  }
  REQUIRE(pre.size() == core->log().size());
  for (std::size_t i = 0; i < pre.size(); ++i) {
    CHECK(pre[i].first == core->log()[i].widget);
    CHECK(pre[i].second == core->log()[i].type);
    CHECK(listed[i] == core->log()[i].handler_ids);
  }
}

TEST_CASE("active window follows show and hide") {
  const auto scenario = load_scenario(EVTRACE_TEST_DATA "/nested_tree.scn");
  auto core = build_core(scenario);
  CHECK_FALSE(core->active_window().has_value());
  core->open_window(WidgetId{1});
  CHECK(core->active_window() == WidgetId{1});
  core->open_window(WidgetId{20});
  CHECK(core->active_window() == WidgetId{20});
  core->close_window(WidgetId{20});
  CHECK(core->active_window() == WidgetId{1});
  CHECK_THROWS_AS(core->open_window(WidgetId{5}), DispatchError);
  const auto closed = core->close_window(WidgetId{1});
  CHECK(closed.type == EventType::WindowClosed);
  CHECK_FALSE(core->active_window().has_value());
}

TEST_CASE("thread affinity is enforced when checks are on") {
  DispatchCore core(three_buttons(), DispatchOptions{true, true});
  bool threw = false;
  std::thread other([&] {
    try {
      core.fire_event(WidgetId{2}, EventType::Paint);
    } catch (const ThreadAffinityError&) {
      threw = true;
    }
  });
  other.join();
  CHECK(threw);
  CHECK(core.fired_count() == 0);
  CHECK_NOTHROW(core.fire_event(WidgetId{2}, EventType::Paint));
}

TEST_CASE("render_screenshot") {
  SUBCASE("invisible window") {
    std::vector<WidgetSpec> specs{spec(1, "W", std::nullopt, {0, 0, 10, 10}, false)};
    CHECK_FALSE(render_screenshot(WidgetTree::build(specs), WidgetId{1}).has_value());
  }
  SUBCASE("size") {
    std::vector<WidgetSpec> specs{spec(1, "W", std::nullopt, {0, 0, 100, 50})};
    const auto shot = render_screenshot(WidgetTree::build(specs), WidgetId{1});
    REQUIRE(shot.has_value());
    CHECK(shot->width == 100);
    CHECK(shot->height == 50);
    CHECK(shot->pixels.size() == 100u * 50u * 4u);
  }
  SUBCASE("deterministic and equal to the per-pixel reference") {
    const auto scenario = load_scenario(EVTRACE_TEST_DATA "/nested_tree.scn");
    auto specs = scenario.widgets;
    for (auto& s : specs) {
      if (!s.parent) s.visible = true;
    }
    specs[9].visible = false;  // widget 10, hidden checkbox
    const auto tree = WidgetTree::build(specs);
    for (std::uint32_t window : {1u, 20u}) {
      const auto a = render_screenshot(tree, WidgetId{window});
      const auto b = render_screenshot(tree, WidgetId{window});
      REQUIRE(a.has_value());
      CHECK(*a == *b);
      CHECK(a->pixels == reference_render(specs, window));
    }
  }
  SUBCASE("clipping at the window edge and reuse of the buffer") {
    std::vector<WidgetSpec> specs{spec(1, "W", std::nullopt, {10, 10, 8, 8}),
                                  spec(2, "Overhang", 1, {14, 6, 20, 6})};
    const auto tree = WidgetTree::build(specs);
    Screenshot reused{64, 64, std::vector<std::uint8_t>(64 * 64 * 4, 0xAB)};
    REQUIRE(render_screenshot_into(tree, WidgetId{1}, reused));
    CHECK(reused.pixels == reference_render(specs, 1));
  }
}

TEST_CASE("render cost does not decrease with window area") {
  auto median_ns = [](int side) {
    std::vector<WidgetSpec> specs{spec(1, "W", std::nullopt, {0, 0, side, side}),
                                  spec(2, "P", 1, {0, 0, side / 2, side / 2})};
    const auto tree = WidgetTree::build(specs);
    std::vector<long long> times;
    for (int i = 0; i < 31; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      auto shot = render_screenshot(tree, WidgetId{1});
      const auto t1 = std::chrono::steady_clock::now();
      REQUIRE(shot.has_value());
      times.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
    }
    std::nth_element(times.begin(), times.begin() + 15, times.end());
    return times[15];
  };
  const auto small = median_ns(64);
  const auto medium = median_ns(256);
  const auto large = median_ns(1024);
  MESSAGE("median render ns: 64^2=" << small << " 256^2=" << medium << " 1024^2=" << large);
  CHECK(small <= medium);
  CHECK(medium <= large);
}
