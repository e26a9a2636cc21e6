#include "evtrace/scenario.hpp"

#include <fstream>
#include <sstream>

#include "text_util.hpp"

namespace evtrace {

namespace {

using detail::parse_int;

struct Line {
  std::size_t number = 0;
  std::vector<std::string> tokens;
};

std::vector<std::string> tokenize(std::string_view text, std::size_t line) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
    } else if (c == '#') {
      break;
    } else if (c == '"') {
      std::string token;
      ++i;
      bool closed = false;
      while (i < text.size()) {
        if (text[i] == '\\' && i + 1 < text.size()) {
          token.push_back(text[i + 1]);
          i += 2;
        } else if (text[i] == '"') {
          closed = true;
          ++i;
          break;
        } else {
          token.push_back(text[i++]);
        }
      }
      if (!closed) throw ScenarioError(line, "unterminated string");
      tokens.push_back(std::move(token));
    } else {
      const auto start = i;
      while (i < text.size() && text[i] != ' ' && text[i] != '\t' && text[i] != '\r') ++i;
      tokens.emplace_back(text.substr(start, i - start));
    }
  }
  return tokens;
}

class Parser {
 public:
  explicit Parser(std::string_view text) {
    std::size_t number = 0;
    for (auto raw : detail::split(text, '\n')) {
      ++number;
      auto tokens = tokenize(raw, number);
      if (!tokens.empty()) lines_.push_back({number, std::move(tokens)});
    }
  }

  Scenario parse() {
    Scenario scenario;
    bool actions_started = false;
    while (pos_ < lines_.size()) {
      const Line& line = lines_[pos_];
      const std::string& keyword = line.tokens[0];
      if (keyword == "scenario") {
        arity(line, 2, 2);
        if (!scenario.name.empty()) fail(line, "duplicate scenario name");
        scenario.name = line.tokens[1];
        ++pos_;
      } else if (keyword == "window" || keyword == "widget" || keyword == "handler") {
        if (actions_started) fail(line, "'" + keyword + "' must precede the first action");
        if (keyword == "handler") {
          arity(line, 4, 4);
          scenario.handlers.push_back(
              {widget_id(line, 1), event_type(line, 2), line.tokens[3]});
        } else {
          scenario.widgets.push_back(widget_spec(line, keyword == "window"));
        }
        ++pos_;
      } else {
        actions_started = true;
        scenario.script.push_back(action());
      }
    }
    if (scenario.name.empty()) throw ScenarioError(1, "missing 'scenario <name>' line");
    return scenario;
  }

 private:
  [[noreturn]] static void fail(const Line& line, const std::string& what) {
    throw ScenarioError(line.number, what);
  }

  static void arity(const Line& line, std::size_t min, std::size_t max) {
    const auto n = line.tokens.size();
    if (n < min || n > max) {
      fail(line, "'" + line.tokens[0] + "' takes " +
                     (min == max ? std::to_string(min - 1)
                                 : std::to_string(min - 1) + ".." + std::to_string(max - 1)) +
                     " arguments, got " + std::to_string(n - 1));
    }
  }

  template <typename Int>
  static Int integer(const Line& line, std::size_t i, const char* what) {
    const auto value = parse_int<Int>(line.tokens[i]);
    if (!value) fail(line, std::string("bad ") + what + " '" + line.tokens[i] + "'");
    return *value;
  }

  static WidgetId widget_id(const Line& line, std::size_t i) {
    return WidgetId{integer<std::uint32_t>(line, i, "widget id")};
  }

  static EventType event_type(const Line& line, std::size_t i) {
    const auto type = try_parse_event_type(line.tokens[i]);
    if (!type) fail(line, "unknown event type '" + line.tokens[i] + "'");
    return *type;
  }

  static std::uint64_t count(const Line& line, std::size_t i) {
    if (i >= line.tokens.size()) return 1;
    return integer<std::uint64_t>(line, i, "count");
  }

  static WidgetSpec widget_spec(const Line& line, bool is_window) {
    const std::size_t first = is_window ? 2 : 3;
    if (line.tokens.size() < first + 5) fail(line, "'" + line.tokens[0] + "' is missing fields");
    WidgetSpec spec;
    spec.id = widget_id(line, 1);
    if (!is_window) spec.parent = widget_id(line, 2);
    spec.class_name = line.tokens[first];
    spec.geometry.x = integer<std::int32_t>(line, first + 1, "x");
    spec.geometry.y = integer<std::int32_t>(line, first + 2, "y");
    spec.geometry.width = integer<std::int32_t>(line, first + 3, "width");
    spec.geometry.height = integer<std::int32_t>(line, first + 4, "height");
    if (spec.geometry.width < 1 || spec.geometry.height < 1) fail(line, "width and height must be >= 1");
    spec.visible = !is_window;
    spec.focusable = false;
    for (std::size_t i = first + 5; i < line.tokens.size(); ++i) {
      const auto& flag = line.tokens[i];
      if (flag == "focusable") {
        spec.focusable = true;
      } else if (flag == "hidden" && !is_window) {
        spec.visible = false;
      } else if (flag == "visible" && is_window) {
        spec.visible = true;
      } else {
        fail(line, "unknown flag '" + flag + "'");
      }
    }
    return spec;
  }

  Action action() {
    const Line& line = lines_[pos_++];
    const std::string& keyword = line.tokens[0];
    Action a;
    a.line = line.number;
    if (keyword == "fire") {
      arity(line, 3, 4);
      a.kind = ActionKind::Fire;
      a.target = widget_id(line, 1);
      a.type = event_type(line, 2);
      a.count = count(line, 3);
    } else if (keyword == "click" || keyword == "select") {
      arity(line, 2, 3);
      a.kind = keyword == "click" ? ActionKind::Click : ActionKind::Select;
      a.target = widget_id(line, 1);
      a.count = count(line, 2);
    } else if (keyword == "type") {
      arity(line, 3, 3);
      a.kind = ActionKind::Type;
      a.target = widget_id(line, 1);
      a.text = line.tokens[2];
    } else if (keyword == "key") {
      arity(line, 3, 4);
      a.kind = ActionKind::Key;
      a.target = widget_id(line, 1);
      a.key_code = integer<std::uint32_t>(line, 2, "key code");
      a.count = count(line, 3);
    } else if (keyword == "show" || keyword == "hide") {
      arity(line, 2, 2);
      a.kind = keyword == "show" ? ActionKind::Show : ActionKind::Hide;
      a.target = widget_id(line, 1);
    } else if (keyword == "register" || keyword == "unregister") {
      arity(line, 4, 4);
      a.kind = keyword == "register" ? ActionKind::Register : ActionKind::Unregister;
      a.target = widget_id(line, 1);
      a.type = event_type(line, 2);
      a.handler_id = line.tokens[3];
    } else if (keyword == "repeat") {
      arity(line, 2, 2);
      a.kind = ActionKind::Repeat;
      a.count = integer<std::uint64_t>(line, 1, "repeat count");
      while (true) {
        if (pos_ >= lines_.size()) fail(line, "'repeat' without matching 'end'");
        if (lines_[pos_].tokens[0] == "end") {
          arity(lines_[pos_], 1, 1);
          ++pos_;
          break;
        }
        a.body.push_back(action());
      }
    } else if (keyword == "end") {
      fail(line, "'end' without matching 'repeat'");
    } else if (keyword == "scenario" || keyword == "window" || keyword == "widget" ||
               keyword == "handler") {
      fail(line, "'" + keyword + "' must precede the first action");
    } else {
      fail(line, "unknown keyword '" + keyword + "'");
    }
    return a;
  }

  std::vector<Line> lines_;
  std::size_t pos_ = 0;
};

void check_targets(const WidgetTree& tree, const std::vector<Action>& actions) {
  for (const auto& a : actions) {
    if (a.kind == ActionKind::Repeat) {
      check_targets(tree, a.body);
      continue;
    }
    if (!tree.contains(a.target)) {
      throw ScenarioError(a.line, "unknown widget " + std::to_string(to_underlying(a.target)));
    }
    const Widget& w = tree.at(a.target);
    if ((a.kind == ActionKind::Show || a.kind == ActionKind::Hide) && w.parent) {
      throw ScenarioError(a.line, "widget " + std::to_string(to_underlying(a.target)) +
                                      " is not a window");
    }
    if ((a.kind == ActionKind::Type || a.kind == ActionKind::Key) && !w.focusable) {
      throw ScenarioError(a.line, "widget " + std::to_string(to_underlying(a.target)) +
                                      " is not focusable");
    }
  }
}

void execute(const std::vector<Action>& actions, DispatchCore& core) {
  for (const auto& a : actions) {
    switch (a.kind) {
      case ActionKind::Fire:
        for (std::uint64_t i = 0; i < a.count; ++i) core.fire_event(a.target, a.type);
        break;
      case ActionKind::Click:
        for (std::uint64_t i = 0; i < a.count; ++i) {
          core.fire_event(a.target, EventType::MouseClicked);
          core.fire_event(a.target, EventType::Action);
        }
        break;
      case ActionKind::Select:
        for (std::uint64_t i = 0; i < a.count; ++i) core.fire_event(a.target, EventType::Selection);
        break;
      case ActionKind::Type:
        core.type_text(a.target, a.text);
        break;
      case ActionKind::Key:
        for (std::uint64_t i = 0; i < a.count; ++i) core.synthesize_key_actuation(a.target, a.key_code);
        break;
      case ActionKind::Show:
        core.open_window(a.target);
        break;
      case ActionKind::Hide:
        core.close_window(a.target);
        break;
      case ActionKind::Register:
        core.register_listener(a.target, a.type, a.handler_id);
        break;
      case ActionKind::Unregister:
        core.unregister_listener(a.target, a.type, a.handler_id);
        break;
      case ActionKind::Repeat:
        for (std::uint64_t i = 0; i < a.count; ++i) execute(a.body, core);
        break;
    }
  }
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  return Parser(text).parse();
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_scenario(buffer.str());
  } catch (const ScenarioError& e) {
    throw ScenarioError(e.line(), path.string() + ": " + e.what());
  }
}

std::unique_ptr<DispatchCore> build_core(const Scenario& scenario, DispatchOptions options) {
  WidgetTree tree;
  try {
    tree = WidgetTree::build(scenario.widgets);
  } catch (const TreeError& e) {
    throw ScenarioError(0, std::string("bad widget tree: ") + e.what());
  }
  check_targets(tree, scenario.script);
  auto core = std::make_unique<DispatchCore>(std::move(tree), options);
  for (const auto& h : scenario.handlers) {
    try {
      core->register_listener(h.widget, h.type, h.handler_id);
    } catch (const std::exception& e) {
      throw ScenarioError(0, "bad handler '" + h.handler_id + "': " + e.what());
    }
  }
  return core;
}

void run_actions(const Scenario& scenario, DispatchCore& core) {
  execute(scenario.script, core);
}

ScenarioCounts count_events(const Scenario& scenario) {
  DispatchOptions options;
  options.keep_log = false;
  auto core = build_core(scenario, options);
  ScenarioCounts counts;
  core->add_hooks([&](const FireContext& fire) {
    const bool handled = !fire.listeners.empty();
    const bool pre_visible = !core->active_window().has_value();
    ++counts.total;
    counts.handled += handled;
    counts.pre_visible += pre_visible;
    counts.handled_pre_visible += handled && pre_visible;
    counts.key_pressed += fire.type == EventType::KeyPressed;
  });
  run_actions(scenario, *core);
  return counts;
}

}  // namespace evtrace
