#pragma once

// Scripted interaction scenarios. See docs/scenario-format.md for the
// schema; scenarios/ holds the shipped workloads.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "evtrace/dispatch_core.hpp"
#include "evtrace/event_model.hpp"

namespace evtrace {

class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct HandlerDecl {
  WidgetId widget{};
  EventType type{};
  std::string handler_id;

  friend bool operator==(const HandlerDecl&, const HandlerDecl&) = default;
};

enum class ActionKind {
  Fire,        // type, count
  Click,       // MOUSE_CLICKED then ACTION, count times
  Select,      // SELECTION, count times
  Type,        // one key triple per byte of text
  Key,         // key_code, count triples
  Show,
  Hide,
  Register,
  Unregister,
  Repeat,      // count, body
};

struct Action {
  ActionKind kind = ActionKind::Fire;
  WidgetId target{};
  EventType type{};
  std::uint64_t count = 1;
  std::uint32_t key_code = 0;
  std::string text;
  std::string handler_id;
  std::vector<Action> body;
  std::size_t line = 0;

  friend bool operator==(const Action&, const Action&) = default;
};

struct Scenario {
  std::string name;
  std::vector<WidgetSpec> widgets;
  std::vector<HandlerDecl> handlers;
  std::vector<Action> script;
};

Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

/// Fresh core with the scenario's tree built and its handlers registered.
/// Windows start hidden unless declared visible.
std::unique_ptr<DispatchCore> build_core(const Scenario& scenario, DispatchOptions options = {});

/// Executes the action script on the calling (dispatch) thread.
void run_actions(const Scenario& scenario, DispatchCore& core);

struct ScenarioCounts {
  std::uint64_t total = 0;
  std::uint64_t handled = 0;
  /// Fired while no window was visible.
  std::uint64_t pre_visible = 0;
  std::uint64_t handled_pre_visible = 0;
  std::uint64_t key_pressed = 0;

  friend bool operator==(const ScenarioCounts&, const ScenarioCounts&) = default;
};

/// Replays the scenario on a fresh core without an agent.
ScenarioCounts count_events(const Scenario& scenario);

}  // namespace evtrace
