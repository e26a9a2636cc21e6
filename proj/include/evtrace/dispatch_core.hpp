#pragma once

// Synthetic GUI toolkit: a widget tree, a per-widget listener table and an
// event-firing engine exposing pre/post fire hook points for instrumentation.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "evtrace/event_model.hpp"

namespace evtrace {

enum class WidgetId : std::uint32_t {};

constexpr std::uint32_t to_underlying(WidgetId id) noexcept { return static_cast<std::uint32_t>(id); }

class TreeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DispatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when the dispatch core is touched from a thread other than its
/// dispatch thread while thread checks are enabled.
class ThreadAffinityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct WidgetSpec {
  WidgetId id{};
  std::string class_name;
  std::optional<WidgetId> parent;
  Geometry geometry;
  bool visible = true;
  bool focusable = true;
};

struct Widget {
  WidgetId id{};
  std::string class_name;
  std::optional<WidgetId> parent;
  std::vector<WidgetId> children;
  Geometry geometry;
  bool visible = true;
  bool focusable = true;
  std::int32_t index_in_parent = -1;
};

class WidgetTree {
 public:
  WidgetTree() = default;

  /// Children are ordered by their position in `specs`. Parents may be
  /// declared after their children. Throws TreeError on duplicate ids,
  /// unknown parents and cycles.
  static WidgetTree build(std::span<const WidgetSpec> specs);

  bool contains(WidgetId id) const noexcept { return slot_.contains(id); }
  const Widget& at(WidgetId id) const;
  std::size_t size() const noexcept { return widgets_.size(); }

  std::span<const WidgetId> roots() const noexcept { return roots_; }
  WidgetId root_of(WidgetId id) const;

  /// Roots in declaration order, each followed by its subtree depth-first.
  std::vector<WidgetId> preorder() const;

  void set_visible(WidgetId id, bool visible);

 private:
  Widget& mutable_at(WidgetId id);

  std::vector<Widget> widgets_;
  std::unordered_map<WidgetId, std::size_t> slot_;
  std::vector<WidgetId> roots_;
};

/// Deterministic rasterization of a window and its visible descendants.
/// Each widget fills its geometry (translated to window coordinates and
/// clipped) with a color hashed from its id; children paint over parents.
/// Returns nullopt when the window is not visible.
std::optional<Screenshot> render_screenshot(const WidgetTree& tree, WidgetId window);

/// Same, rendering into `out` so its pixel buffer can be reused. The window
/// fill covers every pixel. Returns false, leaving `out` untouched, when the
/// window is not visible.
bool render_screenshot_into(const WidgetTree& tree, WidgetId window, Screenshot& out);

/// The fill color used for a widget, as packed RGBA bytes.
std::array<std::uint8_t, 4> widget_color(WidgetId id) noexcept;

struct EventPayload {
  std::uint32_t key_code = 0;
  std::string detail;
};

class DispatchCore;

struct HandlerInvocation {
  WidgetId widget{};
  EventType type{};
  const EventPayload& payload;
};

using Handler = std::function<void(DispatchCore&, const HandlerInvocation&)>;

/// (widget, event type) -> handlers in registration order.
class DispatchTable {
 public:
  /// Throws DispatchError if handler_id is already registered for the key.
  HandlerRef add(WidgetId widget, EventType type, std::string handler_id, Handler fn = {});
  bool remove(WidgetId widget, EventType type, std::string_view handler_id);

  /// Empty span for unregistered keys.
  std::span<const HandlerRef> listeners(WidgetId widget, EventType type) const noexcept;
  std::span<const Handler> handlers(WidgetId widget, EventType type) const noexcept;

  std::size_t total_registrations() const noexcept { return next_order_; }

 private:
  struct Key {
    WidgetId widget;
    EventType type;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      return (std::size_t{to_underlying(k.widget)} << 8) ^ static_cast<std::size_t>(k.type);
    }
  };
  struct Slot {
    std::vector<HandlerRef> refs;
    std::vector<Handler> fns;
  };

  std::unordered_map<Key, Slot, KeyHash> entries_;
  std::uint32_t next_order_ = 0;
};

struct HandlerFailure {
  std::string handler_id;
  std::string message;

  friend bool operator==(const HandlerFailure&, const HandlerFailure&) = default;
};

struct DispatchRecord {
  std::uint64_t seq = 0;
  WidgetId widget{};
  EventType type{};
  std::vector<std::string> handler_ids;  // invoked, in order
  std::vector<HandlerFailure> failures;

  friend bool operator==(const DispatchRecord&, const DispatchRecord&) = default;
};

/// What hooks see for one fire. `listeners` is the exact snapshot that
/// dispatch is about to invoke.
struct FireContext {
  const Widget& widget;
  EventType type;
  std::span<const HandlerRef> listeners;
  const EventPayload& payload;
};

using PreFireHook = std::function<void(const FireContext&)>;
using PostFireHook = std::function<void(const FireContext&, const DispatchRecord&)>;

enum class HookId : std::uint32_t {};

struct DispatchOptions {
  bool keep_log = true;
#ifdef NDEBUG
  bool thread_checks = false;
#else
  bool thread_checks = true;
#endif
};

/// Single-threaded dispatch engine. All mutation and firing must happen on
/// the dispatch thread (the constructing thread, or the one passed to
/// bind_dispatch_thread).
class DispatchCore {
 public:
  explicit DispatchCore(WidgetTree tree, DispatchOptions options = {});

  DispatchCore(const DispatchCore&) = delete;
  DispatchCore& operator=(const DispatchCore&) = delete;

  const WidgetTree& tree() const noexcept { return tree_; }
  const DispatchTable& table() const noexcept { return table_; }

  HandlerRef register_listener(WidgetId widget, EventType type, std::string handler_id,
                               Handler fn = {});
  bool unregister_listener(WidgetId widget, EventType type, std::string_view handler_id);

  /// Runs pre-fire hooks, the handlers registered at the time of the call
  /// (snapshot), then post-fire hooks. Handler exceptions are recorded on
  /// the returned record and do not stop the remaining handlers.
  DispatchRecord fire_event(WidgetId widget, EventType type, const EventPayload& payload = {});

  /// KEY_PRESSED, KEY_RELEASED, KEY_TYPED as three separate fires.
  std::vector<DispatchRecord> synthesize_key_actuation(WidgetId widget, std::uint32_t key_code);

  /// One key actuation per byte of `text`.
  std::vector<DispatchRecord> type_text(WidgetId widget, std::string_view text);

  /// Marks the window visible and active, then fires WINDOW_OPENED on it.
  DispatchRecord open_window(WidgetId window);
  /// Fires WINDOW_CLOSED on the window, then hides it.
  DispatchRecord close_window(WidgetId window);
  void set_window_visible(WidgetId window, bool visible);

  /// The most recently shown root window that is still visible.
  std::optional<WidgetId> active_window() const;

  HookId add_hooks(PreFireHook pre, PostFireHook post = {});
  void remove_hooks(HookId id);

  /// Claims the single instrumentation slot. Throws DispatchError if an
  /// agent is already attached.
  void attach_instrumentation();
  void detach_instrumentation() noexcept;
  bool instrumented() const noexcept { return instrumented_; }

  std::span<const DispatchRecord> log() const noexcept { return log_; }
  std::uint64_t fired_count() const noexcept { return next_seq_ - 1; }

  void bind_dispatch_thread(std::thread::id id = std::this_thread::get_id()) noexcept {
    dispatch_thread_ = id;
  }

 private:
  void check_thread(const char* operation) const;
  void require_root(WidgetId window, const char* operation) const;

  struct HookEntry {
    HookId id;
    PreFireHook pre;
    PostFireHook post;
  };

  WidgetTree tree_;
  DispatchTable table_;
  DispatchOptions options_;
  std::vector<HookEntry> hooks_;
  std::uint32_t next_hook_id_ = 1;
  std::vector<DispatchRecord> log_;
  std::uint64_t next_seq_ = 1;
  std::vector<WidgetId> window_stack_;  // visible roots, most recently shown last
  bool instrumented_ = false;
  std::thread::id dispatch_thread_;
};

}  // namespace evtrace
