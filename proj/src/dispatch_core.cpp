#include "evtrace/dispatch_core.hpp"

#include <algorithm>
#include <cstring>
#include <exception>
#include <sstream>

namespace evtrace {

namespace {

std::string describe(WidgetId id) { return "widget " + std::to_string(to_underlying(id)); }

}  // namespace

// --- WidgetTree -------------------------------------------------------------

WidgetTree WidgetTree::build(std::span<const WidgetSpec> specs) {
  WidgetTree tree;
  tree.widgets_.reserve(specs.size());
  for (const auto& spec : specs) {
    if (tree.slot_.contains(spec.id)) {
      throw TreeError("duplicate " + describe(spec.id));
    }
    if (spec.class_name.empty()) {
      throw TreeError(describe(spec.id) + " has an empty class name");
    }
    if (spec.geometry.width < 1 || spec.geometry.height < 1) {
      throw TreeError(describe(spec.id) + " has non-positive size");
    }
    tree.slot_.emplace(spec.id, tree.widgets_.size());
    Widget w;
    w.id = spec.id;
    w.class_name = spec.class_name;
    w.parent = spec.parent;
    w.geometry = spec.geometry;
    w.visible = spec.visible;
    w.focusable = spec.focusable;
    tree.widgets_.push_back(std::move(w));
  }

  for (auto& w : tree.widgets_) {
    if (!w.parent) {
      tree.roots_.push_back(w.id);
      continue;
    }
    if (*w.parent == w.id) throw TreeError(describe(w.id) + " is its own parent (cycle)");
    if (!tree.slot_.contains(*w.parent)) {
      throw TreeError(describe(w.id) + " names unknown parent " +
                      std::to_string(to_underlying(*w.parent)));
    }
  }

  // Walk each parent chain; a chain longer than the widget count is a cycle.
  for (const auto& w : tree.widgets_) {
    auto cursor = w.parent;
    std::size_t steps = 0;
    while (cursor) {
      if (++steps > tree.widgets_.size()) {
        throw TreeError("cycle in widget tree through " + describe(w.id));
      }
      cursor = tree.widgets_[tree.slot_.at(*cursor)].parent;
    }
  }

  for (auto& w : tree.widgets_) {
    if (!w.parent) continue;
    auto& parent = tree.widgets_[tree.slot_.at(*w.parent)];
    w.index_in_parent = static_cast<std::int32_t>(parent.children.size());
    parent.children.push_back(w.id);
  }
  return tree;
}

const Widget& WidgetTree::at(WidgetId id) const {
  const auto it = slot_.find(id);
  if (it == slot_.end()) throw TreeError("unknown " + describe(id));
  return widgets_[it->second];
}

Widget& WidgetTree::mutable_at(WidgetId id) { return const_cast<Widget&>(std::as_const(*this).at(id)); }

WidgetId WidgetTree::root_of(WidgetId id) const {
  const Widget* w = &at(id);
  while (w->parent) w = &at(*w->parent);
  return w->id;
}

std::vector<WidgetId> WidgetTree::preorder() const {
  std::vector<WidgetId> order;
  order.reserve(widgets_.size());
  std::vector<WidgetId> stack(roots_.rbegin(), roots_.rend());
  while (!stack.empty()) {
    const auto id = stack.back();
    stack.pop_back();
    order.push_back(id);
    const auto& children = at(id).children;
    stack.insert(stack.end(), children.rbegin(), children.rend());
  }
  return order;
}

void WidgetTree::set_visible(WidgetId id, bool visible) { mutable_at(id).visible = visible; }

// --- Rendering ----------------------------------------------------------------

std::array<std::uint8_t, 4> widget_color(WidgetId id) noexcept {
  // splitmix64 finalizer
  std::uint64_t z = std::uint64_t{to_underlying(id)} + 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  z ^= z >> 31;
  return {static_cast<std::uint8_t>(z), static_cast<std::uint8_t>(z >> 8),
          static_cast<std::uint8_t>(z >> 16), 0xFF};
}

namespace {

void fill_rect(Screenshot& shot, std::int64_t x0, std::int64_t y0, std::int64_t w, std::int64_t h,
               std::array<std::uint8_t, 4> color) {
  const std::int64_t left = std::max<std::int64_t>(x0, 0);
  const std::int64_t top = std::max<std::int64_t>(y0, 0);
  const std::int64_t right = std::min<std::int64_t>(x0 + w, shot.width);
  const std::int64_t bottom = std::min<std::int64_t>(y0 + h, shot.height);
  if (left >= right || top >= bottom) return;

  const auto row_bytes = static_cast<std::size_t>(right - left) * 4;
  const auto stride = static_cast<std::size_t>(shot.width) * 4;
  std::uint8_t* first = shot.pixels.data() + static_cast<std::size_t>(top) * stride +
                        static_cast<std::size_t>(left) * 4;
  for (std::size_t i = 0; i < row_bytes; i += 4) std::memcpy(first + i, color.data(), 4);
  for (std::int64_t y = top + 1; y < bottom; ++y) {
    std::memcpy(first + static_cast<std::size_t>(y - top) * stride, first, row_bytes);
  }
}

}  // namespace

bool render_screenshot_into(const WidgetTree& tree, WidgetId window, Screenshot& shot) {
  const Widget& win = tree.at(window);
  if (!win.visible) return false;

  shot.width = static_cast<std::uint32_t>(win.geometry.width);
  shot.height = static_cast<std::uint32_t>(win.geometry.height);
  shot.pixels.resize(std::size_t{shot.width} * shot.height * 4);

  const std::int64_t origin_x = win.geometry.x;
  const std::int64_t origin_y = win.geometry.y;
  std::vector<WidgetId> stack{window};
  while (!stack.empty()) {
    const Widget& w = tree.at(stack.back());
    stack.pop_back();
    if (!w.visible) continue;
    fill_rect(shot, w.geometry.x - origin_x, w.geometry.y - origin_y, w.geometry.width,
              w.geometry.height, widget_color(w.id));
    stack.insert(stack.end(), w.children.rbegin(), w.children.rend());
  }
  return true;
}

std::optional<Screenshot> render_screenshot(const WidgetTree& tree, WidgetId window) {
  Screenshot shot;
  if (!render_screenshot_into(tree, window, shot)) return std::nullopt;
  return shot;
}

// --- DispatchTable ------------------------------------------------------------

HandlerRef DispatchTable::add(WidgetId widget, EventType type, std::string handler_id, Handler fn) {
  auto& slot = entries_[Key{widget, type}];
  const bool duplicate = std::any_of(slot.refs.begin(), slot.refs.end(),
                                     [&](const HandlerRef& h) { return h.handler_id == handler_id; });
  if (duplicate) {
    throw DispatchError("handler '" + handler_id + "' already registered for " + describe(widget) +
                        " / " + std::string(to_string(type)));
  }
  HandlerRef ref{std::move(handler_id), next_order_++};
  slot.refs.push_back(ref);
  slot.fns.push_back(std::move(fn));
  return ref;
}

bool DispatchTable::remove(WidgetId widget, EventType type, std::string_view handler_id) {
  const auto it = entries_.find(Key{widget, type});
  if (it == entries_.end()) return false;
  auto& slot = it->second;
  for (std::size_t i = 0; i < slot.refs.size(); ++i) {
    if (slot.refs[i].handler_id == handler_id) {
      slot.refs.erase(slot.refs.begin() + static_cast<std::ptrdiff_t>(i));
      slot.fns.erase(slot.fns.begin() + static_cast<std::ptrdiff_t>(i));
      if (slot.refs.empty()) entries_.erase(it);
      return true;
    }
  }
  return false;
}

std::span<const HandlerRef> DispatchTable::listeners(WidgetId widget, EventType type) const noexcept {
  const auto it = entries_.find(Key{widget, type});
  if (it == entries_.end()) return {};
  return it->second.refs;
}

std::span<const Handler> DispatchTable::handlers(WidgetId widget, EventType type) const noexcept {
  const auto it = entries_.find(Key{widget, type});
  if (it == entries_.end()) return {};
  return it->second.fns;
}

// --- DispatchCore -------------------------------------------------------------

DispatchCore::DispatchCore(WidgetTree tree, DispatchOptions options)
    : tree_(std::move(tree)), options_(options), dispatch_thread_(std::this_thread::get_id()) {
  for (WidgetId root : tree_.roots()) {
    if (tree_.at(root).visible) window_stack_.push_back(root);
  }
}

void DispatchCore::check_thread(const char* operation) const {
  if (options_.thread_checks && std::this_thread::get_id() != dispatch_thread_) {
    throw ThreadAffinityError(std::string(operation) + " called off the dispatch thread");
  }
}

void DispatchCore::require_root(WidgetId window, const char* operation) const {
  if (tree_.at(window).parent) {
    throw DispatchError(std::string(operation) + ": " + describe(window) + " is not a window");
  }
}

HandlerRef DispatchCore::register_listener(WidgetId widget, EventType type, std::string handler_id,
                                           Handler fn) {
  check_thread("register_listener");
  (void)tree_.at(widget);
  return table_.add(widget, type, std::move(handler_id), std::move(fn));
}

bool DispatchCore::unregister_listener(WidgetId widget, EventType type, std::string_view handler_id) {
  check_thread("unregister_listener");
  (void)tree_.at(widget);
  return table_.remove(widget, type, handler_id);
}

DispatchRecord DispatchCore::fire_event(WidgetId widget_id, EventType type, const EventPayload& payload) {
  check_thread("fire_event");
  const Widget& widget = tree_.at(widget_id);

  DispatchRecord record;
  record.seq = next_seq_++;
  record.widget = widget_id;
  record.type = type;

  // Snapshot: handlers may (un)register listeners while we iterate.
  const auto live_refs = table_.listeners(widget_id, type);
  std::vector<HandlerRef> refs(live_refs.begin(), live_refs.end());
  std::vector<Handler> fns;
  if (!refs.empty()) {
    const auto live_fns = table_.handlers(widget_id, type);
    fns.assign(live_fns.begin(), live_fns.end());
  }

  const FireContext context{widget, type, refs, payload};
  for (const auto& hook : hooks_) {
    if (hook.pre) hook.pre(context);
  }

  const HandlerInvocation invocation{widget_id, type, payload};
  record.handler_ids.reserve(refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) {
    record.handler_ids.push_back(refs[i].handler_id);
    if (!fns[i]) continue;
    try {
      fns[i](*this, invocation);
    } catch (const std::exception& e) {
      record.failures.push_back({refs[i].handler_id, e.what()});
    } catch (...) {
      record.failures.push_back({refs[i].handler_id, "unknown exception"});
    }
  }

  for (const auto& hook : hooks_) {
    if (hook.post) hook.post(context, record);
  }
  if (options_.keep_log) log_.push_back(record);
  return record;
}

std::vector<DispatchRecord> DispatchCore::synthesize_key_actuation(WidgetId widget, std::uint32_t key_code) {
  if (!tree_.at(widget).focusable) {
    throw DispatchError("key actuation on non-focusable " + describe(widget));
  }
  EventPayload payload{key_code, {}};
  std::vector<DispatchRecord> records;
  records.reserve(3);
  for (EventType type : {EventType::KeyPressed, EventType::KeyReleased, EventType::KeyTyped}) {
    records.push_back(fire_event(widget, type, payload));
  }
  return records;
}

std::vector<DispatchRecord> DispatchCore::type_text(WidgetId widget, std::string_view text) {
  std::vector<DispatchRecord> records;
  records.reserve(text.size() * 3);
  for (unsigned char c : text) {
    auto triple = synthesize_key_actuation(widget, c);
    std::move(triple.begin(), triple.end(), std::back_inserter(records));
  }
  return records;
}

void DispatchCore::set_window_visible(WidgetId window, bool visible) {
  check_thread("set_window_visible");
  require_root(window, "set_window_visible");
  tree_.set_visible(window, visible);
  std::erase(window_stack_, window);
  if (visible) window_stack_.push_back(window);
}

DispatchRecord DispatchCore::open_window(WidgetId window) {
  set_window_visible(window, true);
  return fire_event(window, EventType::WindowOpened);
}

DispatchRecord DispatchCore::close_window(WidgetId window) {
  require_root(window, "close_window");
  auto record = fire_event(window, EventType::WindowClosed);
  set_window_visible(window, false);
  return record;
}

std::optional<WidgetId> DispatchCore::active_window() const {
  if (window_stack_.empty()) return std::nullopt;
  return window_stack_.back();
}

HookId DispatchCore::add_hooks(PreFireHook pre, PostFireHook post) {
  check_thread("add_hooks");
  const HookId id{next_hook_id_++};
  hooks_.push_back({id, std::move(pre), std::move(post)});
  return id;
}

void DispatchCore::remove_hooks(HookId id) {
  check_thread("remove_hooks");
  std::erase_if(hooks_, [id](const HookEntry& h) { return h.id == id; });
}

void DispatchCore::attach_instrumentation() {
  if (instrumented_) throw DispatchError("an agent is already installed on this dispatch core");
  instrumented_ = true;
}

void DispatchCore::detach_instrumentation() noexcept { instrumented_ = false; }

}  // namespace evtrace
