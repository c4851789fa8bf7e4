#pragma once

#include <coroutine>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace at2::sm {

// Cooperative single-threaded scheduler for shared-memory executions.
// A process is a coroutine; every access to a shared object suspends it, and
// the scheduler decides which process performs its access next. One step()
// therefore equals one atomic shared-memory access plus the local computation
// that follows it, which is exactly the interleaving granularity the
// wait-free arguments are stated at. No OS threads anywhere.
namespace detail {

struct PromiseBase {
  std::coroutine_handle<> continuation;
  std::exception_ptr error;

  std::suspend_always initial_suspend() noexcept { return {}; }
  struct FinalAwaiter {
    bool await_ready() noexcept { return false; }
    template <typename P>
    std::coroutine_handle<> await_suspend(std::coroutine_handle<P> h) noexcept {
      auto c = h.promise().continuation;
      return c ? c : std::noop_coroutine();
    }
    void await_resume() noexcept {}
  };
  FinalAwaiter final_suspend() noexcept { return {}; }
  void unhandled_exception() { error = std::current_exception(); }
};

}  // namespace detail

// Lazily started coroutine task. Awaiting a Task transfers control into the
// callee so that nested calls cost no scheduler steps of their own; the
// callee's shared accesses are charged to the same process.
template <typename T = void>
class [[nodiscard]] Task {
 public:
  struct promise_type : detail::PromiseBase {
    std::optional<T> value;
    Task get_return_object() {
      return Task(std::coroutine_handle<promise_type>::from_promise(*this));
    }
    void return_value(T v) { value = std::move(v); }
  };

  Task(Task&& o) noexcept : h_(std::exchange(o.h_, {})) {}
  Task(const Task&) = delete;
  Task& operator=(const Task&) = delete;
  ~Task() {
    if (h_) h_.destroy();
  }

  bool await_ready() const noexcept { return false; }
  std::coroutine_handle<> await_suspend(std::coroutine_handle<> parent) noexcept {
    h_.promise().continuation = parent;
    return h_;
  }
  T await_resume() {
    if (h_.promise().error) std::rethrow_exception(h_.promise().error);
    return std::move(*h_.promise().value);
  }

  std::coroutine_handle<promise_type> handle() const { return h_; }

 private:
  explicit Task(std::coroutine_handle<promise_type> h) : h_(h) {}
  std::coroutine_handle<promise_type> h_;
};

template <>
class [[nodiscard]] Task<void> {
 public:
  struct promise_type : detail::PromiseBase {
    Task get_return_object() {
      return Task(std::coroutine_handle<promise_type>::from_promise(*this));
    }
    void return_void() {}
  };

  Task(Task&& o) noexcept : h_(std::exchange(o.h_, {})) {}
  Task(const Task&) = delete;
  Task& operator=(const Task&) = delete;
  ~Task() {
    if (h_) h_.destroy();
  }

  bool await_ready() const noexcept { return false; }
  std::coroutine_handle<> await_suspend(std::coroutine_handle<> parent) noexcept {
    h_.promise().continuation = parent;
    return h_;
  }
  void await_resume() {
    if (h_.promise().error) std::rethrow_exception(h_.promise().error);
  }

  std::coroutine_handle<promise_type> handle() const { return h_; }

 private:
  explicit Task(std::coroutine_handle<promise_type> h) : h_(h) {}
  std::coroutine_handle<promise_type> h_;
};

class Scheduler {
 public:
  using ProcIndex = std::uint32_t;
  static constexpr ProcIndex kNone = 0xffffffff;

  ProcIndex spawn(Task<void> body) {
    const auto idx = static_cast<ProcIndex>(slots_.size());
    slots_.push_back(Slot{std::move(body)});
    auto h = slots_.back().body.handle();
    slots_.back().pending = [h] { h.resume(); };  // first step starts the body
    return idx;
  }

  std::size_t process_count() const { return slots_.size(); }

  bool finished(ProcIndex p) const { return slots_.at(p).body.handle().done(); }
  bool paused(ProcIndex p) const { return slots_.at(p).paused; }
  void set_paused(ProcIndex p, bool v) { slots_.at(p).paused = v; }

  bool runnable(ProcIndex p) const {
    const Slot& s = slots_.at(p);
    return !s.paused && static_cast<bool>(s.pending);
  }

  std::vector<ProcIndex> runnable() const {
    std::vector<ProcIndex> out;
    for (ProcIndex p = 0; p < slots_.size(); ++p) {
      if (runnable(p)) out.push_back(p);
    }
    return out;
  }

  bool all_finished() const {
    for (ProcIndex p = 0; p < slots_.size(); ++p) {
      if (!finished(p)) return false;
    }
    return true;
  }

  void step(ProcIndex p) {
    Slot& s = slots_.at(p);
    if (!runnable(p)) throw std::logic_error("step on non-runnable process");
    auto fn = std::move(s.pending);
    s.pending = nullptr;
    active_ = p;
    fn();
    active_ = kNone;
    ++s.steps;
    if (finished(p) && s.body.handle().promise().error) {
      std::rethrow_exception(s.body.handle().promise().error);
    }
  }

  std::uint64_t steps(ProcIndex p) const { return slots_.at(p).steps; }

  // One atomic access to shared state. The callable runs when the scheduler
  // picks this process again, never at suspension time.
  template <typename F>
  auto access(F fn) {
    using R = std::invoke_result_t<F&>;
    struct Awaiter {
      Scheduler* sched;
      F fn;
      std::conditional_t<std::is_void_v<R>, std::monostate, std::optional<R>> result;

      bool await_ready() noexcept { return false; }
      void await_suspend(std::coroutine_handle<> h) {
        sched->register_pending([this, h] {
          if constexpr (std::is_void_v<R>) {
            fn();
          } else {
            result = fn();
          }
          h.resume();
        });
      }
      R await_resume() {
        if constexpr (!std::is_void_v<R>) return std::move(*result);
      }
    };
    return Awaiter{this, std::move(fn), {}};
  }

 private:
  struct Slot {
    Task<void> body;
    std::function<void()> pending;
    bool paused = false;
    std::uint64_t steps = 0;
  };

  void register_pending(std::function<void()> fn) {
    if (active_ == kNone) throw std::logic_error("shared access outside a scheduler step");
    slots_[active_].pending = std::move(fn);
  }

  std::vector<Slot> slots_;
  ProcIndex active_ = kNone;
};

// Single-writer-per-call atomic register. All methods are one scheduler step.
template <typename V>
class Register {
 public:
  explicit Register(V initial = V{}) : value_(std::move(initial)) {}

  auto read(Scheduler& s) {
    return s.access([this] { return value_; });
  }
  auto write(Scheduler& s, V v) {
    return s.access([this, v = std::move(v)] { value_ = v; });
  }

 private:
  V value_;
};

// Drives an execution to quiescence under a seeded uniform schedule. Ex must
// expose a `sched` member. Paused processes are skipped; the run ends when
// nothing is runnable.
template <typename Ex, typename RngT>
void run_random_schedule(Ex& ex, RngT& rng) {
  for (;;) {
    auto rs = ex.sched.runnable();
    if (rs.empty()) break;
    ex.sched.step(rs[rng.below(rs.size())]);
  }
}

// Enumerates every maximal schedule by replaying fresh executions, calling
// visit at each completed run. Returns the schedule count, or nullopt if
// `limit` was reached first.
template <typename Ex>
std::optional<std::uint64_t> explore_schedules(
    const std::function<std::unique_ptr<Ex>()>& make,
    const std::function<void(Ex&)>& visit, std::uint64_t limit) {
  std::vector<Scheduler::ProcIndex> prefix;
  std::uint64_t count = 0;
  bool truncated = false;
  auto walk = [&](auto&& self) -> void {
    auto ex = make();
    for (auto p : prefix) ex->sched.step(p);
    auto rs = ex->sched.runnable();
    if (rs.empty()) {
      visit(*ex);
      if (++count >= limit) truncated = true;
      return;
    }
    for (auto p : rs) {
      if (truncated) return;
      prefix.push_back(p);
      self(self);
      prefix.pop_back();
    }
  };
  walk(walk);
  if (truncated) return std::nullopt;
  return count;
}

// Atomic snapshot object over one cell per process: update(i, v) installs a
// value, snapshot() returns a copy of all cells, each as a single atomic
// step. The algorithms built on top only ever grow their cell, which is what
// makes the double-collect-free simulation sound here.
template <typename V>
class AtomicSnapshot {
 public:
  explicit AtomicSnapshot(std::size_t cells, V initial = V{})
      : cells_(cells, std::move(initial)) {}

  auto update(Scheduler& s, std::size_t i, V v) {
    return s.access([this, i, v = std::move(v)] { cells_.at(i) = v; });
  }
  auto snapshot(Scheduler& s) {
    return s.access([this] { return cells_; });
  }
  std::size_t size() const { return cells_.size(); }

 private:
  std::vector<V> cells_;
};

}  // namespace at2::sm
