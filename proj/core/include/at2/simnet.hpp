#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <queue>
#include <string>
#include <string_view>
#include <vector>

#include "at2/model.hpp"
#include "at2/rng.hpp"
#include "at2/wire.hpp"

namespace at2::sim {

using Time = std::uint64_t;

// Simulated signature: a keyed digest checked by the harness. Processes can
// only sign under their own id because the key table is never handed out;
// fabricating an Authenticator for someone else fails verification.
struct Authenticator {
  ProcessId signer = 0;
  std::uint64_t digest = 0;
  friend auto operator<=>(const Authenticator&, const Authenticator&) = default;
};

class SignatureScheme {
 public:
  SignatureScheme(std::uint64_t seed, std::uint32_t n);
  Authenticator sign(ProcessId signer, std::string_view bytes) const;
  bool verify(ProcessId claimed, std::string_view bytes, const Authenticator& a) const;

 private:
  std::vector<std::uint64_t> keys_;
};

// What the adversary is allowed to see of a message between two correct
// processes: endpoints, size and send time, never the payload. Messages
// touching a Byzantine endpoint are exposed in full via ByzView.
struct LinkMeta {
  Time sent_at = 0;
  ProcessId from = 0;
  ProcessId to = 0;
  std::size_t size = 0;
};

struct ByzView {
  LinkMeta meta;
  std::string_view payload;
};

enum class TraceMode { Off, HashOnly, Full };

// Deterministic event log. Every record feeds a running hash so two runs can
// be compared bit-for-bit without storing the full text; Full mode
// additionally keeps printable lines.
class Trace {
 public:
  explicit Trace(TraceMode mode = TraceMode::HashOnly) : mode_(mode) {}

  void message(Time t, ProcessId from, ProcessId to, std::string_view kind,
               std::string_view payload);
  void note(Time t, ProcessId p, std::string_view kind, std::string_view detail);

  std::uint64_t hash() const { return hash_; }
  const std::vector<std::string>& lines() const { return lines_; }
  // Header plus one `time,from,to,kind,detail` row per record (Full mode).
  void write(std::ostream& os) const;

 private:
  void absorb(Time t, std::uint64_t from, std::uint64_t to, std::string_view kind,
              std::string_view body);

  TraceMode mode_;
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
  std::vector<std::string> lines_;
};

class Simulator;

// Facade handed to correct protocol instances. The sampling oracle and the
// process-local RNG stream live here; neither is ever visible to the
// adversary.
class Context {
 public:
  ProcessId id() const { return id_; }
  std::uint32_t n() const;
  Time now() const;

  void send(ProcessId to, std::string payload);
  Authenticator sign(std::string_view bytes) const;
  bool verify(ProcessId claimed, std::string_view bytes, const Authenticator& a) const;

  // Uniformly random distinct ids (the oracle used with a Poisson size).
  std::vector<ProcessId> omega_distinct(std::uint32_t count);
  // One uniformly random id; repeated calls sample with replacement.
  ProcessId omega_one();

  Rng& rng();
  void set_timer(Time delay, std::uint64_t tag);
  void note(std::string_view kind, std::string_view detail);

 private:
  friend class Simulator;
  Context(Simulator* sim, ProcessId id) : sim_(sim), id_(id) {}
  Simulator* sim_;
  ProcessId id_;
};

class Protocol {
 public:
  virtual ~Protocol() = default;
  virtual void start(Context&) {}
  virtual void receive(Context&, ProcessId from, std::string_view payload) = 0;
  virtual void timer(Context&, std::uint64_t tag) { (void)tag; }
};

// Byzantine action surface. Sending and signing are only possible under ids
// in the Byzantine set, enforced here rather than trusted to adversary code.
class AdversaryContext {
 public:
  std::uint32_t n() const;
  Time now() const;
  const std::vector<ProcessId>& byzantine_ids() const;

  void send_from(ProcessId byz, ProcessId to, std::string payload);
  Authenticator sign_as(ProcessId byz, std::string_view bytes) const;
  bool verify(ProcessId claimed, std::string_view bytes, const Authenticator& a) const;

  void wakeup_in(Time delay, std::uint64_t tag);
  Rng& rng();
  void note(std::string_view kind, std::string_view detail);

 private:
  friend class Simulator;
  explicit AdversaryContext(Simulator* sim) : sim_(sim) {}
  Simulator* sim_;
};

class Adversary {
 public:
  virtual ~Adversary() = default;

  virtual void start(AdversaryContext&) {}

  // Delay for any in-flight message, metadata only. Must return a value in
  // [1, max] where max is the simulator's configured bound; anything else is
  // a hard error. The default is uniform in [1, max].
  virtual Time choose_delay(const LinkMeta& meta, Time max, Rng& rng) {
    (void)meta;
    return 1 + rng.below(max);
  }

  // Delivery of a message addressed to a Byzantine process.
  virtual void deliver(AdversaryContext&, const ByzView&) {}

  virtual void wakeup(AdversaryContext&, std::uint64_t tag) { (void)tag; }
};

struct SimConfig {
  std::uint32_t n = 4;
  std::vector<ProcessId> byzantine;  // need not be sorted; deduplicated here
  std::uint64_t seed = 1;
  Time max_delay = 10;
  bool fifo = false;  // per ordered pair of processes
  TraceMode trace = TraceMode::HashOnly;
  std::uint64_t max_events = 200'000'000;
};

// Single-threaded discrete-event simulator with integer time. All randomness
// flows from the seed through private streams (per-process, oracle,
// adversary, delays), so a (config, protocols, adversary, seed) tuple fully
// determines the trace.
class Simulator {
 public:
  using ProtocolFactory = std::function<std::unique_ptr<Protocol>(ProcessId)>;

  Simulator(SimConfig cfg, const ProtocolFactory& factory, std::unique_ptr<Adversary> adversary);
  ~Simulator();

  // Drains the event queue. Quiescent when no message, timer or wakeup is
  // pending. Throws if max_events is exceeded.
  void run();
  // Processes events with time <= horizon, leaving later events queued.
  void run_until(Time horizon);

  bool quiescent() const { return queue_.empty(); }
  Time now() const { return now_; }
  std::uint32_t n() const { return cfg_.n; }
  bool is_byzantine(ProcessId p) const;
  const std::vector<ProcessId>& byzantine_ids() const { return byz_; }
  std::vector<ProcessId> correct_ids() const;

  Protocol* protocol(ProcessId p);  // null for Byzantine ids
  Adversary& adversary() { return *adversary_; }
  const Trace& trace() const { return trace_; }
  const SignatureScheme& signatures() const { return sigs_; }

 private:
  friend class Context;
  friend class AdversaryContext;

  struct Event {
    Time at = 0;
    std::uint64_t seq = 0;
    enum class Kind { Message, Timer, AdversaryWakeup } kind = Kind::Message;
    ProcessId from = 0;
    ProcessId to = 0;
    std::string payload;
    std::uint64_t tag = 0;
  };
  struct EventOrder {
    bool operator()(const Event& a, const Event& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.seq > b.seq;
    }
  };

  void enqueue_message(ProcessId from, ProcessId to, std::string payload);
  void enqueue_timer(ProcessId p, Time delay, std::uint64_t tag);
  void enqueue_wakeup(Time delay, std::uint64_t tag);
  void dispatch(Event& e);

  SimConfig cfg_;
  std::vector<ProcessId> byz_;
  std::vector<bool> is_byz_;
  SignatureScheme sigs_;
  Trace trace_;
  std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;
  Time now_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t dispatched_ = 0;
  std::vector<std::unique_ptr<Protocol>> protocols_;
  std::vector<std::unique_ptr<Context>> contexts_;
  std::unique_ptr<Adversary> adversary_;
  AdversaryContext adv_ctx_;
  Rng delay_rng_;
  Rng adv_rng_;
  std::vector<Rng> proc_rng_;
  std::vector<Rng> omega_rng_;
  std::vector<Time> fifo_last_;  // per ordered pair, only when cfg_.fifo
};

}  // namespace at2::sim
