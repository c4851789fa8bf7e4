#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "at2/simnet.hpp"

namespace at2::prob {

// Sample-based broadcast family. Every message belongs to one instance,
// identified by the designated sender and an index, so independent slots
// never share state. All parameters are per-instance sample sizes.
struct ProbParams {
  std::uint32_t G = 10;      // expected gossip sample size (Poisson mean)
  std::uint32_t E = 10;      // echo sample size
  std::uint32_t E_hat = 8;   // echoes required to turn ready
  std::uint32_t R = 10;      // ready sample size
  std::uint32_t R_hat = 4;   // readies required to turn ready (feedback)
  std::uint32_t D = 10;      // delivery sample size
  std::uint32_t D_hat = 8;   // readies required to deliver
};

enum class MsgKind : std::uint8_t {
  GossipSub = 10,
  Gossip = 11,
  EchoSub = 12,
  ReadySub = 13,
  Echo = 14,
  Ready = 15,
};

struct Envelope {
  MsgKind kind = MsgKind::Gossip;
  ProcessId sigma = 0;       // designated sender of the instance
  std::uint64_t index = 0;   // instance number within that sender's sequence
  std::string body;
};

std::string encode_envelope(MsgKind kind, ProcessId sigma, std::uint64_t index,
                            std::string_view body);
std::optional<Envelope> parse_envelope(std::string_view bytes);

// Payload plus the designated sender's signature over it; travels through
// gossip, echoes and readies so any process can check provenance without
// having talked to the sender.
struct SignedPayload {
  std::string payload;
  sim::Authenticator auth;
  friend bool operator==(const SignedPayload&, const SignedPayload&) = default;
};

std::string encode_signed(std::string_view payload, const sim::Authenticator& auth);
std::optional<SignedPayload> parse_signed(std::string_view body);

// Scopes keep the two signing layers apart: a gossip signature must not
// double as an echo-phase signature for different bytes.
std::string pb_scope(ProcessId sigma, std::uint64_t index, std::string_view payload);
std::string pcb_scope(ProcessId sigma, std::uint64_t index, std::string_view message);

// Single-shot gossip: a Poisson-sized random sample is subscribed at birth,
// the first correctly signed copy is delivered and forwarded to the sample,
// and late subscribers get a replay. The sample only ever grows.
class GossipInstance {
 public:
  using DeliverFn = std::function<void(std::string payload)>;

  GossipInstance(sim::Context& ctx, ProcessId sigma, std::uint64_t index, std::uint32_t G,
                 DeliverFn deliver);
  GossipInstance(const GossipInstance&) = delete;
  GossipInstance& operator=(const GossipInstance&) = delete;

  // Only the designated sender calls this.
  void broadcast(sim::Context& ctx, std::string payload);
  // Consumes GossipSub and Gossip envelopes for this instance.
  bool on_message(sim::Context& ctx, ProcessId from, const Envelope& env);

  bool delivered() const { return got_.has_value(); }
  std::size_t sample_size() const { return sample_.size(); }

 private:
  void spread(sim::Context& ctx);

  ProcessId sigma_;
  std::uint64_t index_;
  DeliverFn deliver_;
  std::set<ProcessId> sample_;
  std::optional<SignedPayload> got_;
};

// Double-echo over random samples. Echo, ready and delivery samples are
// drawn with replacement; a peer drawn twice fills one reply slot but its
// reply counts twice toward the threshold, matching how the thresholds are
// sized. The underlying gossip instance spreads the initial message.
class PcbInstance {
 public:
  using DeliverFn = std::function<void(std::string message)>;

  PcbInstance(sim::Context& ctx, ProcessId sigma, std::uint64_t index, const ProbParams& params,
              DeliverFn deliver);
  PcbInstance(const PcbInstance&) = delete;
  PcbInstance& operator=(const PcbInstance&) = delete;

  void broadcast(sim::Context& ctx, std::string message);
  bool on_message(sim::Context& ctx, ProcessId from, const Envelope& env);

  bool delivered() const { return delivered_; }
  bool echoed() const { return echo_.has_value(); }
  bool readied() const { return ready_.has_value(); }

 private:
  void on_pb_deliver(sim::Context& ctx, std::string payload);
  void become_ready(sim::Context& ctx, const SignedPayload& value);
  std::uint32_t weight_for(const std::map<ProcessId, std::uint32_t>& sample,
                           const std::map<ProcessId, SignedPayload>& replies,
                           std::string_view message) const;
  std::string envelope(MsgKind kind, std::string_view body) const;

  ProcessId sigma_;
  std::uint64_t index_;
  ProbParams params_;
  DeliverFn deliver_;

  std::map<ProcessId, std::uint32_t> echo_sample_;      // id -> multiplicity
  std::map<ProcessId, std::uint32_t> ready_sample_;
  std::map<ProcessId, std::uint32_t> delivery_sample_;
  std::set<ProcessId> echo_subs_;
  std::set<ProcessId> ready_subs_;
  std::map<ProcessId, SignedPayload> echo_replies_;     // first reply per peer per role
  std::map<ProcessId, SignedPayload> ready_replies_;
  std::map<ProcessId, SignedPayload> delivery_replies_;
  std::optional<SignedPayload> echo_;
  std::optional<SignedPayload> ready_;
  bool delivered_ = false;

  GossipInstance pb_;
};

// One double-echo instance per position in the sender's message sequence,
// with a reorder buffer on the receiving side. The sender opens instance
// i+1 right after broadcasting on i; receivers open it after delivering i,
// and their fresh subscriptions pull anything they missed meanwhile.
class SequencedBroadcast {
 public:
  using DeliverFn = std::function<void(std::string message)>;

  SequencedBroadcast(sim::Context& ctx, ProcessId sigma, const ProbParams& params,
                     DeliverFn deliver);
  SequencedBroadcast(const SequencedBroadcast&) = delete;
  SequencedBroadcast& operator=(const SequencedBroadcast&) = delete;

  void broadcast(sim::Context& ctx, std::string message);
  // Envelopes for instances this process has not opened yet are dropped;
  // subscription replay recovers them once the instance exists.
  bool on_message(sim::Context& ctx, ProcessId from, const Envelope& env);

  ProcessId sigma() const { return sigma_; }
  std::uint64_t delivered_count() const { return expected_; }
  std::uint64_t own_broadcasts() const { return next_; }

 private:
  void ensure_instance(sim::Context& ctx, std::uint64_t index);
  void on_pcb_deliver(sim::Context& ctx, std::uint64_t index, std::string message);

  ProcessId sigma_;
  ProbParams params_;
  DeliverFn deliver_;
  std::map<std::uint64_t, std::unique_ptr<PcbInstance>> instances_;
  std::map<std::uint64_t, std::string> pending_;  // delivered by an instance, not yet in order
  // subscriptions that arrived before their instance opened; nobody re-sends
  // a subscription, so dropping one would sever that link for good
  std::map<std::uint64_t, std::set<std::pair<std::uint8_t, ProcessId>>> waiting_subs_;
  std::uint64_t next_ = 0;
  std::uint64_t expected_ = 0;
};

}  // namespace at2::prob
