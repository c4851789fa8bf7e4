#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "at2/simnet.hpp"

namespace at2::det {

// Smallest ack count that forces an intersection of correct processes between
// any two certificates, so a sequence number can never carry two payloads.
std::uint32_t quorum_size(std::uint32_t n);

// Wire records. Parsing is shared with the Byzantine strategies, which forge
// and dissect these messages; correctness must never depend on senders being
// honest about any field.
enum class MsgKind : std::uint8_t { Initial = 1, Ack = 2, Proof = 3 };

struct ParsedInitial {
  ProcessId sender = 0;
  std::uint64_t seq = 0;
  std::string payload;
  sim::Authenticator auth;  // sender's signature over init_scope
};

struct ParsedAck {
  ProcessId sender = 0;  // origin of the broadcast being acknowledged
  std::uint64_t seq = 0;
  sim::Authenticator auth;
};

struct ParsedProof {
  ProcessId sender = 0;
  std::uint64_t seq = 0;
  std::string payload;
  std::vector<sim::Authenticator> acks;
};

std::string encode_initial(ProcessId sender, std::uint64_t seq, std::string_view payload,
                           const sim::Authenticator& auth);
std::string encode_ack(ProcessId sender, std::uint64_t seq, const sim::Authenticator& auth);
std::string encode_proof(ProcessId sender, std::uint64_t seq, std::string_view payload,
                         const std::vector<sim::Authenticator>& acks);

std::optional<ParsedInitial> parse_initial(std::string_view bytes);
std::optional<ParsedAck> parse_ack(std::string_view bytes);
std::optional<ParsedProof> parse_proof(std::string_view bytes);
std::optional<MsgKind> peek_kind(std::string_view bytes);

// What the origin signs on an initial. Unsigned initials would let anyone
// burn a victim's next sequence number with a fake payload.
std::string init_scope(ProcessId sender, std::uint64_t seq, std::string_view payload);
// What an ack signs: binding (sender, seq, payload) so a certificate for one
// payload proves nothing about another.
std::string ack_scope(ProcessId sender, std::uint64_t seq, std::string_view payload);

// Reliable broadcast with per-sender sequence numbers. Initials are flooded,
// every process acknowledges exactly one payload per (sender, seq) and only
// once all lower sequence numbers from that sender are acknowledged, the
// sender circulates a certificate of quorum acks, and certificates are
// re-flooded once and delivered in sequence order per sender.
class SecureBroadcast {
 public:
  using DeliverFn = std::function<void(ProcessId source, std::string_view payload)>;

  explicit SecureBroadcast(DeliverFn deliver) : deliver_(std::move(deliver)) {}

  void broadcast(sim::Context& ctx, std::string payload);
  // Consumes any broadcast wire message; returns false if the bytes belong to
  // another protocol layer.
  bool on_message(sim::Context& ctx, ProcessId from, std::string_view bytes);

  std::uint64_t delivered_up_to(ProcessId source) const;
  std::uint64_t own_broadcasts() const { return own_seq_; }

 private:
  struct PerSource {
    std::map<std::uint64_t, std::string> first_seen;  // seq -> first initial payload
    std::set<std::uint64_t> acked;
    std::uint64_t next_ack = 1;
    std::map<std::uint64_t, std::string> proven;  // seq -> certified payload
    std::uint64_t next_deliver = 1;
    std::set<std::pair<std::uint64_t, std::uint64_t>> flooded_initials;  // (seq, payload hash)
  };
  struct OwnSeq {
    std::string payload;
    std::map<ProcessId, sim::Authenticator> acks;
    bool proof_sent = false;
  };

  void flood(sim::Context& ctx, const std::string& bytes);
  void note_initial(sim::Context& ctx, const ParsedInitial& m);
  void try_ack(sim::Context& ctx, ProcessId source);
  void accept_proof(sim::Context& ctx, const ParsedProof& m);

  DeliverFn deliver_;
  std::map<ProcessId, PerSource> sources_;
  std::map<std::uint64_t, OwnSeq> own_;
  std::uint64_t own_seq_ = 0;
};

}  // namespace at2::det
