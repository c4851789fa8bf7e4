#include "at2/broadcast_det.hpp"

#include <stdexcept>

#include "at2/wire.hpp"

namespace at2::det {
namespace {

constexpr std::uint32_t kMaxProofAcks = 4096;

}  // namespace

std::uint32_t quorum_size(std::uint32_t n) {
  if (n == 0) throw std::invalid_argument("quorum_size: n = 0");
  return (2 * n) / 3 + 1;
}

std::string init_scope(ProcessId sender, std::uint64_t seq, std::string_view payload) {
  WireWriter w;
  w.u8(0x49);  // 'I'
  w.u32(sender);
  w.u64(seq);
  w.bytes(payload);
  return w.take();
}

std::string ack_scope(ProcessId sender, std::uint64_t seq, std::string_view payload) {
  WireWriter w;
  w.u8(0x41);  // 'A'
  w.u32(sender);
  w.u64(seq);
  w.bytes(payload);
  return w.take();
}

std::string encode_initial(ProcessId sender, std::uint64_t seq, std::string_view payload,
                           const sim::Authenticator& auth) {
  WireWriter w;
  w.u8(std::uint8_t(MsgKind::Initial));
  w.u32(sender);
  w.u64(seq);
  w.bytes(payload);
  w.u32(auth.signer);
  w.u64(auth.digest);
  return w.take();
}

std::string encode_ack(ProcessId sender, std::uint64_t seq, const sim::Authenticator& auth) {
  WireWriter w;
  w.u8(std::uint8_t(MsgKind::Ack));
  w.u32(sender);
  w.u64(seq);
  w.u32(auth.signer);
  w.u64(auth.digest);
  return w.take();
}

std::string encode_proof(ProcessId sender, std::uint64_t seq, std::string_view payload,
                         const std::vector<sim::Authenticator>& acks) {
  WireWriter w;
  w.u8(std::uint8_t(MsgKind::Proof));
  w.u32(sender);
  w.u64(seq);
  w.bytes(payload);
  w.u32(std::uint32_t(acks.size()));
  for (const auto& a : acks) {
    w.u32(a.signer);
    w.u64(a.digest);
  }
  return w.take();
}

std::optional<MsgKind> peek_kind(std::string_view bytes) {
  if (bytes.empty()) return std::nullopt;
  const auto k = std::uint8_t(bytes[0]);
  if (k < std::uint8_t(MsgKind::Initial) || k > std::uint8_t(MsgKind::Proof)) {
    return std::nullopt;
  }
  return MsgKind(k);
}

std::optional<ParsedInitial> parse_initial(std::string_view bytes) {
  WireReader r(bytes);
  if (r.u8() != std::uint8_t(MsgKind::Initial)) return std::nullopt;
  ParsedInitial m;
  m.sender = r.u32();
  m.seq = r.u64();
  m.payload = std::string(r.bytes());
  m.auth.signer = r.u32();
  m.auth.digest = r.u64();
  if (!r.clean()) return std::nullopt;
  return m;
}

std::optional<ParsedAck> parse_ack(std::string_view bytes) {
  WireReader r(bytes);
  if (r.u8() != std::uint8_t(MsgKind::Ack)) return std::nullopt;
  ParsedAck m;
  m.sender = r.u32();
  m.seq = r.u64();
  m.auth.signer = r.u32();
  m.auth.digest = r.u64();
  if (!r.clean()) return std::nullopt;
  return m;
}

std::optional<ParsedProof> parse_proof(std::string_view bytes) {
  WireReader r(bytes);
  if (r.u8() != std::uint8_t(MsgKind::Proof)) return std::nullopt;
  ParsedProof m;
  m.sender = r.u32();
  m.seq = r.u64();
  m.payload = std::string(r.bytes());
  const auto count = r.u32();
  if (r.failed() || count > kMaxProofAcks) return std::nullopt;
  m.acks.resize(count);
  for (auto& a : m.acks) {
    a.signer = r.u32();
    a.digest = r.u64();
  }
  if (!r.clean()) return std::nullopt;
  return m;
}

void SecureBroadcast::flood(sim::Context& ctx, const std::string& bytes) {
  for (ProcessId p = 0; p < ctx.n(); ++p) {
    if (p != ctx.id()) ctx.send(p, bytes);
  }
}

void SecureBroadcast::broadcast(sim::Context& ctx, std::string payload) {
  const auto seq = ++own_seq_;
  auto& slot = own_[seq];
  slot.payload = payload;
  ParsedInitial m;
  m.sender = ctx.id();
  m.seq = seq;
  m.payload = std::move(payload);
  m.auth = ctx.sign(init_scope(m.sender, m.seq, m.payload));
  note_initial(ctx, m);
}

void SecureBroadcast::note_initial(sim::Context& ctx, const ParsedInitial& m) {
  if (!ctx.verify(m.sender, init_scope(m.sender, m.seq, m.payload), m.auth)) return;
  auto& src = sources_[m.sender];
  const auto key = std::make_pair(m.seq, fnv1a64(m.payload));
  if (!src.flooded_initials.insert(key).second) return;
  src.first_seen.emplace(m.seq, m.payload);  // keeps the first payload only
  flood(ctx, encode_initial(m.sender, m.seq, m.payload, m.auth));
  try_ack(ctx, m.sender);
}

void SecureBroadcast::try_ack(sim::Context& ctx, ProcessId source) {
  auto& src = sources_[source];
  while (true) {
    auto it = src.first_seen.find(src.next_ack);
    if (it == src.first_seen.end()) return;
    const auto seq = src.next_ack;
    const auto auth = ctx.sign(ack_scope(source, seq, it->second));
    src.acked.insert(seq);
    ++src.next_ack;
    if (source == ctx.id()) {
      auto& slot = own_[seq];
      slot.acks.emplace(ctx.id(), auth);
      if (slot.acks.size() >= quorum_size(ctx.n()) && !slot.proof_sent) {
        slot.proof_sent = true;
        std::vector<sim::Authenticator> acks;
        for (const auto& [signer, a] : slot.acks) acks.push_back(a);
        ParsedProof proof{ctx.id(), seq, slot.payload, std::move(acks)};
        accept_proof(ctx, proof);
      }
    } else {
      ctx.send(source, encode_ack(source, seq, auth));
    }
  }
}

void SecureBroadcast::accept_proof(sim::Context& ctx, const ParsedProof& m) {
  auto& src = sources_[m.sender];
  if (src.proven.count(m.seq)) return;

  const auto scope = ack_scope(m.sender, m.seq, m.payload);
  std::set<ProcessId> valid;
  for (const auto& a : m.acks) {
    if (ctx.verify(a.signer, scope, a)) valid.insert(a.signer);
  }
  if (valid.size() < quorum_size(ctx.n())) return;

  src.proven.emplace(m.seq, m.payload);
  flood(ctx, encode_proof(m.sender, m.seq, m.payload, m.acks));
  while (true) {
    auto it = src.proven.find(src.next_deliver);
    if (it == src.proven.end()) return;
    ++src.next_deliver;
    deliver_(m.sender, it->second);
  }
}

bool SecureBroadcast::on_message(sim::Context& ctx, ProcessId from, std::string_view bytes) {
  const auto kind = peek_kind(bytes);
  if (!kind) return false;
  switch (*kind) {
    case MsgKind::Initial: {
      if (auto m = parse_initial(bytes)) note_initial(ctx, *m);
      return true;
    }
    case MsgKind::Ack: {
      auto m = parse_ack(bytes);
      if (!m || m->sender != ctx.id()) return true;
      auto it = own_.find(m->seq);
      if (it == own_.end() || it->second.proof_sent) return true;
      auto& slot = it->second;
      if (!ctx.verify(m->auth.signer, ack_scope(ctx.id(), m->seq, slot.payload), m->auth)) {
        return true;
      }
      slot.acks.emplace(m->auth.signer, m->auth);
      if (slot.acks.size() >= quorum_size(ctx.n())) {
        slot.proof_sent = true;
        std::vector<sim::Authenticator> acks;
        for (const auto& [signer, a] : slot.acks) acks.push_back(a);
        ParsedProof proof{ctx.id(), m->seq, slot.payload, std::move(acks)};
        accept_proof(ctx, proof);
      }
      return true;
    }
    case MsgKind::Proof: {
      if (auto m = parse_proof(bytes)) accept_proof(ctx, *m);
      return true;
    }
  }
  (void)from;
  return false;
}

std::uint64_t SecureBroadcast::delivered_up_to(ProcessId source) const {
  auto it = sources_.find(source);
  return it == sources_.end() ? 0 : it->second.next_deliver - 1;
}

}  // namespace at2::det
