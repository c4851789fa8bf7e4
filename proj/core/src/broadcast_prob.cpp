#include "at2/broadcast_prob.hpp"

#include <stdexcept>
#include <utility>

#include "at2/wire.hpp"

namespace at2::prob {

namespace {

constexpr std::uint32_t kMaxBody = 1u << 24;

bool known_kind(std::uint8_t k) {
  return k >= static_cast<std::uint8_t>(MsgKind::GossipSub) &&
         k <= static_cast<std::uint8_t>(MsgKind::Ready);
}

ProbParams checked(const ProbParams& p) {
  if (p.E_hat < 1 || p.E_hat > p.E || p.R_hat < 1 || p.R_hat > p.R || p.D_hat < 1 ||
      p.D_hat > p.D) {
    throw std::invalid_argument("PcbInstance: thresholds must satisfy 1 <= hat <= sample size");
  }
  return p;
}

}  // namespace

std::string encode_envelope(MsgKind kind, ProcessId sigma, std::uint64_t index,
                            std::string_view body) {
  WireWriter w;
  w.u8(static_cast<std::uint8_t>(kind));
  w.u32(sigma);
  w.u64(index);
  w.bytes(body);
  return w.take();
}

std::optional<Envelope> parse_envelope(std::string_view bytes) {
  WireReader r(bytes);
  Envelope e;
  const auto kind = r.u8();
  e.sigma = r.u32();
  e.index = r.u64();
  const auto body = r.bytes();
  if (!r.clean() || !known_kind(kind) || body.size() > kMaxBody) return std::nullopt;
  e.kind = static_cast<MsgKind>(kind);
  e.body.assign(body);
  return e;
}

std::string encode_signed(std::string_view payload, const sim::Authenticator& auth) {
  WireWriter w;
  w.bytes(payload);
  w.u32(auth.signer);
  w.u64(auth.digest);
  return w.take();
}

std::optional<SignedPayload> parse_signed(std::string_view body) {
  WireReader r(body);
  SignedPayload s;
  s.payload.assign(r.bytes());
  s.auth.signer = r.u32();
  s.auth.digest = r.u64();
  if (!r.clean()) return std::nullopt;
  return s;
}

std::string pb_scope(ProcessId sigma, std::uint64_t index, std::string_view payload) {
  WireWriter w;
  w.u8(0x70);
  w.u32(sigma);
  w.u64(index);
  w.bytes(payload);
  return w.take();
}

std::string pcb_scope(ProcessId sigma, std::uint64_t index, std::string_view message) {
  WireWriter w;
  w.u8(0x63);
  w.u32(sigma);
  w.u64(index);
  w.bytes(message);
  return w.take();
}

GossipInstance::GossipInstance(sim::Context& ctx, ProcessId sigma, std::uint64_t index,
                               std::uint32_t G, DeliverFn deliver)
    : sigma_(sigma), index_(index), deliver_(std::move(deliver)) {
  const auto count = ctx.rng().poisson(static_cast<double>(G));
  for (ProcessId p : ctx.omega_distinct(static_cast<std::uint32_t>(count))) {
    sample_.insert(p);
    ctx.send(p, encode_envelope(MsgKind::GossipSub, sigma_, index_, ""));
  }
}

void GossipInstance::broadcast(sim::Context& ctx, std::string payload) {
  if (ctx.id() != sigma_) throw std::logic_error("GossipInstance: broadcast by non-sender");
  if (got_) return;
  const auto auth = ctx.sign(pb_scope(sigma_, index_, payload));
  got_ = SignedPayload{std::move(payload), auth};
  deliver_(got_->payload);
  spread(ctx);
}

bool GossipInstance::on_message(sim::Context& ctx, ProcessId from, const Envelope& env) {
  if (env.sigma != sigma_ || env.index != index_) return false;
  switch (env.kind) {
    case MsgKind::GossipSub: {
      if (got_) {
        ctx.send(from, encode_envelope(MsgKind::Gossip, sigma_, index_,
                                       encode_signed(got_->payload, got_->auth)));
      }
      sample_.insert(from);
      return true;
    }
    case MsgKind::Gossip: {
      auto s = parse_signed(env.body);
      if (!s || !ctx.verify(sigma_, pb_scope(sigma_, index_, s->payload), s->auth)) return true;
      if (got_) return true;
      got_ = std::move(*s);
      deliver_(got_->payload);
      spread(ctx);
      return true;
    }
    default:
      return false;
  }
}

void GossipInstance::spread(sim::Context& ctx) {
  const auto bytes =
      encode_envelope(MsgKind::Gossip, sigma_, index_, encode_signed(got_->payload, got_->auth));
  for (ProcessId p : sample_) ctx.send(p, bytes);
}

PcbInstance::PcbInstance(sim::Context& ctx, ProcessId sigma, std::uint64_t index,
                         const ProbParams& params, DeliverFn deliver)
    : sigma_(sigma),
      index_(index),
      params_(checked(params)),
      deliver_(std::move(deliver)),
      pb_(ctx, sigma, index, params.G,
          [this, &ctx](std::string payload) { on_pb_deliver(ctx, std::move(payload)); }) {
  // with replacement: one subscribe per distinct peer, multiplicity kept for
  // the threshold arithmetic
  auto draw = [&](std::map<ProcessId, std::uint32_t>& sample, std::uint32_t size, MsgKind sub) {
    for (std::uint32_t i = 0; i < size; ++i) {
      const ProcessId p = ctx.omega_one();
      if (sample[p]++ == 0) ctx.send(p, envelope(sub, ""));
    }
  };
  draw(echo_sample_, params_.E, MsgKind::EchoSub);
  draw(ready_sample_, params_.R, MsgKind::ReadySub);
  auto draw_delivery = [&](std::uint32_t size) {
    for (std::uint32_t i = 0; i < size; ++i) {
      const ProcessId p = ctx.omega_one();
      // the delivery sample listens for readies too, so it shares the
      // subscription kind; only subscribe if the ready draw did not already
      if (delivery_sample_[p]++ == 0 && ready_sample_.count(p) == 0) {
        ctx.send(p, envelope(MsgKind::ReadySub, ""));
      }
    }
  };
  draw_delivery(params_.D);
}

void PcbInstance::broadcast(sim::Context& ctx, std::string message) {
  if (ctx.id() != sigma_) throw std::logic_error("PcbInstance: broadcast by non-sender");
  const auto auth = ctx.sign(pcb_scope(sigma_, index_, message));
  pb_.broadcast(ctx, encode_signed(message, auth));
}

bool PcbInstance::on_message(sim::Context& ctx, ProcessId from, const Envelope& env) {
  if (env.sigma != sigma_ || env.index != index_) return false;
  switch (env.kind) {
    case MsgKind::GossipSub:
    case MsgKind::Gossip:
      return pb_.on_message(ctx, from, env);
    case MsgKind::EchoSub: {
      if (echo_) ctx.send(from, envelope(MsgKind::Echo, encode_signed(echo_->payload, echo_->auth)));
      echo_subs_.insert(from);
      return true;
    }
    case MsgKind::ReadySub: {
      if (ready_) {
        ctx.send(from, envelope(MsgKind::Ready, encode_signed(ready_->payload, ready_->auth)));
      }
      ready_subs_.insert(from);
      return true;
    }
    case MsgKind::Echo: {
      auto s = parse_signed(env.body);
      if (!s || !ctx.verify(sigma_, pcb_scope(sigma_, index_, s->payload), s->auth)) return true;
      if (echo_sample_.count(from) == 0 || echo_replies_.count(from)) return true;
      echo_replies_.emplace(from, *s);
      if (!ready_ && weight_for(echo_sample_, echo_replies_, s->payload) >= params_.E_hat) {
        become_ready(ctx, *s);
      }
      return true;
    }
    case MsgKind::Ready: {
      auto s = parse_signed(env.body);
      if (!s || !ctx.verify(sigma_, pcb_scope(sigma_, index_, s->payload), s->auth)) return true;
      if (ready_sample_.count(from) && !ready_replies_.count(from)) {
        ready_replies_.emplace(from, *s);
        if (!ready_ && weight_for(ready_sample_, ready_replies_, s->payload) >= params_.R_hat) {
          become_ready(ctx, *s);
        }
      }
      if (delivery_sample_.count(from) && !delivery_replies_.count(from)) {
        delivery_replies_.emplace(from, *s);
        if (!delivered_ &&
            weight_for(delivery_sample_, delivery_replies_, s->payload) >= params_.D_hat) {
          delivered_ = true;
          deliver_(s->payload);
        }
      }
      return true;
    }
  }
  return false;
}

void PcbInstance::on_pb_deliver(sim::Context& ctx, std::string payload) {
  auto s = parse_signed(payload);
  if (!s || !ctx.verify(sigma_, pcb_scope(sigma_, index_, s->payload), s->auth)) return;
  if (echo_) return;
  echo_ = std::move(*s);
  const auto bytes = envelope(MsgKind::Echo, encode_signed(echo_->payload, echo_->auth));
  for (ProcessId p : echo_subs_) ctx.send(p, bytes);
}

void PcbInstance::become_ready(sim::Context& ctx, const SignedPayload& value) {
  ready_ = value;
  const auto bytes = envelope(MsgKind::Ready, encode_signed(value.payload, value.auth));
  for (ProcessId p : ready_subs_) ctx.send(p, bytes);
}

std::uint32_t PcbInstance::weight_for(const std::map<ProcessId, std::uint32_t>& sample,
                                      const std::map<ProcessId, SignedPayload>& replies,
                                      std::string_view message) const {
  std::uint32_t total = 0;
  for (const auto& [p, reply] : replies) {
    if (reply.payload != message) continue;
    auto it = sample.find(p);
    if (it != sample.end()) total += it->second;
  }
  return total;
}

std::string PcbInstance::envelope(MsgKind kind, std::string_view body) const {
  return encode_envelope(kind, sigma_, index_, body);
}

SequencedBroadcast::SequencedBroadcast(sim::Context& ctx, ProcessId sigma,
                                       const ProbParams& params, DeliverFn deliver)
    : sigma_(sigma), params_(params), deliver_(std::move(deliver)) {
  ensure_instance(ctx, 0);
}

void SequencedBroadcast::broadcast(sim::Context& ctx, std::string message) {
  if (ctx.id() != sigma_) throw std::logic_error("SequencedBroadcast: broadcast by non-sender");
  ensure_instance(ctx, next_);
  auto* inst = instances_[next_].get();
  ++next_;
  ensure_instance(ctx, next_);
  inst->broadcast(ctx, std::move(message));
}

bool SequencedBroadcast::on_message(sim::Context& ctx, ProcessId from, const Envelope& env) {
  if (env.sigma != sigma_) return false;
  auto it = instances_.find(env.index);
  if (it != instances_.end()) return it->second->on_message(ctx, from, env);
  // data messages dropped here are recovered by the replies to the fresh
  // subscriptions made when the instance opens; subscriptions themselves are
  // sent once ever, so they park until then (windowed against junk indexes)
  constexpr std::uint64_t kSubWindow = 4096;
  const bool is_sub = env.kind == MsgKind::GossipSub || env.kind == MsgKind::EchoSub ||
                      env.kind == MsgKind::ReadySub;
  if (is_sub && env.index < expected_ + kSubWindow) {
    waiting_subs_[env.index].emplace(static_cast<std::uint8_t>(env.kind), from);
  }
  return true;
}

void SequencedBroadcast::ensure_instance(sim::Context& ctx, std::uint64_t index) {
  if (instances_.count(index)) return;
  auto [it, inserted] = instances_.emplace(
      index, std::make_unique<PcbInstance>(
                 ctx, sigma_, index, params_, [this, &ctx, index](std::string message) {
                   on_pcb_deliver(ctx, index, std::move(message));
                 }));
  auto parked = waiting_subs_.find(index);
  if (parked == waiting_subs_.end()) return;
  for (const auto& [kind, from] : parked->second) {
    Envelope env{static_cast<MsgKind>(kind), sigma_, index, ""};
    it->second->on_message(ctx, from, env);
  }
  waiting_subs_.erase(parked);
}

void SequencedBroadcast::on_pcb_deliver(sim::Context& ctx, std::uint64_t index,
                                        std::string message) {
  pending_.emplace(index, std::move(message));
  while (true) {
    auto it = pending_.find(expected_);
    if (it == pending_.end()) break;
    std::string m = std::move(it->second);
    pending_.erase(it);
    ++expected_;
    if (ctx.id() != sigma_) ensure_instance(ctx, expected_);
    deliver_(std::move(m));
  }
}

}  // namespace at2::prob
