#include "at2/adversaries.hpp"

#include <algorithm>
#include <vector>

#include "at2/at2_mp.hpp"
#include "at2/broadcast_det.hpp"
#include "at2/broadcast_prob.hpp"

namespace at2::adv {

namespace {

std::vector<ProcessId> correct_ids(const sim::AdversaryContext& ctx) {
  std::vector<ProcessId> out;
  const auto& byz = ctx.byzantine_ids();
  for (ProcessId p = 0; p < ctx.n(); ++p) {
    if (!std::binary_search(byz.begin(), byz.end(), p)) out.push_back(p);
  }
  return out;
}

}  // namespace

void DetEquivocator::start(sim::AdversaryContext& ctx) {
  const auto correct = correct_ids(ctx);
  if (correct.size() < 2) return;
  for (ProcessId b : ctx.byzantine_ids()) {
    // two individually valid first transfers from b's account, different
    // beneficiaries
    const auto payload_for = [&](ProcessId dest) {
      return mp::encode_tx_message(mp::TxRecord{b, dest, amount_, 1}, {});
    };
    const std::string m1 = payload_for(correct[0]);
    const std::string m2 = payload_for(correct[1]);

    auto& st = state_[b];
    for (const auto& m : {m1, m2}) {
      st.acks[m][b] = ctx.sign_as(b, det::ack_scope(b, 1, m));
    }
    std::uint32_t k = 0;
    for (ProcessId p : correct) {
      const auto& m = (k++ % 2 == 0) ? m1 : m2;
      ctx.send_from(b, p, det::encode_initial(b, 1, m, ctx.sign_as(b, det::init_scope(b, 1, m))));
    }
  }
}

void DetEquivocator::deliver(sim::AdversaryContext& ctx, const sim::ByzView& view) {
  auto ack = det::parse_ack(view.payload);
  if (!ack || ack->seq != 1) return;
  auto it = state_.find(ack->sender);
  if (it == state_.end()) return;
  auto& st = it->second;
  const ProcessId b = ack->sender;

  for (auto& [m, signers] : st.acks) {
    if (ctx.verify(view.meta.from, det::ack_scope(b, 1, m), ack->auth)) {
      signers.emplace(view.meta.from, ack->auth);
    }
  }
  for (auto& [m, signers] : st.acks) {
    if (signers.size() < det::quorum_size(ctx.n()) || st.certified.count(m)) continue;
    st.certified.insert(m);
    std::vector<sim::Authenticator> list;
    for (const auto& [p, a] : signers) list.push_back(a);
    const auto proof = det::encode_proof(b, 1, m, list);
    for (ProcessId p : correct_ids(ctx)) ctx.send_from(b, p, proof);
  }
}

void SplitConsistency::start(sim::AdversaryContext& ctx) {
  const auto correct = correct_ids(ctx);
  const std::string values[2] = {left_, right_};
  std::string inner[2];
  std::string gossip[2];
  std::string echo[2];
  std::string ready[2];
  for (int i = 0; i < 2; ++i) {
    inner[i] =
        prob::encode_signed(values[i], ctx.sign_as(sender_, prob::pcb_scope(sender_, 0, values[i])));
    gossip[i] = prob::encode_envelope(
        prob::MsgKind::Gossip, sender_, 0,
        prob::encode_signed(inner[i], ctx.sign_as(sender_, prob::pb_scope(sender_, 0, inner[i]))));
    echo[i] = prob::encode_envelope(prob::MsgKind::Echo, sender_, 0, inner[i]);
    ready[i] = prob::encode_envelope(prob::MsgKind::Ready, sender_, 0, inner[i]);
  }
  for (std::size_t k = 0; k < correct.size(); ++k) {
    const int side = k < correct.size() / 2 ? 0 : 1;
    ctx.send_from(sender_, correct[k], gossip[side]);
    // every Byzantine process backs the value this half was shown
    for (ProcessId b : ctx.byzantine_ids()) {
      ctx.send_from(b, correct[k], echo[side]);
      ctx.send_from(b, correct[k], ready[side]);
    }
  }
}

void PartialSupport::deliver(sim::AdversaryContext& ctx, const sim::ByzView& view) {
  if (armed_) return;
  auto env = prob::parse_envelope(view.payload);
  if (!env) return;

  // dig the designated sender's signed message out of whatever carried it
  std::optional<prob::SignedPayload> inner;
  if (env->kind == prob::MsgKind::Gossip) {
    if (auto outer = prob::parse_signed(env->body)) inner = prob::parse_signed(outer->payload);
  } else if (env->kind == prob::MsgKind::Echo || env->kind == prob::MsgKind::Ready) {
    inner = prob::parse_signed(env->body);
  }
  if (!inner ||
      !ctx.verify(env->sigma, prob::pcb_scope(env->sigma, env->index, inner->payload),
                  inner->auth)) {
    return;
  }
  armed_ = true;

  const auto correct = correct_ids(ctx);
  const auto body = prob::encode_signed(inner->payload, inner->auth);
  const auto echo = prob::encode_envelope(prob::MsgKind::Echo, env->sigma, env->index, body);
  const auto ready = prob::encode_envelope(prob::MsgKind::Ready, env->sigma, env->index, body);
  for (std::size_t k = 0; k < (correct.size() + 1) / 2; ++k) {
    for (ProcessId b : ctx.byzantine_ids()) {
      ctx.send_from(b, correct[k], echo);
      ctx.send_from(b, correct[k], ready);
    }
  }
}

}  // namespace at2::adv
