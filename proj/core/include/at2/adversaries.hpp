#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>

#include "at2/model.hpp"
#include "at2/simnet.hpp"

namespace at2::adv {

// Double-spends through the acknowledgment protocol: every Byzantine id
// signs two conflicting first transfers, shows each to a different half of
// the correct processes, and certifies whichever side acks a quorum using
// the acks addressed to it. Safe protocols let at most one side through.
class DetEquivocator : public sim::Adversary {
 public:
  explicit DetEquivocator(Amount amount) : amount_(amount) {}

  void start(sim::AdversaryContext& ctx) override;
  void deliver(sim::AdversaryContext& ctx, const sim::ByzView& view) override;

 private:
  struct PerByz {
    // payload -> distinct signed acks collected for it
    std::map<std::string, std::map<ProcessId, sim::Authenticator>> acks;
    std::set<std::string> certified;
  };

  Amount amount_;
  std::map<ProcessId, PerByz> state_;
};

// Plays an equivocating designated sender for one double-echo instance:
// one half of the correct processes is gossiped one value, the other half
// the other, and every Byzantine process echoes and readies each half's
// value back at it to harden the split.
class SplitConsistency : public sim::Adversary {
 public:
  SplitConsistency(ProcessId sender, std::string left, std::string right)
      : sender_(sender), left_(std::move(left)), right_(std::move(right)) {}

  void start(sim::AdversaryContext& ctx) override;

 private:
  ProcessId sender_;
  std::string left_;
  std::string right_;
};

// Attacks totality: stays silent until it sees the instance's signed
// message in its own traffic, then throws every Byzantine echo and ready
// behind the lower half of the correct processes only, pushing that half
// over the delivery threshold while the rest starve.
class PartialSupport : public sim::Adversary {
 public:
  void deliver(sim::AdversaryContext& ctx, const sim::ByzView& view) override;

 private:
  bool armed_ = false;
};

}  // namespace at2::adv
