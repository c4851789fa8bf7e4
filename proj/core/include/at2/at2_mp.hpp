#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "at2/model.hpp"

namespace at2::mp {

// A transfer as it travels between processes: the source account doubles as
// the issuing process id, seq numbers outgoing transfers of that account.
struct TxRecord {
  AccountId from = 0;
  AccountId to = 0;
  Amount amount = 0;
  std::uint64_t seq = 0;
  friend auto operator<=>(const TxRecord&, const TxRecord&) = default;
};

std::string encode_tx_message(const TxRecord& tx, const std::vector<TxRecord>& deps);
struct ParsedTxMessage {
  TxRecord tx;
  std::vector<TxRecord> deps;
};
std::optional<ParsedTxMessage> parse_tx_message(std::string_view bytes);

// Replicated asset-transfer state machine. Each process owns the account with
// its own id and is the only one allowed to spend from it; everyone applies
// everyone's validated transfers. The broadcast layer underneath must deliver
// each source's messages in sequence order; equivocation resistance comes
// from there, not from here.
class TransferEngine {
 public:
  using BroadcastFn = std::function<void(std::string payload)>;
  using ResolveFn = std::function<void(const TxRecord& tx, bool success)>;

  TransferEngine(const AccountSetup& setup, ProcessId self, std::uint32_t n,
                 BroadcastFn broadcast);

  void on_resolve(ResolveFn fn) { resolve_ = std::move(fn); }

  // Issues a transfer from the own account. False means the engine rejected
  // it locally (insufficient funds against the current view, or a previous
  // own transfer is still unresolved); true means it was broadcast and will
  // resolve through delivery.
  bool submit(AccountId dest, Amount amount);
  bool own_pending() const { return own_pending_.has_value(); }

  // Feed from the broadcast layer, in per-source sequence order.
  void deliver(ProcessId source, std::string_view payload);

  Amount balance_of(AccountId a) const;
  std::uint64_t applied_of(ProcessId q) const { return seq_[q]; }
  const std::set<TxRecord>& history_of(AccountId a) const;
  const std::vector<TxRecord>& apply_order() const { return apply_order_; }
  std::size_t unvalidated() const { return to_validate_.size(); }

  // Set when an applied transfer would have driven a balance negative, which
  // the validation predicate is supposed to make impossible.
  const std::optional<std::string>& violation() const { return violation_; }

 private:
  struct PendingIn {
    TxRecord tx;
    std::vector<TxRecord> deps;
  };

  bool valid(const PendingIn& m) const;
  void apply(const PendingIn& m);
  void run_validation();

  const AccountSetup* setup_;
  ProcessId self_;
  std::uint32_t n_;
  BroadcastFn broadcast_;
  ResolveFn resolve_;

  std::vector<std::uint64_t> seq_;  // validated outgoing count per source
  std::vector<std::uint64_t> rec_;  // delivered count per source
  std::map<AccountId, std::set<TxRecord>> hist_;
  std::set<TxRecord> deps_;  // incoming validated since the last own broadcast
  std::map<std::pair<ProcessId, std::uint64_t>, PendingIn> to_validate_;
  std::optional<TxRecord> own_pending_;
  std::vector<TxRecord> apply_order_;
  std::optional<std::string> violation_;
  bool validating_ = false;
  std::set<TxRecord> empty_;
};

}  // namespace at2::mp
