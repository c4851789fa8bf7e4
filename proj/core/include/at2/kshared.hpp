#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "at2/model.hpp"
#include "at2/rng.hpp"
#include "at2/sched.hpp"

namespace at2::sm {

// k-consensus object: the first k propose calls return the first proposed
// value, every later call returns nothing. One atomic step per call.
template <typename V>
class KConsensus {
 public:
  explicit KConsensus(std::size_t k) : k_(k) {}

  auto propose(Scheduler& s, V v) {
    return s.access([this, v = std::move(v)]() -> std::optional<V> {
      if (!decided_) decided_ = v;
      ++calls_;
      if (calls_ > k_) return std::nullopt;
      return decided_;
    });
  }

 private:
  std::size_t k_;
  std::size_t calls_ = 0;
  std::optional<V> decided_;
};

// Asset-transfer object shared by at most k owner processes per account.
// Two interchangeable backings implement it below.
class SharedAssetTransfer {
 public:
  virtual ~SharedAssetTransfer() = default;
  virtual Task<bool> transfer(Scheduler& s, ProcessId p, AccountId a, AccountId b, Amount x) = 0;
  virtual Task<Amount> read(Scheduler& s, ProcessId p, AccountId a) = 0;
};

// Rejects setups where any account has more than k owners: the construction
// arguments only hold up to k sharers.
void require_k_shared(const AccountSetup& setup, std::size_t k);

// Reference backing: each operation is a single atomic step against the
// sequential ledger. Used when a linearizable object is assumed.
class AtomicAssetTransfer : public SharedAssetTransfer {
 public:
  AtomicAssetTransfer(const AccountSetup& setup, std::size_t k);
  Task<bool> transfer(Scheduler& s, ProcessId p, AccountId a, AccountId b, Amount x) override;
  Task<Amount> read(Scheduler& s, ProcessId p, AccountId a) override;

 private:
  LedgerState state_;
};

// A transfer a process announced together with the round counter it held at
// announcement time. (round, announcer) defines which announced transfer the
// helping loop treats as oldest.
struct AnnouncedTx {
  AccountId from = 0;
  AccountId to = 0;
  Amount amount = 0;
  ProcessId announcer = 0;
  std::uint64_t round = 0;
  friend auto operator<=>(const AnnouncedTx&, const AnnouncedTx&) = default;
};

struct TxDecision {
  AnnouncedTx tx;
  bool success = false;
  friend auto operator<=>(const TxDecision&, const TxDecision&) = default;
};

// Transfer object built from announce registers, one k-consensus object per
// (account, round), and an atomic snapshot of decision histories. A caller
// announces its transfer, then repeatedly proposes the oldest announced
// transfer it still sees uncommitted until its own is decided; this is what
// lets any owner finish a paused owner's transfer.
class KSharedTransfer : public SharedAssetTransfer {
 public:
  KSharedTransfer(const AccountSetup& setup, std::size_t processes, std::size_t k);

  Task<bool> transfer(Scheduler& s, ProcessId p, AccountId a, AccountId b, Amount x) override;
  Task<Amount> read(Scheduler& s, ProcessId p, AccountId a) override;

  // Decisions another process committed on p's behalf, for the helping tests.
  bool decided(const AnnouncedTx& tx) const;
  std::uint64_t rounds_consumed(ProcessId p, AccountId a) const;

 private:
  struct RoundCell {
    std::optional<TxDecision> decided;
    std::size_t calls = 0;
  };
  struct AccountShared {
    std::vector<std::optional<AnnouncedTx>> announce;  // register per process
    std::vector<RoundCell> rounds;
  };
  struct ProcessLocal {
    std::set<TxDecision> hist;
    std::set<AnnouncedTx> committed;
    std::map<AccountId, std::uint64_t> round;
  };

  Amount balance_from(AccountId a, const std::vector<std::set<TxDecision>>& cells) const;

  const AccountSetup* setup_;
  std::size_t k_;
  std::map<AccountId, AccountShared> shared_;
  AtomicSnapshot<std::set<TxDecision>> hists_;
  std::vector<ProcessLocal> locals_;
  std::set<TxDecision> all_decisions_;  // observer view for tests, updated at decision steps
};

// Consensus for processes 1..k out of one k-shared transfer object: the pot
// account starts at 2k and every proposer tries to move 2k-p to the sink, so
// exactly one transfer can succeed and the leftover balance names the winner.
template <typename V>
class ConsensusFromTransfer {
 public:
  ConsensusFromTransfer(std::size_t k, SharedAssetTransfer& at, AccountId pot, AccountId sink)
      : k_(k), at_(&at), pot_(pot), sink_(sink), regs_(k) {}

  Task<V> propose(Scheduler& s, ProcessId p, V v) {
    if (p < 1 || p > k_) throw std::invalid_argument("proposer out of range");
    co_await regs_[p - 1].write(s, v);
    co_await at_->transfer(s, p, pot_, sink_, static_cast<Amount>(2 * k_ - p));
    const Amount q = co_await at_->read(s, p, pot_);
    if (q < 1 || q > static_cast<Amount>(k_)) throw std::logic_error("pot balance outside winner range");
    co_return co_await regs_[static_cast<std::size_t>(q) - 1].read(s);
  }

 private:
  std::size_t k_;
  SharedAssetTransfer* at_;
  AccountId pot_;
  AccountId sink_;
  std::vector<Register<V>> regs_;
};

// Account layout for the consensus construction: pot owned by 1..k with
// balance 2k, plus an unowned sink.
AccountSetup consensus_accounts(std::size_t k, AccountId pot, AccountId sink);

// One consensus execution: process p in 1..k proposes `values[p-1]`.
struct ConsensusExecution {
  AccountSetup setup;
  std::unique_ptr<SharedAssetTransfer> object;
  std::unique_ptr<ConsensusFromTransfer<std::int64_t>> consensus;
  Scheduler sched;
  std::vector<std::optional<std::int64_t>> decided;
};

enum class ConsensusBacking { Atomic, FromKConsensus };

std::unique_ptr<ConsensusExecution> make_consensus_execution(
    std::size_t k, const std::vector<std::int64_t>& values, ConsensusBacking backing);

struct ConsensusVerdict {
  std::uint64_t runs = 0;
  std::uint64_t agreement_failures = 0;
  std::uint64_t validity_failures = 0;
  bool ok() const { return agreement_failures == 0 && validity_failures == 0; }
};

void judge_consensus(const ConsensusExecution& ex, const std::vector<std::int64_t>& values,
                     ConsensusVerdict& v);

// Random-schedule sweep; values are 100+p so every proposal is distinct.
ConsensusVerdict consensus_random_sweep(std::size_t k, std::uint64_t schedules, Rng& rng,
                                        ConsensusBacking backing);

// Exhaustive sweep over every schedule (feasible for k=2).
ConsensusVerdict consensus_exhaustive_sweep(std::size_t k, std::uint64_t limit,
                                            ConsensusBacking backing, bool* truncated = nullptr);

}  // namespace at2::sm
