#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "at2/linearizability.hpp"
#include "at2/model.hpp"
#include "at2/rng.hpp"
#include "at2/sched.hpp"

namespace at2::sm {

// Wait-free shared-memory asset transfer. Each process keeps the set of
// transfers it has issued in its own snapshot cell; a transfer is two shared
// steps (snapshot, then update) and a read is one (snapshot). Owner and
// balance checks run locally against the snapshot, so no operation ever
// waits on another process.
class SmTransfer {
 public:
  // Cell entries carry a per-process sequence number: the same (from, to,
  // amount) issued twice is two debits, not one set element.
  struct SeqTransfer {
    Transfer t;
    std::uint64_t seq = 0;
    friend auto operator<=>(const SeqTransfer&, const SeqTransfer&) = default;
  };

  SmTransfer(const AccountSetup& setup, std::size_t processes)
      : setup_(&setup), cells_(processes), issued_(processes) {}

  Task<bool> transfer(Scheduler& s, ProcessId p, AccountId a, AccountId b, Amount x) {
    if (!setup_->known(a) || !setup_->known(b) || x < 0) {
      throw std::invalid_argument("malformed transfer");
    }
    auto cells = co_await cells_.snapshot(s);
    if (!setup_->owns(p, a) || balance_in(a, cells) < x) co_return false;
    issued_[p].insert(SeqTransfer{Transfer{a, b, x}, issued_[p].size()});
    co_await cells_.update(s, p, issued_[p]);
    co_return true;
  }

  Task<Amount> read(Scheduler& s, ProcessId /*reader*/, AccountId a) {
    if (!setup_->known(a)) throw std::invalid_argument("unknown account");
    auto cells = co_await cells_.snapshot(s);
    co_return balance_in(a, cells);
  }

  Amount balance_in(AccountId a, const std::vector<std::set<SeqTransfer>>& cells) const {
    Amount v = setup_->initial(a);
    for (const auto& cell : cells) {
      for (const auto& st : cell) {
        if (st.t.to == a) v += st.t.amount;
        if (st.t.from == a) v -= st.t.amount;
      }
    }
    return v;
  }

 private:
  const AccountSetup* setup_;
  AtomicSnapshot<std::set<SeqTransfer>> cells_;
  std::vector<std::set<SeqTransfer>> issued_;  // process-local, touched only by its owner
};

// Appends invocation/response events in the order scheduler steps produce
// them, which is the real-time order the linearizability check needs.
class HistoryRecorder {
 public:
  void invoke(const Operation& op) {
    events_.push_back({HistoryEvent::Kind::Invoke, op_process(op), op, Response{false}});
  }
  void respond(ProcessId p, const Response& r) {
    events_.push_back({HistoryEvent::Kind::Respond, p, Operation{OpRead{}}, r});
  }
  const std::vector<HistoryEvent>& events() const { return events_; }

 private:
  std::vector<HistoryEvent> events_;
};

// One constructed execution: a scheduler with one spawned client per process
// running a fixed operation script against a fresh SmTransfer instance.
struct SmExecution {
  AccountSetup setup;
  std::unique_ptr<SmTransfer> object;
  Scheduler sched;
  HistoryRecorder recorder;
};

Task<void> run_script(Scheduler& s, SmTransfer& obj, HistoryRecorder& rec,
                      std::vector<Operation> script);

std::unique_ptr<SmExecution> make_execution(const AccountSetup& setup,
                                            const std::vector<std::vector<Operation>>& scripts);

// Random operation scripts for stress runs: each process owns one account and
// issues a seeded mix of transfers and reads.
struct WorkloadParams {
  std::uint32_t processes = 3;
  std::uint32_t ops_per_process = 4;
  Amount initial_balance = 10;
  Amount max_amount = 6;
};

AccountSetup one_account_per_process(std::uint32_t processes, Amount initial_balance);
std::vector<std::vector<Operation>> random_scripts(const WorkloadParams& params, Rng& rng);

}  // namespace at2::sm
