#include "at2/kshared.hpp"

#include <algorithm>
#include <stdexcept>

namespace at2::sm {

void require_k_shared(const AccountSetup& setup, std::size_t k) {
  for (AccountId a : setup.account_ids()) {
    if (setup.owners(a).size() > k) {
      throw std::invalid_argument("account shared by more than k processes");
    }
  }
}

AtomicAssetTransfer::AtomicAssetTransfer(const AccountSetup& setup, std::size_t k)
    : state_(setup) {
  require_k_shared(setup, k);
}

Task<bool> AtomicAssetTransfer::transfer(Scheduler& s, ProcessId p, AccountId a, AccountId b,
                                         Amount x) {
  co_return co_await s.access([this, p, a, b, x] {
    auto r = state_.apply(OpTransfer{p, a, b, x});
    if (r.status != LedgerState::Status::Ok) throw std::invalid_argument("malformed transfer");
    return std::get<bool>(r.response);
  });
}

Task<Amount> AtomicAssetTransfer::read(Scheduler& s, ProcessId /*p*/, AccountId a) {
  co_return co_await s.access([this, a] {
    auto r = state_.apply(OpRead{0, a});
    if (r.status != LedgerState::Status::Ok) throw std::invalid_argument("unknown account");
    return std::get<Amount>(r.response);
  });
}

KSharedTransfer::KSharedTransfer(const AccountSetup& setup, std::size_t processes, std::size_t k)
    : setup_(&setup), k_(k), hists_(processes), locals_(processes) {
  require_k_shared(setup, k);
  for (AccountId a : setup.account_ids()) {
    shared_[a].announce.resize(processes);
  }
}

Amount KSharedTransfer::balance_from(AccountId a,
                                     const std::vector<std::set<TxDecision>>& cells) const {
  std::set<TxDecision> all;
  for (const auto& c : cells) all.insert(c.begin(), c.end());
  Amount v = setup_->initial(a);
  for (const auto& d : all) {
    if (!d.success) continue;
    if (d.tx.to == a) v += d.tx.amount;
    if (d.tx.from == a) v -= d.tx.amount;
  }
  return v;
}

Task<bool> KSharedTransfer::transfer(Scheduler& s, ProcessId p, AccountId a, AccountId b,
                                     Amount x) {
  if (!setup_->known(a) || !setup_->known(b) || x < 0) {
    throw std::invalid_argument("malformed transfer");
  }
  if (!setup_->owns(p, a)) co_return false;

  ProcessLocal& mine = locals_.at(p);
  AccountShared& acc = shared_.at(a);
  const AnnouncedTx tx{a, b, x, p, mine.round[a]};

  co_await s.access([&acc, p, tx] { acc.announce[p] = tx; });

  // collect: one register read per process, oldest-first helping order
  std::set<AnnouncedTx> collected;
  for (ProcessId i = 0; i < static_cast<ProcessId>(locals_.size()); ++i) {
    auto seen = co_await s.access([&acc, i] { return acc.announce[i]; });
    if (seen && !mine.committed.count(*seen)) collected.insert(*seen);
  }

  while (collected.count(tx)) {
    const AnnouncedTx oldest = *std::min_element(
        collected.begin(), collected.end(), [](const AnnouncedTx& l, const AnnouncedTx& r) {
          return std::pair(l.round, l.announcer) < std::pair(r.round, r.announcer);
        });

    auto cells = co_await hists_.snapshot(s);
    const TxDecision proposal{oldest, balance_from(oldest.from, cells) >= oldest.amount};

    const std::uint64_t round = mine.round[a];
    auto decision = co_await s.access([this, &acc, round, proposal]() -> TxDecision {
      if (acc.rounds.size() <= round) acc.rounds.resize(round + 1);
      RoundCell& cell = acc.rounds[round];
      if (!cell.decided) cell.decided = proposal;
      ++cell.calls;
      if (cell.calls > k_) throw std::logic_error("k-consensus object exhausted");
      all_decisions_.insert(*cell.decided);
      return *cell.decided;
    });

    mine.hist.insert(decision);
    co_await hists_.update(s, p, mine.hist);
    mine.committed.insert(decision.tx);
    mine.round[a] = round + 1;
    collected.erase(decision.tx);
  }

  const auto mine_decided = std::find_if(mine.hist.begin(), mine.hist.end(),
                                         [&](const TxDecision& d) { return d.tx == tx; });
  if (mine_decided == mine.hist.end()) throw std::logic_error("own transfer left undecided");
  co_return mine_decided->success;
}

Task<Amount> KSharedTransfer::read(Scheduler& s, ProcessId /*p*/, AccountId a) {
  if (!setup_->known(a)) throw std::invalid_argument("unknown account");
  auto cells = co_await hists_.snapshot(s);
  co_return balance_from(a, cells);
}

bool KSharedTransfer::decided(const AnnouncedTx& tx) const {
  return std::any_of(all_decisions_.begin(), all_decisions_.end(),
                     [&](const TxDecision& d) { return d.tx == tx; });
}

std::uint64_t KSharedTransfer::rounds_consumed(ProcessId p, AccountId a) const {
  auto it = locals_.at(p).round.find(a);
  return it == locals_.at(p).round.end() ? 0 : it->second;
}

AccountSetup consensus_accounts(std::size_t k, AccountId pot, AccountId sink) {
  AccountSetup setup;
  std::vector<ProcessId> owners;
  for (std::size_t p = 1; p <= k; ++p) owners.push_back(static_cast<ProcessId>(p));
  setup.add_account(pot, static_cast<Amount>(2 * k), owners);
  setup.add_account(sink, 0, {});  // credited only; an empty owner set means read-only
  return setup;
}

namespace {

Task<void> proposer_task(ConsensusExecution& e, ProcessId p, std::int64_t v) {
  e.decided[p - 1] = co_await e.consensus->propose(e.sched, p, v);
}

}  // namespace

std::unique_ptr<ConsensusExecution> make_consensus_execution(
    std::size_t k, const std::vector<std::int64_t>& values, ConsensusBacking backing) {
  if (values.size() != k) throw std::invalid_argument("need one value per proposer");
  constexpr AccountId kPot = 0;
  constexpr AccountId kSink = 1;
  auto ex = std::make_unique<ConsensusExecution>();
  ex->setup = consensus_accounts(k, kPot, kSink);
  if (backing == ConsensusBacking::Atomic) {
    ex->object = std::make_unique<AtomicAssetTransfer>(ex->setup, k);
  } else {
    ex->object = std::make_unique<KSharedTransfer>(ex->setup, k + 1, k);
  }
  ex->consensus = std::make_unique<ConsensusFromTransfer<std::int64_t>>(k, *ex->object, kPot, kSink);
  ex->decided.assign(k, std::nullopt);

  for (std::size_t p = 1; p <= k; ++p) {
    ex->sched.spawn(proposer_task(*ex, static_cast<ProcessId>(p), values[p - 1]));
  }
  return ex;
}

void judge_consensus(const ConsensusExecution& ex, const std::vector<std::int64_t>& values,
                     ConsensusVerdict& v) {
  ++v.runs;
  std::optional<std::int64_t> first;
  bool agree = true;
  bool valid = true;
  for (const auto& d : ex.decided) {
    if (!d) {
      agree = valid = false;  // a proposer that never decided counts against both
      break;
    }
    if (!first) first = *d;
    if (*d != *first) agree = false;
    if (std::find(values.begin(), values.end(), *d) == values.end()) valid = false;
  }
  if (!agree) ++v.agreement_failures;
  if (!valid) ++v.validity_failures;
}

namespace {

std::vector<std::int64_t> default_values(std::size_t k) {
  std::vector<std::int64_t> values(k);
  for (std::size_t p = 0; p < k; ++p) values[p] = 100 + static_cast<std::int64_t>(p) + 1;
  return values;
}

}  // namespace

ConsensusVerdict consensus_random_sweep(std::size_t k, std::uint64_t schedules, Rng& rng,
                                        ConsensusBacking backing) {
  ConsensusVerdict v;
  const auto values = default_values(k);
  for (std::uint64_t i = 0; i < schedules; ++i) {
    auto ex = make_consensus_execution(k, values, backing);
    run_random_schedule(*ex, rng);
    judge_consensus(*ex, values, v);
  }
  return v;
}

ConsensusVerdict consensus_exhaustive_sweep(std::size_t k, std::uint64_t limit,
                                            ConsensusBacking backing, bool* truncated) {
  ConsensusVerdict v;
  const auto values = default_values(k);
  auto count = explore_schedules<ConsensusExecution>(
      [&] { return make_consensus_execution(k, values, backing); },
      [&](ConsensusExecution& ex) { judge_consensus(ex, values, v); }, limit);
  if (truncated) *truncated = !count.has_value();
  return v;
}

}  // namespace at2::sm
