#include "at2/at2_mp.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "at2/wire.hpp"

namespace at2::mp {
namespace {

constexpr std::uint8_t kTxTag = 0x54;
constexpr std::uint32_t kMaxDeps = 65536;

}  // namespace

std::string encode_tx_message(const TxRecord& tx, const std::vector<TxRecord>& deps) {
  WireWriter w;
  w.u8(kTxTag);
  w.u32(tx.from);
  w.u32(tx.to);
  w.i64(tx.amount);
  w.u64(tx.seq);
  w.u32(std::uint32_t(deps.size()));
  for (const auto& d : deps) {
    w.u32(d.from);
    w.u32(d.to);
    w.i64(d.amount);
    w.u64(d.seq);
  }
  return w.take();
}

std::optional<ParsedTxMessage> parse_tx_message(std::string_view bytes) {
  WireReader r(bytes);
  if (r.u8() != kTxTag) return std::nullopt;
  ParsedTxMessage m;
  m.tx.from = r.u32();
  m.tx.to = r.u32();
  m.tx.amount = r.i64();
  m.tx.seq = r.u64();
  const auto count = r.u32();
  if (r.failed() || count > kMaxDeps) return std::nullopt;
  m.deps.resize(count);
  for (auto& d : m.deps) {
    d.from = r.u32();
    d.to = r.u32();
    d.amount = r.i64();
    d.seq = r.u64();
  }
  if (!r.clean()) return std::nullopt;
  return m;
}

namespace {

// Same arithmetic as the shared ledger, but over seq-tagged records: the one
// account can receive equal (from, to, amount) transfers at different seqs.
Amount tally(AccountId a, const AccountSetup& setup, const std::set<TxRecord>& hist) {
  Amount v = setup.initial(a);
  for (const auto& t : hist) {
    if (t.to == a) v += t.amount;
    if (t.from == a) v -= t.amount;
  }
  return v;
}

}  // namespace

TransferEngine::TransferEngine(const AccountSetup& setup, ProcessId self, std::uint32_t n,
                               BroadcastFn broadcast)
    : setup_(&setup), self_(self), n_(n), broadcast_(std::move(broadcast)), seq_(n, 0), rec_(n, 0) {
  if (self >= n) throw std::invalid_argument("TransferEngine: self out of range");
  if (!setup.known(self)) throw std::invalid_argument("TransferEngine: no account for self");
}

bool TransferEngine::submit(AccountId dest, Amount amount) {
  if (!setup_->known(dest) || amount < 0) {
    throw std::invalid_argument("TransferEngine::submit: malformed transfer");
  }
  if (own_pending_) return false;
  if (balance_of(self_) < amount) return false;

  TxRecord tx{self_, dest, amount, seq_[self_] + 1};
  own_pending_ = tx;
  std::vector<TxRecord> deps(deps_.begin(), deps_.end());
  deps_.clear();
  broadcast_(encode_tx_message(tx, deps));
  return true;
}

void TransferEngine::deliver(ProcessId source, std::string_view payload) {
  auto m = parse_tx_message(payload);
  if (!m || source >= n_) return;
  // transfers that could never validate are dropped on the floor
  if (m->tx.from != source || !setup_->known(m->tx.from) || !setup_->known(m->tx.to) ||
      m->tx.amount < 0) {
    return;
  }
  if (m->tx.seq != rec_[source] + 1) return;
  ++rec_[source];
  to_validate_.emplace(std::make_pair(source, m->tx.seq), PendingIn{m->tx, std::move(m->deps)});
  run_validation();
}

bool TransferEngine::valid(const PendingIn& m) const {
  if (m.tx.seq != seq_[m.tx.from] + 1) return false;
  const auto& h = history_of(m.tx.from);
  if (tally(m.tx.from, *setup_, h) < m.tx.amount) return false;
  for (const auto& d : m.deps) {
    if (!h.count(d)) return false;
  }
  return true;
}

void TransferEngine::apply(const PendingIn& m) {
  hist_[m.tx.from].insert(m.tx);
  hist_[m.tx.to].insert(m.tx);
  seq_[m.tx.from] = m.tx.seq;
  if (m.tx.to == self_) deps_.insert(m.tx);
  apply_order_.push_back(m.tx);

  const auto bal = tally(m.tx.from, *setup_, hist_[m.tx.from]);
  if (bal < 0 && !violation_) {
    std::ostringstream os;
    os << "account " << m.tx.from << " driven to " << bal << " by seq " << m.tx.seq;
    violation_ = os.str();
  }

  if (m.tx.from == self_ && own_pending_ && m.tx == *own_pending_) {
    own_pending_.reset();
    if (resolve_) resolve_(m.tx, true);
  }
}

void TransferEngine::run_validation() {
  // a resolve callback may feed the engine again; the outer pass will pick
  // up anything inserted while it runs
  if (validating_) return;
  validating_ = true;
  bool progress = true;
  while (progress) {
    progress = false;
    for (auto it = to_validate_.begin(); it != to_validate_.end();) {
      if (valid(it->second)) {
        auto m = std::move(it->second);
        it = to_validate_.erase(it);
        apply(m);
        progress = true;
      } else {
        ++it;
      }
    }
  }
  validating_ = false;
}

Amount TransferEngine::balance_of(AccountId a) const {
  return tally(a, *setup_, history_of(a));
}

const std::set<TxRecord>& TransferEngine::history_of(AccountId a) const {
  auto it = hist_.find(a);
  return it == hist_.end() ? empty_ : it->second;
}

}  // namespace at2::mp
