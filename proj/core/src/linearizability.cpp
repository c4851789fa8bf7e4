#include "at2/linearizability.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

namespace at2 {
namespace {

struct SearchContext {
  const std::vector<HistoryOp>* ops;
  const AccountSetup* setup;
  std::uint64_t budget;
  std::uint64_t explored = 0;
  std::uint64_t complete_mask = 0;
  bool out_of_budget = false;
  // Visited (linearized-set, balances) pairs. Balances are part of the key
  // because incomplete transfers may be completed either way, so the same set
  // of ops can leave different states behind.
  std::set<std::pair<std::uint64_t, std::vector<Amount>>> seen;
  std::vector<std::uint32_t> stack;
  std::vector<std::uint32_t> witness;

  bool precedes_blocked(std::uint32_t cand, std::uint64_t mask) const {
    // cand may come next only if no unlinearized op responded before cand
    // was invoked.
    const auto inv = (*ops)[cand].invoke_index;
    for (std::uint32_t j = 0; j < ops->size(); ++j) {
      if (j == cand || (mask >> j) & 1) continue;
      if ((*ops)[j].respond_index < inv) return true;
    }
    return false;
  }

  bool dfs(std::uint64_t mask, LedgerState& state) {
    if ((mask & complete_mask) == complete_mask) {
      witness = stack;
      return true;  // incomplete leftovers are dropped
    }
    if (++explored > budget) {
      out_of_budget = true;
      return false;
    }
    std::vector<Amount> bal;
    for (AccountId a : setup->account_ids()) bal.push_back(state.balance_of(a));
    if (!seen.emplace(mask, bal).second) return false;

    for (std::uint32_t i = 0; i < ops->size(); ++i) {
      if ((mask >> i) & 1) continue;
      if (precedes_blocked(i, mask)) continue;
      const HistoryOp& h = (*ops)[i];

      LedgerState next = state;
      auto res = next.apply(h.op);
      if (res.status != LedgerState::Status::Ok) {
        throw std::invalid_argument("history contains a malformed operation");
      }
      const bool matches = !h.response || *h.response == res.response;

      if (matches) {
        stack.push_back(i);
        if (dfs(mask | (1ULL << i), next)) return true;
        stack.pop_back();
        if (out_of_budget) return false;
      }
      // An incomplete transfer may also be linearized as a rejection even
      // when the spec would accept it: the operation might have taken effect
      // never. Rejection leaves the state unchanged, which equals skipping it
      // here and dropping it at the end, so no extra branch is needed.
    }
    return false;
  }
};

}  // namespace

LinearizabilityResult is_linearizable(const std::vector<HistoryOp>& history,
                                      const AccountSetup& setup,
                                      std::uint64_t state_budget) {
  if (history.size() > 64) {
    throw std::invalid_argument("linearizability search supports at most 64 operations");
  }
  LinearizabilityResult out;
  SearchContext ctx;
  ctx.ops = &history;
  ctx.setup = &setup;
  ctx.budget = state_budget;
  for (std::uint32_t i = 0; i < history.size(); ++i) {
    if (history[i].complete()) ctx.complete_mask |= 1ULL << i;
  }
  LedgerState initial(setup);
  const bool ok = ctx.dfs(0, initial);
  out.explored_states = ctx.explored;
  if (ok) {
    out.verdict = LinearizabilityVerdict::Linearizable;
    out.witness = std::move(ctx.witness);
  } else if (ctx.out_of_budget) {
    out.verdict = LinearizabilityVerdict::Inconclusive;
  } else {
    out.verdict = LinearizabilityVerdict::NotLinearizable;
  }
  return out;
}

std::vector<HistoryOp> collect_history(const std::vector<HistoryEvent>& events) {
  std::vector<HistoryOp> ops;
  std::map<ProcessId, std::vector<std::uint32_t>> open;  // pending op indices per process
  for (std::uint32_t idx = 0; idx < events.size(); ++idx) {
    const auto& e = events[idx];
    if (e.kind == HistoryEvent::Kind::Invoke) {
      HistoryOp h;
      h.op = e.op;
      h.invoke_index = idx;
      open[e.process].push_back(static_cast<std::uint32_t>(ops.size()));
      ops.push_back(std::move(h));
    } else {
      auto it = open.find(e.process);
      if (it == open.end() || it->second.empty()) {
        throw std::invalid_argument("response without a pending invocation");
      }
      const std::uint32_t op_idx = it->second.front();
      it->second.erase(it->second.begin());
      ops[op_idx].response = e.response;
      ops[op_idx].respond_index = idx;
    }
  }
  return ops;
}

}  // namespace at2
