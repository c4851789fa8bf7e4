#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "at2/model.hpp"

namespace at2 {

// One operation as observed by the history recorder. Incomplete operations
// (invoked, never responded) carry no response; the checker may linearize
// them with any legal response or drop them entirely.
struct HistoryOp {
  Operation op;
  std::optional<Response> response;
  std::uint32_t invoke_index = 0;               // position of the invocation event
  std::uint32_t respond_index = kNoResponse;    // position of the response event
  static constexpr std::uint32_t kNoResponse = 0xffffffff;

  bool complete() const { return respond_index != kNoResponse; }
};

enum class LinearizabilityVerdict {
  Linearizable,
  NotLinearizable,
  // Search budget exhausted before either answer; never reported as a pass.
  Inconclusive,
};

struct LinearizabilityResult {
  LinearizabilityVerdict verdict = LinearizabilityVerdict::Inconclusive;
  std::uint64_t explored_states = 0;
  // A witness order (indices into the input) when the verdict is Linearizable.
  std::vector<std::uint32_t> witness;
};

// Decides whether the completed history can be reordered into a legal
// sequential execution that respects real-time precedence: op A precedes op B
// iff A responded before B was invoked. Search state is the set of linearized
// ops plus resulting balances, memoized to keep the common case polynomial.
LinearizabilityResult is_linearizable(const std::vector<HistoryOp>& history,
                                      const AccountSetup& setup,
                                      std::uint64_t state_budget = 2'000'000);

// Event-stream form used by the shared-memory harness: events are appended in
// global time order and turned into HistoryOps here.
struct HistoryEvent {
  enum class Kind { Invoke, Respond };
  Kind kind;
  ProcessId process = 0;
  Operation op;        // meaningful on Invoke
  Response response;   // meaningful on Respond
};

// Pairs each response with the oldest outstanding invocation of the same
// process. Throws if a process responds without a pending invocation.
std::vector<HistoryOp> collect_history(const std::vector<HistoryEvent>& events);

}  // namespace at2
