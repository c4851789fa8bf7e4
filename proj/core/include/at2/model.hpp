#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace at2 {

using ProcessId = std::uint32_t;
using AccountId = std::uint32_t;
using Amount = std::int64_t;

// A settled movement of funds. Ordering is lexicographic so transfers can
// live in std::set histories.
struct Transfer {
  AccountId from = 0;
  AccountId to = 0;
  Amount amount = 0;

  friend auto operator<=>(const Transfer&, const Transfer&) = default;
};

// Static account table: initial balances and the owner sets allowed to debit
// each account. Accounts never appear or disappear at runtime.
class AccountSetup {
 public:
  AccountSetup() = default;

  void add_account(AccountId a, Amount initial, std::vector<ProcessId> owners);

  bool known(AccountId a) const { return accounts_.count(a) != 0; }
  bool owns(ProcessId p, AccountId a) const;
  Amount initial(AccountId a) const;
  const std::vector<ProcessId>& owners(AccountId a) const;
  std::vector<AccountId> account_ids() const;

 private:
  struct Entry {
    Amount initial = 0;
    std::vector<ProcessId> owners;  // sorted
  };
  std::map<AccountId, Entry> accounts_;
};

// initial(a) plus incoming minus outgoing over an unordered transfer set.
// Histories are sets: applying the same transfer twice is a caller bug.
Amount balance(AccountId a, const AccountSetup& setup, const std::set<Transfer>& transfers);

struct OpTransfer {
  ProcessId process = 0;
  AccountId from = 0;
  AccountId to = 0;
  Amount amount = 0;
  friend auto operator<=>(const OpTransfer&, const OpTransfer&) = default;
};

struct OpRead {
  ProcessId process = 0;
  AccountId account = 0;
  friend auto operator<=>(const OpRead&, const OpRead&) = default;
};

using Operation = std::variant<OpTransfer, OpRead>;

// Transfers answer accepted/rejected, reads answer an amount.
using Response = std::variant<bool, Amount>;

// Mutable sequential ledger used as the correctness reference.
class LedgerState {
 public:
  explicit LedgerState(const AccountSetup& setup);
  // The setup must outlive the state; a temporary would dangle.
  explicit LedgerState(AccountSetup&&) = delete;

  // Invalid distinguishes malformed operations (unknown account, negative
  // amount) from a legal rejection, which is an Ok status with response false.
  enum class Status { Ok, Invalid };

  struct ApplyResult {
    Status status = Status::Ok;
    Response response;
  };

  // Transfer succeeds iff the caller owns the source account and funds
  // suffice; zero-amount transfers are legal and always succeed for owners.
  // A failed transfer leaves the state untouched. Unknown accounts are an
  // error, not a rejection.
  ApplyResult apply(const Operation& op);

  Amount balance_of(AccountId a) const;
  const AccountSetup& setup() const { return *setup_; }

 private:
  const AccountSetup* setup_;
  std::map<AccountId, Amount> balances_;
};

ProcessId op_process(const Operation& op);
std::string op_to_string(const Operation& op);
std::string response_to_string(const Response& r);

}  // namespace at2
