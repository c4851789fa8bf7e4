#include "at2/model.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace at2 {

void AccountSetup::add_account(AccountId a, Amount initial, std::vector<ProcessId> owners) {
  if (initial < 0) throw std::invalid_argument("negative initial balance");
  std::sort(owners.begin(), owners.end());
  owners.erase(std::unique(owners.begin(), owners.end()), owners.end());
  accounts_[a] = Entry{initial, std::move(owners)};
}

bool AccountSetup::owns(ProcessId p, AccountId a) const {
  auto it = accounts_.find(a);
  if (it == accounts_.end()) return false;
  const auto& o = it->second.owners;
  return std::binary_search(o.begin(), o.end(), p);
}

Amount AccountSetup::initial(AccountId a) const {
  auto it = accounts_.find(a);
  if (it == accounts_.end()) throw std::out_of_range("unknown account");
  return it->second.initial;
}

const std::vector<ProcessId>& AccountSetup::owners(AccountId a) const {
  auto it = accounts_.find(a);
  if (it == accounts_.end()) throw std::out_of_range("unknown account");
  return it->second.owners;
}

std::vector<AccountId> AccountSetup::account_ids() const {
  std::vector<AccountId> ids;
  ids.reserve(accounts_.size());
  for (const auto& [id, _] : accounts_) ids.push_back(id);
  return ids;
}

Amount balance(AccountId a, const AccountSetup& setup, const std::set<Transfer>& transfers) {
  Amount v = setup.initial(a);
  for (const auto& t : transfers) {
    if (t.to == a) v += t.amount;
    if (t.from == a) v -= t.amount;
  }
  return v;
}

LedgerState::LedgerState(const AccountSetup& setup) : setup_(&setup) {
  for (AccountId a : setup.account_ids()) balances_[a] = setup.initial(a);
}

LedgerState::ApplyResult LedgerState::apply(const Operation& op) {
  if (const auto* t = std::get_if<OpTransfer>(&op)) {
    auto from = balances_.find(t->from);
    auto to = balances_.find(t->to);
    if (from == balances_.end() || to == balances_.end()) {
      return {Status::Invalid, Response{false}};
    }
    if (t->amount < 0) return {Status::Invalid, Response{false}};
    if (!setup_->owns(t->process, t->from) || from->second < t->amount) {
      return {Status::Ok, Response{false}};
    }
    from->second -= t->amount;
    to->second += t->amount;
    return {Status::Ok, Response{true}};
  }
  const auto& r = std::get<OpRead>(op);
  auto it = balances_.find(r.account);
  if (it == balances_.end()) return {Status::Invalid, Response{false}};
  return {Status::Ok, Response{it->second}};
}

Amount LedgerState::balance_of(AccountId a) const {
  auto it = balances_.find(a);
  if (it == balances_.end()) throw std::out_of_range("unknown account");
  return it->second;
}

ProcessId op_process(const Operation& op) {
  if (const auto* t = std::get_if<OpTransfer>(&op)) return t->process;
  return std::get<OpRead>(op).process;
}

std::string op_to_string(const Operation& op) {
  std::ostringstream os;
  if (const auto* t = std::get_if<OpTransfer>(&op)) {
    os << "p" << t->process << ":transfer(" << t->from << "->" << t->to << "," << t->amount << ")";
  } else {
    const auto& r = std::get<OpRead>(op);
    os << "p" << r.process << ":read(" << r.account << ")";
  }
  return os.str();
}

std::string response_to_string(const Response& r) {
  if (const auto* b = std::get_if<bool>(&r)) return *b ? "true" : "false";
  return std::to_string(std::get<Amount>(r));
}

}  // namespace at2
