#include "at2/at2_sm.hpp"

namespace at2::sm {

Task<void> run_script(Scheduler& s, SmTransfer& obj, HistoryRecorder& rec,
                      std::vector<Operation> script) {
  for (const auto& op : script) {
    rec.invoke(op);
    if (const auto* t = std::get_if<OpTransfer>(&op)) {
      bool ok = co_await obj.transfer(s, t->process, t->from, t->to, t->amount);
      rec.respond(t->process, Response{ok});
    } else {
      const auto& r = std::get<OpRead>(op);
      Amount v = co_await obj.read(s, r.process, r.account);
      rec.respond(r.process, Response{v});
    }
  }
}

std::unique_ptr<SmExecution> make_execution(const AccountSetup& setup,
                                            const std::vector<std::vector<Operation>>& scripts) {
  auto ex = std::make_unique<SmExecution>();
  ex->setup = setup;
  ex->object = std::make_unique<SmTransfer>(ex->setup, scripts.size());
  for (const auto& script : scripts) {
    ex->sched.spawn(run_script(ex->sched, *ex->object, ex->recorder, script));
  }
  return ex;
}

AccountSetup one_account_per_process(std::uint32_t processes, Amount initial_balance) {
  AccountSetup setup;
  for (std::uint32_t p = 0; p < processes; ++p) {
    setup.add_account(p, initial_balance, {p});
  }
  return setup;
}

std::vector<std::vector<Operation>> random_scripts(const WorkloadParams& params, Rng& rng) {
  std::vector<std::vector<Operation>> scripts(params.processes);
  for (std::uint32_t p = 0; p < params.processes; ++p) {
    for (std::uint32_t i = 0; i < params.ops_per_process; ++i) {
      if (rng.below(10) < 7) {
        AccountId to = static_cast<AccountId>(rng.below(params.processes));
        // Self-transfers are legal; occasionally attempt a non-owned debit to
        // exercise the rejection path.
        AccountId from = p;
        if (rng.below(10) == 0) from = static_cast<AccountId>(rng.below(params.processes));
        const Amount x = static_cast<Amount>(rng.below(static_cast<std::uint64_t>(params.max_amount) + 1));
        scripts[p].push_back(OpTransfer{p, from, to, x});
      } else {
        scripts[p].push_back(OpRead{p, static_cast<AccountId>(rng.below(params.processes))});
      }
    }
  }
  return scripts;
}

}  // namespace at2::sm
