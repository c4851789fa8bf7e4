#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "at2/broadcast_prob.hpp"
#include "at2/model.hpp"
#include "at2/simnet.hpp"

namespace at2::scn {

// One simulated run, described flat so it can come from a key=value config
// file, CLI flags, or both. Strings stay strings until run time; "auto"
// placeholders are resolved against n, f and the seed.
struct Scenario {
  std::string protocol = "at2d";  // at2d | at2p | gossip | pcb | psb
  std::uint32_t n = 0;  // required; run_scenario rejects an unset count
  double f = 0.0;                  // byzantine fraction, used by byzantine=auto
  std::string byzantine = "auto";  // auto | <count> | ids:a,b,c | a,b,c | none
  std::uint64_t seed = 1;
  std::string adversary = "none";  // none | equivocate | split | pace

  prob::ProbParams prob;

  std::uint32_t max_delay = 10;
  bool fifo = false;
  std::string trace = "hash";  // off | hash | full

  // Asset-transfer workload: every correct process issues this many
  // transfers of `amount`, round-robin destinations.
  std::uint32_t transfers = 1;
  Amount amount = 1;
  Amount initial_balance = 10;

  // Broadcast workload: the designated sender emits this many messages
  // (psb; gossip and pcb always send exactly one).
  std::uint32_t messages = 1;
  std::string sender = "auto";  // auto | <process id>
};

// Applies one key=value pair. Throws std::invalid_argument for unknown keys
// or unparseable values.
void apply_kv(Scenario& s, const std::string& key, const std::string& value);

// Parses a config file: one key=value per line, '#' comments, blank lines ok.
Scenario parse_scenario(const std::string& text);

// Resolves the byzantine spec into concrete ids: "auto" picks
// floor(f*n) ids at random from the seed, a bare count picks that many,
// "ids:..." or a comma list is taken literally. Always sorted, never all n.
std::vector<ProcessId> choose_byzantine(const Scenario& s);

struct Verdict {
  bool ok = true;
  bool fatal = false;  // counts toward the process exit code when failed
  std::string detail;
};

struct RunOutcome {
  bool ok = true;  // no fatal verdict failed
  std::map<std::string, Verdict> verdicts;
  std::vector<ProcessId> byzantine;
  ProcessId sender = 0;  // broadcast protocols only
  std::map<AccountId, Amount> balances;      // at2 protocols, correct view
  std::map<ProcessId, std::uint64_t> delivered;  // per correct process
  std::uint64_t end_time = 0;
  std::uint64_t trace_hash = 0;
  std::vector<std::string> trace_lines;  // only when trace=full
};

RunOutcome run_scenario(const Scenario& s);

}  // namespace at2::scn
