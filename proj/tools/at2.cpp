// Command-line front end: simulation runs, shared-memory checkers, epsilon
// curves and Monte Carlo cross-validation. stdout is machine-parseable
// (key=value lines or CSV), prose goes to stderr. Exit codes: 0 success,
// 1 invariant violation, 2 usage error.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "at2/analysis.hpp"
#include "at2/at2_sm.hpp"
#include "at2/kshared.hpp"
#include "at2/linearizability.hpp"
#include "at2/scenario.hpp"

namespace {

using namespace at2;

constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kUsage = 2;

[[noreturn]] void usage_error(const std::string& msg) {
  throw CLI::ValidationError(msg);  // CLI11 reports it; main maps it to exit 2
}

// ---- run-sim ----------------------------------------------------------

struct RunSimArgs {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;  // flag order
  std::string trace_out;
};

void add_scenario_flags(CLI::App* cmd, RunSimArgs& args) {
  cmd->add_option("--config", args.config_path, "scenario config file (key=value lines)");
  auto opt = [&](const std::string& flag, const std::string& key, const std::string& help) {
    cmd->add_option_function<std::string>(
           flag, [&args, key](const std::string& v) { args.overrides.emplace_back(key, v); }, help)
        ->type_name("VAL");
  };
  opt("--protocol", "protocol", "at2d | at2p | gossip | pcb | psb");
  opt("--n", "n", "process count");
  opt("--f", "f", "byzantine fraction (used by --byzantine auto)");
  opt("--byzantine", "byzantine", "auto | <count> | ids:a,b,c | none");
  opt("--seed", "seed", "run seed");
  opt("--adversary", "adversary", "none | equivocate | split | pace");
  opt("--G", "G", "gossip sample size");
  opt("--E,--E-hat-size", "E", "echo sample size");
  opt("--E-hat,--E_hat", "E_hat", "echo threshold");
  opt("--R", "R", "ready sample size");
  opt("--R-hat,--R_hat", "R_hat", "ready threshold");
  opt("--D", "D", "delivery sample size");
  opt("--D-hat,--D_hat", "D_hat", "delivery threshold");
  opt("--max-delay,--max_delay", "max_delay", "network delay bound");
  opt("--transfers", "transfers", "transfers issued per correct process");
  opt("--amount", "amount", "amount per transfer");
  opt("--initial-balance,--initial_balance", "initial_balance", "starting balance per account");
  opt("--messages", "messages", "messages broadcast by the psb sender");
  opt("--sender", "sender", "auto | <process id>");
  opt("--trace", "trace", "off | hash | full");
  cmd->add_flag_function(
      "--fifo", [&args](std::int64_t) { args.overrides.emplace_back("fifo", "true"); },
      "per-link FIFO delivery");
  cmd->add_option("--trace-out", args.trace_out, "write the full trace CSV here (implies --trace full)");
}

scn::Scenario build_scenario(const RunSimArgs& args) {
  scn::Scenario s;
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) usage_error("cannot open config file: " + args.config_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    s = scn::parse_scenario(buf.str());
  }
  for (const auto& [key, value] : args.overrides) scn::apply_kv(s, key, value);
  if (!args.trace_out.empty()) s.trace = "full";
  return s;
}

int cmd_run_sim(const RunSimArgs& args) {
  scn::Scenario s = build_scenario(args);
  scn::RunOutcome out = scn::run_scenario(s);

  std::ostringstream os;
  os << "protocol=" << s.protocol << "\n";
  os << "n=" << s.n << "\n";
  os << "seed=" << s.seed << "\n";
  os << "byzantine=";
  if (out.byzantine.empty()) {
    os << "none";
  } else {
    for (std::size_t i = 0; i < out.byzantine.size(); ++i)
      os << (i ? "," : "") << out.byzantine[i];
  }
  os << "\n";
  if (s.protocol != "at2d" && s.protocol != "at2p") os << "sender=" << out.sender << "\n";
  for (const auto& [name, v] : out.verdicts)
    os << "verdict." << name << "=" << (v.ok ? "ok" : "fail") << ","
       << (v.fatal ? "fatal" : "info") << "," << v.detail << "\n";
  for (const auto& [account, amount] : out.balances)
    os << "balance." << account << "=" << amount << "\n";
  for (const auto& [p, count] : out.delivered) os << "delivered." << p << "=" << count << "\n";
  os << "end_time=" << out.end_time << "\n";
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(out.trace_hash));
  os << "trace_hash=" << hash << "\n";
  os << "ok=" << (out.ok ? 1 : 0) << "\n";
  std::cout << os.str();

  if (!args.trace_out.empty()) {
    std::ofstream tf(args.trace_out);
    if (!tf) usage_error("cannot open trace output file: " + args.trace_out);
    tf << "time,from,to,kind,detail\n";
    for (const std::string& line : out.trace_lines) tf << line << "\n";
    std::cerr << "trace: " << out.trace_lines.size() << " records -> " << args.trace_out << "\n";
  }
  for (const auto& [name, v] : out.verdicts)
    if (!v.ok) std::cerr << (v.fatal ? "violated: " : "degraded: ") << name << " (" << v.detail << ")\n";
  return out.ok ? kOk : kViolation;
}

// ---- sm-check ---------------------------------------------------------

int cmd_sm_check(std::uint32_t processes, std::uint32_t ops, std::uint64_t schedules,
                 std::uint64_t seed) {
  sm::WorkloadParams params;
  params.processes = processes;
  params.ops_per_process = ops;

  const bool tiny = processes <= 2 && ops <= 3;
  std::uint64_t checked = 0;
  std::uint64_t violations = 0;
  std::uint64_t inconclusive = 0;

  auto judge = [&](sm::SmExecution& ex) {
    ++checked;
    auto history = collect_history(ex.recorder.events());
    auto res = is_linearizable(history, ex.setup);
    if (res.verdict == LinearizabilityVerdict::NotLinearizable) ++violations;
    if (res.verdict == LinearizabilityVerdict::Inconclusive) ++inconclusive;
  };

  if (tiny) {
    // Every schedule of one seeded script set; `schedules` caps the walk.
    Rng rng(seed);
    auto setup = sm::one_account_per_process(processes, params.initial_balance);
    auto scripts = sm::random_scripts(params, rng);
    auto made = sm::explore_schedules<sm::SmExecution>(
        [&] { return sm::make_execution(setup, scripts); }, judge, schedules);
    std::cout << "mode=exhaustive\n";
    std::cout << "schedules=" << checked << "\n";
    if (!made) std::cerr << "enumeration truncated at " << checked << " schedules\n";
  } else {
    for (std::uint64_t i = 0; i < schedules; ++i) {
      Rng rng = Rng(seed).fork(i);
      auto setup = sm::one_account_per_process(processes, params.initial_balance);
      auto scripts = sm::random_scripts(params, rng);
      auto ex = sm::make_execution(setup, scripts);
      sm::run_random_schedule(*ex, rng);
      judge(*ex);
    }
    std::cout << "mode=random\n";
    std::cout << "schedules=" << checked << "\n";
  }
  std::cout << "violations=" << violations << "\n";
  std::cout << "ok=" << (violations == 0 && inconclusive == 0 ? 1 : 0) << "\n";
  std::cerr << "checked " << checked << " schedules, " << violations << " violations\n";
  if (inconclusive) std::cerr << inconclusive << " runs exhausted the search budget\n";
  return violations == 0 && inconclusive == 0 ? kOk : kViolation;
}

// ---- consensus-demo ---------------------------------------------------

int cmd_consensus_demo(std::uint32_t k, std::uint64_t schedules, std::uint64_t seed) {
  struct Direction {
    const char* name;
    sm::ConsensusBacking backing;
  };
  const Direction directions[] = {
      {"from_transfer", sm::ConsensusBacking::Atomic},
      {"from_kconsensus", sm::ConsensusBacking::FromKConsensus},
  };

  bool all_ok = true;
  std::cout << "k=" << k << "\n";
  for (const Direction& d : directions) {
    sm::ConsensusVerdict v;
    if (k == 2) {
      bool truncated = false;
      v = sm::consensus_exhaustive_sweep(k, schedules, d.backing, &truncated);
      if (truncated) std::cerr << d.name << ": enumeration truncated at " << v.runs << " schedules\n";
    } else {
      Rng rng(seed);
      v = sm::consensus_random_sweep(k, schedules, rng, d.backing);
    }
    std::cout << d.name << ".schedules=" << v.runs << "\n";
    std::cout << d.name << ".agreement=" << (v.agreement_failures == 0 ? "ok" : "fail") << "\n";
    std::cout << d.name << ".validity=" << (v.validity_failures == 0 ? "ok" : "fail") << "\n";
    std::cerr << d.name << ": agreement: " << (v.agreement_failures == 0 ? "ok" : "FAIL")
              << ", validity: " << (v.validity_failures == 0 ? "ok" : "FAIL") << " over " << v.runs
              << " schedules\n";
    all_ok = all_ok && v.ok();
  }
  std::cout << "ok=" << (all_ok ? 1 : 0) << "\n";
  return all_ok ? kOk : kViolation;
}

// ---- epsilon-curve / cross-validate ------------------------------------

struct BoundArgs {
  std::string property;
  std::uint32_t N = 0;
  double f = 0.0;
  double G = 10;
  std::uint32_t E = 10, E_hat = 8, R = 10, R_hat = 4, D = 10, D_hat = 8;
};

analysis::PdeParams to_pde(const BoundArgs& a) {
  analysis::PdeParams p;
  p.N = a.N;
  p.f = a.f;
  p.G = a.G;
  if (a.property != "gossip-totality") {  // double-echo columns stay blank otherwise
    p.E = a.E;
    p.E_hat = a.E_hat;
    p.R = a.R;
    p.R_hat = a.R_hat;
    p.D = a.D;
    p.D_hat = a.D_hat;
  }
  return p;
}

analysis::EpsilonBound compute_bound(const std::string& property, const BoundArgs& a) {
  if (property == "gossip-totality") {
    analysis::EpsilonBound b = analysis::gossip_totality_bound(a.N, a.f, a.G);
    return b;
  }
  analysis::PdeParams p = to_pde(a);
  if (property == "validity") return analysis::pcb_validity_bound(p);
  if (property == "totality") return analysis::pcb_totality_bound(p);
  if (property == "consistency") return analysis::pcb_consistency_bound(p);
  usage_error("unknown property: " + property);
}

struct Sweep {
  std::string param;
  double lo = 0, hi = 0, step = 0;
};

Sweep parse_sweep(const std::string& text) {
  Sweep s;
  std::size_t eq = text.find('=');
  if (eq == std::string::npos) usage_error("sweep must look like param=lo:hi:step");
  s.param = text.substr(0, eq);
  std::string rest = text.substr(eq + 1);
  double* slots[3] = {&s.lo, &s.hi, &s.step};
  std::istringstream in(rest);
  std::string item;
  int i = 0;
  while (std::getline(in, item, ':')) {
    if (i >= 3) usage_error("sweep must look like param=lo:hi:step");
    try {
      std::size_t used = 0;
      *slots[i] = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      usage_error("bad sweep bound: " + item);
    }
    ++i;
  }
  if (i != 3) usage_error("sweep must look like param=lo:hi:step");
  if (s.step <= 0) usage_error("sweep step must be positive");
  return s;
}

void apply_sweep_value(BoundArgs& a, const std::string& param, double v) {
  auto as_u32 = [&](std::uint32_t& slot) {
    if (v < 0 || v != std::floor(v)) usage_error("sweep value must be a non-negative integer for " + param);
    slot = static_cast<std::uint32_t>(v);
  };
  if (param == "G") {
    a.G = v;
  } else if (param == "f") {
    a.f = v;
  } else if (param == "N") {
    as_u32(a.N);
  } else if (param == "E") {
    as_u32(a.E);
  } else if (param == "E_hat") {
    as_u32(a.E_hat);
  } else if (param == "R") {
    as_u32(a.R);
  } else if (param == "R_hat") {
    as_u32(a.R_hat);
  } else if (param == "D") {
    as_u32(a.D);
  } else if (param == "D_hat") {
    as_u32(a.D_hat);
  } else {
    usage_error("unknown sweep parameter: " + param);
  }
}

int cmd_epsilon_curve(const BoundArgs& base, const std::string& sweep_text) {
  if (sweep_text.empty()) {
    analysis::EpsilonBound b = compute_bound(base.property, base);
    analysis::write_csv_header(std::cout);
    analysis::write_csv_row(std::cout, analysis::csv_row(b, to_pde(base), 0));
    return kOk;
  }
  Sweep sweep = parse_sweep(sweep_text);
  {
    BoundArgs probe = base;  // reject unknown parameters before sweeping
    apply_sweep_value(probe, sweep.param, sweep.lo);
  }
  analysis::write_csv_header(std::cout);
  for (double v = sweep.lo; v <= sweep.hi + 1e-9; v += sweep.step) {
    BoundArgs point = base;
    apply_sweep_value(point, sweep.param, v);
    analysis::EpsilonBound b = compute_bound(base.property, point);
    analysis::write_csv_row(std::cout, analysis::csv_row(b, to_pde(point), 0));
  }
  return kOk;
}

// Monte Carlo estimate of the same property under the matching adversary.
int cmd_cross_validate(const BoundArgs& a, std::uint64_t runs, std::uint64_t seed,
                       std::uint32_t max_delay) {
  analysis::EpsilonBound bound = compute_bound(a.property, a);

  scn::Scenario s;
  s.n = a.N;
  s.f = a.f;
  s.byzantine = "auto";
  s.max_delay = max_delay;
  s.trace = "off";
  s.prob.G = static_cast<std::uint32_t>(a.G);
  s.prob.E = a.E;
  s.prob.E_hat = a.E_hat;
  s.prob.R = a.R;
  s.prob.R_hat = a.R_hat;
  s.prob.D = a.D;
  s.prob.D_hat = a.D_hat;

  std::string watched;  // the verdict whose failure counts as a violation
  if (a.property == "gossip-totality") {
    s.protocol = "gossip";
    s.adversary = "none";
    watched = "totality";
  } else if (a.property == "validity") {
    s.protocol = "pcb";
    s.adversary = "none";
    watched = "validity";
  } else if (a.property == "totality") {
    s.protocol = "pcb";
    s.adversary = "pace";
    watched = "totality";
  } else if (a.property == "consistency") {
    s.protocol = "pcb";
    s.adversary = "split";
    watched = "consistency";
  } else {
    usage_error("unknown property: " + a.property);
  }

  std::uint64_t violations = 0;
  for (std::uint64_t i = 0; i < runs; ++i) {
    s.seed = seed + i;
    scn::RunOutcome out = scn::run_scenario(s);
    if (!out.verdicts.at(watched).ok) ++violations;
  }

  const double empirical = runs ? static_cast<double>(violations) / static_cast<double>(runs) : 0.0;
  const double eps = bound.epsilon;
  const double sigma = runs ? std::sqrt(eps * (1.0 - eps) / static_cast<double>(runs)) : 0.0;
  const bool within = empirical <= eps + 3.0 * sigma;

  analysis::write_csv_header(std::cout);
  analysis::write_csv_row(std::cout, analysis::csv_row(bound, to_pde(a), 0));
  analysis::EpsilonBound mc{bound.property, empirical, "monte-carlo", {}};
  analysis::write_csv_row(std::cout, analysis::csv_row(mc, to_pde(a), runs));

  std::cerr << a.property << ": analytic " << eps << ", empirical " << empirical << " ("
            << violations << "/" << runs << "), tolerance " << eps + 3.0 * sigma << " -> "
            << (within ? "within bound" : "EXCEEDED") << "\n";
  return within ? kOk : kViolation;
}

void add_bound_flags(CLI::App* cmd, BoundArgs& args, bool require_n) {
  cmd->add_option("--property", args.property, "gossip-totality | validity | totality | consistency")
      ->required();
  auto* n = cmd->add_option("--N,--n", args.N, "process count");
  if (require_n) n->required();
  cmd->add_option("--f", args.f, "byzantine fraction")->check(CLI::Range(0.0, 0.999));
  cmd->add_option("--G", args.G, "gossip sample size");
  cmd->add_option("--E", args.E, "echo sample size");
  cmd->add_option("--E-hat,--E_hat", args.E_hat, "echo threshold");
  cmd->add_option("--R", args.R, "ready sample size");
  cmd->add_option("--R-hat,--R_hat", args.R_hat, "ready threshold");
  cmd->add_option("--D", args.D, "delivery sample size");
  cmd->add_option("--D-hat,--D_hat", args.D_hat, "delivery threshold");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"asset transfer without consensus: simulators, checkers and bounds"};
  app.require_subcommand(1);

  RunSimArgs run_args;
  CLI::App* run = app.add_subcommand("run-sim", "run one scenario to quiescence");
  add_scenario_flags(run, run_args);

  std::uint32_t sm_processes = 3;
  std::uint32_t sm_ops = 4;
  std::uint64_t sm_schedules = 1000;
  std::uint64_t sm_seed = 1;
  CLI::App* smc = app.add_subcommand("sm-check", "linearizability check of the shared-memory object");
  smc->add_option("--processes", sm_processes, "process count (<= 4)")->required();
  smc->add_option("--ops", sm_ops, "operations per process (<= 6)")->required();
  smc->add_option("--schedules", sm_schedules, "schedules to check");
  smc->add_option("--seed", sm_seed, "workload seed");

  std::uint32_t cd_k = 2;
  std::uint64_t cd_schedules = 1000;
  std::uint64_t cd_seed = 1;
  CLI::App* demo = app.add_subcommand("consensus-demo", "consensus from a k-shared transfer object, both directions");
  demo->add_option("--k", cd_k, "participant count (<= 4)")->required();
  demo->add_option("--schedules", cd_schedules, "schedules to check");
  demo->add_option("--seed", cd_seed, "schedule seed");

  BoundArgs curve_args;
  std::string sweep_text;
  CLI::App* curve = app.add_subcommand("epsilon-curve", "analytic failure bounds as CSV");
  add_bound_flags(curve, curve_args, true);
  curve->add_option("--sweep", sweep_text, "param=lo:hi:step over N,f,G,E,E_hat,R,R_hat,D,D_hat");
  std::uint64_t curve_seed = 1;
  curve->add_option("--seed", curve_seed, "accepted for interface uniformity");

  BoundArgs cv_args;
  std::uint64_t cv_runs = 200;
  std::uint64_t cv_seed = 1;
  std::uint32_t cv_max_delay = 10;
  CLI::App* cv = app.add_subcommand("cross-validate", "analytic bound vs Monte Carlo simulation");
  add_bound_flags(cv, cv_args, true);
  cv->add_option("--runs", cv_runs, "simulated runs");
  cv->add_option("--seed", cv_seed, "base seed, run i uses seed+i");
  cv->add_option("--max-delay,--max_delay", cv_max_delay, "network delay bound");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;  // help/version exit 0, everything else is usage
  }

  try {
    if (run->parsed()) return cmd_run_sim(run_args);
    if (smc->parsed()) {
      if (sm_processes < 1 || sm_processes > 4) usage_error("--processes must be in 1..4");
      if (sm_ops < 1 || sm_ops > 6) usage_error("--ops must be in 1..6");
      return cmd_sm_check(sm_processes, sm_ops, sm_schedules, sm_seed);
    }
    if (demo->parsed()) {
      if (cd_k < 2 || cd_k > 4) usage_error("--k must be in 2..4");
      return cmd_consensus_demo(cd_k, cd_schedules, cd_seed);
    }
    if (curve->parsed()) return cmd_epsilon_curve(curve_args, sweep_text);
    if (cv->parsed()) return cmd_cross_validate(cv_args, cv_runs, cv_seed, cv_max_delay);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << "\n";
    return kViolation;
  }
  return kUsage;
}
