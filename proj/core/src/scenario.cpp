#include "at2/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "at2/adversaries.hpp"
#include "at2/at2_mp.hpp"
#include "at2/broadcast_det.hpp"
#include "at2/rng.hpp"

namespace at2::scn {
namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw std::invalid_argument("bad value for " + key + ": '" + value + "'");
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const char* end = value.data() + value.size();
  auto [p, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || p != end || value.empty()) bad_value(key, value);
  return out;
}

std::uint32_t to_u32(const std::string& key, const std::string& value) {
  std::uint64_t v = to_u64(key, value);
  if (v > std::numeric_limits<std::uint32_t>::max()) bad_value(key, value);
  return static_cast<std::uint32_t>(v);
}

Amount to_amount(const std::string& key, const std::string& value) {
  std::uint64_t v = to_u64(key, value);
  if (v > static_cast<std::uint64_t>(std::numeric_limits<Amount>::max())) bad_value(key, value);
  return static_cast<Amount>(v);
}

double to_f64(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    bad_value(key, value);
  }
  if (used != value.size()) bad_value(key, value);
  return out;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  bad_value(key, value);
}

bool one_of(const std::string& v, std::initializer_list<const char*> opts) {
  for (const char* o : opts)
    if (v == o) return true;
  return false;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void apply_kv(Scenario& s, const std::string& key, const std::string& value) {
  if (key == "protocol") {
    if (!one_of(value, {"at2d", "at2p", "gossip", "pcb", "psb"})) bad_value(key, value);
    s.protocol = value;
  } else if (key == "n") {
    s.n = to_u32(key, value);
    if (s.n == 0) bad_value(key, value);
  } else if (key == "f") {
    s.f = to_f64(key, value);
    if (s.f < 0.0 || s.f >= 1.0) bad_value(key, value);
  } else if (key == "byzantine") {
    s.byzantine = value;
  } else if (key == "seed") {
    s.seed = to_u64(key, value);
  } else if (key == "adversary") {
    if (!one_of(value, {"none", "equivocate", "split", "pace"})) bad_value(key, value);
    s.adversary = value;
  } else if (key == "G") {
    s.prob.G = to_u32(key, value);
  } else if (key == "E") {
    s.prob.E = to_u32(key, value);
  } else if (key == "E_hat") {
    s.prob.E_hat = to_u32(key, value);
  } else if (key == "R") {
    s.prob.R = to_u32(key, value);
  } else if (key == "R_hat") {
    s.prob.R_hat = to_u32(key, value);
  } else if (key == "D") {
    s.prob.D = to_u32(key, value);
  } else if (key == "D_hat") {
    s.prob.D_hat = to_u32(key, value);
  } else if (key == "max_delay") {
    s.max_delay = to_u32(key, value);
    if (s.max_delay == 0) bad_value(key, value);
  } else if (key == "fifo") {
    s.fifo = to_bool(key, value);
  } else if (key == "trace") {
    if (!one_of(value, {"off", "hash", "full"})) bad_value(key, value);
    s.trace = value;
  } else if (key == "transfers") {
    s.transfers = to_u32(key, value);
  } else if (key == "amount") {
    s.amount = to_amount(key, value);
  } else if (key == "initial_balance") {
    s.initial_balance = to_amount(key, value);
  } else if (key == "messages") {
    s.messages = to_u32(key, value);
  } else if (key == "sender") {
    if (value != "auto") to_u32(key, value);
    s.sender = value;
  } else {
    throw std::invalid_argument("unknown config key: '" + key + "'");
  }
}

Scenario parse_scenario(const std::string& text) {
  Scenario s;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::string line = trim(raw);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("line " + std::to_string(lineno) + ": expected key=value");
    apply_kv(s, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return s;
}

std::vector<ProcessId> choose_byzantine(const Scenario& s) {
  const std::string& spec = s.byzantine;
  if (spec.empty() || spec == "none") return {};

  auto pick = [&](std::uint32_t count) {
    if (count >= s.n) throw std::invalid_argument("byzantine count must leave a correct process");
    Rng rng = Rng(s.seed).fork(0xb12a);
    std::vector<std::uint32_t> ids = rng.distinct(count, s.n);
    std::vector<ProcessId> out(ids.begin(), ids.end());
    std::sort(out.begin(), out.end());
    return out;
  };

  if (spec == "auto") return pick(static_cast<std::uint32_t>(s.f * s.n));

  std::string body = spec;
  bool explicit_ids = false;
  if (body.rfind("ids:", 0) == 0) {
    body = body.substr(4);
    explicit_ids = true;
  }
  if (!explicit_ids && body.find(',') == std::string::npos) return pick(to_u32("byzantine", body));

  std::vector<ProcessId> out;
  std::istringstream in(body);
  std::string item;
  while (std::getline(in, item, ',')) {
    ProcessId id = to_u32("byzantine", trim(item));
    if (id >= s.n) throw std::invalid_argument("byzantine id out of range: " + item);
    out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.size() >= s.n) throw std::invalid_argument("byzantine set must leave a correct process");
  return out;
}

namespace {

constexpr std::uint64_t kKickTag = 1;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

AccountSetup make_setup(std::uint32_t n, Amount initial) {
  AccountSetup setup;
  for (ProcessId p = 0; p < n; ++p) setup.add_account(p, initial, {p});
  return setup;
}

// Issues `transfers` transfers of `amount` round-robin and retries whenever
// new funds may have arrived. Retries only piggyback on existing events so
// the run still quiesces.
class TransferWorkload {
 public:
  TransferWorkload(std::uint32_t transfers, Amount amount) : transfers_(transfers), amount_(amount) {}

  void maybe_submit(sim::Context& ctx, mp::TransferEngine& engine) {
    if (issued_ >= transfers_ || engine.own_pending()) return;
    AccountId dest = (ctx.id() + 1 + issued_) % ctx.n();
    if (dest == ctx.id()) dest = (dest + 1) % ctx.n();
    if (engine.submit(dest, amount_)) ++issued_;
  }

  void resolved() { ++resolved_; }

  std::uint32_t issued() const { return issued_; }
  std::uint32_t requested() const { return transfers_; }
  std::uint32_t settled() const { return resolved_; }

 private:
  std::uint32_t transfers_;
  Amount amount_;
  std::uint32_t issued_ = 0;
  std::uint32_t resolved_ = 0;
};

class At2DNode : public sim::Protocol {
 public:
  At2DNode(const AccountSetup& setup, std::uint32_t transfers, Amount amount)
      : setup_(setup), work_(transfers, amount) {}

  void start(sim::Context& ctx) override {
    ctx_ = &ctx;
    engine_.emplace(setup_, ctx.id(), ctx.n(),
                    [this](std::string payload) { bc_->broadcast(*ctx_, std::move(payload)); });
    engine_->on_resolve([this](const mp::TxRecord&, bool) {
      work_.resolved();
      work_.maybe_submit(*ctx_, *engine_);
    });
    bc_.emplace([this](ProcessId source, std::string_view payload) {
      order_[source].push_back(fnv1a(payload));
      engine_->deliver(source, payload);
      work_.maybe_submit(*ctx_, *engine_);
    });
    ctx.set_timer(1 + ctx.id(), kKickTag);
  }

  void receive(sim::Context& ctx, ProcessId from, std::string_view payload) override {
    bc_->on_message(ctx, from, payload);
  }

  void timer(sim::Context&, std::uint64_t) override { work_.maybe_submit(*ctx_, *engine_); }

  mp::TransferEngine& engine() { return *engine_; }
  const TransferWorkload& work() const { return work_; }
  const std::map<ProcessId, std::vector<std::uint64_t>>& order() const { return order_; }

 private:
  const AccountSetup& setup_;
  TransferWorkload work_;
  sim::Context* ctx_ = nullptr;
  std::optional<mp::TransferEngine> engine_;
  std::optional<det::SecureBroadcast> bc_;
  std::map<ProcessId, std::vector<std::uint64_t>> order_;
};

class At2PNode : public sim::Protocol {
 public:
  At2PNode(const AccountSetup& setup, const prob::ProbParams& params, std::uint32_t transfers,
           Amount amount)
      : setup_(setup), params_(params), work_(transfers, amount) {}

  void start(sim::Context& ctx) override {
    ctx_ = &ctx;
    engine_.emplace(setup_, ctx.id(), ctx.n(), [this](std::string payload) {
      psbs_[ctx_->id()]->broadcast(*ctx_, std::move(payload));
    });
    engine_->on_resolve([this](const mp::TxRecord&, bool) {
      work_.resolved();
      work_.maybe_submit(*ctx_, *engine_);
    });
    for (ProcessId sigma = 0; sigma < ctx.n(); ++sigma) {
      psbs_.push_back(std::make_unique<prob::SequencedBroadcast>(
          ctx, sigma, params_, [this, sigma](std::string m) {
            engine_->deliver(sigma, m);
            work_.maybe_submit(*ctx_, *engine_);
          }));
    }
    ctx.set_timer(1 + ctx.id(), kKickTag);
  }

  void receive(sim::Context& ctx, ProcessId from, std::string_view bytes) override {
    auto env = prob::parse_envelope(bytes);
    if (!env || env->sigma >= psbs_.size()) return;
    psbs_[env->sigma]->on_message(ctx, from, *env);
  }

  void timer(sim::Context&, std::uint64_t) override { work_.maybe_submit(*ctx_, *engine_); }

  mp::TransferEngine& engine() { return *engine_; }
  const TransferWorkload& work() const { return work_; }

 private:
  const AccountSetup& setup_;
  prob::ProbParams params_;
  TransferWorkload work_;
  sim::Context* ctx_ = nullptr;
  std::optional<mp::TransferEngine> engine_;
  std::vector<std::unique_ptr<prob::SequencedBroadcast>> psbs_;
};

class GossipNode : public sim::Protocol {
 public:
  GossipNode(ProcessId sender, std::uint32_t G, std::string payload)
      : sender_(sender), G_(G), payload_(std::move(payload)) {}

  void start(sim::Context& ctx) override {
    inst_.emplace(ctx, sender_, 0, G_, [this](std::string m) {
      ++deliveries_;
      got_ = std::move(m);
    });
    if (ctx.id() == sender_) inst_->broadcast(ctx, payload_);
  }

  void receive(sim::Context& ctx, ProcessId from, std::string_view bytes) override {
    auto env = prob::parse_envelope(bytes);
    if (!env || env->sigma != sender_ || env->index != 0) return;
    inst_->on_message(ctx, from, *env);
  }

  std::uint64_t deliveries() const { return deliveries_; }
  const std::optional<std::string>& got() const { return got_; }

 private:
  ProcessId sender_;
  std::uint32_t G_;
  std::string payload_;
  std::optional<prob::GossipInstance> inst_;
  std::uint64_t deliveries_ = 0;
  std::optional<std::string> got_;
};

class PcbNode : public sim::Protocol {
 public:
  PcbNode(ProcessId sender, const prob::ProbParams& params, std::string payload)
      : sender_(sender), params_(params), payload_(std::move(payload)) {}

  void start(sim::Context& ctx) override {
    inst_.emplace(ctx, sender_, 0, params_, [this](std::string m) {
      ++deliveries_;
      got_ = std::move(m);
    });
    if (ctx.id() == sender_) inst_->broadcast(ctx, payload_);
  }

  void receive(sim::Context& ctx, ProcessId from, std::string_view bytes) override {
    auto env = prob::parse_envelope(bytes);
    if (!env || env->sigma != sender_ || env->index != 0) return;
    inst_->on_message(ctx, from, *env);
  }

  std::uint64_t deliveries() const { return deliveries_; }
  const std::optional<std::string>& got() const { return got_; }

 private:
  ProcessId sender_;
  prob::ProbParams params_;
  std::string payload_;
  std::optional<prob::PcbInstance> inst_;
  std::uint64_t deliveries_ = 0;
  std::optional<std::string> got_;
};

class PsbNode : public sim::Protocol {
 public:
  PsbNode(ProcessId sender, const prob::ProbParams& params, std::vector<std::string> script)
      : sender_(sender), params_(params), script_(std::move(script)) {}

  void start(sim::Context& ctx) override {
    inst_ = std::make_unique<prob::SequencedBroadcast>(
        ctx, sender_, params_, [this](std::string m) { got_.push_back(std::move(m)); });
    if (ctx.id() == sender_)
      for (const std::string& m : script_) inst_->broadcast(ctx, m);
  }

  void receive(sim::Context& ctx, ProcessId from, std::string_view bytes) override {
    auto env = prob::parse_envelope(bytes);
    if (!env || env->sigma != sender_) return;
    inst_->on_message(ctx, from, *env);
  }

  const std::vector<std::string>& got() const { return got_; }

 private:
  ProcessId sender_;
  prob::ProbParams params_;
  std::vector<std::string> script_;
  std::unique_ptr<prob::SequencedBroadcast> inst_;
  std::vector<std::string> got_;
};

sim::TraceMode trace_mode(const std::string& v) {
  if (v == "off") return sim::TraceMode::Off;
  if (v == "hash") return sim::TraceMode::HashOnly;
  if (v == "full") return sim::TraceMode::Full;
  bad_value("trace", v);
}

ProcessId resolve_sender(const Scenario& s, const std::vector<ProcessId>& byz) {
  if (s.sender != "auto") {
    ProcessId id = to_u32("sender", s.sender);
    if (id >= s.n) throw std::invalid_argument("sender id out of range");
    return id;
  }
  if (s.adversary == "split") {
    if (byz.empty()) throw std::invalid_argument("adversary 'split' needs byzantine processes");
    return byz.front();
  }
  for (ProcessId p = 0; p < s.n; ++p)
    if (!std::binary_search(byz.begin(), byz.end(), p)) return p;
  throw std::invalid_argument("no correct process available as sender");
}

std::unique_ptr<sim::Adversary> make_adversary(const Scenario& s,
                                               const std::vector<ProcessId>& byz,
                                               ProcessId sender) {
  if (s.adversary == "none") return nullptr;
  if (byz.empty()) throw std::invalid_argument("adversary '" + s.adversary + "' needs byzantine processes");
  if (s.adversary == "equivocate") {
    if (s.protocol != "at2d") throw std::invalid_argument("equivocate only speaks the at2d wire");
    if (s.n - byz.size() < 2)
      throw std::invalid_argument("equivocate needs two correct beneficiaries");
    return std::make_unique<adv::DetEquivocator>(s.amount);
  }
  if (s.adversary == "split") {
    if (!one_of(s.protocol, {"at2p", "pcb", "psb"}))
      throw std::invalid_argument("split only speaks the probabilistic wire");
    std::string left = "split:left";
    std::string right = "split:right";
    if (s.protocol == "at2p") {
      // Conflicting spends of the byzantine sender's own funds, one per victim.
      std::vector<ProcessId> correct;
      for (ProcessId p = 0; p < s.n; ++p)
        if (!std::binary_search(byz.begin(), byz.end(), p)) correct.push_back(p);
      left = mp::encode_tx_message(mp::TxRecord{sender, correct[0], s.amount, 1}, {});
      right = mp::encode_tx_message(mp::TxRecord{sender, correct.size() > 1 ? correct[1] : correct[0],
                                                 s.amount, 1},
                                    {});
    }
    return std::make_unique<adv::SplitConsistency>(sender, std::move(left), std::move(right));
  }
  if (s.adversary == "pace") {
    if (!one_of(s.protocol, {"at2p", "pcb", "psb"}))
      throw std::invalid_argument("pace only speaks the probabilistic wire");
    return std::make_unique<adv::PartialSupport>();
  }
  throw std::invalid_argument("unknown adversary: " + s.adversary);
}

void put(RunOutcome& out, const std::string& name, bool ok, bool fatal, std::string detail) {
  out.verdicts[name] = Verdict{ok, fatal, std::move(detail)};
  if (fatal && !ok) out.ok = false;
}

// Shorter of the two must be a prefix of the longer.
template <typename Seq>
bool prefix_compatible(const Seq& a, const Seq& b) {
  const Seq& s = a.size() <= b.size() ? a : b;
  const Seq& l = a.size() <= b.size() ? b : a;
  return std::equal(s.begin(), s.end(), l.begin());
}

template <typename Node>
void ledger_verdicts(RunOutcome& out, const Scenario& s, const AccountSetup& setup,
                     const std::vector<ProcessId>& correct, std::vector<Node*>& nodes,
                     bool conflicts_fatal, bool strong) {
  std::map<std::pair<ProcessId, std::uint64_t>, std::set<mp::TxRecord>> by_seq;
  bool negative = false;
  std::string violation;
  for (ProcessId p : correct) {
    mp::TransferEngine& e = nodes[p]->engine();
    if (e.violation() && violation.empty()) violation = "p" + std::to_string(p) + ": " + *e.violation();
    for (AccountId a : setup.account_ids()) {
      if (e.balance_of(a) < 0) negative = true;
      for (const mp::TxRecord& tx : e.history_of(a)) by_seq[{tx.from, tx.seq}].insert(tx);
    }
  }
  std::size_t conflicts = 0;
  for (const auto& [key, records] : by_seq)
    if (records.size() > 1) ++conflicts;
  put(out, "no_conflicts", conflicts == 0, conflicts_fatal,
      conflicts == 0 ? "no conflicting transfers applied"
                     : std::to_string(conflicts) + " conflicting (source, seq) pairs");
  put(out, "no_negative", !negative && violation.empty(), true,
      violation.empty() ? (negative ? "negative balance observed" : "all balances non-negative")
                        : violation);

  bool agree = true;
  std::string where = "all correct histories match";
  for (AccountId a : setup.account_ids()) {
    const auto& ref = nodes[correct.front()]->engine().history_of(a);
    for (ProcessId p : correct) {
      if (nodes[p]->engine().history_of(a) != ref) {
        agree = false;
        where = "histories diverge at account " + std::to_string(a);
        break;
      }
    }
    if (!agree) break;
  }
  put(out, "agreement", agree, strong, where);

  bool live = true;
  std::uint32_t issued = 0, settled = 0, requested = 0;
  for (ProcessId p : correct) {
    const TransferWorkload& w = nodes[p]->work();
    issued += w.issued();
    settled += w.settled();
    requested += w.requested();
    if (w.issued() != w.requested() || w.settled() != w.issued() ||
        nodes[p]->engine().own_pending())
      live = false;
  }
  put(out, "liveness", live, strong,
      std::to_string(settled) + "/" + std::to_string(issued) + " settled, " +
          std::to_string(requested) + " requested");

  for (AccountId a : setup.account_ids())
    out.balances[a] = nodes[correct.front()]->engine().balance_of(a);
  for (ProcessId p : correct)
    out.delivered[p] = nodes[p]->engine().apply_order().size();
  (void)s;
}

}  // namespace

RunOutcome run_scenario(const Scenario& s) {
  if (s.n == 0) throw std::invalid_argument("n is required");
  std::vector<ProcessId> byz = choose_byzantine(s);
  ProcessId sender = resolve_sender(s, byz);
  const bool sender_correct = !std::binary_search(byz.begin(), byz.end(), sender);

  sim::SimConfig cfg;
  cfg.n = s.n;
  cfg.byzantine = byz;
  cfg.seed = s.seed;
  cfg.max_delay = s.max_delay;
  cfg.fifo = s.fifo;
  cfg.trace = trace_mode(s.trace);

  RunOutcome out;
  out.byzantine = byz;
  out.sender = sender;

  AccountSetup setup = make_setup(s.n, s.initial_balance);

  auto finish = [&](sim::Simulator& sim) {
    out.end_time = sim.now();
    out.trace_hash = sim.trace().hash();
    if (cfg.trace == sim::TraceMode::Full) out.trace_lines = sim.trace().lines();
  };

  if (s.protocol == "at2d") {
    std::vector<At2DNode*> nodes(s.n, nullptr);
    auto factory = [&](ProcessId p) {
      auto node = std::make_unique<At2DNode>(setup, s.transfers, s.amount);
      nodes[p] = node.get();
      return node;
    };
    sim::Simulator sim(cfg, factory, make_adversary(s, byz, sender));
    sim.run();
    const auto correct = sim.correct_ids();
    ledger_verdicts(out, s, setup, correct, nodes, true, true);

    bool ordered = true;
    std::string where = "per-source delivery orders agree";
    const std::vector<std::uint64_t> none;
    auto order_of = [&](ProcessId p, ProcessId q) -> const std::vector<std::uint64_t>& {
      auto it = nodes[p]->order().find(q);
      return it == nodes[p]->order().end() ? none : it->second;
    };
    for (ProcessId q = 0; q < s.n && ordered; ++q) {
      for (std::size_t i = 1; i < correct.size(); ++i) {
        const auto& a = order_of(correct[0], q);
        const auto& b = order_of(correct[i], q);
        if (!prefix_compatible(a, b)) {
          ordered = false;
          where = "source " + std::to_string(q) + " delivered in different orders";
          break;
        }
      }
    }
    put(out, "source_order", ordered, true, where);
    finish(sim);
  } else if (s.protocol == "at2p") {
    std::vector<At2PNode*> nodes(s.n, nullptr);
    auto factory = [&](ProcessId p) {
      auto node = std::make_unique<At2PNode>(setup, s.prob, s.transfers, s.amount);
      nodes[p] = node.get();
      return node;
    };
    sim::Simulator sim(cfg, factory, make_adversary(s, byz, sender));
    sim.run();
    ledger_verdicts(out, s, setup, sim.correct_ids(), nodes, byz.empty(), false);
    finish(sim);
  } else if (s.protocol == "gossip") {
    const std::string payload = "g0";
    std::vector<GossipNode*> nodes(s.n, nullptr);
    auto factory = [&](ProcessId p) {
      auto node = std::make_unique<GossipNode>(sender, s.prob.G, payload);
      nodes[p] = node.get();
      return node;
    };
    sim::Simulator sim(cfg, factory, make_adversary(s, byz, sender));
    sim.run();
    const auto correct = sim.correct_ids();

    bool once = true, intact = true;
    std::size_t got = 0;
    for (ProcessId p : correct) {
      if (nodes[p]->deliveries() > 1) once = false;
      if (nodes[p]->got()) {
        ++got;
        if (*nodes[p]->got() != payload) intact = false;
      }
      out.delivered[p] = nodes[p]->deliveries();
    }
    put(out, "deliver_once", once, true, once ? "no duplicate deliveries" : "duplicate delivery");
    put(out, "validity", !sender_correct || nodes[sender]->got().has_value(), sender_correct,
        sender_correct ? "sender delivered its own message" : "sender byzantine, unchecked");
    put(out, "totality", got == 0 || got == correct.size(), false,
        std::to_string(got) + "/" + std::to_string(correct.size()) + " delivered");
    put(out, "integrity", intact, sender_correct,
        intact ? "all delivered copies match" : "delivered payload differs from broadcast");
    finish(sim);
  } else if (s.protocol == "pcb") {
    const std::string payload = "p0";
    std::vector<PcbNode*> nodes(s.n, nullptr);
    auto factory = [&](ProcessId p) {
      auto node = std::make_unique<PcbNode>(sender, s.prob, payload);
      nodes[p] = node.get();
      return node;
    };
    sim::Simulator sim(cfg, factory, make_adversary(s, byz, sender));
    sim.run();
    const auto correct = sim.correct_ids();

    bool once = true, intact = true, consistent = true;
    std::size_t got = 0;
    const std::string* first = nullptr;
    for (ProcessId p : correct) {
      if (nodes[p]->deliveries() > 1) once = false;
      if (nodes[p]->got()) {
        ++got;
        if (!first) first = &*nodes[p]->got();
        if (*nodes[p]->got() != *first) consistent = false;
        if (*nodes[p]->got() != payload) intact = false;
      }
      out.delivered[p] = nodes[p]->deliveries();
    }
    put(out, "deliver_once", once, true, once ? "no duplicate deliveries" : "duplicate delivery");
    put(out, "validity", !sender_correct || nodes[sender]->got().has_value(), false,
        sender_correct ? (nodes[sender]->got() ? "sender delivered its own message"
                                               : "sender missed its own message")
                       : "sender byzantine, unchecked");
    put(out, "totality", got == 0 || got == correct.size(), false,
        std::to_string(got) + "/" + std::to_string(correct.size()) + " delivered");
    put(out, "consistency", consistent, sender_correct,
        consistent ? "all delivered copies agree" : "two correct processes delivered different values");
    put(out, "integrity", !sender_correct || intact, sender_correct,
        sender_correct ? (intact ? "all delivered copies match" : "delivered payload differs")
                       : "sender byzantine, unchecked");
    finish(sim);
  } else if (s.protocol == "psb") {
    std::vector<std::string> script;
    for (std::uint32_t i = 0; i < s.messages; ++i) script.push_back("m" + std::to_string(i));
    std::vector<PsbNode*> nodes(s.n, nullptr);
    auto factory = [&](ProcessId p) {
      auto node = std::make_unique<PsbNode>(sender, s.prob, script);
      nodes[p] = node.get();
      return node;
    };
    sim::Simulator sim(cfg, factory, make_adversary(s, byz, sender));
    sim.run();
    const auto correct = sim.correct_ids();

    bool ordered = true, intact = true, full = true;
    for (std::size_t i = 0; i < correct.size(); ++i) {
      const auto& got = nodes[correct[i]]->got();
      if (sender_correct && !prefix_compatible(got, script)) intact = false;
      if (got.size() != script.size()) full = false;
      if (i > 0 && !prefix_compatible(got, nodes[correct[0]]->got())) ordered = false;
      out.delivered[correct[i]] = got.size();
    }
    put(out, "order", ordered, sender_correct,
        ordered ? "all correct sequences are prefixes of each other"
                : "correct processes delivered diverging sequences");
    put(out, "integrity", intact, sender_correct,
        sender_correct ? (intact ? "sequences follow the broadcast script" : "sequence deviates from script")
                       : "sender byzantine, unchecked");
    put(out, "totality", full, false,
        full ? "every correct process delivered the full sequence" : "some sequences are short");
    finish(sim);
  } else {
    throw std::invalid_argument("unknown protocol: " + s.protocol);
  }

  return out;
}

}  // namespace at2::scn
