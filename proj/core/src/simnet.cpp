#include "at2/simnet.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace at2::sim {

SignatureScheme::SignatureScheme(std::uint64_t seed, std::uint32_t n) {
  std::uint64_t sm = seed ^ 0x5167371982abcdefULL;
  keys_.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) keys_.push_back(splitmix64(sm));
}

Authenticator SignatureScheme::sign(ProcessId signer, std::string_view bytes) const {
  const std::uint64_t h = fnv1a64(bytes, fnv1a64_u64(keys_.at(signer), 0xcbf29ce484222325ULL));
  return Authenticator{signer, h};
}

bool SignatureScheme::verify(ProcessId claimed, std::string_view bytes,
                             const Authenticator& a) const {
  if (claimed >= keys_.size() || a.signer != claimed) return false;
  return sign(claimed, bytes).digest == a.digest;
}

void Trace::message(Time t, ProcessId from, ProcessId to, std::string_view kind,
                    std::string_view payload) {
  if (mode_ == TraceMode::Off) return;
  absorb(t, from, to, kind, payload);
  if (mode_ == TraceMode::Full) {
    std::ostringstream os;
    os << t << ',' << from << ',' << to << ',' << kind << ",bytes=" << payload.size() << ";h="
       << std::hex << (fnv1a64(payload) & 0xffffffffULL);
    lines_.push_back(os.str());
  }
}

void Trace::note(Time t, ProcessId p, std::string_view kind, std::string_view detail) {
  if (mode_ == TraceMode::Off) return;
  absorb(t, p, p, kind, detail);
  if (mode_ == TraceMode::Full) {
    std::ostringstream os;
    os << t << ',' << p << ',' << p << ',' << kind << ',' << detail;
    lines_.push_back(os.str());
  }
}

void Trace::absorb(Time t, std::uint64_t from, std::uint64_t to, std::string_view kind,
                   std::string_view body) {
  hash_ = fnv1a64_u64(t, hash_);
  hash_ = fnv1a64_u64(from ^ (to << 32), hash_);
  hash_ = fnv1a64(kind, hash_);
  hash_ = fnv1a64(body, hash_);
}

void Trace::write(std::ostream& os) const {
  os << "time,from,to,kind,detail\n";
  for (const auto& l : lines_) os << l << '\n';
}

std::uint32_t Context::n() const { return sim_->n(); }
Time Context::now() const { return sim_->now(); }

void Context::send(ProcessId to, std::string payload) {
  if (to >= sim_->n()) throw std::invalid_argument("send to unknown process");
  sim_->enqueue_message(id_, to, std::move(payload));
}

Authenticator Context::sign(std::string_view bytes) const { return sim_->sigs_.sign(id_, bytes); }

bool Context::verify(ProcessId claimed, std::string_view bytes, const Authenticator& a) const {
  return sim_->sigs_.verify(claimed, bytes, a);
}

std::vector<ProcessId> Context::omega_distinct(std::uint32_t count) {
  auto& rng = sim_->omega_rng_.at(id_);
  count = std::min(count, sim_->n());
  return rng.distinct(count, sim_->n());
}

ProcessId Context::omega_one() {
  return static_cast<ProcessId>(sim_->omega_rng_.at(id_).below(sim_->n()));
}

Rng& Context::rng() { return sim_->proc_rng_.at(id_); }

void Context::set_timer(Time delay, std::uint64_t tag) { sim_->enqueue_timer(id_, delay, tag); }

void Context::note(std::string_view kind, std::string_view detail) {
  sim_->trace_.note(sim_->now(), id_, kind, detail);
}

std::uint32_t AdversaryContext::n() const { return sim_->n(); }
Time AdversaryContext::now() const { return sim_->now(); }
const std::vector<ProcessId>& AdversaryContext::byzantine_ids() const { return sim_->byz_; }

void AdversaryContext::send_from(ProcessId byz, ProcessId to, std::string payload) {
  if (!sim_->is_byzantine(byz)) throw std::logic_error("adversary sending from a correct id");
  if (to >= sim_->n()) throw std::invalid_argument("send to unknown process");
  sim_->enqueue_message(byz, to, std::move(payload));
}

Authenticator AdversaryContext::sign_as(ProcessId byz, std::string_view bytes) const {
  if (!sim_->is_byzantine(byz)) throw std::logic_error("adversary signing under a correct id");
  return sim_->sigs_.sign(byz, bytes);
}

bool AdversaryContext::verify(ProcessId claimed, std::string_view bytes,
                              const Authenticator& a) const {
  return sim_->sigs_.verify(claimed, bytes, a);
}

void AdversaryContext::wakeup_in(Time delay, std::uint64_t tag) {
  sim_->enqueue_wakeup(delay, tag);
}

Rng& AdversaryContext::rng() { return sim_->adv_rng_; }

void AdversaryContext::note(std::string_view kind, std::string_view detail) {
  sim_->trace_.note(sim_->now(), sim_->n(), kind, detail);
}

Simulator::Simulator(SimConfig cfg, const ProtocolFactory& factory,
                     std::unique_ptr<Adversary> adversary)
    : cfg_(std::move(cfg)),
      sigs_(cfg_.seed, cfg_.n),
      trace_(cfg_.trace),
      adversary_(std::move(adversary)),
      adv_ctx_(this) {
  if (cfg_.n == 0) throw std::invalid_argument("empty system");
  if (cfg_.max_delay == 0) throw std::invalid_argument("max_delay must be positive");
  byz_ = cfg_.byzantine;
  std::sort(byz_.begin(), byz_.end());
  byz_.erase(std::unique(byz_.begin(), byz_.end()), byz_.end());
  is_byz_.assign(cfg_.n, false);
  for (ProcessId p : byz_) {
    if (p >= cfg_.n) throw std::invalid_argument("byzantine id out of range");
    is_byz_[p] = true;
  }
  if (!adversary_) adversary_ = std::make_unique<Adversary>();

  Rng root(cfg_.seed);
  delay_rng_ = root.fork(0x00de1a9);
  adv_rng_ = root.fork(0x00adfe7);
  proc_rng_.reserve(cfg_.n);
  omega_rng_.reserve(cfg_.n);
  for (std::uint32_t p = 0; p < cfg_.n; ++p) {
    proc_rng_.push_back(root.fork(0x10000000ULL + p));
    omega_rng_.push_back(root.fork(0x20000000ULL + p));
  }
  if (cfg_.fifo) fifo_last_.assign(static_cast<std::size_t>(cfg_.n) * cfg_.n, 0);

  protocols_.resize(cfg_.n);
  contexts_.resize(cfg_.n);
  for (std::uint32_t p = 0; p < cfg_.n; ++p) {
    contexts_[p].reset(new Context(this, p));
    if (!is_byz_[p]) protocols_[p] = factory(p);
  }
  adversary_->start(adv_ctx_);
  for (std::uint32_t p = 0; p < cfg_.n; ++p) {
    if (protocols_[p]) protocols_[p]->start(*contexts_[p]);
  }
}

Simulator::~Simulator() = default;

bool Simulator::is_byzantine(ProcessId p) const { return p < is_byz_.size() && is_byz_[p]; }

std::vector<ProcessId> Simulator::correct_ids() const {
  std::vector<ProcessId> out;
  for (ProcessId p = 0; p < cfg_.n; ++p) {
    if (!is_byz_[p]) out.push_back(p);
  }
  return out;
}

Protocol* Simulator::protocol(ProcessId p) { return protocols_.at(p).get(); }

void Simulator::enqueue_message(ProcessId from, ProcessId to, std::string payload) {
  LinkMeta meta{now_, from, to, payload.size()};
  const Time d = adversary_->choose_delay(meta, cfg_.max_delay, delay_rng_);
  if (d < 1 || d > cfg_.max_delay) {
    throw std::runtime_error("adversary chose a delay outside [1, max_delay]");
  }
  Time at = now_ + d;
  if (cfg_.fifo) {
    Time& last = fifo_last_[static_cast<std::size_t>(from) * cfg_.n + to];
    at = std::max(at, last);
    last = at;
  }
  trace_.message(now_, from, to, "send", payload);
  queue_.push(Event{at, seq_++, Event::Kind::Message, from, to, std::move(payload), 0});
}

void Simulator::enqueue_timer(ProcessId p, Time delay, std::uint64_t tag) {
  if (delay == 0) delay = 1;
  queue_.push(Event{now_ + delay, seq_++, Event::Kind::Timer, p, p, {}, tag});
}

void Simulator::enqueue_wakeup(Time delay, std::uint64_t tag) {
  if (delay == 0) delay = 1;
  queue_.push(Event{now_ + delay, seq_++, Event::Kind::AdversaryWakeup, 0, 0, {}, tag});
}

void Simulator::dispatch(Event& e) {
  now_ = e.at;
  switch (e.kind) {
    case Event::Kind::Message: {
      trace_.message(now_, e.from, e.to, "dlvr", e.payload);
      if (is_byz_[e.to]) {
        LinkMeta meta{now_, e.from, e.to, e.payload.size()};
        adversary_->deliver(adv_ctx_, ByzView{meta, e.payload});
      } else {
        protocols_[e.to]->receive(*contexts_[e.to], e.from, e.payload);
      }
      break;
    }
    case Event::Kind::Timer:
      if (!is_byz_[e.to]) protocols_[e.to]->timer(*contexts_[e.to], e.tag);
      break;
    case Event::Kind::AdversaryWakeup:
      adversary_->wakeup(adv_ctx_, e.tag);
      break;
  }
}

void Simulator::run() {
  while (!queue_.empty()) {
    if (++dispatched_ > cfg_.max_events) throw std::runtime_error("event budget exceeded");
    Event e = queue_.top();
    queue_.pop();
    dispatch(e);
  }
}

void Simulator::run_until(Time horizon) {
  while (!queue_.empty() && queue_.top().at <= horizon) {
    if (++dispatched_ > cfg_.max_events) throw std::runtime_error("event budget exceeded");
    Event e = queue_.top();
    queue_.pop();
    dispatch(e);
  }
  now_ = std::max(now_, horizon);
}

}  // namespace at2::sim
