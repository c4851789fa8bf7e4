#include "at2/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace at2::analysis {
namespace {

double lchoose(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

std::vector<double> binom_pmf(std::uint32_t n, double p) {
  std::vector<double> pmf(n + 1, 0.0);
  if (p <= 0.0) {
    pmf[0] = 1.0;
    return pmf;
  }
  if (p >= 1.0) {
    pmf[n] = 1.0;
    return pmf;
  }
  const double lp = std::log(p), lq = std::log1p(-p);
  for (std::uint32_t j = 0; j <= n; ++j) {
    pmf[j] = std::exp(lchoose(n, j) + j * lp + (n - j) * lq);
  }
  return pmf;
}

}  // namespace

double binom_tail_geq(std::uint32_t n, double p, std::uint32_t k) {
  if (k == 0) return 1.0;
  if (k > n) return 0.0;
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  const double lp = std::log(p), lq = std::log1p(-p);
  double sum = 0.0;
  for (std::uint32_t i = k; i <= n; ++i) {
    sum += std::exp(lchoose(n, i) + i * lp + (n - i) * lq);
  }
  return std::min(sum, 1.0);
}

double er_disconnect(std::uint32_t n, double p) {
  constexpr std::uint32_t kMaxN = 4096;
  if (n == 0 || n > kMaxN) throw std::invalid_argument("er_disconnect: n out of range");
  if (n == 1) return 0.0;
  if (p >= 1.0) return 0.0;
  if (p <= 0.0) return 1.0;

  const double liso = std::log1p(-p);
  std::vector<double> conn(n + 1, 0.0);
  conn[1] = 1.0;
  double disc = 0.0;
  for (std::uint32_t m = 2; m <= n; ++m) {
    disc = 0.0;
    for (std::uint32_t k = 1; k < m; ++k) {
      if (conn[k] <= 0.0) continue;
      disc += std::exp(lchoose(m - 1, k - 1) + std::log(conn[k]) +
                       double(k) * double(m - k) * liso);
    }
    disc = std::min(disc, 1.0);
    conn[m] = std::max(0.0, 1.0 - disc);
  }
  return disc;
}

double er_connectivity(std::uint32_t n, double p) { return 1.0 - er_disconnect(n, p); }

double er_connectivity_mc(std::uint32_t n, double p, std::uint64_t samples, Rng& rng) {
  if (n == 0 || samples == 0) throw std::invalid_argument("er_connectivity_mc: empty input");
  std::vector<std::uint32_t> parent(n);
  std::uint64_t connected = 0;
  for (std::uint64_t s = 0; s < samples; ++s) {
    std::iota(parent.begin(), parent.end(), 0u);
    auto find = [&](std::uint32_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    std::uint32_t components = n;
    for (std::uint32_t i = 0; i + 1 < n; ++i) {
      for (std::uint32_t j = i + 1; j < n; ++j) {
        if (!rng.chance(p)) continue;
        auto a = find(i), b = find(j);
        if (a != b) {
          parent[a] = b;
          --components;
        }
      }
    }
    if (components == 1) ++connected;
  }
  return double(connected) / double(samples);
}

double gossip_edge_prob(double G, std::uint32_t N) {
  if (N == 0) throw std::invalid_argument("gossip_edge_prob: N = 0");
  const double q = std::clamp(G / double(N), 0.0, 1.0);
  const double miss = 1.0 - q;
  return 1.0 - miss * miss;
}

EpsilonBound gossip_totality_bound(std::uint32_t N, double f, double G) {
  if (N == 0 || f < 0.0 || f >= 1.0) {
    throw std::invalid_argument("gossip_totality_bound: bad N or f");
  }
  const auto C = N - std::uint32_t(f * N);
  const double p_edge = gossip_edge_prob(G, N);
  EpsilonBound b;
  b.property = "gossip-totality";
  b.method = "exact";
  b.epsilon = er_disconnect(C, p_edge);
  b.terms = {{"C", double(C)}, {"p_edge", p_edge}};
  return b;
}

ProbBounds e_ready_bounds(std::uint32_t E, std::uint32_t E_hat, std::uint32_t n_echo,
                          std::uint32_t N, double f) {
  if (N == 0) throw std::invalid_argument("e_ready_bounds: N = 0");
  ProbBounds b;
  b.lower = binom_tail_geq(E, std::min(1.0, double(n_echo) / N), E_hat);
  b.upper = binom_tail_geq(E, std::min(1.0, double(n_echo) / N + f), E_hat);
  return b;
}

ProbBounds delivery_bounds(std::uint32_t D, std::uint32_t D_hat, std::uint32_t n_ready,
                           std::uint32_t N, double f) {
  if (N == 0) throw std::invalid_argument("delivery_bounds: N = 0");
  ProbBounds b;
  b.lower = binom_tail_geq(D, std::min(1.0, double(n_ready) / N), D_hat);
  b.upper = binom_tail_geq(D, std::min(1.0, double(n_ready) / N + f), D_hat);
  return b;
}

double ContagionDistribution::mean_final() const {
  const auto& pmf = per_round.back();
  double m = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) m += double(i) * pmf[i];
  return m;
}

namespace {

void validate_contagion(const ContagionParams& p) {
  constexpr std::uint32_t kMaxNodes = 256;
  if (p.nodes == 0 || p.nodes > kMaxNodes) {
    throw std::invalid_argument("threshold_contagion: nodes out of range");
  }
  if (p.pool < p.nodes + p.phantoms) {
    throw std::invalid_argument("threshold_contagion: pool smaller than its members");
  }
  // R_hat > R is legal: the threshold is unreachable and nothing spreads
  if (p.rounds == 0) throw std::invalid_argument("threshold_contagion: rounds = 0");
  if (!p.first_round_seed_pmf.empty()) {
    double s = std::accumulate(p.first_round_seed_pmf.begin(), p.first_round_seed_pmf.end(), 0.0);
    if (std::abs(s - 1.0) > 1e-9) {
      throw std::invalid_argument("threshold_contagion: seed pmf does not sum to 1");
    }
  }
}

}  // namespace

ContagionDistribution threshold_contagion(const ContagionParams& p) {
  validate_contagion(p);
  ContagionDistribution out;

  if (p.R_hat == 0) {
    // a zero threshold infects every node the moment the round closes
    std::vector<double> all(p.nodes + 1, 0.0);
    all[p.nodes] = 1.0;
    out.per_round.assign(p.rounds, all);
    return out;
  }

  const std::uint32_t T = p.nodes + p.phantoms;  // most that can ever be processed

  // crossing probability when the u+1-th infected pool member is processed,
  // for a node that is still healthy after the first u
  std::vector<double> alpha(T, 0.0);
  for (std::uint32_t u = 0; u < T; ++u) {
    const double pu = double(u) / double(p.pool);
    double z = 0.0, cross = 0.0;
    const std::uint32_t kmax = std::min(p.R_hat - 1, p.R);
    const auto pi = binom_pmf(p.R, pu);
    for (std::uint32_t k = 0; k <= kmax; ++k) {
      z += pi[k];
      cross += pi[k] * binom_tail_geq(p.R - k, 1.0 / double(p.pool - u), p.R_hat - k);
    }
    alpha[u] = z <= 1e-300 ? 1.0 : cross / z;
  }

  // grid[u][w]: u pool members processed, w infected but unprocessed
  std::vector<std::vector<double>> grid(T + 1, std::vector<double>(T + 1, 0.0));
  if (!p.first_round_seed_pmf.empty()) {
    for (std::size_t s = 0; s < p.first_round_seed_pmf.size(); ++s) {
      const auto seeds = std::min<std::uint32_t>(std::uint32_t(s), p.nodes);
      grid[0][p.phantoms + seeds] += p.first_round_seed_pmf[s];
    }
  } else {
    grid[0][p.phantoms + std::min(p.seeds_per_round, p.nodes)] = 1.0;
  }

  for (std::uint32_t round = 0; round < p.rounds; ++round) {
    if (round > 0) {
      // player infects seeds_per_round healthy nodes, fewer if none are left
      for (std::uint32_t u = 0; u <= T; ++u) {
        const double m = grid[u][0];
        if (m <= 0.0) continue;
        const std::uint32_t infected = u - p.phantoms;
        const auto s = std::min(p.seeds_per_round, p.nodes - infected);
        if (s > 0) {
          grid[u][0] = 0.0;
          grid[u][s] += m;
        }
      }
    }
    for (std::uint32_t u = 0; u < T; ++u) {
      for (std::uint32_t w = 1; w + u <= T; ++w) {
        const double m = grid[u][w];
        if (m <= 0.0) continue;
        grid[u][w] = 0.0;
        const std::uint32_t infected_nodes = u + w - p.phantoms;
        const std::uint32_t h = p.nodes - infected_nodes;
        if (h == 0) {
          grid[u + 1][w - 1] += m;
          continue;
        }
        const auto fan = binom_pmf(h, alpha[u]);
        for (std::uint32_t j = 0; j <= h; ++j) {
          if (fan[j] > 0.0) grid[u + 1][w - 1 + j] += m * fan[j];
        }
      }
    }
    std::vector<double> snap(p.nodes + 1, 0.0);
    for (std::uint32_t u = p.phantoms; u <= T; ++u) snap[u - p.phantoms] += grid[u][0];
    out.per_round.push_back(std::move(snap));
  }
  return out;
}

ContagionDistribution threshold_contagion_mc(const ContagionParams& p, std::uint64_t games,
                                             Rng& rng) {
  validate_contagion(p);
  if (games == 0) throw std::invalid_argument("threshold_contagion_mc: games = 0");

  std::vector<std::vector<std::uint64_t>> hist(p.rounds,
                                               std::vector<std::uint64_t>(p.nodes + 1, 0));
  std::vector<std::vector<std::uint32_t>> rev(p.pool);  // pool member -> pointing nodes
  std::vector<bool> infected(p.pool);
  std::vector<std::uint32_t> hits(p.nodes);
  std::vector<std::uint32_t> queue;

  for (std::uint64_t g = 0; g < games; ++g) {
    for (auto& v : rev) v.clear();
    std::fill(infected.begin(), infected.end(), false);
    std::fill(hits.begin(), hits.end(), 0);
    queue.clear();
    for (std::uint32_t v = 0; v < p.nodes; ++v) {
      for (std::uint32_t r = 0; r < p.R; ++r) rev[rng.below(p.pool)].push_back(v);
    }
    std::uint32_t infected_nodes = 0;
    auto infect_node = [&](std::uint32_t v) {
      infected[v] = true;
      ++infected_nodes;
      queue.push_back(v);
    };
    for (std::uint32_t ph = 0; ph < p.phantoms; ++ph) {
      infected[p.nodes + ph] = true;
      queue.push_back(p.nodes + ph);
    }
    for (std::uint32_t round = 0; round < p.rounds; ++round) {
      std::uint32_t seeds;
      if (round == 0 && !p.first_round_seed_pmf.empty()) {
        double x = rng.unit(), acc = 0.0;
        std::size_t s = 0;
        for (; s + 1 < p.first_round_seed_pmf.size(); ++s) {
          acc += p.first_round_seed_pmf[s];
          if (x < acc) break;
        }
        seeds = std::uint32_t(s);
      } else {
        seeds = p.seeds_per_round;
      }
      seeds = std::min(seeds, p.nodes - infected_nodes);
      for (std::uint32_t s = 0; s < seeds; ++s) {
        auto v = rng.below(p.nodes);
        while (infected[v]) v = rng.below(p.nodes);
        infect_node(v);
      }
      if (p.R_hat == 0) {
        for (std::uint32_t v = 0; v < p.nodes; ++v) {
          if (!infected[v]) infect_node(v);
        }
      }
      while (!queue.empty()) {
        const auto m = queue.back();
        queue.pop_back();
        for (auto v : rev[m]) {
          if (!infected[v] && ++hits[v] >= p.R_hat) infect_node(v);
        }
      }
      ++hist[round][infected_nodes];
    }
  }

  ContagionDistribution out;
  out.per_round.resize(p.rounds);
  for (std::uint32_t r = 0; r < p.rounds; ++r) {
    out.per_round[r].resize(p.nodes + 1);
    for (std::uint32_t i = 0; i <= p.nodes; ++i) {
      out.per_round[r][i] = double(hist[r][i]) / double(games);
    }
  }
  return out;
}

std::uint32_t PdeParams::byzantine() const { return std::uint32_t(f * N); }
std::uint32_t PdeParams::correct() const { return N - byzantine(); }

namespace {

void validate_pde(const PdeParams& p) {
  if (p.N == 0 || p.f < 0.0 || p.f >= 1.0) throw std::invalid_argument("bad N or f");
  if (p.E_hat > p.E || p.R_hat > p.R || p.D_hat > p.D) {
    throw std::invalid_argument("a threshold exceeds its sample size");
  }
  if (p.E == 0 || p.D == 0 || p.D_hat == 0) {
    throw std::invalid_argument("echo and delivery samples must be nonempty");
  }
}

}  // namespace

EpsilonBound pcb_validity_bound(const PdeParams& p) {
  validate_pde(p);
  const auto C = p.correct();
  const double eps_pb = gossip_totality_bound(p.N, p.f, p.G).epsilon;

  // a correct sender's message reaches every correct process, all echo it
  const double p_ready = e_ready_bounds(p.E, p.E_hat, C, p.N, p.f).lower;

  ContagionParams cp;
  cp.nodes = C;
  cp.pool = p.N;
  cp.R = p.R;
  cp.R_hat = p.R_hat;
  cp.rounds = 1;
  cp.first_round_seed_pmf = binom_pmf(C, p_ready);
  const auto dist = threshold_contagion(cp);

  double eps_delivery = 0.0;
  const auto& pmf = dist.final_round();
  for (std::uint32_t i = 0; i <= C; ++i) {
    if (pmf[i] <= 0.0) continue;
    eps_delivery += pmf[i] * (1.0 - delivery_bounds(p.D, p.D_hat, i, p.N, p.f).lower);
  }

  EpsilonBound b;
  b.property = "pcb-validity";
  b.method = "markov";
  b.epsilon = std::min(1.0, eps_pb + eps_delivery);
  b.terms = {{"eps_pb", eps_pb},
             {"p_e_ready_lower", p_ready},
             {"mean_ready", dist.mean_final()},
             {"eps_delivery", eps_delivery}};
  return b;
}

EpsilonBound pcb_totality_bound(const PdeParams& p) {
  validate_pde(p);
  const auto C = p.correct();
  const auto B = p.byzantine();

  // the adversary may echo-inject one fresh victim per round and spam its own
  // ready replies; per round the run survives if everyone or no one delivers
  ContagionParams cp;
  cp.nodes = C;
  cp.pool = p.N;
  cp.R = p.R;
  cp.R_hat = p.R_hat;
  cp.phantoms = B;
  cp.rounds = C;
  cp.seeds_per_round = 1;
  const auto dist = threshold_contagion(cp);

  double eps = 0.0;
  for (const auto& pmf : dist.per_round) {
    for (std::uint32_t i = 0; i < pmf.size(); ++i) {
      if (pmf[i] <= 0.0) continue;
      const auto d = delivery_bounds(p.D, p.D_hat, i, p.N, p.f);
      const double all = std::pow(d.lower, double(C));
      const double none = std::pow(1.0 - d.upper, double(C));
      eps += pmf[i] * std::max(0.0, 1.0 - all - none);
    }
  }

  EpsilonBound b;
  b.property = "pcb-totality";
  b.method = "markov";
  b.epsilon = std::min(1.0, eps);
  b.terms = {{"C", double(C)}, {"rounds", double(C)}};
  return b;
}

EpsilonBound pcb_consistency_bound(const PdeParams& p) {
  validate_pde(p);
  if (2 * p.E_hat <= p.E) {
    throw std::invalid_argument(
        "consistency bound needs E_hat > E/2, otherwise two conflicting "
        "messages can both reach the echo threshold");
  }
  const auto C = p.correct();
  const auto B = p.byzantine();

  EpsilonBound b;
  b.property = "pcb-consistency";
  if (B == 0) {
    // the modeled attack needs a Byzantine sender to equivocate
    b.method = "exact";
    b.epsilon = 0.0;
    b.terms = {{"eps_early", 0.0}, {"eps_feedback", 0.0}};
    return b;
  }

  // phase one: the sender splits correct processes between two messages; a
  // process goes ready for the first message after n correct echoes with the
  // Byzantine echoes stacked on top
  auto phi = [&](std::uint32_t n) {
    return 1.0 - binom_tail_geq(p.E, std::min(1.0, double(n) / p.N + p.f), p.E_hat);
  };
  std::vector<double> none_ready(C + 1);  // after n correct echoes for m1
  for (std::uint32_t n = 0; n <= C; ++n) none_ready[n] = std::pow(phi(n), double(C));

  double eps_early = (1.0 - none_ready[0]) * (1.0 - std::pow(phi(C), double(C)));
  for (std::uint32_t n = 1; n <= C; ++n) {
    const double first_here = std::max(0.0, none_ready[n - 1] - none_ready[n]);
    const double other = 1.0 - std::pow(phi(C - n), double(C));
    eps_early += first_here * other;
  }

  // phase two: no correct process is ready, yet Byzantine ready spam alone
  // seeds the ready spread and someone crosses the delivery threshold
  ContagionParams cp;
  cp.nodes = C;
  cp.pool = p.N;
  cp.R = p.R;
  cp.R_hat = p.R_hat;
  cp.phantoms = B;
  cp.rounds = 1;
  cp.seeds_per_round = 0;
  const auto dist = threshold_contagion(cp);

  double eps_feedback = 0.0;
  const auto& pmf = dist.final_round();
  for (std::uint32_t i = 0; i < pmf.size(); ++i) {
    if (pmf[i] <= 0.0) continue;
    const double d_hi = delivery_bounds(p.D, p.D_hat, i, p.N, p.f).upper;
    eps_feedback += pmf[i] * (1.0 - std::pow(1.0 - d_hi, double(C)));
  }

  b.method = "markov";
  b.epsilon = std::min(1.0, eps_early + eps_feedback);
  b.terms = {{"eps_early", eps_early}, {"eps_feedback", eps_feedback}};
  return b;
}

double multi_bound(double eps, std::uint64_t n) {
  if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("multi_bound: eps outside [0,1]");
  if (eps == 1.0 && n > 0) return 1.0;
  return -std::expm1(double(n) * std::log1p(-eps));
}

void write_csv_header(std::ostream& os) {
  os << "property,N,f,G,E,E_hat,R,R_hat,D,D_hat,epsilon,method,samples\n";
}

void write_csv_row(std::ostream& os, const CsvRow& row) {
  std::ostringstream line;
  line.precision(12);
  line << row.property << ',' << row.N << ',' << row.f << ',';
  if (row.G) line << *row.G;
  line << ',';
  auto opt = [&](const std::optional<std::uint32_t>& v) {
    if (v) line << *v;
    line << ',';
  };
  opt(row.E);
  opt(row.E_hat);
  opt(row.R);
  opt(row.R_hat);
  opt(row.D);
  opt(row.D_hat);
  line.precision(17);
  line << row.epsilon << ',' << row.method << ',' << row.samples << '\n';
  os << line.str();
}

CsvRow csv_row(const EpsilonBound& b, const PdeParams& p, std::uint64_t samples) {
  CsvRow row;
  row.property = b.property;
  row.N = p.N;
  row.f = p.f;
  row.G = p.G;
  if (p.E != 0 || p.D != 0) {
    row.E = p.E;
    row.E_hat = p.E_hat;
    row.R = p.R;
    row.R_hat = p.R_hat;
    row.D = p.D;
    row.D_hat = p.D_hat;
  }
  row.epsilon = b.epsilon;
  row.method = b.method;
  row.samples = samples;
  return row;
}

}  // namespace at2::analysis
