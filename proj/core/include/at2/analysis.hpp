#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "at2/rng.hpp"

namespace at2::analysis {

// P[Bin(n, p) >= k], numerically stable for tails down to ~1e-300.
double binom_tail_geq(std::uint32_t n, double p, std::uint32_t k);

// Probability that G(n, p) is disconnected, by conditioning on the component
// of a fixed vertex. Returned as the raw sum of positive terms so values far
// below double epsilon survive; connectivity is 1 minus this.
double er_disconnect(std::uint32_t n, double p);
double er_connectivity(std::uint32_t n, double p);
// Sampling estimate of connectivity for cross-checking the closed form.
double er_connectivity_mc(std::uint32_t n, double p, std::uint64_t samples, Rng& rng);

// Both endpoints of an undirected pair miss each other's expected-size-G
// sample with probability (1 - G/N)^2.
double gossip_edge_prob(double G, std::uint32_t N);

// One epsilon with the inputs and intermediate terms that produced it.
struct EpsilonBound {
  std::string property;
  double epsilon = 0.0;
  std::string method;  // "exact", "markov", "monte-carlo"
  std::vector<std::pair<std::string, double>> terms;
};

// Failure bound for gossip reaching all correct processes: the union of the
// correct processes' samples must form a connected graph on C = N - floor(fN)
// vertices. Treating pairwise edges as independent is an approximation that
// errs pessimistic for totality at these densities.
EpsilonBound gossip_totality_bound(std::uint32_t N, double f, double G);

// Probability interval induced by Byzantine behaviour: lower assumes the
// faulty processes stay silent, upper lets all of them contribute.
struct ProbBounds {
  double lower = 0.0;
  double upper = 0.0;
};

// Chance that a process crosses its echo threshold when n_echo of N processes
// echoed the message: sample E with replacement, need at least E_hat hits.
ProbBounds e_ready_bounds(std::uint32_t E, std::uint32_t E_hat, std::uint32_t n_echo,
                          std::uint32_t N, double f);
// Same shape for the delivery threshold over ready senders.
ProbBounds delivery_bounds(std::uint32_t D, std::uint32_t D_hat, std::uint32_t n_ready,
                           std::uint32_t N, double f);

// Threshold infection game: `nodes` infectable players each hold R uniform
// with-replacement pointers into a pool of size `pool`; a player turns
// infected once at least R_hat of its pointers hit infected pool members.
// Each round the player force-infects `seeds_per_round` healthy nodes (or a
// random count from `first_round_seed_pmf` in round one) and the infection
// closes transitively. `phantoms` are pool members beyond the infectable
// nodes that start infected.
struct ContagionParams {
  std::uint32_t nodes = 0;
  std::uint32_t pool = 0;
  std::uint32_t R = 0;
  std::uint32_t R_hat = 0;
  std::uint32_t phantoms = 0;
  std::uint32_t rounds = 1;
  std::uint32_t seeds_per_round = 0;
  std::vector<double> first_round_seed_pmf;  // optional, indexed by seed count
};

// per_round[r][i] = P[exactly i infectable nodes infected after round r+1].
struct ContagionDistribution {
  std::vector<std::vector<double>> per_round;

  const std::vector<double>& final_round() const { return per_round.back(); }
  double mean_final() const;
};

// Exact distribution via a chain over (processed, pending) infection counts.
// Cost grows with nodes^4; cap chosen to cover every parameter set used here.
ContagionDistribution threshold_contagion(const ContagionParams& p);
// The same game played out on sampled pointer tables.
ContagionDistribution threshold_contagion_mc(const ContagionParams& p, std::uint64_t games,
                                             Rng& rng);

// Parameters of the probabilistic broadcast stack over N processes of which
// a fraction f is Byzantine.
struct PdeParams {
  std::uint32_t N = 0;
  double f = 0.0;
  double G = 0.0;
  std::uint32_t E = 0, E_hat = 0;
  std::uint32_t R = 0, R_hat = 0;
  std::uint32_t D = 0, D_hat = 0;

  std::uint32_t byzantine() const;
  std::uint32_t correct() const;
};

// Failure bounds for the double-echo broadcast, each an upper bound on the
// probability that the named property breaks for one broadcast instance.
EpsilonBound pcb_validity_bound(const PdeParams& p);
EpsilonBound pcb_totality_bound(const PdeParams& p);
// Requires E_hat > E/2; smaller thresholds let two conflicting messages both
// collect enough echoes from disjoint sample halves.
EpsilonBound pcb_consistency_bound(const PdeParams& p);

// Failure bound for n independent uses of a primitive with failure eps each.
double multi_bound(double eps, std::uint64_t n);

// property,N,f,G,E,E_hat,R,R_hat,D,D_hat,epsilon,method,samples
struct CsvRow {
  std::string property;
  std::uint32_t N = 0;
  double f = 0.0;
  std::optional<double> G;
  std::optional<std::uint32_t> E, E_hat, R, R_hat, D, D_hat;
  double epsilon = 0.0;
  std::string method;
  std::uint64_t samples = 0;
};

void write_csv_header(std::ostream& os);
void write_csv_row(std::ostream& os, const CsvRow& row);
CsvRow csv_row(const EpsilonBound& b, const PdeParams& p, std::uint64_t samples);

}  // namespace at2::analysis
