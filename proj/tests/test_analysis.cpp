#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "at2/analysis.hpp"
#include "at2/rng.hpp"

using namespace at2;
using namespace at2::analysis;

namespace {

// Oracle: exact connectivity of G(n,p) by enumerating all edge subsets.
double er_conn_enum(std::uint32_t n, double p) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (std::uint32_t i = 0; i + 1 < n; ++i) {
    for (std::uint32_t j = i + 1; j < n; ++j) edges.push_back({i, j});
  }
  double total = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << edges.size()); ++mask) {
    std::uint32_t reach = 1;  // bitmask of vertices reachable from 0
    for (bool grew = true; grew;) {
      grew = false;
      for (std::size_t e = 0; e < edges.size(); ++e) {
        if (!((mask >> e) & 1)) continue;
        auto [a, b] = edges[e];
        const bool ra = (reach >> a) & 1, rb = (reach >> b) & 1;
        if (ra != rb) {
          reach |= (1u << a) | (1u << b);
          grew = true;
        }
      }
    }
    if (reach == (1u << n) - 1) {
      const int on = __builtin_popcount(mask);
      total += std::pow(p, on) * std::pow(1.0 - p, double(edges.size()) - on);
    }
  }
  return total;
}

// Oracle: one-round contagion by enumerating every pointer table and every
// seed set. Nodes 0..nodes-1 are infectable, the next `phantoms` pool slots
// start infected, anything beyond is never infected.
std::vector<double> contagion_enum(std::uint32_t nodes, std::uint32_t pool, std::uint32_t R,
                                   std::uint32_t R_hat, std::uint32_t phantoms,
                                   std::uint32_t seeds) {
  const std::uint32_t slots = nodes * R;
  std::uint64_t tables = 1;
  for (std::uint32_t i = 0; i < slots; ++i) tables *= pool;

  std::vector<std::uint32_t> seed_set(seeds);
  std::vector<double> pmf(nodes + 1, 0.0);
  double weight_total = 0.0;

  std::vector<std::uint32_t> ptr(slots);
  for (std::uint64_t t = 0; t < tables; ++t) {
    std::uint64_t x = t;
    for (std::uint32_t i = 0; i < slots; ++i) {
      ptr[i] = std::uint32_t(x % pool);
      x /= pool;
    }
    // iterate seed subsets of the given size
    for (std::uint32_t i = 0; i < seeds; ++i) seed_set[i] = i;
    while (true) {
      std::vector<bool> infected(pool, false);
      for (std::uint32_t ph = 0; ph < phantoms; ++ph) infected[nodes + ph] = true;
      for (auto s : seed_set) infected[s] = true;
      for (bool grew = true; grew;) {
        grew = false;
        for (std::uint32_t v = 0; v < nodes; ++v) {
          if (infected[v]) continue;
          std::uint32_t hits = 0;
          for (std::uint32_t r = 0; r < R; ++r) hits += infected[ptr[v * R + r]];
          if (hits >= R_hat) {
            infected[v] = true;
            grew = true;
          }
        }
      }
      std::uint32_t count = 0;
      for (std::uint32_t v = 0; v < nodes; ++v) count += infected[v];
      pmf[count] += 1.0;
      weight_total += 1.0;

      // next combination
      if (seeds == 0) break;
      std::int32_t k = std::int32_t(seeds) - 1;
      while (k >= 0 && seed_set[k] == nodes - seeds + k) --k;
      if (k < 0) break;
      ++seed_set[k];
      for (std::uint32_t j = k + 1; j < seeds; ++j) seed_set[j] = seed_set[j - 1] + 1;
    }
  }
  for (auto& v : pmf) v /= weight_total;
  return pmf;
}

}  // namespace

TEST_CASE("binomial tail matches hand values") {
  CHECK(binom_tail_geq(4, 0.5, 4) == doctest::Approx(0.0625).epsilon(1e-12));
  CHECK(binom_tail_geq(10, 0.9, 8) == doctest::Approx(0.9298091736).epsilon(1e-9));
  CHECK(binom_tail_geq(5, 0.3, 0) == 1.0);
  CHECK(binom_tail_geq(5, 0.3, 6) == 0.0);
  CHECK(binom_tail_geq(5, 0.0, 1) == 0.0);
  CHECK(binom_tail_geq(5, 1.0, 5) == 1.0);
  // deep tail stays meaningful
  auto tiny = binom_tail_geq(200, 0.01, 150);
  CHECK(tiny > 0.0);
  CHECK(tiny < 1e-100);
}

TEST_CASE("three-vertex connectivity at one half is exactly one half") {
  // 3 spanning trees with 2 edges plus the triangle: 3 p^2 (1-p) + p^3
  CHECK(er_connectivity(3, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("closed-form connectivity equals enumeration on small graphs") {
  for (double p : {0.1, 0.3, 0.5, 0.8}) {
    for (std::uint32_t n : {2u, 3u, 4u, 5u}) {
      CHECK(er_connectivity(n, p) == doctest::Approx(er_conn_enum(n, p)).epsilon(1e-10));
    }
  }
}

TEST_CASE("closed-form connectivity agrees with sampling") {
  Rng rng(404);
  const double exact = er_connectivity(20, 0.2);
  const double mc = er_connectivity_mc(20, 0.2, 20000, rng);
  CHECK(std::abs(exact - mc) < 0.01);
}

TEST_CASE("connectivity handles degenerate probabilities and big n") {
  CHECK(er_connectivity(1, 0.0) == 1.0);
  CHECK(er_connectivity(5, 1.0) == 1.0);
  CHECK(er_connectivity(5, 0.0) == 0.0);
  // dense graph: disconnect probability is dominated by one isolated vertex
  const double d = er_disconnect(90, 0.5);
  CHECK(d > 0.0);
  CHECK(d < 1e-20);
  const double iso = 90.0 * std::pow(0.5, 89.0);
  CHECK(d > iso * 0.99);
  CHECK(d < iso * 10.0);
}

TEST_CASE("gossip edge probability and totality bound") {
  CHECK(gossip_edge_prob(0.0, 10) == 0.0);
  CHECK(gossip_edge_prob(10.0, 10) == 1.0);
  CHECK(gossip_edge_prob(5.0, 10) == doctest::Approx(0.75).epsilon(1e-12));

  auto b = gossip_totality_bound(32, 0.25, 6.0);
  CHECK(b.property == "gossip-totality");
  CHECK(b.terms[0].second == 24.0);  // C = N - floor(fN)
  CHECK(b.epsilon > 0.0);
  CHECK(b.epsilon < 1.0);

  double prev = 1.0;
  for (double G = 2.0; G <= 14.0; G += 2.0) {
    auto cur = gossip_totality_bound(32, 0.25, G).epsilon;
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("one-round contagion matches the hand enumeration for tiny games") {
  // 3 nodes, pool 3, one pointer each, threshold 1, one seed:
  // 4/9 stop at one infection, 2/9 at two, 3/9 take all three
  ContagionParams p;
  p.nodes = 3;
  p.pool = 3;
  p.R = 1;
  p.R_hat = 1;
  p.rounds = 1;
  p.seeds_per_round = 1;
  auto d = threshold_contagion(p);
  REQUIRE(d.per_round.size() == 1);
  CHECK(d.final_round()[1] == doctest::Approx(4.0 / 9).epsilon(1e-12));
  CHECK(d.final_round()[2] == doctest::Approx(2.0 / 9).epsilon(1e-12));
  CHECK(d.final_round()[3] == doctest::Approx(3.0 / 9).epsilon(1e-12));

  auto oracle = contagion_enum(3, 3, 1, 1, 0, 1);
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    CHECK(d.final_round()[i] == doctest::Approx(oracle[i]).epsilon(1e-12));
  }

  Rng rng(1234);
  auto mc = threshold_contagion_mc(p, 200000, rng);
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    CHECK(std::abs(mc.final_round()[i] - oracle[i]) < 0.005);
  }
}

TEST_CASE("chain and enumeration agree with phantoms and wider samples") {
  for (auto [nodes, pool, R, R_hat, phantoms, seeds] :
       std::vector<std::array<std::uint32_t, 6>>{{{1, 2, 1, 1, 1, 0}},
                                                 {{2, 4, 2, 1, 1, 0}},
                                                 {{3, 4, 2, 2, 1, 1}},
                                                 {{2, 3, 3, 2, 1, 0}},
                                                 {{3, 3, 2, 1, 0, 2}}}) {
    ContagionParams p;
    p.nodes = nodes;
    p.pool = pool;
    p.R = R;
    p.R_hat = R_hat;
    p.phantoms = phantoms;
    p.rounds = 1;
    p.seeds_per_round = seeds;
    auto got = threshold_contagion(p).final_round();
    auto want = contagion_enum(nodes, pool, R, R_hat, phantoms, seeds);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-10));
    }
  }
}

TEST_CASE("multi-round contagion on two nodes follows the hand computation") {
  ContagionParams p;
  p.nodes = 2;
  p.pool = 2;
  p.R = 1;
  p.R_hat = 1;
  p.rounds = 2;
  p.seeds_per_round = 1;
  auto d = threshold_contagion(p);
  REQUIRE(d.per_round.size() == 2);
  CHECK(d.per_round[0][1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(d.per_round[0][2] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(d.per_round[1][2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("degenerate thresholds behave") {
  ContagionParams p;
  p.nodes = 4;
  p.pool = 5;
  p.R = 2;
  p.R_hat = 0;  // everything infects immediately
  p.rounds = 2;
  auto d = threshold_contagion(p);
  CHECK(d.per_round[0][4] == 1.0);

  p.R_hat = 3;  // unreachable: only seeds count
  p.seeds_per_round = 1;
  auto d2 = threshold_contagion(p);
  CHECK(d2.per_round[0][1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d2.per_round[1][2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("chain matches sampled games on a nontrivial configuration") {
  ContagionParams p;
  p.nodes = 10;
  p.pool = 12;
  p.R = 4;
  p.R_hat = 2;
  p.phantoms = 2;
  p.rounds = 3;
  p.seeds_per_round = 1;
  auto exact = threshold_contagion(p);
  Rng rng(777);
  auto mc = threshold_contagion_mc(p, 100000, rng);
  for (std::uint32_t r = 0; r < p.rounds; ++r) {
    for (std::size_t i = 0; i <= p.nodes; ++i) {
      CHECK(std::abs(exact.per_round[r][i] - mc.per_round[r][i]) < 0.012);
    }
  }
}

TEST_CASE("reply thresholds give interval bounds") {
  auto b = e_ready_bounds(4, 4, 5, 10, 0.2);
  CHECK(b.lower == doctest::Approx(0.0625).epsilon(1e-12));
  CHECK(b.upper == doctest::Approx(std::pow(0.7, 4)).epsilon(1e-12));
  CHECK(b.lower <= b.upper);
  auto d = delivery_bounds(4, 4, 10, 10, 0.0);
  CHECK(d.lower == 1.0);
  CHECK(d.upper == 1.0);
}

TEST_CASE("stack failure bounds are probabilities and respond to parameters") {
  PdeParams p;
  p.N = 50;
  p.f = 0.1;
  p.G = 15.0;
  p.E = 30;
  p.E_hat = 24;
  p.R = 30;
  p.R_hat = 12;
  p.D = 30;
  p.D_hat = 20;

  auto v = pcb_validity_bound(p);
  auto t = pcb_totality_bound(p);
  auto c = pcb_consistency_bound(p);
  for (const auto& b : {v, t, c}) {
    CHECK(b.epsilon >= 0.0);
    CHECK(b.epsilon <= 1.0);
    CHECK(!b.terms.empty());
  }
  CHECK(v.epsilon < 0.5);

  // a stricter delivery threshold cannot make validity easier
  PdeParams harder = p;
  harder.D_hat = 28;
  CHECK(pcb_validity_bound(harder).epsilon >= v.epsilon);

  // with no faulty processes and lenient thresholds the gossip term dominates
  PdeParams clean = p;
  clean.f = 0.0;
  clean.E_hat = 16;
  clean.R_hat = 6;
  clean.D_hat = 8;
  auto vb = pcb_validity_bound(clean);
  const double eps_pb = gossip_totality_bound(clean.N, clean.f, clean.G).epsilon;
  CHECK(vb.epsilon >= eps_pb);
  CHECK(vb.epsilon < eps_pb + 1e-6);
  auto cb = pcb_consistency_bound(clean);
  CHECK(cb.epsilon == 0.0);
}

TEST_CASE("consistency bound rejects echo thresholds at or below half") {
  PdeParams p;
  p.N = 20;
  p.f = 0.1;
  p.G = 8.0;
  p.E = 10;
  p.E_hat = 5;
  p.R = 10;
  p.R_hat = 4;
  p.D = 10;
  p.D_hat = 6;
  CHECK_THROWS_AS(pcb_consistency_bound(p), std::invalid_argument);
  p.E_hat = 6;
  CHECK_NOTHROW(pcb_consistency_bound(p));
}

TEST_CASE("multi use bound composes failure probabilities") {
  CHECK(multi_bound(0.01, 10) == doctest::Approx(0.09561792499119552).epsilon(1e-12));
  CHECK(multi_bound(0.0, 1000) == 0.0);
  CHECK(multi_bound(1.0, 1) == 1.0);
  // stays accurate for tiny epsilon
  CHECK(multi_bound(1e-200, 100) == doctest::Approx(1e-198).epsilon(1e-6));
}

TEST_CASE("csv rows have thirteen columns and blank unused fields") {
  std::ostringstream os;
  write_csv_header(os);
  PdeParams p;
  p.N = 50;
  p.f = 0.1;
  p.G = 15.0;
  EpsilonBound b;
  b.property = "gossip-totality";
  b.epsilon = 1.25e-7;
  b.method = "exact";
  write_csv_row(os, csv_row(b, p, 0));

  std::istringstream is(os.str());
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  CHECK(header == "property,N,f,G,E,E_hat,R,R_hat,D,D_hat,epsilon,method,samples");
  CHECK(std::count(header.begin(), header.end(), ',') == 12);
  CHECK(std::count(row.begin(), row.end(), ',') == 12);
  CHECK(row.find("gossip-totality,50,0.1,15,,,,,,,") == 0);
  CHECK(row.find("exact,0") != std::string::npos);
}
