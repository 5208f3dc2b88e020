#pragma once

// Test-only oracle: fully known finite MDPs solved by value iteration, plus a
// uniform-behavior Q-learning driver over sampled transitions of the same
// model. Kept independent of the code paths it checks.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "rtbq/qlearning.hpp"

namespace rtbq_test {

struct OracleMdp {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> p;  // [s, a, s'] transition probabilities
  std::vector<double> r;  // [s, a] deterministic rewards

  double prob(int s, int a, int s2) const { return p[(s * n_actions + a) * n_states + s2]; }
  double rew(int s, int a) const { return r[s * n_actions + a]; }

  std::vector<double> q_star(double gamma) const {
    std::vector<double> q(static_cast<std::size_t>(n_states) * n_actions, 0.0);
    for (int iter = 0; iter < 100000; ++iter) {
      double change = 0.0;
      std::vector<double> next(q.size());
      for (int s = 0; s < n_states; ++s) {
        for (int a = 0; a < n_actions; ++a) {
          double v = rew(s, a);
          for (int s2 = 0; s2 < n_states; ++s2) {
            double best = q[s2 * n_actions];
            for (int a2 = 1; a2 < n_actions; ++a2)
              best = std::max(best, q[s2 * n_actions + a2]);
            v += gamma * prob(s, a, s2) * best;
          }
          next[s * n_actions + a] = v;
          change = std::max(change, std::abs(v - q[s * n_actions + a]));
        }
      }
      q = std::move(next);
      if (change < 1e-13) break;
    }
    return q;
  }

  int sample_next(int s, int a, double u) const {
    double acc = 0.0;
    for (int s2 = 0; s2 + 1 < n_states; ++s2) {
      acc += prob(s, a, s2);
      if (u < acc) return s2;
    }
    return n_states - 1;
  }
};

inline OracleMdp random_mdp(int n_states, int n_actions, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  OracleMdp m;
  m.n_states = n_states;
  m.n_actions = n_actions;
  m.p.resize(static_cast<std::size_t>(n_states) * n_actions * n_states);
  m.r.resize(static_cast<std::size_t>(n_states) * n_actions);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      double total = 0.0;
      for (int s2 = 0; s2 < n_states; ++s2) {
        const double w = u(rng);
        m.p[(s * n_actions + a) * n_states + s2] = w;
        total += w;
      }
      for (int s2 = 0; s2 < n_states; ++s2) m.p[(s * n_actions + a) * n_states + s2] /= total;
      m.r[s * n_actions + a] = u(rng);
    }
  }
  return m;
}

inline rtbq::QTable learn_mdp(const OracleMdp& m, double gamma, std::int64_t steps,
                              std::uint64_t seed) {
  rtbq::QTable table(m.n_states, m.n_actions, 0.5, gamma, 0.05);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int s = 0;
  for (std::int64_t k = 0; k < steps; ++k) {
    const int a = static_cast<int>(rng() % m.n_actions);
    const int s2 = m.sample_next(s, a, u(rng));
    rtbq::q_update(table, s, a, m.rew(s, a), s2);
    s = s2;
  }
  return table;
}

inline double sup_norm_gap(const rtbq::QTable& table, const std::vector<double>& q_star) {
  double gap = 0.0;
  for (int s = 0; s < table.n_states(); ++s)
    for (int a = 0; a < table.n_actions(); ++a)
      gap = std::max(gap, std::abs(table.q(s, a) - q_star[s * table.n_actions() + a]));
  return gap;
}

}  // namespace rtbq_test
