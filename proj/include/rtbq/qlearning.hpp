#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace rtbq {

// Per-cell learning rate. decay_c = 0 keeps the rate constant; a positive
// decay shrinks it on often-visited cells.
inline double adaptive_alpha(double alpha0, double decay_c, std::int64_t visits) {
  if (decay_c == 0.0) return alpha0;
  return alpha0 / (1.0 + decay_c * static_cast<double>(visits));
}

// Dense action-value table over flat state and action indices, with visit
// counts per cell.
class QTable {
 public:
  QTable(int n_states, int n_actions, double alpha = 0.1, double gamma = 0.9,
         double alpha_visit_decay = 0.0)
      : n_states_(n_states),
        n_actions_(n_actions),
        alpha_(alpha),
        gamma_(gamma),
        alpha_visit_decay_(alpha_visit_decay),
        values_(static_cast<std::size_t>(n_states) * n_actions, 0.0),
        visits_(static_cast<std::size_t>(n_states) * n_actions, 0) {
    if (n_states <= 0 || n_actions <= 0) throw std::invalid_argument("qtable: empty dimensions");
    if (!(alpha > 0.0 && alpha <= 1.0) && alpha != 0.0)
      throw std::invalid_argument("qtable: alpha outside (0,1]");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("qtable: gamma outside [0,1]");
    if (alpha_visit_decay < 0.0) throw std::invalid_argument("qtable: negative visit decay");
  }

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  double alpha() const { return alpha_; }
  double gamma() const { return gamma_; }
  double alpha_visit_decay() const { return alpha_visit_decay_; }

  double q(int s, int a) const { return values_[cell(s, a)]; }
  double& q(int s, int a) { return values_[cell(s, a)]; }
  std::int64_t visits(int s, int a) const { return visits_[cell(s, a)]; }

  const std::vector<double>& values() const { return values_; }
  const std::vector<std::int64_t>& visit_counts() const { return visits_; }

  double max_q(int s) const {
    const std::size_t base = cell(s, 0);
    double best = values_[base];
    for (int a = 1; a < n_actions_; ++a) best = std::max(best, values_[base + a]);
    return best;
  }

  int argmax_action(int s) const {
    const std::size_t base = cell(s, 0);
    int best = 0;
    for (int a = 1; a < n_actions_; ++a) {
      if (values_[base + a] > values_[base + best]) best = a;  // ties keep the lowest index
    }
    return best;
  }

  void bump_visit(int s, int a) { ++visits_[cell(s, a)]; }
  void set_visit_count(int s, int a, std::int64_t v) { visits_[cell(s, a)] = v; }

  std::size_t cell(int s, int a) const {
    if (s < 0 || s >= n_states_) throw std::out_of_range("qtable: state index");
    if (a < 0 || a >= n_actions_) throw std::out_of_range("qtable: action index");
    return static_cast<std::size_t>(s) * n_actions_ + a;
  }

 private:
  int n_states_;
  int n_actions_;
  double alpha_;
  double gamma_;
  double alpha_visit_decay_;
  std::vector<double> values_;
  std::vector<std::int64_t> visits_;
};

// One-step value update toward r + gamma * max_a' Q(s', a'). Touches exactly
// one cell.
inline void q_update(QTable& table, int s, int a, double r, int s_next) {
  if (!std::isfinite(r)) throw std::invalid_argument("q_update: non-finite reward");
  const double a_eff =
      adaptive_alpha(table.alpha(), table.alpha_visit_decay(), table.visits(s, a));
  const double target = r + table.gamma() * table.max_q(s_next);
  table.q(s, a) = (1.0 - a_eff) * table.q(s, a) + a_eff * target;
  table.bump_visit(s, a);
}

// Softmax selection probabilities at temperature theta, computed with the row
// maximum subtracted so large values cannot overflow.
inline std::vector<double> boltzmann_probabilities(const QTable& table, int s, double theta) {
  if (!(theta > 0.0)) throw std::invalid_argument("boltzmann: temperature must be > 0");
  const int n = table.n_actions();
  std::vector<double> p(static_cast<std::size_t>(n));
  const double top = table.max_q(s);
  double z = 0.0;
  for (int a = 0; a < n; ++a) {
    p[a] = std::exp((table.q(s, a) - top) / theta);
    z += p[a];
  }
  for (double& v : p) v /= z;
  return p;
}

// Sample an action by inverse CDF over the softmax weights; u01 must supply a
// draw in [0, 1). Exactly one draw is consumed.
template <class U01>
int boltzmann_sample(const QTable& table, int s, double theta, U01&& u01) {
  const std::vector<double> p = boltzmann_probabilities(table, s, theta);
  const double u = u01();
  double acc = 0.0;
  for (int a = 0; a + 1 < static_cast<int>(p.size()); ++a) {
    acc += p[a];
    if (u < acc) return a;
  }
  return static_cast<int>(p.size()) - 1;
}

// Greedy policy read-out; ties break to the lowest action index so the result
// is deterministic.
inline std::vector<int> extract_policy(const QTable& table) {
  std::vector<int> pi(static_cast<std::size_t>(table.n_states()));
  for (int s = 0; s < table.n_states(); ++s) pi[s] = table.argmax_action(s);
  return pi;
}

// Temperature schedule: theta_initial * decay^epoch, floored at theta_min.
struct ExplorationSchedule {
  double theta_initial = 1.0;
  double decay = 0.999;  // multiplicative, per action epoch
  double theta_min = 0.01;

  void validate() const {
    if (!(theta_initial > 0.0)) throw std::invalid_argument("exploration: theta_initial <= 0");
    if (!(decay > 0.0 && decay <= 1.0)) throw std::invalid_argument("exploration: decay outside (0,1]");
    if (!(theta_min > 0.0)) throw std::invalid_argument("exploration: theta_min <= 0");
  }

  double theta_at(std::int64_t epoch) const {
    return std::max(theta_min, theta_initial * std::pow(decay, static_cast<double>(epoch)));
  }
};

}  // namespace rtbq
