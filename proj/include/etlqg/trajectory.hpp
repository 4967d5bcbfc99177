#pragma once

#include <cstdint>
#include <vector>

#include "etlqg/model.hpp"

namespace etlqg {

// Complete log of one closed-loop run. Per-step sequences are indexed by
// k = 0..horizon; x additionally carries the terminal state x_{N+1}.
// Imperfect-pattern fields (y, v, xcheck, Sigma, eps, nu) stay empty under
// the perfect pattern. voi holds the evaluated trigger value for VoI-based
// policies and NaN otherwise.
struct TrajectoryRecord {
  int horizon = 0;
  InfoPattern pattern = InfoPattern::kPerfect;

  std::vector<Vector> x;       // 0..N+1
  std::vector<Vector> u;       // 0..N
  std::vector<Vector> w;       // 0..N
  std::vector<Vector> y;       // 0..N, imperfect only
  std::vector<Vector> v;       // 0..N, imperfect only
  std::vector<int> delta;      // 0..N, each 0 or 1
  std::vector<double> voi;     // 0..N
  std::vector<Vector> xhat;    // 0..N
  std::vector<Matrix> P;       // 0..N
  std::vector<Vector> xcheck;  // 0..N, imperfect only
  std::vector<Matrix> Sigma;   // 0..N, imperfect only
  std::vector<Vector> eps;     // 0..N, imperfect only
  std::vector<Vector> nu;      // 0..N, imperfect only

  std::vector<double> stage_cost;  // x'Qx + u'Ru + theta*delta per step
  double terminal_cost = 0.0;      // x_{N+1}' Q_{N+1} x_{N+1}

  // Accumulators kept separate so performance, pricing, and rate never mix.
  double performance_sum = 0.0;    // sum of x'Qx + u'Ru plus terminal_cost
  double theta_sum = 0.0;          // sum of theta_k delta_k
  double weighted_rate_sum = 0.0;  // sum of ell_k delta_k
  int transmissions = 0;

  std::uint64_t seed = 0;
  std::uint64_t stream_index = 0;

  // Control performance J, normalized by N+1.
  double j() const { return performance_sum / (horizon + 1); }
  // Sampling rate, normalized by N+1.
  double rate() const { return weighted_rate_sum / (horizon + 1); }
  // Unnormalized Lagrangian cost.
  double psi() const { return performance_sum + theta_sum; }
};

}  // namespace etlqg
