#pragma once

#include <vector>

#include "etlqg/estimators.hpp"
#include "etlqg/model.hpp"
#include "etlqg/riccati.hpp"

namespace etlqg {

// Outcome of one trigger evaluation. value = instantaneous + tail - theta and
// the transmit decision is value >= 0 (ties transmit). extrapolated flags a
// table lookup outside the tabulated grid.
struct VoiResult {
  double value = 0.0;
  bool transmit = false;
  double instantaneous = 0.0;
  double theta = 0.0;
  double tail = 0.0;
  bool extrapolated = false;
};

struct PeriodicSpec {
  int period = 1;       // >= 1
  int offset = 0;       // 0 <= offset < period
};

// 1 iff (k - offset) mod period == 0.
int periodic_trigger(const PeriodicSpec& spec, int k);

// Certainty-equivalence control u_k = -L_k xhat.
Vector ce_control(const RiccatiSolution& ric, int k, const Vector& xhat);

// Perfect-pattern trigger value
//   value = e' A_k' Gamma_{k+1} A_k e - theta_k
// with zero tail (the rollout correction vanishes under this pattern).
VoiResult voi_perfect(const RiccatiSolution& ric,
                      const TimeVaryingLinearSystem& sys, int k,
                      const Vector& e, double theta_k);

// Imperfect-pattern trigger value. Instantaneous part
//   nu' K_k' Gamma_{k+1} (2 A_k eps - K_k nu)
// plus a tail that rolls both hypothetical branches (transmit / hold) forward
// under always-transmit continuation from t = k+1 to N:
//   branch i in {0,1}:
//     ebar^i_{k+1} = A_k eps - i K_k nu
//     Pbar^i_{k+1} = A_k Sigma_k A_k' + W_k
//     P^i_{k+1}    = A_k P_k A_k' + W_k - i K_k C_k P_k A_k'
//     for t = k+1..N-1:
//       K^i_t = A_t P^i_t C_t'(C_t P^i_t C_t' + V_t)^{-1}
//       ebar^i_{t+1} = (A_t - K^i_t C_t) ebar^i_t
//       Pbar^i_{t+1} = (A_t - K^i_t C_t) Pbar^i_t (A_t - K^i_t C_t)'
//                      + W_t + K^i_t V_t K^i_t'
//       P^i_{t+1}    = A_t P^i_t A_t' + W_t - K^i_t C_t P^i_t A_t'
//   tail = sum_{t=k+2}^{N} [ ebar^0_t' Gamma_t ebar^0_t + tr(Gamma_t Pbar^0_t)
//                          - ebar^1_t' Gamma_t ebar^1_t - tr(Gamma_t Pbar^1_t) ]
// The tail is empty for k >= N-1; at k = N the value is exactly -theta_N.
VoiResult voi_imperfect(const RiccatiSolution& ric,
                        const TimeVaryingLinearSystem& sys, int k,
                        const TriggerSignals& signals, const Matrix& Sigma_k,
                        const Matrix& P_k, double theta_k);

// Grid specification for the scalar value-function tabulation. half_width <= 0
// selects the automatic extent 6*sigma, where sigma^2 is the stationary
// hold-forever error variance W/(1 - a^2) when |a| < 1 and the N-step
// open-loop variance otherwise.
struct DpGridSpec {
  double half_width = 0.0;
  int points = 2001;  // odd keeps 0 on the grid
};

// Backward tabulation of the scalar optimal trigger value function:
//   V_{N+1} = 0
//   hold:     a_k^2 Gamma_{k+1} e^2 + tr(Gamma_{k+1} W_k) + E[V_{k+1}(a_k e + w)]
//   transmit: theta_k               + tr(Gamma_{k+1} W_k) + E[V_{k+1}(w)]
//   V_k = min(hold, transmit), transmit_region = (transmit <= hold)
// Expectations over w ~ N(0, W_k) use Gauss-Hermite quadrature with linear
// interpolation of V_{k+1}, clamped to the boundary values outside the grid.
// rho_k(e) = E[V_{k+1}(a_k e + w)] - E[V_{k+1}(w)] is tabulated alongside.
struct ScalarDpTable {
  Vector grid;                              // strictly increasing, symmetric
  std::vector<Vector> V;                    // k = 0..N+1
  std::vector<std::vector<char>> transmit;  // k = 0..N
  std::vector<Vector> rho;                  // k = 0..N
  std::vector<double> a;                    // resolved scalar A_k, k = 0..N
  std::vector<double> theta;                // theta_k used when building
  int quadrature_order = 32;
  int horizon = 0;

  // Piecewise-linear evaluation with constant extension beyond the ends.
  // outside (optional) reports whether e fell off the grid.
  double value_at(int k, double e, bool* outside = nullptr) const;
  double rho_at(int k, double e, bool* outside = nullptr) const;
};

// Requires a one-dimensional perfect-pattern system (DimensionError or
// PatternError otherwise).
ScalarDpTable scalar_dp_value(const TimeVaryingLinearSystem& sys,
                              const CostSpec& cost, const RiccatiSolution& ric,
                              const DpGridSpec& grid = {},
                              int quadrature_order = 32);

// Exact scalar trigger value read off the table:
//   value = a_k^2 Gamma_{k+1} e^2 - theta_k + rho_k(e)
// An e outside the tabulated grid sets extrapolated on the result.
VoiResult exact_voi_scalar(const ScalarDpTable& table,
                           const RiccatiSolution& ric, int k, double e,
                           double theta_k);

}  // namespace etlqg
