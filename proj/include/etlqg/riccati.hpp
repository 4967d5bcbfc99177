#pragma once

#include <vector>

#include "etlqg/model.hpp"
#include "etlqg/trajectory.hpp"

namespace etlqg {

// Backward LQR recursion output. S and Gamma run k = 0..N+1 with
// Gamma_{N+1} = 0 exactly and S_{N+1} = Q_{N+1}; L and Lambda run k = 0..N.
struct RiccatiSolution {
  std::vector<Matrix> S;
  std::vector<Matrix> Gamma;   // Gamma_k = A_k' S_{k+1} B_k Lambda_k^{-1} B_k' S_{k+1} A_k
  std::vector<Matrix> L;       // feedback gains, u = -L_k xhat
  std::vector<Matrix> Lambda;  // B_k' S_{k+1} B_k + R_k
};

// S_{N+1} = Q_{N+1}; for k = N..0:
//   Lambda_k = B_k' S_{k+1} B_k + R_k
//   L_k      = Lambda_k^{-1} B_k' S_{k+1} A_k          (SPD solve)
//   Gamma_k  = A_k' S_{k+1} B_k L_k
//   S_k      = Q_k + A_k' S_{k+1} A_k - Gamma_k, symmetrized each step.
// Throws SingularityError naming k if some Lambda_k is not positive definite.
RiccatiSolution backward_riccati(const TimeVaryingLinearSystem& sys,
                                 const CostSpec& cost);

// Pathwise cost-decomposition check. Evaluates, from the logged path only,
//   LHS = x_{N+1}'Q_{N+1}x_{N+1}
//         + sum_k (x_k'Q_k x_k + u_k'R_k u_k + theta_k delta_k)
//   RHS = x_0'S_0 x_0 + sum_k (theta_k delta_k + w_k'S_{k+1}w_k
//         + 2(A_k x_k + B_k u_k)'S_{k+1} w_k
//         + (u_k + L_k x_k)'Lambda_k(u_k + L_k x_k))
// with A_k x_k + B_k u_k recovered as x_{k+1} - w_k, and returns
// |LHS - RHS| / max(1, |LHS|). The identity holds for any triggering and any
// control sequence, so this is a policy-free trajectory check.
// Throws IncompleteTrajectoryError when the log lacks states, inputs, noises,
// or decisions over the full horizon.
double lemma1_residual(const TrajectoryRecord& trajectory,
                       const RiccatiSolution& ric, const CostSpec& cost);

}  // namespace etlqg
