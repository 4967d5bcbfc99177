#pragma once

#include <optional>

#include "etlqg/model.hpp"

namespace etlqg {

// Controller-side conditional state: xhat = E[x_k | controller info],
// P = Cov[x_k | controller info]. Because payloads arrive with one step of
// delay, the belief for step k is formed before y_k (or x_k) is usable by
// the controller.
struct ControllerBelief {
  Vector xhat;
  Matrix P;
  int k = 0;
};

// Trigger-side conditional state: xcheck = E[x_k | trigger info],
// Sigma = Cov[x_k | trigger info]. The trigger sees every measurement, so
// Sigma_k precedes P_k in the positive-semidefinite order.
struct TriggerBelief {
  Vector xcheck;
  Matrix Sigma;
  int k = 0;
};

// Quantities the triggering policies consume at step k. Under the perfect
// pattern only e (= x_k - xhat_k) and eps (== e) are populated; under the
// imperfect pattern eps = xcheck_k - xhat_k, nu = y_k - C_k xhat_k, and K is
// the controller gain built from the current P_k.
struct TriggerSignals {
  Vector e;
  Vector eps;
  Vector nu;
  Matrix K;
};

// Perfect-pattern controller estimator step:
//   xhat_{k+1} = A_k xhat_k + B_k u_k + delta A_k (x_k - xhat_k)
//   P_{k+1}    = A_k P_k A_k' + W_k - delta A_k P_k A_k'
// x_k is consumed only when delta = 1; passing delta = 1 without it throws
// MissingPayloadError. Initial belief: xhat_0 = m0, P_0 = M0 at k = 0.
ControllerBelief perfect_controller_step(const ControllerBelief& b,
                                         const TimeVaryingLinearSystem& sys,
                                         const Vector& u, int delta,
                                         const std::optional<Vector>& x_k);

// Trigger-side Kalman filter initialization at k = 0 from the first
// measurement:
//   Sigma_0 = M0 - M0 C_0'(C_0 M0 C_0' + V_0)^{-1} C_0 M0
//   xcheck_0 = m0 + Sigma_0 C_0' V_0^{-1} (y0 - C_0 m0)
// The covariance form above also covers singular M0.
TriggerBelief trigger_kf_init(const TimeVaryingLinearSystem& sys,
                              const Vector& y0);

// Trigger-side Kalman filter step consuming y_{k} with b.k = k-1:
//   predict  xm = A xcheck + B u,  Sm = A Sigma A' + W
//   update   Sigma_k = Sm - Sm C'(C Sm C' + V)^{-1} C Sm
//            H_k = Sm C'(C Sm C' + V)^{-1}   (= Sigma_k C' V^{-1})
//            xcheck_k = xm + H_k (y - C xm)
TriggerBelief trigger_kf_step(const TriggerBelief& b,
                              const TimeVaryingLinearSystem& sys,
                              const Vector& u, const Vector& y_next);

// Gain K_k = A_k P C_k' (C_k P C_k' + V_k)^{-1} used by both the
// intermittent estimator and the triggering policies.
Matrix intermittent_gain(const TimeVaryingLinearSystem& sys, int k,
                         const Matrix& P);

struct IntermittentUpdate {
  ControllerBelief belief;
  Matrix K;  // returned for every delta; the trigger needs it when delta = 0
};

// Imperfect-pattern controller estimator step:
//   xhat_{k+1} = A_k xhat_k + B_k u_k + delta K_k (y_k - C_k xhat_k)
//   P_{k+1}    = A_k P_k A_k' + W_k - delta K_k C_k P_k A_k'
// re-symmetrized after the update. y_k is consumed only when delta = 1.
IntermittentUpdate controller_intermittent_step(
    const ControllerBelief& b, const TimeVaryingLinearSystem& sys,
    const Vector& u, int delta, const std::optional<Vector>& y_k);

// Builds the step-k trigger signals against the current controller belief.
// observation is x_k under the perfect pattern and y_k under the imperfect
// pattern. Requires tb.k == cb.k.
TriggerSignals trigger_signals(const TriggerBelief& tb,
                               const ControllerBelief& cb,
                               const TimeVaryingLinearSystem& sys,
                               const Vector& observation);

}  // namespace etlqg
