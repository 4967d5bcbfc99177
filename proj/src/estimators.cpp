#include "etlqg/estimators.hpp"

#include <string>

namespace etlqg {

namespace {

void require_binary(int delta) {
  if (delta != 0 && delta != 1) {
    throw InvalidInputError("delta must be 0 or 1, got " +
                            std::to_string(delta));
  }
}

Matrix symmetrized(Matrix m) { return 0.5 * (m + m.transpose()); }

}  // namespace

ControllerBelief perfect_controller_step(const ControllerBelief& b,
                                         const TimeVaryingLinearSystem& sys,
                                         const Vector& u, int delta,
                                         const std::optional<Vector>& x_k) {
  require_binary(delta);
  const int k = b.k;
  const Matrix& a = sys.A_k(k);
  const Matrix& bm = sys.B_k(k);
  const Matrix& w = sys.W_k(k);
  if (b.xhat.size() != a.cols() || u.size() != bm.cols()) {
    throw DimensionError("perfect_controller_step: dimension mismatch");
  }
  if (delta == 1 && !x_k.has_value()) {
    throw MissingPayloadError(
        "perfect_controller_step: delta = 1 requires the transmitted state");
  }

  Vector xhat = a * b.xhat + bm * u;
  Matrix p;
  if (delta == 1) {
    if (x_k->size() != a.cols()) {
      throw DimensionError("perfect_controller_step: payload dimension");
    }
    xhat += a * (*x_k - b.xhat);
    p = w;
  } else {
    p = symmetrized(a * b.P * a.transpose()) + w;
  }
  return {std::move(xhat), std::move(p), k + 1};
}

TriggerBelief trigger_kf_init(const TimeVaryingLinearSystem& sys,
                              const Vector& y0) {
  const Matrix& c = sys.C_k(0);
  const Matrix& v = sys.V_k(0);
  if (y0.size() != c.rows()) {
    throw DimensionError("trigger_kf_init: measurement dimension");
  }

  Matrix cm = c * sys.M0;  // p x n
  Matrix innov = symmetrized(cm * c.transpose() + v);
  Matrix gain = solve_spd(innov, cm, "innovation covariance at k=0");
  Matrix sigma = symmetrized(sys.M0 - cm.transpose() * gain);
  // gain' = M0 C'(C M0 C' + V)^{-1} equals Sigma C' V^{-1} but stays stable
  // as V -> 0.
  Vector xcheck = sys.m0 + gain.transpose() * (y0 - c * sys.m0);
  return {std::move(xcheck), std::move(sigma), 0};
}

TriggerBelief trigger_kf_step(const TriggerBelief& b,
                              const TimeVaryingLinearSystem& sys,
                              const Vector& u, const Vector& y_next) {
  const int k = b.k;
  const int next = k + 1;
  const Matrix& a = sys.A_k(k);
  const Matrix& bm = sys.B_k(k);
  const Matrix& w = sys.W_k(k);
  const Matrix& c = sys.C_k(next);
  const Matrix& v = sys.V_k(next);
  if (b.xcheck.size() != a.cols() || u.size() != bm.cols() ||
      y_next.size() != c.rows()) {
    throw DimensionError("trigger_kf_step: dimension mismatch");
  }

  Vector xm = a * b.xcheck + bm * u;
  Matrix sm = symmetrized(a * b.Sigma * a.transpose()) + w;

  Matrix cs = c * sm;  // p x n
  Matrix innov = symmetrized(cs * c.transpose() + v);
  Matrix gain = solve_spd(
      innov, cs, "innovation covariance at k=" + std::to_string(next));
  Matrix sigma = symmetrized(sm - cs.transpose() * gain);
  Vector xcheck = xm + gain.transpose() * (y_next - c * xm);
  return {std::move(xcheck), std::move(sigma), next};
}

Matrix intermittent_gain(const TimeVaryingLinearSystem& sys, int k,
                         const Matrix& P) {
  const Matrix& a = sys.A_k(k);
  const Matrix& c = sys.C_k(k);
  const Matrix& v = sys.V_k(k);
  if (P.rows() != a.rows() || P.cols() != a.cols()) {
    throw DimensionError("intermittent_gain: covariance dimension");
  }
  Matrix cp = c * P;  // p x n
  Matrix innov = symmetrized(cp * c.transpose() + v);
  return solve_spd(innov, cp * a.transpose(),
                   "innovation covariance at k=" + std::to_string(k))
      .transpose();  // A P C' (C P C' + V)^{-1}
}

IntermittentUpdate controller_intermittent_step(
    const ControllerBelief& b, const TimeVaryingLinearSystem& sys,
    const Vector& u, int delta, const std::optional<Vector>& y_k) {
  require_binary(delta);
  const int k = b.k;
  const Matrix& a = sys.A_k(k);
  const Matrix& bm = sys.B_k(k);
  const Matrix& w = sys.W_k(k);
  const Matrix& c = sys.C_k(k);
  if (b.xhat.size() != a.cols() || u.size() != bm.cols()) {
    throw DimensionError("controller_intermittent_step: dimension mismatch");
  }
  if (delta == 1 && !y_k.has_value()) {
    throw MissingPayloadError(
        "controller_intermittent_step: delta = 1 requires the measurement");
  }

  Matrix gain = intermittent_gain(sys, k, b.P);
  Vector xhat = a * b.xhat + bm * u;
  Matrix p = symmetrized(a * b.P * a.transpose()) + w;
  if (delta == 1) {
    if (y_k->size() != c.rows()) {
      throw DimensionError("controller_intermittent_step: payload dimension");
    }
    xhat += gain * (*y_k - c * b.xhat);
    p -= gain * c * b.P * a.transpose();
    p = symmetrized(std::move(p));
  }
  return {{std::move(xhat), std::move(p), k + 1}, std::move(gain)};
}

TriggerSignals trigger_signals(const TriggerBelief& tb,
                               const ControllerBelief& cb,
                               const TimeVaryingLinearSystem& sys,
                               const Vector& observation) {
  if (tb.k != cb.k) {
    throw InvalidInputError("trigger_signals: belief clocks disagree (" +
                            std::to_string(tb.k) + " vs " +
                            std::to_string(cb.k) + ")");
  }
  const int k = cb.k;
  TriggerSignals sig;
  if (sys.pattern == InfoPattern::kPerfect) {
    if (observation.size() != cb.xhat.size()) {
      throw DimensionError("trigger_signals: state dimension");
    }
    sig.e = observation - cb.xhat;
    sig.eps = sig.e;
  } else {
    const Matrix& c = sys.C_k(k);
    if (observation.size() != c.rows() || tb.xcheck.size() != cb.xhat.size()) {
      throw DimensionError("trigger_signals: dimension mismatch");
    }
    sig.eps = tb.xcheck - cb.xhat;
    sig.nu = observation - c * cb.xhat;
    sig.K = intermittent_gain(sys, k, cb.P);
  }
  return sig;
}

}  // namespace etlqg
