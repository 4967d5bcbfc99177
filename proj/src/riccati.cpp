#include "etlqg/riccati.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

namespace etlqg {

RiccatiSolution backward_riccati(const TimeVaryingLinearSystem& sys,
                                 const CostSpec& cost) {
  if (cost.horizon != sys.horizon) {
    throw InvalidInputError("backward_riccati: horizon mismatch");
  }
  const int N = sys.horizon;
  const int n = sys.state_dim();

  RiccatiSolution out;
  out.S.resize(N + 2);
  out.Gamma.resize(N + 2);
  out.L.resize(N + 1);
  out.Lambda.resize(N + 1);

  const Matrix& qn1 = cost.Q_k(N + 1);
  out.S[N + 1] = 0.5 * (qn1 + qn1.transpose());
  out.Gamma[N + 1] = Matrix::Zero(n, n);

  for (int k = N; k >= 0; --k) {
    const Matrix& a = sys.A_k(k);
    const Matrix& b = sys.B_k(k);
    const Matrix& sn = out.S[k + 1];

    Matrix bts = b.transpose() * sn;  // m x n
    Matrix lam = bts * b + cost.R_k(k);
    lam = 0.5 * (lam + lam.transpose());
    Matrix rhs = bts * a;  // m x n
    Matrix l = solve_spd(lam, rhs, "Lambda at k=" + std::to_string(k));

    Matrix gamma = rhs.transpose() * l;
    gamma = 0.5 * (gamma + gamma.transpose());
    Matrix s = cost.Q_k(k) + a.transpose() * sn * a - gamma;

    out.Lambda[k] = std::move(lam);
    out.L[k] = std::move(l);
    out.Gamma[k] = std::move(gamma);
    out.S[k] = 0.5 * (s + s.transpose());
  }
  return out;
}

double lemma1_residual(const TrajectoryRecord& trajectory,
                       const RiccatiSolution& ric, const CostSpec& cost) {
  const int N = trajectory.horizon;
  const size_t steps = static_cast<size_t>(N) + 1;
  if (trajectory.x.size() != steps + 1 || trajectory.u.size() != steps ||
      trajectory.w.size() != steps || trajectory.delta.size() != steps) {
    throw IncompleteTrajectoryError(
        "lemma1_residual: trajectory log does not cover the horizon");
  }
  if (ric.S.size() != steps + 1 || ric.L.size() != steps ||
      ric.Lambda.size() != steps || cost.horizon != N) {
    throw InvalidInputError(
        "lemma1_residual: Riccati solution or cost horizon mismatch");
  }

  const Vector& xT = trajectory.x[steps];
  double lhs = xT.dot(cost.Q_k(N + 1) * xT);
  double rhs = trajectory.x[0].dot(ric.S[0] * trajectory.x[0]);

  for (int k = 0; k <= N; ++k) {
    const Vector& x = trajectory.x[k];
    const Vector& u = trajectory.u[k];
    const Vector& w = trajectory.w[k];
    double priced = cost.theta_k(k) * trajectory.delta[k];

    lhs += x.dot(cost.Q_k(k) * x) + u.dot(cost.R_k(k) * u) + priced;

    // A_k x_k + B_k u_k recovered from the logged step as x_{k+1} - w_k.
    Vector drift = trajectory.x[k + 1] - w;
    Vector mismatch = u + ric.L[k] * x;
    rhs += priced + w.dot(ric.S[k + 1] * w) +
           2.0 * drift.dot(ric.S[k + 1] * w) +
           mismatch.dot(ric.Lambda[k] * mismatch);
  }
  return std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));
}

}  // namespace etlqg
