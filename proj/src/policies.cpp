#include "etlqg/policies.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace etlqg {

namespace {

Matrix symmetrized(Matrix m) { return 0.5 * (m + m.transpose()); }

void check_time_index(int k, int horizon, const char* where) {
  if (k < 0 || k > horizon) {
    throw RangeError(std::string(where) + ": time index " + std::to_string(k) +
                     " outside [0, " + std::to_string(horizon) + "]");
  }
}

// Branch state at t = k+1 for the rollout tail.
struct BranchState {
  Vector e0, e1;
  Matrix Pb0, Pb1, P0, P1;
};

double tail_dynamic(const RiccatiSolution& ric,
                    const TimeVaryingLinearSystem& sys, int k,
                    BranchState st) {
  const int N = sys.horizon;
  double tail = 0.0;
  Vector* e[2] = {&st.e0, &st.e1};
  Matrix* pb[2] = {&st.Pb0, &st.Pb1};
  Matrix* pk[2] = {&st.P0, &st.P1};
  for (int t = k + 1; t <= N - 1; ++t) {
    const Matrix& a = sys.A_k(t);
    const Matrix& c = sys.C_k(t);
    const Matrix& v = sys.V_k(t);
    const Matrix& w = sys.W_k(t);
    for (int i = 0; i < 2; ++i) {
      Matrix cp = c * (*pk[i]);
      Matrix innov = symmetrized(cp * c.transpose() + v);
      Matrix gain =
          solve_spd(innov, cp * a.transpose(),
                    "innovation covariance at t=" + std::to_string(t))
              .transpose();
      Matrix f = a - gain * c;
      *e[i] = f * (*e[i]);
      *pb[i] = symmetrized(f * (*pb[i]) * f.transpose() +
                           gain * v * gain.transpose()) +
               w;
      *pk[i] = symmetrized(a * (*pk[i]) * a.transpose() -
                           gain * cp * a.transpose()) +
               w;
    }
    const Matrix& g = ric.Gamma[t + 1];
    tail += st.e0.dot(g * st.e0) + g.cwiseProduct(st.Pb0).sum() -
            st.e1.dot(g * st.e1) - g.cwiseProduct(st.Pb1).sum();
  }
  return tail;
}

// Same recursion with compile-time dimensions. The per-decision cost is
// O(N - k) small-matrix operations, so the two shapes the bundled
// experiments use get dedicated instantiations.
template <int n, int p>
double tail_fixed(const RiccatiSolution& ric, const Matrix& a_in,
                  const Matrix& c_in, const Matrix& v_in, const Matrix& w_in,
                  int k, int N, const BranchState& st) {
  using MatN = Eigen::Matrix<double, n, n>;
  using MatP = Eigen::Matrix<double, p, p>;
  using MatPN = Eigen::Matrix<double, p, n>;
  using MatNP = Eigen::Matrix<double, n, p>;
  using VecN = Eigen::Matrix<double, n, 1>;

  const MatN a = a_in;
  const MatPN c = c_in;
  const MatP v = v_in;
  const MatN w = w_in;
  VecN e[2] = {VecN(st.e0), VecN(st.e1)};
  MatN pb[2] = {MatN(st.Pb0), MatN(st.Pb1)};
  MatN pk[2] = {MatN(st.P0), MatN(st.P1)};

  double tail = 0.0;
  for (int t = k + 1; t <= N - 1; ++t) {
    for (int i = 0; i < 2; ++i) {
      MatPN cp = c * pk[i];
      MatP innov = cp * c.transpose() + v;
      MatNP gain = (a * cp.transpose()) * innov.inverse();
      MatN f = a - gain * c;
      e[i] = f * e[i];
      MatN t1 = f * pb[i] * f.transpose() + gain * v * gain.transpose();
      pb[i] = 0.5 * (t1 + t1.transpose()) + w;
      MatN t2 = a * pk[i] * a.transpose() - gain * cp * a.transpose();
      pk[i] = 0.5 * (t2 + t2.transpose()) + w;
    }
    Eigen::Map<const MatN> g(ric.Gamma[static_cast<size_t>(t) + 1].data());
    tail += e[0].dot(g * e[0]) + g.cwiseProduct(pb[0]).sum() -
            e[1].dot(g * e[1]) - g.cwiseProduct(pb[1]).sum();
  }
  return tail;
}

// Piecewise-linear read with constant extension beyond the ends.
double interp_clamped(const Vector& grid, const Vector& vals, double x,
                      bool* outside) {
  const Eigen::Index g = grid.size();
  if (x < grid(0)) {
    if (outside) *outside = true;
    return vals(0);
  }
  if (x > grid(g - 1)) {
    if (outside) *outside = true;
    return vals(g - 1);
  }
  const double* lo =
      std::upper_bound(grid.data(), grid.data() + g, x);
  Eigen::Index i = std::clamp<Eigen::Index>(lo - grid.data() - 1, 0, g - 2);
  double t = (x - grid(i)) / (grid(i + 1) - grid(i));
  return vals(i) + t * (vals(i + 1) - vals(i));
}

void gauss_hermite(int order, Vector& nodes, Vector& weights) {
  if (order < 2) {
    throw InvalidInputError("gauss_hermite: order must be >= 2");
  }
  Matrix j = Matrix::Zero(order, order);
  for (int i = 1; i < order; ++i) {
    double b = std::sqrt(0.5 * i);
    j(i - 1, i) = b;
    j(i, i - 1) = b;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(j);
  nodes = es.eigenvalues();
  weights.resize(order);
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  for (int i = 0; i < order; ++i) {
    double q = es.eigenvectors()(0, i);
    weights(i) = sqrt_pi * q * q;
  }
  // Enforce exact +- symmetry so even integrands integrate evenly.
  for (int i = 0, r = order - 1; i < r; ++i, --r) {
    double t = 0.5 * (nodes(i) - nodes(r));
    nodes(i) = t;
    nodes(r) = -t;
    double wm = 0.5 * (weights(i) + weights(r));
    weights(i) = wm;
    weights(r) = wm;
  }
  if (order % 2 == 1) nodes(order / 2) = 0.0;
}

}  // namespace

int periodic_trigger(const PeriodicSpec& spec, int k) {
  if (spec.period < 1) {
    throw InvalidInputError("periodic_trigger: period must be >= 1");
  }
  if (spec.offset < 0 || spec.offset >= spec.period) {
    throw InvalidInputError("periodic_trigger: offset outside [0, period)");
  }
  int r = (k - spec.offset) % spec.period;
  if (r < 0) r += spec.period;
  return r == 0 ? 1 : 0;
}

Vector ce_control(const RiccatiSolution& ric, int k, const Vector& xhat) {
  check_time_index(k, static_cast<int>(ric.L.size()) - 1, "ce_control");
  const Matrix& l = ric.L[static_cast<size_t>(k)];
  if (xhat.size() != l.cols()) {
    throw DimensionError("ce_control: estimate dimension");
  }
  return -(l * xhat);
}

VoiResult voi_perfect(const RiccatiSolution& ric,
                      const TimeVaryingLinearSystem& sys, int k,
                      const Vector& e, double theta_k) {
  if (sys.pattern != InfoPattern::kPerfect) {
    throw PatternError("voi_perfect: requires the perfect pattern");
  }
  check_time_index(k, sys.horizon, "voi_perfect");
  const Matrix& a = sys.A_k(k);
  if (e.size() != a.cols()) {
    throw DimensionError("voi_perfect: error dimension");
  }
  Vector ae = a * e;
  VoiResult r;
  r.instantaneous = ae.dot(ric.Gamma[static_cast<size_t>(k) + 1] * ae);
  r.theta = theta_k;
  r.tail = 0.0;
  r.value = r.instantaneous - theta_k;
  r.transmit = r.value >= 0.0;
  return r;
}

VoiResult voi_imperfect(const RiccatiSolution& ric,
                        const TimeVaryingLinearSystem& sys, int k,
                        const TriggerSignals& signals, const Matrix& Sigma_k,
                        const Matrix& P_k, double theta_k) {
  if (sys.pattern != InfoPattern::kImperfect) {
    throw PatternError("voi_imperfect: requires the imperfect pattern");
  }
  const int N = sys.horizon;
  check_time_index(k, N, "voi_imperfect");
  const int n = sys.state_dim();
  const int p = sys.output_dim();
  const Matrix& a = sys.A_k(k);
  const Matrix& c = sys.C_k(k);
  const Matrix& w = sys.W_k(k);
  if (signals.eps.size() != n || signals.nu.size() != p ||
      signals.K.rows() != n || signals.K.cols() != p || Sigma_k.rows() != n ||
      Sigma_k.cols() != n || P_k.rows() != n || P_k.cols() != n) {
    throw DimensionError("voi_imperfect: signal dimensions");
  }

  Vector aeps = a * signals.eps;
  Vector knu = signals.K * signals.nu;
  const Matrix& g1 = ric.Gamma[static_cast<size_t>(k) + 1];

  VoiResult r;
  r.instantaneous = knu.dot(g1 * (2.0 * aeps - knu));
  r.theta = theta_k;

  if (k <= N - 2) {
    BranchState st;
    st.e0 = aeps;
    st.e1 = aeps - knu;
    Matrix pbar = symmetrized(a * Sigma_k * a.transpose()) + w;
    st.Pb0 = pbar;
    st.Pb1 = pbar;
    Matrix apa = symmetrized(a * P_k * a.transpose()) + w;
    st.P0 = apa;
    st.P1 = symmetrized(apa - signals.K * (c * P_k * a.transpose()));

    const bool invariant = sys.A.size() == 1 && sys.C.size() == 1 &&
                           sys.V.size() == 1 && sys.W.size() == 1;
    if (invariant && n == 4 && p == 2) {
      r.tail = tail_fixed<4, 2>(ric, a, c, sys.V_k(k), w, k, N, st);
    } else if (invariant && n == 1 && p == 1) {
      r.tail = tail_fixed<1, 1>(ric, a, c, sys.V_k(k), w, k, N, st);
    } else {
      r.tail = tail_dynamic(ric, sys, k, std::move(st));
    }
  }

  r.value = r.instantaneous + r.tail - theta_k;
  r.transmit = r.value >= 0.0;
  return r;
}

double ScalarDpTable::value_at(int k, double e, bool* outside) const {
  check_time_index(k, horizon + 1, "ScalarDpTable::value_at");
  return interp_clamped(grid, V[static_cast<size_t>(k)], e, outside);
}

double ScalarDpTable::rho_at(int k, double e, bool* outside) const {
  check_time_index(k, horizon, "ScalarDpTable::rho_at");
  return interp_clamped(grid, rho[static_cast<size_t>(k)], e, outside);
}

ScalarDpTable scalar_dp_value(const TimeVaryingLinearSystem& sys,
                              const CostSpec& cost, const RiccatiSolution& ric,
                              const DpGridSpec& grid, int quadrature_order) {
  if (sys.pattern != InfoPattern::kPerfect) {
    throw PatternError("scalar_dp_value: requires the perfect pattern");
  }
  if (sys.state_dim() != 1 || sys.input_dim() != 1) {
    throw DimensionError(
        "scalar_dp_value: requires a one-dimensional system");
  }
  if (cost.horizon != sys.horizon) {
    throw InvalidInputError("scalar_dp_value: horizon mismatch");
  }
  if (grid.points < 3) {
    throw InvalidInputError("scalar_dp_value: grid needs at least 3 points");
  }
  const int N = sys.horizon;

  double half = grid.half_width;
  if (half <= 0.0) {
    bool stable = true;
    for (int k = 0; k <= N; ++k) {
      if (std::abs(sys.A_k(k)(0, 0)) >= 1.0) stable = false;
    }
    double var = 0.0;
    if (stable) {
      for (int k = 0; k <= N; ++k) {
        double ak = sys.A_k(k)(0, 0);
        var = std::max(var, sys.W_k(k)(0, 0) / (1.0 - ak * ak));
      }
    } else {
      var = sys.M0(0, 0);
      for (int k = 0; k < N; ++k) {
        double ak = sys.A_k(k)(0, 0);
        var = ak * ak * var + sys.W_k(k)(0, 0);
      }
    }
    half = 6.0 * std::sqrt(std::max(var, 0.0));
    if (!(half > 0.0)) half = 1.0;
  }

  ScalarDpTable table;
  table.horizon = N;
  table.quadrature_order = quadrature_order;
  const int g = grid.points;
  table.grid.resize(g);
  double step = half / (g - 1);
  for (int i = 0; i < g; ++i) {
    table.grid(i) = (2.0 * i - (g - 1)) * step;
  }

  Vector nodes, weights;
  gauss_hermite(quadrature_order, nodes, weights);
  Vector wn = weights / std::sqrt(std::numbers::pi);

  table.V.assign(static_cast<size_t>(N) + 2, Vector());
  table.V[static_cast<size_t>(N) + 1] = Vector::Zero(g);
  table.transmit.assign(static_cast<size_t>(N) + 1,
                        std::vector<char>(static_cast<size_t>(g), 0));
  table.rho.assign(static_cast<size_t>(N) + 1, Vector::Zero(g));
  table.a.resize(static_cast<size_t>(N) + 1);
  table.theta.resize(static_cast<size_t>(N) + 1);

  for (int k = N; k >= 0; --k) {
    const double a = sys.A_k(k)(0, 0);
    const double wk = sys.W_k(k)(0, 0);
    const double gamma1 = ric.Gamma[static_cast<size_t>(k) + 1](0, 0);
    const double theta = cost.theta_k(k);
    const double trace_term = gamma1 * wk;
    const double s = std::sqrt(2.0 * wk);
    const Vector& vnext = table.V[static_cast<size_t>(k) + 1];

    double ev_transmit = 0.0;
    for (int q = 0; q < quadrature_order; ++q) {
      ev_transmit += wn(q) * interp_clamped(table.grid, vnext,
                                            s * nodes(q), nullptr);
    }
    const double cost_transmit = theta + trace_term + ev_transmit;

    Vector& vk = table.V[static_cast<size_t>(k)];
    vk.resize(g);
    for (int i = 0; i < g; ++i) {
      double ae = a * table.grid(i);
      double ev_hold = 0.0;
      for (int q = 0; q < quadrature_order; ++q) {
        ev_hold += wn(q) * interp_clamped(table.grid, vnext,
                                          ae + s * nodes(q), nullptr);
      }
      double cost_hold = gamma1 * ae * ae + trace_term + ev_hold;
      bool tx = cost_transmit <= cost_hold;
      vk(i) = tx ? cost_transmit : cost_hold;
      table.transmit[static_cast<size_t>(k)][static_cast<size_t>(i)] =
          tx ? 1 : 0;
      table.rho[static_cast<size_t>(k)](i) = ev_hold - ev_transmit;
    }
    table.a[static_cast<size_t>(k)] = a;
    table.theta[static_cast<size_t>(k)] = theta;
  }
  return table;
}

VoiResult exact_voi_scalar(const ScalarDpTable& table,
                           const RiccatiSolution& ric, int k, double e,
                           double theta_k) {
  check_time_index(k, table.horizon, "exact_voi_scalar");
  bool outside = false;
  double rho = table.rho_at(k, e, &outside);
  double ae = table.a[static_cast<size_t>(k)] * e;

  VoiResult r;
  r.instantaneous = ric.Gamma[static_cast<size_t>(k) + 1](0, 0) * ae * ae;
  r.theta = theta_k;
  r.tail = rho;
  r.value = r.instantaneous - theta_k + rho;
  r.transmit = r.value >= 0.0;
  r.extrapolated = outside;
  return r;
}

}  // namespace etlqg
