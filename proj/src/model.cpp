#include "etlqg/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace etlqg {

namespace {

const Matrix& seq_at(const std::vector<Matrix>& seq, int k, int horizon,
                     const char* field) {
  if (k < 0 || k > horizon) {
    throw RangeError(std::string(field) + ": index " + std::to_string(k) +
                     " outside [0, " + std::to_string(horizon) + "]");
  }
  if (seq.empty()) {
    throw InvalidInputError(std::string(field) + ": empty sequence");
  }
  if (seq.size() == 1) return seq.front();
  if (k >= static_cast<int>(seq.size())) {
    throw InvalidInputError(std::string(field) + ": sequence has " +
                            std::to_string(seq.size()) + " entries, index " +
                            std::to_string(k));
  }
  return seq[static_cast<size_t>(k)];
}

}  // namespace

int TimeVaryingLinearSystem::state_dim() const {
  return static_cast<int>(m0.size());
}

int TimeVaryingLinearSystem::input_dim() const {
  return B.empty() ? 0 : static_cast<int>(B.front().cols());
}

int TimeVaryingLinearSystem::output_dim() const {
  if (pattern != InfoPattern::kImperfect || C.empty()) return 0;
  return static_cast<int>(C.front().rows());
}

const Matrix& TimeVaryingLinearSystem::A_k(int k) const {
  return seq_at(A, k, horizon, "A");
}
const Matrix& TimeVaryingLinearSystem::B_k(int k) const {
  return seq_at(B, k, horizon, "B");
}
const Matrix& TimeVaryingLinearSystem::W_k(int k) const {
  return seq_at(W, k, horizon, "W");
}
const Matrix& TimeVaryingLinearSystem::C_k(int k) const {
  if (pattern != InfoPattern::kImperfect) {
    throw PatternError("C_k is only defined under the imperfect pattern");
  }
  return seq_at(C, k, horizon, "C");
}
const Matrix& TimeVaryingLinearSystem::V_k(int k) const {
  if (pattern != InfoPattern::kImperfect) {
    throw PatternError("V_k is only defined under the imperfect pattern");
  }
  return seq_at(V, k, horizon, "V");
}

const Matrix& CostSpec::Q_k(int k) const {
  if (k == horizon + 1) return Q_terminal;
  return seq_at(Q, k, horizon, "Q");
}
const Matrix& CostSpec::R_k(int k) const { return seq_at(R, k, horizon, "R"); }

double CostSpec::ell_k(int k) const {
  if (k < 0 || k > horizon) {
    throw RangeError("ell: index " + std::to_string(k) + " outside [0, " +
                     std::to_string(horizon) + "]");
  }
  if (ell.empty()) throw InvalidInputError("ell: empty sequence");
  return ell.size() == 1 ? ell.front() : ell.at(static_cast<size_t>(k));
}

double CostSpec::theta_k(int k) const { return ell_k(k) * lambda; }

namespace {

bool entries_finite(const Matrix& m) { return m.allFinite(); }

double sym_gap(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

double min_eig(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Empty string when ok, otherwise the violated condition.
std::string definiteness_violation(const Matrix& m, bool strict) {
  if (m.rows() != m.cols()) return "not square";
  if (!entries_finite(m)) return "non-finite entries";
  double scale = std::max(1.0, m.size() ? m.cwiseAbs().maxCoeff() : 0.0);
  if (sym_gap(m) > 1e-9 * scale) return "not symmetric";
  double lo = min_eig(m);
  if (strict) {
    if (lo <= 1e-12 * scale) {
      return "not PD (min eigenvalue " + std::to_string(lo) + ")";
    }
  } else if (lo < -1e-8 * scale) {
    return "not PSD (min eigenvalue " + std::to_string(lo) + ")";
  }
  return {};
}

struct Reporter {
  std::vector<Diagnostic>* out;
  bool structural_error = false;

  void error(const std::string& field, int k, const std::string& msg) {
    out->push_back({Diagnostic::Severity::kError, field, k, msg});
    structural_error = true;
  }
  void warn(const std::string& field, int k, const std::string& msg) {
    out->push_back({Diagnostic::Severity::kWarning, field, k, msg});
  }
};

// Calls fn(entry, reported_index) once per stored entry; broadcast sequences
// report index -1 so a time-invariant violation yields one diagnostic.
template <class Fn>
void for_each_stored(const std::vector<Matrix>& seq, Fn fn) {
  if (seq.size() == 1) {
    fn(seq.front(), -1);
    return;
  }
  for (size_t i = 0; i < seq.size(); ++i) fn(seq[i], static_cast<int>(i));
}

bool length_ok(size_t len, int horizon) {
  return len == 1 || len == static_cast<size_t>(horizon) + 1;
}

// Rank of a stacked reachability/observability matrix. Column-pivoted QR on
// the unsquared blocks keeps ill-conditioned but regular systems (pendulum
// position reaches the input only through double integration) at full rank.
int block_rank(const Matrix& stacked) {
  Eigen::ColPivHouseholderQR<Matrix> qr(stacked);
  qr.setThreshold(1e-9);
  return static_cast<int>(qr.rank());
}

}  // namespace

std::vector<Diagnostic> validate_system(const TimeVaryingLinearSystem& sys,
                                        const CostSpec& cost) {
  std::vector<Diagnostic> diags;
  Reporter rep{&diags};

  const int N = sys.horizon;
  if (N < 0) rep.error("horizon", -1, "negative horizon");
  const int n = sys.state_dim();
  if (n == 0) rep.error("m0", -1, "empty initial mean");
  if (!sys.m0.allFinite()) rep.error("m0", -1, "non-finite entries");

  const bool imperfect = sys.pattern == InfoPattern::kImperfect;
  if (imperfect) {
    if (sys.C.empty()) rep.error("C", -1, "missing under imperfect pattern");
    if (sys.V.empty()) rep.error("V", -1, "missing under imperfect pattern");
  } else {
    if (!sys.C.empty()) rep.error("C", -1, "present under perfect pattern");
    if (!sys.V.empty()) rep.error("V", -1, "present under perfect pattern");
  }

  if (sys.A.empty()) rep.error("A", -1, "empty sequence");
  if (sys.B.empty()) rep.error("B", -1, "empty sequence");
  if (sys.W.empty()) rep.error("W", -1, "empty sequence");
  if (rep.structural_error || N < 0) return diags;

  const int m = sys.input_dim();
  const int p = imperfect ? static_cast<int>(sys.C.front().rows()) : 0;

  if (!length_ok(sys.A.size(), N))
    rep.error("A", -1, "sequence length must be 1 or N+1");
  if (!length_ok(sys.B.size(), N))
    rep.error("B", -1, "sequence length must be 1 or N+1");
  if (!length_ok(sys.W.size(), N))
    rep.error("W", -1, "sequence length must be 1 or N+1");
  if (imperfect && !length_ok(sys.C.size(), N))
    rep.error("C", -1, "sequence length must be 1 or N+1");
  if (imperfect && !length_ok(sys.V.size(), N))
    rep.error("V", -1, "sequence length must be 1 or N+1");

  for_each_stored(sys.A, [&](const Matrix& a, int k) {
    if (a.rows() != n || a.cols() != n)
      rep.error("A", k, "expected " + std::to_string(n) + "x" +
                            std::to_string(n));
    else if (!entries_finite(a))
      rep.error("A", k, "non-finite entries");
  });
  for_each_stored(sys.B, [&](const Matrix& b, int k) {
    if (b.rows() != n || b.cols() != m)
      rep.error("B", k, "expected " + std::to_string(n) + "x" +
                            std::to_string(m));
    else if (!entries_finite(b))
      rep.error("B", k, "non-finite entries");
  });
  for_each_stored(sys.W, [&](const Matrix& w, int k) {
    if (w.rows() != n || w.cols() != n) {
      rep.error("W", k, "expected " + std::to_string(n) + "x" +
                            std::to_string(n));
      return;
    }
    std::string why = definiteness_violation(w, true);
    if (!why.empty()) rep.error("W", k, why);
  });
  if (imperfect) {
    for_each_stored(sys.C, [&](const Matrix& c, int k) {
      if (c.rows() != p || c.cols() != n)
        rep.error("C", k, "expected " + std::to_string(p) + "x" +
                              std::to_string(n));
      else if (!entries_finite(c))
        rep.error("C", k, "non-finite entries");
    });
    for_each_stored(sys.V, [&](const Matrix& v, int k) {
      if (v.rows() != p || v.cols() != p) {
        rep.error("V", k, "expected " + std::to_string(p) + "x" +
                              std::to_string(p));
        return;
      }
      std::string why = definiteness_violation(v, true);
      if (!why.empty()) rep.error("V", k, why);
    });
  }

  if (sys.M0.rows() != n || sys.M0.cols() != n) {
    rep.error("M0", -1,
              "expected " + std::to_string(n) + "x" + std::to_string(n));
  } else {
    std::string why = definiteness_violation(sys.M0, false);
    if (!why.empty()) rep.error("M0", -1, why);
  }

  if (cost.horizon != sys.horizon) {
    rep.error("horizon", -1,
              "cost horizon " + std::to_string(cost.horizon) +
                  " does not match system horizon " + std::to_string(N));
  }

  if (cost.Q.empty()) rep.error("Q", -1, "empty sequence");
  if (cost.R.empty()) rep.error("R", -1, "empty sequence");
  if (cost.ell.empty()) rep.error("ell", -1, "empty sequence");
  if (!length_ok(cost.Q.size(), N))
    rep.error("Q", -1, "sequence length must be 1 or N+1");
  if (!length_ok(cost.R.size(), N))
    rep.error("R", -1, "sequence length must be 1 or N+1");
  if (!(cost.ell.size() == 1 || length_ok(cost.ell.size(), N)))
    rep.error("ell", -1, "sequence length must be 1 or N+1");

  for_each_stored(cost.Q, [&](const Matrix& q, int k) {
    if (q.rows() != n || q.cols() != n) {
      rep.error("Q", k, "expected " + std::to_string(n) + "x" +
                            std::to_string(n));
      return;
    }
    std::string why = definiteness_violation(q, false);
    if (!why.empty()) rep.error("Q", k, why);
  });
  if (cost.Q_terminal.rows() != n || cost.Q_terminal.cols() != n) {
    rep.error("Q_terminal", -1,
              "expected " + std::to_string(n) + "x" + std::to_string(n));
  } else {
    std::string why = definiteness_violation(cost.Q_terminal, false);
    if (!why.empty()) rep.error("Q_terminal", -1, why);
  }
  for_each_stored(cost.R, [&](const Matrix& r, int k) {
    if (r.rows() != m || r.cols() != m) {
      rep.error("R", k, "expected " + std::to_string(m) + "x" +
                            std::to_string(m));
      return;
    }
    std::string why = definiteness_violation(r, true);
    if (!why.empty()) rep.error("R", k, why);
  });
  for (size_t i = 0; i < cost.ell.size(); ++i) {
    if (!(cost.ell[i] >= 0.0) || !std::isfinite(cost.ell[i])) {
      rep.error("ell", cost.ell.size() == 1 ? -1 : static_cast<int>(i),
                "must be finite and >= 0");
    }
  }
  if (!(cost.lambda >= 0.0) || !std::isfinite(cost.lambda)) {
    rep.error("lambda", -1, "must be finite and >= 0");
  }

  if (rep.structural_error) return diags;

  // Rank checks over a short window: long products of unstable A_k overflow
  // the eigenvalue spread, so the window is capped near the state dimension.
  const int steps = std::min(N + 1, std::max(n, 8));
  {
    Matrix stacked(n, static_cast<Eigen::Index>(m) * steps);
    Matrix phi = Matrix::Identity(n, n);  // state map from k+1 to `steps`
    for (int k = steps - 1; k >= 0; --k) {
      stacked.middleCols(static_cast<Eigen::Index>(m) * k, m) =
          phi * sys.B_k(k);
      phi = phi * sys.A_k(k);
    }
    int rank = block_rank(stacked);
    if (rank < n) {
      rep.warn("A,B", -1,
               "reachability matrix over " + std::to_string(steps) +
                   " steps has rank " + std::to_string(rank) + " < " +
                   std::to_string(n));
    }
  }
  if (imperfect) {
    Matrix stacked(static_cast<Eigen::Index>(p) * steps, n);
    Matrix phi = Matrix::Identity(n, n);  // state map from 0 to k
    for (int k = 0; k < steps; ++k) {
      stacked.middleRows(static_cast<Eigen::Index>(p) * k, p) =
          sys.C_k(k) * phi;
      phi = sys.A_k(k) * phi;
    }
    int rank = block_rank(stacked);
    if (rank < n) {
      rep.warn("A,C", -1,
               "observability matrix over " + std::to_string(steps) +
                   " steps has rank " + std::to_string(rank) + " < " +
                   std::to_string(n));
    }
  }

  return diags;
}

Discretized zoh_discretize(const ContinuousLinearSystem& c) {
  if (c.Ac.rows() != c.Ac.cols()) {
    throw DimensionError("zoh_discretize: Ac must be square");
  }
  if (c.Bc.rows() != c.Ac.rows()) {
    throw DimensionError("zoh_discretize: Bc row count must match Ac");
  }
  if (!c.Ac.allFinite() || !c.Bc.allFinite() || !std::isfinite(c.dt) ||
      c.dt <= 0.0) {
    throw InvalidInputError("zoh_discretize: non-finite input or dt <= 0");
  }
  const Eigen::Index n = c.Ac.rows();
  const Eigen::Index m = c.Bc.cols();
  const Eigen::Index d = n + m;

  Matrix aug = Matrix::Zero(d, d);
  aug.topLeftCorner(n, n) = c.Ac * c.dt;
  aug.topRightCorner(n, m) = c.Bc * c.dt;

  // Scaling and squaring with a plain Taylor series; the scaled norm is kept
  // <= 0.5 so the series truncation stays below 1e-12 after re-squaring.
  double norm1 = aug.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
  }
  Matrix t = aug / std::pow(2.0, squarings);

  Matrix e = Matrix::Identity(d, d);
  Matrix term = Matrix::Identity(d, d);
  for (int j = 1; j <= 40; ++j) {
    term = (term * t) / j;
    e += term;
    if (term.cwiseAbs().maxCoeff() <= 1e-14 * e.cwiseAbs().maxCoeff()) break;
  }
  for (int s = 0; s < squarings; ++s) e = e * e;

  return {e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

Vector step_process(const TimeVaryingLinearSystem& sys, int k, const Vector& x,
                    const Vector& u, const Vector& w) {
  const Matrix& a = sys.A_k(k);
  const Matrix& b = sys.B_k(k);
  if (x.size() != a.cols() || u.size() != b.cols() || w.size() != a.rows()) {
    throw DimensionError("step_process: argument dimensions do not match");
  }
  return a * x + b * u + w;
}

Vector measure(const TimeVaryingLinearSystem& sys, int k, const Vector& x,
               const Vector& v) {
  if (sys.pattern != InfoPattern::kImperfect) {
    throw PatternError("measure: system has no sensor model");
  }
  const Matrix& c = sys.C_k(k);
  if (x.size() != c.cols() || v.size() != c.rows()) {
    throw DimensionError("measure: argument dimensions do not match");
  }
  return c * x + v;
}

}  // namespace etlqg
