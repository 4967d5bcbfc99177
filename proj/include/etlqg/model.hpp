#pragma once

#include <string>
#include <vector>

#include "etlqg/numerics.hpp"

namespace etlqg {

enum class InfoPattern { kPerfect, kImperfect };

// Finite-horizon linear plant
//   x_{k+1} = A_k x_k + B_k u_k + w_k,   k = 0..N,
// optionally observed through y_k = C_k x_k + v_k (imperfect pattern).
// Matrix sequences hold either one entry (time-invariant, broadcast on every
// index) or N+1 entries. C and V are present iff pattern is kImperfect.
struct TimeVaryingLinearSystem {
  int horizon = 0;  // N
  InfoPattern pattern = InfoPattern::kPerfect;
  std::vector<Matrix> A;
  std::vector<Matrix> B;
  std::vector<Matrix> W;
  std::vector<Matrix> C;
  std::vector<Matrix> V;
  Vector m0;  // mean of x_0
  Matrix M0;  // covariance of x_0

  int state_dim() const;
  int input_dim() const;
  int output_dim() const;  // 0 under the perfect pattern

  // Broadcast-aware accessors, valid for 0 <= k <= horizon. Indexing out of
  // range throws RangeError; C_k/V_k under the perfect pattern throw
  // PatternError.
  const Matrix& A_k(int k) const;
  const Matrix& B_k(int k) const;
  const Matrix& W_k(int k) const;
  const Matrix& C_k(int k) const;
  const Matrix& V_k(int k) const;
};

// Stage weights Q_k (k = 0..N), terminal weight Q_{N+1}, input weights R_k,
// per-stage communication prices theta_k = ell_k * lambda.
struct CostSpec {
  int horizon = 0;  // must agree with the system it is paired with
  std::vector<Matrix> Q;    // stage weights, length 1 or N+1
  Matrix Q_terminal;        // Q_{N+1}
  std::vector<Matrix> R;    // length 1 or N+1
  std::vector<double> ell;  // length 1 or N+1, each >= 0
  double lambda = 0.0;      // >= 0

  // Valid for 0 <= k <= horizon+1; k = horizon+1 yields Q_terminal.
  const Matrix& Q_k(int k) const;
  const Matrix& R_k(int k) const;
  double ell_k(int k) const;
  double theta_k(int k) const;  // ell_k(k) * lambda
};

struct Diagnostic {
  enum class Severity { kWarning, kError };
  Severity severity = Severity::kError;
  std::string field;
  int k = -1;  // time index, -1 when the finding is not index-specific
  std::string message;
};

// Checks every structural invariant of sys and cost plus their horizon
// agreement. Returns an empty list iff all invariants hold. Controllability
// and observability findings (finite-horizon Gramian rank) come back as
// warnings. Never throws.
std::vector<Diagnostic> validate_system(const TimeVaryingLinearSystem& sys,
                                        const CostSpec& cost);

// Continuous-time pair (Ac, Bc) sampled with zero-order hold every dt.
struct ContinuousLinearSystem {
  Matrix Ac;
  Matrix Bc;
  double dt = 0.0;
};

struct Discretized {
  Matrix A;
  Matrix B;
};

// A = exp(Ac dt), B = int_0^dt exp(Ac s) ds Bc, both read off the matrix
// exponential of the augmented block [[Ac, Bc], [0, 0]] computed by scaling
// and squaring with series truncation error <= 1e-12 in norm.
Discretized zoh_discretize(const ContinuousLinearSystem& c);

// A_k x + B_k u + w. RangeError outside 0 <= k <= horizon.
Vector step_process(const TimeVaryingLinearSystem& sys, int k, const Vector& x,
                    const Vector& u, const Vector& w);

// C_k x + v. PatternError under the perfect pattern.
Vector measure(const TimeVaryingLinearSystem& sys, int k, const Vector& x,
               const Vector& v);

}  // namespace etlqg
