#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "etlqg/errors.hpp"

namespace etlqg {

// Dense dynamic-size types shared by every module. The systems handled here
// are small (n <= 8 or so); Eigen supplies the factorizations and the wrappers
// below pin the contracts the rest of the toolkit relies on.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// True iff max|M - M^T| <= tol and the minimum eigenvalue of the symmetrized
// matrix is >= -tol. Throws DimensionError for non-square input.
bool is_symmetric_psd(const Matrix& m, double tol);

// Solves M X = B for symmetric positive definite M via Cholesky; never forms
// an explicit inverse. `role` names M in the SingularityError message.
Matrix solve_spd(const Matrix& m, const Matrix& b,
                 const std::string& role = "matrix");

// Splittable 64-bit generator (splitmix64). Stream decorrelation: the initial
// state is the splitmix64 finalizer applied to seed, xor-mixed with an odd
// multiple of the stream index, then finalized again, so distinct stream
// indices under one seed can never produce shifted copies of one sequence.
//
// Gaussian draws use Box-Muller on uniforms from (0,1]. Pair ordering: the
// cosine component is returned first, the sine component is cached inside the
// stream and returned by the next call.
class RngStream {
 public:
  static constexpr const char* algorithm_id = "splitmix64";

  explicit RngStream(std::uint64_t seed, std::uint64_t stream_index = 0);

  std::uint64_t next_u64();
  // Uniform on (0,1], 53-bit resolution.
  double next_uniform();
  double next_normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_index() const { return stream_index_; }

 private:
  std::uint64_t state_ = 0;
  std::uint64_t seed_ = 0;
  std::uint64_t stream_index_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// mean + L z with L a lower-triangular (semi)definite factor of cov and z
// standard normal. Consumes exactly dim(mean) normal draws from rng. PD
// covariances go through plain Cholesky; PSD ones through pivoted LDLT with
// negative pivots (beyond tolerance) rejected as InvalidCovarianceError.
Vector sample_gaussian(const Vector& mean, const Matrix& cov, RngStream& rng);

}  // namespace etlqg
