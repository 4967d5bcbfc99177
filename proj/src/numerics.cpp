#include "etlqg/numerics.hpp"

#include <cmath>
#include <numbers>

namespace etlqg {

namespace {

// splitmix64 finalizer (Vigna). Bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace

bool is_symmetric_psd(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) {
    throw DimensionError("is_symmetric_psd: matrix is " +
                         std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected square");
  }
  if (m.size() == 0) return true;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol) return false;
  Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol;
}

Matrix solve_spd(const Matrix& m, const Matrix& b, const std::string& role) {
  if (m.rows() != m.cols()) {
    throw DimensionError("solve_spd: " + role + " is not square");
  }
  if (m.cols() != b.rows()) {
    throw DimensionError("solve_spd: " + role + " has " +
                         std::to_string(m.cols()) + " columns but rhs has " +
                         std::to_string(b.rows()) + " rows");
  }
  Eigen::LLT<Matrix> llt(0.5 * (m + m.transpose()));
  if (llt.info() != Eigen::Success) {
    throw SingularityError("solve_spd: " + role +
                           " is not positive definite within tolerance");
  }
  return llt.solve(b);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_index)
    : seed_(seed), stream_index_(stream_index) {
  // kGolden is odd, so (stream_index + 1) * kGolden is injective mod 2^64 and
  // two streams of the same seed always start from distinct states.
  state_ = mix64(mix64(seed) ^ ((stream_index + 1) * kGolden));
}

std::uint64_t RngStream::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double RngStream::next_uniform() {
  // Top 53 bits, mapped to (0,1] so log() below is always finite.
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double RngStream::next_normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = next_uniform();
  double u2 = next_uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double phi = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(phi);
  has_spare_ = true;
  return r * std::cos(phi);
}

Vector sample_gaussian(const Vector& mean, const Matrix& cov, RngStream& rng) {
  const Eigen::Index n = mean.size();
  if (cov.rows() != n || cov.cols() != n) {
    throw DimensionError("sample_gaussian: covariance is " +
                         std::to_string(cov.rows()) + "x" +
                         std::to_string(cov.cols()) + " for mean of dim " +
                         std::to_string(n));
  }
  double scale = std::max(1.0, cov.size() ? cov.cwiseAbs().maxCoeff() : 0.0);
  if (cov.size() && (cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw InvalidCovarianceError(
        "sample_gaussian: covariance asymmetric beyond tolerance");
  }

  // Fixed draw count regardless of the factorization path keeps the stream
  // position independent of covariance rank.
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.next_normal();

  Matrix sym = 0.5 * (cov + cov.transpose());
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() == Eigen::Success) {
    return mean + llt.matrixL() * z;
  }

  // Semidefinite fallback: pivoted LDLT, cov = P^T L D L^T P.
  Eigen::LDLT<Matrix> ldlt(sym);
  if (ldlt.info() != Eigen::Success) {
    throw InvalidCovarianceError("sample_gaussian: factorization failed");
  }
  Vector d = ldlt.vectorD();
  double dscale = std::max(1.0, d.size() ? d.cwiseAbs().maxCoeff() : 0.0);
  if (d.size() && d.minCoeff() < -1e-9 * dscale) {
    throw InvalidCovarianceError(
        "sample_gaussian: covariance is not positive semidefinite");
  }
  Vector y = d.cwiseMax(0.0).cwiseSqrt().asDiagonal() * z;
  y = Matrix(ldlt.matrixL()) * y;
  return mean + ldlt.transpositionsP().transpose() * y;
}

}  // namespace etlqg
