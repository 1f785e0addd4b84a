#pragma once

// Density matrices of path-encoded qudits and the metrics used to compare
// prepared, simulated and reconstructed states.

#include <complex>
#include <cstdint>
#include <span>

#include <Eigen/Dense>

namespace pathtomo {

using Complex = std::complex<double>;

/// Hermitian, unit-trace d x d matrix. Positivity is not enforced: raw
/// reconstructions are allowed to be slightly unphysical.
class DensityMatrix {
 public:
  /// Accepts a matrix that is Hermitian and unit-trace within 1e-9, then
  /// symmetrizes and renormalizes it exactly. Throws InvalidArgument otherwise.
  explicit DensityMatrix(const Eigen::MatrixXcd& m);

  static DensityMatrix pure(const Eigen::VectorXcd& amplitudes);
  static DensityMatrix diagonal(std::span<const double> weights);
  static DensityMatrix maximally_mixed(int dim);
  /// Equal-weight, equal-phase superposition over all paths.
  static DensityMatrix uniform_pure(int dim);

  int dim() const { return static_cast<int>(m_.rows()); }
  Complex operator()(int i, int j) const { return m_(i, j); }
  const Eigen::MatrixXcd& matrix() const { return m_; }

  double magnitude(int i, int j) const { return std::abs(m_(i, j)); }
  double phase(int i, int j) const { return std::arg(m_(i, j)); }

 private:
  Eigen::MatrixXcd m_;
};

/// Tr(rho^2).
double purity(const DensityMatrix& rho);

/// Root fidelity Tr sqrt(sqrt(rho) sigma sqrt(rho)). Both arguments must be
/// physical (smallest eigenvalue >= -1e-9).
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

/// Clip negative eigenvalues to zero and renormalize the trace.
DensityMatrix nearest_physical(const DensityMatrix& rho);

/// GG^dagger / Tr(GG^dagger) with G a dim x rank complex Gaussian matrix.
DensityMatrix random_state(int dim, int rank, std::uint64_t seed);

/// (raw + raw^dagger) / 2 normalized to unit trace.
DensityMatrix hermitize(const Eigen::MatrixXcd& raw);

Eigen::VectorXd eigenvalues(const DensityMatrix& rho);
double min_eigenvalue(const DensityMatrix& rho);
bool is_physical(const DensityMatrix& rho, double tolerance = 1e-9);

/// max over pairs of (|rho_ij| - sqrt(rho_ii rho_jj))_+ ; zero for PSD input.
double psd_violation(const DensityMatrix& rho);

double max_abs_difference(const DensityMatrix& a, const DensityMatrix& b);

}  // namespace pathtomo
