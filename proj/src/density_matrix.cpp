#include "pathtomo/density_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "pathtomo/error.hpp"

namespace pathtomo {

namespace {

constexpr double kHermitianTol = 1e-9;
constexpr double kTraceTol = 1e-9;
constexpr double kPhysicalTol = 1e-9;

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solve(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorKind::NumericFailure, "Hermitian eigendecomposition did not converge");
  }
  return es;
}

Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd& m, const char* which) {
  auto es = solve(m);
  const Eigen::VectorXd& lambda = es.eigenvalues();
  if (lambda.minCoeff() < -kPhysicalTol) {
    std::ostringstream os;
    os << which << " has eigenvalue " << lambda.minCoeff();
    throw Error(ErrorKind::UnphysicalInput, os.str());
  }
  Eigen::VectorXd root = lambda.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

DensityMatrix::DensityMatrix(const Eigen::MatrixXcd& m) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw Error(ErrorKind::InvalidArgument, "density matrix must be square and non-empty");
  }
  const Eigen::Index d = m.rows();
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      if (std::abs(m(i, j) - std::conj(m(j, i))) > kHermitianTol) {
        std::ostringstream os;
        os << "not Hermitian at (" << i << "," << j << ")";
        throw Error(ErrorKind::InvalidArgument, os.str());
      }
    }
  }
  const Complex tr = m.trace();
  if (std::abs(tr - 1.0) > kTraceTol) {
    std::ostringstream os;
    os << "trace " << tr.real() << (tr.imag() >= 0 ? "+" : "") << tr.imag() << "i is not 1";
    throw Error(ErrorKind::InvalidArgument, os.str());
  }
  m_ = 0.5 * (m + m.adjoint());
  for (Eigen::Index i = 0; i < d; ++i) m_(i, i) = m_(i, i).real();
  m_ /= m_.trace().real();
}

DensityMatrix DensityMatrix::pure(const Eigen::VectorXcd& amplitudes) {
  const double n = amplitudes.squaredNorm();
  if (n < 1e-300) throw Error(ErrorKind::Unnormalizable, "zero state vector");
  Eigen::VectorXcd psi = amplitudes / std::sqrt(n);
  return DensityMatrix(psi * psi.adjoint());
}

DensityMatrix DensityMatrix::diagonal(std::span<const double> weights) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(weights.size(), weights.size());
  double total = 0;
  for (double w : weights) total += w;
  if (!(std::abs(total) > 1e-12)) throw Error(ErrorKind::Unnormalizable, "zero diagonal");
  for (std::size_t i = 0; i < weights.size(); ++i) m(i, i) = weights[i] / total;
  return DensityMatrix(m);
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
  if (dim < 1) throw Error(ErrorKind::InvalidArgument, "dimension must be positive");
  return DensityMatrix(Eigen::MatrixXcd::Identity(dim, dim) / static_cast<double>(dim));
}

DensityMatrix DensityMatrix::uniform_pure(int dim) {
  if (dim < 1) throw Error(ErrorKind::InvalidArgument, "dimension must be positive");
  return pure(Eigen::VectorXcd::Ones(dim));
}

double purity(const DensityMatrix& rho) { return rho.matrix().squaredNorm(); }

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim()) {
    throw Error(ErrorKind::InvalidArgument, "fidelity of matrices with different dimension");
  }
  const Eigen::MatrixXcd root = psd_sqrt(rho.matrix(), "first argument");
  // sigma only needs the positivity check.
  psd_sqrt(sigma.matrix(), "second argument");
  Eigen::MatrixXcd inner = root * sigma.matrix() * root;
  inner = 0.5 * (inner + inner.adjoint()).eval();
  Eigen::VectorXd mu = solve(inner).eigenvalues();
  // Rounding noise in the null space would otherwise add sqrt(eps) per direction.
  const double cutoff = 1e-14 * std::max(mu.maxCoeff(), 0.0);
  for (double& m : mu) m = m > cutoff ? m : 0.0;
  double f = mu.cwiseSqrt().sum();
  return std::clamp(f, 0.0, 1.0);
}

DensityMatrix nearest_physical(const DensityMatrix& rho) {
  auto es = solve(rho.matrix());
  Eigen::VectorXd lambda = es.eigenvalues();
  if (lambda.minCoeff() >= 0.0) return rho;
  lambda = lambda.cwiseMax(0.0);
  const double total = lambda.sum();
  if (total <= 1e-300) throw Error(ErrorKind::DegenerateInput, "no positive eigenvalue to keep");
  Eigen::MatrixXcd m = es.eigenvectors() * (lambda / total).asDiagonal() * es.eigenvectors().adjoint();
  return DensityMatrix(m);
}

DensityMatrix random_state(int dim, int rank, std::uint64_t seed) {
  if (dim < 1 || rank < 1 || rank > dim) {
    std::ostringstream os;
    os << "rank " << rank << " outside [1, " << dim << "]";
    throw Error(ErrorKind::InvalidArgument, os.str());
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXcd g(dim, rank);
  for (int c = 0; c < rank; ++c) {
    for (int r = 0; r < dim; ++r) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(r, c) = Complex(re, im);
    }
  }
  Eigen::MatrixXcd m = g * g.adjoint();
  m /= m.trace().real();
  return DensityMatrix(m);
}

DensityMatrix hermitize(const Eigen::MatrixXcd& raw) {
  if (raw.rows() != raw.cols() || raw.rows() < 1) {
    throw Error(ErrorKind::InvalidArgument, "hermitize needs a square matrix");
  }
  Eigen::MatrixXcd h = 0.5 * (raw + raw.adjoint());
  const double tr = h.trace().real();
  if (std::abs(tr) < 1e-12) throw Error(ErrorKind::Unnormalizable, "trace vanishes");
  return DensityMatrix(h / tr);
}

Eigen::VectorXd eigenvalues(const DensityMatrix& rho) { return solve(rho.matrix()).eigenvalues(); }

double min_eigenvalue(const DensityMatrix& rho) { return eigenvalues(rho).minCoeff(); }

bool is_physical(const DensityMatrix& rho, double tolerance) {
  return min_eigenvalue(rho) >= -tolerance;
}

double psd_violation(const DensityMatrix& rho) {
  double worst = 0.0;
  for (int i = 0; i < rho.dim(); ++i) {
    for (int j = i + 1; j < rho.dim(); ++j) {
      const double bound =
          std::sqrt(std::max(rho(i, i).real(), 0.0) * std::max(rho(j, j).real(), 0.0));
      worst = std::max(worst, rho.magnitude(i, j) - bound);
    }
  }
  return worst;
}

double max_abs_difference(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) throw Error(ErrorKind::InvalidArgument, "dimension mismatch");
  return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

}  // namespace pathtomo
