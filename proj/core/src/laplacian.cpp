#include "hodgeconv/laplacian.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "hodgeconv/errors.hpp"

namespace hodge {

HodgeLaplacian hodge_laplacian(const SimplicialComplex& complex, int k) {
  HodgeLaplacian L;
  L.k = k;
  const Eigen::SparseMatrix<double> b1 = boundary_1(complex).to_sparse();
  if (k == 0) {
    L.matrix = (b1 * b1.transpose()).pruned();
  } else if (k == 1) {
    const Eigen::SparseMatrix<double> b2 = boundary_2(complex).to_sparse();
    Eigen::SparseMatrix<double> down = b1.transpose() * b1;
    Eigen::SparseMatrix<double> up = b2 * b2.transpose();
    L.matrix = (down + up).pruned();
  } else {
    throw UnsupportedDimensionError("Hodge Laplacian supported for k in {0, 1}, got " +
                                    std::to_string(k));
  }
  L.matrix.makeCompressed();
  return L;
}

SpectralDecomposition spectral_decompose(const HodgeLaplacian& L, Index oracle_limit) {
  if (L.dim() > oracle_limit) {
    throw OracleLimitError("dense spectral oracle limited to dimension " +
                           std::to_string(oracle_limit) + ", got " + std::to_string(L.dim()));
  }
  SpectralDecomposition out;
  if (L.dim() == 0) {
    out.eigenvalues.resize(0);
    out.eigenvectors.resize(0, 0);
    return out;
  }
  const Eigen::MatrixXd dense(L.matrix);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense);
  if (solver.info() != Eigen::Success) {
    throw Error("eigendecomposition failed to converge");
  }
  out.eigenvalues = solver.eigenvalues();
  out.eigenvectors = solver.eigenvectors();
  for (Index j = 0; j < out.eigenvalues.size(); ++j) {
    double& lambda = out.eigenvalues[j];
    if (lambda < 0.0 && lambda > -1e-12) lambda = 0.0;
  }
  return out;
}

Eigen::MatrixXd spectral_filter_reference(const SpectralDecomposition& spectrum,
                                          const SpectrumFunction& h, const Eigen::MatrixXd& f) {
  const auto& psi = spectrum.eigenvectors;
  if (f.rows() != psi.rows()) {
    throw ShapeError("signal has " + std::to_string(f.rows()) + " rows, spectrum has dimension " +
                     std::to_string(psi.rows()));
  }
  Eigen::VectorXd response(spectrum.eigenvalues.size());
  for (Index j = 0; j < response.size(); ++j) response[j] = h(spectrum.eigenvalues[j]);
  const Eigen::MatrixXd coefficients = psi.transpose() * f;
  return psi * (response.asDiagonal() * coefficients);
}

Eigen::MatrixXd spectral_filter_reference(const HodgeLaplacian& L, const SpectrumFunction& h,
                                          const Eigen::MatrixXd& f, Index oracle_limit) {
  return spectral_filter_reference(spectral_decompose(L, oracle_limit), h, f);
}

double estimate_lambda_max(const HodgeLaplacian& L, int iterations) {
  const Index n = L.dim();
  if (n == 0) return 0.0;
  // Deterministic start vector with components in every eigendirection in practice;
  // the all-ones vector would sit in the kernel of L0.
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = 1.0 + std::sin(1.0 + 0.7 * static_cast<double>(i));
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd w = L.matrix * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    lambda = v.dot(w);
    v = w / norm;
  }
  return lambda;
}

}  // namespace hodge
