#pragma once

#include <functional>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "hodgeconv/complex.hpp"

namespace hodge {

/// Unnormalized k-th Hodge Laplacian, assembled in double precision.
struct HodgeLaplacian {
  int k = 0;
  Eigen::SparseMatrix<double> matrix;

  Index dim() const { return matrix.rows(); }
};

/// L0 = B1 B1^T, L1 = B2 B2^T + B1^T B1. Other k throw UnsupportedDimensionError.
HodgeLaplacian hodge_laplacian(const SimplicialComplex& complex, int k);

/// Eigenpairs in ascending eigenvalue order; column j of eigenvectors pairs with eigenvalue j.
struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
};

inline constexpr Index kDefaultOracleLimit = 2000;

/**
 * Dense eigendecomposition, meant for validation only.
 *
 * Eigenvalues in (-1e-12, 0) are clamped to 0. Throws OracleLimitError when
 * L.dim() exceeds `oracle_limit`.
 */
SpectralDecomposition spectral_decompose(const HodgeLaplacian& L,
                                         Index oracle_limit = kDefaultOracleLimit);

using SpectrumFunction = std::function<double(double)>;

/// Psi diag(h(lambda)) Psi^T f, applied to every column of f.
Eigen::MatrixXd spectral_filter_reference(const SpectralDecomposition& spectrum,
                                          const SpectrumFunction& h, const Eigen::MatrixXd& f);

Eigen::MatrixXd spectral_filter_reference(const HodgeLaplacian& L, const SpectrumFunction& h,
                                          const Eigen::MatrixXd& f,
                                          Index oracle_limit = kDefaultOracleLimit);

/// Largest-eigenvalue estimate by power iteration from a fixed start vector.
double estimate_lambda_max(const HodgeLaplacian& L, int iterations = 50);

}  // namespace hodge
