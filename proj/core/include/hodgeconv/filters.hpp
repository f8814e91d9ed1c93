#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hodgeconv/complex.hpp"
#include "hodgeconv/laplacian.hpp"

namespace hodge {

/// Real signal on the k-simplices of a complex: one row per simplex, one column per channel.
struct SimplexSignal {
  Eigen::MatrixXd values;

  SimplexSignal() = default;
  explicit SimplexSignal(Eigen::MatrixXd v) : values(std::move(v)) {}

  Index dim() const { return values.rows(); }
  Index channels() const { return values.cols(); }
  bool all_finite() const { return values.allFinite(); }
};

/**
 * Laguerre coefficients for every (output channel, input channel) pair.
 *
 * The spectral response from input channel i to output channel o is
 * h(lambda) = sum_p theta(o, i, p) T_p(lambda / s), where s is
 * spectral_scale(). Coefficients are stored flat, row-major in (o, i, p).
 */
class FilterBank {
 public:
  FilterBank() = default;
  FilterBank(Index order, Index in_channels, Index out_channels, double spectral_scale = 1.0);

  Index order() const { return order_; }
  Index in_channels() const { return in_channels_; }
  Index out_channels() const { return out_channels_; }
  double spectral_scale() const { return spectral_scale_; }
  void set_spectral_scale(double s);

  double& theta(Index out, Index in, Index p) { return theta_[flat(out, in, p)]; }
  double theta(Index out, Index in, Index p) const { return theta_[flat(out, in, p)]; }

  std::span<double> coefficients() { return theta_; }
  std::span<const double> coefficients() const { return theta_; }

  /// h(lambda) for one channel pair, evaluated with the scalar recurrence.
  double response(Index out, Index in, double lambda) const;

  /// out x in coefficient matrix of term p.
  Eigen::MatrixXd term_matrix(Index p) const;

 private:
  std::size_t flat(Index out, Index in, Index p) const {
    return static_cast<std::size_t>((out * in_channels_ + in) * order_ + p);
  }

  Index order_ = 1;
  Index in_channels_ = 1;
  Index out_channels_ = 1;
  double spectral_scale_ = 1.0;
  std::vector<double> theta_ = std::vector<double>(1, 0.0);
};

/// [T_0(lambda), ..., T_{order-1}(lambda)] by the three-term recurrence.
std::vector<double> laguerre_eval(Index order, double lambda);

/**
 * Vector recurrence t_0 = f, t_1 = f - A f,
 * t_{p+1} = ((2p+1) t_p - A t_p - p t_{p-1}) / (p+1) with A = L / scale.
 * Returns t_0 .. t_{order-1}; T_p(L) is never formed.
 */
std::vector<Eigen::MatrixXd> laguerre_terms(const HodgeLaplacian& L, double scale,
                                            const Eigen::MatrixXd& f, Index order);

/// Output channel o = sum_i sum_p theta(o, i, p) t_p[:, i].
Eigen::MatrixXd combine_terms(const FilterBank& bank, std::span<const Eigen::MatrixXd> terms);

SimplexSignal laguerre_apply(const HodgeLaplacian& L, const FilterBank& bank,
                             const SimplexSignal& f);

/**
 * sum_p T_p(L / scale) u_p by Clenshaw summation. Because L is symmetric this
 * is also the adjoint of the filter applied to an upstream gradient.
 */
Eigen::MatrixXd laguerre_sum(const HodgeLaplacian& L, double scale,
                             std::span<const Eigen::MatrixXd> coefficients);

struct FilterGradients {
  std::vector<double> theta;  // same layout as FilterBank::coefficients()
  Eigen::MatrixXd input;      // dim x in_channels
};

/// Reverse pass of laguerre_apply given the forward terms and the upstream gradient.
FilterGradients laguerre_backward(const HodgeLaplacian& L, const FilterBank& bank,
                                  std::span<const Eigen::MatrixXd> terms,
                                  const Eigen::MatrixXd& upstream);

/**
 * Simplices reachable by a filter with `order` terms (degree order-1) from a
 * unit pulse at `source`: every k-simplex within order-1 hops. Sorted.
 */
std::vector<Index> filter_support(const SimplicialComplex& complex, int k, Index order,
                                  Index source);

}  // namespace hodge
