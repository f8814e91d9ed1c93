#include "hodgeconv/filters.hpp"

#include <cmath>
#include <string>

#include "hodgeconv/errors.hpp"

namespace hodge {

FilterBank::FilterBank(Index order, Index in_channels, Index out_channels, double spectral_scale)
    : order_(order), in_channels_(in_channels), out_channels_(out_channels) {
  if (order < 1) throw ShapeError("filter order must be at least 1");
  if (in_channels < 1 || out_channels < 1) throw ShapeError("channel counts must be positive");
  set_spectral_scale(spectral_scale);
  theta_.assign(static_cast<std::size_t>(order * in_channels * out_channels), 0.0);
}

void FilterBank::set_spectral_scale(double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw ShapeError("spectral scale must be positive");
  spectral_scale_ = s;
}

double FilterBank::response(Index out, Index in, double lambda) const {
  const auto t = laguerre_eval(order_, lambda / spectral_scale_);
  double h = 0.0;
  for (Index p = 0; p < order_; ++p) h += theta(out, in, p) * t[p];
  return h;
}

Eigen::MatrixXd FilterBank::term_matrix(Index p) const {
  Eigen::MatrixXd m(out_channels_, in_channels_);
  for (Index o = 0; o < out_channels_; ++o) {
    for (Index i = 0; i < in_channels_; ++i) m(o, i) = theta(o, i, p);
  }
  return m;
}

std::vector<double> laguerre_eval(Index order, double lambda) {
  if (order < 1) throw ShapeError("Laguerre order must be at least 1");
  std::vector<double> t(static_cast<std::size_t>(order));
  t[0] = 1.0;
  if (order > 1) t[1] = 1.0 - lambda;
  for (Index p = 1; p + 1 < order; ++p) {
    const double pd = static_cast<double>(p);
    t[p + 1] = ((2.0 * pd + 1.0 - lambda) * t[p] - pd * t[p - 1]) / (pd + 1.0);
  }
  return t;
}

std::vector<Eigen::MatrixXd> laguerre_terms(const HodgeLaplacian& L, double scale,
                                            const Eigen::MatrixXd& f, Index order) {
  if (order < 1) throw ShapeError("Laguerre order must be at least 1");
  if (f.rows() != L.dim()) {
    throw ShapeError("signal dimension " + std::to_string(f.rows()) +
                     " does not match Laplacian dimension " + std::to_string(L.dim()));
  }
  const double inv_scale = 1.0 / scale;
  std::vector<Eigen::MatrixXd> t;
  t.reserve(static_cast<std::size_t>(order));
  t.push_back(f);
  if (order > 1) t.push_back(f - inv_scale * (L.matrix * f));
  for (Index p = 1; p + 1 < order; ++p) {
    const double pd = static_cast<double>(p);
    Eigen::MatrixXd next = (2.0 * pd + 1.0) * t[p] - inv_scale * (L.matrix * t[p]) - pd * t[p - 1];
    next /= (pd + 1.0);
    t.push_back(std::move(next));
  }
  return t;
}

Eigen::MatrixXd combine_terms(const FilterBank& bank, std::span<const Eigen::MatrixXd> terms) {
  if (static_cast<Index>(terms.size()) != bank.order()) {
    throw ShapeError("expected " + std::to_string(bank.order()) + " Laguerre terms");
  }
  const Index dim = terms.empty() ? 0 : terms[0].rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim, bank.out_channels());
  for (Index p = 0; p < bank.order(); ++p) {
    out.noalias() += terms[p] * bank.term_matrix(p).transpose();
  }
  return out;
}

SimplexSignal laguerre_apply(const HodgeLaplacian& L, const FilterBank& bank,
                             const SimplexSignal& f) {
  if (f.channels() != bank.in_channels()) {
    throw ShapeError("signal has " + std::to_string(f.channels()) + " channels, bank expects " +
                     std::to_string(bank.in_channels()));
  }
  const auto terms = laguerre_terms(L, bank.spectral_scale(), f.values, bank.order());
  return SimplexSignal(combine_terms(bank, terms));
}

Eigen::MatrixXd laguerre_sum(const HodgeLaplacian& L, double scale,
                             std::span<const Eigen::MatrixXd> coefficients) {
  const Index order = static_cast<Index>(coefficients.size());
  if (order == 0) throw ShapeError("empty coefficient list");
  const double inv_scale = 1.0 / scale;
  auto apply_alpha = [&](Index p, const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
    const double pd = static_cast<double>(p);
    return ((2.0 * pd + 1.0) * x - inv_scale * (L.matrix * x)) / (pd + 1.0);
  };
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(coefficients[0].rows(), coefficients[0].cols());
  Eigen::MatrixXd b1 = zero;  // b_{p+1}
  Eigen::MatrixXd b2 = zero;  // b_{p+2}
  for (Index p = order - 1; p >= 1; --p) {
    const double beta_next = -static_cast<double>(p + 1) / static_cast<double>(p + 2);
    Eigen::MatrixXd bp = coefficients[p] + apply_alpha(p, b1) + beta_next * b2;
    b2 = std::move(b1);
    b1 = std::move(bp);
  }
  // S = u_0 + T_1 b_1 + beta_1 b_2 with T_1 = I - A and beta_1 = -1/2.
  return coefficients[0] + (b1 - inv_scale * (L.matrix * b1)) - 0.5 * b2;
}

FilterGradients laguerre_backward(const HodgeLaplacian& L, const FilterBank& bank,
                                  std::span<const Eigen::MatrixXd> terms,
                                  const Eigen::MatrixXd& upstream) {
  if (static_cast<Index>(terms.size()) != bank.order() || upstream.cols() != bank.out_channels() ||
      (!terms.empty() && upstream.rows() != terms[0].rows())) {
    throw ShapeError("upstream gradient does not match filter output shape");
  }
  FilterGradients grads;
  grads.theta.assign(bank.coefficients().size(), 0.0);
  std::vector<Eigen::MatrixXd> pulled;
  pulled.reserve(terms.size());
  for (Index p = 0; p < bank.order(); ++p) {
    const Eigen::MatrixXd g = terms[p].transpose() * upstream;  // in x out
    for (Index o = 0; o < bank.out_channels(); ++o) {
      for (Index i = 0; i < bank.in_channels(); ++i) {
        grads.theta[static_cast<std::size_t>((o * bank.in_channels() + i) * bank.order() + p)] =
            g(i, o);
      }
    }
    pulled.push_back(upstream * bank.term_matrix(p));  // dim x in
  }
  grads.input = laguerre_sum(L, bank.spectral_scale(), pulled);
  return grads;
}

std::vector<Index> filter_support(const SimplicialComplex& complex, int k, Index order,
                                  Index source) {
  if (order < 1) throw ShapeError("filter order must be at least 1");
  const auto dist = hop_distances(complex, k, source);
  std::vector<Index> support;
  for (Index m = 0; m < static_cast<Index>(dist.size()); ++m) {
    if (dist[m] && *dist[m] <= order - 1) support.push_back(m);
  }
  return support;
}

}  // namespace hodge
