#pragma once

// Test-only oracles, kept independent of the library code paths they check:
// plain loops over std::vector, no Eigen decompositions, no shared helpers.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "fast0tag/embedding.hpp"
#include "fast0tag/rank_net.hpp"
#include "fast0tag/tagger.hpp"

namespace oracle {

// Average precision by brute-force prefix counting: for every rank k holding
// a relevant tag, count the relevant tags in positions 1..k from scratch.
inline double brute_force_ap(const std::vector<std::string>& ranking,
                             const std::set<std::string>& relevant) {
  double sum = 0.0;
  for (std::size_t k = 0; k < ranking.size(); ++k) {
    if (relevant.count(ranking[k]) == 0) continue;
    std::size_t prefix_hits = 0;
    for (std::size_t i = 0; i <= k; ++i) {
      if (relevant.count(ranking[i]) != 0) ++prefix_hits;
    }
    sum += static_cast<double>(prefix_hits) / static_cast<double>(k + 1);
  }
  return sum / static_cast<double>(relevant.size());
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double result = 1.0;
  for (int i = 0; i < k; ++i) {
    result = result * static_cast<double>(n - i) / static_cast<double>(i + 1);
  }
  return result;
}

// Exact expected AP of a uniformly random ranking of N items with R relevant:
// the rank K_r of the r-th relevant item follows a negative hypergeometric
// law, and AP = (1/R) sum_r r/K_r.
inline double exact_random_ap(int n, int r_relevant) {
  const double total = binomial(n, r_relevant);
  double expectation = 0.0;
  for (int r = 1; r <= r_relevant; ++r) {
    for (int k = r; k <= n - (r_relevant - r); ++k) {
      const double prob = binomial(k - 1, r - 1) * binomial(n - k, r_relevant - r) / total;
      expectation += static_cast<double>(r) / static_cast<double>(k) * prob;
    }
  }
  return expectation / static_cast<double>(r_relevant);
}

// Expected AP by full enumeration of the C(N, R) placements of the relevant
// items (positions are all that matter). Practical for N <= 8.
inline double enumerated_random_ap(int n, int r_relevant) {
  std::vector<int> positions(r_relevant);
  for (int i = 0; i < r_relevant; ++i) positions[i] = i;
  double sum = 0.0;
  double count = 0.0;
  for (;;) {
    double ap = 0.0;
    for (int r = 0; r < r_relevant; ++r) {
      ap += static_cast<double>(r + 1) / static_cast<double>(positions[r] + 1);
    }
    sum += ap / static_cast<double>(r_relevant);
    count += 1.0;

    int i = r_relevant - 1;
    while (i >= 0 && positions[i] == n - r_relevant + i) --i;
    if (i < 0) break;
    ++positions[i];
    for (int j = i + 1; j < r_relevant; ++j) positions[j] = positions[j - 1] + 1;
  }
  return sum / count;
}

// Least-squares (optionally ridge) solve by hand-rolled Gaussian elimination
// with partial pivoting on the normal equations; returns A with one row per
// output dimension, mirroring fit_linear's A but through an independent path.
inline std::vector<std::vector<double>> gauss_least_squares(
    const std::vector<std::vector<double>>& x_rows,
    const std::vector<std::vector<double>>& w_rows, double ridge) {
  const std::size_t m = x_rows.size();
  const std::size_t dv = x_rows[0].size();
  const std::size_t d = w_rows[0].size();

  std::vector<std::vector<double>> gram(dv, std::vector<double>(dv, 0.0));
  for (std::size_t i = 0; i < dv; ++i) {
    for (std::size_t j = 0; j < dv; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < m; ++r) s += x_rows[r][i] * x_rows[r][j];
      gram[i][j] = s + (i == j ? ridge : 0.0);
    }
  }
  std::vector<std::vector<double>> rhs(dv, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < dv; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      double s = 0.0;
      for (std::size_t r = 0; r < m; ++r) s += x_rows[r][i] * w_rows[r][c];
      rhs[i][c] = s;
    }
  }

  for (std::size_t col = 0; col < dv; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < dv; ++r) {
      if (std::abs(gram[r][col]) > std::abs(gram[pivot][col])) pivot = r;
    }
    std::swap(gram[col], gram[pivot]);
    std::swap(rhs[col], rhs[pivot]);
    const double diag = gram[col][col];
    for (std::size_t r = 0; r < dv; ++r) {
      if (r == col || gram[r][col] == 0.0) continue;
      const double factor = gram[r][col] / diag;
      for (std::size_t c = 0; c < dv; ++c) gram[r][c] -= factor * gram[col][c];
      for (std::size_t c = 0; c < d; ++c) rhs[r][c] -= factor * rhs[col][c];
    }
  }

  std::vector<std::vector<double>> a(d, std::vector<double>(dv, 0.0));
  for (std::size_t i = 0; i < dv; ++i) {
    for (std::size_t c = 0; c < d; ++c) a[c][i] = rhs[i][c] / gram[i][i];
  }
  return a;
}

// Eigendecomposition of a symmetric 2x2 matrix by one Jacobi rotation.
// Returns {eigenvalue, eigenvector} pairs sorted by descending eigenvalue.
struct Jacobi2x2 {
  double values[2];
  double vectors[2][2];  // vectors[i] is the eigenvector of values[i]
};

inline Jacobi2x2 jacobi_2x2(double a, double b, double c) {
  const double theta = 0.5 * std::atan2(2.0 * b, a - c);
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double l1 = a * cos_t * cos_t + 2.0 * b * sin_t * cos_t + c * sin_t * sin_t;
  const double l2 = a * sin_t * sin_t - 2.0 * b * sin_t * cos_t + c * cos_t * cos_t;
  Jacobi2x2 out;
  if (l1 >= l2) {
    out.values[0] = l1;
    out.values[1] = l2;
    out.vectors[0][0] = cos_t;
    out.vectors[0][1] = sin_t;
    out.vectors[1][0] = -sin_t;
    out.vectors[1][1] = cos_t;
  } else {
    out.values[0] = l2;
    out.values[1] = l1;
    out.vectors[0][0] = -sin_t;
    out.vectors[0][1] = cos_t;
    out.vectors[1][0] = cos_t;
    out.vectors[1][1] = sin_t;
  }
  return out;
}

// Central finite differences of batch_loss with respect to every parameter.
inline f0t::GradientBundle fd_gradient(const f0t::MlpParams& params,
                                       const std::vector<f0t::BatchItem>& batch,
                                       const f0t::TrainConfig& config,
                                       const f0t::MaskSource& masks, double h = 1e-5) {
  f0t::GradientBundle grad = f0t::GradientBundle::zeros_like(params);
  f0t::MlpParams probe = params;

  auto sweep = [&](Eigen::MatrixXd& target, Eigen::MatrixXd& out) {
    for (Eigen::Index i = 0; i < target.rows(); ++i) {
      for (Eigen::Index j = 0; j < target.cols(); ++j) {
        const double saved = target(i, j);
        target(i, j) = saved + h;
        const double up = f0t::batch_loss(probe, batch, config, masks);
        target(i, j) = saved - h;
        const double down = f0t::batch_loss(probe, batch, config, masks);
        target(i, j) = saved;
        out(i, j) = (up - down) / (2.0 * h);
      }
    }
  };
  auto sweep_vec = [&](Eigen::VectorXd& target, Eigen::VectorXd& out) {
    for (Eigen::Index i = 0; i < target.size(); ++i) {
      const double saved = target(i);
      target(i) = saved + h;
      const double up = f0t::batch_loss(probe, batch, config, masks);
      target(i) = saved - h;
      const double down = f0t::batch_loss(probe, batch, config, masks);
      target(i) = saved;
      out(i) = (up - down) / (2.0 * h);
    }
  };

  sweep(probe.W1, grad.W1);
  sweep_vec(probe.b1, grad.b1);
  sweep(probe.W2, grad.W2);
  sweep_vec(probe.b2, grad.b2);
  sweep(probe.W3, grad.W3);
  sweep_vec(probe.b3, grad.b3);
  return grad;
}

// Largest relative error between an analytic and a finite-difference block.
inline double max_rel_error(const Eigen::MatrixXd& analytic, const Eigen::MatrixXd& fd) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.rows(); ++i) {
    for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
      const double denom = std::max({std::abs(analytic(i, j)), std::abs(fd(i, j)), 1e-8});
      worst = std::max(worst, std::abs(analytic(i, j) - fd(i, j)) / denom);
    }
  }
  return worst;
}

// Convenience builders for small hand-made fixtures.

inline f0t::EmbeddingTable make_table(const std::vector<std::string>& names,
                                      const std::vector<std::vector<double>>& rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return f0t::EmbeddingTable(static_cast<int>(rows[0].size()), names, std::move(m));
}

inline Eigen::MatrixXd make_matrix(const std::vector<std::vector<double>>& rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

inline Eigen::VectorXd make_vector(const std::vector<double>& values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v(static_cast<Eigen::Index>(i)) = values[i];
  return v;
}

inline std::vector<std::string> ranking_tags(const f0t::RankedTagList& list) {
  std::vector<std::string> out;
  out.reserve(list.entries.size());
  for (const auto& e : list.entries) out.push_back(e.tag);
  return out;
}

}  // namespace oracle
