#include "fast0tag/ranksvm.hpp"

#include <cmath>
#include <deque>
#include <string>

#include "fast0tag/errors.hpp"

namespace f0t {

namespace {

void check_inputs(Eigen::Index dim, const Eigen::MatrixXd& pos, const Eigen::MatrixXd& neg) {
  if (pos.rows() == 0) throw DataError("rank svm: empty positive set");
  if (neg.rows() == 0) throw DataError("rank svm: empty negative set");
  if (pos.cols() != dim || neg.cols() != dim) {
    throw DataError("rank svm: dimension mismatch (w has " + std::to_string(dim) +
                    ", pos " + std::to_string(pos.cols()) + ", neg " +
                    std::to_string(neg.cols()) + ")");
  }
}

}  // namespace

double svm_objective(const Eigen::VectorXd& w, const Eigen::MatrixXd& pos,
                     const Eigen::MatrixXd& neg, double lambda) {
  check_inputs(w.size(), pos, neg);
  if (lambda <= 0.0) throw DataError("rank svm: lambda must be positive");
  double hinge = 0.0;
  for (Eigen::Index i = 0; i < pos.rows(); ++i) {
    const double sp = pos.row(i).dot(w);
    for (Eigen::Index j = 0; j < neg.rows(); ++j) {
      const double margin = 1.0 - sp + neg.row(j).dot(w);
      if (margin > 0.0) hinge += margin;
    }
  }
  return 0.5 * lambda * w.squaredNorm() + hinge;
}

long violated_constraints(const Eigen::VectorXd& w, const Eigen::MatrixXd& pos,
                          const Eigen::MatrixXd& neg) {
  check_inputs(w.size(), pos, neg);
  long count = 0;
  for (Eigen::Index i = 0; i < pos.rows(); ++i) {
    const double sp = pos.row(i).dot(w);
    for (Eigen::Index j = 0; j < neg.rows(); ++j) {
      if (sp <= neg.row(j).dot(w)) ++count;
    }
  }
  return count;
}

RankingDirection train_rank_svm(const Eigen::MatrixXd& pos, const Eigen::MatrixXd& neg,
                                double lambda, const SvmOptions& opts) {
  const Eigen::Index dim = pos.cols();
  check_inputs(dim, pos, neg);
  if (lambda <= 0.0) throw DataError("rank svm: lambda must be positive");
  if (opts.max_iterations < 0 || opts.eta0 <= 0.0 || opts.window < 1) {
    throw DataError("rank svm: invalid solver options");
  }

  Eigen::VectorXd w = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd best_w = w;
  double best_obj = static_cast<double>(pos.rows()) * static_cast<double>(neg.rows());

  std::deque<double> window;  // best-so-far objective history
  window.push_back(best_obj);

  Eigen::VectorXd sp(pos.rows());
  Eigen::VectorXd sn(neg.rows());
  Eigen::VectorXd cp(pos.rows());
  Eigen::VectorXd cn(neg.rows());

  int iterations = 0;
  bool converged = false;

  for (int t = 0; t < opts.max_iterations; ++t) {
    sp.noalias() = pos * w;
    sn.noalias() = neg * w;

    // Objective and active-pair counts in one pos-major sweep.
    double hinge = 0.0;
    cp.setZero();
    cn.setZero();
    for (Eigen::Index i = 0; i < pos.rows(); ++i) {
      for (Eigen::Index j = 0; j < neg.rows(); ++j) {
        const double margin = 1.0 - sp(i) + sn(j);
        if (margin > 0.0) {
          hinge += margin;
          cp(i) += 1.0;
          cn(j) += 1.0;
        }
      }
    }
    const double objective = 0.5 * lambda * w.squaredNorm() + hinge;
    if (!std::isfinite(objective)) {
      throw NumericError("rank svm diverged at iteration " + std::to_string(t) +
                         " (objective non-finite; reduce eta0)");
    }
    if (objective < best_obj) {
      best_obj = objective;
      best_w = w;
    }
    iterations = t + 1;

    window.push_back(best_obj);
    if (static_cast<int>(window.size()) > opts.window + 1) window.pop_front();
    if (static_cast<int>(window.size()) == opts.window + 1) {
      const double old_val = window.front();
      const double decrease = old_val - window.back();
      if (decrease <= opts.tolerance * std::max(old_val, 1e-300)) {
        converged = true;
        break;
      }
    }

    // Subgradient: lambda·w + sum over active pairs of (n_j - p_i).
    Eigen::VectorXd grad = lambda * w;
    grad.noalias() += neg.transpose() * cn;
    grad.noalias() -= pos.transpose() * cp;

    const double eta = opts.eta0 / (1.0 + lambda * opts.eta0 * static_cast<double>(t));
    w.noalias() -= eta * grad;
  }

  RankingDirection result;
  result.w = std::move(best_w);
  result.lambda = lambda;
  result.objective = svm_objective(result.w, pos, neg, lambda);
  result.iterations = iterations;
  result.converged = converged;
  return result;
}

}  // namespace f0t
