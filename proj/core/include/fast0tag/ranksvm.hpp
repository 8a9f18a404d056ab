#pragma once

#include <Eigen/Dense>

namespace f0t {

// Solver direction plus fit metadata. `w` lives in the word-vector space of
// the embedding table the pos/neg rows were taken from.
struct RankingDirection {
  Eigen::VectorXd w;
  double lambda = 0.0;
  double objective = 0.0;  // exact hinge objective at w; always >= 0
  int iterations = 0;
  bool converged = false;
};

struct SvmOptions {
  int max_iterations = 2000;
  double tolerance = 1e-6;  // relative best-objective decrease over `window` iterations
  double eta0 = 1.0;
  int window = 10;
};

// (lambda/2)·||w||^2 + sum over (p, n) pairs of max(0, 1 - w·p + w·n),
// accumulated pos-major then neg so the value is reproducible bit-for-bit.
// pos/neg hold one vector per row.
double svm_objective(const Eigen::VectorXd& w, const Eigen::MatrixXd& pos,
                     const Eigen::MatrixXd& neg, double lambda);

// Number of pairs with w·p <= w·n; ties count as violations.
long violated_constraints(const Eigen::VectorXd& w, const Eigen::MatrixXd& pos,
                          const Eigen::MatrixXd& neg);

// Deterministic full-batch subgradient descent on the hinge objective,
// starting from w = 0 with step size eta0 / (1 + lambda·eta0·t). Returns the
// best iterate seen, so the reported objective never exceeds the w = 0 value
// of |pos|·|neg|. Throws NumericError if the objective becomes non-finite.
RankingDirection train_rank_svm(const Eigen::MatrixXd& pos, const Eigen::MatrixXd& neg,
                                double lambda, const SvmOptions& opts = {});

}  // namespace f0t
