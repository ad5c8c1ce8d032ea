#pragma once

// Logistic regression by IRLS with step-halving, mean logistic loss,
// Mann-Whitney AUC with a percentile-bootstrap CI, and generalized
// variance-inflation factors for collinearity screening.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "riskscore/common.hpp"
#include "riskscore/tabular.hpp"

namespace riskscore::glm {

struct CoefficientVector {
  double intercept = 0.0;
  Eigen::VectorXd betas;   // aligned to DesignMatrix columns
  double loss = 0.0;       // mean logistic loss on the fitting data
  bool converged = false;
  std::string warning;
};

struct FitOptions {
  int max_iter = 100;
  double tol = 1e-8;     // gradient max-norm
  double ridge = 0.0;    // penalty on the mean-loss objective, intercept excluded
};

namespace detail {

inline Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd xa(x.rows(), x.cols() + 1);
  xa.col(0).setOnes();
  xa.rightCols(x.cols()) = x;
  return xa;
}

inline double mean_loss_eta(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    double p = clamp_prob(sigmoid(eta(i)));
    total += y(i) > 0.5 ? -std::log(p) : -std::log(1.0 - p);
  }
  return total / static_cast<double>(eta.size());
}

struct IrlsResult {
  Eigen::VectorXd theta;  // [intercept, betas]
  bool converged = false;
  bool diverged = false;
  bool solver_failed = false;
};

inline IrlsResult irls(const Eigen::MatrixXd& xa, const Eigen::VectorXd& y,
                       const FitOptions& opt) {
  const Eigen::Index n = xa.rows(), p = xa.cols();
  const double nf = static_cast<double>(n);
  IrlsResult res;
  res.theta = Eigen::VectorXd::Zero(p);

  auto penalized = [&](const Eigen::VectorXd& theta) {
    double base = mean_loss_eta(xa * theta, y);
    if (opt.ridge > 0.0) base += opt.ridge * theta.tail(p - 1).squaredNorm();
    return base;
  };

  double objective = penalized(res.theta);
  for (int iter = 0; iter < opt.max_iter; ++iter) {
    Eigen::VectorXd eta = xa * res.theta;
    Eigen::VectorXd prob(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double pi = clamp_prob(sigmoid(eta(i)));
      prob(i) = pi;
      w(i) = std::max(pi * (1.0 - pi), 1e-10);
    }
    Eigen::VectorXd grad = xa.transpose() * (prob - y) / nf;
    if (opt.ridge > 0.0) grad.tail(p - 1) += 2.0 * opt.ridge * res.theta.tail(p - 1);
    if (grad.lpNorm<Eigen::Infinity>() < opt.tol) {
      res.converged = true;
      return res;
    }

    Eigen::MatrixXd hess = xa.transpose() * w.asDiagonal() * xa / nf;
    if (opt.ridge > 0.0) {
      hess.bottomRightCorner(p - 1, p - 1).diagonal().array() += 2.0 * opt.ridge;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    if (ldlt.info() != Eigen::Success) {
      res.solver_failed = true;
      return res;
    }
    Eigen::VectorXd step = ldlt.solve(-grad);
    if (!step.allFinite()) {
      res.solver_failed = true;
      return res;
    }

    double alpha = 1.0;
    Eigen::VectorXd candidate;
    double cand_obj = 0.0;
    bool improved = false;
    for (int halving = 0; halving < 40; ++halving) {
      candidate = res.theta + alpha * step;
      cand_obj = penalized(candidate);
      if (cand_obj <= objective + 1e-12) {
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved) return res;  // stalled; gradient test above decides convergence
    res.theta = candidate;
    objective = cand_obj;
    if (res.theta.lpNorm<Eigen::Infinity>() > 1e4) {
      res.diverged = true;
      return res;
    }
  }
  // Out of iterations; a large coefficient norm is the separation signature.
  res.diverged = res.theta.lpNorm<Eigen::Infinity>() > 100.0;
  return res;
}

}  // namespace detail

// Minimizes mean logistic loss. On perfect separation (diverging
// coefficients) or a failed Newton solve, a ridge fit (penalty 1e-6 * n on the
// summed loss) is returned with converged=false and a warning set.
inline CoefficientVector fit_logistic(const tabular::DesignMatrix& design,
                                      const Eigen::VectorXd& y,
                                      const FitOptions& options = {}) {
  const Eigen::Index n = design.x.rows();
  if (n != y.size()) throw DataError("fit_logistic: design/outcome size mismatch");
  Eigen::Index positives = 0;
  for (Eigen::Index i = 0; i < n; ++i) positives += y(i) > 0.5 ? 1 : 0;
  if (positives < 2 || n - positives < 2) {
    throw DataError("fit_logistic: need at least 2 rows of each outcome class");
  }

  Eigen::MatrixXd xa = detail::with_intercept(design.x);
  detail::IrlsResult res = detail::irls(xa, y, options);

  if (options.ridge == 0.0 && !res.diverged) {
    // Complete separation: the current coefficients already classify every
    // row strictly correctly, so no finite loss minimizer exists.
    Eigen::VectorXd eta = xa * res.theta;
    bool separated = true;
    for (Eigen::Index i = 0; i < n && separated; ++i) {
      separated = (y(i) > 0.5 ? eta(i) > 0.0 : eta(i) < 0.0);
    }
    if (separated) res.diverged = true;
  }

  CoefficientVector model;
  if ((res.diverged || res.solver_failed) && options.ridge == 0.0) {
    FitOptions ridge_opt = options;
    ridge_opt.ridge = 1e-6;  // 1e-6 * n against the summed loss
    detail::IrlsResult ridge_res = detail::irls(xa, y, ridge_opt);
    model.intercept = ridge_res.theta(0);
    model.betas = ridge_res.theta.tail(xa.cols() - 1);
    model.converged = false;
    model.warning = res.solver_failed
                        ? "Newton solve failed; ridge-regularized fit returned"
                        : "perfect separation suspected; ridge-regularized fit returned";
  } else {
    model.intercept = res.theta(0);
    model.betas = res.theta.tail(xa.cols() - 1);
    model.converged = res.converged;
    if (!res.converged) model.warning = "IRLS did not reach the gradient tolerance";
  }
  Eigen::VectorXd theta(xa.cols());
  theta(0) = model.intercept;
  theta.tail(xa.cols() - 1) = model.betas;
  model.loss = detail::mean_loss_eta(xa * theta, y);
  return model;
}

inline Eigen::VectorXd linear_predictor(const CoefficientVector& model,
                                        const Eigen::MatrixXd& x) {
  if (x.cols() != model.betas.size()) {
    throw DataError("linear_predictor: coefficient/design shape mismatch");
  }
  return (x * model.betas).array() + model.intercept;
}

// Mean of -[y ln p + (1-y) ln(1-p)] with probabilities clamped to
// [1e-12, 1-1e-12].
inline double logistic_loss(const CoefficientVector& model,
                            const tabular::DesignMatrix& design,
                            const Eigen::VectorXd& y) {
  if (design.x.rows() != y.size()) throw DataError("logistic_loss: shape mismatch");
  return detail::mean_loss_eta(linear_predictor(model, design.x), y);
}

// Exact Mann-Whitney AUC: probability a random positive outranks a random
// negative, ties counted 1/2. Computed from midranks, not a trapezoid sum.
inline double auc(const std::vector<double>& scores, const std::vector<int>& outcome) {
  if (scores.size() != outcome.size()) throw DataError("auc: size mismatch");
  std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int y : outcome) n_pos += y ? 1 : 0;
  std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DataError("auc: both outcome classes required");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    double midrank = 0.5 * static_cast<double>(i + j + 1);  // 1-based average rank
    for (std::size_t k = i; k < j; ++k) {
      if (outcome[order[k]]) rank_sum_pos += midrank;
    }
    i = j;
  }
  double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

struct AucResult {
  double auc = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int n_boot = 0;
};

// Percentile bootstrap over seeded row resamples. A resample with a single
// class is redrawn (10 attempts, then error). Deterministic given the seed
// and independent of the thread count.
inline AucResult auc_ci(const std::vector<double>& scores, const std::vector<int>& outcome,
                        int n_boot, std::uint64_t seed, int threads = 1) {
  if (n_boot < 100) throw ConfigError("auc_ci: n_boot must be at least 100");
  AucResult result;
  result.auc = auc(scores, outcome);
  result.n_boot = n_boot;

  std::size_t n = scores.size();
  std::vector<double> stats(static_cast<std::size_t>(n_boot));
  parallel_for(static_cast<std::size_t>(n_boot), threads, [&](std::size_t b) {
    auto rng = engine_for(seed, "auc_boot", b);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (int attempt = 0;; ++attempt) {
      if (attempt >= 10) {
        throw NumericError("auc_ci: bootstrap resample kept drawing a single class");
      }
      int seen_pos = 0, seen_neg = 0;
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t r = pick(rng);
        s[i] = scores[r];
        y[i] = outcome[r];
        (y[i] ? seen_pos : seen_neg) = 1;
      }
      if (seen_pos && seen_neg) break;
    }
    stats[b] = auc(s, y);
  });

  std::sort(stats.begin(), stats.end());
  result.ci_low = std::min(quantile_sorted(stats, 0.025), result.auc);
  result.ci_high = std::max(quantile_sorted(stats, 0.975), result.auc);
  return result;
}

struct GvifEntry {
  std::string variable;
  double gvif = 0.0;
  double gvif_adjusted = 0.0;  // GVIF^(1/(2 df))
  int df = 0;
};

namespace detail {

inline Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& x,
                                          const std::vector<std::string>& names) {
  const Eigen::Index n = x.rows(), p = x.cols();
  Eigen::MatrixXd z(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double mean = x.col(j).mean();
    double var = (x.col(j).array() - mean).square().sum() / static_cast<double>(n - 1);
    if (var <= 0.0) {
      throw NumericError("gvif: column '" + names[static_cast<std::size_t>(j)] +
                         "' is constant");
    }
    z.col(j) = (x.col(j).array() - mean) / std::sqrt(var);
  }
  return z.transpose() * z / static_cast<double>(n - 1);
}

}  // namespace detail

// Generalized variance-inflation factor per variable over the predictor
// correlation matrix: det(R11) det(R22) / det(R), where R11 covers the
// variable's own columns. Reduces to the classical VIF for single-column
// variables.
inline std::vector<GvifEntry> gvif(const tabular::DesignMatrix& design) {
  if (design.n_variables() < 2) {
    throw DataError("gvif: need at least 2 variables");
  }
  Eigen::MatrixXd corr = detail::correlation_matrix(design.x, design.column_names);
  const Eigen::Index p = corr.rows();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() < 1e-12) {
    // Exactly collinear columns; name the worst offending variable pair.
    double best = 0.0;
    Eigen::Index bi = 0, bj = 1;
    for (Eigen::Index i = 0; i < p; ++i) {
      for (Eigen::Index j = i + 1; j < p; ++j) {
        if (std::abs(corr(i, j)) > best) {
          best = std::abs(corr(i, j));
          bi = i;
          bj = j;
        }
      }
    }
    const auto& va = design.variables[design.column_map[bi].variable];
    const auto& vb = design.variables[design.column_map[bj].variable];
    throw NumericError("gvif: predictor correlation matrix is singular; variables '" +
                       va + "' and '" + vb + "' are collinear");
  }
  double log_det_full = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) log_det_full += std::log(eig.eigenvalues()(i));

  auto log_det_sub = [&](const std::vector<int>& cols) {
    if (cols.empty()) return 0.0;
    Eigen::MatrixXd sub(cols.size(), cols.size());
    for (std::size_t a = 0; a < cols.size(); ++a) {
      for (std::size_t b = 0; b < cols.size(); ++b) {
        sub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            corr(cols[a], cols[b]);
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      acc += std::log(std::max(es.eigenvalues()(i), 1e-300));
    }
    return acc;
  };

  std::vector<GvifEntry> out;
  out.reserve(design.n_variables());
  for (std::size_t v = 0; v < design.n_variables(); ++v) {
    const std::vector<int>& own = design.columns_of[v];
    std::vector<int> rest;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (design.column_map[j].variable != v) rest.push_back(static_cast<int>(j));
    }
    GvifEntry entry;
    entry.variable = design.variables[v];
    entry.df = static_cast<int>(own.size());
    double log_gvif = log_det_sub(own) + log_det_sub(rest) - log_det_full;
    entry.gvif = std::exp(log_gvif);
    entry.gvif_adjusted = std::exp(log_gvif / (2.0 * entry.df));
    out.push_back(std::move(entry));
  }
  return out;
}

inline std::map<std::string, double> gvif_map(const std::vector<GvifEntry>& entries) {
  std::map<std::string, double> m;
  for (const auto& e : entries) m[e.variable] = e.gvif;
  return m;
}

}  // namespace riskscore::glm
