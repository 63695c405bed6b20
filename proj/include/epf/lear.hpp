#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "epf/features.hpp"

namespace epf::lear {

// Objective convention: RSS + lambda * sum|beta| exactly (no 1/n or 1/2
// factor). lambda_max and the CV grid use the same convention.
struct CdOptions {
  double tol = 1e-6; // KKT residual tolerance
  int max_iter = 10000;
};

struct CdSolution {
  Eigen::VectorXd beta;
  double intercept = 0.0;
};

CdSolution coordinate_descent(const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& y, double lambda,
                              const CdOptions& opts = {});

double lasso_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& beta, double intercept,
                       double lambda);

// max_j |2 X_j' (y - mean(y))|: the smallest lambda with an all-zero fit
double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

struct CvPlan {
  int k = 7;
  std::map<Date, int> fold_assignment; // day -> fold id
  std::vector<double> lambda_grid;     // strictly descending
  std::uint64_t seed = 0;
};

// Day-level random folds (seeded shuffle, round-robin deal) and a
// 100-point log grid from lambda_max down to 1e-3 * lambda_max.
CvPlan make_cv_plan(const std::vector<Date>& days, int k, std::uint64_t seed,
                    const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

struct CvResult {
  double lambda_star = 0.0;
  std::size_t lambda_index = 0;
  std::vector<double> cv_curve; // mean held-out MSE per grid point
};

// Warm-started path per fold; ties break toward the larger lambda.
CvResult cv_select_lambda(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const std::vector<DayHourIndex>& row_index,
                          const CvPlan& plan, const CdOptions& opts = {});

struct LassoFit {
  Eigen::VectorXd beta; // normalized space
  double intercept = 0.0;
  double lambda = 0.0;
  std::vector<int> active_set;
  features::ScalerState scaler;
  features::CovariateConfig covariates;
  std::vector<std::string> columns;
  std::vector<std::string> groups;
  std::string config_label;
};

LassoFit fit_lear(const features::DesignMatrix& design, const CvPlan& plan,
                  const CdOptions& opts = {});

// 24 prices in EUR/MWh; day_rows must be built with fit.scaler.
Eigen::VectorXd predict_lear(const LassoFit& fit,
                             const Eigen::MatrixXd& day_rows);

std::string fit_to_json(const LassoFit& fit,
                        const std::vector<Date>& served_days);
LassoFit fit_from_json(const std::string& json_text,
                       std::vector<Date>* served_days = nullptr);

} // namespace epf::lear
