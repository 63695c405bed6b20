#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "epf/timeseries.hpp"

namespace epf::features {

enum class ScalerKind { norm, norm1 }; // [0,1] or [-1,1] min-max

std::string to_string(ScalerKind kind);
ScalerKind scaler_kind_from_string(const std::string& text);

// Min-max state fitted on calibration rows only. A constant column
// (max == min) always maps to 0.
struct ScalerState {
  ScalerKind kind = ScalerKind::norm;
  Eigen::VectorXd x_min;
  Eigen::VectorXd x_max;
  double y_min = 0.0;
  double y_max = 0.0;
};

double norm_transform(double x, ScalerKind kind, double lo, double hi);
double norm_inverse(double t, ScalerKind kind, double lo, double hi);

double transform_target(double y, const ScalerState& s);
double inverse_target(double t, const ScalerState& s);

struct CovariateConfig {
  std::string target_zone;
  std::vector<std::string> base_variables;      // exogenous series names
  std::vector<std::string> neighbor_price_zones; // day-D published prices
  std::string label;
};

// Rows are (day, hour) targets; X and y live in normalized space.
// The last 24 columns are always the target-hour one-hot block.
struct DesignMatrix {
  std::vector<std::string> columns;
  std::vector<std::string> groups; // parallel to columns
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<DayHourIndex> row_index;
  ScalerState scaler;

  int n_days() const { return int(row_index.size() / 24); }
  // day-level input shared by a day's 24 rows (hour dummies stripped)
  Eigen::VectorXd day_input(int day_pos) const;
  Eigen::VectorXd day_targets(int day_pos) const;
  int hour_block_begin() const { return int(columns.size()) - 24; }
};

int feature_width(const CovariateConfig& config);

// Lags: own price at D-1/D-2/D-3/D-7, each exogenous variable at
// D/D-1/D-7, neighbor prices at D, all expanded over 24 hours, plus
// day-of-week, holiday and hour dummies. The scaler is fitted on
// exactly the rows built here.
DesignMatrix build_design(const MarketDataset& dataset,
                          const CovariateConfig& config,
                          const DateRange& days, ScalerKind kind);

// One day's 24 rows transformed with an existing (possibly stale) scaler.
Eigen::MatrixXd build_day_rows(const MarketDataset& dataset,
                               const CovariateConfig& config, Date day,
                               const ScalerState& scaler);

// column names / group names without scaling (layout only)
void design_layout(const CovariateConfig& config,
                   std::vector<std::string>& columns,
                   std::vector<std::string>& groups);

} // namespace epf::features
