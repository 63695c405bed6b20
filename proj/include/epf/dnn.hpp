#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "epf/features.hpp"

namespace epf::dnn {

enum class Activation { relu, tanh, sigmoid };
enum class Init { scaled_uniform, scaled_normal };

std::string to_string(Activation a);
std::string to_string(Init i);
Activation activation_from_string(const std::string& s);
Init init_from_string(const std::string& s);

struct HyperConfig {
  int n1 = 64;
  int n2 = 32;
  Activation activation = Activation::relu;
  Init init = Init::scaled_uniform;
  double learning_rate = 1e-2;
  double dropout = 0.0; // [0, 0.5]
  features::ScalerKind transform = features::ScalerKind::norm1;
  std::map<std::string, bool> include_variable; // base variable -> on/off
  int epochs_max = 300;
  int patience = 20;
};

// Dense input -> n1 -> n2 -> 24 network over day-level features.
struct MlpParams {
  Eigen::MatrixXd W1, W2, W3;
  Eigen::VectorXd b1, b2, b3;
  HyperConfig config;
  features::ScalerState scaler;
  std::vector<std::string> input_columns; // selected design columns
  std::vector<int> input_indices;         // positions in the full design row
};

struct DropoutMask {
  Eigen::MatrixXd m1; // n_samples x n1, entries 0/1
  Eigen::MatrixXd m2; // n_samples x n2
};

enum class Mode { train, eval };

// Inverted dropout: eval output is the expectation of train outputs.
Eigen::MatrixXd forward(const MlpParams& params, const Eigen::MatrixXd& x,
                        Mode mode, const DropoutMask* mask = nullptr);

struct Gradients {
  Eigen::MatrixXd W1, W2, W3;
  Eigen::VectorXd b1, b2, b3;
};

// Batch MSE (mean over samples and the 24 outputs) and its exact
// reverse-mode gradients.
std::pair<double, Gradients> loss_and_gradient(const MlpParams& params,
                                               const Eigen::MatrixXd& x,
                                               const Eigen::MatrixXd& y,
                                               const DropoutMask* mask = nullptr);

struct TrainResult {
  MlpParams params; // best-validation parameters
  double best_validation_mse = 0.0;
  int epochs_run = 0;
};

// Full-batch Adam with early stopping on the most recent 10% of
// calibration days; deterministic in (seed, config).
TrainResult train(const features::DesignMatrix& design,
                  const HyperConfig& config, std::uint64_t seed);

Eigen::VectorXd predict_dnn(const MlpParams& params,
                            const Eigen::MatrixXd& day_rows);

struct TpeSpace {
  int n_min = 8, n_max = 256;
  double lr_min = 1e-4, lr_max = 1e-1;
  double dropout_max = 0.5;
  std::vector<Activation> activations{Activation::relu, Activation::tanh,
                                      Activation::sigmoid};
  std::vector<Init> inits{Init::scaled_uniform, Init::scaled_normal};
  std::vector<features::ScalerKind> transforms{features::ScalerKind::norm,
                                               features::ScalerKind::norm1};
  std::vector<std::string> selectable_variables;
  int epochs_max = 300;
  int patience = 20;
};

struct TpeTrial {
  HyperConfig config;
  double validation_loss = 0.0;
};

struct TpeState {
  std::vector<TpeTrial> trials;
  double gamma = 0.25;
  int n_candidates = 24;
  std::uint64_t seed = 0;
};

struct TpeResult {
  HyperConfig best;
  double best_loss = 0.0;
  std::vector<TpeTrial> trials;
};

// Norm and Norm1 variants of the same calibration window; the transform
// dimension of the search picks between them.
struct DesignPair {
  const features::DesignMatrix* norm = nullptr;
  const features::DesignMatrix* norm1 = nullptr;

  const features::DesignMatrix& pick(features::ScalerKind kind) const;
};

TpeResult tpe_optimize(const DesignPair& designs, const TpeSpace& space,
                       int n_trials, std::uint64_t seed);

std::string params_to_json(const MlpParams& params);
MlpParams params_from_json(const std::string& json_text);

} // namespace epf::dnn
