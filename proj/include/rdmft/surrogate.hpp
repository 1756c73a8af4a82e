#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rdmft/functional.hpp"
#include "rdmft/rdm.hpp"

namespace rdmft::surrogate {

struct NetworkConfig {
    int hidden1 = 20;
    int hidden2 = 20;
    double learning_rate = 3e-5;
    int epochs = 10000;
    double momentum = 0.9;  // first-moment decay of the update rule
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 1e-6;
    unsigned seed = 0;

    void validate() const;
};

// Published hyperparameters per system size; other sizes fall back to the
// small-system settings.
NetworkConfig default_config(int sites, int particles);

// Two-hidden-layer fully connected network with exponential-linear units.
// Input (eta, eta^2, U diag(n) flattened); output: skew coordinates of the
// frame, so the predicted V is orthonormal for any parameters.
struct SurrogateModel {
    int sites = 0;
    int particles = 0;
    int frame_dim = 0;  // K of the subspace the model was built for
    NetworkConfig config;
    Eigen::MatrixXd w1, w2, w3;
    Eigen::VectorXd b1, b2, b3;

    int input_width() const { return 2 + sites * sites; }
    int output_width() const { return frame_dim * (frame_dim - 1) / 2; }
};

SurrogateModel make_model(int sites, int particles, int frame_dim,
                          const NetworkConfig& config);

// (eta, eta^2, row-major U diag(n)) from the deterministic spectral decomposition.
Eigen::VectorXd featurize(const rdm::OneBodyRDM& gamma);

// Predicted frame V (K x M).
Eigen::MatrixXd forward(const SurrogateModel& model, const Eigen::VectorXd& features);

// F_raw evaluated at the model's frame.
double model_functional(const SurrogateModel& model, const rdm::OneBodyRDM& gamma,
                        const functional::SubspaceBasis& sub);

struct TrainResult {
    std::vector<double> loss_history;  // sum of F over the grid, per epoch
    bool diverged = false;
};

// Full-batch minimization of sum_grid F(gamma(eta), V_model) with decoupled
// weight decay. Deterministic for a fixed seed and worker-count independent.
TrainResult train(SurrogateModel& model, const functional::GammaFamily& family,
                  const std::vector<double>& eta_grid, const functional::SubspaceBasis& sub,
                  int workers = 0);

// Exact dF/deta through features, network, trivialization and the functional,
// by forward-mode propagation in the scalar eta.
double derivative(const SurrogateModel& model, const functional::GammaFamily& family,
                  double eta, const functional::SubspaceBasis& sub);

// JSON checkpoint; parameters round-trip bit exactly.
void save_checkpoint(const SurrogateModel& model, const std::string& path);
SurrogateModel load_checkpoint(const std::string& path);

// Test hooks: flat parameter vector in a fixed order and the loss gradient
// with respect to it.
Eigen::VectorXd flatten_parameters(const SurrogateModel& model);
void set_parameters(SurrogateModel& model, const Eigen::VectorXd& params);
Eigen::VectorXd loss_gradient(const SurrogateModel& model,
                              const functional::GammaFamily& family,
                              const std::vector<double>& eta_grid,
                              const functional::SubspaceBasis& sub, double* loss_out,
                              int workers = 0);

}  // namespace rdmft::surrogate
