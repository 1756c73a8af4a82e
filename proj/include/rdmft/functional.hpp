#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "rdmft/fock.hpp"
#include "rdmft/rdm.hpp"

namespace rdmft::functional {

// Search space for the interaction minimization: an orthonormal frame of
// (N-1)-particle Fock states together with the number-operator matrices
// <m'| n_i |m> restricted to it.
struct SubspaceBasis {
    int sites = 0;      // M
    int particles = 0;  // N of the parent problem; frame states carry N-1 particles
    std::vector<fock::Occupations> frame_states;
    std::vector<Eigen::MatrixXd> number_matrices;  // M entries, K x K

    int dimension() const { return static_cast<int>(frame_states.size()); }
};

// Frame spanning the entire (M, N-1) Fock space.
SubspaceBasis full_subspace(int sites, int particles,
                            std::uint64_t cap = fock::kDefaultStateCap);

// Frame spanned by b_i |alpha, ..., alpha>, one state per site. Integer filling only.
SubspaceBasis mott_subspace(int sites, int filling);

// d_{i,m} = [U sqrt(n) V^T]_{i,m}: the coordinates of the Phi_i frame vectors.
// Satisfies d d^T = gamma for every orthonormal V.
Eigen::MatrixXd d_matrix(const rdm::SpectralDecomposition& spec, const Eigen::MatrixXd& v);

// Delta_{ab} = sum_i U_ia U_ib (V^T N_i V)_{ab}.
Eigen::MatrixXd delta_matrix(const rdm::SpectralDecomposition& spec, const Eigen::MatrixXd& v,
                             const SubspaceBasis& sub);

// F = sum_ab sqrt(n_a n_b) Delta_ab = sum_i <Phi_i| n_i |Phi_i>, in units of U/2.
double evaluate_functional(const rdm::SpectralDecomposition& spec, const Eigen::MatrixXd& v,
                           const SubspaceBasis& sub);

// dF/dV at fixed gamma; used by the minimizer and the surrogate training loop.
Eigen::MatrixXd frame_gradient(const rdm::SpectralDecomposition& spec, const Eigen::MatrixXd& v,
                               const SubspaceBasis& sub);

struct MinimizeConfig {
    int max_iters = 5000;
    double tolerance = 1e-8;
    unsigned seed = 0;
    int restarts = 3;
    double step = 1e-2;
    // When set, replaces the zero start (used to chain grid sweeps).
    std::optional<Eigen::VectorXd> warm_start;
};

struct FunctionalEvaluation {
    double value = 0.0;
    Eigen::VectorXd optimal_params;
    Eigen::MatrixXd optimal_frame;  // K x M
    Eigen::MatrixXd d;              // M x K, row i = Phi_i coordinates in the frame
    int iterations = 0;
    double gradient_norm = 0.0;
    bool converged = false;
};

FunctionalEvaluation minimize_functional(const rdm::OneBodyRDM& gamma, const SubspaceBasis& sub,
                                         const MinimizeConfig& config = {});

// Closed form for the two-boson dimer: 1 - sqrt(1 - eta^2).
double dimer_exact(double eta);

// Two-angle dimer landscape sin^2(theta_L) + cos^2(theta + theta_L).
double dimer_landscape(double theta, double theta_l);

// Dimer closed form scaled to M sites at filling alpha: (M/2) alpha^2 dimer(eta).
double rescaled_dimer(int sites, double filling, double eta);

using GammaFamily = std::function<rdm::OneBodyRDM(double)>;

// d(gamma)/deta along the family, one-sided at the domain edges; exact for
// entries affine in eta.
Eigen::MatrixXd family_matrix_derivative(const GammaFamily& family, double eta,
                                         double h = 1e-6);

enum class DerivativeMode { envelope, reoptimize };

// dF/deta along a smooth circulant family. Envelope mode differentiates the
// minimized value holding the optimal frame fixed; reoptimize mode uses
// central differences of fresh minimizations (step 1e-4).
double functional_derivative(const GammaFamily& family, double eta, const SubspaceBasis& sub,
                             DerivativeMode mode, const MinimizeConfig& config = {});

struct BECSlopeFit {
    double zeta = 0.0;  // fitted exponent of dF/deta ~ (1 - eta)^zeta
    double eta_min = 0.0;
    double eta_max = 0.0;
    double residual = 0.0;  // RMS residual of the log-log fit
    int points = 0;
};

// Least-squares slope of log(dF/deta) against log(1 - eta) near condensation.
BECSlopeFit fit_bec_slope(const GammaFamily& family, const SubspaceBasis& sub,
                          const std::vector<double>& eta_grid,
                          const MinimizeConfig& config = {});

// Re-evaluates the functional after a Givens rotation of rows i, j of the
// optimal d-matrix.
double rotated_functional(const FunctionalEvaluation& eval, const SubspaceBasis& sub, int i,
                          int j, double theta);

struct Reconstruction {
    Eigen::VectorXd psi;  // raw Schmidt reconstruction over `basis`, not normalized
    fock::FockBasis basis;
    double norm = 0.0;         // 1 when the relaxed minimizer is representable
    double gamma_error = 0.0;  // max-norm deviation of gamma(psi/|psi|) from gamma
};

Reconstruction reconstruct_wavefunction(const rdm::SpectralDecomposition& spec,
                                        const Eigen::MatrixXd& v, const SubspaceBasis& sub,
                                        std::uint64_t cap = fock::kDefaultStateCap);

// Affine map sending the first value to 0 and the last to 1.
std::vector<double> normalize_curve(const std::vector<double>& values);

}  // namespace rdmft::functional
