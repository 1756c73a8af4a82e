#pragma once

#include <Eigen/Dense>

namespace rdmft::rdm {

// One-body reduced density matrix: real symmetric M x M, trace N, PSD.
struct OneBodyRDM {
    Eigen::MatrixXd matrix;
    int sites = 0;
    double particles = 0.0;  // trace
};

// Validates symmetry (1e-12), trace (1e-10 against `particles`) and
// positive semidefiniteness (smallest eigenvalue >= -1e-10).
void validate(const OneBodyRDM& gamma);

// Wraps a raw matrix, inferring N from the trace, and validates.
OneBodyRDM make_rdm(Eigen::MatrixXd matrix);

// gamma_ii = alpha, gamma_ij = alpha * eta for i != j.
OneBodyRDM build_uniform_gamma(int sites, double filling, double eta);

// Circulant ansatz on a ring: diagonal alpha, nearest neighbors alpha*eta,
// every larger ring distance alpha*eta^kappa. Throws representability_error
// when the resulting matrix is not PSD.
OneBodyRDM build_ansatz_gamma(int sites, double filling, double eta, double kappa);

struct SpectralDecomposition {
    Eigen::MatrixXd eigenvectors;  // orthogonal U, columns ordered with eigenvalues
    Eigen::VectorXd eigenvalues;   // nonincreasing, nonnegative
    int sites = 0;
    double particles = 0.0;

    double condensate_occupation() const { return eigenvalues(0); }
};

// Deterministic eigendecomposition: eigenvalues sorted nonincreasing, each
// eigenvector's first component above 1e-8 in magnitude made positive.
SpectralDecomposition spectral(const OneBodyRDM& gamma);

struct RepresentabilityReport {
    bool trace_ok = false;
    bool psd_ok = false;
    bool cauchy_schwarz_ok = false;
    double min_eigenvalue = 0.0;
    Eigen::MatrixXd angles;  // theta_ij = arccos(gamma_ij / sqrt(gamma_ii gamma_jj))

    bool ok() const { return trace_ok && psd_ok && cauchy_schwarz_ok; }
};

// Necessary representability checks on a raw symmetric matrix; never throws,
// failures are carried in the report.
RepresentabilityReport check_representability(const Eigen::MatrixXd& gamma,
                                              double expected_particles);

}  // namespace rdmft::rdm
