#pragma once

#include <Eigen/Dense>

#include "rdmft/fock.hpp"
#include "rdmft/rdm.hpp"

namespace rdmft::exact {

inline constexpr std::uint64_t kDefaultDenseCap = 10'000;
inline constexpr int kDenseSolverLimit = 2000;

struct HamiltonianMatrix {
    Eigen::MatrixXd matrix;
    fock::FockBasis basis;
    double t = 0.0;
    double u = 0.0;
    bool periodic = true;
};

// Bose-Hubbard Hamiltonian over the (M, N) Fock basis. Two sites use the
// single-bond dimer form; three or more use the periodic ring unless
// periodic = false selects the open chain.
HamiltonianMatrix build_hamiltonian(int sites, int particles, double t, double u,
                                    bool periodic = true,
                                    std::uint64_t cap = kDefaultDenseCap);

struct GroundState {
    double energy = 0.0;
    Eigen::VectorXd wavefunction;
    rdm::OneBodyRDM gamma;
    bool degenerate = false;
};

// Lowest eigenpair: dense symmetric solve up to kDenseSolverLimit, Lanczos
// with full reorthogonalization above. Residual verified against 1e-8 |H|.
GroundState ground_state(const HamiltonianMatrix& h);

// gamma_ij = <psi| b†_i b_j |psi> for a unit-norm state.
rdm::OneBodyRDM rdm_from_wavefunction(const Eigen::VectorXd& psi, const fock::FockBasis& basis);

// <psi| sum_i n_i (n_i - 1) |psi>, the interaction expectation in raw units.
double interaction_expectation(const Eigen::VectorXd& psi, const fock::FockBasis& basis);

}  // namespace rdmft::exact
