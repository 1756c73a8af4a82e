#include "rdmft/exact.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "rdmft/errors.hpp"
#include "rdmft/parallel.hpp"

namespace rdmft::exact {

namespace {

constexpr double kResidualFactor = 1e-8;
constexpr double kDegeneracyFactor = 1e-10;

std::vector<std::pair<int, int>> hopping_bonds(int sites, bool periodic) {
    std::vector<std::pair<int, int>> bonds;
    if (sites == 2) {
        bonds.emplace_back(0, 1);  // single bond; a periodic pair would double-count
        return bonds;
    }
    for (int i = 0; i + 1 < sites; ++i) bonds.emplace_back(i, i + 1);
    if (periodic && sites >= 3) bonds.emplace_back(sites - 1, 0);
    return bonds;
}

void fix_sign(Eigen::VectorXd& psi) {
    for (Eigen::Index k = 0; k < psi.size(); ++k) {
        if (std::abs(psi(k)) > 1e-8) {
            if (psi(k) < 0) psi = -psi;
            return;
        }
    }
}

struct LanczosResult {
    double value = 0.0;
    Eigen::VectorXd vector;
    double gap = 0.0;
    double norm_estimate = 0.0;
};

// Lowest eigenpair by Lanczos with full reorthogonalization.
LanczosResult lanczos_lowest(const Eigen::MatrixXd& h) {
    const Eigen::Index dim = h.rows();
    const int max_steps = static_cast<int>(std::min<Eigen::Index>(dim, 400));

    std::mt19937_64 rng(12345);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd q(dim);
    for (Eigen::Index k = 0; k < dim; ++k) q(k) = gauss(rng);
    q.normalize();

    std::vector<Eigen::VectorXd> basis;
    std::vector<double> alpha, beta;
    basis.push_back(q);

    LanczosResult result;
    Eigen::VectorXd ritz;
    for (int step = 0; step < max_steps; ++step) {
        Eigen::VectorXd w = h * basis.back();
        double a = basis.back().dot(w);
        alpha.push_back(a);
        w -= a * basis.back();
        if (basis.size() > 1) w -= beta.back() * basis[basis.size() - 2];
        for (const auto& b : basis) w -= b.dot(w) * b;  // full reorthogonalization
        double bnorm = w.norm();

        // Convergence check on the current tridiagonal problem.
        if (step >= 8 || bnorm < 1e-14) {
            const int n = static_cast<int>(alpha.size());
            Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(n, n);
            for (int i = 0; i < n; ++i) {
                tri(i, i) = alpha[static_cast<std::size_t>(i)];
                if (i + 1 < n)
                    tri(i, i + 1) = tri(i + 1, i) = beta[static_cast<std::size_t>(i)];
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(tri);
            result.value = solver.eigenvalues()(0);
            result.gap = n > 1 ? solver.eigenvalues()(1) - solver.eigenvalues()(0) : 0.0;
            result.norm_estimate = solver.eigenvalues().cwiseAbs().maxCoeff();
            ritz = solver.eigenvectors().col(0);

            Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
            for (int i = 0; i < n; ++i) x += ritz(i) * basis[static_cast<std::size_t>(i)];
            x.normalize();
            double residual = (h * x - result.value * x).norm();
            if (residual <= kResidualFactor * std::max(result.norm_estimate, 1.0) ||
                bnorm < 1e-14) {
                result.vector = x;
                return result;
            }
        }
        if (bnorm < 1e-14) break;
        beta.push_back(bnorm);
        basis.push_back(w / bnorm);
    }
    throw numeric_error("lanczos did not converge");
}

}  // namespace

HamiltonianMatrix build_hamiltonian(int sites, int particles, double t, double u, bool periodic,
                                    std::uint64_t cap) {
    if (sites < 2) throw config_error("build_hamiltonian: need at least two sites");
    HamiltonianMatrix h;
    h.basis = fock::enumerate_basis(sites, particles, cap);
    h.t = t;
    h.u = u;
    h.periodic = periodic;

    const auto dim = static_cast<Eigen::Index>(h.basis.size());
    h.matrix = Eigen::MatrixXd::Zero(dim, dim);
    const auto bonds = hopping_bonds(sites, periodic);

    // Column k collects every matrix element out of state k; columns are
    // independent, so the fill parallelizes cleanly.
    par::for_each_index(dim, [&](std::int64_t k) {
        const auto& state = h.basis.state(static_cast<std::size_t>(k));
        double diag = 0.0;
        for (int i = 0; i < sites; ++i) {
            double n = state[static_cast<std::size_t>(i)];
            diag += n * (n - 1.0);
        }
        h.matrix(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = 0.5 * u * diag;

        for (const auto& [i, j] : bonds) {
            // -t b†_i b_j and its conjugate bond direction.
            for (const auto& [from, to] : {std::pair{j, i}, std::pair{i, j}}) {
                auto lowered = fock::apply_annihilation(state, from);
                if (!lowered) continue;
                fock::LadderResult raised = fock::apply_creation(lowered->state, to);
                auto row = static_cast<Eigen::Index>(h.basis.index_of(raised.state));
                h.matrix(row, static_cast<Eigen::Index>(k)) -=
                    t * lowered->coefficient * raised.coefficient;
            }
        }
    });
    return h;
}

GroundState ground_state(const HamiltonianMatrix& h) {
    const Eigen::Index dim = h.matrix.rows();
    if (dim == 0) throw config_error("ground_state: empty Hamiltonian");

    GroundState gs;
    double norm_estimate = 0.0;
    double gap = 0.0;
    if (dim <= kDenseSolverLimit) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.matrix);
        if (solver.info() != Eigen::Success)
            throw numeric_error("ground_state: dense eigensolver failed");
        gs.energy = solver.eigenvalues()(0);
        gs.wavefunction = solver.eigenvectors().col(0);
        norm_estimate = solver.eigenvalues().cwiseAbs().maxCoeff();
        gap = dim > 1 ? solver.eigenvalues()(1) - gs.energy : 0.0;
    } else {
        LanczosResult lanczos = lanczos_lowest(h.matrix);
        gs.energy = lanczos.value;
        gs.wavefunction = lanczos.vector;
        norm_estimate = lanczos.norm_estimate;
        gap = lanczos.gap;
    }

    fix_sign(gs.wavefunction);
    double residual = (h.matrix * gs.wavefunction - gs.energy * gs.wavefunction).norm();
    if (residual > kResidualFactor * std::max(norm_estimate, 1.0))
        throw numeric_error("ground_state: eigenpair residual " + std::to_string(residual) +
                            " too large");
    gs.degenerate = gap < kDegeneracyFactor * std::max(norm_estimate, 1.0);
    gs.gamma = rdm_from_wavefunction(gs.wavefunction, h.basis);
    return gs;
}

rdm::OneBodyRDM rdm_from_wavefunction(const Eigen::VectorXd& psi, const fock::FockBasis& basis) {
    if (psi.size() != static_cast<Eigen::Index>(basis.size()))
        throw config_error("rdm_from_wavefunction: wavefunction length mismatch");
    if (std::abs(psi.norm() - 1.0) > 1e-8)
        throw numeric_error("rdm_from_wavefunction: wavefunction is not normalized");

    const int sites = basis.sites;
    fock::FockBasis lowered_basis = fock::enumerate_basis(sites, basis.particles - 1);
    // Phi_j = b_j psi in the (M, N-1) basis; gamma is their Gram matrix.
    Eigen::MatrixXd phi =
        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(lowered_basis.size()), sites);
    for (std::size_t k = 0; k < basis.size(); ++k) {
        double c = psi(static_cast<Eigen::Index>(k));
        if (c == 0.0) continue;
        for (int j = 0; j < sites; ++j) {
            auto lowered = fock::apply_annihilation(basis.state(k), j);
            if (!lowered) continue;
            phi(static_cast<Eigen::Index>(lowered_basis.index_of(lowered->state)), j) +=
                c * lowered->coefficient;
        }
    }
    Eigen::MatrixXd gamma = phi.transpose() * phi;
    gamma = 0.5 * (gamma + gamma.transpose());

    rdm::OneBodyRDM result;
    result.sites = sites;
    result.particles = gamma.trace();
    result.matrix = std::move(gamma);
    rdm::validate(result);
    return result;
}

double interaction_expectation(const Eigen::VectorXd& psi, const fock::FockBasis& basis) {
    if (psi.size() != static_cast<Eigen::Index>(basis.size()))
        throw config_error("interaction_expectation: wavefunction length mismatch");
    if (std::abs(psi.norm() - 1.0) > 1e-8)
        throw numeric_error("interaction_expectation: wavefunction is not normalized");
    double total = 0.0;
    for (std::size_t k = 0; k < basis.size(); ++k) {
        double weight = psi(static_cast<Eigen::Index>(k)) * psi(static_cast<Eigen::Index>(k));
        double w_state = 0.0;
        for (double n : basis.state(k)) w_state += n * (n - 1.0);
        total += weight * w_state;
    }
    return total;
}

}  // namespace rdmft::exact
