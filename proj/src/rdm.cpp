#include "rdmft/rdm.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rdmft/errors.hpp"

namespace rdmft::rdm {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kTraceTol = 1e-10;
constexpr double kPsdTol = -1e-10;

int ring_distance(int i, int j, int sites) {
    int d = std::abs(i - j);
    return std::min(d, sites - d);
}

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solve_symmetric(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    if (solver.info() != Eigen::Success)
        throw numeric_error("symmetric eigensolver failed to converge");
    return solver;
}

}  // namespace

void validate(const OneBodyRDM& gamma) {
    const auto& g = gamma.matrix;
    if (g.rows() != g.cols() || g.rows() != gamma.sites)
        throw config_error("1RDM shape does not match site count");
    double asym = (g - g.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTol)
        throw numeric_error("1RDM not symmetric (deviation " + std::to_string(asym) + ")");
    double trace_dev = std::abs(g.trace() - gamma.particles);
    if (trace_dev > kTraceTol)
        throw numeric_error("1RDM trace deviates from N by " + std::to_string(trace_dev));
    double min_eig = solve_symmetric(g).eigenvalues().minCoeff();
    if (min_eig < kPsdTol)
        throw representability_error("1RDM not positive semidefinite (min eigenvalue " +
                                     std::to_string(min_eig) + ")");
}

OneBodyRDM make_rdm(Eigen::MatrixXd matrix) {
    OneBodyRDM gamma;
    gamma.sites = static_cast<int>(matrix.rows());
    gamma.particles = matrix.trace();
    gamma.matrix = std::move(matrix);
    validate(gamma);
    return gamma;
}

OneBodyRDM build_uniform_gamma(int sites, double filling, double eta) {
    if (sites < 1) throw config_error("build_uniform_gamma: need at least one site");
    if (filling <= 0) throw config_error("build_uniform_gamma: filling must be positive");
    if (eta < 0.0 || eta > 1.0)
        throw config_error("build_uniform_gamma: eta must lie in [0, 1]");
    OneBodyRDM gamma;
    gamma.sites = sites;
    gamma.particles = filling * sites;
    gamma.matrix = Eigen::MatrixXd::Constant(sites, sites, filling * eta);
    gamma.matrix.diagonal().setConstant(filling);
    return gamma;
}

OneBodyRDM build_ansatz_gamma(int sites, double filling, double eta, double kappa) {
    if (sites < 1) throw config_error("build_ansatz_gamma: need at least one site");
    if (filling <= 0) throw config_error("build_ansatz_gamma: filling must be positive");
    if (eta < 0.0 || eta > 1.0) throw config_error("build_ansatz_gamma: eta must lie in [0, 1]");
    if (kappa < 2.0 || kappa > 8.0)
        throw config_error("build_ansatz_gamma: kappa must lie in [2, 8]");

    OneBodyRDM gamma;
    gamma.sites = sites;
    gamma.particles = filling * sites;
    gamma.matrix.resize(sites, sites);
    double tail = filling * std::pow(eta, kappa);
    for (int i = 0; i < sites; ++i) {
        for (int j = 0; j < sites; ++j) {
            int d = ring_distance(i, j, sites);
            gamma.matrix(i, j) = d == 0 ? filling : (d == 1 ? filling * eta : tail);
        }
    }
    double min_eig = solve_symmetric(gamma.matrix).eigenvalues().minCoeff();
    if (min_eig < kPsdTol)
        throw representability_error("ansatz 1RDM at eta=" + std::to_string(eta) + ", kappa=" +
                                     std::to_string(kappa) + " is not PSD (min eigenvalue " +
                                     std::to_string(min_eig) + ")");
    return gamma;
}

SpectralDecomposition spectral(const OneBodyRDM& gamma) {
    validate(gamma);
    auto solver = solve_symmetric(gamma.matrix);

    const int m = gamma.sites;
    SpectralDecomposition dec;
    dec.sites = m;
    dec.particles = gamma.particles;
    dec.eigenvalues.resize(m);
    dec.eigenvectors.resize(m, m);
    // Eigen sorts ascending; reorder to nonincreasing, keeping the solver's
    // order within degenerate blocks.
    std::vector<int> order(static_cast<std::size_t>(m));
    for (int a = 0; a < m; ++a) order[static_cast<std::size_t>(a)] = a;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return solver.eigenvalues()(a) > solver.eigenvalues()(b);
    });
    for (int a = 0; a < m; ++a) {
        dec.eigenvalues(a) = std::max(solver.eigenvalues()(order[static_cast<std::size_t>(a)]), 0.0);
        dec.eigenvectors.col(a) = solver.eigenvectors().col(order[static_cast<std::size_t>(a)]);
    }
    // Sign convention: first component of magnitude > 1e-8 made positive.
    for (int a = 0; a < m; ++a) {
        for (int i = 0; i < m; ++i) {
            double x = dec.eigenvectors(i, a);
            if (std::abs(x) > 1e-8) {
                if (x < 0) dec.eigenvectors.col(a) = -dec.eigenvectors.col(a);
                break;
            }
        }
    }
    return dec;
}

RepresentabilityReport check_representability(const Eigen::MatrixXd& gamma,
                                              double expected_particles) {
    if (gamma.rows() != gamma.cols())
        throw config_error("check_representability: matrix must be square");
    double asym = (gamma - gamma.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTol)
        throw config_error("check_representability: matrix must be symmetric");

    const int m = static_cast<int>(gamma.rows());
    RepresentabilityReport report;
    report.trace_ok = std::abs(gamma.trace() - expected_particles) <= kTraceTol;
    report.min_eigenvalue = solve_symmetric(gamma).eigenvalues().minCoeff();
    report.psd_ok = report.min_eigenvalue >= kPsdTol;

    report.cauchy_schwarz_ok = true;
    report.angles = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            if (i == j) continue;
            double bound = gamma(i, i) * gamma(j, j);
            if (gamma(i, j) * gamma(i, j) > bound * (1.0 + 1e-12) + 1e-15)
                report.cauchy_schwarz_ok = false;
            report.angles(i, j) = std::acos(gamma(i, j) / std::sqrt(bound));
        }
    }
    return report;
}

}  // namespace rdmft::rdm
