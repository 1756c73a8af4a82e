#include "rdmft/functional.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "rdmft/errors.hpp"
#include "rdmft/exact.hpp"
#include "rdmft/manifold.hpp"
#include "rdmft/optimize.hpp"

namespace rdmft::functional {

namespace {

// W = U diag(sqrt(n)): row i holds the coefficients w_i with which the
// frame columns of V combine into Phi_i.
Eigen::MatrixXd w_matrix(const rdm::SpectralDecomposition& spec) {
    return spec.eigenvectors * spec.eigenvalues.cwiseSqrt().asDiagonal();
}

void check_shapes(const rdm::SpectralDecomposition& spec, const Eigen::MatrixXd& v,
                  const SubspaceBasis& sub) {
    const int m = spec.sites;
    if (sub.sites != m) throw config_error("subspace and 1RDM site counts differ");
    if (sub.dimension() < m)
        throw config_error("subspace dimension K=" + std::to_string(sub.dimension()) +
                           " is below the site count M=" + std::to_string(m) +
                           "; the Gram constraint needs rank M");
    if (v.rows() != sub.dimension() || v.cols() != m)
        throw config_error("frame must be K x M for this subspace");
}

// F and optionally dF/dV in one pass. phi = V W^T holds the Phi_i column-wise.
double functional_value(const Eigen::MatrixXd& w, const Eigen::MatrixXd& v,
                        const SubspaceBasis& sub, Eigen::MatrixXd* grad_v) {
    const int m = sub.sites;
    Eigen::MatrixXd phi = v * w.transpose();  // K x M
    Eigen::MatrixXd dphi;
    if (grad_v) dphi.resize(phi.rows(), m);
    double f = 0.0;
    for (int i = 0; i < m; ++i) {
        Eigen::VectorXd ni_phi = sub.number_matrices[static_cast<std::size_t>(i)] * phi.col(i);
        f += phi.col(i).dot(ni_phi);
        if (grad_v) dphi.col(i) = 2.0 * ni_phi;
    }
    if (grad_v) *grad_v = dphi * w;
    return f;
}

struct RunResult {
    double value = 0.0;
    Eigen::VectorXd params;
    int iterations = 0;
    bool hit_tolerance = false;
};

RunResult run_descent(const Eigen::MatrixXd& w, const SubspaceBasis& sub,
                      const MinimizeConfig& config, Eigen::VectorXd start) {
    const int m = sub.sites;
    const int dim = sub.dimension();

    optimize::AdamParams adam;
    adam.learning_rate = config.step;
    optimize::AdamState state;

    RunResult best;
    best.value = std::numeric_limits<double>::infinity();
    best.params = start;

    Eigen::VectorXd params = std::move(start);
    for (int iter = 1; iter <= config.max_iters; ++iter) {
        manifold::ExpCache cache = manifold::exponential_cache(manifold::skew_embed(params, dim));
        Eigen::MatrixXd v = cache.exponential().leftCols(m);
        Eigen::MatrixXd grad_v;
        double f = functional_value(w, v, sub, &grad_v);
        Eigen::VectorXd grad = manifold::pullback_gradient(cache, m, grad_v);

        if (f < best.value) {
            best.value = f;
            best.params = params;
        }
        best.iterations = iter;
        if (grad.norm() < config.tolerance) {
            // Prefer the in-tolerance iterate; its value matches the tracked
            // best to within the tolerance-induced error.
            best.hit_tolerance = true;
            best.value = f;
            best.params = params;
            break;
        }
        optimize::adam_step(params, grad, state, adam);
    }
    return best;
}

std::vector<double> linear_fit_residuals(const std::vector<double>& x,
                                         const std::vector<double>& y, double* slope) {
    const auto n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sx += x[k];
        sy += y[k];
        sxx += x[k] * x[k];
        sxy += x[k] * y[k];
    }
    *slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double intercept = (sy - *slope * sx) / n;
    std::vector<double> res(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) res[k] = y[k] - (*slope * x[k] + intercept);
    return res;
}

}  // namespace

Eigen::MatrixXd family_matrix_derivative(const GammaFamily& family, double eta, double h) {
    if (eta - h >= 0.0 && eta + h <= 1.0)
        return (family(eta + h).matrix - family(eta - h).matrix) / (2.0 * h);
    if (eta + h <= 1.0) return (family(eta + h).matrix - family(eta).matrix) / h;
    return (family(eta).matrix - family(eta - h).matrix) / h;
}

SubspaceBasis full_subspace(int sites, int particles, std::uint64_t cap) {
    if (particles < 1) throw config_error("full_subspace: need at least one particle");
    fock::FockBasis ambient = fock::enumerate_basis(sites, particles - 1, cap);
    SubspaceBasis sub;
    sub.sites = sites;
    sub.particles = particles;
    sub.frame_states = ambient.states;
    const auto k = static_cast<Eigen::Index>(sub.frame_states.size());
    sub.number_matrices.reserve(static_cast<std::size_t>(sites));
    for (int i = 0; i < sites; ++i) {
        Eigen::MatrixXd ni = Eigen::MatrixXd::Zero(k, k);
        ni.diagonal() = fock::number_diagonal(ambient, i);
        sub.number_matrices.push_back(std::move(ni));
    }
    return sub;
}

SubspaceBasis mott_subspace(int sites, int filling) {
    if (filling < 1) throw config_error("mott_subspace: filling must be a positive integer");
    SubspaceBasis sub;
    sub.sites = sites;
    sub.particles = filling * sites;
    sub.frame_states.reserve(static_cast<std::size_t>(sites));
    for (int j = 0; j < sites; ++j) {
        fock::Occupations state(static_cast<std::size_t>(sites),
                                static_cast<std::uint8_t>(filling));
        state[static_cast<std::size_t>(j)] = static_cast<std::uint8_t>(filling - 1);
        sub.frame_states.push_back(std::move(state));
    }
    for (int i = 0; i < sites; ++i) {
        Eigen::MatrixXd ni = Eigen::MatrixXd::Zero(sites, sites);
        for (int j = 0; j < sites; ++j)
            ni(j, j) = static_cast<double>(filling) - (i == j ? 1.0 : 0.0);
        sub.number_matrices.push_back(std::move(ni));
    }
    return sub;
}

Eigen::MatrixXd d_matrix(const rdm::SpectralDecomposition& spec, const Eigen::MatrixXd& v) {
    return w_matrix(spec) * v.transpose();
}

Eigen::MatrixXd delta_matrix(const rdm::SpectralDecomposition& spec, const Eigen::MatrixXd& v,
                             const SubspaceBasis& sub) {
    check_shapes(spec, v, sub);
    const int m = spec.sites;
    Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(m, m);
    const auto& u = spec.eigenvectors;
    for (int i = 0; i < m; ++i) {
        Eigen::MatrixXd t = v.transpose() * sub.number_matrices[static_cast<std::size_t>(i)] * v;
        delta.noalias() += (u.row(i).transpose() * u.row(i)).cwiseProduct(t);
    }
    return 0.5 * (delta + delta.transpose());
}

double evaluate_functional(const rdm::SpectralDecomposition& spec, const Eigen::MatrixXd& v,
                           const SubspaceBasis& sub) {
    check_shapes(spec, v, sub);
    return functional_value(w_matrix(spec), v, sub, nullptr);
}

Eigen::MatrixXd frame_gradient(const rdm::SpectralDecomposition& spec, const Eigen::MatrixXd& v,
                               const SubspaceBasis& sub) {
    check_shapes(spec, v, sub);
    Eigen::MatrixXd grad;
    functional_value(w_matrix(spec), v, sub, &grad);
    return grad;
}

FunctionalEvaluation minimize_functional(const rdm::OneBodyRDM& gamma, const SubspaceBasis& sub,
                                         const MinimizeConfig& config) {
    rdm::SpectralDecomposition spec = rdm::spectral(gamma);
    const int m = spec.sites;
    const int dim = sub.dimension();
    {
        Eigen::MatrixXd probe = Eigen::MatrixXd::Identity(dim, m);
        check_shapes(spec, probe, sub);
    }
    Eigen::MatrixXd w = w_matrix(spec);
    const int n_coords = manifold::skew_dimension(dim);

    std::vector<Eigen::VectorXd> starts;
    if (config.warm_start) {
        if (config.warm_start->size() != n_coords)
            throw config_error("minimize_functional: warm start has wrong length");
        starts.push_back(*config.warm_start);
    } else {
        starts.push_back(Eigen::VectorXd::Zero(n_coords));
    }
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> uniform(-0.1, 0.1);
    for (int r = 0; r < config.restarts; ++r) {
        Eigen::VectorXd start(n_coords);
        for (int k = 0; k < n_coords; ++k) start(k) = uniform(rng);
        starts.push_back(std::move(start));
    }

    RunResult best;
    best.value = std::numeric_limits<double>::infinity();
    for (auto& start : starts) {
        RunResult run = run_descent(w, sub, config, std::move(start));
        if (run.value < best.value) best = std::move(run);
    }

    FunctionalEvaluation eval;
    eval.optimal_params = best.params;
    eval.iterations = best.iterations;
    eval.optimal_frame =
        manifold::matrix_exponential(manifold::skew_embed(best.params, dim)).leftCols(m);
    Eigen::MatrixXd grad_v;
    eval.value = functional_value(w, eval.optimal_frame, sub, &grad_v);
    eval.gradient_norm =
        manifold::pullback_gradient(best.params, dim, m, grad_v).norm();
    eval.converged = eval.gradient_norm < config.tolerance;
    eval.d = w * eval.optimal_frame.transpose();
    return eval;
}

double dimer_exact(double eta) {
    if (eta < 0.0 || eta > 1.0) throw config_error("dimer_exact: eta must lie in [0, 1]");
    return 1.0 - std::sqrt(1.0 - eta * eta);
}

double dimer_landscape(double theta, double theta_l) {
    double s = std::sin(theta_l);
    double c = std::cos(theta + theta_l);
    return s * s + c * c;
}

double rescaled_dimer(int sites, double filling, double eta) {
    if (sites < 2) throw config_error("rescaled_dimer: need at least two sites");
    return 0.5 * sites * filling * filling * dimer_exact(eta);
}

double functional_derivative(const GammaFamily& family, double eta, const SubspaceBasis& sub,
                             DerivativeMode mode, const MinimizeConfig& config) {
    if (mode == DerivativeMode::reoptimize) {
        const double h = 1e-4;
        double lo = std::max(0.0, eta - h);
        double hi = std::min(1.0, eta + h);
        FunctionalEvaluation up = minimize_functional(family(hi), sub, config);
        FunctionalEvaluation down = minimize_functional(family(lo), sub, config);
        if (!up.converged || !down.converged)
            throw numeric_error("functional_derivative: minimizer did not converge");
        return (up.value - down.value) / (hi - lo);
    }

    rdm::OneBodyRDM gamma = family(eta);
    FunctionalEvaluation eval = minimize_functional(gamma, sub, config);
    if (!eval.converged)
        throw numeric_error("functional_derivative: minimizer did not converge at eta=" +
                            std::to_string(eta));
    rdm::SpectralDecomposition spec = rdm::spectral(gamma);
    Eigen::MatrixXd gamma_dot = family_matrix_derivative(family, eta, 1e-6);

    // First-order perturbation of the occupation spectrum; the circulant
    // eigenvectors do not move along the family.
    const int m = spec.sites;
    Eigen::VectorXd n_dot(m);
    for (int a = 0; a < m; ++a)
        n_dot(a) = spec.eigenvectors.col(a).dot(gamma_dot * spec.eigenvectors.col(a));

    Eigen::VectorXd sqrt_n_dot(m);
    for (int a = 0; a < m; ++a) {
        double n = spec.eigenvalues(a);
        if (n < 1e-14) {
            if (std::abs(n_dot(a)) > 1e-10)
                throw numeric_error("functional_derivative: gradient diverges at a vanishing "
                                    "occupation");
            sqrt_n_dot(a) = 0.0;
        } else {
            sqrt_n_dot(a) = n_dot(a) / (2.0 * std::sqrt(n));
        }
    }

    Eigen::MatrixXd w_dot = spec.eigenvectors * sqrt_n_dot.asDiagonal();
    Eigen::MatrixXd phi = eval.optimal_frame * w_matrix(spec).transpose();
    Eigen::MatrixXd phi_dot = eval.optimal_frame * w_dot.transpose();
    double df = 0.0;
    for (int i = 0; i < m; ++i)
        df += 2.0 * phi_dot.col(i).dot(sub.number_matrices[static_cast<std::size_t>(i)] *
                                       phi.col(i));
    return df;
}

BECSlopeFit fit_bec_slope(const GammaFamily& family, const SubspaceBasis& sub,
                          const std::vector<double>& eta_grid, const MinimizeConfig& config) {
    if (eta_grid.size() < 5) throw config_error("fit_bec_slope: need at least 5 grid points");
    for (double eta : eta_grid)
        if (eta < 0.9 || eta > 0.9999)
            throw config_error("fit_bec_slope: grid must lie within [0.9, 0.9999]");

    std::vector<double> log_gap, log_force;
    for (double eta : eta_grid) {
        double df = functional_derivative(family, eta, sub, DerivativeMode::envelope, config);
        if (!std::isfinite(df) || df <= 1e-12)
            throw numeric_error("fit_bec_slope: derivative does not diverge along this family");
        log_gap.push_back(std::log(1.0 - eta));
        log_force.push_back(std::log(df));
    }

    BECSlopeFit fit;
    std::vector<double> residuals = linear_fit_residuals(log_gap, log_force, &fit.zeta);
    double ss = 0.0;
    for (double r : residuals) ss += r * r;
    fit.residual = std::sqrt(ss / static_cast<double>(residuals.size()));
    fit.eta_min = *std::min_element(eta_grid.begin(), eta_grid.end());
    fit.eta_max = *std::max_element(eta_grid.begin(), eta_grid.end());
    fit.points = static_cast<int>(eta_grid.size());
    return fit;
}

double rotated_functional(const FunctionalEvaluation& eval, const SubspaceBasis& sub, int i,
                          int j, double theta) {
    const int m = sub.sites;
    if (i < 0 || j < 0 || i >= m || j >= m || i == j)
        throw config_error("rotated_functional: invalid site pair");
    Eigen::MatrixXd d = eval.d;
    Eigen::RowVectorXd row_i = std::cos(theta) * d.row(i) + std::sin(theta) * d.row(j);
    Eigen::RowVectorXd row_j = -std::sin(theta) * d.row(i) + std::cos(theta) * d.row(j);
    d.row(i) = row_i;
    d.row(j) = row_j;
    double f = 0.0;
    for (int k = 0; k < m; ++k)
        f += d.row(k).dot(
            (sub.number_matrices[static_cast<std::size_t>(k)] * d.row(k).transpose()));
    return f;
}

Reconstruction reconstruct_wavefunction(const rdm::SpectralDecomposition& spec,
                                        const Eigen::MatrixXd& v, const SubspaceBasis& sub,
                                        std::uint64_t cap) {
    check_shapes(spec, v, sub);
    const int m = spec.sites;
    double n_real = spec.eigenvalues.sum();
    int n = static_cast<int>(std::lround(n_real));
    if (std::abs(n_real - n) > 1e-8)
        throw config_error("reconstruct_wavefunction: non-integer particle number");

    Reconstruction rec;
    rec.basis = fock::enumerate_basis(m, n, cap);
    rec.psi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rec.basis.size()));

    // psi = (1/N) sum_a sqrt(n_a) btilde†_a |v_a>, btilde†_a = sum_i U_ia b†_i.
    for (int a = 0; a < m; ++a) {
        double scale = std::sqrt(spec.eigenvalues(a)) / n;
        if (scale == 0.0) continue;
        for (int ms = 0; ms < sub.dimension(); ++ms) {
            double amplitude = v(ms, a);
            if (amplitude == 0.0) continue;
            const auto& state = sub.frame_states[static_cast<std::size_t>(ms)];
            for (int i = 0; i < m; ++i) {
                fock::LadderResult raised = fock::apply_creation(state, i);
                rec.psi(static_cast<Eigen::Index>(rec.basis.index_of(raised.state))) +=
                    scale * spec.eigenvectors(i, a) * amplitude * raised.coefficient;
            }
        }
    }

    rec.norm = rec.psi.norm();
    if (rec.norm < 1e-14) throw numeric_error("reconstruct_wavefunction: vanishing state");
    Eigen::VectorXd normalized = rec.psi / rec.norm;
    rdm::OneBodyRDM gamma_rec = exact::rdm_from_wavefunction(normalized, rec.basis);
    Eigen::MatrixXd gamma = spec.eigenvectors * spec.eigenvalues.asDiagonal() *
                            spec.eigenvectors.transpose();
    rec.gamma_error = (gamma_rec.matrix - gamma).cwiseAbs().maxCoeff();
    return rec;
}

std::vector<double> normalize_curve(const std::vector<double>& values) {
    if (values.size() < 2) throw config_error("normalize_curve: need at least two points");
    double lo = values.front();
    double hi = values.back();
    double span = hi - lo;
    double scale = std::max(std::abs(lo), std::abs(hi));
    if (std::abs(span) <= 1e-13 * std::max(1.0, scale))
        throw numeric_error("normalize_curve: degenerate endpoints");
    std::vector<double> out(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) out[k] = (values[k] - lo) / span;
    return out;
}

}  // namespace rdmft::functional
