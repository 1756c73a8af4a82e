#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "rdmft/errors.hpp"
#include "rdmft/exact.hpp"
#include "rdmft/functional.hpp"
#include "rdmft/manifold.hpp"
#include "rdmft/rdm.hpp"

using namespace rdmft;

namespace {

functional::GammaFamily uniform_family(int sites, double filling) {
    return [sites, filling](double eta) {
        return rdm::build_uniform_gamma(sites, filling, eta);
    };
}

}  // namespace

TEST_CASE("full_subspace spans the lowered Fock space") {
    functional::SubspaceBasis sub = functional::full_subspace(2, 2);
    REQUIRE(sub.dimension() == 2);
    CHECK(sub.frame_states[0] == fock::Occupations{1, 0});
    CHECK(sub.frame_states[1] == fock::Occupations{0, 1});
    CHECK(sub.number_matrices[0](0, 0) == doctest::Approx(1.0));
    CHECK(sub.number_matrices[0](1, 1) == doctest::Approx(0.0));

    CHECK(functional::full_subspace(4, 4).dimension() == 20);
    CHECK_THROWS_AS(functional::full_subspace(6, 12, 1000), dimension_error);
}

TEST_CASE("mott_subspace holds one depleted Fock state per site") {
    functional::SubspaceBasis sub = functional::mott_subspace(4, 1);
    REQUIRE(sub.dimension() == 4);
    for (int j = 0; j < 4; ++j) {
        int zeros = 0;
        for (auto n : sub.frame_states[static_cast<std::size_t>(j)]) zeros += n == 0;
        CHECK(zeros == 1);
        CHECK(sub.frame_states[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)] == 0);
    }
    Eigen::VectorXd site0 = sub.number_matrices[0].diagonal();
    CHECK(site0(0) == doctest::Approx(0.0));
    for (int j = 1; j < 4; ++j) CHECK(site0(j) == doctest::Approx(1.0));

    functional::SubspaceBasis two = functional::mott_subspace(3, 2);
    for (const auto& state : two.frame_states) {
        int total = 0;
        for (auto n : state) total += n;
        CHECK(total == 5);  // permutations of (1, 2, 2)
    }
    CHECK_THROWS_AS(functional::mott_subspace(3, 0), config_error);
}

TEST_CASE("number matrices trace to (N-1) K on Fock frames") {
    for (const auto& sub : {functional::full_subspace(3, 3), functional::mott_subspace(4, 2)}) {
        double total = 0.0;
        for (const auto& ni : sub.number_matrices) {
            CHECK((ni - ni.transpose()).cwiseAbs().maxCoeff() == 0.0);
            total += ni.trace();
        }
        CHECK(total == doctest::Approx((sub.particles - 1.0) * sub.dimension()));
    }
}

TEST_CASE("delta_matrix reproduces the dimer hand computation against brute force") {
    functional::SubspaceBasis sub = functional::full_subspace(2, 2);

    // eta -> 0 limit of the uniform dimer: degenerate spectrum with the
    // continuous-family eigenvectors. At V = identity this is the symmetric
    // frame with F = 1.
    rdm::SpectralDecomposition spec;
    spec.sites = 2;
    spec.particles = 2.0;
    spec.eigenvalues = Eigen::Vector2d(1.0, 1.0);
    spec.eigenvectors.resize(2, 2);
    double s = 1.0 / std::sqrt(2.0);
    spec.eigenvectors << s, s, s, -s;

    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(2, 2);
    Eigen::MatrixXd delta = functional::delta_matrix(spec, v, sub);
    double f_from_delta = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            f_from_delta += std::sqrt(spec.eigenvalues(a) * spec.eigenvalues(b)) * delta(a, b);
    CHECK(f_from_delta == doctest::Approx(1.0));
    CHECK(f_from_delta ==
          doctest::Approx(oracles::brute_force_functional(spec, v, sub)).epsilon(1e-12));
    CHECK(f_from_delta == doctest::Approx(functional::evaluate_functional(spec, v, sub)));
}

TEST_CASE("delta and d-matrix routes agree on random frames") {
    for (auto [sites, particles] : {std::pair{2, 2}, std::pair{3, 3}, std::pair{4, 4}}) {
        functional::SubspaceBasis sub = functional::full_subspace(sites, particles);
        rdm::OneBodyRDM gamma = oracles::random_psd_rdm(sites, particles, 77u + sites);
        rdm::SpectralDecomposition spec = rdm::spectral(gamma);
        Eigen::MatrixXd v = manifold::trivialize(
            oracles::random_coords(sub.dimension(), 5u + sites), sub.dimension(), sites);

        double f_phi = functional::evaluate_functional(spec, v, sub);
        Eigen::MatrixXd delta = functional::delta_matrix(spec, v, sub);
        double f_delta = 0.0;
        for (int a = 0; a < sites; ++a)
            for (int b = 0; b < sites; ++b)
                f_delta +=
                    std::sqrt(spec.eigenvalues(a) * spec.eigenvalues(b)) * delta(a, b);
        CHECK(f_phi == doctest::Approx(f_delta).epsilon(1e-10));
        CHECK(f_phi ==
              doctest::Approx(oracles::brute_force_functional(spec, v, sub)).epsilon(1e-10));
    }
}

TEST_CASE("the Gram constraint d d^T = gamma holds for every frame") {
    int checked = 0;
    for (unsigned seed = 0; seed < 100; ++seed) {
        int sites = 2 + static_cast<int>(seed % 4);
        rdm::OneBodyRDM gamma = oracles::random_psd_rdm(sites, sites, 1000u + seed);
        rdm::SpectralDecomposition spec = rdm::spectral(gamma);
        int dim = sites + static_cast<int>(seed % 3);
        Eigen::MatrixXd v =
            manifold::trivialize(oracles::random_coords(dim, 2000u + seed), dim, sites);
        CHECK((oracles::gram_of_frame(spec, v) - gamma.matrix).cwiseAbs().maxCoeff() <= 1e-10);
        ++checked;
    }
    CHECK(checked == 100);
}

TEST_CASE("evaluate_functional hits the pinned values") {
    // Full condensation: F = N(N-1)/2 for the dimer, independent of V.
    functional::SubspaceBasis dimer = functional::full_subspace(2, 2);
    rdm::SpectralDecomposition cond = rdm::spectral(rdm::build_uniform_gamma(2, 1.0, 1.0));
    for (unsigned seed : {1u, 2u}) {
        Eigen::MatrixXd v = manifold::trivialize(oracles::random_coords(2, seed), 2, 2);
        CHECK(functional::evaluate_functional(cond, v, dimer) == doctest::Approx(1.0));
    }

    // Mott point at alpha = 2: F = M alpha (alpha - 1) = 8 at the identity frame.
    functional::SubspaceBasis mott = functional::mott_subspace(4, 2);
    rdm::SpectralDecomposition mott_spec = rdm::spectral(rdm::build_uniform_gamma(4, 2.0, 0.0));
    CHECK(functional::evaluate_functional(mott_spec, Eigen::MatrixXd::Identity(4, 4), mott) ==
          doctest::Approx(8.0));
}

TEST_CASE("evaluate_functional refuses frames thinner than the site count") {
    functional::SubspaceBasis sub = functional::full_subspace(3, 3);
    sub.frame_states.resize(2);  // K = 2 < M = 3
    for (auto& ni : sub.number_matrices) ni = ni.topLeftCorner(2, 2).eval();
    rdm::SpectralDecomposition spec = rdm::spectral(rdm::build_uniform_gamma(3, 1.0, 0.3));
    CHECK_THROWS_AS(functional::evaluate_functional(spec, Eigen::MatrixXd::Identity(2, 2), sub),
                    config_error);
}

TEST_CASE("minimize_functional recovers the exact dimer curve") {
    functional::SubspaceBasis dimer = functional::full_subspace(2, 2);
    for (int k = 1; k < 10; ++k) {
        double eta = 0.1 * k;
        functional::FunctionalEvaluation eval =
            functional::minimize_functional(rdm::build_uniform_gamma(2, 1.0, eta), dimer, {});
        CHECK(std::abs(eval.value - functional::dimer_exact(eta)) <= 1e-8);
        CHECK(eval.converged);
        CHECK(eval.gradient_norm <= 1e-8);
    }
}

TEST_CASE("minimize_functional reproduces the reference landscape point") {
    double theta = 2.0 * std::numbers::pi / 7.0;
    functional::SubspaceBasis dimer = functional::full_subspace(2, 2);
    functional::FunctionalEvaluation eval = functional::minimize_functional(
        rdm::build_uniform_gamma(2, 1.0, std::cos(theta)), dimer, {});
    CHECK(eval.value == doctest::Approx(0.2181685175319702).epsilon(1e-7));
}

TEST_CASE("minimize_functional finds the Mott floor on the full subspace") {
    functional::SubspaceBasis sub = functional::full_subspace(4, 4);
    functional::FunctionalEvaluation eval =
        functional::minimize_functional(rdm::build_uniform_gamma(4, 1.0, 0.0), sub, {});
    CHECK(eval.value <= 1e-8);
    CHECK(eval.value >= -1e-12);
}

TEST_CASE("warm starts replace the zero start") {
    functional::SubspaceBasis dimer = functional::full_subspace(2, 2);
    rdm::OneBodyRDM gamma = rdm::build_uniform_gamma(2, 1.0, 0.55);
    functional::FunctionalEvaluation cold = functional::minimize_functional(gamma, dimer, {});

    functional::MinimizeConfig warm;
    warm.warm_start = cold.optimal_params;
    warm.restarts = 0;
    functional::FunctionalEvaluation again =
        functional::minimize_functional(rdm::build_uniform_gamma(2, 1.0, 0.56), dimer, warm);
    CHECK(again.converged);
    CHECK(again.iterations <= cold.iterations);
    CHECK(std::abs(again.value - functional::dimer_exact(0.56)) <= 1e-8);
}

TEST_CASE("dimer closed forms") {
    CHECK(functional::dimer_exact(0.0) == doctest::Approx(0.0));
    CHECK(functional::dimer_exact(1.0) == doctest::Approx(1.0));
    CHECK(functional::dimer_exact(0.6) == doctest::Approx(0.2));
    CHECK_THROWS_AS(functional::dimer_exact(1.2), config_error);

    CHECK(functional::dimer_landscape(2.0 * std::numbers::pi / 7.0,
                                      3.0 * std::numbers::pi / 28.0) ==
          doctest::Approx(0.2181685175319702));
    CHECK(functional::dimer_landscape(std::numbers::pi / 2.0, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("landscape grid minimum equals the closed form") {
    for (int k = 0; k < 20; ++k) {
        double theta = 0.05 + k * (std::numbers::pi / 2.0 - 0.1) / 19.0;
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j <= 200000; ++j) {
            double theta_l = j * (std::numbers::pi / 200000.0);
            best = std::min(best, functional::dimer_landscape(theta, theta_l));
        }
        CHECK(std::abs(best - functional::dimer_exact(std::cos(theta))) <= 1e-8);
    }
}

TEST_CASE("rescaled_dimer reduces to the dimer and scales linearly in M") {
    for (double eta : {0.0, 0.3, 0.8, 1.0})
        CHECK(functional::rescaled_dimer(2, 1.0, eta) ==
              doctest::Approx(functional::dimer_exact(eta)));
    CHECK(functional::rescaled_dimer(40, 1.0, 0.0) == doctest::Approx(0.0));
    CHECK(functional::rescaled_dimer(40, 1.0, 1.0) == doctest::Approx(20.0));
}

TEST_CASE("functional_derivative matches the dimer closed form") {
    functional::SubspaceBasis dimer = functional::full_subspace(2, 2);
    functional::GammaFamily family = uniform_family(2, 1.0);

    double d06 = functional::functional_derivative(family, 0.6, dimer,
                                                   functional::DerivativeMode::envelope);
    CHECK(d06 == doctest::Approx(0.75).epsilon(1e-6));

    double near_zero = functional::functional_derivative(family, 1e-3, dimer,
                                                         functional::DerivativeMode::envelope);
    CHECK(std::abs(near_zero) < 2e-3);  // flat at the Mott point

    double d99 = functional::functional_derivative(family, 0.99, dimer,
                                                   functional::DerivativeMode::envelope);
    CHECK(d99 == doctest::Approx(7.017923929582521).epsilon(1e-5));
}

TEST_CASE("envelope and reoptimize derivatives agree") {
    functional::SubspaceBasis dimer = functional::full_subspace(2, 2);
    functional::GammaFamily family = uniform_family(2, 1.0);
    for (double eta : {0.3, 0.6}) {
        double env = functional::functional_derivative(family, eta, dimer,
                                                       functional::DerivativeMode::envelope);
        double reopt = functional::functional_derivative(
            family, eta, dimer, functional::DerivativeMode::reoptimize);
        CHECK(std::abs(env - reopt) <= 1e-5);
    }
}

TEST_CASE("fit_bec_slope recovers the dimer exponent") {
    functional::SubspaceBasis dimer = functional::full_subspace(2, 2);
    std::vector<double> grid;
    for (int k = 0; k < 12; ++k) grid.push_back(0.9 + k * 0.009);
    functional::BECSlopeFit fit =
        functional::fit_bec_slope(uniform_family(2, 1.0), dimer, grid);
    CHECK(fit.zeta == doctest::Approx(-0.5).epsilon(0.1));
    CHECK(std::abs(fit.zeta + 0.5) <= 0.05);
    CHECK(fit.points == 12);
}

TEST_CASE("fit_bec_slope rejects families without divergence") {
    functional::SubspaceBasis mott = functional::mott_subspace(4, 1);
    functional::GammaFamily constant = [](double) {
        return rdm::build_uniform_gamma(4, 1.0, 0.0);
    };
    std::vector<double> grid{0.9, 0.92, 0.94, 0.96, 0.98};
    CHECK_THROWS_AS(functional::fit_bec_slope(constant, mott, grid), numeric_error);
    CHECK_THROWS_AS(
        functional::fit_bec_slope(uniform_family(4, 1.0), mott, {0.5, 0.6, 0.7, 0.8, 0.9}),
        config_error);
}

TEST_CASE("rotated_functional obeys the Mott identity") {
    functional::SubspaceBasis mott = functional::mott_subspace(4, 2);
    functional::FunctionalEvaluation eval =
        functional::minimize_functional(rdm::build_uniform_gamma(4, 2.0, 0.0), mott, {});
    REQUIRE(eval.value == doctest::Approx(8.0).epsilon(1e-9));

    CHECK(functional::rotated_functional(eval, mott, 0, 1, 0.0) ==
          doctest::Approx(eval.value).epsilon(1e-12));
    for (double theta : {0.2, 0.9, 1.7, 2.8})
        for (auto [i, j] : {std::pair{0, 1}, std::pair{1, 3}})
            CHECK(functional::rotated_functional(eval, mott, i, j, theta) ==
                  doctest::Approx(eval.value + 2.0 * 2.0 * std::sin(theta) * std::sin(theta))
                      .epsilon(1e-8));

    CHECK_THROWS_AS(functional::rotated_functional(eval, mott, 0, 4, 0.3), config_error);
    CHECK_THROWS_AS(functional::rotated_functional(eval, mott, 2, 2, 0.3), config_error);
}

TEST_CASE("rotations never improve a converged dimer optimum") {
    functional::SubspaceBasis dimer = functional::full_subspace(2, 2);
    functional::FunctionalEvaluation eval =
        functional::minimize_functional(rdm::build_uniform_gamma(2, 1.0, 0.62), dimer, {});
    for (int k = 1; k < 16; ++k) {
        double theta = k * std::numbers::pi / 16.0;
        CHECK(functional::rotated_functional(eval, dimer, 0, 1, theta) >= eval.value - 1e-8);
    }
}

TEST_CASE("reconstruct_wavefunction is exact for the dimer relaxation") {
    functional::SubspaceBasis dimer = functional::full_subspace(2, 2);
    rdm::OneBodyRDM gamma = rdm::build_uniform_gamma(2, 1.0, 0.6);
    functional::FunctionalEvaluation eval = functional::minimize_functional(gamma, dimer, {});
    functional::Reconstruction rec =
        functional::reconstruct_wavefunction(rdm::spectral(gamma), eval.optimal_frame, dimer);
    CHECK(rec.gamma_error <= 1e-6);
    CHECK(rec.norm == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("reconstruct_wavefunction returns the Mott state at eta = 0") {
    functional::SubspaceBasis mott = functional::mott_subspace(4, 1);
    rdm::OneBodyRDM gamma = rdm::build_uniform_gamma(4, 1.0, 0.0);
    functional::FunctionalEvaluation eval = functional::minimize_functional(gamma, mott, {});
    functional::Reconstruction rec =
        functional::reconstruct_wavefunction(rdm::spectral(gamma), eval.optimal_frame, mott);
    Eigen::VectorXd psi = rec.psi / rec.norm;
    std::size_t unit = rec.basis.index_of({1, 1, 1, 1});
    CHECK(std::abs(psi(static_cast<Eigen::Index>(unit))) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("reconstruct_wavefunction reports diagnostics for arbitrary frames") {
    functional::SubspaceBasis sub = functional::full_subspace(3, 3);
    rdm::OneBodyRDM gamma = rdm::build_uniform_gamma(3, 1.0, 0.4);
    Eigen::MatrixXd v = manifold::trivialize(oracles::random_coords(sub.dimension(), 9),
                                             sub.dimension(), 3);
    functional::Reconstruction rec =
        functional::reconstruct_wavefunction(rdm::spectral(gamma), v, sub);
    CHECK(std::isfinite(rec.norm));
    CHECK(std::isfinite(rec.gamma_error));
}

TEST_CASE("normalize_curve is the affine endpoint map") {
    std::vector<double> same{0.0, 0.5, 1.0};
    CHECK(functional::normalize_curve(same) == same);

    std::vector<double> curve{2.0, 2.5, 4.0};
    std::vector<double> normalized = functional::normalize_curve(curve);
    CHECK(normalized.front() == doctest::Approx(0.0));
    CHECK(normalized.back() == doctest::Approx(1.0));
    CHECK(normalized[1] == doctest::Approx(0.25));

    CHECK_THROWS_AS(functional::normalize_curve({1.0, 1.0, 1.0}), numeric_error);
    CHECK_THROWS_AS(functional::normalize_curve({1.0}), config_error);
}

TEST_CASE("relaxed full-subspace minimum lower-bounds the exact interaction") {
    for (auto [sites, particles] : {std::pair{2, 2}, std::pair{3, 3}}) {
        exact::GroundState gs =
            exact::ground_state(exact::build_hamiltonian(sites, particles, 1.0, 3.0));
        functional::SubspaceBasis sub = functional::full_subspace(sites, particles);
        functional::FunctionalEvaluation eval =
            functional::minimize_functional(gs.gamma, sub, {});
        double f_true = exact::interaction_expectation(gs.wavefunction,
                                                       exact::build_hamiltonian(
                                                           sites, particles, 1.0, 3.0)
                                                           .basis);
        CHECK(eval.value <= f_true + 1e-8);
        if (sites == 2) CHECK(eval.value == doctest::Approx(f_true).epsilon(1e-8));
    }
}

TEST_CASE("functional value is invariant under cyclic site relabeling") {
    rdm::OneBodyRDM gamma = oracles::random_psd_rdm(4, 4.0, 31);
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(4, 4);
    for (int i = 0; i < 4; ++i) p((i + 1) % 4, i) = 1.0;
    rdm::OneBodyRDM shifted = rdm::make_rdm(p * gamma.matrix * p.transpose());

    functional::SubspaceBasis mott = functional::mott_subspace(4, 1);
    double f = functional::minimize_functional(gamma, mott, {}).value;
    double f_shifted = functional::minimize_functional(shifted, mott, {}).value;
    CHECK(std::abs(f - f_shifted) <= 1e-9);
}

TEST_CASE("degenerate eigenvector blocks do not change the functional") {
    rdm::OneBodyRDM gamma = rdm::build_uniform_gamma(4, 1.0, 0.5);
    functional::SubspaceBasis sub = functional::mott_subspace(4, 1);
    functional::FunctionalEvaluation eval = functional::minimize_functional(gamma, sub, {});

    // Recombine the threefold-degenerate block by an orthogonal rotation; the
    // orbit of reachable d-matrices is unchanged when V absorbs the rotation.
    rdm::SpectralDecomposition spec = rdm::spectral(gamma);
    Eigen::MatrixXd r = Eigen::MatrixXd::Identity(4, 4);
    Eigen::VectorXd angle(3);
    angle << 0.4, -0.7, 1.1;
    r.bottomRightCorner(3, 3) = manifold::matrix_exponential(manifold::skew_embed(angle, 3));
    rdm::SpectralDecomposition recombined = spec;
    recombined.eigenvectors = spec.eigenvectors * r;

    double moved = functional::evaluate_functional(recombined, eval.optimal_frame * r, sub);
    CHECK(moved == doctest::Approx(eval.value).epsilon(1e-8));
}

TEST_CASE("uniform-family curves are monotone and convex on coarse grids") {
    struct Case {
        int sites;
        double filling;
        functional::SubspaceBasis sub;
    };
    std::vector<Case> cases;
    cases.push_back({2, 1.0, functional::full_subspace(2, 2)});
    cases.push_back({4, 1.0, functional::mott_subspace(4, 1)});
    for (const auto& c : cases) {
        std::vector<double> f;
        for (int k = 0; k <= 10; ++k) {
            double eta = 0.1 * k;
            f.push_back(functional::minimize_functional(
                            rdm::build_uniform_gamma(c.sites, c.filling, eta), c.sub, {})
                            .value);
        }
        for (std::size_t k = 0; k + 1 < f.size(); ++k) CHECK(f[k + 1] >= f[k] - 1e-9);
        for (std::size_t k = 1; k + 1 < f.size(); ++k)
            CHECK(f[k + 1] - 2.0 * f[k] + f[k - 1] >= -1e-6);
    }
}
