#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rdmft/functional.hpp"
#include "rdmft/rdm.hpp"

namespace rdmft::energy {

// Per-chain scratch handed to functional providers so grid walks can warm
// start consecutive minimizations.
struct ProviderContext {
    std::optional<Eigen::VectorXd> warm;
};

// Maps a candidate 1RDM to F_raw (units of U/2).
using FunctionalProvider = std::function<double(const rdm::OneBodyRDM&, ProviderContext&)>;

FunctionalProvider make_subspace_provider(const functional::SubspaceBasis& sub,
                                          functional::MinimizeConfig config = {});
FunctionalProvider make_rescaled_dimer_provider();
FunctionalProvider make_exact_dimer_provider();

// E = -2 t M eta1 + (U/2) F_raw on the ring; the dimer counts its single bond once.
double energy_functional(int sites, double t, double u, double eta1, double f_raw);

struct EnergyResult {
    double u_over_t = 0.0;
    std::string method;
    double eta_star = 0.0;
    double kappa_star = 0.0;
    double f_raw = 0.0;
    double e = 0.0;
    int skipped_points = 0;  // non-PSD ansatz grid points
    bool ok = true;
    std::string error;
};

struct GridConfig {
    std::vector<double> eta_grid;    // defaults to 0..1 step 0.005
    std::vector<double> kappa_grid;  // defaults to 2..8 step 0.5
    // Candidate 1RDMs evaluated alongside the ansatz grid (e.g. an exact
    // ground-state gamma when testing the relaxation lower bound).
    std::vector<rdm::OneBodyRDM> extra_candidates;
    double refine_tol = 1e-8;  // golden-section interval width in eta
    int workers = 0;
    std::string method_tag = "custom";
};

std::vector<double> make_grid(double start, double stop, double step);
GridConfig default_grid_config();

// Grid search over (eta, kappa) followed by golden-section refinement in eta
// at the best kappa. Non-PSD ansatz points are skipped and counted.
EnergyResult minimize_energy(int sites, int particles, double t, double u,
                             const FunctionalProvider& provider, const GridConfig& config);

// One EnergyResult per U value; failures are recorded per point and the
// sweep continues.
std::vector<EnergyResult> sweep(int sites, int particles, double t,
                                const std::vector<double>& u_list,
                                const FunctionalProvider& provider, const GridConfig& config);

struct ReferenceComparison {
    std::vector<double> u_over_t;
    std::vector<double> relative_error;  // (E - E_ref) / E_ref
    double max_abs = 0.0;
    double mean_abs = 0.0;
};

ReferenceComparison compare_reference(const std::vector<EnergyResult>& results,
                                      const std::vector<std::pair<double, double>>& reference);

// Two-column CSV with header `u_over_t,e_ref`; leading '#' lines are ignored.
std::vector<std::pair<double, double>> read_reference_csv(const std::string& path);

}  // namespace rdmft::energy
