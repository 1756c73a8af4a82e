#include "rdmft/energy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "rdmft/errors.hpp"
#include "rdmft/parallel.hpp"

namespace rdmft::energy {

namespace {

constexpr double kGolden = 0.6180339887498949;  // 1/phi

struct GridBest {
    double e = std::numeric_limits<double>::infinity();
    double eta = 0.0;
    double kappa = 0.0;
    double f_raw = 0.0;
    int skipped = 0;
    bool from_grid = false;
    std::optional<Eigen::VectorXd> warm;
};

double filling_of(int sites, int particles) {
    return static_cast<double>(particles) / sites;
}

}  // namespace

FunctionalProvider make_subspace_provider(const functional::SubspaceBasis& sub,
                                          functional::MinimizeConfig config) {
    return [sub, config](const rdm::OneBodyRDM& gamma, ProviderContext& ctx) {
        functional::MinimizeConfig local = config;
        if (ctx.warm) {
            local.warm_start = ctx.warm;
            local.restarts = 0;
        }
        functional::FunctionalEvaluation eval = functional::minimize_functional(gamma, sub, local);
        ctx.warm = eval.optimal_params;
        return eval.value;
    };
}

FunctionalProvider make_rescaled_dimer_provider() {
    return [](const rdm::OneBodyRDM& gamma, ProviderContext&) {
        double alpha = gamma.matrix(0, 0);
        double eta = gamma.matrix(0, 1) / alpha;
        return functional::rescaled_dimer(gamma.sites, alpha, std::clamp(eta, 0.0, 1.0));
    };
}

FunctionalProvider make_exact_dimer_provider() {
    return [](const rdm::OneBodyRDM& gamma, ProviderContext&) {
        if (gamma.sites != 2)
            throw config_error("exact dimer functional requires two sites");
        double alpha = gamma.matrix(0, 0);
        if (std::abs(alpha - 1.0) > 1e-12)
            throw config_error("exact dimer functional requires unit filling");
        return functional::dimer_exact(std::clamp(gamma.matrix(0, 1), 0.0, 1.0));
    };
}

double energy_functional(int sites, double t, double u, double eta1, double f_raw) {
    if (sites < 2) throw config_error("energy_functional: need at least two sites");
    double bonds = sites == 2 ? 1.0 : static_cast<double>(sites);
    return -2.0 * t * bonds * eta1 + 0.5 * u * f_raw;
}

std::vector<double> make_grid(double start, double stop, double step) {
    if (step <= 0) throw config_error("grid step must be positive");
    if (stop < start) throw config_error("grid start exceeds stop");
    std::vector<double> grid;
    for (int k = 0;; ++k) {
        double x = start + k * step;
        if (x > stop + 1e-12) break;
        grid.push_back(std::min(x, stop));
    }
    return grid;
}

GridConfig default_grid_config() {
    GridConfig config;
    config.eta_grid = make_grid(0.0, 1.0, 0.005);
    config.kappa_grid = make_grid(2.0, 8.0, 0.5);
    return config;
}

EnergyResult minimize_energy(int sites, int particles, double t, double u,
                             const FunctionalProvider& provider, const GridConfig& config) {
    if (config.eta_grid.empty()) throw config_error("minimize_energy: empty eta grid");
    if (config.kappa_grid.empty()) throw config_error("minimize_energy: empty kappa grid");
    const double alpha = filling_of(sites, particles);

    // Ring distances above one only exist for M >= 4; collapse the kappa grid.
    std::vector<double> kappas = config.kappa_grid;
    if (sites < 4) kappas.resize(1);

    auto evaluate = [&](double eta, double kappa, ProviderContext& ctx, double* f_out) {
        rdm::OneBodyRDM gamma = rdm::build_ansatz_gamma(sites, alpha, eta, kappa);
        double f = provider(gamma, ctx);
        if (f_out) *f_out = f;
        return energy_functional(sites, t, u, gamma.matrix(0, 1), f);
    };

    // One warm-started chain per kappa row, rows dispatched to the pool.
    std::vector<GridBest> rows(kappas.size());
    par::for_each_index(
        static_cast<std::int64_t>(kappas.size()),
        [&](std::int64_t r) {
            double kappa = kappas[static_cast<std::size_t>(r)];
            GridBest& best = rows[static_cast<std::size_t>(r)];
            ProviderContext ctx;
            for (double eta : config.eta_grid) {
                double f = 0.0;
                double e;
                try {
                    e = evaluate(eta, kappa, ctx, &f);
                } catch (const representability_error&) {
                    ++best.skipped;
                    continue;
                }
                if (e < best.e) {
                    best.e = e;
                    best.eta = eta;
                    best.kappa = kappa;
                    best.f_raw = f;
                    best.from_grid = true;
                    best.warm = ctx.warm;
                }
            }
        },
        config.workers);

    GridBest best;
    int total_skipped = 0;
    for (const auto& row : rows) {
        total_skipped += row.skipped;
        if (row.from_grid && row.e < best.e) best = row;
    }

    EnergyResult result;
    result.u_over_t = u / t;
    result.method = config.method_tag;
    result.skipped_points = total_skipped;

    // Candidate 1RDMs compete with the grid optimum directly.
    for (const auto& gamma : config.extra_candidates) {
        if (gamma.sites != sites)
            throw config_error("minimize_energy: candidate 1RDM has wrong site count");
        ProviderContext ctx;
        double f = provider(gamma, ctx);
        double e = energy_functional(sites, t, u, gamma.matrix(0, 1), f);
        if (e < best.e) {
            best.e = e;
            best.eta = gamma.matrix(0, 1) / gamma.matrix(0, 0);
            best.kappa = std::numeric_limits<double>::quiet_NaN();
            best.f_raw = f;
            best.from_grid = false;
        }
    }

    if (!std::isfinite(best.e))
        throw numeric_error("minimize_energy: no representable point in the ansatz grid");

    // Golden-section refinement in eta around the grid optimum.
    if (best.from_grid) {
        double step = config.eta_grid.size() > 1
                          ? config.eta_grid[1] - config.eta_grid[0]
                          : 0.0;
        double lo = std::max(0.0, best.eta - step);
        double hi = std::min(1.0, best.eta + step);
        if (hi - lo > config.refine_tol && step > 0.0) {
            ProviderContext ctx;
            ctx.warm = best.warm;
            auto safe_eval = [&](double eta, double* f_out) {
                try {
                    return evaluate(eta, best.kappa, ctx, f_out);
                } catch (const representability_error&) {
                    return std::numeric_limits<double>::infinity();
                }
            };
            double x1 = hi - kGolden * (hi - lo);
            double x2 = lo + kGolden * (hi - lo);
            double f1_raw = 0.0, f2_raw = 0.0;
            double e1 = safe_eval(x1, &f1_raw);
            double e2 = safe_eval(x2, &f2_raw);
            while (hi - lo > config.refine_tol) {
                if (e1 <= e2) {
                    hi = x2;
                    x2 = x1;
                    e2 = e1;
                    f2_raw = f1_raw;
                    x1 = hi - kGolden * (hi - lo);
                    e1 = safe_eval(x1, &f1_raw);
                } else {
                    lo = x1;
                    x1 = x2;
                    e1 = e2;
                    f1_raw = f2_raw;
                    x2 = lo + kGolden * (hi - lo);
                    e2 = safe_eval(x2, &f2_raw);
                }
            }
            double e_ref = std::min(e1, e2);
            if (e_ref < best.e) {
                best.e = e_ref;
                best.eta = e1 <= e2 ? x1 : x2;
                best.f_raw = e1 <= e2 ? f1_raw : f2_raw;
            }
        }
    }

    result.eta_star = best.eta;
    result.kappa_star = best.kappa;
    result.f_raw = best.f_raw;
    result.e = best.e;
    return result;
}

std::vector<EnergyResult> sweep(int sites, int particles, double t,
                                const std::vector<double>& u_list,
                                const FunctionalProvider& provider, const GridConfig& config) {
    if (u_list.empty()) throw config_error("sweep: empty U list");
    std::vector<EnergyResult> results(u_list.size());
    par::for_each_index(
        static_cast<std::int64_t>(u_list.size()),
        [&](std::int64_t k) {
            auto i = static_cast<std::size_t>(k);
            try {
                results[i] = minimize_energy(sites, particles, t, u_list[i] * t, provider,
                                             config);
            } catch (const error& e) {
                results[i].u_over_t = u_list[i];
                results[i].method = config.method_tag;
                results[i].ok = false;
                results[i].error = e.what();
            }
        },
        config.workers);
    return results;
}

ReferenceComparison compare_reference(const std::vector<EnergyResult>& results,
                                      const std::vector<std::pair<double, double>>& reference) {
    ReferenceComparison cmp;
    for (const auto& result : results) {
        if (!result.ok) continue;
        auto match = std::find_if(reference.begin(), reference.end(), [&](const auto& ref) {
            return std::abs(ref.first - result.u_over_t) <= 1e-9;
        });
        if (match == reference.end())
            throw config_error("compare_reference: no reference energy for U/t=" +
                               std::to_string(result.u_over_t));
        cmp.u_over_t.push_back(result.u_over_t);
        cmp.relative_error.push_back((result.e - match->second) / match->second);
    }
    if (cmp.relative_error.empty())
        throw config_error("compare_reference: nothing to compare");
    double sum = 0.0;
    for (double r : cmp.relative_error) {
        cmp.max_abs = std::max(cmp.max_abs, std::abs(r));
        sum += std::abs(r);
    }
    cmp.mean_abs = sum / static_cast<double>(cmp.relative_error.size());
    return cmp;
}

std::vector<std::pair<double, double>> read_reference_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open reference file " + path);
    std::string line;
    bool header_seen = false;
    std::vector<std::pair<double, double>> reference;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            std::string squashed;
            for (char c : line)
                if (!std::isspace(static_cast<unsigned char>(c))) squashed += c;
            if (squashed != "u_over_t,e_ref")
                throw config_error("reference file must start with header u_over_t,e_ref");
            header_seen = true;
            continue;
        }
        std::istringstream row(line);
        std::string a, b;
        if (!std::getline(row, a, ',') || !std::getline(row, b))
            throw config_error("malformed reference row: " + line);
        try {
            reference.emplace_back(std::stod(a), std::stod(b));
        } catch (const std::exception&) {
            throw config_error("malformed reference row: " + line);
        }
    }
    if (!header_seen) throw config_error("reference file has no header");
    return reference;
}

}  // namespace rdmft::energy
