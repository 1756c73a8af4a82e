// Command-line front end: functional sweeps, energy curves, derivative
// tables, surrogate training and the exact-diagonalization oracle, written
// as CSV/JSON with the run configuration echoed into each output.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rdmft/csvio.hpp"
#include "rdmft/energy.hpp"
#include "rdmft/errors.hpp"
#include "rdmft/exact.hpp"
#include "rdmft/functional.hpp"
#include "rdmft/parallel.hpp"
#include "rdmft/rdm.hpp"
#include "rdmft/surrogate.hpp"

namespace {

using namespace rdmft;

constexpr const char* kVersion = "1.0.0";

struct CommonOptions {
    int sites = 2;
    double filling = 1.0;
    std::string eta_grid = "0:1:0.05";
    std::string kappa_grid = "2:8:0.5";
    std::string subspace = "full";
    std::string method = "rdmft1";
    unsigned seed = 0;
    bool seed_given = false;
    std::string out;
    std::string reference;
    std::string checkpoint;
    int workers = 0;
    std::vector<std::string> u_values;
};

// Grids are written a:b:step; a bare number is a single-point grid.
std::vector<double> parse_grid(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream stream(text);
    std::string token;
    while (std::getline(stream, token, ':')) parts.push_back(token);
    try {
        if (parts.size() == 1) return {std::stod(parts[0])};
        if (parts.size() == 3)
            return energy::make_grid(std::stod(parts[0]), std::stod(parts[1]),
                                     std::stod(parts[2]));
    } catch (const std::invalid_argument&) {
        throw config_error("malformed grid '" + text + "'");
    } catch (const std::out_of_range&) {
        throw config_error("malformed grid '" + text + "'");
    }
    throw config_error("grid must be a single value or start:stop:step, got '" + text + "'");
}

std::vector<double> parse_u_list(const std::vector<std::string>& tokens) {
    if (tokens.empty()) throw config_error("at least one --u-over-t value is required");
    std::vector<double> u_list;
    for (const auto& token : tokens) {
        std::vector<double> part = parse_grid(token);
        u_list.insert(u_list.end(), part.begin(), part.end());
    }
    return u_list;
}

int integer_particles(int sites, double filling) {
    double n = filling * sites;
    int rounded = static_cast<int>(std::lround(n));
    if (std::abs(n - rounded) > 1e-9)
        throw config_error("filling " + std::to_string(filling) + " on " +
                           std::to_string(sites) + " sites gives a non-integer particle count");
    if (rounded < 1) throw config_error("particle count must be positive");
    return rounded;
}

functional::SubspaceBasis build_subspace(const CommonOptions& opt, int particles) {
    if (opt.subspace == "full") return functional::full_subspace(opt.sites, particles);
    if (opt.subspace == "mott") {
        int alpha = static_cast<int>(std::lround(opt.filling));
        if (std::abs(opt.filling - alpha) > 1e-9)
            throw config_error("the mott subspace needs an integer filling");
        return functional::mott_subspace(opt.sites, alpha);
    }
    throw config_error("unknown subspace '" + opt.subspace + "'");
}

void common_metadata(csvio::Writer& csv, const std::string& command,
                     const CommonOptions& opt) {
    csv.metadata("rdmft-version", kVersion);
    csv.metadata("command", command);
    csv.metadata("sites", std::to_string(opt.sites));
    csv.metadata("filling", csvio::format_double(opt.filling));
    csv.metadata("seed", std::to_string(opt.seed));
    csv.metadata("workers", std::to_string(opt.workers));
}

std::string sanitize_field(std::string text) {
    for (char& c : text)
        if (c == ',' || c == '\n') c = ';';
    return text;
}

std::string reference_output_path(const std::string& out) {
    std::filesystem::path path(out);
    std::filesystem::path derived = path.parent_path() / path.stem();
    derived += ".ref";
    derived += path.extension();
    return derived.string();
}

functional::GammaFamily uniform_family(int sites, double filling) {
    return [sites, filling](double eta) {
        return rdm::build_uniform_gamma(sites, filling, eta);
    };
}

int run_functional(const CommonOptions& opt) {
    int particles = integer_particles(opt.sites, opt.filling);
    std::vector<double> grid = parse_grid(opt.eta_grid);
    for (double eta : grid)
        if (eta < 0.0 || eta > 1.0) throw config_error("eta grid must lie within [0, 1]");
    functional::SubspaceBasis sub = build_subspace(opt, particles);

    struct Point {
        double f_raw = 0.0;
        bool converged = false;
        int iterations = 0;
        double gradient_norm = 0.0;
    };
    std::vector<Point> points(grid.size());
    functional::MinimizeConfig config;
    config.seed = opt.seed;
    par::for_each_index(
        static_cast<std::int64_t>(grid.size()),
        [&](std::int64_t k) {
            functional::FunctionalEvaluation eval = functional::minimize_functional(
                rdm::build_uniform_gamma(opt.sites, opt.filling,
                                         grid[static_cast<std::size_t>(k)]),
                sub, config);
            points[static_cast<std::size_t>(k)] =
                Point{eval.value, eval.converged, eval.iterations, eval.gradient_norm};
        },
        opt.workers);

    std::vector<double> raw(points.size());
    for (std::size_t k = 0; k < points.size(); ++k) raw[k] = points[k].f_raw;
    std::vector<double> normalized = functional::normalize_curve(raw);

    csvio::Writer csv(opt.out);
    common_metadata(csv, "functional", opt);
    csv.metadata("subspace", opt.subspace);
    csv.metadata("eta-grid", opt.eta_grid);
    csv.header({"m", "n", "alpha", "eta", "f_raw", "f_normalized", "converged", "iterations",
                "gradient_norm"});
    for (std::size_t k = 0; k < grid.size(); ++k)
        csv.row({std::to_string(opt.sites), std::to_string(particles),
                 csvio::format_double(opt.filling), csvio::format_double(grid[k]),
                 csvio::format_double(points[k].f_raw), csvio::format_double(normalized[k]),
                 points[k].converged ? "1" : "0", std::to_string(points[k].iterations),
                 csvio::format_double(points[k].gradient_norm)});
    return 0;
}

int run_energy(const CommonOptions& opt) {
    int particles = integer_particles(opt.sites, opt.filling);
    std::vector<double> u_list = parse_u_list(opt.u_values);

    energy::GridConfig grid;
    grid.eta_grid = parse_grid(opt.eta_grid);
    grid.kappa_grid = parse_grid(opt.kappa_grid);
    grid.workers = opt.workers;
    grid.method_tag = opt.method;

    energy::FunctionalProvider provider;
    if (opt.method == "rdmft1") {
        functional::MinimizeConfig config;
        config.seed = opt.seed;
        provider = energy::make_subspace_provider(build_subspace(opt, particles), config);
    } else if (opt.method == "rdmft2") {
        provider = energy::make_rescaled_dimer_provider();
    } else if (opt.method == "exact-functional") {
        if (opt.sites != 2 || std::abs(opt.filling - 1.0) > 1e-9)
            throw config_error("the exact functional is the two-site unit-filling closed form");
        provider = energy::make_exact_dimer_provider();
    } else {
        throw config_error("unknown method '" + opt.method + "'");
    }

    std::vector<energy::EnergyResult> results =
        energy::sweep(opt.sites, particles, 1.0, u_list, provider, grid);

    csvio::Writer csv(opt.out);
    common_metadata(csv, "energy", opt);
    csv.metadata("method", opt.method);
    csv.metadata("subspace", opt.subspace);
    csv.metadata("eta-grid", opt.eta_grid);
    csv.metadata("kappa-grid", opt.kappa_grid);
    if (!opt.reference.empty()) csv.metadata("reference", opt.reference);
    csv.header({"u_over_t", "method", "eta_star", "kappa_star", "f_raw", "e", "status"});
    for (const auto& r : results)
        csv.row({csvio::format_double(r.u_over_t), r.method, csvio::format_double(r.eta_star),
                 csvio::format_double(r.kappa_star), csvio::format_double(r.f_raw),
                 csvio::format_double(r.e), r.ok ? "ok" : sanitize_field(r.error)});

    if (!opt.reference.empty()) {
        energy::ReferenceComparison cmp =
            energy::compare_reference(results, energy::read_reference_csv(opt.reference));
        csvio::Writer ref_csv(reference_output_path(opt.out));
        common_metadata(ref_csv, "energy-reference", opt);
        ref_csv.metadata("reference", opt.reference);
        ref_csv.metadata("max_abs", csvio::format_double(cmp.max_abs));
        ref_csv.metadata("mean_abs", csvio::format_double(cmp.mean_abs));
        ref_csv.header({"u_over_t", "delta_over_eref"});
        for (std::size_t k = 0; k < cmp.u_over_t.size(); ++k)
            ref_csv.row({csvio::format_double(cmp.u_over_t[k]),
                         csvio::format_double(cmp.relative_error[k])});
    }
    return 0;
}

int run_derivative(const CommonOptions& opt) {
    int particles = integer_particles(opt.sites, opt.filling);
    std::vector<double> grid = parse_grid(opt.eta_grid);
    for (double eta : grid)
        if (eta <= 0.0 || eta >= 1.0)
            throw config_error("derivative grid must lie strictly inside (0, 1)");
    functional::SubspaceBasis sub = build_subspace(opt, particles);
    functional::GammaFamily family = uniform_family(opt.sites, opt.filling);

    std::optional<surrogate::SurrogateModel> model;
    if (!opt.checkpoint.empty()) {
        model = surrogate::load_checkpoint(opt.checkpoint);
        if (model->sites != opt.sites || model->frame_dim != sub.dimension())
            throw config_error("checkpoint does not match this system and subspace");
    }

    bool dimer_closed_form = opt.sites == 2 && std::abs(opt.filling - 1.0) < 1e-12;
    functional::MinimizeConfig config;
    config.seed = opt.seed;

    struct Row {
        double model_value = 0.0;
        double exact_value = 0.0;
    };
    std::vector<Row> rows(grid.size());
    par::for_each_index(
        static_cast<std::int64_t>(grid.size()),
        [&](std::int64_t k) {
            double eta = grid[static_cast<std::size_t>(k)];
            Row row;
            row.model_value =
                model ? surrogate::derivative(*model, family, eta, sub)
                      : functional::functional_derivative(
                            family, eta, sub, functional::DerivativeMode::envelope, config);
            row.exact_value = dimer_closed_form
                                  ? eta / std::sqrt(1.0 - eta * eta)
                                  : functional::functional_derivative(
                                        family, eta, sub,
                                        functional::DerivativeMode::reoptimize, config);
            rows[static_cast<std::size_t>(k)] = row;
        },
        opt.workers);

    csvio::Writer csv(opt.out);
    common_metadata(csv, "derivative", opt);
    csv.metadata("subspace", opt.subspace);
    csv.metadata("eta-grid", opt.eta_grid);
    csv.metadata("mode", model ? "checkpoint" : "exact-functional");
    if (model) csv.metadata("checkpoint", opt.checkpoint);
    csv.header({"eta", "one_minus_eta", "dfdeta_model", "dfdeta_exact", "abs_error"});
    for (std::size_t k = 0; k < grid.size(); ++k)
        csv.row({csvio::format_double(grid[k]), csvio::format_double(1.0 - grid[k]),
                 csvio::format_double(rows[k].model_value),
                 csvio::format_double(rows[k].exact_value),
                 csvio::format_double(std::abs(rows[k].model_value - rows[k].exact_value))});
    return 0;
}

int run_train(const CommonOptions& opt, std::optional<int> epochs,
              std::optional<double> learning_rate) {
    int particles = integer_particles(opt.sites, opt.filling);
    if (opt.checkpoint.empty()) throw config_error("--checkpoint output path is required");
    std::vector<double> grid = parse_grid(opt.eta_grid);
    functional::SubspaceBasis sub = build_subspace(opt, particles);

    surrogate::NetworkConfig config = surrogate::default_config(opt.sites, particles);
    if (opt.seed_given) config.seed = opt.seed;
    if (epochs) config.epochs = *epochs;
    if (learning_rate) config.learning_rate = *learning_rate;
    config.validate();

    surrogate::SurrogateModel model =
        surrogate::make_model(opt.sites, particles, sub.dimension(), config);
    surrogate::TrainResult result = surrogate::train(
        model, uniform_family(opt.sites, opt.filling), grid, sub, opt.workers);

    std::string history_path =
        opt.out.empty() ? opt.checkpoint + ".loss.csv" : opt.out;
    csvio::Writer csv(history_path);
    common_metadata(csv, "train", opt);
    csv.metadata("model-seed", std::to_string(config.seed));
    csv.metadata("epochs", std::to_string(config.epochs));
    csv.metadata("learning-rate", csvio::format_double(config.learning_rate));
    csv.metadata("eta-grid", opt.eta_grid);
    csv.metadata("diverged", result.diverged ? "1" : "0");
    csv.header({"epoch", "loss"});
    for (std::size_t k = 0; k < result.loss_history.size(); ++k)
        csv.row({std::to_string(k), csvio::format_double(result.loss_history[k])});
    csv.close();

    if (result.diverged)
        throw numeric_error("training diverged; partial loss history written to " +
                            history_path);
    surrogate::save_checkpoint(model, opt.checkpoint);
    return 0;
}

int run_exact(const CommonOptions& opt) {
    int particles = integer_particles(opt.sites, opt.filling);
    std::vector<double> u_list = parse_u_list(opt.u_values);
    if (u_list.size() != 1)
        throw config_error("the exact oracle takes exactly one --u-over-t value");

    exact::HamiltonianMatrix h = exact::build_hamiltonian(opt.sites, particles, 1.0, u_list[0]);
    exact::GroundState gs = exact::ground_state(h);

    nlohmann::json doc;
    doc["rdmft_version"] = kVersion;
    doc["command"] = "exact";
    doc["config"] = {{"sites", opt.sites},
                     {"particles", particles},
                     {"t", 1.0},
                     {"u_over_t", u_list[0]},
                     {"periodic", h.periodic}};
    doc["e0"] = gs.energy;
    doc["degenerate_flag"] = gs.degenerate;
    doc["interaction_expectation"] = exact::interaction_expectation(gs.wavefunction, h.basis);
    nlohmann::json gamma = nlohmann::json::array();
    for (int i = 0; i < opt.sites; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < opt.sites; ++j) row.push_back(gs.gamma.matrix(i, j));
        gamma.push_back(std::move(row));
    }
    doc["gamma"] = std::move(gamma);

    if (opt.out.empty()) {
        std::cout << doc.dump(1) << "\n";
    } else {
        std::ofstream out(opt.out);
        if (!out) throw config_error("cannot open output file " + opt.out);
        out << doc.dump(1) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reduced density matrix functional theory for lattice bosons"};
    app.require_subcommand(1);

    CommonOptions opt;
    std::optional<int> epochs;
    std::optional<double> learning_rate;

    auto add_common = [&](CLI::App* cmd, bool needs_out) {
        cmd->add_option("--sites", opt.sites, "lattice sites M")->required();
        cmd->add_option("--filling", opt.filling, "particles per site (default 1)");
        cmd->add_option("--seed", opt.seed, "RNG seed")->each([&](const std::string&) {
            opt.seed_given = true;
        });
        cmd->add_option("--workers", opt.workers, "worker pool size (default: logical cores)");
        auto* out = cmd->add_option("--out", opt.out, "output file path");
        if (needs_out) out->required();
    };

    CLI::App* cmd_functional = app.add_subcommand("functional", "universal functional sweep");
    add_common(cmd_functional, true);
    cmd_functional->add_option("--eta-grid", opt.eta_grid, "a:b:step (default 0:1:0.05)");
    cmd_functional->add_option("--subspace", opt.subspace, "full | mott (default full)");

    CLI::App* cmd_energy = app.add_subcommand("energy", "ground-state energy sweep");
    add_common(cmd_energy, true);
    opt.eta_grid = "0:1:0.05";
    cmd_energy->add_option("--u-over-t", opt.u_values,
                           "interaction strengths; value or a:b:step, repeatable")
        ->required();
    cmd_energy->add_option("--eta-grid", opt.eta_grid, "a:b:step (default 0:1:0.005)");
    cmd_energy->add_option("--kappa-grid", opt.kappa_grid, "a:b:step (default 2:8:0.5)");
    cmd_energy->add_option("--method", opt.method,
                           "rdmft1 | rdmft2 | exact-functional (default rdmft1)");
    cmd_energy->add_option("--subspace", opt.subspace, "full | mott (rdmft1 only)");
    cmd_energy->add_option("--reference", opt.reference, "reference CSV (u_over_t,e_ref)");

    CLI::App* cmd_derivative = app.add_subcommand("derivative", "functional derivative table");
    add_common(cmd_derivative, true);
    cmd_derivative->add_option("--eta-grid", opt.eta_grid, "a:b:step strictly inside (0,1)");
    cmd_derivative->add_option("--subspace", opt.subspace, "full | mott (default full)");
    cmd_derivative->add_option("--checkpoint", opt.checkpoint, "trained model checkpoint");

    CLI::App* cmd_train = app.add_subcommand("train", "train the surrogate functional");
    add_common(cmd_train, false);
    cmd_train->add_option("--eta-grid", opt.eta_grid,
                          "training grid (default 0.005:0.995:0.005)");
    cmd_train->add_option("--subspace", opt.subspace, "full | mott (default full)");
    cmd_train->add_option("--checkpoint", opt.checkpoint, "checkpoint output path")
        ->required();
    cmd_train->add_option("--epochs", epochs, "override the published epoch count");
    cmd_train->add_option("--learning-rate", learning_rate, "override the published rate");

    CLI::App* cmd_exact = app.add_subcommand("exact", "exact diagonalization oracle (JSON)");
    add_common(cmd_exact, false);
    cmd_exact->add_option("--u-over-t", opt.u_values, "interaction strength")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        par::set_default_workers(opt.workers);
        if (app.got_subcommand(cmd_functional)) {
            if (cmd_functional->count("--eta-grid") == 0) opt.eta_grid = "0:1:0.05";
            return run_functional(opt);
        }
        if (app.got_subcommand(cmd_energy)) {
            if (cmd_energy->count("--eta-grid") == 0) opt.eta_grid = "0:1:0.005";
            if (app.got_subcommand(cmd_energy) && cmd_energy->count("--subspace") == 0)
                opt.subspace = "mott";
            return run_energy(opt);
        }
        if (app.got_subcommand(cmd_derivative)) {
            if (cmd_derivative->count("--eta-grid") == 0) opt.eta_grid = "0.1:0.9:0.05";
            return run_derivative(opt);
        }
        if (app.got_subcommand(cmd_train)) {
            if (cmd_train->count("--eta-grid") == 0) opt.eta_grid = "0.005:0.995:0.005";
            return run_train(opt, epochs, learning_rate);
        }
        if (app.got_subcommand(cmd_exact)) return run_exact(opt);
        throw config_error("no subcommand selected");
    } catch (const config_error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
