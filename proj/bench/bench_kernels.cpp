// Times the OpenMP worker-pool paths against the serial reference on the
// three workloads that dominate real runs: functional grid sweeps, energy
// grid searches and full-batch training gradients.

#include <chrono>
#include <cstdio>
#include <vector>

#include "rdmft/energy.hpp"
#include "rdmft/functional.hpp"
#include "rdmft/parallel.hpp"
#include "rdmft/rdm.hpp"
#include "rdmft/surrogate.hpp"

using namespace rdmft;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point start) {
    return std::chrono::duration<double>(clock_type::now() - start).count();
}

double time_functional_grid(int workers) {
    functional::SubspaceBasis sub = functional::mott_subspace(8, 1);
    functional::MinimizeConfig config;
    config.max_iters = 600;
    config.tolerance = 1e-7;
    config.restarts = 1;
    std::vector<double> grid = energy::make_grid(0.0, 1.0, 0.05);
    std::vector<double> values(grid.size());
    auto start = clock_type::now();
    par::for_each_index(
        static_cast<std::int64_t>(grid.size()),
        [&](std::int64_t k) {
            values[static_cast<std::size_t>(k)] = functional::minimize_functional(
                rdm::build_uniform_gamma(8, 1.0, grid[static_cast<std::size_t>(k)]), sub,
                config).value;
        },
        workers);
    return seconds_since(start);
}

double time_energy_grid(int workers) {
    functional::SubspaceBasis sub = functional::mott_subspace(6, 1);
    functional::MinimizeConfig config;
    config.max_iters = 400;
    config.tolerance = 1e-6;
    config.restarts = 0;
    energy::GridConfig grid;
    grid.eta_grid = energy::make_grid(0.0, 1.0, 0.02);
    grid.kappa_grid = energy::make_grid(2.0, 8.0, 1.0);
    grid.refine_tol = 1e-5;
    grid.workers = workers;
    auto start = clock_type::now();
    energy::minimize_energy(6, 6, 1.0, 4.0, energy::make_subspace_provider(sub, config), grid);
    return seconds_since(start);
}

double time_training_epochs(int workers) {
    functional::SubspaceBasis sub = functional::full_subspace(2, 2);
    auto family = [](double eta) { return rdm::build_uniform_gamma(2, 1.0, eta); };
    surrogate::NetworkConfig config = surrogate::default_config(2, 2);
    config.epochs = 400;
    surrogate::SurrogateModel model = surrogate::make_model(2, 2, sub.dimension(), config);
    std::vector<double> grid = energy::make_grid(0.005, 0.995, 0.005);
    auto start = clock_type::now();
    surrogate::train(model, family, grid, sub, workers);
    return seconds_since(start);
}

void report(const char* name, double serial, double parallel, int workers) {
    std::printf("%-24s serial %8.3f s   omp(%d) %8.3f s   speedup %.2fx\n", name, serial,
                workers, parallel, parallel > 0 ? serial / parallel : 0.0);
}

}  // namespace

int main() {
    const int workers = par::hardware_workers();
    std::printf("hardware workers: %d\n", workers);

    report("functional grid", time_functional_grid(1), time_functional_grid(workers), workers);
    report("energy grid search", time_energy_grid(1), time_energy_grid(workers), workers);
    report("training epochs", time_training_epochs(1), time_training_epochs(workers), workers);
    return 0;
}
