#include "rdmft/fock.hpp"

#include <gmpxx.h>

#include <cmath>

#include "rdmft/errors.hpp"

namespace rdmft::fock {

namespace {

void check_site(const Occupations& state, int site) {
    if (site < 0 || static_cast<std::size_t>(site) >= state.size())
        throw config_error("site index " + std::to_string(site) + " out of range for " +
                           std::to_string(state.size()) + " sites");
}

}  // namespace

Dimension count_dimension(int sites, int particles) {
    if (sites < 1) throw config_error("count_dimension: need at least one site");
    if (particles < 0) throw config_error("count_dimension: negative particle number");
    mpz_class exact;
    mpz_bin_uiui(exact.get_mpz_t(), static_cast<unsigned long>(particles + sites - 1),
                 static_cast<unsigned long>(particles));
    Dimension dim;
    dim.digits = exact.get_str();
    if (exact.fits_ulong_p()) dim.value = static_cast<std::uint64_t>(exact.get_ui());
    return dim;
}

FockBasis enumerate_basis(int sites, int particles, std::uint64_t cap) {
    Dimension dim = count_dimension(sites, particles);
    if (!dim.value || *dim.value > cap)
        throw dimension_error("basis for M=" + std::to_string(sites) +
                              ", N=" + std::to_string(particles) + " has " + dim.digits +
                              " states, above the cap of " + std::to_string(cap));

    FockBasis basis;
    basis.sites = sites;
    basis.particles = particles;
    basis.states.reserve(static_cast<std::size_t>(*dim.value));

    // Descending lexicographic order falls out of filling sites left to right
    // with the largest remaining occupation first.
    Occupations current(static_cast<std::size_t>(sites), 0);
    auto emit = [&](auto&& self, int site, int remaining) -> void {
        if (site == sites - 1) {
            current[static_cast<std::size_t>(site)] = static_cast<std::uint8_t>(remaining);
            basis.states.push_back(current);
            return;
        }
        for (int n = remaining; n >= 0; --n) {
            current[static_cast<std::size_t>(site)] = static_cast<std::uint8_t>(n);
            self(self, site + 1, remaining - n);
        }
    };
    emit(emit, 0, particles);
    return basis;
}

std::size_t FockBasis::index_of(const Occupations& state) const {
    if (state.size() != static_cast<std::size_t>(sites))
        throw config_error("index_of: state has wrong site count");
    std::size_t rank = 0;
    int remaining = particles;
    for (int site = 0; site + 1 < sites; ++site) {
        int n = state[static_cast<std::size_t>(site)];
        if (n > remaining) throw config_error("index_of: state not in this basis");
        // States with a larger occupation at `site` come first.
        for (int larger = remaining; larger > n; --larger) {
            Dimension tail = count_dimension(sites - site - 1, remaining - larger);
            rank += static_cast<std::size_t>(*tail.value);
        }
        remaining -= n;
    }
    if (state.back() != remaining) throw config_error("index_of: state not in this basis");
    return rank;
}

std::optional<LadderResult> apply_annihilation(const Occupations& state, int site) {
    check_site(state, site);
    int n = state[static_cast<std::size_t>(site)];
    if (n == 0) return std::nullopt;
    LadderResult out{std::sqrt(static_cast<double>(n)), state};
    out.state[static_cast<std::size_t>(site)] = static_cast<std::uint8_t>(n - 1);
    return out;
}

LadderResult apply_creation(const Occupations& state, int site) {
    check_site(state, site);
    int n = state[static_cast<std::size_t>(site)];
    LadderResult out{std::sqrt(static_cast<double>(n + 1)), state};
    out.state[static_cast<std::size_t>(site)] = static_cast<std::uint8_t>(n + 1);
    return out;
}

Eigen::VectorXd number_diagonal(const FockBasis& basis, int site) {
    if (site < 0 || site >= basis.sites) throw config_error("number_diagonal: site out of range");
    Eigen::VectorXd diag(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t k = 0; k < basis.size(); ++k)
        diag(static_cast<Eigen::Index>(k)) = basis.states[k][static_cast<std::size_t>(site)];
    return diag;
}

Eigen::MatrixXd subspace_number_matrix(const FockBasis& basis, const Eigen::MatrixXd& frame,
                                       int site) {
    if (frame.rows() != static_cast<Eigen::Index>(basis.size()))
        throw config_error("subspace_number_matrix: frame rows do not match basis size");
    const Eigen::Index k = frame.cols();
    double ortho = (frame.transpose() * frame - Eigen::MatrixXd::Identity(k, k))
                       .cwiseAbs()
                       .maxCoeff();
    if (ortho > 1e-10)
        throw numeric_error("subspace_number_matrix: frame not orthonormal (deviation " +
                            std::to_string(ortho) + ")");
    Eigen::VectorXd diag = number_diagonal(basis, site);
    Eigen::MatrixXd result = frame.transpose() * diag.asDiagonal() * frame;
    return 0.5 * (result + result.transpose());
}

}  // namespace rdmft::fock
