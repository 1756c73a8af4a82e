#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rdmft::fock {

// Particles per site for one basis state. Length equals the site count.
using Occupations = std::vector<std::uint8_t>;

// Exact Hilbert-space dimension binomial(N+M-1, N).
struct Dimension {
    std::string digits;                    // exact decimal representation
    std::optional<std::uint64_t> value;    // present iff the count fits in 64 bits
};

Dimension count_dimension(int sites, int particles);

inline constexpr std::uint64_t kDefaultStateCap = 10'000'000;

// Ordered occupation-number basis for N bosons on M sites.
// States are sorted lexicographically descending, so (2,0) precedes (1,1)
// precedes (0,2); two enumerations of the same (M, N) are identical.
struct FockBasis {
    int sites = 0;
    int particles = 0;
    std::vector<Occupations> states;

    std::size_t size() const { return states.size(); }
    const Occupations& state(std::size_t k) const { return states[k]; }

    // Combinatorial rank of `state` in the descending order; inverse of state().
    std::size_t index_of(const Occupations& state) const;
};

FockBasis enumerate_basis(int sites, int particles, std::uint64_t cap = kDefaultStateCap);

struct LadderResult {
    double coefficient;
    Occupations state;
};

// b_site |state>. Empty when the mode is unoccupied (the state is annihilated).
std::optional<LadderResult> apply_annihilation(const Occupations& state, int site);

// b†_site |state>, coefficient sqrt(n_site + 1).
LadderResult apply_creation(const Occupations& state, int site);

// Diagonal of the site-number operator in the given basis.
Eigen::VectorXd number_diagonal(const FockBasis& basis, int site);

// <m'| n_site |m> projected onto the span of `frame` (columns are Fock-space
// coordinates, orthonormal within 1e-10). Result is K x K symmetric and equals
// diag of occupations when the columns are single Fock states.
Eigen::MatrixXd subspace_number_matrix(const FockBasis& basis,
                                       const Eigen::MatrixXd& frame, int site);

}  // namespace rdmft::fock
