#pragma once

#include <vector>

#include <Eigen/Dense>

namespace rdmft::manifold {

// Number of free coordinates of a d x d skew-symmetric matrix.
inline int skew_dimension(int d) { return d * (d - 1) / 2; }

// Strict upper triangle, row-major: (0,1), (0,2), ..., (1,2), ...
Eigen::MatrixXd skew_embed(const Eigen::VectorXd& coords, int dim);
Eigen::VectorXd skew_extract(const Eigen::MatrixXd& skew);

// Scaling-and-squaring matrix exponential with a fixed degree-13 rational
// core. For skew input the result is special orthogonal.
Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& a);

// Cached intermediates of one exponential evaluation. Lets callers obtain
// directional derivatives of exp at the same point for the cost of the
// derivative pass alone.
struct ExpCache {
    int dim = 0;
    int squarings = 0;
    Eigen::MatrixXd scaled;            // a / 2^squarings
    Eigen::MatrixXd a2, a4, a6;
    Eigen::MatrixXd w1, w2, w3;        // polynomial pieces of the rational core
    Eigen::MatrixXd z1, u, v;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;  // factorization of (v - u)
    std::vector<Eigen::MatrixXd> powers;      // repeated squares; back() = exp(a)

    const Eigen::MatrixXd& exponential() const { return powers.back(); }
};

ExpCache exponential_cache(const Eigen::MatrixXd& a);

// Fréchet derivative L(a, e): the directional derivative of exp at `cache`'s
// base point along e, via differentiated scaling and squaring.
Eigen::MatrixXd exponential_derivative(const ExpCache& cache, const Eigen::MatrixXd& e);

// V = first `cols` columns of exp(skew_embed(coords)); orthonormal by construction.
Eigen::MatrixXd trivialize(const Eigen::VectorXd& coords, int dim, int cols);

// Chain rule through the trivialization: given dF/dV, returns dF/dcoords.
Eigen::VectorXd pullback_gradient(const Eigen::VectorXd& coords, int dim, int cols,
                                  const Eigen::MatrixXd& frame_gradient);

// Same pullback reusing an exponential cache built at skew_embed(coords).
Eigen::VectorXd pullback_gradient(const ExpCache& cache, int cols,
                                  const Eigen::MatrixXd& frame_gradient);

}  // namespace rdmft::manifold
