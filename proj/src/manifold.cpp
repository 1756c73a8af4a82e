#include "rdmft/manifold.hpp"

#include <cmath>

#include "rdmft/errors.hpp"

namespace rdmft::manifold {

namespace {

// Degree-13 rational core, applied after scaling the input below this
// 1-norm threshold; backward error stays at unit-roundoff level.
constexpr double kTheta13 = 5.371920351148152;

constexpr double kB[] = {64764752532480000.0,
                         32382376266240000.0,
                         7771770303897600.0,
                         1187353796428800.0,
                         129060195264000.0,
                         10559470521600.0,
                         670442572800.0,
                         33522128640.0,
                         1323241920.0,
                         40840800.0,
                         960960.0,
                         16380.0,
                         182.0,
                         1.0};

void require_finite(const Eigen::MatrixXd& a, const char* who) {
    if (!a.allFinite()) throw numeric_error(std::string(who) + ": non-finite input");
}

int coord_index(int i, int j, int dim) { return i * dim - i * (i + 1) / 2 + (j - i - 1); }

}  // namespace

Eigen::MatrixXd skew_embed(const Eigen::VectorXd& coords, int dim) {
    if (coords.size() != skew_dimension(dim))
        throw config_error("skew_embed: expected " + std::to_string(skew_dimension(dim)) +
                           " coordinates, got " + std::to_string(coords.size()));
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
    int k = 0;
    for (int i = 0; i < dim; ++i) {
        for (int j = i + 1; j < dim; ++j, ++k) {
            a(i, j) = coords(k);
            a(j, i) = -coords(k);
        }
    }
    return a;
}

Eigen::VectorXd skew_extract(const Eigen::MatrixXd& skew) {
    if (skew.rows() != skew.cols()) throw config_error("skew_extract: matrix must be square");
    const int dim = static_cast<int>(skew.rows());
    Eigen::VectorXd coords(skew_dimension(dim));
    int k = 0;
    for (int i = 0; i < dim; ++i)
        for (int j = i + 1; j < dim; ++j, ++k) coords(k) = skew(i, j);
    return coords;
}

ExpCache exponential_cache(const Eigen::MatrixXd& a) {
    require_finite(a, "matrix_exponential");
    if (a.rows() != a.cols()) throw config_error("matrix_exponential: matrix must be square");

    ExpCache c;
    c.dim = static_cast<int>(a.rows());
    const int n = c.dim;
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);

    double norm = a.cwiseAbs().colwise().sum().maxCoeff();  // 1-norm
    c.squarings = 0;
    if (norm > kTheta13)
        c.squarings = static_cast<int>(std::ceil(std::log2(norm / kTheta13)));
    c.scaled = a / std::pow(2.0, c.squarings);

    const auto& b = c.scaled;
    c.a2 = b * b;
    c.a4 = c.a2 * c.a2;
    c.a6 = c.a2 * c.a4;

    c.w1 = kB[13] * c.a6 + kB[11] * c.a4 + kB[9] * c.a2;
    c.w2 = kB[7] * c.a6 + kB[5] * c.a4 + kB[3] * c.a2 + kB[1] * id;
    c.z1 = c.a6 * c.w1;
    c.u = b * (c.z1 + c.w2);
    c.w3 = kB[12] * c.a6 + kB[10] * c.a4 + kB[8] * c.a2;
    c.v = c.a6 * c.w3 + kB[6] * c.a6 + kB[4] * c.a4 + kB[2] * c.a2 + kB[0] * id;

    c.lu.compute(c.v - c.u);
    c.powers.reserve(static_cast<std::size_t>(c.squarings) + 1);
    c.powers.push_back(c.lu.solve(c.v + c.u));
    for (int s = 0; s < c.squarings; ++s) {
        const Eigen::MatrixXd& p = c.powers.back();
        c.powers.push_back(p * p);
    }
    return c;
}

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& a) {
    return exponential_cache(a).exponential();
}

Eigen::MatrixXd exponential_derivative(const ExpCache& c, const Eigen::MatrixXd& e) {
    require_finite(e, "exponential_derivative");
    if (e.rows() != c.dim || e.cols() != c.dim)
        throw config_error("exponential_derivative: direction has wrong shape");

    const Eigen::MatrixXd de = e / std::pow(2.0, c.squarings);
    const auto& b = c.scaled;

    // Differentiate the power chain a2, a4, a6.
    Eigen::MatrixXd m2 = de * b + b * de;
    Eigen::MatrixXd m4 = m2 * c.a2 + c.a2 * m2;
    Eigen::MatrixXd m6 = m2 * c.a4 + c.a2 * m4;

    Eigen::MatrixXd dw1 = kB[13] * m6 + kB[11] * m4 + kB[9] * m2;
    Eigen::MatrixXd dw2 = kB[7] * m6 + kB[5] * m4 + kB[3] * m2;
    Eigen::MatrixXd dz1 = m6 * c.w1 + c.a6 * dw1;
    Eigen::MatrixXd du = de * (c.z1 + c.w2) + b * (dz1 + dw2);
    Eigen::MatrixXd dw3 = kB[12] * m6 + kB[10] * m4 + kB[8] * m2;
    Eigen::MatrixXd dv = m6 * c.w3 + c.a6 * dw3 + kB[6] * m6 + kB[4] * m4 + kB[2] * m2;

    // (v - u) p = (v + u)  =>  (v - u) dp = (dv + du) - (dv - du) p.
    Eigen::MatrixXd dp = c.lu.solve(dv + du - (dv - du) * c.powers[0]);
    for (int s = 0; s < c.squarings; ++s) {
        const Eigen::MatrixXd& p = c.powers[static_cast<std::size_t>(s)];
        dp = dp * p + p * dp;
    }
    return dp;
}

Eigen::MatrixXd trivialize(const Eigen::VectorXd& coords, int dim, int cols) {
    if (cols < 1 || cols > dim) throw config_error("trivialize: column count out of range");
    return matrix_exponential(skew_embed(coords, dim)).leftCols(cols);
}

Eigen::VectorXd pullback_gradient(const ExpCache& cache, int cols,
                                  const Eigen::MatrixXd& frame_gradient) {
    const int dim = cache.dim;
    if (frame_gradient.rows() != dim || frame_gradient.cols() != cols)
        throw config_error("pullback_gradient: frame gradient has wrong shape");

    // dF/dA = L(A^T, G_pad); with the cache built at A we use
    // L(A^T, G_pad) = L(A, G_pad^T)^T.
    Eigen::MatrixXd padded_t = Eigen::MatrixXd::Zero(dim, dim);
    padded_t.topRows(cols) = frame_gradient.transpose();
    Eigen::MatrixXd w = exponential_derivative(cache, padded_t).transpose();

    Eigen::VectorXd grad(skew_dimension(dim));
    for (int i = 0; i < dim; ++i)
        for (int j = i + 1; j < dim; ++j) grad(coord_index(i, j, dim)) = w(i, j) - w(j, i);
    return grad;
}

Eigen::VectorXd pullback_gradient(const Eigen::VectorXd& coords, int dim, int cols,
                                  const Eigen::MatrixXd& frame_gradient) {
    ExpCache cache = exponential_cache(skew_embed(coords, dim));
    return pullback_gradient(cache, cols, frame_gradient);
}

}  // namespace rdmft::manifold
