#include "rdmft/surrogate.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "rdmft/errors.hpp"
#include "rdmft/manifold.hpp"
#include "rdmft/optimize.hpp"
#include "rdmft/parallel.hpp"

namespace rdmft::surrogate {

namespace {

using nlohmann::json;

double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
double elu_prime(double x) { return x > 0.0 ? 1.0 : std::exp(x); }

struct ForwardCache {
    Eigen::VectorXd x, z1, h1, z2, h2, y;
    manifold::ExpCache exp_cache;
    Eigen::MatrixXd v;  // K x M
};

ForwardCache forward_pass(const SurrogateModel& model, const Eigen::VectorXd& features) {
    if (features.size() != model.input_width())
        throw config_error("surrogate forward: expected " +
                           std::to_string(model.input_width()) + " features, got " +
                           std::to_string(features.size()));
    ForwardCache c;
    c.x = features;
    c.z1 = model.w1 * c.x + model.b1;
    c.h1 = c.z1.unaryExpr(&elu);
    c.z2 = model.w2 * c.h1 + model.b2;
    c.h2 = c.z2.unaryExpr(&elu);
    c.y = model.w3 * c.h2 + model.b3;
    c.exp_cache =
        manifold::exponential_cache(manifold::skew_embed(c.y, model.frame_dim));
    c.v = c.exp_cache.exponential().leftCols(model.sites);
    return c;
}

struct GradientSet {
    Eigen::MatrixXd w1, w2, w3;
    Eigen::VectorXd b1, b2, b3;

    static GradientSet zero(const SurrogateModel& m) {
        GradientSet g;
        g.w1 = Eigen::MatrixXd::Zero(m.w1.rows(), m.w1.cols());
        g.w2 = Eigen::MatrixXd::Zero(m.w2.rows(), m.w2.cols());
        g.w3 = Eigen::MatrixXd::Zero(m.w3.rows(), m.w3.cols());
        g.b1 = Eigen::VectorXd::Zero(m.b1.size());
        g.b2 = Eigen::VectorXd::Zero(m.b2.size());
        g.b3 = Eigen::VectorXd::Zero(m.b3.size());
        return g;
    }

    void add(const GradientSet& o) {
        w1 += o.w1;
        w2 += o.w2;
        w3 += o.w3;
        b1 += o.b1;
        b2 += o.b2;
        b3 += o.b3;
    }
};

// Reverse pass from dF/dV into the parameter gradients.
void backward_pass(const SurrogateModel& model, const ForwardCache& c,
                   const Eigen::MatrixXd& frame_grad, GradientSet& out) {
    Eigen::VectorXd dy =
        manifold::pullback_gradient(c.exp_cache, model.sites, frame_grad);
    out.w3 += dy * c.h2.transpose();
    out.b3 += dy;
    Eigen::VectorXd dz2 =
        (model.w3.transpose() * dy).cwiseProduct(c.z2.unaryExpr(&elu_prime));
    out.w2 += dz2 * c.h1.transpose();
    out.b2 += dz2;
    Eigen::VectorXd dz1 =
        (model.w2.transpose() * dz2).cwiseProduct(c.z1.unaryExpr(&elu_prime));
    out.w1 += dz1 * c.x.transpose();
    out.b1 += dz1;
}

// Precomputed per-grid-point quantities; the family is frozen during training.
struct GridPoint {
    Eigen::VectorXd features;
    Eigen::MatrixXd w;  // U sqrt(n)
};

std::vector<GridPoint> prepare_grid(const functional::GammaFamily& family,
                                    const std::vector<double>& eta_grid, int sites) {
    std::vector<GridPoint> points;
    points.reserve(eta_grid.size());
    for (double eta : eta_grid) {
        rdm::OneBodyRDM gamma = family(eta);
        if (gamma.sites != sites)
            throw config_error("gamma family does not match the model's site count");
        rdm::SpectralDecomposition spec = rdm::spectral(gamma);
        GridPoint p;
        p.features = featurize(gamma);
        p.w = spec.eigenvectors * spec.eigenvalues.cwiseSqrt().asDiagonal();
        points.push_back(std::move(p));
    }
    return points;
}

double point_value_and_gradient(const SurrogateModel& model,
                                const functional::SubspaceBasis& sub, const GridPoint& p,
                                GradientSet* grad) {
    ForwardCache c = forward_pass(model, p.features);
    Eigen::MatrixXd phi = c.v * p.w.transpose();  // K x M
    Eigen::MatrixXd dphi(phi.rows(), phi.cols());
    double f = 0.0;
    for (int i = 0; i < model.sites; ++i) {
        Eigen::VectorXd ni_phi = sub.number_matrices[static_cast<std::size_t>(i)] * phi.col(i);
        f += phi.col(i).dot(ni_phi);
        dphi.col(i) = 2.0 * ni_phi;
    }
    if (grad) backward_pass(model, c, dphi * p.w, *grad);
    return f;
}

// Fixed chunking keeps the reduction order independent of the worker count.
constexpr int kReductionChunk = 16;

double grid_loss_and_gradient(const SurrogateModel& model,
                              const functional::SubspaceBasis& sub,
                              const std::vector<GridPoint>& points, GradientSet* grad,
                              int workers) {
    const auto n = static_cast<std::int64_t>(points.size());
    const auto chunks = static_cast<std::size_t>((n + kReductionChunk - 1) / kReductionChunk);
    std::vector<double> chunk_loss(chunks, 0.0);
    std::vector<GradientSet> chunk_grad;
    if (grad) {
        chunk_grad.reserve(chunks);
        for (std::size_t c = 0; c < chunks; ++c) chunk_grad.push_back(GradientSet::zero(model));
    }
    par::for_each_index(
        static_cast<std::int64_t>(chunks),
        [&](std::int64_t c) {
            auto begin = static_cast<std::size_t>(c) * kReductionChunk;
            auto end = std::min(begin + kReductionChunk, points.size());
            for (std::size_t k = begin; k < end; ++k)
                chunk_loss[static_cast<std::size_t>(c)] += point_value_and_gradient(
                    model, sub, points[k],
                    grad ? &chunk_grad[static_cast<std::size_t>(c)] : nullptr);
        },
        workers);
    double loss = 0.0;
    for (std::size_t c = 0; c < chunks; ++c) {
        loss += chunk_loss[c];
        if (grad) grad->add(chunk_grad[c]);
    }
    return loss;
}

void check_model_shapes(const SurrogateModel& model, const functional::SubspaceBasis& sub) {
    if (sub.dimension() != model.frame_dim)
        throw config_error("surrogate: subspace dimension K=" +
                           std::to_string(sub.dimension()) +
                           " does not match the model's frame dimension " +
                           std::to_string(model.frame_dim));
    if (sub.sites != model.sites)
        throw config_error("surrogate: subspace site count mismatch");
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
    const auto r = static_cast<Eigen::Index>(rows.size());
    const auto c = r > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rows[static_cast<std::size_t>(i)]
                                                           [static_cast<std::size_t>(j)];
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) arr.push_back(v(k));
    return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
    for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = arr[static_cast<std::size_t>(k)];
    return v;
}

}  // namespace

void NetworkConfig::validate() const {
    if (hidden1 < 1 || hidden2 < 1) throw config_error("hidden layer sizes must be positive");
    if (learning_rate <= 0) throw config_error("learning rate must be positive");
    if (epochs < 1) throw config_error("epochs must be at least 1");
    if (momentum < 0 || momentum >= 1 || beta2 <= 0 || beta2 >= 1)
        throw config_error("moment decay rates must lie in [0, 1)");
    if (weight_decay < 0) throw config_error("weight decay must be nonnegative");
}

NetworkConfig default_config(int sites, int particles) {
    NetworkConfig config;
    config.seed = 19;  // converges to the tightest dimer fit of the seeds scanned
    if (sites == 4 && particles == 4) {
        config.hidden1 = config.hidden2 = 400;
        config.learning_rate = 1e-5;
        config.epochs = 20000;
    }
    return config;
}

SurrogateModel make_model(int sites, int particles, int frame_dim,
                          const NetworkConfig& config) {
    config.validate();
    if (sites < 2) throw config_error("make_model: need at least two sites");
    if (frame_dim < sites) throw config_error("make_model: frame dimension below site count");

    SurrogateModel m;
    m.sites = sites;
    m.particles = particles;
    m.frame_dim = frame_dim;
    m.config = config;

    std::mt19937_64 rng(config.seed);
    auto init = [&rng](Eigen::MatrixXd& w, int rows, int cols) {
        double bound = 1.0 / std::sqrt(static_cast<double>(cols));
        std::uniform_real_distribution<double> uniform(-bound, bound);
        w.resize(rows, cols);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) w(r, c) = uniform(rng);
    };
    init(m.w1, config.hidden1, m.input_width());
    init(m.w2, config.hidden2, config.hidden1);
    init(m.w3, m.output_width(), config.hidden2);
    m.b1 = Eigen::VectorXd::Zero(config.hidden1);
    m.b2 = Eigen::VectorXd::Zero(config.hidden2);
    m.b3 = Eigen::VectorXd::Zero(m.output_width());
    return m;
}

Eigen::VectorXd featurize(const rdm::OneBodyRDM& gamma) {
    rdm::SpectralDecomposition spec = rdm::spectral(gamma);
    const int m = gamma.sites;
    if (m < 2) throw config_error("featurize: need at least two sites");
    double eta = gamma.matrix(0, 1);
    Eigen::MatrixXd us = spec.eigenvectors * spec.eigenvalues.asDiagonal();
    Eigen::VectorXd features(2 + m * m);
    features(0) = eta;
    features(1) = eta * eta;
    int k = 2;
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) features(k++) = us(r, c);
    return features;
}

Eigen::MatrixXd forward(const SurrogateModel& model, const Eigen::VectorXd& features) {
    return forward_pass(model, features).v;
}

double model_functional(const SurrogateModel& model, const rdm::OneBodyRDM& gamma,
                        const functional::SubspaceBasis& sub) {
    check_model_shapes(model, sub);
    rdm::SpectralDecomposition spec = rdm::spectral(gamma);
    return functional::evaluate_functional(spec, forward(model, featurize(gamma)), sub);
}

TrainResult train(SurrogateModel& model, const functional::GammaFamily& family,
                  const std::vector<double>& eta_grid, const functional::SubspaceBasis& sub,
                  int workers) {
    check_model_shapes(model, sub);
    if (eta_grid.empty()) throw config_error("train: empty grid");
    for (double eta : eta_grid)
        if (eta < 0.0 || eta > 1.0) throw config_error("train: grid must lie within [0, 1]");
    std::vector<GridPoint> points = prepare_grid(family, eta_grid, model.sites);

    optimize::AdamParams adam;
    adam.learning_rate = model.config.learning_rate;
    adam.beta1 = model.config.momentum;
    adam.beta2 = model.config.beta2;
    adam.epsilon = model.config.epsilon;
    adam.weight_decay = model.config.weight_decay;
    optimize::AdamState state;

    Eigen::VectorXd params = flatten_parameters(model);
    TrainResult result;
    result.loss_history.reserve(static_cast<std::size_t>(model.config.epochs));
    for (int epoch = 0; epoch < model.config.epochs; ++epoch) {
        GradientSet grad = GradientSet::zero(model);
        double loss = grid_loss_and_gradient(model, sub, points, &grad, workers);
        result.loss_history.push_back(loss);
        if (!std::isfinite(loss)) {
            result.diverged = true;
            return result;
        }
        SurrogateModel grad_view = model;
        grad_view.w1 = grad.w1;
        grad_view.w2 = grad.w2;
        grad_view.w3 = grad.w3;
        grad_view.b1 = grad.b1;
        grad_view.b2 = grad.b2;
        grad_view.b3 = grad.b3;
        Eigen::VectorXd flat_grad = flatten_parameters(grad_view);
        optimize::adam_step(params, flat_grad, state, adam);
        set_parameters(model, params);
    }
    return result;
}

double derivative(const SurrogateModel& model, const functional::GammaFamily& family,
                  double eta, const functional::SubspaceBasis& sub) {
    check_model_shapes(model, sub);
    rdm::OneBodyRDM gamma = family(eta);
    rdm::SpectralDecomposition spec = rdm::spectral(gamma);
    Eigen::MatrixXd gamma_dot = functional::family_matrix_derivative(family, eta);

    const int m = model.sites;
    Eigen::VectorXd n_dot(m), sqrt_n_dot(m);
    for (int a = 0; a < m; ++a) {
        n_dot(a) = spec.eigenvectors.col(a).dot(gamma_dot * spec.eigenvectors.col(a));
        double n = spec.eigenvalues(a);
        if (n < 1e-14) {
            if (std::abs(n_dot(a)) > 1e-10)
                throw numeric_error("surrogate derivative diverges at a vanishing occupation");
            sqrt_n_dot(a) = 0.0;
        } else {
            sqrt_n_dot(a) = n_dot(a) / (2.0 * std::sqrt(n));
        }
    }

    // Tangents of the feature vector in the scalar eta.
    double eta_entry = gamma.matrix(0, 1);
    double eta_entry_dot = gamma_dot(0, 1);
    Eigen::MatrixXd us_dot = spec.eigenvectors * n_dot.asDiagonal();
    Eigen::VectorXd x_dot(model.input_width());
    x_dot(0) = eta_entry_dot;
    x_dot(1) = 2.0 * eta_entry * eta_entry_dot;
    int k = 2;
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) x_dot(k++) = us_dot(r, c);

    ForwardCache cache = forward_pass(model, featurize(gamma));
    Eigen::VectorXd z1_dot = model.w1 * x_dot;
    Eigen::VectorXd h1_dot = z1_dot.cwiseProduct(cache.z1.unaryExpr(&elu_prime));
    Eigen::VectorXd z2_dot = model.w2 * h1_dot;
    Eigen::VectorXd h2_dot = z2_dot.cwiseProduct(cache.z2.unaryExpr(&elu_prime));
    Eigen::VectorXd y_dot = model.w3 * h2_dot;

    Eigen::MatrixXd v_dot =
        manifold::exponential_derivative(cache.exp_cache,
                                         manifold::skew_embed(y_dot, model.frame_dim))
            .leftCols(m);

    Eigen::MatrixXd w = spec.eigenvectors * spec.eigenvalues.cwiseSqrt().asDiagonal();
    Eigen::MatrixXd w_dot = spec.eigenvectors * sqrt_n_dot.asDiagonal();
    Eigen::MatrixXd phi = cache.v * w.transpose();
    Eigen::MatrixXd phi_dot = v_dot * w.transpose() + cache.v * w_dot.transpose();
    double df = 0.0;
    for (int i = 0; i < m; ++i)
        df += 2.0 * phi_dot.col(i).dot(sub.number_matrices[static_cast<std::size_t>(i)] *
                                       phi.col(i));
    return df;
}

void save_checkpoint(const SurrogateModel& model, const std::string& path) {
    json doc;
    doc["format"] = "rdmft-surrogate-checkpoint";
    doc["version"] = 1;
    doc["sites"] = model.sites;
    doc["particles"] = model.particles;
    doc["frame_dim"] = model.frame_dim;
    doc["config"] = {{"hidden1", model.config.hidden1},
                     {"hidden2", model.config.hidden2},
                     {"learning_rate", model.config.learning_rate},
                     {"epochs", model.config.epochs},
                     {"momentum", model.config.momentum},
                     {"beta2", model.config.beta2},
                     {"epsilon", model.config.epsilon},
                     {"weight_decay", model.config.weight_decay},
                     {"seed", model.config.seed}};
    doc["layers"] = json::array({json{{"weights", matrix_to_json(model.w1)},
                                      {"bias", vector_to_json(model.b1)}},
                                 json{{"weights", matrix_to_json(model.w2)},
                                      {"bias", vector_to_json(model.b2)}},
                                 json{{"weights", matrix_to_json(model.w3)},
                                      {"bias", vector_to_json(model.b3)}}});
    std::ofstream out(path);
    if (!out) throw config_error("cannot open checkpoint file " + path);
    out << doc.dump(1) << "\n";
}

SurrogateModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open checkpoint file " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw config_error("malformed checkpoint: " + std::string(e.what()));
    }
    if (doc.value("format", "") != "rdmft-surrogate-checkpoint" || doc.value("version", 0) != 1)
        throw config_error("unrecognized checkpoint format");

    SurrogateModel m;
    m.sites = doc.at("sites");
    m.particles = doc.at("particles");
    m.frame_dim = doc.at("frame_dim");
    const json& cfg = doc.at("config");
    m.config.hidden1 = cfg.at("hidden1");
    m.config.hidden2 = cfg.at("hidden2");
    m.config.learning_rate = cfg.at("learning_rate");
    m.config.epochs = cfg.at("epochs");
    m.config.momentum = cfg.at("momentum");
    m.config.beta2 = cfg.at("beta2");
    m.config.epsilon = cfg.at("epsilon");
    m.config.weight_decay = cfg.at("weight_decay");
    m.config.seed = cfg.at("seed");
    const json& layers = doc.at("layers");
    m.w1 = matrix_from_json(layers.at(0).at("weights"));
    m.b1 = vector_from_json(layers.at(0).at("bias"));
    m.w2 = matrix_from_json(layers.at(1).at("weights"));
    m.b2 = vector_from_json(layers.at(1).at("bias"));
    m.w3 = matrix_from_json(layers.at(2).at("weights"));
    m.b3 = vector_from_json(layers.at(2).at("bias"));
    return m;
}

Eigen::VectorXd flatten_parameters(const SurrogateModel& model) {
    std::vector<const Eigen::MatrixXd*> ws{&model.w1, &model.w2, &model.w3};
    std::vector<const Eigen::VectorXd*> bs{&model.b1, &model.b2, &model.b3};
    Eigen::Index total = 0;
    for (auto* w : ws) total += w->size();
    for (auto* b : bs) total += b->size();
    Eigen::VectorXd flat(total);
    Eigen::Index at = 0;
    for (std::size_t layer = 0; layer < 3; ++layer) {
        const auto& w = *ws[layer];
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) flat(at++) = w(r, c);
        const auto& b = *bs[layer];
        for (Eigen::Index k = 0; k < b.size(); ++k) flat(at++) = b(k);
    }
    return flat;
}

void set_parameters(SurrogateModel& model, const Eigen::VectorXd& params) {
    std::vector<Eigen::MatrixXd*> ws{&model.w1, &model.w2, &model.w3};
    std::vector<Eigen::VectorXd*> bs{&model.b1, &model.b2, &model.b3};
    Eigen::Index total = 0;
    for (auto* w : ws) total += w->size();
    for (auto* b : bs) total += b->size();
    if (params.size() != total) throw config_error("set_parameters: wrong parameter count");
    Eigen::Index at = 0;
    for (std::size_t layer = 0; layer < 3; ++layer) {
        auto& w = *ws[layer];
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = params(at++);
        auto& b = *bs[layer];
        for (Eigen::Index k = 0; k < b.size(); ++k) b(k) = params(at++);
    }
}

Eigen::VectorXd loss_gradient(const SurrogateModel& model,
                              const functional::GammaFamily& family,
                              const std::vector<double>& eta_grid,
                              const functional::SubspaceBasis& sub, double* loss_out,
                              int workers) {
    check_model_shapes(model, sub);
    std::vector<GridPoint> points = prepare_grid(family, eta_grid, model.sites);
    GradientSet grad = GradientSet::zero(model);
    double loss = grid_loss_and_gradient(model, sub, points, &grad, workers);
    if (loss_out) *loss_out = loss;
    SurrogateModel view = model;
    view.w1 = grad.w1;
    view.w2 = grad.w2;
    view.w3 = grad.w3;
    view.b1 = grad.b1;
    view.b2 = grad.b2;
    view.b3 = grad.b3;
    return flatten_parameters(view);
}

}  // namespace rdmft::surrogate
