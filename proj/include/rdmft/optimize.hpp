#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace rdmft::optimize {

// Adaptive-moment first-order update with optional decoupled weight decay.
struct AdamParams {
    double learning_rate = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;
};

struct AdamState {
    Eigen::ArrayXd first_moment;
    Eigen::ArrayXd second_moment;
    long step = 0;

    void reset(Eigen::Index size) {
        first_moment = Eigen::ArrayXd::Zero(size);
        second_moment = Eigen::ArrayXd::Zero(size);
        step = 0;
    }
};

inline void adam_step(Eigen::VectorXd& x, const Eigen::VectorXd& grad, AdamState& state,
                      const AdamParams& p) {
    if (state.first_moment.size() != x.size()) state.reset(x.size());
    ++state.step;
    state.first_moment = p.beta1 * state.first_moment + (1.0 - p.beta1) * grad.array();
    state.second_moment =
        p.beta2 * state.second_moment + (1.0 - p.beta2) * grad.array().square();
    double correction1 = 1.0 - std::pow(p.beta1, static_cast<double>(state.step));
    double correction2 = 1.0 - std::pow(p.beta2, static_cast<double>(state.step));
    x.array() -= p.learning_rate * ((state.first_moment / correction1) /
                                        ((state.second_moment / correction2).sqrt() + p.epsilon) +
                                    p.weight_decay * x.array());
}

}  // namespace rdmft::optimize
