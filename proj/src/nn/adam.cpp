#include "neuroplan/nn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace neuroplan::nn {

AdamState AdamState::for_params(std::size_t n, double lr)
{
    AdamState s;
    s.m = Vector::Zero(static_cast<Eigen::Index>(n));
    s.v = Vector::Zero(static_cast<Eigen::Index>(n));
    s.lr = lr;
    return s;
}

void adam_step(Vector& params, const Vector& grad, AdamState& state)
{
    if (params.size() != grad.size())
        throw std::invalid_argument("adam_step: gradient length differs from parameters");
    if (state.m.size() == 0 && state.v.size() == 0)
    {
        state.m = Vector::Zero(params.size());
        state.v = Vector::Zero(params.size());
    }
    if (state.m.size() != params.size() || state.v.size() != params.size())
        throw std::invalid_argument("adam_step: moment vectors do not match parameters");

    ++state.step;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseAbs2();
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    params.array() -= state.lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + state.eps);
}

void adam_step(NetParams& params, const Gradient& grad, AdamState& state)
{
    adam_step(params.mutable_flat(), grad.flat, state);
}

} // namespace neuroplan::nn
