#pragma once

#include "neuroplan/nn/net.hpp"

namespace neuroplan::nn {

struct AdamState
{
    Vector m;
    Vector v;
    std::uint64_t step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_params(std::size_t n, double lr = 1e-3);
};

/// One bias-corrected Adam update. Throws std::invalid_argument on length mismatch.
void adam_step(NetParams& params, const Gradient& grad, AdamState& state);

/// Same update applied to a raw parameter vector.
void adam_step(Vector& params, const Vector& grad, AdamState& state);

} // namespace neuroplan::nn
