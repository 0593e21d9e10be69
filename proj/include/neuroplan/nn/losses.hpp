#pragma once

#include "neuroplan/cspace/types.hpp"
#include "neuroplan/nn/net.hpp"

#include <span>
#include <vector>

namespace neuroplan::nn {

struct LossValue
{
    double value = 0.0;
    Matrix grad; ///< d loss / d prediction, one column per term
};

/// (1 / N) * sum_j ||pred_j - target_j||^2 over the N columns.
[[nodiscard]] LossValue mse_loss(const Matrix& pred, const Matrix& target);

/// Waypoint form of the path loss; grads[j] is d loss / d pred[j].
struct PathLoss
{
    double value = 0.0;
    std::vector<Vector> grads;
};
[[nodiscard]] PathLoss mse_path_loss(std::span<const Config> pred, std::span<const Config> target);

/// ||q_hat / ||q_hat|| - q||^2 with the gradient taken through the normalization.
/// Works for any length; 4 for quaternions, 2 for planar (cos, sin) rotations.
/// Throws std::invalid_argument when ||q_hat|| < 1e-9.
struct RotationLoss
{
    double value = 0.0;
    Vector grad;
};
[[nodiscard]] RotationLoss quaternion_loss(const Vector& pred_q, const Vector& target_q);

/// Rigid-body waypoint loss l_p + beta * l_q: position rows [0, split) use
/// mse_loss, rotation rows [split, end) use the normalized rotation loss, both
/// averaged over columns.
[[nodiscard]] LossValue rigid_body_loss(const Matrix& pred, const Matrix& target, Eigen::Index split, double beta = 1.0);

struct CaeLoss
{
    double value = 0.0;
    double reconstruction = 0.0;
    Gradient enc_grad;
    Gradient dec_grad;
};

/// Contractive-autoencoder objective over a batch of point clouds (columns):
/// mean squared reconstruction error plus lambda times the squared encoder
/// weights (biases excluded). Dropout is off in both networks.
[[nodiscard]] CaeLoss cae_loss(const NetSpec& enc_spec, const NetSpec& dec_spec, const NetParams& enc_params,
                               const NetParams& dec_params, const Matrix& batch, double lambda);

/// lambda * sum of squared weights (no biases); adds the gradient into `grad` when given.
double weight_penalty(const NetSpec& spec, const NetParams& params, double lambda, Gradient* grad = nullptr);

} // namespace neuroplan::nn
