#pragma once

#include "neuroplan/models/model.hpp"
#include "neuroplan/nn/adam.hpp"

#include <span>
#include <vector>

namespace neuroplan {

/// One-step look-ahead pair: s = (c_t, c_goal, cloud) -> y = c_{t+1}.
struct TrainingSample
{
    Config c_t;
    Config c_goal;
    Config y;
    std::size_t cloud = 0; ///< index into the caller's cloud table
};

/// Expert demonstration inside workspace `workspace` (also its cloud index).
struct Demo
{
    std::size_t workspace = 0;
    Path path;
};

/// T pairs for a path of T + 1 states; c_goal is the last state.
[[nodiscard]] std::vector<TrainingSample> one_step_pairs(const Path& sigma, std::size_t cloud);

enum class TrainMode
{
    EndToEnd, ///< path loss backpropagated through both networks
    Separate, ///< encoder fitted as a contractive autoencoder, then frozen
};

struct TrainOptions
{
    TrainMode mode = TrainMode::EndToEnd;
    int epochs = 50;
    std::size_t batch_size = 100;
    double lr = 1e-3;
    double beta = 1.0; ///< rotation-loss weight for SE2 bodies
    int cae_epochs = 100;
    double cae_lambda = 1e-3;
    double cae_lr = 1e-3;
    std::uint64_t seed = 0;
};

struct TrainResult
{
    std::vector<double> loss_curve; ///< end-of-epoch path loss, dropout off, on up to 4096 training samples
    std::vector<double> cae_curve;  ///< CAE loss per epoch (separate mode)
};

/// Length of the trainable vector [pnet | enet] (enet part only when with_enet).
[[nodiscard]] std::size_t trainable_size(const MPNetModel& model, bool with_enet);

struct BatchGradient
{
    double loss = 0.0;
    nn::Vector flat; ///< layout [pnet | enet]
};

/// Mean path loss over `samples` and its gradient with respect to the trainable vector.
[[nodiscard]] BatchGradient batch_gradient(const MPNetModel& model, std::span<const TrainingSample> samples,
                                           std::span<const PointCloud> clouds, bool with_enet,
                                           nn::DropoutMode mode, double beta = 1.0);

/// Mean path loss with dropout off.
[[nodiscard]] double batch_loss(const MPNetModel& model, std::span<const TrainingSample> samples,
                                std::span<const PointCloud> clouds, double beta = 1.0);

/// One Adam step on the trainable vector.
void apply_gradient(MPNetModel& model, const nn::Vector& grad, nn::AdamState& state, bool with_enet);

/// Mirror-image decoder for contractive-autoencoder pretraining.
[[nodiscard]] nn::NetSpec decoder_spec(const nn::NetSpec& enet_spec);

/// Offline batch training. Throws std::invalid_argument when demos are empty.
TrainResult train_offline(MPNetModel& model, std::span<const Demo> demos, std::span<const PointCloud> clouds,
                          const TrainOptions& opts);

[[nodiscard]] const char* to_string(TrainMode m) noexcept;
[[nodiscard]] TrainMode train_mode_from_string(const std::string& s);

} // namespace neuroplan
