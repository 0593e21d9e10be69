#include "neuroplan/models/training.hpp"

#include "neuroplan/nn/losses.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

namespace neuroplan {

namespace {

using nn::Matrix;
using nn::Vector;

// Training-loss curve is evaluated (dropout off) on at most this many fixed samples.
constexpr std::size_t kCurveSamples = 4096;

std::span<double> column(Matrix& m, Eigen::Index j)
{
    return {m.col(j).data(), static_cast<std::size_t>(m.rows())};
}

nn::LossValue path_loss(const MPNetModel& model, const Matrix& pred, const Matrix& target, double beta)
{
    if (model.robot.kind() == RobotKind::RigidSE2)
        return nn::rigid_body_loss(pred, target, 2, beta);
    return nn::mse_loss(pred, target);
}

struct Assembled
{
    Matrix clouds;                       ///< normalized clouds, one column per distinct cloud
    std::vector<Eigen::Index> cloud_col; ///< per sample column in `clouds`
    Matrix target;
};

Assembled assemble(const MPNetModel& model, std::span<const TrainingSample> samples,
                   std::span<const PointCloud> clouds)
{
    if (samples.empty())
        throw std::invalid_argument("batch: no samples");
    Assembled a;
    std::map<std::size_t, Eigen::Index> slot;
    for (const auto& s : samples)
    {
        if (s.cloud >= clouds.size())
            throw std::invalid_argument("batch: cloud index out of range");
        slot.emplace(s.cloud, static_cast<Eigen::Index>(slot.size()));
    }
    a.clouds.resize(static_cast<Eigen::Index>(model.enet_spec.input_size()), static_cast<Eigen::Index>(slot.size()));
    for (const auto& [idx, col] : slot)
    {
        if (clouds[idx].coords.size() != model.enet_spec.input_size())
            throw std::invalid_argument("batch: cloud size does not match the encoder input");
        a.clouds.col(col) = model.normalizer.normalize_cloud(clouds[idx]);
    }
    const auto n = static_cast<Eigen::Index>(samples.size());
    a.target.resize(static_cast<Eigen::Index>(model.pnet_spec.output_size()), n);
    a.cloud_col.reserve(samples.size());
    for (Eigen::Index j = 0; j < n; ++j)
    {
        const auto& s = samples[static_cast<std::size_t>(j)];
        a.cloud_col.push_back(slot.at(s.cloud));
        pnet_target(model, s.y, column(a.target, j));
    }
    return a;
}

Matrix pnet_inputs(const MPNetModel& model, std::span<const TrainingSample> samples, const Assembled& a,
                   const Matrix& z)
{
    const auto n = static_cast<Eigen::Index>(samples.size());
    Matrix in(static_cast<Eigen::Index>(model.pnet_spec.input_size()), n);
    for (Eigen::Index j = 0; j < n; ++j)
    {
        const auto& s = samples[static_cast<std::size_t>(j)];
        const Vector zj = z.col(a.cloud_col[static_cast<std::size_t>(j)]);
        pnet_input(model, zj, s.c_t, s.c_goal, column(in, j));
    }
    return in;
}

} // namespace

std::vector<TrainingSample> one_step_pairs(const Path& sigma, std::size_t cloud)
{
    std::vector<TrainingSample> out;
    if (sigma.size() < 2)
        return out;
    out.reserve(sigma.size() - 1);
    for (std::size_t t = 0; t + 1 < sigma.size(); ++t)
        out.push_back({sigma.states[t], sigma.end_state(), sigma.states[t + 1], cloud});
    return out;
}

std::size_t trainable_size(const MPNetModel& model, bool with_enet)
{
    return model.pnet.size() + (with_enet ? model.enet.size() : 0);
}

BatchGradient batch_gradient(const MPNetModel& model, std::span<const TrainingSample> samples,
                             std::span<const PointCloud> clouds, bool with_enet, nn::DropoutMode mode, double beta)
{
    const Assembled a = assemble(model, samples, clouds);
    nn::ForwardCache enet_cache;
    const Matrix z = nn::forward(model.enet_spec, model.enet, a.clouds, nn::DropoutMode::off(),
                                 with_enet ? &enet_cache : nullptr);
    const Matrix in = pnet_inputs(model, samples, a, z);

    nn::ForwardCache pnet_cache;
    const Matrix out = nn::forward(model.pnet_spec, model.pnet, in, mode, &pnet_cache);
    const nn::LossValue loss = path_loss(model, out, a.target, beta);

    BatchGradient g;
    g.loss = loss.value;
    g.flat.resize(static_cast<Eigen::Index>(trainable_size(model, with_enet)));
    Matrix in_grad;
    const nn::Gradient gp = nn::backward(model.pnet_spec, model.pnet, pnet_cache, loss.grad,
                                         with_enet ? &in_grad : nullptr);
    g.flat.head(gp.flat.size()) = gp.flat;
    if (with_enet)
    {
        const auto l = static_cast<Eigen::Index>(model.latent_dim());
        Matrix dz = Matrix::Zero(l, z.cols());
        for (Eigen::Index j = 0; j < in_grad.cols(); ++j)
            dz.col(a.cloud_col[static_cast<std::size_t>(j)]) += in_grad.col(j).head(l);
        const nn::Gradient ge = nn::backward(model.enet_spec, model.enet, enet_cache, dz);
        g.flat.tail(ge.flat.size()) = ge.flat;
    }
    return g;
}

double batch_loss(const MPNetModel& model, std::span<const TrainingSample> samples, std::span<const PointCloud> clouds,
                  double beta)
{
    const Assembled a = assemble(model, samples, clouds);
    const Matrix z = nn::forward(model.enet_spec, model.enet, a.clouds, nn::DropoutMode::off());
    const Matrix out = nn::forward(model.pnet_spec, model.pnet, pnet_inputs(model, samples, a, z),
                                   nn::DropoutMode::off());
    return path_loss(model, out, a.target, beta).value;
}

void apply_gradient(MPNetModel& model, const nn::Vector& grad, nn::AdamState& state, bool with_enet)
{
    const std::size_t n = trainable_size(model, with_enet);
    if (static_cast<std::size_t>(grad.size()) != n)
        throw std::invalid_argument("apply_gradient: gradient length does not match the trainable vector");
    Vector theta(static_cast<Eigen::Index>(n));
    const auto np = static_cast<Eigen::Index>(model.pnet.size());
    theta.head(np) = model.pnet.flat();
    if (with_enet)
        theta.tail(static_cast<Eigen::Index>(model.enet.size())) = model.enet.flat();
    nn::adam_step(theta, grad, state);
    model.pnet.mutable_flat() = theta.head(np);
    if (with_enet)
        model.enet.mutable_flat() = theta.tail(static_cast<Eigen::Index>(model.enet.size()));
}

nn::NetSpec decoder_spec(const nn::NetSpec& enet_spec)
{
    std::vector<std::size_t> sizes(enet_spec.layer_sizes.rbegin(), enet_spec.layer_sizes.rend());
    return nn::NetSpec::make(sizes, enet_spec.activation, 0.0);
}

TrainResult train_offline(MPNetModel& model, std::span<const Demo> demos, std::span<const PointCloud> clouds,
                          const TrainOptions& opts)
{
    if (demos.empty())
        throw std::invalid_argument("train_offline: no demonstrations");
    if (opts.batch_size == 0)
        throw std::invalid_argument("train_offline: batch size must be positive");

    std::vector<TrainingSample> samples;
    for (const auto& d : demos)
    {
        auto pairs = one_step_pairs(d.path, d.workspace);
        samples.insert(samples.end(), pairs.begin(), pairs.end());
    }
    if (samples.empty())
        throw std::invalid_argument("train_offline: demonstrations contain no transitions");

    Rng rng(opts.seed);
    TrainResult result;
    const bool with_enet = opts.mode == TrainMode::EndToEnd;

    if (opts.mode == TrainMode::Separate)
    {
        std::vector<std::size_t> used;
        for (const auto& d : demos)
            used.push_back(d.workspace);
        std::sort(used.begin(), used.end());
        used.erase(std::unique(used.begin(), used.end()), used.end());
        Matrix batch(static_cast<Eigen::Index>(model.enet_spec.input_size()), static_cast<Eigen::Index>(used.size()));
        for (std::size_t k = 0; k < used.size(); ++k)
        {
            if (used[k] >= clouds.size())
                throw std::invalid_argument("train_offline: cloud index out of range");
            batch.col(static_cast<Eigen::Index>(k)) = model.normalizer.normalize_cloud(clouds[used[k]]);
        }
        const nn::NetSpec dec_spec = decoder_spec(model.enet_spec);
        nn::NetParams dec = nn::init_params(dec_spec, rng);
        nn::AdamState enc_state = nn::AdamState::for_params(model.enet.size(), opts.cae_lr);
        nn::AdamState dec_state = nn::AdamState::for_params(dec.size(), opts.cae_lr);
        for (int e = 0; e < opts.cae_epochs; ++e)
        {
            const nn::CaeLoss l = nn::cae_loss(model.enet_spec, dec_spec, model.enet, dec, batch, opts.cae_lambda);
            result.cae_curve.push_back(l.value);
            nn::adam_step(model.enet, l.enc_grad, enc_state);
            nn::adam_step(dec, l.dec_grad, dec_state);
        }
    }

    nn::AdamState state = nn::AdamState::for_params(trainable_size(model, with_enet), opts.lr);
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<TrainingSample> probe = samples;
    if (probe.size() > kCurveSamples)
    {
        std::shuffle(probe.begin(), probe.end(), rng);
        probe.resize(kCurveSamples);
    }
    std::vector<TrainingSample> batch;
    for (int e = 0; e < opts.epochs; ++e)
    {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += opts.batch_size)
        {
            const std::size_t stop = std::min(order.size(), start + opts.batch_size);
            batch.clear();
            for (std::size_t k = start; k < stop; ++k)
                batch.push_back(samples[order[k]]);
            const BatchGradient g =
                batch_gradient(model, batch, clouds, with_enet, nn::DropoutMode::sampled(rng), opts.beta);
            apply_gradient(model, g.flat, state, with_enet);
        }
        result.loss_curve.push_back(batch_loss(model, probe, clouds, opts.beta));
    }
    return result;
}

const char* to_string(TrainMode m) noexcept
{
    return m == TrainMode::EndToEnd ? "end_to_end" : "separate";
}

TrainMode train_mode_from_string(const std::string& s)
{
    if (s == "end_to_end")
        return TrainMode::EndToEnd;
    if (s == "separate")
        return TrainMode::Separate;
    throw std::invalid_argument("unknown training mode: " + s);
}

} // namespace neuroplan
