#include "neuroplan/nn/losses.hpp"

#include <stdexcept>

namespace neuroplan::nn {

LossValue mse_loss(const Matrix& pred, const Matrix& target)
{
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw std::invalid_argument("mse_loss: shape mismatch");
    if (pred.cols() == 0)
        throw std::invalid_argument("mse_loss: empty input");
    const double n = static_cast<double>(pred.cols());
    Matrix diff = pred - target;
    LossValue out;
    out.value = diff.squaredNorm() / n;
    out.grad = (2.0 / n) * diff;
    return out;
}

PathLoss mse_path_loss(std::span<const Config> pred, std::span<const Config> target)
{
    if (pred.size() != target.size())
        throw std::invalid_argument("mse_path_loss: prediction and target counts differ");
    if (pred.empty())
        throw std::invalid_argument("mse_path_loss: empty input");
    const double n = static_cast<double>(pred.size());
    PathLoss out;
    out.grads.reserve(pred.size());
    for (std::size_t j = 0; j < pred.size(); ++j)
    {
        if (pred[j].dim() != target[j].dim())
            throw std::invalid_argument("mse_path_loss: dimension mismatch");
        Vector g(static_cast<Eigen::Index>(pred[j].dim()));
        for (std::size_t i = 0; i < pred[j].dim(); ++i)
        {
            const double d = pred[j][i] - target[j][i];
            out.value += d * d / n;
            g[static_cast<Eigen::Index>(i)] = 2.0 * d / n;
        }
        out.grads.push_back(std::move(g));
    }
    return out;
}

RotationLoss quaternion_loss(const Vector& pred_q, const Vector& target_q)
{
    if (pred_q.size() != target_q.size())
        throw std::invalid_argument("quaternion_loss: length mismatch");
    const double norm = pred_q.norm();
    if (norm < 1e-9)
        throw std::invalid_argument("quaternion_loss: prediction norm below 1e-9");
    const Vector u = pred_q / norm;
    const Vector du = 2.0 * (u - target_q);
    RotationLoss out;
    out.value = (u - target_q).squaredNorm();
    out.grad = (du - u * u.dot(du)) / norm;
    return out;
}

LossValue rigid_body_loss(const Matrix& pred, const Matrix& target, Eigen::Index split, double beta)
{
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw std::invalid_argument("rigid_body_loss: shape mismatch");
    if (split <= 0 || split >= pred.rows())
        throw std::invalid_argument("rigid_body_loss: split must separate position and rotation rows");
    LossValue pos = mse_loss(pred.topRows(split), target.topRows(split));
    const double n = static_cast<double>(pred.cols());
    const Eigen::Index rot_rows = pred.rows() - split;
    LossValue out;
    out.value = pos.value;
    out.grad.resize(pred.rows(), pred.cols());
    out.grad.topRows(split) = pos.grad;
    for (Eigen::Index j = 0; j < pred.cols(); ++j)
    {
        const RotationLoss r = quaternion_loss(pred.col(j).tail(rot_rows), target.col(j).tail(rot_rows));
        out.value += beta * r.value / n;
        out.grad.col(j).tail(rot_rows) = (beta / n) * r.grad;
    }
    return out;
}

double weight_penalty(const NetSpec& spec, const NetParams& params, double lambda, Gradient* grad)
{
    double total = 0.0;
    for (std::size_t l = 0; l < spec.num_affine(); ++l)
    {
        const auto w = params.weights(spec, l);
        total += w.squaredNorm();
        if (grad)
        {
            const auto off = static_cast<Eigen::Index>(spec.layer_offset(l));
            Eigen::Map<RowMajorMatrix> gw(grad->flat.data() + off, w.rows(), w.cols());
            gw += 2.0 * lambda * w;
        }
    }
    return lambda * total;
}

CaeLoss cae_loss(const NetSpec& enc_spec, const NetSpec& dec_spec, const NetParams& enc_params,
                 const NetParams& dec_params, const Matrix& batch, double lambda)
{
    if (lambda < 0.0)
        throw std::invalid_argument("cae_loss: lambda must be non-negative");
    if (batch.cols() == 0)
        throw std::invalid_argument("cae_loss: empty batch");
    if (enc_spec.output_size() != dec_spec.input_size() || dec_spec.output_size() != enc_spec.input_size())
        throw std::invalid_argument("cae_loss: encoder/decoder shapes do not chain");

    ForwardCache enc_cache, dec_cache;
    const Matrix z = forward(enc_spec, enc_params, batch, DropoutMode::off(), &enc_cache);
    const Matrix recon = forward(dec_spec, dec_params, z, DropoutMode::off(), &dec_cache);

    const double n = static_cast<double>(batch.cols());
    const Matrix diff = recon - batch;
    CaeLoss out;
    out.reconstruction = diff.squaredNorm() / n;

    Matrix dz;
    out.dec_grad = backward(dec_spec, dec_params, dec_cache, (2.0 / n) * diff, &dz);
    out.enc_grad = backward(enc_spec, enc_params, enc_cache, dz);
    out.value = out.reconstruction + weight_penalty(enc_spec, enc_params, lambda, &out.enc_grad);
    return out;
}

} // namespace neuroplan::nn
