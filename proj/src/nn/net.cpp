#include "neuroplan/nn/net.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace neuroplan::nn {

namespace {

std::uint64_t next_revision()
{
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1, std::memory_order_relaxed);
}

void activate(const NetSpec& spec, Matrix& m)
{
    if (spec.activation == Activation::Relu)
        m = m.cwiseMax(0.0);
    else
        m = m.unaryExpr([](double v) { return v > 0.0 ? v : kPReluSlope * v; });
}

void activation_grad(const NetSpec& spec, const Matrix& pre, Matrix& g)
{
    if (spec.activation == Activation::Relu)
        g = (pre.array() > 0.0).select(g, 0.0);
    else
        g = (pre.array() > 0.0).select(g, kPReluSlope * g);
}

Matrix sample_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng)
{
    Matrix mask(rows, cols);
    const double keep_scale = 1.0 / (1.0 - p);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i)
        {
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            mask(i, j) = u >= p ? keep_scale : 0.0;
        }
    return mask;
}

} // namespace

NetSpec NetSpec::make(std::vector<std::size_t> sizes, Activation act, double dropout_p)
{
    NetSpec s;
    s.layer_sizes = std::move(sizes);
    s.activation = act;
    s.dropout.assign(s.layer_sizes.size() >= 2 ? s.layer_sizes.size() - 2 : 0, dropout_p);
    s.validate();
    return s;
}

void NetSpec::validate() const
{
    if (layer_sizes.size() < 2)
        throw std::invalid_argument("NetSpec: need at least 2 layer sizes");
    for (auto n : layer_sizes)
        if (n == 0)
            throw std::invalid_argument("NetSpec: layer sizes must be positive");
    if (dropout.size() != layer_sizes.size() - 2)
        throw std::invalid_argument("NetSpec: one dropout probability per hidden layer required");
    for (double p : dropout)
        if (!(p >= 0.0 && p < 1.0))
            throw std::invalid_argument("NetSpec: dropout probability must lie in [0, 1)");
}

std::size_t NetSpec::param_count() const
{
    return layer_offset(num_affine());
}

std::size_t NetSpec::layer_offset(std::size_t l) const
{
    std::size_t off = 0;
    for (std::size_t i = 0; i < l; ++i)
        off += layer_sizes[i] * layer_sizes[i + 1] + layer_sizes[i + 1];
    return off;
}

NetParams::NetParams(std::size_t n) : flat_(Vector::Zero(static_cast<Eigen::Index>(n))), revision_(next_revision()) {}

NetParams::NetParams(Vector flat) : flat_(std::move(flat)), revision_(next_revision()) {}

Vector& NetParams::mutable_flat() noexcept
{
    revision_ = next_revision();
    return flat_;
}

Eigen::Map<const RowMajorMatrix> NetParams::weights(const NetSpec& spec, std::size_t layer) const
{
    const auto n_in = static_cast<Eigen::Index>(spec.layer_sizes[layer]);
    const auto n_out = static_cast<Eigen::Index>(spec.layer_sizes[layer + 1]);
    return {flat_.data() + spec.layer_offset(layer), n_out, n_in};
}

Eigen::Map<const Vector> NetParams::bias(const NetSpec& spec, std::size_t layer) const
{
    const auto n_in = spec.layer_sizes[layer];
    const auto n_out = spec.layer_sizes[layer + 1];
    return {flat_.data() + spec.layer_offset(layer) + n_in * n_out, static_cast<Eigen::Index>(n_out)};
}

NetParams init_params(const NetSpec& spec, Rng& rng)
{
    spec.validate();
    Vector flat = Vector::Zero(static_cast<Eigen::Index>(spec.param_count()));
    for (std::size_t l = 0; l < spec.num_affine(); ++l)
    {
        const double n_in = static_cast<double>(spec.layer_sizes[l]);
        const double n_out = static_cast<double>(spec.layer_sizes[l + 1]);
        const double limit = std::sqrt(6.0 / (n_in + n_out));
        const auto off = static_cast<Eigen::Index>(spec.layer_offset(l));
        const auto count = static_cast<Eigen::Index>(n_in * n_out);
        for (Eigen::Index i = 0; i < count; ++i)
            flat[off + i] = uniform(rng, -limit, limit);
    }
    return NetParams(std::move(flat));
}

Matrix forward(const NetSpec& spec, const NetParams& params, const Matrix& input, DropoutMode mode,
               ForwardCache* cache)
{
    if (static_cast<std::size_t>(input.rows()) != spec.input_size())
        throw std::invalid_argument("forward: input length does not match the first layer");
    if (params.size() != spec.param_count())
        throw std::invalid_argument("forward: parameter count does not match the spec");
    if (cache)
    {
        cache->inputs.clear();
        cache->pre.clear();
        cache->masks.clear();
        cache->params = &params;
        cache->revision = params.revision();
        cache->spec = spec;
    }
    Matrix a = input;
    const std::size_t layers = spec.num_affine();
    for (std::size_t l = 0; l < layers; ++l)
    {
        Matrix z = params.weights(spec, l) * a;
        z.colwise() += params.bias(spec, l);
        if (cache)
            cache->inputs.push_back(std::move(a));
        if (l + 1 == layers)
            return z;
        if (cache)
            cache->pre.push_back(z);
        activate(spec, z);
        if (mode.active() && spec.dropout[l] > 0.0)
        {
            Matrix mask = sample_mask(z.rows(), z.cols(), spec.dropout[l], *mode.rng);
            z.array() *= mask.array();
            if (cache)
                cache->masks.push_back(std::move(mask));
        }
        else if (cache)
        {
            cache->masks.emplace_back();
        }
        a = std::move(z);
    }
    return a;
}

Vector forward(const NetSpec& spec, const NetParams& params, const Vector& input, DropoutMode mode,
               ForwardCache* cache)
{
    Matrix in = input;
    return forward(spec, params, in, mode, cache).col(0);
}

Gradient backward(const NetSpec& spec, const NetParams& params, const ForwardCache& cache, const Matrix& output_grad,
                  Matrix* input_grad)
{
    if (cache.params != &params || cache.revision != params.revision() || !(cache.spec == spec))
        throw std::logic_error("backward: stale forward cache");
    const std::size_t layers = spec.num_affine();
    if (cache.inputs.size() != layers)
        throw std::logic_error("backward: incomplete forward cache");
    if (static_cast<std::size_t>(output_grad.rows()) != spec.output_size() ||
        output_grad.cols() != cache.inputs.front().cols())
        throw std::invalid_argument("backward: output gradient shape mismatch");

    Gradient grad = Gradient::zeros(params.size());
    Matrix g = output_grad;
    for (std::size_t l = layers; l-- > 0;)
    {
        const auto n_in = static_cast<Eigen::Index>(spec.layer_sizes[l]);
        const auto n_out = static_cast<Eigen::Index>(spec.layer_sizes[l + 1]);
        const auto off = static_cast<Eigen::Index>(spec.layer_offset(l));
        Eigen::Map<RowMajorMatrix> gw(grad.flat.data() + off, n_out, n_in);
        Eigen::Map<Vector> gb(grad.flat.data() + off + n_out * n_in, n_out);
        gw.noalias() = g * cache.inputs[l].transpose();
        gb = g.rowwise().sum();
        if (l == 0 && input_grad == nullptr)
            break;
        Matrix down = params.weights(spec, l).transpose() * g;
        if (l == 0)
        {
            *input_grad = std::move(down);
            break;
        }
        const Matrix& mask = cache.masks[l - 1];
        if (mask.size() != 0)
            down.array() *= mask.array();
        activation_grad(spec, cache.pre[l - 1], down);
        g = std::move(down);
    }
    return grad;
}

const char* to_string(Activation a) noexcept
{
    return a == Activation::Relu ? "relu" : "prelu";
}

Activation activation_from_string(const std::string& s)
{
    if (s == "relu")
        return Activation::Relu;
    if (s == "prelu")
        return Activation::PRelu;
    throw std::invalid_argument("unknown activation: " + s);
}

} // namespace neuroplan::nn
