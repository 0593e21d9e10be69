#pragma once

#include "neuroplan/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace neuroplan::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Activation
{
    Relu,
    PRelu, ///< leaky rectifier with a fixed negative slope of 0.25
};

inline constexpr double kPReluSlope = 0.25;

/// Fully connected architecture. Hidden layers use `activation` followed by
/// dropout; the output layer is affine.
struct NetSpec
{
    std::vector<std::size_t> layer_sizes;
    Activation activation = Activation::Relu;
    std::vector<double> dropout; ///< one probability per hidden layer

    /// Same dropout probability on every hidden layer.
    static NetSpec make(std::vector<std::size_t> sizes, Activation act = Activation::Relu, double dropout_p = 0.0);

    /// Throws std::invalid_argument unless >= 2 positive layer sizes and p in [0, 1) per hidden layer.
    void validate() const;

    [[nodiscard]] std::size_t num_affine() const noexcept { return layer_sizes.size() - 1; }
    [[nodiscard]] std::size_t input_size() const { return layer_sizes.front(); }
    [[nodiscard]] std::size_t output_size() const { return layer_sizes.back(); }
    /// Sum over layers of n_in * n_out + n_out.
    [[nodiscard]] std::size_t param_count() const;
    /// Offset of layer l's weight block inside the flat parameter vector (bias follows it).
    [[nodiscard]] std::size_t layer_offset(std::size_t l) const;

    friend bool operator==(const NetSpec&, const NetSpec&) = default;
};

/// Flat parameter vector: for each layer the n_out x n_in weight matrix in
/// row-major order, then the n_out biases. Every mutable access bumps the
/// revision so caches from earlier forward passes are detected as stale.
class NetParams
{
  public:
    NetParams() = default;
    explicit NetParams(std::size_t n);
    explicit NetParams(Vector flat);

    [[nodiscard]] const Vector& flat() const noexcept { return flat_; }
    [[nodiscard]] Vector& mutable_flat() noexcept;
    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(flat_.size()); }
    [[nodiscard]] std::uint64_t revision() const noexcept { return revision_; }

    [[nodiscard]] Eigen::Map<const RowMajorMatrix> weights(const NetSpec& spec, std::size_t layer) const;
    [[nodiscard]] Eigen::Map<const Vector> bias(const NetSpec& spec, std::size_t layer) const;

    friend bool operator==(const NetParams& a, const NetParams& b) { return a.flat_ == b.flat_; }

  private:
    Vector flat_;
    std::uint64_t revision_ = 0;
};

/// Same layout and length as the paired NetParams.
struct Gradient
{
    Vector flat;

    static Gradient zeros(std::size_t n) { return {Vector::Zero(static_cast<Eigen::Index>(n))}; }
    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(flat.size()); }
};

/// Dropout behaviour of a forward pass: off (deterministic, no rescaling) or
/// sampled (fresh Bernoulli(1 - p) mask, kept units scaled by 1 / (1 - p)).
struct DropoutMode
{
    Rng* rng = nullptr;

    static DropoutMode off() noexcept { return {}; }
    static DropoutMode sampled(Rng& r) noexcept { return {&r}; }
    [[nodiscard]] bool active() const noexcept { return rng != nullptr; }
};

/// Activations and masks recorded by forward() for backward().
struct ForwardCache
{
    std::vector<Matrix> inputs;      ///< input to each affine layer
    std::vector<Matrix> pre;         ///< pre-activations of hidden layers
    std::vector<Matrix> masks;       ///< scaled dropout masks (empty when dropout was off)
    const NetParams* params = nullptr;
    std::uint64_t revision = 0;
    NetSpec spec;
};

/// Uniform +-sqrt(6 / (n_in + n_out)) weights, zero biases.
[[nodiscard]] NetParams init_params(const NetSpec& spec, Rng& rng);

/// Batched forward pass; columns of `input` are samples.
/// Throws std::invalid_argument on input size mismatch.
[[nodiscard]] Matrix forward(const NetSpec& spec, const NetParams& params, const Matrix& input, DropoutMode mode,
                             ForwardCache* cache = nullptr);

[[nodiscard]] Vector forward(const NetSpec& spec, const NetParams& params, const Vector& input, DropoutMode mode,
                             ForwardCache* cache = nullptr);

/// Gradient of a scalar loss (summed over batch columns) whose derivative with
/// respect to the network output is `output_grad`. When `input_grad` is given it
/// receives d loss / d input. Throws std::logic_error on a stale or mismatched cache.
[[nodiscard]] Gradient backward(const NetSpec& spec, const NetParams& params, const ForwardCache& cache,
                                const Matrix& output_grad, Matrix* input_grad = nullptr);

[[nodiscard]] const char* to_string(Activation a) noexcept;
[[nodiscard]] Activation activation_from_string(const std::string& s);

} // namespace neuroplan::nn
