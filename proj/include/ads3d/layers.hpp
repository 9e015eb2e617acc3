#pragma once

#include "ads3d/rng.hpp"
#include "ads3d/tensor.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ads3d::nn {

enum class Mode { Train, Eval };

/// Per-forward settings shared by every layer of a network.
struct Context {
    Mode mode = Mode::Eval;
    /// Seeds the dropout masks; identical keys give identical masks.
    std::uint64_t dropout_key = 0;
    /// When false, batch normalization leaves its running statistics untouched.
    bool update_running_stats = true;
};

/// Learnable tensor with its accumulated gradient.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;

    Param() = default;
    Param(std::string n, Shape shape) : name(std::move(n)), value(shape), grad(shape) {}
    void zero_grad() { grad.fill(0.0); }
};

/// Non-learnable state that is saved with the model (batchnorm running statistics).
struct Buffer {
    std::string name;
    Tensor* value;
};

using Triple = std::array<std::size_t, 3>;

/// Valid-window output length: floor((in - k) / s) + 1.
std::size_t window_out(std::size_t in, std::size_t k, std::size_t s);

class Layer {
public:
    virtual ~Layer() = default;
    virtual const std::string& name() const = 0;
    virtual Shape output_shape(const Shape& in) const = 0;
    virtual Tensor forward(const Tensor& x, const Context& ctx) = 0;
    /// Gradient w.r.t. the input of the last forward; accumulates parameter gradients.
    virtual Tensor backward(const Tensor& dy) = 0;
    virtual void collect_params(std::vector<Param*>&) {}
    virtual void collect_buffers(std::vector<Buffer>&) {}
};

/// Valid 3D cross-correlation plus bias over [B, F_in, D, H, W].
class Conv3d final : public Layer {
public:
    Conv3d(std::string name, std::size_t in_channels, std::size_t out_channels, Triple kernel,
           Triple stride = {1, 1, 1});

    const std::string& name() const override { return name_; }
    Shape output_shape(const Shape& in) const override;
    Tensor forward(const Tensor& x, const Context& ctx) override;
    Tensor backward(const Tensor& dy) override;
    void collect_params(std::vector<Param*>& out) override;

    /// Uniform in +-sqrt(1 / fan_in) for weights and bias.
    void init(CounterRng& rng);

    Param& weight() { return weight_; }
    Param& bias() { return bias_; }
    const Triple& kernel() const { return kernel_; }

private:
    std::string name_;
    std::size_t in_ch_, out_ch_;
    Triple kernel_, stride_;
    Param weight_, bias_;
    Tensor input_;
};

/// Per-feature-channel normalization over (B, D, H, W).
class BatchNorm3d final : public Layer {
public:
    BatchNorm3d(std::string name, std::size_t channels, double eps = 1e-5, double momentum = 0.1);

    const std::string& name() const override { return name_; }
    Shape output_shape(const Shape& in) const override { return in; }
    Tensor forward(const Tensor& x, const Context& ctx) override;
    Tensor backward(const Tensor& dy) override;
    void collect_params(std::vector<Param*>& out) override;
    void collect_buffers(std::vector<Buffer>& out) override;

    Param& gamma() { return gamma_; }
    Param& beta() { return beta_; }
    Tensor& running_mean() { return running_mean_; }
    Tensor& running_var() { return running_var_; }

private:
    std::string name_;
    std::size_t channels_;
    double eps_, momentum_;
    Param gamma_, beta_;
    Tensor running_mean_, running_var_;
    // Cached for backward.
    Tensor xhat_;
    std::vector<double> inv_std_;
    bool cached_train_ = false;
};

/// ELU with alpha = 1.
class Elu final : public Layer {
public:
    explicit Elu(std::string name) : name_(std::move(name)) {}
    const std::string& name() const override { return name_; }
    Shape output_shape(const Shape& in) const override { return in; }
    Tensor forward(const Tensor& x, const Context& ctx) override;
    Tensor backward(const Tensor& dy) override;

private:
    std::string name_;
    Tensor output_;
};

enum class PoolKind { Average, Max };

class Pool3d final : public Layer {
public:
    Pool3d(std::string name, PoolKind kind, Triple kernel, Triple stride);
    const std::string& name() const override { return name_; }
    Shape output_shape(const Shape& in) const override;
    Tensor forward(const Tensor& x, const Context& ctx) override;
    Tensor backward(const Tensor& dy) override;
    PoolKind kind() const { return kind_; }

private:
    std::string name_;
    PoolKind kind_;
    Triple kernel_, stride_;
    Shape in_shape_;
    std::vector<std::size_t> argmax_;
};

/// Inverted dropout: survivors are scaled by 1 / (1 - p).
class Dropout final : public Layer {
public:
    Dropout(std::string name, double p, std::uint64_t stream_id);
    const std::string& name() const override { return name_; }
    Shape output_shape(const Shape& in) const override { return in; }
    Tensor forward(const Tensor& x, const Context& ctx) override;
    Tensor backward(const Tensor& dy) override;
    double rate() const { return p_; }

private:
    std::string name_;
    double p_;
    std::uint64_t stream_id_;
    std::vector<double> mask_;
    bool active_ = false;
};

/// Affine map [B x n] -> [B x m] with weight [m x n].
class Dense final : public Layer {
public:
    Dense(std::string name, std::size_t in_features, std::size_t out_features);
    const std::string& name() const override { return name_; }
    Shape output_shape(const Shape& in) const override;
    Tensor forward(const Tensor& x, const Context& ctx) override;
    Tensor backward(const Tensor& dy) override;
    void collect_params(std::vector<Param*>& out) override;
    void init(CounterRng& rng);

    Param& weight() { return weight_; }
    Param& bias() { return bias_; }

private:
    std::string name_;
    std::size_t in_, out_;
    Param weight_, bias_;
    Tensor input_;
};

/// Row-wise softmax of a [B x m] tensor with max subtraction.
Tensor softmax(const Tensor& logits);

struct LossResult {
    double loss = 0;
    Tensor grad; // d loss / d logits
};

/// Mean over the batch of -log softmax(logits)[label].
LossResult cross_entropy(const Tensor& logits, std::span<const std::size_t> labels);

/// out[i] += sum_{k < klen} w[k] * in[i + k] for i < n.
void correlate_accumulate(const double* in, const double* w, std::size_t klen, double* out, std::size_t n);

// ---------------------------------------------------------------------------
// Finite-difference gradient checking.

struct GradTarget {
    std::string name;
    Tensor* value;   ///< Perturbed in place (restored afterwards).
    Tensor analytic; ///< Analytic gradient of the loss w.r.t. *value.
    std::vector<std::size_t> indices; ///< Elements to check; empty checks all.
};

struct GradCheckResult {
    double max_rel_error = 0;
    std::string worst_target;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
};

/// Compares analytic gradients against central differences of `loss` on the
/// selected elements of every target. The relative error of an element is
/// |a - n| / max(|a|, |n|, floor) where floor is 1e-3 of the largest checked
/// numeric gradient magnitude over all targets (and at least 1e-12).
GradCheckResult grad_check(const std::function<double()>& loss, std::span<GradTarget> targets, double eps = 1e-4);

} // namespace ads3d::nn
