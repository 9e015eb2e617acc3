#pragma once

#include "ads3d/layers.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace ads3d::attention {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Projection weights acting on the time axis of a [C x T] epoch.
struct AttentionParams {
    Matrix wq; // [T x d_k]
    Matrix wk; // [T x d_k]
    Matrix wv; // [T x d_v]

    std::size_t samples() const { return static_cast<std::size_t>(wq.rows()); }
    std::size_t d_k() const { return static_cast<std::size_t>(wq.cols()); }
    std::size_t d_v() const { return static_cast<std::size_t>(wv.cols()); }
    void validate() const;
};

struct Projections {
    Matrix q, k, v;
};

/// Q = X Wq, K = X Wk, V = X Wv.
Projections project_qkv(const Matrix& x, const AttentionParams& params);

/// Row-softmax(Q K^T / sqrt(d_k)), computed with per-row max subtraction.
Matrix attention_weights(const Matrix& q, const Matrix& k);

/// softmax(Q K^T / sqrt(d_k)) V. Throws "non_finite" on NaN/Inf input.
Matrix scaled_dot_attention(const Matrix& q, const Matrix& k, const Matrix& v);

/// scaled_dot_attention(project_qkv(x)); requires d_v == T.
Matrix channel_attention(const Matrix& x, const AttentionParams& params);

/// Trainable channel attention over a batch [B, C, T]. Parameters are named
/// "attn.wq", "attn.wk", "attn.wv".
class ChannelAttention {
public:
    ChannelAttention(std::size_t samples, std::size_t d_k);

    /// W_q uniform in +-sqrt(1 / T); W_k starts as a copy of W_q and W_v as the identity.
    void init(CounterRng& rng);

    nn::Tensor forward(const nn::Tensor& x);
    nn::Tensor backward(const nn::Tensor& dy);
    void collect_params(std::vector<nn::Param*>& out);

    AttentionParams params() const;
    std::size_t samples() const { return samples_; }
    std::size_t d_k() const { return d_k_; }

private:
    struct TrialCache {
        Matrix x, q, k, v, a;
    };

    std::size_t samples_, d_k_;
    nn::Param wq_, wk_, wv_;
    std::vector<TrialCache> cache_;
};

} // namespace ads3d::attention
