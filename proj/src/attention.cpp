#include "ads3d/attention.hpp"

#include "ads3d/error.hpp"

#include <cmath>

namespace ads3d::attention {
namespace {

using MapC = Eigen::Map<const Matrix>;
using Map = Eigen::Map<Matrix>;

void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) throw Error("non_finite", std::string("non-finite values in ") + what);
}

} // namespace

void AttentionParams::validate() const {
    if (wq.cols() < 1 || wv.cols() < 1) throw Error("shape_mismatch", "attention: d_k and d_v must be >= 1");
    if (wk.rows() != wq.rows() || wv.rows() != wq.rows() || wk.cols() != wq.cols())
        throw Error("shape_mismatch", "attention: Wq, Wk, Wv disagree on T or d_k");
}

Projections project_qkv(const Matrix& x, const AttentionParams& params) {
    params.validate();
    if (static_cast<std::size_t>(x.cols()) != params.samples())
        throw Error("shape_mismatch", "attention: input has " + std::to_string(x.cols()) + " samples, weights expect " +
                                          std::to_string(params.samples()));
    return {x * params.wq, x * params.wk, x * params.wv};
}

Matrix attention_weights(const Matrix& q, const Matrix& k) {
    if (q.cols() != k.cols() || q.rows() != k.rows())
        throw Error("shape_mismatch", "attention: Q and K must both be [C x d_k]");
    require_finite(q, "Q");
    require_finite(k, "K");
    Matrix s = (q * k.transpose()) / std::sqrt(static_cast<double>(q.cols()));
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        s.row(i).array() -= s.row(i).maxCoeff();
        s.row(i) = s.row(i).array().exp().matrix();
        s.row(i) /= s.row(i).sum();
    }
    return s;
}

Matrix scaled_dot_attention(const Matrix& q, const Matrix& k, const Matrix& v) {
    if (v.rows() != q.rows()) throw Error("shape_mismatch", "attention: V must have one row per channel");
    require_finite(v, "V");
    return attention_weights(q, k) * v;
}

Matrix channel_attention(const Matrix& x, const AttentionParams& params) {
    if (params.d_v() != params.samples())
        throw Error("shape_mismatch", "channel attention requires d_v == T");
    auto p = project_qkv(x, params);
    return scaled_dot_attention(p.q, p.k, p.v);
}

// ---------------------------------------------------------------------------

ChannelAttention::ChannelAttention(std::size_t samples, std::size_t d_k)
    : samples_(samples), d_k_(d_k), wq_("attn.wq", {samples, d_k}), wk_("attn.wk", {samples, d_k}),
      wv_("attn.wv", {samples, samples}) {}

void ChannelAttention::init(CounterRng& rng) {
    const double bound = std::sqrt(1.0 / static_cast<double>(samples_));
    for (double& v : wq_.value.values()) v = rng.uniform(-bound, bound);
    wk_.value = wq_.value;
    wv_.value.fill(0.0);
    for (std::size_t i = 0; i < samples_; ++i) wv_.value[i * samples_ + i] = 1.0;
}

void ChannelAttention::collect_params(std::vector<nn::Param*>& out) {
    out.push_back(&wq_);
    out.push_back(&wk_);
    out.push_back(&wv_);
}

AttentionParams ChannelAttention::params() const {
    return {MapC(wq_.value.data(), samples_, d_k_), MapC(wk_.value.data(), samples_, d_k_),
            MapC(wv_.value.data(), samples_, samples_)};
}

nn::Tensor ChannelAttention::forward(const nn::Tensor& x) {
    if (x.rank() != 3 || x.dim(2) != samples_)
        throw Error("shape_mismatch", "attn: expected [B, C, " + std::to_string(samples_) + "], got " +
                                          nn::to_string(x.shape()));
    const std::size_t B = x.dim(0), C = x.dim(1), T = samples_;
    const MapC wq(wq_.value.data(), T, d_k_), wk(wk_.value.data(), T, d_k_), wv(wv_.value.data(), T, T);
    nn::Tensor y(x.shape());
    cache_.assign(B, {});
    for (std::size_t b = 0; b < B; ++b) {
        auto& c = cache_[b];
        c.x = MapC(x.data() + b * C * T, C, T);
        require_finite(c.x, "attention input");
        c.q.noalias() = c.x * wq;
        c.k.noalias() = c.x * wk;
        c.v.noalias() = c.x * wv;
        c.a = attention_weights(c.q, c.k);
        Map(y.data() + b * C * T, C, T).noalias() = c.a * c.v;
    }
    return y;
}

nn::Tensor ChannelAttention::backward(const nn::Tensor& dy) {
    const std::size_t B = cache_.size();
    if (dy.rank() != 3 || dy.dim(0) != B || dy.dim(2) != samples_)
        throw Error("shape_mismatch", "attn: gradient shape mismatch");
    const std::size_t C = dy.dim(1), T = samples_;
    const MapC wq(wq_.value.data(), T, d_k_), wk(wk_.value.data(), T, d_k_), wv(wv_.value.data(), T, T);
    Map gq(wq_.grad.data(), T, d_k_), gk(wk_.grad.data(), T, d_k_), gv(wv_.grad.data(), T, T);
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(d_k_));
    nn::Tensor dx(dy.shape());
    for (std::size_t b = 0; b < B; ++b) {
        const auto& c = cache_[b];
        const MapC g(dy.data() + b * C * T, C, T);
        const Matrix da = g * c.v.transpose();
        const Matrix dv = c.a.transpose() * g;
        Matrix ds = c.a.cwiseProduct(da);
        const Eigen::VectorXd rows = ds.rowwise().sum();
        ds = c.a.cwiseProduct(da - rows.replicate(1, ds.cols()));
        const Matrix dq = (ds * c.k) * inv_sqrt_dk;
        const Matrix dk = (ds.transpose() * c.q) * inv_sqrt_dk;
        gq.noalias() += c.x.transpose() * dq;
        gk.noalias() += c.x.transpose() * dk;
        gv.noalias() += c.x.transpose() * dv;
        Map out(dx.data() + b * C * T, C, T);
        out.noalias() = dq * wq.transpose();
        out.noalias() += dk * wk.transpose();
        out.noalias() += dv * wv.transpose();
    }
    return dx;
}

} // namespace ads3d::attention
