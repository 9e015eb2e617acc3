#include "ads3d/layers.hpp"

#include "ads3d/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ads3d::nn {
namespace {

void require_rank5(const Tensor& x, const std::string& layer) {
    if (x.rank() != 5)
        throw Error("shape_mismatch", layer + ": expected a rank-5 input, got " + to_string(x.shape()));
}

void uniform_fill(Tensor& t, double bound, CounterRng& rng) {
    for (double& v : t.values()) v = rng.uniform(-bound, bound);
}

} // namespace

std::size_t window_out(std::size_t in, std::size_t k, std::size_t s) { return (in - k) / s + 1; }

namespace {

typedef double Lane8 __attribute__((vector_size(64)));

inline Lane8 load8(const double* p) {
    Lane8 v;
    __builtin_memcpy(&v, p, sizeof v);
    return v;
}

inline void store8(double* p, Lane8 v) { __builtin_memcpy(p, &v, sizeof v); }

inline double dot(const double* a, const double* b, std::size_t len) {
    Lane8 acc{};
    std::size_t k = 0;
    for (; k + 8 <= len; k += 8) acc += load8(a + k) * load8(b + k);
    double s = 0.0;
    for (int j = 0; j < 8; ++j) s += acc[j];
    for (; k < len; ++k) s += a[k] * b[k];
    return s;
}

} // namespace

void correlate_accumulate(const double* in, const double* w, std::size_t klen, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 32 <= n; i += 32) {
        Lane8 a0 = load8(out + i), a1 = load8(out + i + 8), a2 = load8(out + i + 16), a3 = load8(out + i + 24);
        for (std::size_t k = 0; k < klen; ++k) {
            const double wk = w[k];
            const double* p = in + i + k;
            a0 += wk * load8(p);
            a1 += wk * load8(p + 8);
            a2 += wk * load8(p + 16);
            a3 += wk * load8(p + 24);
        }
        store8(out + i, a0);
        store8(out + i + 8, a1);
        store8(out + i + 16, a2);
        store8(out + i + 24, a3);
    }
    for (; i + 8 <= n; i += 8) {
        Lane8 a0 = load8(out + i);
        for (std::size_t k = 0; k < klen; ++k) a0 += w[k] * load8(in + i + k);
        store8(out + i, a0);
    }
    for (; i < n; ++i) out[i] += dot(w, in + i, klen);
}

// ---------------------------------------------------------------------------

Conv3d::Conv3d(std::string name, std::size_t in_channels, std::size_t out_channels, Triple kernel, Triple stride)
    : name_(std::move(name)), in_ch_(in_channels), out_ch_(out_channels), kernel_(kernel), stride_(stride),
      weight_(name_ + ".w", {out_channels, in_channels, kernel[0], kernel[1], kernel[2]}),
      bias_(name_ + ".b", {out_channels}) {
    for (auto s : stride_)
        if (s == 0) throw Error("bad_shape", name_ + ": stride must be >= 1");
}

Shape Conv3d::output_shape(const Shape& in) const {
    if (in.size() != 5) throw Error("shape_mismatch", name_ + ": expected rank-5 input, got " + to_string(in));
    if (in[1] != in_ch_)
        throw Error("shape_mismatch", name_ + ": expected " + std::to_string(in_ch_) + " input channels, got " +
                                          to_string(in));
    Shape out{in[0], out_ch_, 0, 0, 0};
    for (int a = 0; a < 3; ++a) {
        if (kernel_[a] > in[2 + a])
            throw Error("shape_mismatch", name_ + ": kernel larger than input " + to_string(in));
        out[2 + a] = window_out(in[2 + a], kernel_[a], stride_[a]);
    }
    return out;
}

void Conv3d::init(CounterRng& rng) {
    const double fan_in = static_cast<double>(in_ch_ * kernel_[0] * kernel_[1] * kernel_[2]);
    const double bound = std::sqrt(1.0 / fan_in);
    uniform_fill(weight_.value, bound, rng);
    uniform_fill(bias_.value, bound, rng);
}

void Conv3d::collect_params(std::vector<Param*>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
}

Tensor Conv3d::forward(const Tensor& x, const Context&) {
    require_rank5(x, name_);
    const Shape os = output_shape(x.shape());
    input_ = x;
    Tensor out(os);
    const std::size_t B = os[0], Fo = os[1], OD = os[2], OH = os[3], OW = os[4];
    const std::size_t Fi = in_ch_, D = x.dim(2), H = x.dim(3), W = x.dim(4);
    const auto [kD, kH, kW] = kernel_;
    const auto [sD, sH, sW] = stride_;
    const double* xp = x.data();
    const double* wp = weight_.value.data();
    double* op = out.data();

    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t fo = 0; fo < Fo; ++fo)
            for (std::size_t od = 0; od < OD; ++od)
                for (std::size_t oh = 0; oh < OH; ++oh) {
                    double* orow = op + (((b * Fo + fo) * OD + od) * OH + oh) * OW;
                    std::fill(orow, orow + OW, bias_.value[fo]);
                    for (std::size_t fi = 0; fi < Fi; ++fi)
                        for (std::size_t kd = 0; kd < kD; ++kd)
                            for (std::size_t kh = 0; kh < kH; ++kh) {
                                const double* irow = xp + (((b * Fi + fi) * D + od * sD + kd) * H + oh * sH + kh) * W;
                                const double* wrow = wp + (((fo * Fi + fi) * kD + kd) * kH + kh) * kW;
                                if (sW == 1) {
                                    correlate_accumulate(irow, wrow, kW, orow, OW);
                                } else {
                                    for (std::size_t ow = 0; ow < OW; ++ow) {
                                        double s = 0;
                                        for (std::size_t k = 0; k < kW; ++k) s += wrow[k] * irow[ow * sW + k];
                                        orow[ow] += s;
                                    }
                                }
                            }
                }
    return out;
}

Tensor Conv3d::backward(const Tensor& dy) {
    const Tensor& x = input_;
    const Shape os = output_shape(x.shape());
    if (dy.shape() != os) throw Error("shape_mismatch", name_ + ": gradient shape " + to_string(dy.shape()));
    const std::size_t B = os[0], Fo = os[1], OD = os[2], OH = os[3], OW = os[4];
    const std::size_t Fi = in_ch_, D = x.dim(2), H = x.dim(3), W = x.dim(4);
    const auto [kD, kH, kW] = kernel_;
    const auto [sD, sH, sW] = stride_;

    Tensor dx(x.shape());
    const double* xp = x.data();
    const double* wp = weight_.value.data();
    double* dwp = weight_.grad.data();
    double* dxp = dx.data();

    std::vector<double> wflip(weight_.value.size());
    for (std::size_t r = 0; r < weight_.value.size() / kW; ++r)
        for (std::size_t k = 0; k < kW; ++k) wflip[r * kW + k] = wp[r * kW + (kW - 1 - k)];
    std::vector<double> dypad(OW + 2 * (kW - 1), 0.0);
    const std::size_t covered = OW + kW - 1;

    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t fo = 0; fo < Fo; ++fo)
            for (std::size_t od = 0; od < OD; ++od)
                for (std::size_t oh = 0; oh < OH; ++oh) {
                    const double* dyrow = dy.data() + (((b * Fo + fo) * OD + od) * OH + oh) * OW;
                    double bsum = 0;
                    for (std::size_t i = 0; i < OW; ++i) bsum += dyrow[i];
                    bias_.grad[fo] += bsum;
                    if (sW == 1) std::copy(dyrow, dyrow + OW, dypad.begin() + static_cast<std::ptrdiff_t>(kW - 1));
                    for (std::size_t fi = 0; fi < Fi; ++fi)
                        for (std::size_t kd = 0; kd < kD; ++kd)
                            for (std::size_t kh = 0; kh < kH; ++kh) {
                                const std::size_t in_off = (((b * Fi + fi) * D + od * sD + kd) * H + oh * sH + kh) * W;
                                const std::size_t w_off = (((fo * Fi + fi) * kD + kd) * kH + kh) * kW;
                                if (sW == 1) {
                                    correlate_accumulate(xp + in_off, dyrow, OW, dwp + w_off, kW);
                                    correlate_accumulate(dypad.data(), wflip.data() + w_off, kW, dxp + in_off, covered);
                                } else {
                                    for (std::size_t ow = 0; ow < OW; ++ow)
                                        for (std::size_t k = 0; k < kW; ++k) {
                                            dwp[w_off + k] += dyrow[ow] * xp[in_off + ow * sW + k];
                                            dxp[in_off + ow * sW + k] += dyrow[ow] * wp[w_off + k];
                                        }
                                }
                            }
                }
    return dx;
}

// ---------------------------------------------------------------------------

BatchNorm3d::BatchNorm3d(std::string name, std::size_t channels, double eps, double momentum)
    : name_(std::move(name)), channels_(channels), eps_(eps), momentum_(momentum),
      gamma_(name_ + ".gamma", {channels}), beta_(name_ + ".beta", {channels}), running_mean_({channels}, 0.0),
      running_var_({channels}, 1.0) {
    gamma_.value.fill(1.0);
}

void BatchNorm3d::collect_params(std::vector<Param*>& out) {
    out.push_back(&gamma_);
    out.push_back(&beta_);
}

void BatchNorm3d::collect_buffers(std::vector<Buffer>& out) {
    out.push_back({name_ + ".rmean", &running_mean_});
    out.push_back({name_ + ".rvar", &running_var_});
}

Tensor BatchNorm3d::forward(const Tensor& x, const Context& ctx) {
    require_rank5(x, name_);
    if (x.dim(1) != channels_)
        throw Error("shape_mismatch", name_ + ": expected " + std::to_string(channels_) + " channels, got " +
                                          to_string(x.shape()));
    const std::size_t B = x.dim(0), C = channels_, S = x.dim(2) * x.dim(3) * x.dim(4);
    const std::size_t N = B * S;
    Tensor y(x.shape());
    xhat_ = Tensor(x.shape());
    inv_std_.assign(C, 0.0);
    cached_train_ = ctx.mode == Mode::Train;
    if (cached_train_ && B < 2)
        throw Error("batch_too_small", name_ + ": training-mode batch normalization needs batch size >= 2");

    for (std::size_t c = 0; c < C; ++c) {
        double mean, var;
        if (cached_train_) {
            double sum = 0;
            for (std::size_t b = 0; b < B; ++b) {
                const double* p = x.data() + (b * C + c) * S;
                for (std::size_t i = 0; i < S; ++i) sum += p[i];
            }
            mean = sum / static_cast<double>(N);
            double sq = 0;
            for (std::size_t b = 0; b < B; ++b) {
                const double* p = x.data() + (b * C + c) * S;
                for (std::size_t i = 0; i < S; ++i) sq += (p[i] - mean) * (p[i] - mean);
            }
            var = sq / static_cast<double>(N);
            if (ctx.update_running_stats) {
                const double unbiased = N > 1 ? sq / static_cast<double>(N - 1) : var;
                running_mean_[c] = (1.0 - momentum_) * running_mean_[c] + momentum_ * mean;
                running_var_[c] = (1.0 - momentum_) * running_var_[c] + momentum_ * unbiased;
            }
        } else {
            mean = running_mean_[c];
            var = running_var_[c];
        }
        const double inv = 1.0 / std::sqrt(var + eps_);
        inv_std_[c] = inv;
        const double g = gamma_.value[c], be = beta_.value[c];
        for (std::size_t b = 0; b < B; ++b) {
            const std::size_t off = (b * C + c) * S;
            for (std::size_t i = 0; i < S; ++i) {
                const double h = (x[off + i] - mean) * inv;
                xhat_[off + i] = h;
                y[off + i] = g * h + be;
            }
        }
    }
    return y;
}

Tensor BatchNorm3d::backward(const Tensor& dy) {
    if (dy.shape() != xhat_.shape()) throw Error("shape_mismatch", name_ + ": gradient shape mismatch");
    const std::size_t B = dy.dim(0), C = channels_, S = dy.dim(2) * dy.dim(3) * dy.dim(4);
    const double N = static_cast<double>(B * S);
    Tensor dx(dy.shape());
    for (std::size_t c = 0; c < C; ++c) {
        double sum_dy = 0, sum_dy_h = 0;
        for (std::size_t b = 0; b < B; ++b) {
            const std::size_t off = (b * C + c) * S;
            for (std::size_t i = 0; i < S; ++i) {
                sum_dy += dy[off + i];
                sum_dy_h += dy[off + i] * xhat_[off + i];
            }
        }
        gamma_.grad[c] += sum_dy_h;
        beta_.grad[c] += sum_dy;
        const double g = gamma_.value[c] * inv_std_[c];
        for (std::size_t b = 0; b < B; ++b) {
            const std::size_t off = (b * C + c) * S;
            if (cached_train_) {
                for (std::size_t i = 0; i < S; ++i)
                    dx[off + i] = g * (dy[off + i] - sum_dy / N - xhat_[off + i] * sum_dy_h / N);
            } else {
                for (std::size_t i = 0; i < S; ++i) dx[off + i] = g * dy[off + i];
            }
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------

Tensor Elu::forward(const Tensor& x, const Context&) {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0 ? x[i] : std::expm1(x[i]);
    output_ = y;
    return y;
}

Tensor Elu::backward(const Tensor& dy) {
    Tensor dx(dy.shape());
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = output_[i] > 0 ? dy[i] : dy[i] * (output_[i] + 1.0);
    return dx;
}

// ---------------------------------------------------------------------------

Pool3d::Pool3d(std::string name, PoolKind kind, Triple kernel, Triple stride)
    : name_(std::move(name)), kind_(kind), kernel_(kernel), stride_(stride) {
    for (int a = 0; a < 3; ++a)
        if (kernel_[a] == 0 || stride_[a] == 0) throw Error("bad_shape", name_ + ": kernel and stride must be >= 1");
}

Shape Pool3d::output_shape(const Shape& in) const {
    if (in.size() != 5) throw Error("shape_mismatch", name_ + ": expected rank-5 input, got " + to_string(in));
    Shape out = in;
    for (int a = 0; a < 3; ++a) {
        if (kernel_[a] > in[2 + a]) throw Error("shape_mismatch", name_ + ": kernel larger than axis " + to_string(in));
        out[2 + a] = window_out(in[2 + a], kernel_[a], stride_[a]);
    }
    return out;
}

Tensor Pool3d::forward(const Tensor& x, const Context&) {
    const Shape os = output_shape(x.shape());
    in_shape_ = x.shape();
    Tensor y(os);
    const std::size_t BC = os[0] * os[1], OD = os[2], OH = os[3], OW = os[4];
    const std::size_t D = x.dim(2), H = x.dim(3), W = x.dim(4);
    const auto [kD, kH, kW] = kernel_;
    const auto [sD, sH, sW] = stride_;
    const double inv = 1.0 / static_cast<double>(kD * kH * kW);
    if (kind_ == PoolKind::Max) argmax_.assign(y.size(), 0);

    std::size_t o = 0;
    for (std::size_t bc = 0; bc < BC; ++bc)
        for (std::size_t od = 0; od < OD; ++od)
            for (std::size_t oh = 0; oh < OH; ++oh)
                for (std::size_t ow = 0; ow < OW; ++ow, ++o) {
                    double acc = kind_ == PoolKind::Max ? -std::numeric_limits<double>::infinity() : 0.0;
                    std::size_t best = 0;
                    for (std::size_t kd = 0; kd < kD; ++kd)
                        for (std::size_t kh = 0; kh < kH; ++kh) {
                            const std::size_t row = ((bc * D + od * sD + kd) * H + oh * sH + kh) * W + ow * sW;
                            for (std::size_t kw = 0; kw < kW; ++kw) {
                                const double v = x[row + kw];
                                if (kind_ == PoolKind::Max) {
                                    if (v > acc) {
                                        acc = v;
                                        best = row + kw;
                                    }
                                } else {
                                    acc += v;
                                }
                            }
                        }
                    if (kind_ == PoolKind::Max) {
                        y[o] = acc;
                        argmax_[o] = best;
                    } else {
                        y[o] = acc * inv;
                    }
                }
    return y;
}

Tensor Pool3d::backward(const Tensor& dy) {
    const Shape os = output_shape(in_shape_);
    if (dy.shape() != os) throw Error("shape_mismatch", name_ + ": gradient shape mismatch");
    Tensor dx(in_shape_);
    if (kind_ == PoolKind::Max) {
        for (std::size_t o = 0; o < dy.size(); ++o) dx[argmax_[o]] += dy[o];
        return dx;
    }
    const std::size_t BC = os[0] * os[1], OD = os[2], OH = os[3], OW = os[4];
    const std::size_t D = in_shape_[2], H = in_shape_[3], W = in_shape_[4];
    const auto [kD, kH, kW] = kernel_;
    const auto [sD, sH, sW] = stride_;
    const double inv = 1.0 / static_cast<double>(kD * kH * kW);
    std::size_t o = 0;
    for (std::size_t bc = 0; bc < BC; ++bc)
        for (std::size_t od = 0; od < OD; ++od)
            for (std::size_t oh = 0; oh < OH; ++oh)
                for (std::size_t ow = 0; ow < OW; ++ow, ++o) {
                    const double g = dy[o] * inv;
                    for (std::size_t kd = 0; kd < kD; ++kd)
                        for (std::size_t kh = 0; kh < kH; ++kh) {
                            const std::size_t row = ((bc * D + od * sD + kd) * H + oh * sH + kh) * W + ow * sW;
                            for (std::size_t kw = 0; kw < kW; ++kw) dx[row + kw] += g;
                        }
                }
    return dx;
}

// ---------------------------------------------------------------------------

Dropout::Dropout(std::string name, double p, std::uint64_t stream_id)
    : name_(std::move(name)), p_(p), stream_id_(stream_id) {
    if (!(p >= 0.0 && p < 1.0)) throw Error("bad_rate", name_ + ": dropout rate must be in [0, 1)");
}

Tensor Dropout::forward(const Tensor& x, const Context& ctx) {
    active_ = ctx.mode == Mode::Train && p_ > 0.0;
    if (!active_) return x;
    CounterRng rng(derive_key(ctx.dropout_key, stream_id_));
    const double keep_scale = 1.0 / (1.0 - p_);
    mask_.resize(x.size());
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        mask_[i] = rng.uniform() < p_ ? 0.0 : keep_scale;
        y[i] = x[i] * mask_[i];
    }
    return y;
}

Tensor Dropout::backward(const Tensor& dy) {
    if (!active_) return dy;
    Tensor dx(dy.shape());
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * mask_[i];
    return dx;
}

// ---------------------------------------------------------------------------

Dense::Dense(std::string name, std::size_t in_features, std::size_t out_features)
    : name_(std::move(name)), in_(in_features), out_(out_features), weight_(name_ + ".w", {out_features, in_features}),
      bias_(name_ + ".b", {out_features}) {}

Shape Dense::output_shape(const Shape& in) const {
    if (in.size() != 2 || in[1] != in_)
        throw Error("shape_mismatch", name_ + ": expected [B, " + std::to_string(in_) + "], got " + to_string(in));
    return {in[0], out_};
}

void Dense::init(CounterRng& rng) {
    const double bound = std::sqrt(1.0 / static_cast<double>(in_));
    uniform_fill(weight_.value, bound, rng);
    uniform_fill(bias_.value, bound, rng);
}

void Dense::collect_params(std::vector<Param*>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
}

Tensor Dense::forward(const Tensor& x, const Context&) {
    const Shape os = output_shape(x.shape());
    input_ = x;
    Tensor y(os);
    for (std::size_t b = 0; b < os[0]; ++b)
        for (std::size_t m = 0; m < out_; ++m) {
            double s = bias_.value[m];
            const double* w = weight_.value.data() + m * in_;
            const double* xi = x.data() + b * in_;
            for (std::size_t n = 0; n < in_; ++n) s += w[n] * xi[n];
            y[b * out_ + m] = s;
        }
    return y;
}

Tensor Dense::backward(const Tensor& dy) {
    const std::size_t B = input_.dim(0);
    Tensor dx(input_.shape());
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t m = 0; m < out_; ++m) {
            const double g = dy[b * out_ + m];
            bias_.grad[m] += g;
            double* dw = weight_.grad.data() + m * in_;
            const double* w = weight_.value.data() + m * in_;
            const double* xi = input_.data() + b * in_;
            double* dxi = dx.data() + b * in_;
            for (std::size_t n = 0; n < in_; ++n) {
                dw[n] += g * xi[n];
                dxi[n] += g * w[n];
            }
        }
    return dx;
}

// ---------------------------------------------------------------------------

Tensor softmax(const Tensor& logits) {
    if (logits.rank() != 2) throw Error("shape_mismatch", "softmax expects [B x m]");
    const std::size_t B = logits.dim(0), M = logits.dim(1);
    Tensor p(logits.shape());
    for (std::size_t b = 0; b < B; ++b) {
        const double* z = logits.data() + b * M;
        const double mx = *std::max_element(z, z + M);
        double sum = 0;
        for (std::size_t m = 0; m < M; ++m) sum += (p[b * M + m] = std::exp(z[m] - mx));
        for (std::size_t m = 0; m < M; ++m) p[b * M + m] /= sum;
    }
    return p;
}

LossResult cross_entropy(const Tensor& logits, std::span<const std::size_t> labels) {
    if (logits.rank() != 2 || logits.dim(0) != labels.size())
        throw Error("shape_mismatch", "cross_entropy: logits " + to_string(logits.shape()) + " vs " +
                                          std::to_string(labels.size()) + " labels");
    const std::size_t B = logits.dim(0), M = logits.dim(1);
    LossResult r{0.0, softmax(logits)};
    for (std::size_t b = 0; b < B; ++b) {
        if (labels[b] >= M) throw Error("bad_label", "label " + std::to_string(labels[b]) + " out of range");
        const double* z = logits.data() + b * M;
        const double mx = *std::max_element(z, z + M);
        double sum = 0;
        for (std::size_t m = 0; m < M; ++m) sum += std::exp(z[m] - mx);
        r.loss += (std::log(sum) + mx) - z[labels[b]];
        r.grad[b * M + labels[b]] -= 1.0;
    }
    const double invB = 1.0 / static_cast<double>(B);
    r.loss *= invB;
    for (double& g : r.grad.values()) g *= invB;
    return r;
}

// ---------------------------------------------------------------------------

GradCheckResult grad_check(const std::function<double()>& loss, std::span<GradTarget> targets, double eps) {
    std::vector<std::vector<std::size_t>> indices(targets.size());
    std::vector<std::vector<double>> numeric(targets.size());
    double scale = 0;
    for (std::size_t ti = 0; ti < targets.size(); ++ti) {
        auto& t = targets[ti];
        if (t.analytic.size() != t.value->size())
            throw Error("shape_mismatch", "grad_check: analytic gradient size mismatch for " + t.name);
        auto& idx = indices[ti];
        idx = t.indices;
        if (idx.empty()) {
            idx.resize(t.value->size());
            for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        }
        numeric[ti].resize(idx.size());
        for (std::size_t j = 0; j < idx.size(); ++j) {
            if (idx[j] >= t.value->size()) throw Error("out_of_range", "grad_check: index out of range for " + t.name);
            double& v = (*t.value)[idx[j]];
            const double orig = v;
            v = orig + eps;
            const double up = loss();
            v = orig - eps;
            const double down = loss();
            v = orig;
            numeric[ti][j] = (up - down) / (2.0 * eps);
            scale = std::max(scale, std::abs(numeric[ti][j]));
        }
    }
    const double floor = std::max(1e-3 * scale, 1e-12);
    GradCheckResult result;
    for (std::size_t ti = 0; ti < targets.size(); ++ti)
        for (std::size_t j = 0; j < indices[ti].size(); ++j) {
            const double a = targets[ti].analytic[indices[ti][j]], n = numeric[ti][j];
            const double rel = std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
            ++result.checked;
            if (rel > result.max_rel_error) {
                result.max_rel_error = rel;
                result.worst_target = targets[ti].name;
                result.worst_index = indices[ti][j];
            }
        }
    return result;
}

} // namespace ads3d::nn
