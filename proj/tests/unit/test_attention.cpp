#include "ads3d/attention.hpp"
#include "ads3d/rng.hpp"
#include "helpers.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace ads3d;
using namespace ads3d::attention;
using testutil::error_code;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, CounterRng& rng, double scale = 1.0) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
    return m;
}

AttentionParams random_params(std::size_t t, std::size_t dk, CounterRng& rng) {
    return {random_matrix(t, dk, rng, 0.3), random_matrix(t, dk, rng, 0.3), random_matrix(t, t, rng, 0.3)};
}

// Eq. 1 written as plain loops.
Matrix loop_attention(const Matrix& x, const AttentionParams& p) {
    const auto c = x.rows(), t = x.cols(), dk = p.wq.cols();
    Matrix q = Matrix::Zero(c, dk), k = Matrix::Zero(c, dk), v = Matrix::Zero(c, t);
    for (Eigen::Index i = 0; i < c; ++i)
        for (Eigen::Index s = 0; s < t; ++s) {
            for (Eigen::Index j = 0; j < dk; ++j) {
                q(i, j) += x(i, s) * p.wq(s, j);
                k(i, j) += x(i, s) * p.wk(s, j);
            }
            for (Eigen::Index j = 0; j < t; ++j) v(i, j) += x(i, s) * p.wv(s, j);
        }
    Matrix out = Matrix::Zero(c, t);
    for (Eigen::Index i = 0; i < c; ++i) {
        std::vector<double> score(static_cast<std::size_t>(c));
        for (Eigen::Index j = 0; j < c; ++j) {
            double dot = 0;
            for (Eigen::Index d = 0; d < dk; ++d) dot += q(i, d) * k(j, d);
            score[static_cast<std::size_t>(j)] = dot / std::sqrt(static_cast<double>(dk));
        }
        const double top = *std::max_element(score.begin(), score.end());
        double z = 0;
        for (double& s : score) z += (s = std::exp(s - top));
        for (Eigen::Index j = 0; j < c; ++j)
            for (Eigen::Index s = 0; s < t; ++s) out(i, s) += score[static_cast<std::size_t>(j)] / z * v(j, s);
    }
    return out;
}

} // namespace

TEST(Attention, ProjectionExamples) {
    CounterRng rng(1);
    const Matrix x = random_matrix(3, 5, rng);
    AttentionParams p{Matrix::Identity(5, 5), random_matrix(5, 5, rng), Matrix::Identity(5, 5)};
    EXPECT_EQ(project_qkv(x, p).q, x);

    Matrix x2(2, 3), w(3, 2);
    x2 << 1, 2, 3, -1, 0, 4;
    w << 1, 0, 0.5, -1, 2, 3;
    AttentionParams p2{w, w, Matrix::Identity(3, 3)};
    const auto q = project_qkv(x2, p2).q;
    EXPECT_DOUBLE_EQ(q(0, 0), 1 * 1 + 2 * 0.5 + 3 * 2);
    EXPECT_DOUBLE_EQ(q(0, 1), 1 * 0 + 2 * -1 + 3 * 3);
    EXPECT_DOUBLE_EQ(q(1, 0), -1 * 1 + 0 + 4 * 2);
    EXPECT_DOUBLE_EQ(q(1, 1), 0 + 0 + 4 * 3);

    AttentionParams bad{Matrix::Identity(4, 4), Matrix::Identity(4, 3), Matrix::Identity(4, 4)};
    EXPECT_EQ(error_code([&] { project_qkv(random_matrix(2, 4, rng), bad); }), "shape_mismatch");
    EXPECT_EQ(error_code([&] { project_qkv(random_matrix(2, 6, rng), p); }), "shape_mismatch");
}

TEST(Attention, ScaledDotExamples) {
    CounterRng rng(2);
    const Matrix v1 = random_matrix(1, 6, rng);
    EXPECT_EQ(scaled_dot_attention(random_matrix(1, 3, rng), random_matrix(1, 3, rng), v1), v1);

    const Matrix v = random_matrix(5, 4, rng);
    const Matrix out = scaled_dot_attention(Matrix::Zero(5, 3), random_matrix(5, 3, rng), v);
    const Eigen::RowVectorXd mean = v.colwise().mean();
    for (Eigen::Index i = 0; i < 5; ++i) EXPECT_LT((out.row(i) - mean).cwiseAbs().maxCoeff(), 1e-12);

    const Matrix id = Matrix::Identity(2, 2);
    const Matrix o = scaled_dot_attention(id, id, id);
    const double e = std::exp(1 / std::sqrt(2.0));
    EXPECT_NEAR(o(0, 0), e / (e + 1), 1e-12);
    EXPECT_NEAR(o(0, 1), 1 / (e + 1), 1e-12);
    EXPECT_NEAR(o(0, 0), 0.6698, 5e-5);
    EXPECT_NEAR(o(0, 1), 0.3302, 5e-5);

    Matrix nan = Matrix::Zero(2, 2);
    nan(1, 1) = std::nan("");
    EXPECT_EQ(error_code([&] { scaled_dot_attention(nan, id, id); }), "non_finite");
    EXPECT_EQ(error_code([&] { scaled_dot_attention(id, id, nan); }), "non_finite");
}

TEST(Attention, RowsArePositiveAndSumToOne) {
    CounterRng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const double scale = std::pow(10.0, trial % 5);
        const Matrix q = random_matrix(16, 8, rng, scale), k = random_matrix(16, 8, rng, scale);
        const Matrix a = attention_weights(q, k);
        ASSERT_TRUE(a.allFinite());
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            EXPECT_NEAR(a.row(i).sum(), 1.0, 1e-6);
            EXPECT_GE(a.row(i).minCoeff(), 0.0);
        }
    }
    // Large but moderate scores keep every weight strictly positive.
    const Matrix a = attention_weights(random_matrix(6, 4, rng), random_matrix(6, 4, rng));
    EXPECT_GT(a.minCoeff(), 0.0);
}

TEST(Attention, ShiftInvariance) {
    // An extra key column of ones adds r_i / sqrt(d_k) to every score of row i.
    CounterRng rng(4);
    const Matrix q = random_matrix(5, 3, rng), k = random_matrix(5, 3, rng), v = random_matrix(5, 7, rng);
    Matrix q2(5, 4), k2(5, 4);
    q2 << q * std::sqrt(4.0 / 3.0), random_matrix(5, 1, rng, 50.0);
    k2 << k, Matrix::Ones(5, 1);
    EXPECT_LT((scaled_dot_attention(q, k, v) - scaled_dot_attention(q2, k2, v)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Attention, ChannelAttentionExamples) {
    CounterRng rng(5);
    const auto p = random_params(6, 4, rng);
    EXPECT_EQ(channel_attention(Matrix::Zero(3, 6), p), Matrix::Zero(3, 6));
    AttentionParams narrow{p.wq, p.wk, random_matrix(6, 5, rng)};
    EXPECT_EQ(error_code([&] { channel_attention(random_matrix(3, 6, rng), narrow); }), "shape_mismatch");

    Matrix x(2, 3), w(3, 2), wv(3, 3);
    x << 0.5, -1, 2, 1.5, 0.25, -0.75;
    w << 0.1, 0.2, -0.3, 0.4, 0.5, -0.6;
    wv << 1, 0.5, 0, -0.5, 1, 0.25, 0, 0.75, 1;
    const AttentionParams small{w, w * 0.5, wv};
    EXPECT_LT((channel_attention(x, small) - loop_attention(x, small)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Attention, MatchesLoopOracle) {
    CounterRng rng(6);
    double worst = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const auto c = 1 + static_cast<Eigen::Index>(rng.below(8));
        const auto t = 1 + static_cast<std::size_t>(rng.below(16));
        const auto dk = 1 + static_cast<std::size_t>(rng.below(6));
        const auto p = random_params(t, dk, rng);
        const Matrix x = random_matrix(c, static_cast<Eigen::Index>(t), rng);
        worst = std::max(worst, (channel_attention(x, p) - loop_attention(x, p)).cwiseAbs().maxCoeff());
    }
    EXPECT_LT(worst, 1e-9);
}

TEST(Attention, ChannelPermutationEquivariance) {
    CounterRng rng(7);
    const std::size_t c = 12, t = 20;
    const auto p = random_params(t, 6, rng);
    const Matrix x = random_matrix(c, t, rng);
    const Matrix y = channel_attention(x, p);
    std::vector<Eigen::Index> perm(c);
    std::iota(perm.begin(), perm.end(), 0);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        for (std::size_t i = c - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
        Matrix px(c, t);
        for (std::size_t i = 0; i < c; ++i) px.row(static_cast<Eigen::Index>(i)) = x.row(perm[i]);
        const Matrix py = channel_attention(px, p);
        for (std::size_t i = 0; i < c; ++i)
            worst = std::max(worst, (py.row(static_cast<Eigen::Index>(i)) - y.row(perm[i])).cwiseAbs().maxCoeff());
    }
    EXPECT_LT(worst, 1e-5);
}

TEST(Attention, LayerMatchesFunctionAndGradients) {
    const std::size_t b = 2, c = 4, t = 8, dk = 3;
    ChannelAttention layer(t, dk);
    CounterRng rng(8);
    layer.init(rng);
    const double bound = std::sqrt(1.0 / t);
    std::vector<nn::Param*> params;
    layer.collect_params(params);
    ASSERT_EQ(params.size(), 3u);
    EXPECT_EQ(params[0]->name, "attn.wq");
    EXPECT_EQ(params[2]->value.shape(), (nn::Shape{t, t}));
    for (double v : params[0]->value.values()) EXPECT_LE(std::abs(v), bound);
    EXPECT_TRUE(std::ranges::equal(params[1]->value.values(), params[0]->value.values()));
    for (std::size_t i = 0; i < t; ++i)
        for (std::size_t j = 0; j < t; ++j) EXPECT_EQ(params[2]->value[i * t + j], i == j ? 1.0 : 0.0);
    // Start the gradient check away from the structured initial point.
    for (auto* p : params)
        for (double& v : p->value.values()) v += rng.uniform(-bound, bound);

    nn::Tensor x({b, c, t});
    for (double& v : x.values()) v = rng.normal();
    nn::Tensor weight({b, c, t});
    for (double& v : weight.values()) v = rng.normal();

    const nn::Tensor y = layer.forward(x);
    for (std::size_t i = 0; i < b; ++i) {
        const Matrix xi = Eigen::Map<const Matrix>(x.data() + i * c * t, c, t);
        const Matrix yi = Eigen::Map<const Matrix>(y.data() + i * c * t, c, t);
        EXPECT_LT((yi - channel_attention(xi, layer.params())).cwiseAbs().maxCoeff(), 1e-14);
    }

    auto loss = [&] {
        const auto out = layer.forward(x);
        double s = 0;
        for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * weight[i];
        return s;
    };
    loss();
    for (auto* p : params) p->zero_grad();
    const nn::Tensor dx = layer.backward(weight);
    std::vector<nn::GradTarget> targets;
    for (auto* p : params) targets.push_back({p->name, &p->value, p->grad, {}});
    targets.push_back({"x", &x, dx, {}});
    const auto r = nn::grad_check(loss, targets, 1e-5);
    EXPECT_LT(r.max_rel_error, 1e-6) << r.worst_target << "[" << r.worst_index << "]";
    EXPECT_EQ(r.checked, 3 * t * dk - t * dk + t * t + b * c * t);
}

TEST(Attention, LayerRejectsWrongShape) {
    ChannelAttention layer(8, 3);
    EXPECT_EQ(error_code([&] { layer.forward(nn::Tensor({1, 4, 9})); }), "shape_mismatch");
}
