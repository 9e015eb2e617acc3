#pragma once

#include "ads3d/attention.hpp"
#include "ads3d/eegio.hpp"
#include "ads3d/layers.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ads3d::net {

using nn::PoolKind;
using nn::Shape;
using nn::Triple;
using nn::to_string;

/// Convolution followed by batch normalization and optionally ELU.
struct ConvSpec {
    std::string label; // e.g. "Conv.a1"
    std::size_t out_channels;
    Triple kernel;
    bool elu;
};

/// Pooling followed by dropout.
struct PoolSpec {
    PoolKind kind;
    Triple kernel;
    Triple stride;
    double dropout;
};

using StageSpec = std::variant<ConvSpec, PoolSpec>;

struct AdsNetConfig {
    std::string preset = "custom";
    std::size_t channels = 64;  ///< Input channels, equal to grid * grid.
    std::size_t samples = 1001; ///< T
    std::size_t grid = 8;
    std::size_t d_k = 64;
    std::vector<StageSpec> block1, block2, block3;
    std::size_t n_classes = 4;
    std::size_t batch_size = 40;

    /// Table I network: 64 channels, 1001 samples, 8x8 grid.
    static AdsNetConfig full();
    /// Same topology sized for 251-sample epochs at 125 Hz; used for desk-scale training.
    static AdsNetConfig reduced();
    /// Same topology on a 4x4 grid and 64 samples; used for finite-difference checks.
    static AdsNetConfig tiny();
    /// "full", "reduced" or "tiny"; throws "bad_config" otherwise.
    static AdsNetConfig preset_named(std::string_view name);
};

struct ShapeRow {
    std::string block; // "0", "1", "2", "3", "head"
    std::string layer; // "Reshape", "Conv.a1", "Avgpool", ...
    Shape shape;
};

/// Output size of every row of the architecture table for batch size `batch`.
/// Throws "shape_mismatch" naming the offending layer.
std::vector<ShapeRow> shape_chain(const AdsNetConfig& config, std::size_t batch);

/// Number of learnable scalars implied by the configuration.
std::size_t parameter_count(const AdsNetConfig& config);

/// Attention -> grid -> (block 1 || block 2) -> concatenate along height -> block 3 -> dense head.
class AdsNet {
public:
    /// `cell_channels[cell]` is the input channel shown at grid cell `cell` (row-major),
    /// usually from MontageMap::resolve.
    AdsNet(AdsNetConfig config, std::vector<std::size_t> cell_channels, std::uint64_t seed);
    AdsNet(const AdsNet&) = delete;
    AdsNet& operator=(const AdsNet&) = delete;

    const AdsNetConfig& config() const { return config_; }

    /// [B, C, T] -> logits [B, n_classes].
    nn::Tensor forward(const nn::Tensor& batch, const nn::Context& ctx);
    /// Backpropagates d loss / d logits; accumulates parameter gradients and
    /// returns the gradient w.r.t. the input batch.
    nn::Tensor backward(const nn::Tensor& dlogits);

    /// Shapes observed during the last forward, one row per table row.
    const std::vector<ShapeRow>& last_shapes() const { return shapes_; }

    std::vector<nn::Param*> parameters();
    std::vector<nn::Buffer> buffers();
    void zero_grad();
    std::size_t parameter_count();

    /// Parameters and buffers as named 32-bit entries.
    eegio::ModelCheckpoint to_checkpoint();
    /// Loads entries by name; every parameter and buffer must be present with matching dims.
    void load_checkpoint(const eegio::ModelCheckpoint& ckpt);

private:
    struct Block {
        std::vector<std::unique_ptr<nn::Layer>> layers;
        std::vector<std::string> row_labels; // row label after each layer, "" if not a table row
    };

    Block build_block(int index, const std::vector<StageSpec>& specs, std::size_t in_channels, std::uint64_t& dropout_id,
                      CounterRng& rng);
    nn::Tensor run_block(Block& block, nn::Tensor x, const nn::Context& ctx, const std::string& block_name);
    nn::Tensor back_block(Block& block, nn::Tensor dy);

    AdsNetConfig config_;
    std::vector<std::size_t> cell_channels_;
    attention::ChannelAttention attention_;
    Block block1_, block2_, block3_;
    std::unique_ptr<nn::Dense> head_;
    std::vector<ShapeRow> shapes_;
    Shape b1_out_, b2_out_, b3_out_;
};

struct LossAndGrads {
    double loss = 0;
    nn::Tensor logits;
};

/// Mean cross-entropy on the batch; parameter gradients are left in the model
/// (zeroed first). Throws "bad_label" for labels outside 0..n_classes-1.
LossAndGrads loss_and_grads(AdsNet& model, const nn::Tensor& batch, std::span<const std::size_t> labels,
                            const nn::Context& ctx);

/// Argmax of each row; ties go to the lowest index.
std::vector<std::size_t> argmax_rows(const nn::Tensor& logits);
std::vector<std::size_t> predict(AdsNet& model, const nn::Tensor& batch);

/// Standard checkpoint entry names in model order.
std::vector<std::string> checkpoint_names(const AdsNetConfig& config);

} // namespace ads3d::net
