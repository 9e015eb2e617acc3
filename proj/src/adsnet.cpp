#include "ads3d/adsnet.hpp"

#include "ads3d/error.hpp"

#include <algorithm>
#include <cmath>

namespace ads3d::net {
namespace {

constexpr Triple kUnit{1, 1, 1};

ConvSpec conv(std::string label, std::size_t out, Triple k, bool elu) { return {std::move(label), out, k, elu}; }
PoolSpec avgp(std::size_t k, double p) { return {PoolKind::Average, {1, 1, k}, {1, 1, k}, p}; }
PoolSpec maxp(std::size_t k, double p) { return {PoolKind::Max, {1, 1, k}, {1, 1, k}, p}; }

const char* pool_label(const PoolSpec& p) { return p.kind == PoolKind::Max ? "Maxpool" : "Avgpool"; }

Shape stage_shape(const Shape& in, const StageSpec& spec, const std::string& label) {
    if (const auto* c = std::get_if<ConvSpec>(&spec)) {
        Shape out{in[0], c->out_channels, 0, 0, 0};
        for (int a = 0; a < 3; ++a) {
            if (c->kernel[a] == 0 || c->kernel[a] > in[2 + a])
                throw Error("shape_mismatch", label + ": kernel " + to_string(Shape{c->kernel[0], c->kernel[1], c->kernel[2]}) +
                                                  " does not fit input " + to_string(in));
            out[2 + a] = nn::window_out(in[2 + a], c->kernel[a], 1);
        }
        return out;
    }
    const auto& p = std::get<PoolSpec>(spec);
    Shape out = in;
    for (int a = 0; a < 3; ++a) {
        if (p.kernel[a] == 0 || p.stride[a] == 0 || p.kernel[a] > in[2 + a])
            throw Error("shape_mismatch", label + ": pooling window does not fit input " + to_string(in));
        out[2 + a] = nn::window_out(in[2 + a], p.kernel[a], p.stride[a]);
    }
    return out;
}

std::string stage_label(const StageSpec& spec) {
    if (const auto* c = std::get_if<ConvSpec>(&spec)) return c->label;
    return pool_label(std::get<PoolSpec>(spec));
}

nn::Tensor concat_height(const nn::Tensor& a, const nn::Tensor& b) {
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    if (sa[0] != sb[0] || sa[1] != sb[1] || sa[2] != sb[2] || sa[4] != sb[4])
        throw Error("shape_mismatch", "Concatenate: block outputs " + to_string(sa) + " and " + to_string(sb) +
                                          " differ outside the height axis");
    const std::size_t outer = sa[0] * sa[1] * sa[2];
    const std::size_t ra = sa[3] * sa[4], rb = sb[3] * sb[4];
    nn::Tensor out({sa[0], sa[1], sa[2], sa[3] + sb[3], sa[4]});
    double* o = out.data();
    for (std::size_t i = 0; i < outer; ++i) {
        o = std::copy_n(a.data() + i * ra, ra, o);
        o = std::copy_n(b.data() + i * rb, rb, o);
    }
    return out;
}

void split_height(const nn::Tensor& g, const Shape& sa, const Shape& sb, nn::Tensor& ga, nn::Tensor& gb) {
    ga = nn::Tensor(sa);
    gb = nn::Tensor(sb);
    const std::size_t outer = sa[0] * sa[1] * sa[2];
    const std::size_t ra = sa[3] * sa[4], rb = sb[3] * sb[4];
    const double* p = g.data();
    for (std::size_t i = 0; i < outer; ++i) {
        std::copy_n(p, ra, ga.data() + i * ra);
        p += ra;
        std::copy_n(p, rb, gb.data() + i * rb);
        p += rb;
    }
}

std::size_t block_params(const std::vector<StageSpec>& specs, std::size_t in_ch) {
    std::size_t n = 0;
    for (const auto& s : specs)
        if (const auto* c = std::get_if<ConvSpec>(&s)) {
            n += c->out_channels * in_ch * c->kernel[0] * c->kernel[1] * c->kernel[2] + c->out_channels; // conv
            n += 2 * c->out_channels;                                                                    // bn
            in_ch = c->out_channels;
        }
    return n;
}

std::size_t block_out_channels(const std::vector<StageSpec>& specs, std::size_t in_ch) {
    for (const auto& s : specs)
        if (const auto* c = std::get_if<ConvSpec>(&s)) in_ch = c->out_channels;
    return in_ch;
}

} // namespace

AdsNetConfig AdsNetConfig::full() {
    AdsNetConfig c;
    c.preset = "full";
    c.channels = 64;
    c.samples = 1001;
    c.grid = 8;
    c.d_k = 64;
    c.block1 = {conv("Conv.a1", 10, {4, 4, 125}, false), conv("Conv.a2", 20, {3, 3, 16}, true), avgp(4, 0.5),
                conv("Conv.a3", 30, {3, 3, 16}, true), avgp(4, 0.5)};
    c.block2 = {conv("Conv.b1", 6, {3, 3, 62}, false), conv("Conv.b2", 12, {3, 3, 10}, true), maxp(2, 0.25),
                conv("Conv.b3", 18, {2, 2, 10}, true), maxp(2, 0.25), conv("Conv.b4", 24, {2, 2, 10}, true),
                maxp(2, 0.25), conv("Conv.b5", 30, {2, 2, 10}, true), maxp(2, 0.25)};
    c.block3 = {conv("Conv.c1", 60, {1, 2, 10}, true), avgp(2, 0.5)};
    return c;
}

AdsNetConfig AdsNetConfig::reduced() {
    AdsNetConfig c;
    c.preset = "reduced";
    c.channels = 64;
    c.samples = 251;
    c.grid = 8;
    c.d_k = c.samples;
    c.block1 = {conv("Conv.a1", 3, {4, 4, 16}, false), conv("Conv.a2", 4, {3, 3, 8}, true), avgp(4, 0.5),
                conv("Conv.a3", 6, {3, 3, 8}, true), avgp(4, 0.5)};
    c.block2 = {conv("Conv.b1", 3, {3, 3, 8}, false), conv("Conv.b2", 4, {3, 3, 5}, true), maxp(2, 0.25),
                conv("Conv.b3", 4, {2, 2, 5}, true), maxp(2, 0.25), conv("Conv.b4", 4, {2, 2, 5}, true),
                maxp(2, 0.25), conv("Conv.b5", 6, {2, 2, 4}, true), maxp(2, 0.25)};
    c.block3 = {conv("Conv.c1", 8, {1, 2, 4}, true), avgp(2, 0.5)};
    return c;
}

AdsNetConfig AdsNetConfig::tiny() {
    AdsNetConfig c;
    c.preset = "tiny";
    c.channels = 16;
    c.samples = 64;
    c.grid = 4;
    c.d_k = 4;
    c.batch_size = 4;
    c.block1 = {conv("Conv.a1", 2, {2, 2, 9}, false), conv("Conv.a2", 3, {2, 2, 9}, true), avgp(4, 0.5),
                conv("Conv.a3", 4, {2, 2, 5}, true), avgp(4, 0.5)};
    c.block2 = {conv("Conv.b1", 2, {1, 1, 5}, false), conv("Conv.b2", 2, {1, 1, 5}, true), maxp(2, 0.25),
                conv("Conv.b3", 3, {2, 2, 5}, true), maxp(2, 0.25), conv("Conv.b4", 3, {2, 2, 3}, true),
                maxp(2, 0.25), conv("Conv.b5", 4, {2, 2, 2}, true), maxp(2, 0.25)};
    c.block3 = {conv("Conv.c1", 5, {1, 2, 1}, true), avgp(2, 0.5)};
    return c;
}

AdsNetConfig AdsNetConfig::preset_named(std::string_view name) {
    if (name == "full") return full();
    if (name == "reduced") return reduced();
    if (name == "tiny") return tiny();
    throw Error("bad_config", "unknown model preset '" + std::string(name) + "' (expected full, reduced or tiny)");
}

std::vector<ShapeRow> shape_chain(const AdsNetConfig& config, std::size_t batch) {
    if (config.channels != config.grid * config.grid)
        throw Error("shape_mismatch", "Reshape: " + std::to_string(config.channels) + " channels do not fill a " +
                                          std::to_string(config.grid) + "x" + std::to_string(config.grid) + " grid");
    std::vector<ShapeRow> rows;
    const Shape input{batch, 1, config.grid, config.grid, config.samples};
    rows.push_back({"0", "Reshape", input});
    auto run = [&](const std::vector<StageSpec>& specs, Shape s, const std::string& block) {
        for (const auto& spec : specs) {
            const auto label = stage_label(spec);
            s = stage_shape(s, spec, label);
            rows.push_back({block, label, s});
        }
        return s;
    };
    const Shape s1 = run(config.block1, input, "1");
    const Shape s2 = run(config.block2, input, "2");
    if (s1[0] != s2[0] || s1[1] != s2[1] || s1[2] != s2[2] || s1[4] != s2[4])
        throw Error("shape_mismatch", "Concatenate: block outputs " + to_string(s1) + " and " + to_string(s2) +
                                          " differ outside the height axis");
    Shape cat = s1;
    cat[3] = s1[3] + s2[3];
    rows.push_back({"3", "Concatenate", cat});
    run(config.block3, cat, "3");
    return rows;
}

std::size_t parameter_count(const AdsNetConfig& config) {
    const auto rows = shape_chain(config, 1);
    const std::size_t T = config.samples;
    std::size_t n = 2 * T * config.d_k + T * T;
    n += block_params(config.block1, 1);
    n += block_params(config.block2, 1);
    const std::size_t cat_ch = block_out_channels(config.block1, 1);
    n += block_params(config.block3, cat_ch);
    const std::size_t flat = nn::numel(rows.back().shape);
    n += flat * config.n_classes + config.n_classes;
    return n;
}

// ---------------------------------------------------------------------------

AdsNet::AdsNet(AdsNetConfig config, std::vector<std::size_t> cell_channels, std::uint64_t seed)
    : config_(std::move(config)), cell_channels_(std::move(cell_channels)),
      attention_(config_.samples, config_.d_k) {
    const auto rows = shape_chain(config_, 1);
    if (cell_channels_.size() != config_.grid * config_.grid)
        throw Error("shape_mismatch", "Reshape: montage provides " + std::to_string(cell_channels_.size()) +
                                          " cells for a " + std::to_string(config_.grid) + "x" +
                                          std::to_string(config_.grid) + " grid");
    for (auto c : cell_channels_)
        if (c >= config_.channels) throw Error("shape_mismatch", "Reshape: montage cell refers to a missing channel");

    CounterRng rng(derive_key(seed, 0x5EED));
    attention_.init(rng);
    std::uint64_t dropout_id = 0;
    block1_ = build_block(1, config_.block1, 1, dropout_id, rng);
    block2_ = build_block(2, config_.block2, 1, dropout_id, rng);
    block3_ = build_block(3, config_.block3, block_out_channels(config_.block1, 1), dropout_id, rng);
    head_ = std::make_unique<nn::Dense>("head", nn::numel(rows.back().shape), config_.n_classes);
    head_->init(rng);
}

AdsNet::Block AdsNet::build_block(int index, const std::vector<StageSpec>& specs, std::size_t in_channels,
                                  std::uint64_t& dropout_id, CounterRng& rng) {
    Block block;
    const std::string prefix = "b" + std::to_string(index);
    int conv_i = 0, pool_i = 0;
    for (const auto& spec : specs) {
        if (const auto* c = std::get_if<ConvSpec>(&spec)) {
            ++conv_i;
            auto cv = std::make_unique<nn::Conv3d>(prefix + ".conv" + std::to_string(conv_i), in_channels,
                                                   c->out_channels, c->kernel);
            cv->init(rng);
            block.layers.push_back(std::move(cv));
            block.row_labels.emplace_back();
            block.layers.push_back(
                std::make_unique<nn::BatchNorm3d>(prefix + ".bn" + std::to_string(conv_i), c->out_channels));
            block.row_labels.emplace_back(c->elu ? "" : c->label);
            if (c->elu) {
                block.layers.push_back(std::make_unique<nn::Elu>(prefix + ".elu" + std::to_string(conv_i)));
                block.row_labels.emplace_back(c->label);
            }
            in_channels = c->out_channels;
        } else {
            const auto& p = std::get<PoolSpec>(spec);
            ++pool_i;
            block.layers.push_back(
                std::make_unique<nn::Pool3d>(prefix + ".pool" + std::to_string(pool_i), p.kind, p.kernel, p.stride));
            block.row_labels.emplace_back();
            block.layers.push_back(
                std::make_unique<nn::Dropout>(prefix + ".drop" + std::to_string(pool_i), p.dropout, ++dropout_id));
            block.row_labels.emplace_back(pool_label(p));
        }
    }
    return block;
}

nn::Tensor AdsNet::run_block(Block& block, nn::Tensor x, const nn::Context& ctx, const std::string& block_name) {
    for (std::size_t i = 0; i < block.layers.size(); ++i) {
        x = block.layers[i]->forward(x, ctx);
        if (!block.row_labels[i].empty()) shapes_.push_back({block_name, block.row_labels[i], x.shape()});
    }
    return x;
}

nn::Tensor AdsNet::back_block(Block& block, nn::Tensor dy) {
    for (auto it = block.layers.rbegin(); it != block.layers.rend(); ++it) dy = (*it)->backward(dy);
    return dy;
}

nn::Tensor AdsNet::forward(const nn::Tensor& batch, const nn::Context& ctx) {
    if (batch.rank() != 3 || batch.dim(1) != config_.channels || batch.dim(2) != config_.samples)
        throw Error("shape_mismatch", "attn: expected input [B, " + std::to_string(config_.channels) + ", " +
                                          std::to_string(config_.samples) + "], got " + nn::to_string(batch.shape()));
    shapes_.clear();
    const std::size_t B = batch.dim(0), C = config_.channels, T = config_.samples, G = config_.grid;
    const nn::Tensor attended = attention_.forward(batch);

    nn::Tensor grid({B, 1, G, G, T});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t cell = 0; cell < G * G; ++cell)
            std::copy_n(attended.data() + (b * C + cell_channels_[cell]) * T, T, grid.data() + (b * G * G + cell) * T);
    shapes_.push_back({"0", "Reshape", grid.shape()});

    nn::Tensor y1 = run_block(block1_, grid, ctx, "1");
    nn::Tensor y2 = run_block(block2_, grid, ctx, "2");
    b1_out_ = y1.shape();
    b2_out_ = y2.shape();
    nn::Tensor cat = concat_height(y1, y2);
    shapes_.push_back({"3", "Concatenate", cat.shape()});
    nn::Tensor y3 = run_block(block3_, std::move(cat), ctx, "3");
    b3_out_ = y3.shape();
    nn::Tensor flat = y3.reshaped({B, y3.size() / B});
    nn::Tensor logits = head_->forward(flat, ctx);
    shapes_.push_back({"head", "Dense", logits.shape()});
    return logits;
}

nn::Tensor AdsNet::backward(const nn::Tensor& dlogits) {
    nn::Tensor dflat = head_->backward(dlogits);
    nn::Tensor dcat = back_block(block3_, dflat.reshaped(b3_out_));
    nn::Tensor d1, d2;
    split_height(dcat, b1_out_, b2_out_, d1, d2);
    nn::Tensor dgrid = back_block(block1_, std::move(d1));
    const nn::Tensor dgrid2 = back_block(block2_, std::move(d2));
    for (std::size_t i = 0; i < dgrid.size(); ++i) dgrid[i] += dgrid2[i];

    const std::size_t B = dgrid.dim(0), C = config_.channels, T = config_.samples, G = config_.grid;
    nn::Tensor dattended({B, C, T});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t cell = 0; cell < G * G; ++cell) {
            const double* src = dgrid.data() + (b * G * G + cell) * T;
            double* dst = dattended.data() + (b * C + cell_channels_[cell]) * T;
            for (std::size_t t = 0; t < T; ++t) dst[t] += src[t];
        }
    return attention_.backward(dattended);
}

std::vector<nn::Param*> AdsNet::parameters() {
    std::vector<nn::Param*> out;
    attention_.collect_params(out);
    for (auto* block : {&block1_, &block2_, &block3_})
        for (auto& l : block->layers) l->collect_params(out);
    head_->collect_params(out);
    return out;
}

std::vector<nn::Buffer> AdsNet::buffers() {
    std::vector<nn::Buffer> out;
    for (auto* block : {&block1_, &block2_, &block3_})
        for (auto& l : block->layers) l->collect_buffers(out);
    return out;
}

void AdsNet::zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
}

std::size_t AdsNet::parameter_count() {
    std::size_t n = 0;
    for (auto* p : parameters()) n += p->value.size();
    return n;
}

eegio::ModelCheckpoint AdsNet::to_checkpoint() {
    eegio::ModelCheckpoint ckpt;
    auto add = [&](const std::string& name, const nn::Tensor& t) {
        eegio::CheckpointEntry e;
        e.name = name;
        for (auto d : t.shape()) e.dims.push_back(static_cast<std::uint32_t>(d));
        e.values.reserve(t.size());
        for (double v : t.values()) e.values.push_back(static_cast<float>(v));
        ckpt.entries.push_back(std::move(e));
    };
    for (auto* p : parameters()) add(p->name, p->value);
    for (const auto& b : buffers()) add(b.name, *b.value);
    ckpt.metadata["model"] = config_.preset;
    return ckpt;
}

void AdsNet::load_checkpoint(const eegio::ModelCheckpoint& ckpt) {
    auto load = [&](const std::string& name, nn::Tensor& t) {
        const auto* e = ckpt.find(name);
        if (!e) throw Error("checkpoint_mismatch", "checkpoint lacks entry '" + name + "'");
        Shape dims(e->dims.begin(), e->dims.end());
        if (dims != t.shape())
            throw Error("checkpoint_mismatch", "entry '" + name + "' has dims " + to_string(dims) + ", model expects " +
                                                   to_string(t.shape()));
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(e->values[i]);
    };
    for (auto* p : parameters()) load(p->name, p->value);
    for (auto& b : buffers()) load(b.name, *b.value);
}

// ---------------------------------------------------------------------------

LossAndGrads loss_and_grads(AdsNet& model, const nn::Tensor& batch, std::span<const std::size_t> labels,
                            const nn::Context& ctx) {
    for (auto l : labels)
        if (l >= model.config().n_classes) throw Error("bad_label", "label " + std::to_string(l) + " out of range");
    model.zero_grad();
    nn::Tensor logits = model.forward(batch, ctx);
    auto ce = nn::cross_entropy(logits, labels);
    model.backward(ce.grad);
    return {ce.loss, std::move(logits)};
}

std::vector<std::size_t> argmax_rows(const nn::Tensor& logits) {
    const std::size_t B = logits.dim(0), M = logits.dim(1);
    std::vector<std::size_t> out(B);
    for (std::size_t b = 0; b < B; ++b) {
        const double* z = logits.data() + b * M;
        out[b] = static_cast<std::size_t>(std::max_element(z, z + M) - z); // first maximum
    }
    return out;
}

std::vector<std::size_t> predict(AdsNet& model, const nn::Tensor& batch) {
    return argmax_rows(model.forward(batch, {nn::Mode::Eval, 0, false}));
}

std::vector<std::string> checkpoint_names(const AdsNetConfig& config) {
    AdsNet model(config, [&] {
        std::vector<std::size_t> cells(config.grid * config.grid);
        for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = i;
        return cells;
    }(), 0);
    std::vector<std::string> names;
    for (auto* p : model.parameters()) names.push_back(p->name);
    for (const auto& b : model.buffers()) names.push_back(b.name);
    return names;
}

} // namespace ads3d::net
