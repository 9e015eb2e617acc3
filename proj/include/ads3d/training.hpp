#pragma once

#include "ads3d/adsnet.hpp"
#include "ads3d/eegio.hpp"
#include "ads3d/montage.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ads3d::train {

struct Hyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
    std::size_t epochs = 200;
    std::size_t batch_size = 40;
    /// Fraction of each training split held out for checkpoint selection.
    /// 0 selects on the test fold itself.
    double selection_fraction = 0.0;
    /// Multiplies lr (and hence the decay step) for the attention projections.
    double attention_lr_scale = 1.0;

    /// Settings used for desk-scale runs of the reduced network on synthetic data.
    static Hyper desk_scale();
};

/// Parameter-name prefix of the attention projections.
inline constexpr std::string_view kAttentionPrefix = "attn.";

struct OptimState {
    double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8, weight_decay = 0.01;
    double attention_lr_scale = 1.0;
    std::uint64_t step = 0;
    std::vector<nn::Tensor> m, v;

    OptimState() = default;
    explicit OptimState(const Hyper& h)
        : lr(h.lr), beta1(h.beta1), beta2(h.beta2), eps(h.eps), weight_decay(h.weight_decay),
          attention_lr_scale(h.attention_lr_scale) {}
};

/// One AdamW update from the gradients stored in `params`; moments are created
/// on first use. Weight decay acts on the parameter directly:
/// theta -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta), with lr
/// multiplied by attention_lr_scale for parameters named kAttentionPrefix*.
/// Throws "non_finite_gradient" (naming the parameter) before touching anything.
void adamw_step(std::span<nn::Param* const> params, OptimState& state);

struct FoldPlan {
    std::vector<std::vector<std::size_t>> folds; ///< sorted trial indices per fold

    std::size_t k() const { return folds.size(); }
    std::vector<std::size_t> test_indices(std::size_t fold) const { return folds.at(fold); }
    std::vector<std::size_t> train_indices(std::size_t fold) const;
};

/// Stratified k-fold partition: each class is shuffled with a seeded counter
/// stream and dealt round-robin. Throws "bad_folds" for k < 2 or k > the smallest
/// class count.
FoldPlan make_folds(std::span<const std::uint8_t> labels, std::size_t k, std::uint64_t seed);

/// Network inputs in montage order plus labels.
struct Dataset {
    std::size_t n_trials = 0, n_channels = 0, n_samples = 0;
    std::vector<double> x; ///< [trial][channel][sample], multiplied by input_scale
    std::vector<std::size_t> labels;
    std::vector<std::size_t> cell_channels;
    double input_scale = 1.0;

    nn::Tensor batch(std::span<const std::size_t> trials) const;
    std::vector<std::size_t> batch_labels(std::span<const std::size_t> trials) const;
};

/// RMS of the network input when the scale is picked automatically.
inline constexpr double kInputRms = 3.0;

/// input_scale <= 0 picks kInputRms / RMS over every sample of the set.
Dataset make_dataset(const eegio::EpochSet& epochs, const montage::MontageMap& map, double input_scale = 0);

using Confusion = std::array<std::array<std::size_t, eegio::kNumClasses>, eegio::kNumClasses>;

struct EvalResult {
    double loss = 0;
    double accuracy = 0;
    Confusion confusion{}; ///< confusion[true][predicted]
    std::size_t n = 0;
};

/// Eval-mode loss, accuracy and confusion on `indices`; throws "empty_indices".
EvalResult evaluate(net::AdsNet& model, const Dataset& data, std::span<const std::size_t> indices,
                    std::size_t batch_size = 40);
/// Accuracy and confusion from predictions; throws "empty_indices".
EvalResult score(std::span<const std::size_t> truth, std::span<const std::size_t> predicted);

struct EpochLog {
    std::size_t epoch = 0; ///< 1-based
    double train_loss = 0;
    double eval_loss = 0;
    double eval_accuracy = 0;
};

struct TrainReport {
    std::size_t fold = 0;
    std::string selection_set; ///< "test fold" or "held-out training subset"
    EvalResult initial;        ///< selection metrics of the untrained model
    EvalResult initial_test;   ///< test fold metrics of the untrained model
    std::vector<EpochLog> epochs;
    std::size_t best_epoch = 0; ///< 0 when no epoch beat the initial model
    double best_eval_loss = 0;
    eegio::ModelCheckpoint best_checkpoint;
    EvalResult test; ///< test fold metrics of the restored best checkpoint
    double wall_seconds = 0;

    /// Line-oriented log: '#' header lines, then epoch,train_loss,eval_loss,eval_acc.
    std::string log_text() const;
};

/// Trains a fresh model on `train` and selects the epoch with the lowest
/// selection loss. Parameters and batchnorm statistics are rounded to float32
/// after every epoch so the stored checkpoint is exactly the evaluated model.
/// With lr == 0 running statistics are frozen as well.
/// Throws "non_finite" with epoch context.
TrainReport train_one_fold(const net::AdsNetConfig& config, const Dataset& data,
                           std::span<const std::size_t> train, std::span<const std::size_t> test,
                           const Hyper& hyper, std::uint64_t seed, std::size_t fold = 0);

struct CvResult {
    FoldPlan plan;
    std::vector<TrainReport> reports;
    std::vector<double> accuracies;
    double mean = 0;
    double std = 0; ///< population standard deviation
};

struct MeanStd {
    double mean = 0;
    double std = 0;
};
MeanStd mean_population_std(std::span<const double> values);

/// k-fold cross-validation; folds run on up to `jobs` threads with results
/// independent of the thread count.
CvResult cross_validate(const net::AdsNetConfig& config, const Dataset& data, std::size_t k, const Hyper& hyper,
                        std::uint64_t seed, std::size_t jobs = 1);

/// Builds a model for `ckpt` (preset and input scale from its metadata) and loads it.
std::unique_ptr<net::AdsNet> restore_model(const eegio::ModelCheckpoint& ckpt,
                                           std::span<const std::size_t> cell_channels);

} // namespace ads3d::train
