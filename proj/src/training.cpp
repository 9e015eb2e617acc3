#include "ads3d/training.hpp"

#include "ads3d/error.hpp"
#include "ads3d/rng.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace ads3d::train {
namespace {

constexpr std::uint64_t kFoldStream = 0xF01D;
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;
constexpr std::uint64_t kDropoutStream = 3;
constexpr std::uint64_t kSelectionStream = 4;

void shuffle(std::vector<std::size_t>& v, CounterRng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

void round_to_float(net::AdsNet& model) {
    for (auto* p : model.parameters())
        for (double& x : p->value.values()) x = static_cast<double>(static_cast<float>(x));
    for (auto& b : model.buffers())
        for (double& x : b.value->values()) x = static_cast<double>(static_cast<float>(x));
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Stratified split of `indices` into (kept, held out), holding out round(fraction * n_c) per class.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
split_selection(const Dataset& data, std::span<const std::size_t> indices, double fraction, std::uint64_t key) {
    std::vector<std::size_t> kept, held;
    for (std::size_t c = 0; c < eegio::kNumClasses; ++c) {
        std::vector<std::size_t> cls;
        for (auto i : indices)
            if (data.labels[i] == c) cls.push_back(i);
        CounterRng rng(derive_key(key, c));
        shuffle(cls, rng);
        const auto n_held = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(cls.size())));
        held.insert(held.end(), cls.begin(), cls.begin() + static_cast<std::ptrdiff_t>(n_held));
        kept.insert(kept.end(), cls.begin() + static_cast<std::ptrdiff_t>(n_held), cls.end());
    }
    std::sort(kept.begin(), kept.end());
    std::sort(held.begin(), held.end());
    return {kept, held};
}

} // namespace

void adamw_step(std::span<nn::Param* const> params, OptimState& s) {
    if (s.m.empty()) {
        for (auto* p : params) {
            s.m.emplace_back(p->value.shape());
            s.v.emplace_back(p->value.shape());
        }
    }
    if (s.m.size() != params.size()) throw Error("shape_mismatch", "optimizer state does not match the parameters");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (s.m[i].shape() != params[i]->value.shape() || params[i]->grad.shape() != params[i]->value.shape())
            throw Error("shape_mismatch", "optimizer state does not match parameter '" + params[i]->name + "'");
        const auto& g = params[i]->grad.values();
        for (std::size_t j = 0; j < g.size(); ++j)
            if (!std::isfinite(g[j]))
                throw Error("non_finite_gradient", "gradient of '" + params[i]->name + "' element " +
                                                       std::to_string(j) + " is " + format_double(g[j]));
    }

    ++s.step;
    const double t = static_cast<double>(s.step);
    const double bc1 = 1.0 - std::pow(s.beta1, t);
    const double bc2 = 1.0 - std::pow(s.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double lr = params[i]->name.starts_with(kAttentionPrefix) ? s.lr * s.attention_lr_scale : s.lr;
        const double decay = 1.0 - lr * s.weight_decay;
        auto theta = params[i]->value.values();
        const auto& g = params[i]->grad.values();
        auto m = s.m[i].values();
        auto v = s.v[i].values();
        for (std::size_t j = 0; j < theta.size(); ++j) {
            m[j] = s.beta1 * m[j] + (1.0 - s.beta1) * g[j];
            v[j] = s.beta2 * v[j] + (1.0 - s.beta2) * g[j] * g[j];
            const double m_hat = m[j] / bc1;
            const double v_hat = v[j] / bc2;
            theta[j] = theta[j] * decay - lr * m_hat / (std::sqrt(v_hat) + s.eps);
        }
    }
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t f = 0; f < folds.size(); ++f)
        if (f != fold) out.insert(out.end(), folds[f].begin(), folds[f].end());
    std::sort(out.begin(), out.end());
    return out;
}

FoldPlan make_folds(std::span<const std::uint8_t> labels, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw Error("bad_folds", "k must be at least 2");
    std::vector<std::vector<std::size_t>> by_class(256);
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    std::size_t min_count = SIZE_MAX;
    for (const auto& c : by_class)
        if (!c.empty()) min_count = std::min(min_count, c.size());
    if (min_count == SIZE_MAX) throw Error("bad_folds", "no trials");
    if (k > min_count)
        throw Error("bad_folds", "k = " + std::to_string(k) + " exceeds the smallest class count " +
                                     std::to_string(min_count));

    FoldPlan plan;
    plan.folds.resize(k);
    std::size_t dealt = 0;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& members = by_class[c];
        CounterRng rng(derive_key(seed, c));
        shuffle(members, rng);
        for (auto idx : members) plan.folds[dealt++ % k].push_back(idx);
    }
    for (auto& f : plan.folds) std::sort(f.begin(), f.end());
    return plan;
}

nn::Tensor Dataset::batch(std::span<const std::size_t> trials) const {
    nn::Tensor t({trials.size(), n_channels, n_samples});
    const std::size_t stride = n_channels * n_samples;
    for (std::size_t b = 0; b < trials.size(); ++b)
        std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(trials[b] * stride), stride, t.data() + b * stride);
    return t;
}

std::vector<std::size_t> Dataset::batch_labels(std::span<const std::size_t> trials) const {
    std::vector<std::size_t> out;
    for (auto i : trials) out.push_back(labels[i]);
    return out;
}

Hyper Hyper::desk_scale() {
    Hyper h;
    h.lr = 3e-3;
    h.epochs = 60;
    h.attention_lr_scale = 0.0;
    return h;
}

Dataset make_dataset(const eegio::EpochSet& epochs, const montage::MontageMap& map, double input_scale) {
    epochs.validate();
    Dataset d;
    d.n_trials = epochs.n_trials;
    d.n_channels = epochs.n_channels;
    d.n_samples = epochs.n_samples;
    d.cell_channels = map.resolve(epochs.channel_names);
    d.labels.assign(epochs.labels.begin(), epochs.labels.end());
    if (!(input_scale > 0)) {
        double ss = 0;
        for (float v : epochs.data) ss += static_cast<double>(v) * v;
        const double rms = epochs.data.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(epochs.data.size()));
        input_scale = rms > 0 ? kInputRms / rms : 1.0;
    }
    d.input_scale = input_scale;
    d.x.resize(epochs.data.size());
    for (std::size_t i = 0; i < d.x.size(); ++i) d.x[i] = static_cast<double>(epochs.data[i]) * input_scale;
    return d;
}

EvalResult score(std::span<const std::size_t> truth, std::span<const std::size_t> predicted) {
    if (truth.empty()) throw Error("empty_indices", "cannot score an empty set");
    if (truth.size() != predicted.size()) throw Error("length_mismatch", "truth and predictions differ in length");
    EvalResult r;
    r.n = truth.size();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] >= eegio::kNumClasses || predicted[i] >= eegio::kNumClasses)
            throw Error("bad_label", "label out of range");
        ++r.confusion[truth[i]][predicted[i]];
        correct += truth[i] == predicted[i];
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(r.n);
    return r;
}

EvalResult evaluate(net::AdsNet& model, const Dataset& data, std::span<const std::size_t> indices,
                    std::size_t batch_size) {
    if (indices.empty()) throw Error("empty_indices", "evaluate needs at least one trial");
    const nn::Context ctx{nn::Mode::Eval, 0, false};
    std::vector<std::size_t> truth, predicted;
    double loss_sum = 0;
    for (std::size_t start = 0; start < indices.size(); start += batch_size) {
        const auto chunk = indices.subspan(start, std::min(batch_size, indices.size() - start));
        const auto labels = data.batch_labels(chunk);
        const nn::Tensor logits = model.forward(data.batch(chunk), ctx);
        loss_sum += nn::cross_entropy(logits, labels).loss * static_cast<double>(chunk.size());
        const auto pred = net::argmax_rows(logits);
        truth.insert(truth.end(), labels.begin(), labels.end());
        predicted.insert(predicted.end(), pred.begin(), pred.end());
    }
    EvalResult r = score(truth, predicted);
    r.loss = loss_sum / static_cast<double>(indices.size());
    return r;
}

std::string TrainReport::log_text() const {
    std::ostringstream os;
    char buf[160];
    os << "# fold " << fold << "\n";
    os << "# selection set: " << selection_set << "\n";
    std::snprintf(buf, sizeof buf, "# initial eval_loss=%.9g eval_acc=%.6f test_acc=%.6f\n", initial.loss,
                  initial.accuracy, initial_test.accuracy);
    os << buf;
    std::snprintf(buf, sizeof buf, "# best_epoch=%zu best_eval_loss=%.9g\n", best_epoch, best_eval_loss);
    os << buf;
    std::snprintf(buf, sizeof buf, "# test_loss=%.9g test_acc=%.6f n=%zu\n", test.loss, test.accuracy, test.n);
    os << buf;
    os << "# confusion (rows true, columns predicted):";
    for (const auto& row : test.confusion) {
        os << " [";
        for (std::size_t j = 0; j < row.size(); ++j) os << (j ? " " : "") << row[j];
        os << "]";
    }
    os << "\n";
    std::snprintf(buf, sizeof buf, "# wall_seconds=%.3f\n", wall_seconds);
    os << buf;
    os << "epoch,train_loss,eval_loss,eval_acc\n";
    for (const auto& e : epochs) {
        std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.6f\n", e.epoch, e.train_loss, e.eval_loss, e.eval_accuracy);
        os << buf;
    }
    return os.str();
}

TrainReport train_one_fold(const net::AdsNetConfig& config, const Dataset& data, std::span<const std::size_t> train,
                           std::span<const std::size_t> test, const Hyper& hyper, std::uint64_t seed,
                           std::size_t fold) {
    const auto t0 = std::chrono::steady_clock::now();
    if (train.size() < 2) throw Error("empty_indices", "training split needs at least two trials");
    if (test.empty()) throw Error("empty_indices", "test split is empty");
    if (hyper.batch_size < 2) throw Error("bad_config", "batch_size must be at least 2");
    if (!(hyper.selection_fraction >= 0 && hyper.selection_fraction < 1))
        throw Error("bad_config", "selection_fraction must lie in [0, 1)");

    const std::uint64_t run_key = derive_key(seed, (kFoldStream << 32) + fold);
    net::AdsNet model(config, data.cell_channels, derive_key(run_key, kInitStream));
    round_to_float(model);

    TrainReport report;
    report.fold = fold;
    std::vector<std::size_t> fit(train.begin(), train.end());
    std::vector<std::size_t> selection(test.begin(), test.end());
    report.selection_set = "test fold";
    if (hyper.selection_fraction > 0) {
        auto [kept, held] = split_selection(data, train, hyper.selection_fraction, derive_key(run_key, kSelectionStream));
        if (held.empty() || kept.size() < 2) throw Error("bad_config", "selection_fraction leaves an empty split");
        fit = std::move(kept);
        selection = std::move(held);
        report.selection_set = "held-out training subset";
    }

    OptimState opt(hyper);
    const bool learning = hyper.lr != 0.0;
    const auto params = model.parameters();
    auto stamp = [&](eegio::ModelCheckpoint ckpt) {
        ckpt.metadata["input_scale"] = format_double(data.input_scale);
        ckpt.metadata["fold"] = std::to_string(fold);
        return ckpt;
    };

    report.initial = evaluate(model, data, selection, hyper.batch_size);
    report.initial_test = evaluate(model, data, test, hyper.batch_size);
    report.best_eval_loss = report.initial.loss;
    report.best_checkpoint = stamp(model.to_checkpoint());

    std::vector<std::size_t> order = fit;
    for (std::size_t epoch = 1; epoch <= hyper.epochs; ++epoch) {
        CounterRng shuffle_rng(derive_key(derive_key(run_key, kShuffleStream), epoch));
        order = fit;
        shuffle(order, shuffle_rng);

        double loss_sum = 0;
        std::size_t b = 0;
        for (std::size_t start = 0; start < order.size(); ++b) {
            std::size_t len = std::min(hyper.batch_size, order.size() - start);
            if (order.size() - start - len == 1) ++len; // never leave a single-trial batch
            const std::span<const std::size_t> chunk(order.data() + start, len);
            start += len;
            const nn::Context ctx{nn::Mode::Train, derive_key(derive_key(run_key, kDropoutStream), (epoch << 20) + b),
                                  learning};
            const auto labels = data.batch_labels(chunk);
            const auto lg = net::loss_and_grads(model, data.batch(chunk), labels, ctx);
            if (!std::isfinite(lg.loss))
                throw Error("non_finite", "fold " + std::to_string(fold) + " epoch " + std::to_string(epoch) +
                                              " batch " + std::to_string(b) + ": loss is " + format_double(lg.loss));
            loss_sum += lg.loss * static_cast<double>(len);
            try {
                adamw_step(params, opt);
            } catch (const Error& e) {
                throw Error(e.code(), "fold " + std::to_string(fold) + " epoch " + std::to_string(epoch) + ": " +
                                          e.what());
            }
        }
        round_to_float(model);

        const EvalResult ev = evaluate(model, data, selection, hyper.batch_size);
        if (!std::isfinite(ev.loss))
            throw Error("non_finite", "fold " + std::to_string(fold) + " epoch " + std::to_string(epoch) +
                                          ": selection loss is not finite");
        report.epochs.push_back({epoch, loss_sum / static_cast<double>(order.size()), ev.loss, ev.accuracy});
        if (report.best_epoch == 0 || ev.loss < report.best_eval_loss) {
            report.best_epoch = epoch;
            report.best_eval_loss = ev.loss;
            report.best_checkpoint = stamp(model.to_checkpoint());
            report.best_checkpoint.metadata["best_epoch"] = std::to_string(epoch);
        }
    }

    model.load_checkpoint(report.best_checkpoint);
    report.test = evaluate(model, data, test, hyper.batch_size);
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

MeanStd mean_population_std(std::span<const double> values) {
    if (values.empty()) throw Error("empty_indices", "no values");
    MeanStd r;
    for (double v : values) r.mean += v;
    r.mean /= static_cast<double>(values.size());
    double ss = 0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(values.size()));
    return r;
}

CvResult cross_validate(const net::AdsNetConfig& config, const Dataset& data, std::size_t k, const Hyper& hyper,
                        std::uint64_t seed, std::size_t jobs) {
    CvResult cv;
    std::vector<std::uint8_t> labels(data.labels.begin(), data.labels.end());
    cv.plan = make_folds(labels, k, seed);
    cv.reports.resize(k);

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t f; (f = next++) < k;) {
            try {
                cv.reports[f] =
                    train_one_fold(config, data, cv.plan.train_indices(f), cv.plan.test_indices(f), hyper, seed, f);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    jobs = std::clamp<std::size_t>(jobs, 1, k);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    for (const auto& r : cv.reports) cv.accuracies.push_back(r.test.accuracy);
    const MeanStd ms = mean_population_std(cv.accuracies);
    cv.mean = ms.mean;
    cv.std = ms.std;
    return cv;
}

std::unique_ptr<net::AdsNet> restore_model(const eegio::ModelCheckpoint& ckpt,
                                           std::span<const std::size_t> cell_channels) {
    const auto it = ckpt.metadata.find("model");
    if (it == ckpt.metadata.end()) throw Error("checkpoint_mismatch", "checkpoint has no 'model' metadata");
    auto model = std::make_unique<net::AdsNet>(net::AdsNetConfig::preset_named(it->second),
                                               std::vector<std::size_t>(cell_channels.begin(), cell_channels.end()), 0);
    model->load_checkpoint(ckpt);
    return model;
}

} // namespace ads3d::train
