#include "ads3d/commands.hpp"

#include "ads3d/error.hpp"
#include "ads3d/montage.hpp"
#include "ads3d/stats.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

namespace ads3d::cli {
namespace fs = std::filesystem;
namespace {

void log(const std::string& msg) { std::cerr << "ads3d: " << msg << "\n"; }

fs::path out_dir(const RunConfig& c) {
    fs::path dir = c.get("out_dir");
    if (dir.empty()) throw Error("bad_config", "out_dir must not be empty");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("io", "cannot create " + dir.string() + ": " + ec.message());
    return dir;
}

fs::path required_path(const RunConfig& c, const std::string& key) {
    const std::string& v = c.get(key);
    if (v.empty()) throw Error("missing_key", "'" + key + "' is required");
    return fs::absolute(v);
}

fs::path output_path(const RunConfig& c, const std::string& fallback) {
    const std::string& v = c.get("output");
    return v.empty() ? fs::absolute(out_dir(c) / fallback) : fs::absolute(v);
}

void echo_config(const RunConfig& c, const fs::path& dir) {
    eegio::write_text_atomic(dir / "config.txt", c.to_text());
}

montage::MontageMap load_map(const RunConfig& c) {
    const std::string& path = c.get("montage");
    if (path.empty()) return montage::default_montage();
    std::vector<std::string> warnings;
    auto map = montage::load_montage(path, &warnings);
    for (const auto& w : warnings) log("montage warning: " + w);
    return map;
}

std::string slug(std::string s) {
    for (char& ch : s)
        if (ch == ' ') ch = '_';
    return s;
}

std::string format_confusion(const train::Confusion& m) {
    std::ostringstream os;
    os << "confusion (rows true, columns predicted; classes";
    for (auto name : synth::kClassNames) os << " '" << name << "'";
    os << ")\n";
    for (const auto& row : m) {
        for (std::size_t j = 0; j < row.size(); ++j) os << (j ? " " : "") << row[j];
        os << "\n";
    }
    return os.str();
}

std::string format_anova(const stats::AnovaTable& t, double alpha, const stats::BandSpec& band, std::size_t reps) {
    std::ostringstream os;
    char buf[200];
    os << "# two-way ANOVA on " << band.name << " band power, factors class x channel\n";
    os << "# replicates: " << reps << " trials per cell from one subject\n";
    os << "effect,ss,df,ms,f,p,significant\n";
    auto row = [&](const char* name, const stats::AnovaEffect& e, bool test) {
        std::snprintf(buf, sizeof buf, "%s,%.9g,%.0f,%.9g,%.9g,%.9g,%s\n", name, e.ss, e.df, e.ms, e.f, e.p,
                      test ? (e.p < alpha ? "1" : "0") : "");
        os << buf;
    };
    row("class", t.klass, true);
    row("channel", t.channel, true);
    row("interaction", t.interaction, true);
    row("error", t.error, false);
    std::snprintf(buf, sizeof buf, "total,%.9g,%.0f,,,,\n", t.ss_total, t.df_total);
    os << buf;
    if (t.degenerate) os << "# degenerate: error mean square is zero\n";
    return os.str();
}

} // namespace

fs::path cmd_synth(const RunConfig& c) {
    const auto cfg = synth_config(c);
    const fs::path out = output_path(c, "synth.ads3");
    log("generating " + std::to_string(cfg.n_trials_per_class * synth::kClassNames.size()) + " trials");
    eegio::write_epochset(synth::generate(cfg), out);
    echo_config(c, out_dir(c));
    log("wrote " + out.string());
    return out;
}

fs::path cmd_preprocess(const RunConfig& c) {
    const fs::path in = required_path(c, "input");
    const fs::path out = output_path(c, "preprocessed.ads3");
    const auto raw = eegio::read_epochset(in);
    const auto pre = dsp::preprocess(raw, preprocess_config(c));
    eegio::write_epochset(pre, out);
    echo_config(c, out_dir(c));
    log("wrote " + out.string() + " (" + std::to_string(pre.n_samples) + " samples at " + std::to_string(pre.fs) +
        " Hz)");
    return out;
}

std::string cmd_train(const RunConfig& c) {
    const fs::path in = required_path(c, "input");
    const fs::path dir = out_dir(c);
    const auto epochs = eegio::read_epochset(in);
    const auto net_cfg = net::AdsNetConfig::preset_named(c.get("model"));
    if (epochs.n_channels != net_cfg.channels || epochs.n_samples != net_cfg.samples)
        throw Error("shape_mismatch", "model '" + c.get("model") + "' expects " + std::to_string(net_cfg.channels) +
                                          " channels x " + std::to_string(net_cfg.samples) + " samples, input has " +
                                          std::to_string(epochs.n_channels) + " x " +
                                          std::to_string(epochs.n_samples));
    const auto data = train::make_dataset(epochs, load_map(c), c.number("input_scale"));
    const auto h = hyper(c);
    log("training " + std::to_string(c.count("folds")) + " folds, " + std::to_string(h.epochs) + " epochs each");
    const auto cv = train::cross_validate(net_cfg, data, c.count("folds"), h, c.u64("seed"), c.count("jobs"));

    std::ostringstream os;
    char buf[200];
    os << "# cross-validation: " << cv.reports.size() << " folds, model " << net_cfg.preset << ", selection set "
       << (cv.reports.empty() ? "" : cv.reports[0].selection_set) << "\n";
    os << "fold,initial_test_acc,best_epoch,best_eval_loss,test_loss,test_acc\n";
    for (const auto& r : cv.reports) {
        std::snprintf(buf, sizeof buf, "%zu,%.6f,%zu,%.9g,%.9g,%.6f\n", r.fold, r.initial_test.accuracy, r.best_epoch,
                      r.best_eval_loss, r.test.loss, r.test.accuracy);
        os << buf;
        const std::string stem = "fold" + std::to_string(r.fold);
        eegio::write_checkpoint(r.best_checkpoint, dir / (stem + ".ckpt"));
        eegio::write_text_atomic(dir / (stem + ".log"), r.log_text());
    }
    std::snprintf(buf, sizeof buf, "mean_acc=%.6f\nstd_acc=%.6f\n", cv.mean, cv.std);
    os << buf;
    const std::string summary = os.str();
    eegio::write_text_atomic(dir / "cv_summary.txt", summary);
    echo_config(c, dir);
    log("mean accuracy " + std::to_string(cv.mean) + " +- " + std::to_string(cv.std));
    return summary;
}

std::string cmd_eval(const RunConfig& c) {
    const fs::path in = required_path(c, "input");
    const fs::path ckpt_path = required_path(c, "checkpoint");
    const auto epochs = eegio::read_epochset(in);
    const auto ckpt = eegio::read_checkpoint(ckpt_path);
    double scale = 0;
    if (auto it = ckpt.metadata.find("input_scale"); it != ckpt.metadata.end()) scale = std::strtod(it->second.c_str(), nullptr);
    const auto data = train::make_dataset(epochs, load_map(c), scale);
    auto model = train::restore_model(ckpt, data.cell_channels);
    std::vector<std::size_t> all(data.n_trials);
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto r = train::evaluate(*model, data, all, c.count("batch_size"));

    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof buf, "n=%zu\nloss=%.9g\naccuracy=%.6f\n", r.n, r.loss, r.accuracy);
    os << buf << format_confusion(r.confusion);
    const fs::path dir = out_dir(c);
    eegio::write_text_atomic(dir / "eval.txt", os.str());
    echo_config(c, dir);
    log("accuracy " + std::to_string(r.accuracy) + " on " + std::to_string(r.n) + " trials");
    return os.str();
}

fs::path cmd_stats(const RunConfig& c) {
    const fs::path in = required_path(c, "input");
    const fs::path dir = out_dir(c);
    const auto epochs = eegio::read_epochset(in);
    const auto map = load_map(c);
    const std::size_t a = synth::class_index(c.get("class_a"));
    const std::size_t b = synth::class_index(c.get("class_b"));
    const auto band = stats::band_named(c.get("band"));
    stats::ContrastOptions opt;
    opt.alpha = c.number("alpha");
    opt.window_s = c.number("psd_window_s");
    opt.log_power = c.flag("log_power");
    const auto report = stats::contrast_topography(epochs, a, b, band, opt);

    const fs::path prefix = dir / ("stats_" + slug(std::string(synth::kClassNames[a])) + "_vs_" +
                                   slug(std::string(synth::kClassNames[b])) + "_" + band.name);
    eegio::write_text_atomic(prefix.string() + ".csv", stats::format_report(report));
    stats::export_topomap(report, map, prefix, c.number("tmax"));

    // Class x channel ANOVA over every class present, balanced to the smallest class.
    const auto power = stats::trial_band_power(epochs, band, opt.window_s, opt.log_power);
    std::vector<std::vector<std::size_t>> by_class(eegio::kNumClasses);
    for (std::size_t i = 0; i < epochs.n_trials; ++i) by_class[epochs.labels[i]].push_back(i);
    std::size_t reps = SIZE_MAX;
    std::vector<std::vector<std::vector<double>>> cells;
    for (const auto& trials : by_class)
        if (!trials.empty()) reps = std::min(reps, trials.size());
    for (const auto& trials : by_class) {
        if (trials.empty()) continue;
        std::vector<std::vector<double>> per_channel(epochs.n_channels);
        for (std::size_t ch = 0; ch < epochs.n_channels; ++ch)
            for (std::size_t r = 0; r < reps; ++r) per_channel[ch].push_back(power[trials[r] * epochs.n_channels + ch]);
        cells.push_back(std::move(per_channel));
    }
    const auto table = stats::two_way_anova(cells);
    eegio::write_text_atomic(dir / ("anova_" + band.name + ".txt"), format_anova(table, c.number("anova_alpha"), band, reps));
    echo_config(c, dir);
    log(std::to_string(report.significant_channels().size()) + " significant channels; wrote " + prefix.string() +
        ".*");
    return prefix;
}

int run(int argc, const char* const* argv) {
    CLI::App app{"Attention-based dual-stream 3D CNN pipeline for visual-imagery EEG", "ads3d"};
    app.require_subcommand(1);

    struct Sub {
        CLI::App* app = nullptr;
        std::string config_path;
        bool print_config = false;
        std::map<std::string, std::string> flags;
        std::vector<std::string> overrides;
    };
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"synth", "generate a synthetic corpus"},
        {"preprocess", "notch, bandpass, downsample and epoch"},
        {"train", "cross-validated training"},
        {"eval", "evaluate a checkpoint"},
        {"stats", "band-power contrast, topography and ANOVA"},
    };
    std::vector<std::unique_ptr<Sub>> subs;
    for (const auto& [name, desc] : commands) {
        auto s = std::make_unique<Sub>();
        s->app = app.add_subcommand(name, desc);
        s->app->add_option("--config", s->config_path, "key = value configuration file");
        s->app->add_flag("--print-config", s->print_config, "print the resolved configuration and exit");
        for (const auto& k : config_keys()) {
            std::string help = k.help + " [default: " + (k.default_value.empty() ? "\"\"" : k.default_value) + "]";
            s->app->add_option("--" + k.name, s->flags[k.name], help);
        }
        s->app->add_option("overrides", s->overrides, "key=value overrides");
        subs.push_back(std::move(s));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 1;
    }

    try {
        Sub* active = nullptr;
        std::string name;
        for (std::size_t i = 0; i < subs.size(); ++i)
            if (subs[i]->app->parsed()) {
                active = subs[i].get();
                name = commands[i].first;
            }
        if (!active) throw Error("usage", "no subcommand");

        std::map<std::string, std::string> overrides;
        for (const auto& kv : active->overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos || eq == 0) throw Error("usage", "expected key=value, got '" + kv + "'");
            overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
        }
        for (const auto& k : config_keys())
            if (active->app->count("--" + k.name) > 0) overrides[k.name] = active->flags[k.name];

        std::optional<std::string> file_text;
        if (!active->config_path.empty()) {
            const auto bytes = eegio::read_file(active->config_path);
            file_text = std::string(bytes.begin(), bytes.end());
        }
        std::optional<std::string> env_seed;
        if (const char* e = std::getenv("ADS3D_SEED")) env_seed = e;
        const RunConfig cfg = resolve_config(file_text, env_seed, overrides);
        if (active->print_config) {
            std::cout << cfg.to_text();
            return 0;
        }

        if (name == "synth") cmd_synth(cfg);
        else if (name == "preprocess") cmd_preprocess(cfg);
        else if (name == "train") cmd_train(cfg);
        else if (name == "eval") cmd_eval(cfg);
        else cmd_stats(cfg);
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
    }
    return 1;
}

} // namespace ads3d::cli
