#include "ads3d/config.hpp"

#include "ads3d/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

namespace ads3d::cli {
namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

} // namespace

const std::vector<KeySpec>& config_keys() {
    static const std::vector<KeySpec> keys = {
        {"seed", "1", "seed for every random stream"},
        {"out_dir", "out", "directory for reports, checkpoints and the resolved config"},
        {"input", "", "input epoch file"},
        {"output", "", "output epoch file (synth, preprocess)"},
        {"checkpoint", "", "model checkpoint (eval)"},
        {"montage", "", "montage file; empty uses the built-in 8x8 layout"},
        {"model", "reduced", "network preset: full, reduced or tiny"},
        {"preprocess", "reduced", "preprocessing preset: full (250 Hz, 1001 samples) or reduced (125 Hz, 251 samples)"},
        {"notch", "true", "apply the 60 Hz notch"},
        {"band_lo_hz", "4", "bandpass lower edge"},
        {"band_hi_hz", "40", "bandpass upper edge"},
        {"band_order", "5", "Butterworth order"},
        {"lr", "0.001", "AdamW learning rate"},
        {"beta1", "0.9", "AdamW first-moment decay"},
        {"beta2", "0.999", "AdamW second-moment decay"},
        {"eps", "1e-8", "AdamW epsilon"},
        {"weight_decay", "0.01", "decoupled weight decay"},
        {"attention_lr_scale", "1", "learning-rate multiplier for the attention projections; 0 keeps them at their initial values"},
        {"epochs", "200", "training epochs per fold"},
        {"batch_size", "40", "mini-batch size"},
        {"folds", "5", "cross-validation folds"},
        {"jobs", "1", "folds trained concurrently"},
        {"selection_fraction", "0", "share of each training split used for checkpoint selection; 0 selects on the test fold"},
        {"input_scale", "0", "multiplier applied to inputs; 0 scales the input file to RMS 3"},
        {"synth_trials_per_class", "50", "synthetic trials per class"},
        {"synth_fs", "500", "synthetic sampling rate in Hz"},
        {"synth_pre_s", "0.5", "seconds before the imagery period"},
        {"synth_imagery_s", "4", "imagery period in seconds"},
        {"synth_post_s", "0.5", "seconds after the imagery period"},
        {"synth_noise_rms_uv", "10", "background RMS in uV"},
        {"synth_noise_exponent", "1", "background spectrum exponent (1/f^x)"},
        {"synth_line_uv", "5", "60 Hz line amplitude in uV"},
        {"synth_effect_gain", "1", "multiplier on every planted amplitude; 0 gives pure noise"},
        {"synth_ceiling_uv", "500", "clip level in uV"},
        {"class_a", "split", "first class of the contrast"},
        {"class_b", "hovering", "second class of the contrast"},
        {"band", "alpha", "contrast band: alpha, beta or both"},
        {"alpha", "0.01", "significance level of the Bonferroni-corrected masks"},
        {"anova_alpha", "0.05", "significance level reported for the ANOVA"},
        {"log_power", "false", "test log band power instead of band power"},
        {"psd_window_s", "1", "Welch segment length in seconds"},
        {"tmax", "0", "t mapped to white in the PGM; 0 uses max |t|"},
    };
    return keys;
}

RunConfig::RunConfig() {
    for (const auto& k : config_keys()) values_[k.name] = k.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw Error("unknown_key", "unknown configuration key '" + key + "'");
    it->second = value;
}

const std::string& RunConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw Error("unknown_key", "unknown configuration key '" + key + "'");
    return it->second;
}

double RunConfig::number(const std::string& key) const {
    const std::string& s = get(key);
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
        throw Error("bad_config", key + ": expected a number, got '" + s + "'");
    return v;
}

std::size_t RunConfig::count(const std::string& key) const { return static_cast<std::size_t>(u64(key)); }

std::uint64_t RunConfig::u64(const std::string& key) const {
    const std::string& s = get(key);
    std::uint64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw Error("bad_config", key + ": expected a non-negative integer, got '" + s + "'");
    return v;
}

bool RunConfig::flag(const std::string& key) const {
    std::string s = get(key);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw Error("bad_config", key + ": expected true or false, got '" + get(key) + "'");
}

std::string RunConfig::to_text() const {
    std::string out;
    for (const auto& k : config_keys()) out += k.name + " = " + values_.at(k.name) + "\n";
    return out;
}

RunConfig parse_config_text(std::string_view text, RunConfig base) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw Error("bad_config", "line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (key.empty()) throw Error("bad_config", "line " + std::to_string(line_no) + ": empty key");
        try {
            base.set(key, value);
        } catch (const Error& e) {
            throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return base;
}

RunConfig resolve_config(const std::optional<std::string>& file_text, const std::optional<std::string>& env_seed,
                         const std::map<std::string, std::string>& overrides) {
    RunConfig cfg;
    if (file_text) cfg = parse_config_text(*file_text, cfg);
    if (env_seed && !env_seed->empty()) cfg.set("seed", *env_seed);
    for (const auto& [k, v] : overrides) cfg.set(k, v);
    cfg.u64("seed");
    return cfg;
}

synth::SynthConfig synth_config(const RunConfig& c) {
    synth::SynthConfig s = synth::reference_template();
    s.seed = c.u64("seed");
    s.n_trials_per_class = c.count("synth_trials_per_class");
    s.fs = c.number("synth_fs");
    s.pre_s = c.number("synth_pre_s");
    s.imagery_s = c.number("synth_imagery_s");
    s.post_s = c.number("synth_post_s");
    s.noise_rms_uv = c.number("synth_noise_rms_uv");
    s.noise_exponent = c.number("synth_noise_exponent");
    s.line_amplitude_uv = c.number("synth_line_uv");
    s.effect_gain = c.number("synth_effect_gain");
    s.ceiling_uv = c.number("synth_ceiling_uv");
    s.validate();
    return s;
}

dsp::PreprocessConfig preprocess_config(const RunConfig& c) {
    dsp::PreprocessConfig p = dsp::PreprocessConfig::named(c.get("preprocess"));
    p.notch = c.flag("notch");
    p.band_lo_hz = c.number("band_lo_hz");
    p.band_hi_hz = c.number("band_hi_hz");
    p.band_order = static_cast<int>(c.count("band_order"));
    return p;
}

train::Hyper hyper(const RunConfig& c) {
    train::Hyper h;
    h.lr = c.number("lr");
    h.beta1 = c.number("beta1");
    h.beta2 = c.number("beta2");
    h.eps = c.number("eps");
    h.weight_decay = c.number("weight_decay");
    h.epochs = c.count("epochs");
    h.batch_size = c.count("batch_size");
    h.selection_fraction = c.number("selection_fraction");
    h.attention_lr_scale = c.number("attention_lr_scale");
    return h;
}

} // namespace ads3d::cli
