#pragma once

#include "ads3d/preprocess.hpp"
#include "ads3d/synthgen.hpp"
#include "ads3d/training.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ads3d::cli {

struct KeySpec {
    std::string name;
    std::string default_value;
    std::string help;
};

/// Every accepted configuration key with its default, in documentation order.
const std::vector<KeySpec>& config_keys();

/// Flat key = value configuration. Unknown keys are rejected on every path in.
class RunConfig {
public:
    /// All keys at their defaults.
    RunConfig();

    /// Throws Error("unknown_key", ...).
    void set(const std::string& key, const std::string& value);
    const std::string& get(const std::string& key) const;

    double number(const std::string& key) const;
    std::size_t count(const std::string& key) const;
    std::uint64_t u64(const std::string& key) const;
    bool flag(const std::string& key) const;

    const std::map<std::string, std::string>& values() const { return values_; }
    /// Serialized in config_keys() order; parse_config_text(to_text()) reproduces it.
    std::string to_text() const;

private:
    std::map<std::string, std::string> values_;
};

/// Applies `key = value` lines ('#' starts a comment) on top of `base`.
/// Throws "bad_config" (with the line number) or "unknown_key".
RunConfig parse_config_text(std::string_view text, RunConfig base = {});

/// Defaults, then the file, then ADS3D_SEED, then command-line overrides.
RunConfig resolve_config(const std::optional<std::string>& file_text, const std::optional<std::string>& env_seed,
                         const std::map<std::string, std::string>& overrides);

synth::SynthConfig synth_config(const RunConfig& config);
dsp::PreprocessConfig preprocess_config(const RunConfig& config);
train::Hyper hyper(const RunConfig& config);

} // namespace ads3d::cli
