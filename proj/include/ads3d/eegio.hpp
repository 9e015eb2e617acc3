#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace ads3d::eegio {

inline constexpr std::size_t kNumClasses = 4;
inline constexpr std::size_t kChannelNameBytes = 8;
inline constexpr std::uint16_t kEpochFormatVersion = 1;
inline constexpr std::uint16_t kCheckpointFormatVersion = 1;

/// Labeled multichannel epochs, samples in microvolts, layout [trial][channel][sample].
struct EpochSet {
    std::size_t n_trials = 0;
    std::size_t n_channels = 0;
    std::size_t n_samples = 0;
    float fs = 0.0f;
    std::vector<std::uint8_t> labels;
    std::vector<std::string> channel_names;
    std::vector<float> data;

    /// Samples of one channel of one trial.
    std::span<const float> channel(std::size_t trial, std::size_t ch) const {
        return {data.data() + (trial * n_channels + ch) * n_samples, n_samples};
    }
    std::span<float> channel(std::size_t trial, std::size_t ch) {
        return {data.data() + (trial * n_channels + ch) * n_samples, n_samples};
    }

    /// Throws Error("inconsistent", ...) when an invariant does not hold.
    void validate() const;

    bool operator==(const EpochSet&) const = default;
};

struct CheckpointEntry {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::vector<float> values;

    bool operator==(const CheckpointEntry&) const = default;
};

struct ModelCheckpoint {
    std::uint16_t format_version = kCheckpointFormatVersion;
    std::vector<CheckpointEntry> entries;
    std::map<std::string, std::string> metadata;

    const CheckpointEntry* find(const std::string& name) const;
    void validate() const;

    bool operator==(const ModelCheckpoint&) const = default;
};

std::vector<std::uint8_t> encode_epochset(const EpochSet& set);
EpochSet decode_epochset(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_checkpoint(const ModelCheckpoint& ckpt);
ModelCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void write_epochset(const EpochSet& set, const std::filesystem::path& path);
EpochSet read_epochset(const std::filesystem::path& path);

void write_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& path);
ModelCheckpoint read_checkpoint(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

} // namespace ads3d::eegio
