#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ads3d::montage {

inline constexpr std::size_t kGridSide = 8;
inline constexpr std::size_t kGridCells = kGridSide * kGridSide;

struct Cell {
    std::size_t row = 0;
    std::size_t col = 0;
    std::string channel;
};

/// Bijective assignment of named channels to the cells of a square grid.
class MontageMap {
public:
    /// Validates the bijection; throws Error with code "duplicate_cell",
    /// "duplicate_channel", "bad_count" or "bad_index".
    explicit MontageMap(std::vector<Cell> cells, std::size_t side = kGridSide);

    std::size_t side() const noexcept { return side_; }
    const std::vector<Cell>& cells() const noexcept { return cells_; }

    /// Channel name at (row, col).
    const std::string& channel_at(std::size_t row, std::size_t col) const;
    /// Cell holding `name` (case-insensitive); throws "unknown_channel".
    std::pair<std::size_t, std::size_t> cell_of(std::string_view name) const;

    /// For every cell in row-major order, the index of its channel in `channel_names`.
    /// Throws "channel_mismatch" when a montage channel is missing or names do not
    /// match one-to-one.
    std::vector<std::size_t> resolve(std::span<const std::string> channel_names) const;

    /// Midline ('z') channels that are neither on the main diagonal nor one of the
    /// documented shifted exceptions (Fz, AFz).
    std::vector<std::string> midline_warnings() const;

private:
    std::size_t side_;
    std::vector<Cell> cells_;
    std::vector<std::size_t> grid_; // row-major cell -> index into cells_
};

MontageMap parse_montage(std::string_view text, std::vector<std::string>* warnings = nullptr);
MontageMap load_montage(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);

/// Montage text shipped as data/montage_8x8.txt.
std::string_view default_montage_text();
const MontageMap& default_montage();
/// The 64 channel names of the default montage in acquisition order.
std::span<const std::string> default_channel_names();

/// grid[r][c][t] = epoch[channel_at(r, c)][t]. `epoch` is [C x T] row-major,
/// `cell_channels` comes from MontageMap::resolve.
std::vector<double> to_grid(std::span<const double> epoch, std::size_t n_samples,
                            std::span<const std::size_t> cell_channels);
std::vector<double> to_grid(std::span<const double> epoch, std::size_t n_samples,
                            std::span<const std::string> channel_names, const MontageMap& map);

/// Exact inverse of to_grid.
std::vector<double> from_grid(std::span<const double> grid, std::size_t n_samples,
                              std::span<const std::size_t> cell_channels);
std::vector<double> from_grid(std::span<const double> grid, std::size_t n_samples,
                              std::span<const std::string> channel_names, const MontageMap& map);

} // namespace ads3d::montage
