#include "ads3d/montage.hpp"

#include "ads3d/error.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace ads3d::montage {

namespace detail {
extern const std::string_view kDefaultMontageText;
}

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool shifted_exception(std::string_view name) {
    const auto l = lower(name);
    return l == "fz" || l == "afz";
}

const std::vector<std::string> kAcquisitionOrder = {
    "Fp1", "Fp2", "AF7", "AF3", "AFz", "AF4", "AF8", "F7",  "F5",  "F3",   "F1",  "Fz",  "F2",
    "F4",  "F6",  "F8",  "FT9", "FT7", "FC5", "FC3", "FC1", "FCz", "FC2",  "FC4", "FC6", "FT8",
    "FT10", "T7", "C5",  "C3",  "C1",  "Cz",  "C2",  "C4",  "C6",  "T8",   "TP9", "TP7", "CP5",
    "CP3", "CP1", "CPz", "CP2", "CP4", "CP6", "TP8", "TP10", "P7", "P5",   "P3",  "P1",  "Pz",
    "P2",  "P4",  "P6",  "P8",  "PO7", "PO3", "POz", "PO4", "PO8", "O1",   "Oz",  "O2"};

} // namespace

MontageMap::MontageMap(std::vector<Cell> cells, std::size_t side) : side_(side), cells_(std::move(cells)) {
    const std::size_t n = side_ * side_;
    if (cells_.size() != n)
        throw Error("bad_count", "expected " + std::to_string(n) + " entries, got " + std::to_string(cells_.size()));
    grid_.assign(n, n);
    std::map<std::string, std::size_t> names;
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        const auto& c = cells_[i];
        if (c.row >= side_ || c.col >= side_)
            throw Error("bad_index", "cell (" + std::to_string(c.row) + "," + std::to_string(c.col) +
                                         ") outside 0.." + std::to_string(side_ - 1));
        auto& slot = grid_[c.row * side_ + c.col];
        if (slot != n)
            throw Error("duplicate_cell",
                        "duplicate cell (" + std::to_string(c.row) + "," + std::to_string(c.col) + ")");
        slot = i;
        if (!names.emplace(lower(c.channel), i).second)
            throw Error("duplicate_channel", "duplicate channel '" + c.channel + "'");
    }
}

const std::string& MontageMap::channel_at(std::size_t row, std::size_t col) const {
    if (row >= side_ || col >= side_) throw Error("bad_index", "cell outside grid");
    return cells_[grid_[row * side_ + col]].channel;
}

std::pair<std::size_t, std::size_t> MontageMap::cell_of(std::string_view name) const {
    const auto l = lower(name);
    for (const auto& c : cells_)
        if (lower(c.channel) == l) return {c.row, c.col};
    throw Error("unknown_channel", "channel '" + std::string(name) + "' is not in the montage");
}

std::vector<std::size_t> MontageMap::resolve(std::span<const std::string> channel_names) const {
    if (channel_names.size() != cells_.size())
        throw Error("channel_mismatch", "epoch has " + std::to_string(channel_names.size()) +
                                            " channels, montage has " + std::to_string(cells_.size()));
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < channel_names.size(); ++i)
        if (!index.emplace(lower(channel_names[i]), i).second)
            throw Error("channel_mismatch", "duplicate epoch channel '" + channel_names[i] + "'");
    std::vector<std::size_t> out(grid_.size());
    for (std::size_t cell = 0; cell < grid_.size(); ++cell) {
        const auto& name = cells_[grid_[cell]].channel;
        auto it = index.find(lower(name));
        if (it == index.end()) throw Error("channel_mismatch", "montage channel '" + name + "' missing from epochs");
        out[cell] = it->second;
    }
    return out;
}

std::vector<std::string> MontageMap::midline_warnings() const {
    std::vector<std::string> out;
    for (const auto& c : cells_) {
        const auto l = lower(c.channel);
        if (l.empty() || l.back() != 'z') continue;
        if (c.row != c.col && !shifted_exception(c.channel))
            out.push_back("midline channel " + c.channel + " is off the diagonal at (" + std::to_string(c.row) +
                          "," + std::to_string(c.col) + ")");
    }
    return out;
}

MontageMap parse_montage(std::string_view text, std::vector<std::string>* warnings) {
    std::vector<Cell> cells;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        long long row = -1, col = -1;
        std::string name, extra;
        if (!(ls >> row >> col >> name) || (ls >> extra))
            throw Error("bad_line", "montage line " + std::to_string(lineno) + ": expected 'row col name'");
        if (row < 0 || col < 0)
            throw Error("bad_index", "montage line " + std::to_string(lineno) + ": negative index");
        cells.push_back({static_cast<std::size_t>(row), static_cast<std::size_t>(col), name});
    }
    if (cells.size() != kGridCells)
        throw Error("bad_count", "expected 64 entries, got " + std::to_string(cells.size()));
    MontageMap map(std::move(cells));
    if (warnings) *warnings = map.midline_warnings();
    return map;
}

MontageMap load_montage(const std::filesystem::path& path, std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) throw Error("io", "cannot open montage '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_montage(ss.str(), warnings);
}

std::string_view default_montage_text() { return detail::kDefaultMontageText; }

const MontageMap& default_montage() {
    static const MontageMap map = parse_montage(default_montage_text());
    return map;
}

std::span<const std::string> default_channel_names() { return kAcquisitionOrder; }

std::vector<double> to_grid(std::span<const double> epoch, std::size_t n_samples,
                            std::span<const std::size_t> cell_channels) {
    if (epoch.size() != cell_channels.size() * n_samples)
        throw Error("channel_mismatch", "epoch size does not match montage");
    std::vector<double> grid(epoch.size());
    for (std::size_t cell = 0; cell < cell_channels.size(); ++cell)
        std::copy_n(epoch.begin() + static_cast<std::ptrdiff_t>(cell_channels[cell] * n_samples), n_samples,
                    grid.begin() + static_cast<std::ptrdiff_t>(cell * n_samples));
    return grid;
}

std::vector<double> to_grid(std::span<const double> epoch, std::size_t n_samples,
                            std::span<const std::string> channel_names, const MontageMap& map) {
    const auto idx = map.resolve(channel_names);
    return to_grid(epoch, n_samples, idx);
}

std::vector<double> from_grid(std::span<const double> grid, std::size_t n_samples,
                              std::span<const std::size_t> cell_channels) {
    if (grid.size() != cell_channels.size() * n_samples)
        throw Error("channel_mismatch", "grid size does not match montage");
    std::vector<double> epoch(grid.size());
    for (std::size_t cell = 0; cell < cell_channels.size(); ++cell)
        std::copy_n(grid.begin() + static_cast<std::ptrdiff_t>(cell * n_samples), n_samples,
                    epoch.begin() + static_cast<std::ptrdiff_t>(cell_channels[cell] * n_samples));
    return epoch;
}

std::vector<double> from_grid(std::span<const double> grid, std::size_t n_samples,
                              std::span<const std::string> channel_names, const MontageMap& map) {
    const auto idx = map.resolve(channel_names);
    return from_grid(grid, n_samples, idx);
}

} // namespace ads3d::montage
