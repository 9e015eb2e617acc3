#include "ads3d/eegio.hpp"

#include "ads3d/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>

namespace ads3d::eegio {
namespace {

constexpr char kEpochMagic[4] = {'A', 'D', 'S', '3'};
constexpr char kCheckpointMagic[4] = {'A', 'D', 'S', 'W'};

class ByteWriter {
public:
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) {
        out_.push_back(static_cast<std::uint8_t>(v));
        out_.push_back(static_cast<std::uint8_t>(v >> 8));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f32s(std::span<const float> v) {
        out_.reserve(out_.size() + 4 * v.size());
        for (float x : v) f32(x);
    }

    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    void need(std::size_t n, const char* what) const {
        if (bytes_.size() - pos_ < n)
            throw Error("truncated", std::string("truncated payload while reading ") + what);
    }
    std::span<const std::uint8_t> raw(std::size_t n, const char* what) {
        need(n, what);
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::uint8_t u8(const char* what) { return raw(1, what)[0]; }
    std::uint16_t u16(const char* what) {
        auto s = raw(2, what);
        return static_cast<std::uint16_t>(s[0] | (s[1] << 8));
    }
    std::uint32_t u32(const char* what) {
        auto s = raw(4, what);
        return static_cast<std::uint32_t>(s[0]) | (static_cast<std::uint32_t>(s[1]) << 8) |
               (static_cast<std::uint32_t>(s[2]) << 16) | (static_cast<std::uint32_t>(s[3]) << 24);
    }
    float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
    void f32s(std::span<float> out, const char* what) {
        need(4 * out.size(), what);
        for (float& x : out) x = f32(what);
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::size_t checked_product(const std::vector<std::uint32_t>& dims) {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

} // namespace

void EpochSet::validate() const {
    if (!(fs > 0.0f)) throw Error("inconsistent", "sampling rate must be positive");
    if (n_channels == 0 || n_channels > UINT16_MAX)
        throw Error("inconsistent", "channel count out of range");
    if (labels.size() != n_trials)
        throw Error("inconsistent", "label count " + std::to_string(labels.size()) +
                                        " != trial count " + std::to_string(n_trials));
    for (auto l : labels)
        if (l >= kNumClasses)
            throw Error("inconsistent", "label " + std::to_string(l) + " out of range");
    if (channel_names.size() != n_channels)
        throw Error("inconsistent", "channel name count does not match channel count");
    std::set<std::string> seen;
    for (const auto& name : channel_names) {
        if (name.empty() || name.size() > kChannelNameBytes)
            throw Error("inconsistent", "channel name '" + name + "' must be 1-8 characters");
        for (char c : name)
            if (c <= ' ' || c > '~')
                throw Error("inconsistent", "channel name '" + name + "' is not printable ASCII");
        if (!seen.insert(name).second)
            throw Error("inconsistent", "duplicate channel name '" + name + "'");
    }
    if (data.size() != n_trials * n_channels * n_samples)
        throw Error("inconsistent", "data length does not match trials x channels x samples");
}

std::vector<std::uint8_t> encode_epochset(const EpochSet& set) {
    set.validate();
    if (set.n_trials > UINT32_MAX || set.n_samples > UINT32_MAX)
        throw Error("inconsistent", "epoch set too large for the container format");
    ByteWriter w;
    w.raw(kEpochMagic, 4);
    w.u16(kEpochFormatVersion);
    w.u32(static_cast<std::uint32_t>(set.n_trials));
    w.u16(static_cast<std::uint16_t>(set.n_channels));
    w.u32(static_cast<std::uint32_t>(set.n_samples));
    w.f32(set.fs);
    w.raw(set.labels.data(), set.labels.size());
    for (const auto& name : set.channel_names) {
        char padded[kChannelNameBytes];
        std::memset(padded, ' ', sizeof padded);
        std::memcpy(padded, name.data(), name.size());
        w.raw(padded, sizeof padded);
    }
    w.f32s(set.data);
    return w.take();
}

EpochSet decode_epochset(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    auto magic = r.raw(4, "magic");
    if (std::memcmp(magic.data(), kEpochMagic, 4) != 0) throw Error("bad_magic", "bad magic");
    const auto version = r.u16("version");
    if (version != kEpochFormatVersion)
        throw Error("bad_version", "unsupported epoch format version " + std::to_string(version));
    EpochSet set;
    set.n_trials = r.u32("trial count");
    set.n_channels = r.u16("channel count");
    set.n_samples = r.u32("sample count");
    set.fs = r.f32("sampling rate");
    auto labels = r.raw(set.n_trials, "labels");
    set.labels.assign(labels.begin(), labels.end());
    set.channel_names.reserve(set.n_channels);
    for (std::size_t c = 0; c < set.n_channels; ++c) {
        auto raw = r.raw(kChannelNameBytes, "channel names");
        std::string name(raw.begin(), raw.end());
        name.erase(name.find_last_not_of(' ') + 1);
        set.channel_names.push_back(std::move(name));
    }
    const std::size_t count = set.n_trials * set.n_channels * set.n_samples;
    if (r.remaining() / 4 < count) throw Error("truncated", "truncated payload while reading samples");
    set.data.resize(count);
    r.f32s(set.data, "samples");
    if (r.remaining() != 0)
        throw Error("inconsistent", std::to_string(r.remaining()) + " trailing bytes after samples");
    set.validate();
    return set;
}

const CheckpointEntry* ModelCheckpoint::find(const std::string& name) const {
    for (const auto& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

void ModelCheckpoint::validate() const {
    if (format_version != kCheckpointFormatVersion)
        throw Error("bad_version", "unknown checkpoint format version " + std::to_string(format_version));
    std::set<std::string> seen;
    for (const auto& e : entries) {
        if (e.name.empty() || e.name.size() > UINT16_MAX)
            throw Error("inconsistent", "checkpoint entry name length out of range");
        if (!seen.insert(e.name).second)
            throw Error("inconsistent", "duplicate checkpoint entry '" + e.name + "'");
        if (e.dims.size() > UINT8_MAX)
            throw Error("inconsistent", "entry '" + e.name + "' has too many dimensions");
        if (checked_product(e.dims) != e.values.size())
            throw Error("inconsistent", "entry '" + e.name + "': product of dims " +
                                            std::to_string(checked_product(e.dims)) + " != value count " +
                                            std::to_string(e.values.size()));
    }
    for (const auto& [k, v] : metadata)
        if (k.size() > UINT16_MAX || v.size() > UINT16_MAX)
            throw Error("inconsistent", "metadata string too long");
}

std::vector<std::uint8_t> encode_checkpoint(const ModelCheckpoint& ckpt) {
    ckpt.validate();
    ByteWriter w;
    w.raw(kCheckpointMagic, 4);
    w.u16(ckpt.format_version);
    w.u32(static_cast<std::uint32_t>(ckpt.entries.size()));
    for (const auto& e : ckpt.entries) {
        w.u16(static_cast<std::uint16_t>(e.name.size()));
        w.raw(e.name.data(), e.name.size());
        w.u8(static_cast<std::uint8_t>(e.dims.size()));
        for (auto d : e.dims) w.u32(d);
        w.f32s(e.values);
    }
    w.u32(static_cast<std::uint32_t>(ckpt.metadata.size()));
    for (const auto& [k, v] : ckpt.metadata) {
        w.u16(static_cast<std::uint16_t>(k.size()));
        w.raw(k.data(), k.size());
        w.u16(static_cast<std::uint16_t>(v.size()));
        w.raw(v.data(), v.size());
    }
    return w.take();
}

ModelCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    auto magic = r.raw(4, "magic");
    if (std::memcmp(magic.data(), kCheckpointMagic, 4) != 0) throw Error("bad_magic", "bad magic");
    ModelCheckpoint ckpt;
    ckpt.format_version = r.u16("version");
    if (ckpt.format_version != kCheckpointFormatVersion)
        throw Error("bad_version", "unknown checkpoint format version " + std::to_string(ckpt.format_version));
    const auto n_entries = r.u32("entry count");
    for (std::uint32_t i = 0; i < n_entries; ++i) {
        CheckpointEntry e;
        const auto name_len = r.u16("entry name length");
        auto name = r.raw(name_len, "entry name");
        e.name.assign(name.begin(), name.end());
        const auto ndim = r.u8("entry rank");
        for (int d = 0; d < ndim; ++d) e.dims.push_back(r.u32("entry dims"));
        const std::size_t count = checked_product(e.dims);
        if (r.remaining() / 4 < count) throw Error("truncated", "truncated payload while reading entry values");
        e.values.resize(count);
        r.f32s(e.values, "entry values");
        ckpt.entries.push_back(std::move(e));
    }
    const auto n_meta = r.u32("metadata count");
    for (std::uint32_t i = 0; i < n_meta; ++i) {
        auto kb = r.raw(r.u16("metadata key length"), "metadata key");
        auto vb = r.raw(r.u16("metadata value length"), "metadata value");
        ckpt.metadata[std::string(kb.begin(), kb.end())] = std::string(vb.begin(), vb.end());
    }
    if (r.remaining() != 0)
        throw Error("inconsistent", std::to_string(r.remaining()) + " trailing bytes after metadata");
    ckpt.validate();
    return ckpt;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("io", "cannot open '" + tmp.string() + "' for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error("io", "write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error("io", "cannot rename '" + tmp.string() + "': " + ec.message());
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    write_file_atomic(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io", "cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_epochset(const EpochSet& set, const std::filesystem::path& path) {
    write_file_atomic(path, encode_epochset(set));
}

EpochSet read_epochset(const std::filesystem::path& path) { return decode_epochset(read_file(path)); }

void write_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& path) {
    write_file_atomic(path, encode_checkpoint(ckpt));
}

ModelCheckpoint read_checkpoint(const std::filesystem::path& path) {
    return decode_checkpoint(read_file(path));
}

} // namespace ads3d::eegio
