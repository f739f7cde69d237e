#include "aalr/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>
#include <system_error>

#include "aalr/errors.hpp"

namespace aalr {
namespace {

constexpr std::string_view kMagic = "AALR1";

void validate(const Checkpoint& c) {
    if (!std::isfinite(c.best_loss)) {
        throw CheckpointError("refusing to save a checkpoint with non-finite best loss");
    }
    if (c.parameters.size() != c.momentum_buffers.size()) {
        throw CheckpointError("parameter and momentum buffer lengths differ");
    }
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void put_f64(std::vector<std::uint8_t>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        }
        pos_ += 8;
        return v;
    }

    double f64() { return std::bit_cast<double>(u64()); }

    void magic() {
        need(kMagic.size());
        if (std::memcmp(bytes_.data(), kMagic.data(), kMagic.size()) != 0) {
            throw FormatError("bad checkpoint magic", 0);
        }
        pos_ += kMagic.size();
    }

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) {
            throw FormatError("truncated checkpoint", bytes_.size());
        }
    }

    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

} // namespace

void MemoryCheckpointStore::save(const Checkpoint& checkpoint) {
    validate(checkpoint);
    slot_ = checkpoint;
}

Checkpoint MemoryCheckpointStore::restore() const {
    if (!slot_) {
        throw NoCheckpointError("no checkpoint has been saved");
    }
    return *slot_;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
    validate(c);
    std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
    out.reserve(kMagic.size() + 8 * (4 + 2 * c.parameters.size()));
    put_u64(out, c.parameters.size());
    for (double v : c.parameters) {
        put_f64(out, v);
    }
    for (double v : c.momentum_buffers) {
        put_f64(out, v);
    }
    put_f64(out, c.best_loss);
    put_u64(out, c.epoch);
    put_f64(out, c.lr_at_save);
    return out;
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
    Reader in(bytes);
    in.magic();
    const std::size_t count_offset = in.pos();
    const std::uint64_t n = in.u64();
    // Guard the allocation: the payload must actually hold 2n doubles plus the trailer.
    if (n > in.remaining() / 16) {
        throw FormatError("parameter count exceeds file size", count_offset);
    }
    Checkpoint c;
    c.parameters.resize(n);
    c.momentum_buffers.resize(n);
    for (auto& v : c.parameters) {
        v = in.f64();
    }
    for (auto& v : c.momentum_buffers) {
        v = in.f64();
    }
    const std::size_t loss_offset = in.pos();
    c.best_loss = in.f64();
    c.epoch = in.u64();
    c.lr_at_save = in.f64();
    if (in.remaining() != 0) {
        throw FormatError("trailing bytes after checkpoint", in.pos());
    }
    if (!std::isfinite(c.best_loss)) {
        throw FormatError("checkpoint holds a non-finite best loss", loss_offset);
    }
    return c;
}

FileCheckpointStore::FileCheckpointStore(std::filesystem::path path) : path_(std::move(path)) {}

bool FileCheckpointStore::empty() const { return !std::filesystem::exists(path_); }

void FileCheckpointStore::save(const Checkpoint& checkpoint) {
    const auto bytes = encode_checkpoint(checkpoint);
    auto tmp = path_;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw CheckpointError("cannot open " + tmp.string() + " for writing");
        }
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            throw CheckpointError("failed writing " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path_, ec);
    if (ec) {
        throw CheckpointError("cannot move checkpoint into place: " + ec.message());
    }
}

Checkpoint FileCheckpointStore::restore() const {
    std::ifstream in(path_, std::ios::binary);
    if (!in) {
        throw NoCheckpointError("no checkpoint at " + path_.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

} // namespace aalr
