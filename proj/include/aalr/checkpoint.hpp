#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace aalr {

struct Checkpoint {
    std::vector<double> parameters;
    std::vector<double> momentum_buffers;
    double best_loss = 0.0;
    std::uint64_t epoch = 0;
    double lr_at_save = 0.0;

    bool operator==(const Checkpoint&) const = default;
};

/// Single "latest best" slot. save() overwrites; restore() is a non-destructive read.
class CheckpointStore {
public:
    virtual ~CheckpointStore() = default;

    /// Throws CheckpointError on non-finite best_loss or mismatched buffer lengths.
    virtual void save(const Checkpoint& checkpoint) = 0;

    /// Throws NoCheckpointError when nothing was saved.
    virtual Checkpoint restore() const = 0;

    virtual bool empty() const = 0;
};

class MemoryCheckpointStore final : public CheckpointStore {
public:
    void save(const Checkpoint& checkpoint) override;
    Checkpoint restore() const override;
    bool empty() const override { return !slot_.has_value(); }

private:
    std::optional<Checkpoint> slot_;
};

/*
 * File layout, all little-endian:
 *   "AALR1"                      5 bytes
 *   parameter count n            u64
 *   parameters                   n x f64
 *   momentum buffers             n x f64
 *   best loss                    f64
 *   epoch                        u64
 *   lr at save                   f64
 *
 * Writes go to a sibling temporary file that is renamed over the target.
 */
class FileCheckpointStore final : public CheckpointStore {
public:
    explicit FileCheckpointStore(std::filesystem::path path);

    void save(const Checkpoint& checkpoint) override;
    Checkpoint restore() const override;
    bool empty() const override;

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
/// Throws FormatError with the failing byte offset.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

} // namespace aalr
