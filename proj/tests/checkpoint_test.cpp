#include "aalr/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <random>

#include <gtest/gtest.h>

#include "aalr/errors.hpp"

namespace aalr {
namespace {

Checkpoint sample(double best = 0.5) { return {{1.0, 2.0}, {0.0, 0.0}, best, 3, 0.2}; }

std::filesystem::path temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "aalr_checkpoint_test";
    std::filesystem::create_directories(dir);
    std::string flat = name;
    std::replace(flat.begin(), flat.end(), '/', '_');
    auto p = dir / flat;
    std::filesystem::remove(p);
    return p;
}

class StoreTest : public ::testing::TestWithParam<bool> {
protected:
    std::unique_ptr<CheckpointStore> make() {
        if (GetParam()) {
            return std::make_unique<FileCheckpointStore>(
                temp_path(::testing::UnitTest::GetInstance()->current_test_info()->name() + std::string(".ckpt")));
        }
        return std::make_unique<MemoryCheckpointStore>();
    }
};

TEST_P(StoreTest, RoundTrip) {
    auto store = make();
    store->save(sample());
    EXPECT_EQ(store->restore(), sample());
}

TEST_P(StoreTest, SaveOverwrites) {
    auto store = make();
    store->save(sample(0.5));
    auto b = sample(0.25);
    b.parameters = {7.0, 8.0};
    store->save(b);
    EXPECT_EQ(store->restore(), b);
}

TEST_P(StoreTest, RejectsNonFiniteBestLoss) {
    auto store = make();
    EXPECT_THROW(store->save(sample(std::numeric_limits<double>::quiet_NaN())), CheckpointError);
    EXPECT_THROW(store->save(sample(std::numeric_limits<double>::infinity())), CheckpointError);
    EXPECT_TRUE(store->empty());
}

TEST_P(StoreTest, RejectsMismatchedBuffers) {
    auto store = make();
    auto c = sample();
    c.momentum_buffers.push_back(1.0);
    EXPECT_THROW(store->save(c), CheckpointError);
}

TEST_P(StoreTest, EmptyStoreRestoreFails) {
    auto store = make();
    EXPECT_TRUE(store->empty());
    EXPECT_THROW(store->restore(), NoCheckpointError);
}

TEST_P(StoreTest, RestoreIsNonDestructive) {
    auto store = make();
    store->save(sample());
    EXPECT_EQ(store->restore(), sample());
    EXPECT_EQ(store->restore(), sample());
    EXPECT_FALSE(store->empty());
}

TEST_P(StoreTest, BitExactForArbitraryDoubles) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        auto store = make();
        Checkpoint c;
        const std::size_t n = rng() % 64;
        for (std::size_t i = 0; i < n; ++i) {
            // Arbitrary bit patterns, including subnormals, infinities and NaN payloads.
            c.parameters.push_back(std::bit_cast<double>(rng()));
            c.momentum_buffers.push_back(std::bit_cast<double>(rng()));
        }
        c.best_loss = std::ldexp(static_cast<double>(rng() >> 11), -60);
        c.epoch = rng();
        c.lr_at_save = 0.1 * std::ldexp(1.0, static_cast<int>(rng() % 40) - 20);
        store->save(c);
        const auto back = store->restore();
        ASSERT_EQ(back.parameters.size(), n);
        for (std::size_t i = 0; i < n; ++i) {
            ASSERT_EQ(std::bit_cast<std::uint64_t>(back.parameters[i]), std::bit_cast<std::uint64_t>(c.parameters[i]));
            ASSERT_EQ(std::bit_cast<std::uint64_t>(back.momentum_buffers[i]),
                      std::bit_cast<std::uint64_t>(c.momentum_buffers[i]));
        }
        EXPECT_EQ(back.best_loss, c.best_loss);
        EXPECT_EQ(back.epoch, c.epoch);
        EXPECT_EQ(back.lr_at_save, c.lr_at_save);
    }
}

INSTANTIATE_TEST_SUITE_P(Backends, StoreTest, ::testing::Values(false, true),
                         [](const auto& info) { return info.param ? "File" : "Memory"; });

TEST(CheckpointFormat, Layout) {
    const auto bytes = encode_checkpoint({{1.0}, {0.5}, 2.0, 7, 0.25});
    ASSERT_EQ(bytes.size(), 5u + 8 + 8 + 8 + 8 + 8 + 8);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 5), "AALR1");
    EXPECT_EQ(bytes[5], 1);  // count, little-endian
    for (int i = 6; i < 13; ++i) {
        EXPECT_EQ(bytes[i], 0);
    }
    // 1.0 = 0x3FF0000000000000 little-endian.
    EXPECT_EQ(bytes[13 + 6], 0xF0);
    EXPECT_EQ(bytes[13 + 7], 0x3F);
    // epoch 7 follows the three doubles.
    EXPECT_EQ(bytes[13 + 24 + 0], 7);
}

TEST(CheckpointFormat, DecodeErrorsCarryOffsets) {
    auto bytes = encode_checkpoint(sample());
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    try {
        decode_checkpoint(bad_magic);
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.offset(), 0u);
    }

    auto truncated = bytes;
    truncated.resize(truncated.size() - 3);
    try {
        decode_checkpoint(truncated);
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.offset(), truncated.size());
    }

    auto huge = bytes;
    huge[12] = 0x7F;
    EXPECT_THROW(decode_checkpoint(huge), FormatError);
}

} // namespace
} // namespace aalr
