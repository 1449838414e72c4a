#pragma once

#include "hqfnn/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hqfnn {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
inline constexpr std::size_t kIdxSide = 28;

struct Normalization {
    double mean = 0.0;
    double std = 1.0;
};

struct Dataset {
    std::string name;
    Tensor images;                    // [N][1][side][side], standardized
    std::vector<std::size_t> labels;  // [N]
    Normalization stats;              // statistics the images were standardized with

    std::size_t size() const { return labels.size(); }
    std::size_t side() const { return images.rank() == 4 ? images.dim(2) : 0; }

    /// Copies the selected samples, in the given order.
    Dataset subset(std::span<const std::size_t> indices) const;
    /// Images of the selected samples as a [k][1][side][side] batch.
    Tensor gather_images(std::span<const std::size_t> indices) const;
    std::vector<std::size_t> gather_labels(std::span<const std::size_t> indices) const;
};

/// Raw IDX contents: pixel bytes and labels, no scaling.
struct IdxData {
    std::size_t count = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> pixels;
    std::vector<std::uint8_t> labels;
};

IdxData read_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);
void write_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
               const IdxData& data);

/// Mean/std of pixel values scaled to [0, 1]; std falls back to 1 when the
/// data is constant.
Normalization pixel_statistics(std::span<const std::uint8_t> pixels);

/// Builds a standardized dataset from raw bytes. With no `stats`, the
/// statistics of `raw` itself are used.
Dataset make_dataset(const IdxData& raw, std::string name, std::optional<Normalization> stats = std::nullopt,
                     std::size_t n_classes = 10);

/// Parses an IDX image/label pair (28x28 images), scales pixels to [0,1] and
/// standardizes them with `stats` or, when absent, the file's own statistics.
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 std::optional<Normalization> stats = std::nullopt, std::size_t n_classes = 10);

/// Index batches of at most batch_size; the final short batch is kept.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                                   bool shuffle);

/// Seeded permutation of [0, n).
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

struct Split {
    Dataset train;
    Dataset validation;
};

/// Holds out round(fraction * N) samples (at least one) as validation.
Split split_validation(const Dataset& data, double fraction, std::uint64_t seed);

/// Seeded random subset of n samples (the whole set when n is 0 or >= N).
Dataset random_subset(const Dataset& data, std::size_t n, std::uint64_t seed);

}  // namespace hqfnn
