#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "subtrain/tensor.hpp"

namespace subtrain {

// Labeled example collection. Images are (K, H, W, C) with values in [0, 1];
// labels are class ids in [0, class_count). Immutable after construction.
struct Dataset {
    Tensor images;
    std::vector<int> labels;
    std::size_t class_count = 0;
    std::string name;

    std::size_t size() const { return labels.size(); }
    std::size_t height() const { return images.extent(1); }
    std::size_t width() const { return images.extent(2); }
    std::size_t channels() const { return images.extent(3); }

    void validate() const;

    // Gather of the given sample indices, in order.
    Tensor gather_images(const std::vector<std::size_t>& indices) const;
    std::vector<int> gather_labels(const std::vector<std::size_t>& indices) const;

    // Per-class sample counts.
    std::vector<std::size_t> class_histogram() const;
};

// Disjoint 1/b partition of sample indices. subset_indices holds all b blocks
// of floor(K/b) indices; runs_selected lists the block ids actually executed.
struct SubsetPlan {
    std::size_t divisor = 1; // b
    std::vector<std::vector<std::size_t>> subset_indices;
    std::vector<std::size_t> runs_selected;
    std::uint64_t seed = 0;
    std::size_t dropped = 0; // remainder samples excluded from every block
};

inline const std::vector<std::size_t> kAllowedDivisors = {1, 2, 4, 8, 16, 32, 64, 128};

// Seeded permutation of 0..K-1 cut into b consecutive blocks. b=1 is the
// identity plan (the conventional-training baseline). When b exceeds
// max_runs, the executed blocks are a seeded draw without replacement.
SubsetPlan partition_subsets(std::size_t total, std::size_t divisor, std::uint64_t seed,
                             std::size_t max_runs = 5);

// IDX container (big-endian magic + dims, raw bytes).
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path);

// CIFAR-10 binary batches: 3073-byte records (label + channel-planar pixels).
Dataset load_cifar10(const std::vector<std::filesystem::path>& batch_paths);

// CIFAR-100: 3074-byte records (coarse label, fine label, pixels).
Dataset load_cifar100(const std::filesystem::path& path, bool fine_labels = true);

// Class-conditional synthetic data: one seeded template per class plus
// per-sample noise scaled by difficulty. Balanced classes, deterministic.
Dataset synthesize_dataset(std::size_t count, std::size_t classes, std::size_t height,
                           std::size_t width, std::size_t channels, std::uint64_t seed,
                           double difficulty);

struct AugmentParams {
    double rotation_max_degrees = 15.0;
    double shift_max_fraction = 0.10;
    double contrast_low = 0.8;
    double contrast_high = 1.2;
    std::size_t copies_per_image = 9; // 9 => tenfold expansion
};

// Each original followed by copies_per_image transformed copies (random
// rotation, shift, contrast; bilinear resampling; clamped to [0, 1]).
Dataset augment_tenfold(const Dataset& ds, const AugmentParams& params, std::uint64_t seed);

// Binary dataset container: header (K, H, W, C, M, seed, augment params),
// labels, then 8-bit quantized pixels. Used to cache augmented or synthetic
// datasets on disk.
void save_dataset_cache(const Dataset& ds, const std::filesystem::path& path,
                        std::uint64_t seed = 0, const AugmentParams& params = {});
Dataset load_dataset_cache(const std::filesystem::path& path);

} // namespace subtrain
