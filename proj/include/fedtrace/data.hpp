#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedtrace/tensor.hpp"

namespace fedtrace {

struct Dataset {
    Tensor2 features; // n x d
    std::vector<int> labels;
    int class_count = 0;

    std::size_t size() const { return features.rows; }
};

// Disjoint per-client index lists over a dataset; every client non-empty.
struct Partition {
    std::vector<std::vector<std::size_t>> client_indices;
};

// Gaussian clusters, one per class; class means drawn from the seeded RNG.
Dataset synth_blobs(std::uint64_t seed, int classes, int dim, int per_class, float spread);

// IDX-format image/label pair (big-endian headers, magic 0x803 / 0x801).
// Pixels are scaled to [0, 1].
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

Dataset subset(const Dataset& d, std::span<const std::size_t> indices);

// Shuffled split: first `fraction` of the permuted indices becomes `held`,
// the rest `rest`.
void split_holdout(const Dataset& d, double fraction, std::uint64_t seed,
                   Dataset& rest, Dataset& held);

Partition partition_iid(const Dataset& d, int clients, std::uint64_t seed);

// Per class, client proportions drawn from Dirichlet(xi * 1); clients left
// empty by the draw are repaired by stealing one sample from the largest.
Partition partition_dirichlet(const Dataset& d, int clients, double xi, std::uint64_t seed);

} // namespace fedtrace
