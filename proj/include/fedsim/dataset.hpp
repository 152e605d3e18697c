#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fedsim/matrix.hpp"

namespace fedsim {

// A labeled dataset: one feature row per sample, class labels in
// [0, num_classes).
struct Dataset {
    Matrix features;
    std::vector<int> labels;
    int num_classes = 0;

    std::size_t size() const { return labels.size(); }
    std::size_t feature_dim() const { return features.cols; }

    // Checks shape agreement and label range; throws data_error.
    void validate() const;
};

// Loads one IDX image/label file pair. Pixels are scaled to [0,1] by
// dividing by 255; sample order follows the file.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);

// Loads the UCI covertype CSV (54 features + cover type in 1..7, no header).
// The label is binarized (cover type 2 -> class 1, everything else -> 0) and
// each feature column is z-scored with mean/population-std over the file.
Dataset load_covtype_csv(const std::string& path);

// Gaussian blob per class, class centers `separation` away from the origin.
// Deterministic for a fixed seed; exactly per_class samples of each class.
Dataset generate_synthetic(int num_classes, int feature_dim, int per_class, double separation,
                           std::uint64_t seed);

// Seeded uniform shuffle, then a split with |train| = round(fraction * n).
std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, double train_fraction,
                                             std::uint64_t seed);

// Seeded uniform subsample of n samples, original order preserved.
Dataset subsample(const Dataset& ds, std::size_t n, std::uint64_t seed);

// Concatenates two datasets with matching feature_dim and num_classes.
Dataset merge(const Dataset& a, const Dataset& b);

// Gathers the given rows into a new dataset.
Dataset take(const Dataset& ds, const std::vector<std::size_t>& indices);

} // namespace fedsim
