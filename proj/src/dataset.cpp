#include "fedsim/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    std::array<unsigned char, 4> b{};
    in.read(reinterpret_cast<char*>(b.data()), 4);
    if (!in) throw data_error("unexpected end of file in " + path);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

std::ifstream open_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open " + path);
    return in;
}

} // namespace

void Dataset::validate() const {
    if (num_classes < 2) throw data_error("dataset has fewer than 2 classes");
    if (features.cols < 1) throw data_error("dataset has empty feature dimension");
    if (labels.size() != features.rows)
        throw data_error("label count does not match feature row count");
    for (int y : labels)
        if (y < 0 || y >= num_classes)
            throw data_error("label " + std::to_string(y) + " outside [0, " +
                             std::to_string(num_classes) + ")");
}

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
    auto img = open_binary(images_path);
    if (read_be32(img, images_path) != kIdxImagesMagic)
        throw data_error("bad magic number in " + images_path + " (expected IDX image file)");
    const std::uint32_t n = read_be32(img, images_path);
    const std::uint32_t rows = read_be32(img, images_path);
    const std::uint32_t cols = read_be32(img, images_path);
    if (rows == 0 || cols == 0) throw data_error("zero image dimensions in " + images_path);

    auto lab = open_binary(labels_path);
    if (read_be32(lab, labels_path) != kIdxLabelsMagic)
        throw data_error("bad magic number in " + labels_path + " (expected IDX label file)");
    const std::uint32_t n_labels = read_be32(lab, labels_path);
    if (n != n_labels)
        throw data_error("image/label count mismatch: " + std::to_string(n) + " images vs " +
                         std::to_string(n_labels) + " labels");

    Dataset ds;
    ds.num_classes = 10;
    ds.features = Matrix(n, std::size_t(rows) * cols);
    ds.labels.resize(n);

    std::vector<unsigned char> pixel_buf(std::size_t(rows) * cols);
    for (std::uint32_t i = 0; i < n; ++i) {
        img.read(reinterpret_cast<char*>(pixel_buf.data()), std::streamsize(pixel_buf.size()));
        if (!img) throw data_error("truncated image data in " + images_path);
        double* out = ds.features.row(i);
        for (std::size_t p = 0; p < pixel_buf.size(); ++p) out[p] = pixel_buf[p] / 255.0;
        unsigned char y = 0;
        lab.read(reinterpret_cast<char*>(&y), 1);
        if (!lab) throw data_error("truncated label data in " + labels_path);
        ds.labels[i] = int(y);
    }
    ds.validate();
    return ds;
}

Dataset load_covtype_csv(const std::string& path) {
    constexpr int kFeatures = 54;
    std::ifstream in(path);
    if (!in) throw data_error("cannot open " + path);

    Dataset ds;
    ds.num_classes = 2;
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::size_t col = 0;
        const char* p = line.data();
        const char* end = p + line.size();
        while (p <= end) {
            const char* comma = std::find(p, end, ',');
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(p, comma, v);
            if (ec != std::errc() || ptr != comma)
                throw data_error(path + ":" + std::to_string(line_no) + ": non-numeric cell");
            if (col < kFeatures) {
                values.push_back(v);
            } else if (col == kFeatures) {
                const int cover_type = int(v);
                if (cover_type < 1 || cover_type > 7 || double(cover_type) != v)
                    throw data_error(path + ":" + std::to_string(line_no) +
                                     ": cover type outside 1..7");
                ds.labels.push_back(cover_type == 2 ? 1 : 0);
            }
            ++col;
            if (comma == end) break;
            p = comma + 1;
        }
        if (col != kFeatures + 1)
            throw data_error(path + ":" + std::to_string(line_no) + ": expected 55 columns, got " +
                             std::to_string(col));
    }
    const std::size_t n = ds.labels.size();
    if (n == 0) throw data_error(path + ": empty file");

    ds.features = Matrix(n, kFeatures);
    std::copy(values.begin(), values.end(), ds.features.data.begin());

    // Per-feature z-score over the whole file (population std); constant
    // columns are only centered.
    for (int c = 0; c < kFeatures; ++c) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += ds.features(i, c);
        mean /= double(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = ds.features(i, c) - mean;
            var += d * d;
        }
        const double sd = std::sqrt(var / double(n));
        for (std::size_t i = 0; i < n; ++i) {
            double& v = ds.features(i, c);
            v = sd > 0.0 ? (v - mean) / sd : v - mean;
        }
    }
    ds.validate();
    return ds;
}

Dataset generate_synthetic(int num_classes, int feature_dim, int per_class, double separation,
                           std::uint64_t seed) {
    if (num_classes < 2) throw config_error("synthetic dataset needs at least 2 classes");
    if (feature_dim < 1) throw config_error("synthetic dataset needs feature_dim >= 1");
    if (per_class < 1) throw config_error("synthetic dataset needs per_class >= 1");

    Dataset ds;
    ds.num_classes = num_classes;
    ds.features = Matrix(std::size_t(num_classes) * per_class, feature_dim);
    ds.labels.resize(ds.features.rows);

    Rng rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::size_t row = 0;
    for (int q = 0; q < num_classes; ++q) {
        // Class centers on a circle in the first two feature dimensions
        // (a line when feature_dim == 1).
        std::vector<double> center(feature_dim, 0.0);
        if (feature_dim == 1) {
            center[0] = separation * q;
        } else {
            const double theta = 2.0 * M_PI * q / num_classes;
            center[0] = separation * std::cos(theta);
            center[1] = separation * std::sin(theta);
        }
        for (int i = 0; i < per_class; ++i, ++row) {
            double* out = ds.features.row(row);
            for (int d = 0; d < feature_dim; ++d) out[d] = center[d] + noise(rng);
            ds.labels[row] = q;
        }
    }
    return ds;
}

Dataset take(const Dataset& ds, const std::vector<std::size_t>& indices) {
    Dataset out;
    out.num_classes = ds.num_classes;
    out.features = Matrix(indices.size(), ds.feature_dim());
    out.labels.resize(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::size_t src = indices[i];
        std::copy(ds.features.row(src), ds.features.row(src) + ds.feature_dim(),
                  out.features.row(i));
        out.labels[i] = ds.labels[src];
    }
    return out;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, double train_fraction,
                                             std::uint64_t seed) {
    if (ds.size() == 0) throw data_error("cannot split an empty dataset");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw config_error("train_fraction must be in (0,1)");

    std::vector<std::size_t> perm(ds.size());
    std::iota(perm.begin(), perm.end(), std::size_t(0));
    Rng rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);

    const auto n_train = std::size_t(std::llround(train_fraction * double(ds.size())));
    std::vector<std::size_t> train_idx(perm.begin(), perm.begin() + n_train);
    std::vector<std::size_t> test_idx(perm.begin() + n_train, perm.end());
    return {take(ds, train_idx), take(ds, test_idx)};
}

Dataset subsample(const Dataset& ds, std::size_t n, std::uint64_t seed) {
    if (n >= ds.size()) return ds;
    std::vector<std::size_t> perm(ds.size());
    std::iota(perm.begin(), perm.end(), std::size_t(0));
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, perm.size() - 1);
        std::swap(perm[i], perm[pick(rng)]);
    }
    std::vector<std::size_t> keep(perm.begin(), perm.begin() + n);
    std::sort(keep.begin(), keep.end());
    return take(ds, keep);
}

Dataset merge(const Dataset& a, const Dataset& b) {
    if (a.feature_dim() != b.feature_dim() || a.num_classes != b.num_classes)
        throw data_error("cannot merge datasets with different shapes");
    Dataset out;
    out.num_classes = a.num_classes;
    out.features = Matrix(a.size() + b.size(), a.feature_dim());
    std::copy(a.features.data.begin(), a.features.data.end(), out.features.data.begin());
    std::copy(b.features.data.begin(), b.features.data.end(),
              out.features.data.begin() + std::ptrdiff_t(a.features.data.size()));
    out.labels = a.labels;
    out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
    return out;
}

} // namespace fedsim
