#include "hqfnn/data.hpp"

#include "hqfnn/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

namespace hqfnn {

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<std::uint8_t>& buf, std::size_t off, const std::filesystem::path& path) {
    if (off + 4 > buf.size()) throw FormatError("truncated IDX header in " + path.string());
    return (static_cast<std::uint32_t>(buf[off]) << 24) | (static_cast<std::uint32_t>(buf[off + 1]) << 16) |
           (static_cast<std::uint32_t>(buf[off + 2]) << 8) | static_cast<std::uint32_t>(buf[off + 3]);
}

void put_be32(std::ostream& os, std::uint32_t v) {
    const std::array<char, 4> b = {static_cast<char>((v >> 24) & 0xff), static_cast<char>((v >> 16) & 0xff),
                                   static_cast<char>((v >> 8) & 0xff), static_cast<char>(v & 0xff)};
    os.write(b.data(), 4);
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.name = name;
    out.stats = stats;
    out.images = gather_images(indices);
    out.labels = gather_labels(indices);
    return out;
}

Tensor Dataset::gather_images(std::span<const std::size_t> indices) const {
    const std::size_t s = side();
    Tensor out({indices.size(), 1, s, s});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto src = images.slice(indices[i]);
        std::copy(src.begin(), src.end(), out.slice(i).begin());
    }
    return out;
}

std::vector<std::size_t> Dataset::gather_labels(std::span<const std::size_t> indices) const {
    std::vector<std::size_t> out(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) out[i] = labels.at(indices[i]);
    return out;
}

IdxData read_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
    const auto img = read_file(images_path);
    const auto lab = read_file(labels_path);

    if (be32(img, 0, images_path) != kIdxImageMagic) {
        throw FormatError("bad IDX image magic in " + images_path.string());
    }
    IdxData d;
    d.count = be32(img, 4, images_path);
    d.rows = be32(img, 8, images_path);
    d.cols = be32(img, 12, images_path);
    if (d.rows != kIdxSide || d.cols != kIdxSide) {
        throw FormatError("expected 28x28 images in " + images_path.string() + ", found " + std::to_string(d.rows) +
                          "x" + std::to_string(d.cols));
    }
    const std::size_t pixel_bytes = d.count * d.rows * d.cols;
    if (img.size() != 16 + pixel_bytes) {
        throw FormatError("IDX image payload size mismatch in " + images_path.string());
    }

    if (be32(lab, 0, labels_path) != kIdxLabelMagic) {
        throw FormatError("bad IDX label magic in " + labels_path.string());
    }
    const std::size_t n_labels = be32(lab, 4, labels_path);
    if (lab.size() != 8 + n_labels) {
        throw FormatError("IDX label payload size mismatch in " + labels_path.string());
    }
    if (n_labels != d.count) {
        throw ConsistencyError("image file holds " + std::to_string(d.count) + " samples but label file holds " +
                               std::to_string(n_labels));
    }
    d.pixels.assign(img.begin() + 16, img.end());
    d.labels.assign(lab.begin() + 8, lab.end());
    return d;
}

void write_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
               const IdxData& data) {
    if (data.pixels.size() != data.count * data.rows * data.cols || data.labels.size() != data.count) {
        throw std::invalid_argument("IDX payload does not match its declared dimensions");
    }
    std::ofstream img(images_path, std::ios::binary | std::ios::trunc);
    std::ofstream lab(labels_path, std::ios::binary | std::ios::trunc);
    if (!img || !lab) throw std::runtime_error("cannot open IDX output files");
    put_be32(img, kIdxImageMagic);
    put_be32(img, static_cast<std::uint32_t>(data.count));
    put_be32(img, static_cast<std::uint32_t>(data.rows));
    put_be32(img, static_cast<std::uint32_t>(data.cols));
    img.write(reinterpret_cast<const char*>(data.pixels.data()), static_cast<std::streamsize>(data.pixels.size()));
    put_be32(lab, kIdxLabelMagic);
    put_be32(lab, static_cast<std::uint32_t>(data.count));
    lab.write(reinterpret_cast<const char*>(data.labels.data()), static_cast<std::streamsize>(data.labels.size()));
}

Normalization pixel_statistics(std::span<const std::uint8_t> pixels) {
    Normalization n;
    if (pixels.empty()) return n;
    const double count = static_cast<double>(pixels.size());
    double sum = 0.0;
    for (auto p : pixels) sum += p / 255.0;
    n.mean = sum / count;
    double sq = 0.0;
    for (auto p : pixels) {
        const double dv = p / 255.0 - n.mean;
        sq += dv * dv;
    }
    n.std = std::sqrt(sq / count);
    if (!(n.std > 1e-12)) n.std = 1.0;
    return n;
}

Dataset make_dataset(const IdxData& raw, std::string name, std::optional<Normalization> stats,
                     std::size_t n_classes) {
    Dataset ds;
    ds.name = std::move(name);
    ds.stats = stats.value_or(pixel_statistics(raw.pixels));
    if (!(ds.stats.std > 0.0)) throw std::invalid_argument("normalization std must be positive");
    ds.images = Tensor({raw.count, 1, raw.rows, raw.cols});
    auto& px = ds.images.data();
    for (std::size_t i = 0; i < raw.pixels.size(); ++i) {
        px[i] = (raw.pixels[i] / 255.0 - ds.stats.mean) / ds.stats.std;
    }
    ds.labels.resize(raw.count);
    for (std::size_t i = 0; i < raw.count; ++i) {
        if (raw.labels[i] >= n_classes) {
            throw FormatError("label " + std::to_string(raw.labels[i]) + " exceeds the class count");
        }
        ds.labels[i] = raw.labels[i];
    }
    return ds;
}

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 std::optional<Normalization> stats, std::size_t n_classes) {
    return make_dataset(read_idx(images_path, labels_path), images_path.stem().string(), stats, n_classes);
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    // explicit Fisher-Yates: std::shuffle's draw sequence is library-specific
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                                   bool shuffle) {
    if (batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
    std::vector<std::size_t> order;
    if (shuffle) {
        order = seeded_permutation(n, seed);
    } else {
        order.resize(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
    }
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + batch_size);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

Split split_validation(const Dataset& data, double fraction, std::uint64_t seed) {
    if (data.size() < 2) throw std::invalid_argument("need at least two samples to hold out a validation set");
    if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("validation fraction must be in (0, 1)");
    const auto perm = seeded_permutation(data.size(), seed);
    auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(data.size())));
    n_val = std::clamp<std::size_t>(n_val, 1, data.size() - 1);
    std::vector<std::size_t> val(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> train(perm.begin() + static_cast<std::ptrdiff_t>(n_val), perm.end());
    std::sort(val.begin(), val.end());
    std::sort(train.begin(), train.end());
    return {data.subset(train), data.subset(val)};
}

Dataset random_subset(const Dataset& data, std::size_t n, std::uint64_t seed) {
    if (n == 0 || n >= data.size()) return data;
    auto perm = seeded_permutation(data.size(), seed);
    perm.resize(n);
    std::sort(perm.begin(), perm.end());
    return data.subset(perm);
}

}  // namespace hqfnn
