#include "subtrain/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "subtrain/errors.hpp"

namespace subtrain {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint32_t read_be32(std::istream& in, const char* what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw DataError(std::string("truncated file while reading ") + what);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_le64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_le64(std::istream& in, const char* what) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8))
        throw DataError(std::string("truncated file while reading ") + what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
    return v;
}

void write_le_double(std::ostream& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    write_le64(out, bits);
}

double read_le_double(std::istream& in, const char* what) {
    std::uint64_t bits = read_le64(in, what);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

std::vector<unsigned char> read_all_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return bytes;
}

} // namespace

void Dataset::validate() const {
    if (labels.empty()) throw DataError("dataset is empty");
    if (class_count < 2) throw DataError("dataset needs at least two classes");
    if (images.rank() != 4 || images.extent(0) != labels.size())
        throw DataError("dataset image tensor must be (K, H, W, C)");
    for (int label : labels)
        if (label < 0 || static_cast<std::size_t>(label) >= class_count)
            throw DataError("label outside [0, class_count)");
    for (std::size_t i = 0; i < images.size(); ++i)
        if (!(images[i] >= 0.0 && images[i] <= 1.0))
            throw DataError("image value outside [0, 1]");
}

Tensor Dataset::gather_images(const std::vector<std::size_t>& indices) const {
    std::size_t row = height() * width() * channels();
    Tensor out({indices.size(), height(), width(), channels()});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= size()) throw DataError("sample index out of range");
        const double* src = images.data() + indices[i] * row;
        std::copy(src, src + row, out.data() + i * row);
    }
    return out;
}

std::vector<int> Dataset::gather_labels(const std::vector<std::size_t>& indices) const {
    std::vector<int> out(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= size()) throw DataError("sample index out of range");
        out[i] = labels[indices[i]];
    }
    return out;
}

std::vector<std::size_t> Dataset::class_histogram() const {
    std::vector<std::size_t> hist(class_count, 0);
    for (int label : labels) hist[static_cast<std::size_t>(label)] += 1;
    return hist;
}

SubsetPlan partition_subsets(std::size_t total, std::size_t divisor, std::uint64_t seed,
                             std::size_t max_runs) {
    if (std::find(kAllowedDivisors.begin(), kAllowedDivisors.end(), divisor) ==
        kAllowedDivisors.end())
        throw ConfigError("subset divisor must be one of {1,2,4,8,16,32,64,128}");
    if (total < divisor) throw ConfigError("fewer samples than subsets");

    SubsetPlan plan;
    plan.divisor = divisor;
    plan.seed = seed;

    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (divisor > 1) { // b=1 is the identity plan
        SeededRng rng = SeededRng(seed).child("permutation");
        for (std::size_t i = total - 1; i > 0; --i)
            std::swap(order[i], order[rng.next_below(i + 1)]);
    }

    std::size_t block = total / divisor;
    plan.dropped = total - block * divisor;
    plan.subset_indices.resize(divisor);
    for (std::size_t s = 0; s < divisor; ++s)
        plan.subset_indices[s].assign(order.begin() + static_cast<std::ptrdiff_t>(s * block),
                                      order.begin() + static_cast<std::ptrdiff_t>((s + 1) * block));

    if (divisor <= max_runs) {
        plan.runs_selected.resize(divisor);
        std::iota(plan.runs_selected.begin(), plan.runs_selected.end(), std::size_t{0});
    } else {
        std::vector<std::size_t> ids(divisor);
        std::iota(ids.begin(), ids.end(), std::size_t{0});
        SeededRng rng = SeededRng(seed).child("run-selection");
        for (std::size_t i = 0; i < max_runs; ++i)
            std::swap(ids[i], ids[i + rng.next_below(divisor - i)]);
        plan.runs_selected.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(max_runs));
        std::sort(plan.runs_selected.begin(), plan.runs_selected.end());
    }
    return plan;
}

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw DataError("cannot open " + images_path.string());
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw DataError("cannot open " + labels_path.string());

    std::uint32_t img_magic = read_be32(img, "image magic");
    if (img_magic != 0x00000803u)
        throw DataError("bad IDX image magic in " + images_path.string());
    std::uint32_t count = read_be32(img, "image count");
    std::uint32_t rows = read_be32(img, "image rows");
    std::uint32_t cols = read_be32(img, "image cols");

    std::uint32_t lab_magic = read_be32(lab, "label magic");
    if (lab_magic != 0x00000801u)
        throw DataError("bad IDX label magic in " + labels_path.string());
    std::uint32_t lab_count = read_be32(lab, "label count");
    if (lab_count != count)
        throw DataError("IDX image/label count mismatch");
    if (count == 0 || rows == 0 || cols == 0) throw DataError("empty IDX file");

    std::size_t pixel_count = std::size_t(count) * rows * cols;
    std::vector<unsigned char> pixels(pixel_count);
    if (!img.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixel_count)))
        throw DataError("truncated IDX image data in " + images_path.string());
    std::vector<unsigned char> raw_labels(count);
    if (!lab.read(reinterpret_cast<char*>(raw_labels.data()), count))
        throw DataError("truncated IDX label data in " + labels_path.string());

    Dataset ds;
    ds.images = Tensor({count, rows, cols, 1});
    for (std::size_t i = 0; i < pixel_count; ++i)
        ds.images[i] = static_cast<double>(pixels[i]) / 255.0;
    ds.labels.resize(count);
    int max_label = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
        ds.labels[i] = raw_labels[i];
        max_label = std::max(max_label, ds.labels[i]);
    }
    ds.class_count = std::max(10, max_label + 1);
    ds.name = images_path.filename().string();
    ds.validate();
    return ds;
}

namespace {

// Shared CIFAR record decoding; record = label bytes followed by
// 3072 channel-planar pixels of a 32x32x3 image.
Dataset load_cifar_records(const std::vector<std::filesystem::path>& paths,
                           std::size_t label_bytes, std::size_t label_offset,
                           std::size_t class_count, const std::string& name) {
    const std::size_t record = label_bytes + 3072;
    std::vector<unsigned char> all;
    for (const auto& path : paths) {
        auto bytes = read_all_bytes(path);
        if (bytes.empty() || bytes.size() % record != 0)
            throw DataError("file size is not a multiple of the record size: " + path.string());
        all.insert(all.end(), bytes.begin(), bytes.end());
    }
    std::size_t count = all.size() / record;

    Dataset ds;
    ds.images = Tensor({count, 32, 32, 3});
    ds.labels.resize(count);
    ds.class_count = class_count;
    ds.name = name;
    for (std::size_t i = 0; i < count; ++i) {
        const unsigned char* rec = all.data() + i * record;
        unsigned char label = rec[label_offset];
        if (label >= class_count)
            throw DataError("CIFAR label byte out of range");
        ds.labels[i] = label;
        const unsigned char* planes = rec + label_bytes;
        double* out = ds.images.data() + i * 3072;
        for (std::size_t y = 0; y < 32; ++y)
            for (std::size_t x = 0; x < 32; ++x)
                for (std::size_t c = 0; c < 3; ++c)
                    out[(y * 32 + x) * 3 + c] =
                        static_cast<double>(planes[c * 1024 + y * 32 + x]) / 255.0;
    }
    ds.validate();
    return ds;
}

} // namespace

Dataset load_cifar10(const std::vector<std::filesystem::path>& batch_paths) {
    if (batch_paths.empty()) throw DataError("no CIFAR-10 batch files given");
    return load_cifar_records(batch_paths, 1, 0, 10, "cifar10");
}

Dataset load_cifar100(const std::filesystem::path& path, bool fine_labels) {
    return load_cifar_records({path}, 2, fine_labels ? 1 : 0, fine_labels ? 100 : 20,
                              "cifar100");
}

namespace {

// Smooth per-class template: seeded pixel noise blurred twice with a 3x3 box
// filter, then stretched to [0.1, 0.9]. Smooth fields give the conv stack
// something learnable at desk scale.
Tensor make_template(std::size_t height, std::size_t width, std::size_t channels,
                     SeededRng rng) {
    Tensor img({height, width, channels});
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = rng.next_unit();
    Tensor tmp = img;
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t y = 0; y < height; ++y)
            for (std::size_t x = 0; x < width; ++x)
                for (std::size_t c = 0; c < channels; ++c) {
                    double acc = 0.0;
                    int n = 0;
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) {
                            std::ptrdiff_t yy = static_cast<std::ptrdiff_t>(y) + dy;
                            std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(x) + dx;
                            if (yy < 0 || xx < 0 || yy >= static_cast<std::ptrdiff_t>(height) ||
                                xx >= static_cast<std::ptrdiff_t>(width))
                                continue;
                            acc += img[(static_cast<std::size_t>(yy) * width +
                                        static_cast<std::size_t>(xx)) * channels + c];
                            ++n;
                        }
                    tmp[(y * width + x) * channels + c] = acc / n;
                }
        img = tmp;
    }
    double lo = img[0], hi = img[0];
    for (std::size_t i = 0; i < img.size(); ++i) {
        lo = std::min(lo, img[i]);
        hi = std::max(hi, img[i]);
    }
    double span = hi > lo ? hi - lo : 1.0;
    for (std::size_t i = 0; i < img.size(); ++i)
        img[i] = 0.1 + 0.8 * (img[i] - lo) / span;
    return img;
}

} // namespace

Dataset synthesize_dataset(std::size_t count, std::size_t classes, std::size_t height,
                           std::size_t width, std::size_t channels, std::uint64_t seed,
                           double difficulty) {
    if (classes < 2) throw DataError("synthesize_dataset: need at least two classes");
    if (count < classes) throw DataError("synthesize_dataset: fewer samples than classes");
    if (height == 0 || width == 0 || channels == 0)
        throw DataError("synthesize_dataset: extents must be positive");
    if (difficulty < 0.0) throw DataError("synthesize_dataset: difficulty must be nonnegative");

    SeededRng root(seed);
    std::vector<Tensor> templates;
    templates.reserve(classes);
    for (std::size_t m = 0; m < classes; ++m)
        templates.push_back(make_template(height, width, channels,
                                          root.child("template").child(m)));

    Dataset ds;
    ds.images = Tensor({count, height, width, channels});
    ds.labels.resize(count);
    ds.class_count = classes;
    ds.name = "synth";
    std::size_t row = height * width * channels;
    SeededRng noise = root.child("noise");
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t label = i % classes; // round-robin keeps classes balanced
        ds.labels[i] = static_cast<int>(label);
        const Tensor& base = templates[label];
        double* out = ds.images.data() + i * row;
        for (std::size_t j = 0; j < row; ++j) {
            double v = base[j] + difficulty * noise.next_uniform(-1.0, 1.0);
            out[j] = std::clamp(v, 0.0, 1.0);
        }
    }
    ds.validate();
    return ds;
}

namespace {

// Inverse-mapped affine warp with bilinear sampling and zero fill, then a
// contrast scale around mid-gray.
void transform_image(const double* src, double* dst, std::size_t height, std::size_t width,
                     std::size_t channels, double angle_degrees, double shift_x,
                     double shift_y, double contrast) {
    double angle = angle_degrees * kPi / 180.0;
    double cos_a = std::cos(angle), sin_a = std::sin(angle);
    double cy = (static_cast<double>(height) - 1.0) / 2.0;
    double cx = (static_cast<double>(width) - 1.0) / 2.0;
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            double u = static_cast<double>(x) - cx - shift_x;
            double v = static_cast<double>(y) - cy - shift_y;
            double sx = cos_a * u + sin_a * v + cx;
            double sy = -sin_a * u + cos_a * v + cy;
            double fx = std::floor(sx), fy = std::floor(sy);
            double wx = sx - fx, wy = sy - fy;
            for (std::size_t c = 0; c < channels; ++c) {
                auto at = [&](double yy, double xx) -> double {
                    if (yy < 0 || xx < 0 || yy >= static_cast<double>(height) ||
                        xx >= static_cast<double>(width))
                        return 0.0;
                    return src[(static_cast<std::size_t>(yy) * width +
                                static_cast<std::size_t>(xx)) * channels + c];
                };
                double val = (1 - wy) * ((1 - wx) * at(fy, fx) + wx * at(fy, fx + 1)) +
                             wy * ((1 - wx) * at(fy + 1, fx) + wx * at(fy + 1, fx + 1));
                val = 0.5 + contrast * (val - 0.5);
                dst[(y * width + x) * channels + c] = std::clamp(val, 0.0, 1.0);
            }
        }
    }
}

} // namespace

Dataset augment_tenfold(const Dataset& ds, const AugmentParams& params, std::uint64_t seed) {
    ds.validate();
    if (params.rotation_max_degrees < 0 || params.shift_max_fraction < 0 ||
        params.contrast_low > params.contrast_high || params.contrast_low < 0)
        throw ConfigError("invalid augmentation parameters");

    std::size_t copies = params.copies_per_image;
    std::size_t height = ds.height(), width = ds.width(), channels = ds.channels();
    std::size_t row = height * width * channels;
    std::size_t out_count = ds.size() * (copies + 1);

    Dataset out;
    out.images = Tensor({out_count, height, width, channels});
    out.labels.resize(out_count);
    out.class_count = ds.class_count;
    out.name = ds.name + "+aug";

    SeededRng root(seed);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double* src = ds.images.data() + i * row;
        double* block = out.images.data() + i * (copies + 1) * row;
        std::copy(src, src + row, block);
        out.labels[i * (copies + 1)] = ds.labels[i];
        SeededRng rng = root.child(i);
        for (std::size_t k = 1; k <= copies; ++k) {
            double angle = rng.next_uniform(-params.rotation_max_degrees,
                                            params.rotation_max_degrees);
            double shift_x = rng.next_uniform(-params.shift_max_fraction,
                                              params.shift_max_fraction) *
                             static_cast<double>(width);
            double shift_y = rng.next_uniform(-params.shift_max_fraction,
                                              params.shift_max_fraction) *
                             static_cast<double>(height);
            double contrast = rng.next_uniform(params.contrast_low, params.contrast_high);
            transform_image(src, block + k * row, height, width, channels, angle, shift_x,
                            shift_y, contrast);
            out.labels[i * (copies + 1) + k] = ds.labels[i];
        }
    }
    return out;
}

void save_dataset_cache(const Dataset& ds, const std::filesystem::path& path,
                        std::uint64_t seed, const AugmentParams& params) {
    ds.validate();
    if (ds.class_count > 0xFFFF) throw DataError("too many classes for the cache container");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out.write("STDC0001", 8);
    write_le64(out, ds.size());
    write_le64(out, ds.height());
    write_le64(out, ds.width());
    write_le64(out, ds.channels());
    write_le64(out, ds.class_count);
    write_le64(out, seed);
    write_le_double(out, params.rotation_max_degrees);
    write_le_double(out, params.shift_max_fraction);
    write_le_double(out, params.contrast_low);
    write_le_double(out, params.contrast_high);
    write_le64(out, params.copies_per_image);
    for (int label : ds.labels) {
        unsigned char b[2] = {static_cast<unsigned char>(label & 0xFF),
                              static_cast<unsigned char>((label >> 8) & 0xFF)};
        out.write(reinterpret_cast<const char*>(b), 2);
    }
    std::vector<unsigned char> quantized(ds.images.size());
    for (std::size_t i = 0; i < ds.images.size(); ++i)
        quantized[i] = static_cast<unsigned char>(std::lround(ds.images[i] * 255.0));
    out.write(reinterpret_cast<const char*>(quantized.data()),
              static_cast<std::streamsize>(quantized.size()));
    if (!out) throw DataError("write failed: " + path.string());
}

Dataset load_dataset_cache(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, "STDC0001", 8) != 0)
        throw DataError("bad dataset cache magic in " + path.string());
    std::uint64_t count = read_le64(in, "sample count");
    std::uint64_t height = read_le64(in, "height");
    std::uint64_t width = read_le64(in, "width");
    std::uint64_t channels = read_le64(in, "channels");
    std::uint64_t classes = read_le64(in, "class count");
    read_le64(in, "seed");
    for (int i = 0; i < 4; ++i) read_le_double(in, "augment params");
    read_le64(in, "copies");

    Dataset ds;
    ds.class_count = classes;
    ds.name = path.stem().string();
    ds.labels.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        unsigned char b[2];
        if (!in.read(reinterpret_cast<char*>(b), 2))
            throw DataError("truncated label block in " + path.string());
        ds.labels[i] = b[0] | (b[1] << 8);
    }
    std::size_t pixel_count = count * height * width * channels;
    std::vector<unsigned char> quantized(pixel_count);
    if (!in.read(reinterpret_cast<char*>(quantized.data()),
                 static_cast<std::streamsize>(pixel_count)))
        throw DataError("truncated pixel block in " + path.string());
    ds.images = Tensor({count, height, width, channels});
    for (std::size_t i = 0; i < pixel_count; ++i)
        ds.images[i] = static_cast<double>(quantized[i]) / 255.0;
    ds.validate();
    return ds;
}

} // namespace subtrain
