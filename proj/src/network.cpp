#include "subtrain/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "subtrain/errors.hpp"
#include "subtrain/rng.hpp"

namespace subtrain {

void NetworkSpec::validate() const {
    if (input_height == 0 || input_width == 0 || input_channels == 0)
        throw ConfigError("network input extents must be positive");
    if (class_count < 2) throw ConfigError("class_count must be at least 2");
    for (std::size_t f : conv_filters)
        if (f == 0) throw ConfigError("conv filter counts must be positive");
    std::size_t h = input_height, w = input_width;
    for (std::size_t i = 0; i < conv_filters.size(); ++i) {
        if (h < kPool || w < kPool)
            throw ConfigError("input too small for the pooling stack");
        h /= kPool;
        w /= kPool;
    }
    if (h == 0 || w == 0) throw ConfigError("flatten size must be positive");
}

std::uint64_t NetworkSpec::hash() const {
    std::ostringstream canon;
    canon << "in=" << input_height << "x" << input_width << "x" << input_channels
          << ";conv=";
    for (std::size_t i = 0; i < conv_filters.size(); ++i)
        canon << (i ? "/" : "") << conv_filters[i];
    canon << ";hidden=" << hidden_units << ";classes=" << class_count;
    return fnv1a64(canon.str());
}

std::size_t parameter_count(const NetworkSpec& spec) {
    spec.validate();
    constexpr std::size_t k = NetworkSpec::kKernel;
    std::size_t h = spec.input_height, w = spec.input_width, c = spec.input_channels;
    std::size_t count = 0;
    for (std::size_t f : spec.conv_filters) {
        count += k * k * c * f + f;
        c = f;
        h /= NetworkSpec::kPool;
        w /= NetworkSpec::kPool;
    }
    std::size_t flat = h * w * c;
    if (spec.hidden_units > 0) {
        count += flat * spec.hidden_units + spec.hidden_units;
        flat = spec.hidden_units;
    }
    count += flat * spec.class_count + spec.class_count;
    return count;
}

Network::Network(NetworkSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    constexpr std::size_t k = NetworkSpec::kKernel;

    std::size_t h = spec_.input_height, w = spec_.input_width, c = spec_.input_channels;
    std::size_t offset = 0;
    for (std::size_t i = 0; i < spec_.conv_filters.size(); ++i) {
        std::size_t f = spec_.conv_filters[i];
        ConvPlan plan;
        plan.in_h = h;
        plan.in_w = w;
        plan.in_c = c;
        plan.filters = f;
        plan.kernel_offset = offset;
        offset += k * k * c * f;
        plan.bias_offset = offset;
        offset += f;
        plan.pooled_h = h / NetworkSpec::kPool;
        plan.pooled_w = w / NetworkSpec::kPool;
        conv_plan_.push_back(plan);
        layers_.push_back({"conv" + std::to_string(i + 1), plan.kernel_offset,
                           k * k * c * f, f});
        h = plan.pooled_h;
        w = plan.pooled_w;
        c = f;
    }
    flatten_dim_ = h * w * c;

    std::size_t in_dim = flatten_dim_;
    if (spec_.hidden_units > 0) {
        DensePlan plan{in_dim, spec_.hidden_units, offset,
                       offset + in_dim * spec_.hidden_units, true};
        offset = plan.bias_offset + spec_.hidden_units;
        dense_plan_.push_back(plan);
        layers_.push_back({"dense1", plan.weight_offset, in_dim * spec_.hidden_units,
                           spec_.hidden_units});
        in_dim = spec_.hidden_units;
    }
    DensePlan out_plan{in_dim, spec_.class_count, offset,
                       offset + in_dim * spec_.class_count, false};
    offset = out_plan.bias_offset + spec_.class_count;
    dense_plan_.push_back(out_plan);
    layers_.push_back({"output", out_plan.weight_offset, in_dim * spec_.class_count,
                       spec_.class_count});

    params_.assign(offset, 0.0);

    // Kernels are Glorot-initialized with a child seed per trainable layer;
    // biases stay zero.
    std::size_t layer_index = 0;
    for (const ConvPlan& plan : conv_plan_) {
        SeededRng rng(SeededRng::derive_child(spec_.master_seed, layer_index++));
        std::size_t fan_in = k * k * plan.in_c;
        std::size_t fan_out = k * k * plan.filters;
        Tensor kernel = glorot_uniform(fan_in, fan_out, {k, k, plan.in_c, plan.filters}, rng);
        std::copy(kernel.data(), kernel.data() + kernel.size(),
                  params_.begin() + static_cast<std::ptrdiff_t>(plan.kernel_offset));
    }
    for (const DensePlan& plan : dense_plan_) {
        SeededRng rng(SeededRng::derive_child(spec_.master_seed, layer_index++));
        Tensor weight = glorot_uniform(plan.in_dim, plan.out_dim, {plan.in_dim, plan.out_dim}, rng);
        std::copy(weight.data(), weight.data() + weight.size(),
                  params_.begin() + static_cast<std::ptrdiff_t>(plan.weight_offset));
    }
}

namespace {

void ensure_finite(const double* values, std::size_t count, const std::string& layer) {
    for (std::size_t i = 0; i < count; ++i)
        if (!std::isfinite(values[i]))
            throw NumericError("non-finite activation after layer " + layer);
}

void conv3x3_same_forward(const double* in, std::size_t n, std::size_t height,
                          std::size_t width, std::size_t in_c, const double* kernel,
                          const double* bias, std::size_t filters, double* out) {
    const std::size_t in_row = height * width * in_c;
    const std::size_t out_row = height * width * filters;
    for (std::size_t s = 0; s < n; ++s) {
        const double* src = in + s * in_row;
        double* dst = out + s * out_row;
        for (std::size_t y = 0; y < height; ++y) {
            for (std::size_t x = 0; x < width; ++x) {
                double* cell = dst + (y * width + x) * filters;
                std::copy(bias, bias + filters, cell);
                for (int dy = -1; dy <= 1; ++dy) {
                    std::ptrdiff_t yy = static_cast<std::ptrdiff_t>(y) + dy;
                    if (yy < 0 || yy >= static_cast<std::ptrdiff_t>(height)) continue;
                    for (int dx = -1; dx <= 1; ++dx) {
                        std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(x) + dx;
                        if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(width)) continue;
                        const double* px =
                            src + (static_cast<std::size_t>(yy) * width +
                                   static_cast<std::size_t>(xx)) * in_c;
                        const double* kr =
                            kernel + ((static_cast<std::size_t>(dy + 1) * 3 +
                                       static_cast<std::size_t>(dx + 1)) * in_c) * filters;
                        for (std::size_t c = 0; c < in_c; ++c) {
                            double coef = px[c];
                            const double* kc = kr + c * filters;
                            for (std::size_t f = 0; f < filters; ++f)
                                cell[f] += coef * kc[f];
                        }
                    }
                }
            }
        }
    }
}

void conv3x3_same_backward(const double* in, const double* dout, const double* kernel,
                           std::size_t n, std::size_t height, std::size_t width,
                           std::size_t in_c, std::size_t filters, double* din,
                           double* dkernel, double* dbias) {
    const std::size_t in_row = height * width * in_c;
    const std::size_t out_row = height * width * filters;
    for (std::size_t s = 0; s < n; ++s) {
        const double* src = in + s * in_row;
        const double* dup = dout + s * out_row;
        double* ddn = din ? din + s * in_row : nullptr;
        for (std::size_t y = 0; y < height; ++y) {
            for (std::size_t x = 0; x < width; ++x) {
                const double* cell = dup + (y * width + x) * filters;
                for (std::size_t f = 0; f < filters; ++f) dbias[f] += cell[f];
                for (int dy = -1; dy <= 1; ++dy) {
                    std::ptrdiff_t yy = static_cast<std::ptrdiff_t>(y) + dy;
                    if (yy < 0 || yy >= static_cast<std::ptrdiff_t>(height)) continue;
                    for (int dx = -1; dx <= 1; ++dx) {
                        std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(x) + dx;
                        if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(width)) continue;
                        std::size_t pixel = (static_cast<std::size_t>(yy) * width +
                                             static_cast<std::size_t>(xx)) * in_c;
                        const double* px = src + pixel;
                        std::size_t tap = (static_cast<std::size_t>(dy + 1) * 3 +
                                           static_cast<std::size_t>(dx + 1)) * in_c;
                        const double* kr = kernel + tap * filters;
                        double* dkr = dkernel + tap * filters;
                        for (std::size_t c = 0; c < in_c; ++c) {
                            double coef = px[c];
                            const double* kc = kr + c * filters;
                            double* dkc = dkr + c * filters;
                            double acc = 0.0;
                            for (std::size_t f = 0; f < filters; ++f) {
                                dkc[f] += coef * cell[f];
                                acc += kc[f] * cell[f];
                            }
                            if (ddn) ddn[pixel + c] += acc;
                        }
                    }
                }
            }
        }
    }
}

void relu_forward(double* values, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i)
        if (values[i] < 0.0) values[i] = 0.0;
}

void relu_backward(const double* activation, double* grad, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i)
        if (activation[i] <= 0.0) grad[i] = 0.0;
}

void maxpool2x2_forward(const double* in, std::size_t n, std::size_t height,
                        std::size_t width, std::size_t channels, double* out,
                        std::uint32_t* argmax, std::size_t out_h, std::size_t out_w) {
    const std::size_t in_row = height * width * channels;
    const std::size_t out_row = out_h * out_w * channels;
    for (std::size_t s = 0; s < n; ++s) {
        const double* src = in + s * in_row;
        double* dst = out + s * out_row;
        std::uint32_t* arg = argmax + s * out_row;
        for (std::size_t y = 0; y < out_h; ++y) {
            for (std::size_t x = 0; x < out_w; ++x) {
                for (std::size_t c = 0; c < channels; ++c) {
                    double best = -std::numeric_limits<double>::infinity();
                    std::uint32_t best_idx = 0;
                    for (std::size_t py = 2 * y; py < 2 * y + 2; ++py) {
                        for (std::size_t px = 2 * x; px < 2 * x + 2; ++px) {
                            std::size_t idx = (py * width + px) * channels + c;
                            if (src[idx] > best) {
                                best = src[idx];
                                best_idx = static_cast<std::uint32_t>(idx);
                            }
                        }
                    }
                    std::size_t out_idx = (y * out_w + x) * channels + c;
                    dst[out_idx] = best;
                    arg[out_idx] = best_idx;
                }
            }
        }
    }
}

void maxpool2x2_backward(const double* dout, const std::uint32_t* argmax, std::size_t n,
                         std::size_t in_row, std::size_t out_row, double* din) {
    std::fill(din, din + n * in_row, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        const double* dup = dout + s * out_row;
        const std::uint32_t* arg = argmax + s * out_row;
        double* ddn = din + s * in_row;
        for (std::size_t i = 0; i < out_row; ++i) ddn[arg[i]] += dup[i];
    }
}

void dense_forward(const double* in, std::size_t n, std::size_t in_dim,
                   const double* weight, const double* bias, std::size_t out_dim,
                   double* out) {
    for (std::size_t s = 0; s < n; ++s) {
        const double* x = in + s * in_dim;
        double* y = out + s * out_dim;
        std::copy(bias, bias + out_dim, y);
        for (std::size_t i = 0; i < in_dim; ++i) {
            double coef = x[i];
            const double* wr = weight + i * out_dim;
            for (std::size_t o = 0; o < out_dim; ++o) y[o] += coef * wr[o];
        }
    }
}

void dense_backward(const double* in, const double* dout, const double* weight,
                    std::size_t n, std::size_t in_dim, std::size_t out_dim, double* din,
                    double* dweight, double* dbias) {
    for (std::size_t s = 0; s < n; ++s) {
        const double* x = in + s * in_dim;
        const double* dy = dout + s * out_dim;
        for (std::size_t o = 0; o < out_dim; ++o) dbias[o] += dy[o];
        double* dx = din ? din + s * in_dim : nullptr;
        for (std::size_t i = 0; i < in_dim; ++i) {
            double coef = x[i];
            const double* wr = weight + i * out_dim;
            double* dwr = dweight + i * out_dim;
            double acc = 0.0;
            for (std::size_t o = 0; o < out_dim; ++o) {
                dwr[o] += coef * dy[o];
                acc += wr[o] * dy[o];
            }
            if (dx) dx[i] = acc;
        }
    }
}

// Log-sum-exp fused softmax/cross-entropy. Returns the summed (not yet
// averaged) loss; fills probabilities if requested.
double softmax_xent(const double* logits, const std::vector<int>& labels, std::size_t classes,
                    double* probs) {
    double total = 0.0;
    for (std::size_t s = 0; s < labels.size(); ++s) {
        const double* z = logits + s * classes;
        double peak = z[0];
        for (std::size_t j = 1; j < classes; ++j) peak = std::max(peak, z[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < classes; ++j) denom += std::exp(z[j] - peak);
        double lse = peak + std::log(denom);
        total += lse - z[static_cast<std::size_t>(labels[s])];
        if (probs)
            for (std::size_t j = 0; j < classes; ++j)
                probs[s * classes + j] = std::exp(z[j] - lse);
    }
    return total;
}

} // namespace

struct Network::Workspace {
    std::vector<std::vector<double>> conv_act;      // post-ReLU conv maps
    std::vector<std::vector<double>> pooled;        // after each maxpool
    std::vector<std::vector<std::uint32_t>> argmax; // pool source indices
    std::vector<double> hidden;                     // post-ReLU hidden layer
    std::vector<double> logits;
    std::vector<const double*> dense_inputs;        // input pointer per dense layer
};

void Network::check_batch(const Batch& batch) const {
    if (batch.size() == 0) throw ConfigError("empty batch");
    const auto& shape = batch.images.shape();
    if (shape.size() != 4 || shape[0] != batch.size() || shape[1] != spec_.input_height ||
        shape[2] != spec_.input_width || shape[3] != spec_.input_channels)
        throw ConfigError("batch image shape does not match the network spec");
    for (int label : batch.labels)
        if (label < 0 || static_cast<std::size_t>(label) >= spec_.class_count)
            throw ConfigError("batch label outside [0, class_count)");
}

void Network::run_stages(const Batch& batch, Workspace& ws) const {
    const std::size_t n = batch.size();
    const double* stage = batch.images.data();
    for (std::size_t i = 0; i < conv_plan_.size(); ++i) {
        const ConvPlan& plan = conv_plan_[i];
        ws.conv_act.emplace_back(n * plan.in_h * plan.in_w * plan.filters);
        conv3x3_same_forward(stage, n, plan.in_h, plan.in_w, plan.in_c,
                             params_.data() + plan.kernel_offset,
                             params_.data() + plan.bias_offset, plan.filters,
                             ws.conv_act.back().data());
        ensure_finite(ws.conv_act.back().data(), ws.conv_act.back().size(), layers_[i].name);
        relu_forward(ws.conv_act.back().data(), ws.conv_act.back().size());
        ws.pooled.emplace_back(n * plan.pooled_h * plan.pooled_w * plan.filters);
        ws.argmax.emplace_back(ws.pooled.back().size());
        maxpool2x2_forward(ws.conv_act.back().data(), n, plan.in_h, plan.in_w, plan.filters,
                           ws.pooled.back().data(), ws.argmax.back().data(), plan.pooled_h,
                           plan.pooled_w);
        stage = ws.pooled.back().data();
    }
    for (std::size_t i = 0; i < dense_plan_.size(); ++i) {
        const DensePlan& plan = dense_plan_[i];
        ws.dense_inputs.push_back(stage);
        std::vector<double>& out = plan.relu ? ws.hidden : ws.logits;
        out.assign(n * plan.out_dim, 0.0);
        dense_forward(stage, n, plan.in_dim, params_.data() + plan.weight_offset,
                      params_.data() + plan.bias_offset, plan.out_dim, out.data());
        ensure_finite(out.data(), out.size(), layers_[conv_plan_.size() + i].name);
        if (plan.relu) relu_forward(out.data(), out.size());
        stage = out.data();
    }
}

Tensor Network::forward(const Batch& batch) const {
    check_batch(batch);
    Workspace ws;
    run_stages(batch, ws);
    Tensor probs({batch.size(), spec_.class_count});
    softmax_xent(ws.logits.data(), batch.labels, spec_.class_count, probs.data());
    return probs;
}

double Network::mean_loss(const Batch& batch) const {
    check_batch(batch);
    Workspace ws;
    run_stages(batch, ws);
    return softmax_xent(ws.logits.data(), batch.labels, spec_.class_count, nullptr) /
           static_cast<double>(batch.size());
}

Network::LossGrad Network::loss_and_gradient(const Batch& batch) const {
    check_batch(batch);
    const std::size_t n = batch.size();

    Workspace ws;
    run_stages(batch, ws);

    std::vector<double> dlogits(n * spec_.class_count);
    double loss = softmax_xent(ws.logits.data(), batch.labels, spec_.class_count,
                               dlogits.data()) /
                  static_cast<double>(n);
    if (!std::isfinite(loss)) throw NumericError("non-finite activation after layer output");
    double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t s = 0; s < n; ++s) {
        dlogits[s * spec_.class_count + static_cast<std::size_t>(batch.labels[s])] -= 1.0;
        for (std::size_t j = 0; j < spec_.class_count; ++j)
            dlogits[s * spec_.class_count + j] *= inv_n;
    }

    std::vector<double> grad(params_.size(), 0.0);

    // Dense stack, reversed.
    std::vector<double> dstage = std::move(dlogits);
    for (std::size_t i = dense_plan_.size(); i-- > 0;) {
        const DensePlan& plan = dense_plan_[i];
        if (plan.relu) relu_backward(ws.hidden.data(), dstage.data(), dstage.size());
        bool need_dinput = i > 0 || !conv_plan_.empty();
        std::vector<double> din;
        if (need_dinput) din.assign(n * plan.in_dim, 0.0);
        dense_backward(ws.dense_inputs[i], dstage.data(), params_.data() + plan.weight_offset,
                       n, plan.in_dim, plan.out_dim, need_dinput ? din.data() : nullptr,
                       grad.data() + plan.weight_offset, grad.data() + plan.bias_offset);
        dstage = std::move(din);
    }

    // Conv blocks, reversed; dstage currently holds the flatten gradient.
    for (std::size_t i = conv_plan_.size(); i-- > 0;) {
        const ConvPlan& plan = conv_plan_[i];
        std::size_t act_row = plan.in_h * plan.in_w * plan.filters;
        std::size_t pool_row = plan.pooled_h * plan.pooled_w * plan.filters;
        std::vector<double> dact(n * act_row);
        maxpool2x2_backward(dstage.data(), ws.argmax[i].data(), n, act_row, pool_row,
                            dact.data());
        relu_backward(ws.conv_act[i].data(), dact.data(), dact.size());
        const double* input = i == 0 ? batch.images.data() : ws.pooled[i - 1].data();
        bool need_dinput = i > 0;
        std::vector<double> din;
        if (need_dinput) din.assign(n * plan.in_h * plan.in_w * plan.in_c, 0.0);
        conv3x3_same_backward(input, dact.data(), params_.data() + plan.kernel_offset, n,
                              plan.in_h, plan.in_w, plan.in_c, plan.filters,
                              need_dinput ? din.data() : nullptr,
                              grad.data() + plan.kernel_offset,
                              grad.data() + plan.bias_offset);
        dstage = std::move(din);
    }

    return LossGrad{loss, std::move(grad)};
}

Network::Evaluation Network::evaluate(const Dataset& ds) const {
    std::vector<std::size_t> all(ds.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return evaluate(ds, all);
}

Network::Evaluation Network::evaluate(const Dataset& ds,
                                      const std::vector<std::size_t>& indices) const {
    if (indices.empty()) throw ConfigError("evaluate: empty dataset");
    constexpr std::size_t kChunk = 256;
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < indices.size(); begin += kChunk) {
        std::size_t end = std::min(begin + kChunk, indices.size());
        std::vector<std::size_t> part(indices.begin() + static_cast<std::ptrdiff_t>(begin),
                                      indices.begin() + static_cast<std::ptrdiff_t>(end));
        Batch batch{ds.gather_images(part), ds.gather_labels(part)};
        Tensor probs = forward(batch);
        for (std::size_t s = 0; s < batch.size(); ++s) {
            const double* row = probs.data() + s * spec_.class_count;
            double p_true = row[static_cast<std::size_t>(batch.labels[s])];
            loss_sum += -std::log(std::max(p_true, 1e-300));
            std::size_t best = 0;
            for (std::size_t j = 1; j < spec_.class_count; ++j)
                if (row[j] > row[best]) best = j; // ties resolve to the lowest index
            if (best == static_cast<std::size_t>(batch.labels[s])) ++correct;
        }
    }
    return Evaluation{loss_sum / static_cast<double>(indices.size()),
                      static_cast<double>(correct) / static_cast<double>(indices.size())};
}

void Network::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out.write("STNW0001", 8);
    auto write_u64 = [&](std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        out.write(reinterpret_cast<const char*>(b), 8);
    };
    write_u64(spec_.hash());
    write_u64(params_.size());
    for (double p : params_) {
        std::uint64_t bits;
        std::memcpy(&bits, &p, 8);
        write_u64(bits);
    }
    if (!out) throw DataError("write failed: " + path.string());
}

Network Network::load(const std::filesystem::path& path, NetworkSpec spec) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, "STNW0001", 8) != 0)
        throw DataError("bad network file magic in " + path.string());
    auto read_u64 = [&](const char* what) {
        unsigned char b[8];
        if (!in.read(reinterpret_cast<char*>(b), 8))
            throw DataError(std::string("truncated network file while reading ") + what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
        return v;
    };
    Network net(std::move(spec));
    if (read_u64("spec hash") != net.spec_.hash())
        throw DataError("network file does not match the given spec");
    if (read_u64("parameter count") != net.params_.size())
        throw DataError("network file parameter count mismatch");
    for (double& p : net.params_) {
        std::uint64_t bits = read_u64("parameters");
        std::memcpy(&p, &bits, 8);
    }
    return net;
}

} // namespace subtrain
