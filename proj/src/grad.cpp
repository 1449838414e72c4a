#include "hqfnn/grad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace hqfnn {

namespace {

void expect_size(std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(want) +
                                    " elements, got " + std::to_string(got));
    }
}

}  // namespace

ParamTensor::ParamTensor(std::string name_, std::vector<std::size_t> shape_)
    : name(std::move(name_)), shape(std::move(shape_)) {
    const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    values.assign(n, 0.0);
    grad.assign(n, 0.0);
}

void ParamTensor::zero_grad() {
    std::fill(grad.begin(), grad.end(), 0.0);
}

double param_shift_grad(const std::function<double(double)>& circuit_eval, double theta) {
    constexpr double shift = std::numbers::pi / 2.0;
    return 0.5 * (circuit_eval(theta + shift) - circuit_eval(theta - shift));
}

double finite_diff_grad(const std::function<double(double)>& f, double theta, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
    return (f(theta + h) - f(theta - h)) / (2.0 * h);
}

double relative_error(double a, double b, double floor) {
    const double denom = std::max({std::abs(a), std::abs(b), floor});
    return std::abs(a - b) / denom;
}

namespace nn {

std::vector<double> linear_forward(std::span<const double> x, std::span<const double> w,
                                   std::span<const double> b, std::size_t in, std::size_t out) {
    expect_size(x.size(), in, "linear input");
    expect_size(w.size(), in * out, "linear weight");
    expect_size(b.size(), out, "linear bias");
    std::vector<double> y(b.begin(), b.end());
    for (std::size_t i = 0; i < in; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        const double* row = w.data() + i * out;
        for (std::size_t o = 0; o < out; ++o) y[o] += xi * row[o];
    }
    return y;
}

Grads linear_backward(std::span<const double> x, std::span<const double> w, std::span<const double> gy,
                      std::size_t in, std::size_t out) {
    expect_size(x.size(), in, "linear input");
    expect_size(w.size(), in * out, "linear weight");
    expect_size(gy.size(), out, "linear upstream gradient");
    Grads g;
    g.input.assign(in, 0.0);
    g.weight.assign(in * out, 0.0);
    g.bias.assign(gy.begin(), gy.end());
    for (std::size_t i = 0; i < in; ++i) {
        const double* row = w.data() + i * out;
        double* grow = g.weight.data() + i * out;
        double acc = 0.0;
        for (std::size_t o = 0; o < out; ++o) {
            grow[o] = x[i] * gy[o];
            acc += row[o] * gy[o];
        }
        g.input[i] = acc;
    }
    return g;
}

std::vector<double> relu_forward(std::span<const double> x) {
    std::vector<double> y(x.size());
    std::transform(x.begin(), x.end(), y.begin(), [](double v) { return v > 0.0 ? v : 0.0; });
    return y;
}

std::vector<double> relu_backward(std::span<const double> x, std::span<const double> gy) {
    expect_size(gy.size(), x.size(), "relu upstream gradient");
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] > 0.0 ? gy[i] : 0.0;
    return g;
}

std::vector<double> conv1d_forward(std::span<const double> x, std::span<const double> kernel,
                                   std::span<const double> bias, std::size_t c_in, std::size_t c_out,
                                   std::size_t len) {
    if (len < 1) throw std::invalid_argument("conv1d needs a non-empty signal");
    expect_size(x.size(), c_in * len, "conv1d input");
    expect_size(kernel.size(), c_in * c_out * 3, "conv1d kernel");
    expect_size(bias.size(), c_out, "conv1d bias");
    std::vector<double> y(c_out * len);
    for (std::size_t co = 0; co < c_out; ++co) {
        for (std::size_t p = 0; p < len; ++p) y[co * len + p] = bias[co];
    }
    for (std::size_t ci = 0; ci < c_in; ++ci) {
        for (std::size_t co = 0; co < c_out; ++co) {
            const double* k = kernel.data() + (ci * c_out + co) * 3;
            for (std::size_t p = 0; p < len; ++p) {
                double acc = 0.0;
                for (std::size_t t = 0; t < 3; ++t) {
                    const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(p + t) - 1;
                    if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
                    acc += k[t] * x[ci * len + static_cast<std::size_t>(src)];
                }
                y[co * len + p] += acc;
            }
        }
    }
    return y;
}

Grads conv1d_backward(std::span<const double> x, std::span<const double> kernel, std::span<const double> gy,
                      std::size_t c_in, std::size_t c_out, std::size_t len) {
    expect_size(x.size(), c_in * len, "conv1d input");
    expect_size(kernel.size(), c_in * c_out * 3, "conv1d kernel");
    expect_size(gy.size(), c_out * len, "conv1d upstream gradient");
    Grads g;
    g.input.assign(c_in * len, 0.0);
    g.weight.assign(kernel.size(), 0.0);
    g.bias.assign(c_out, 0.0);
    for (std::size_t co = 0; co < c_out; ++co) {
        for (std::size_t p = 0; p < len; ++p) g.bias[co] += gy[co * len + p];
    }
    for (std::size_t ci = 0; ci < c_in; ++ci) {
        for (std::size_t co = 0; co < c_out; ++co) {
            const double* k = kernel.data() + (ci * c_out + co) * 3;
            double* gk = g.weight.data() + (ci * c_out + co) * 3;
            for (std::size_t p = 0; p < len; ++p) {
                const double up = gy[co * len + p];
                for (std::size_t t = 0; t < 3; ++t) {
                    const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(p + t) - 1;
                    if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
                    const auto s = static_cast<std::size_t>(src);
                    gk[t] += up * x[ci * len + s];
                    g.input[ci * len + s] += up * k[t];
                }
            }
        }
    }
    return g;
}

std::vector<double> conv2d_forward(std::span<const double> x, std::span<const double> kernel,
                                   std::span<const double> bias, std::size_t c_in, std::size_t c_out,
                                   std::size_t h, std::size_t w) {
    expect_size(x.size(), c_in * h * w, "conv2d input");
    expect_size(kernel.size(), c_out * c_in * 9, "conv2d kernel");
    expect_size(bias.size(), c_out, "conv2d bias");
    std::vector<double> y(c_out * h * w);
    for (std::size_t co = 0; co < c_out; ++co) {
        double* yc = y.data() + co * h * w;
        std::fill(yc, yc + h * w, bias[co]);
        for (std::size_t ci = 0; ci < c_in; ++ci) {
            const double* xc = x.data() + ci * h * w;
            const double* k = kernel.data() + (co * c_in + ci) * 9;
            for (std::size_t ky = 0; ky < 3; ++ky) {
                for (std::size_t kx = 0; kx < 3; ++kx) {
                    const double kv = k[ky * 3 + kx];
                    // output rows/cols whose source pixel (r + ky - 1, c + kx - 1) is inside
                    const std::size_t r0 = ky == 0 ? 1 : 0;
                    const std::size_t r1 = ky == 2 ? h - 1 : h;
                    const std::size_t c0 = kx == 0 ? 1 : 0;
                    const std::size_t c1 = kx == 2 ? w - 1 : w;
                    for (std::size_t r = r0; r < r1; ++r) {
                        const double* src = xc + (r + ky - 1) * w;
                        double* dst = yc + r * w;
                        for (std::size_t c = c0; c < c1; ++c) dst[c] += kv * src[c + kx - 1];
                    }
                }
            }
        }
    }
    return y;
}

Grads conv2d_backward(std::span<const double> x, std::span<const double> kernel, std::span<const double> gy,
                      std::size_t c_in, std::size_t c_out, std::size_t h, std::size_t w) {
    expect_size(x.size(), c_in * h * w, "conv2d input");
    expect_size(kernel.size(), c_out * c_in * 9, "conv2d kernel");
    expect_size(gy.size(), c_out * h * w, "conv2d upstream gradient");
    Grads g;
    g.input.assign(x.size(), 0.0);
    g.weight.assign(kernel.size(), 0.0);
    g.bias.assign(c_out, 0.0);
    for (std::size_t co = 0; co < c_out; ++co) {
        const double* gc = gy.data() + co * h * w;
        double acc = 0.0;
        for (std::size_t i = 0; i < h * w; ++i) acc += gc[i];
        g.bias[co] = acc;
        for (std::size_t ci = 0; ci < c_in; ++ci) {
            const double* xc = x.data() + ci * h * w;
            double* gxc = g.input.data() + ci * h * w;
            const double* k = kernel.data() + (co * c_in + ci) * 9;
            double* gk = g.weight.data() + (co * c_in + ci) * 9;
            for (std::size_t ky = 0; ky < 3; ++ky) {
                for (std::size_t kx = 0; kx < 3; ++kx) {
                    const double kv = k[ky * 3 + kx];
                    const std::size_t r0 = ky == 0 ? 1 : 0;
                    const std::size_t r1 = ky == 2 ? h - 1 : h;
                    const std::size_t c0 = kx == 0 ? 1 : 0;
                    const std::size_t c1 = kx == 2 ? w - 1 : w;
                    double kacc = 0.0;
                    for (std::size_t r = r0; r < r1; ++r) {
                        const std::size_t srow = (r + ky - 1) * w;
                        const double* up = gc + r * w;
                        for (std::size_t c = c0; c < c1; ++c) {
                            const std::size_t s = srow + c + kx - 1;
                            kacc += up[c] * xc[s];
                            gxc[s] += up[c] * kv;
                        }
                    }
                    gk[ky * 3 + kx] += kacc;
                }
            }
        }
    }
    return g;
}

PoolResult maxpool2x2_forward(std::span<const double> x, std::size_t c, std::size_t h, std::size_t w) {
    expect_size(x.size(), c * h * w, "maxpool input");
    const std::size_t oh = h / 2;
    const std::size_t ow = w / 2;
    PoolResult res;
    res.out.resize(c * oh * ow);
    res.argmax.resize(c * oh * ow);
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t r = 0; r < oh; ++r) {
            for (std::size_t col = 0; col < ow; ++col) {
                std::size_t best = ch * h * w + (2 * r) * w + 2 * col;
                for (std::size_t dy = 0; dy < 2; ++dy) {
                    for (std::size_t dx = 0; dx < 2; ++dx) {
                        const std::size_t idx = ch * h * w + (2 * r + dy) * w + 2 * col + dx;
                        if (x[idx] > x[best]) best = idx;  // first maximum wins ties
                    }
                }
                const std::size_t o = (ch * oh + r) * ow + col;
                res.out[o] = x[best];
                res.argmax[o] = best;
            }
        }
    }
    return res;
}

std::vector<double> maxpool2x2_backward(const PoolResult& cache, std::span<const double> gy,
                                        std::size_t input_size) {
    expect_size(gy.size(), cache.out.size(), "maxpool upstream gradient");
    std::vector<double> g(input_size, 0.0);
    for (std::size_t o = 0; o < gy.size(); ++o) g[cache.argmax[o]] += gy[o];
    return g;
}

SoftmaxCe softmax_cross_entropy(std::span<const double> logits, std::span<const std::size_t> labels,
                                std::size_t classes) {
    if (classes == 0 || labels.empty()) throw std::invalid_argument("cross-entropy needs a non-empty batch");
    expect_size(logits.size(), labels.size() * classes, "cross-entropy logits");
    const std::size_t batch = labels.size();
    SoftmaxCe res;
    res.grad_logits.assign(logits.size(), 0.0);
    const double inv_b = 1.0 / static_cast<double>(batch);
    for (std::size_t b = 0; b < batch; ++b) {
        if (labels[b] >= classes) {
            throw std::invalid_argument("label " + std::to_string(labels[b]) + " out of range for " +
                                        std::to_string(classes) + " classes");
        }
        const double* z = logits.data() + b * classes;
        const double zmax = *std::max_element(z, z + classes);
        double denom = 0.0;
        for (std::size_t c = 0; c < classes; ++c) denom += std::exp(z[c] - zmax);
        const double log_denom = std::log(denom);
        res.loss += (log_denom - (z[labels[b]] - zmax)) * inv_b;
        double* g = res.grad_logits.data() + b * classes;
        for (std::size_t c = 0; c < classes; ++c) {
            const double p = std::exp(z[c] - zmax - log_denom);
            g[c] = (p - (c == labels[b] ? 1.0 : 0.0)) * inv_b;
        }
    }
    return res;
}

}  // namespace nn
}  // namespace hqfnn
