#pragma once

// Gradient machinery: the two-point parameter-shift rule for rotation angles,
// the central finite-difference oracle, and reverse-mode kernels for the
// classical layers (all tensors are flat row-major double buffers).

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace hqfnn {

/// A trainable tensor with its accumulated gradient.
struct ParamTensor {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> values;
    std::vector<double> grad;

    ParamTensor() = default;
    ParamTensor(std::string name, std::vector<std::size_t> shape);

    std::size_t size() const { return values.size(); }
    void zero_grad();
};

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::size_t num_params = 0;
    double tolerance = 0.0;

    bool passed() const { return max_rel_err <= tolerance; }
};

/// (f(theta + pi/2) - f(theta - pi/2)) / 2. Exact for expectations of Pauli
/// observables after a gate exp(-i theta P / 2).
double param_shift_grad(const std::function<double(double)>& circuit_eval, double theta);

/// Central difference (f(theta + h) - f(theta - h)) / (2h).
double finite_diff_grad(const std::function<double(double)>& f, double theta, double h = 1e-5);

/// |a - b| / max(|a|, |b|, floor). The floor keeps gradients that are zero up
/// to round-off from dominating the report.
double relative_error(double a, double b, double floor = 1e-4);

namespace nn {

struct Grads {
    std::vector<double> input;
    std::vector<double> weight;
    std::vector<double> bias;
};

// Linear: y = x W + b with W stored [in][out].
std::vector<double> linear_forward(std::span<const double> x, std::span<const double> w,
                                   std::span<const double> b, std::size_t in, std::size_t out);
Grads linear_backward(std::span<const double> x, std::span<const double> w, std::span<const double> gy,
                      std::size_t in, std::size_t out);

std::vector<double> relu_forward(std::span<const double> x);
/// Gradient passes where the forward input was strictly positive.
std::vector<double> relu_backward(std::span<const double> x, std::span<const double> gy);

// Conv1d over a [c_in][len] signal, kernel stored [c_in][c_out][3], zero padding 1.
std::vector<double> conv1d_forward(std::span<const double> x, std::span<const double> kernel,
                                   std::span<const double> bias, std::size_t c_in, std::size_t c_out,
                                   std::size_t len);
Grads conv1d_backward(std::span<const double> x, std::span<const double> kernel, std::span<const double> gy,
                      std::size_t c_in, std::size_t c_out, std::size_t len);

// Conv2d over [c_in][h][w], kernel stored [c_out][c_in][3][3], zero padding 1.
std::vector<double> conv2d_forward(std::span<const double> x, std::span<const double> kernel,
                                   std::span<const double> bias, std::size_t c_in, std::size_t c_out,
                                   std::size_t h, std::size_t w);
Grads conv2d_backward(std::span<const double> x, std::span<const double> kernel, std::span<const double> gy,
                      std::size_t c_in, std::size_t c_out, std::size_t h, std::size_t w);

struct PoolResult {
    std::vector<double> out;
    std::vector<std::size_t> argmax;  // flat input index chosen for each output
};

/// 2x2 stride-2 max pooling over [c][h][w]; odd trailing rows/columns are dropped.
PoolResult maxpool2x2_forward(std::span<const double> x, std::size_t c, std::size_t h, std::size_t w);
std::vector<double> maxpool2x2_backward(const PoolResult& cache, std::span<const double> gy,
                                        std::size_t input_size);

struct SoftmaxCe {
    double loss = 0.0;                  // mean over the batch
    std::vector<double> grad_logits;    // d loss / d logits, [batch][classes]
};

/// Mean cross-entropy of softmax(logits) with max-subtraction.
SoftmaxCe softmax_cross_entropy(std::span<const double> logits, std::span<const std::size_t> labels,
                                std::size_t classes);

}  // namespace nn
}  // namespace hqfnn
