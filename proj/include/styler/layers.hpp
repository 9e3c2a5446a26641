#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "styler/rng.hpp"
#include "styler/tensor.hpp"

namespace styler {

class TensorArchive;

/// A trainable (or frozen) parameter with its gradient accumulator.
struct Param {
    std::string name;
    std::vector<std::int64_t> shape;
    FloatBuffer value;
    FloatBuffer grad;

    Param() = default;
    Param(std::string n, std::vector<std::int64_t> s);

    std::size_t size() const { return value.size(); }
    void zero_grad();
    /// Normal(0, gain/fan_in) draws.
    void init_normal(Rng& rng, double variance);
};

void store(const Param& p, TensorArchive& archive);
/// Loads values by name, checking the shape; throws LoadError naming the tensor.
void load(Param& p, const TensorArchive& archive);

/// 3×3 convolution with reflect padding of 1, stride 1 or 2. Weight layout
/// (cout, cin, 3, 3).
struct Conv3x3 {
    int in_channels = 0;
    int out_channels = 0;
    int stride = 1;
    Param weight;
    Param bias;

    Conv3x3() = default;
    Conv3x3(const std::string& name, int cin, int cout, int stride = 1);

    /// He initialization: weights ~ N(0, 2/fan_in), zero bias.
    void init_he(Rng& rng);

    Tensor forward(const Tensor& x) const;

    /// Gradient w.r.t. the input of the convolution (bias-free path).
    Tensor input_grad(const Tensor& x, const Tensor& grad_out) const;

    /// Accumulates weight/bias gradients into `weight.grad`/`bias.grad` and
    /// returns the input gradient when `want_input_grad` is set (otherwise
    /// an empty tensor).
    Tensor backward(const Tensor& x, const Tensor& grad_out, bool want_input_grad);
};

/// Output spatial extent of a 3×3 pad-1 convolution.
inline int conv_out_size(int n, int stride) { return (n - 1) / stride + 1; }

/// Fully-connected layer, weight layout (out, in).
struct Dense {
    int in_features = 0;
    int out_features = 0;
    Param weight;
    Param bias;

    Dense() = default;
    Dense(const std::string& name, int in, int out);

    void init_he(Rng& rng);
    std::vector<float> forward(const std::vector<float>& x) const;
    /// Accumulates parameter gradients and returns the input gradient.
    std::vector<float> backward(const std::vector<float>& x, const std::vector<float>& grad_out);
};

void relu_inplace(Tensor& t);
/// Zeroes `grad` where `activated` (the ReLU output) is not positive.
void relu_backward_inplace(Tensor& grad, const Tensor& activated);

Tensor max_pool2(const Tensor& x);
Tensor max_pool2_backward(const Tensor& x, const Tensor& grad_out);

Tensor upsample2(const Tensor& x);
Tensor upsample2_backward(const Tensor& grad_out);

}  // namespace styler
