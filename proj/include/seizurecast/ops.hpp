#pragma once

#include "seizurecast/rng.hpp"
#include "seizurecast/tensor.hpp"

namespace seizurecast {

// 2D convolution, stride 1, zero-padded so the output keeps the input's
// spatial extents ("same" padding). For odd kernels the padding is symmetric;
// for even kernels the extra row/column of padding goes on the bottom/right,
// i.e. pad_top = (kh-1)/2 and pad_left = (kw-1)/2.
struct ConvSpec {
    Eigen::Index out_channels = 1;
    Eigen::Index kernel_h = 1;
    Eigen::Index kernel_w = 1;

    void validate() const;
};

// Max pooling with stride equal to the pool size; trailing samples that do
// not fill a complete window are dropped (floor semantics).
struct PoolSpec {
    Eigen::Index pool_h = 1;
    Eigen::Index pool_w = 1;

    void validate() const;
};

// input:   (in_channels, h, w)
// weights: (out_channels, in_channels, kernel_h, kernel_w)
// bias:    (out_channels)
// returns  (out_channels, h, w)
Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                      const ConvSpec& spec);

struct ConvGrads {
    Tensor input;
    Tensor weights;
    Tensor bias;
};

// grad_output has the forward output's shape; saved_input is the forward
// input. With need_grad_input false the (expensive) input gradient is skipped
// and ConvGrads::input is left empty, for the first layer of a network.
ConvGrads conv2d_backward(const Tensor& grad_output, const Tensor& saved_input,
                          const Tensor& weights, bool need_grad_input = true);

// Flat input indices of each window's maximum, plus the input shape, saved by
// the forward pass for the backward pass. Ties go to the first occurrence in
// row-major scan order.
struct PoolContext {
    std::vector<Eigen::Index> input_shape;
    std::vector<Eigen::Index> argmax;
};

Tensor maxpool_forward(const Tensor& input, const PoolSpec& spec, PoolContext* ctx = nullptr);
Tensor maxpool_backward(const Tensor& grad_output, const PoolContext& ctx);

Tensor relu(const Tensor& input);
Tensor relu_backward(const Tensor& grad_output, const Tensor& saved_input);

Tensor sigmoid(const Tensor& input);
// saved_output is the forward result: d/dx sigmoid = y * (1 - y).
Tensor sigmoid_backward(const Tensor& grad_output, const Tensor& saved_output);

// Numerically stable softmax of a rank-1 tensor (max subtraction).
Tensor softmax(const Tensor& logits);

// input: (n), weights: (m, n), bias: (m) -> (m)
Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct DenseGrads {
    Tensor input;
    Tensor weights;
    Tensor bias;
};

DenseGrads dense_backward(const Tensor& grad_output, const Tensor& saved_input,
                          const Tensor& weights);

// Inverted dropout: in training mode each element is zeroed with probability
// `rate` and survivors are scaled by 1/(1-rate), so inference needs no
// rescaling. The mask holds the factor applied per element (0 or 1/(1-rate),
// all ones in inference mode) and drives the backward pass.
struct DropoutResult {
    Tensor output;
    Array mask;
};

DropoutResult dropout(const Tensor& input, double rate, bool training, Rng& rng);
Tensor dropout_backward(const Tensor& grad_output, const Array& mask);

// Cross-entropy of a probability vector against an integer label, with the
// picked probability clamped to [1e-12, 1 - 1e-12] before the log.
double cross_entropy_loss(const Tensor& probabilities, int label);

// Softmax and cross-entropy fused on logits: loss via log-sum-exp, gradient
// with respect to the logits in the numerically exact form p - onehot(label).
struct SoftmaxLossResult {
    double loss = 0.0;
    Tensor probabilities;
    Tensor grad_logits;
};

SoftmaxLossResult softmax_cross_entropy(const Tensor& logits, int label);

} // namespace seizurecast
