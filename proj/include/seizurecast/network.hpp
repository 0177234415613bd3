#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "seizurecast/ops.hpp"
#include "seizurecast/rng.hpp"
#include "seizurecast/tensor.hpp"

namespace seizurecast {

struct KernelSize {
    Eigen::Index h = 1;
    Eigen::Index w = 1;

    bool operator==(const KernelSize&) const = default;
};

// Five conv+relu+maxpool blocks, then dropout and three dense layers
// (sigmoid, sigmoid, softmax). The first three blocks use 1xN kernels and
// pools, so each electrode row is filtered independently; blocks four and
// five mix electrodes with 3x3 kernels and 2x2 pools. Class 0 is interictal,
// class 1 is preictal.
struct NetworkConfig {
    Eigen::Index input_channels = 23;
    Eigen::Index input_width = 5120;
    std::array<KernelSize, 5> conv_kernels{{{1, 20}, {1, 20}, {1, 10}, {3, 3}, {3, 3}}};
    std::array<KernelSize, 5> pool_kernels{{{1, 10}, {1, 10}, {1, 5}, {2, 2}, {2, 2}}};
    std::array<Eigen::Index, 5> conv_channels{16, 32, 64, 128, 256};
    std::array<Eigen::Index, 2> fc_sizes{256, 64};
    double dropout_rate = 0.5;
    Eigen::Index num_classes = 2;

    // The full-size architecture for a given electrode count and window width.
    static NetworkConfig standard(Eigen::Index channels, Eigen::Index width);

    // Desk-scale variant for fast experiments: identical kernel scheme and
    // channel ladder, pools shrunk to (1,5),(1,5),(1,2),(2,2),(2,2) so short
    // windows (e.g. 4x500) survive all five blocks.
    static NetworkConfig reduced(Eigen::Index channels, Eigen::Index width);

    void validate() const;

    bool operator==(const NetworkConfig&) const = default;
};

struct LayerShape {
    std::string layer;
    Eigen::Index channels = 0;
    Eigen::Index height = 0;
    Eigen::Index width = 0;

    Eigen::Index numel() const { return channels * height * width; }
};

struct ShapeTable {
    std::vector<LayerShape> rows; // input, then conv/pool per block
    Eigen::Index flatten_length = 0;
};

// Walks the configured blocks symbolically and returns every intermediate
// shape. Throws ShapeError naming the offending layer if any extent collapses
// to zero.
ShapeTable propagate_shapes(const NetworkConfig& config);

// Number of trainable scalars the configuration implies.
Eigen::Index parameter_count(const NetworkConfig& config);

struct ConvBlock {
    ConvSpec conv;
    PoolSpec pool;
    Tensor weights;
    Tensor bias;
};

struct DenseLayer {
    Tensor weights;
    Tensor bias;
};

struct Network {
    NetworkConfig config;
    ShapeTable shapes;
    std::array<ConvBlock, 5> blocks;
    DenseLayer fc1;
    DenseLayer fc2;
    DenseLayer out;
};

struct ParameterRef {
    std::string name;
    Tensor* tensor;
};

struct ConstParameterRef {
    std::string name;
    const Tensor* tensor;
};

// All trainable tensors in a fixed canonical order:
// conv1..conv5 then fc1, fc2, out; weights before bias.
std::vector<ParameterRef> parameters(Network& net);
std::vector<ConstParameterRef> parameters(const Network& net);

// Glorot-uniform weights (bound sqrt(6 / (fan_in + fan_out))), zero biases.
// Draw order is fixed: parameters in canonical order, elements in row-major
// order, so a seed pins every weight.
Network build_network(const NetworkConfig& config, Rng& rng);

// Everything the backward pass needs: pre-activation and activation of each
// block, pooling contexts, the dropout mask, and the dense-layer activations.
struct ForwardTrace {
    Tensor input;
    std::array<Tensor, 5> conv_out;
    std::array<Tensor, 5> relu_out;
    std::array<PoolContext, 5> pool_ctx;
    std::array<Tensor, 5> pool_out;
    Array dropout_mask;
    Tensor fc_input; // flattened last pool output, after dropout
    Tensor fc1_out;
    Tensor fc2_out;
    Tensor logits;
};

// The input is one window, shape (channels, width) or (1, channels, width).
// In training mode dropout is live and needs an Rng.
ForwardTrace forward_trace(const Network& net, const Tensor& input, bool training = false,
                           Rng* dropout_rng = nullptr);

// Class probabilities (softmax over the trace logits).
Tensor forward(const Network& net, const Tensor& input, bool training = false,
               Rng* dropout_rng = nullptr);

double preictal_probability(const Network& net, const Tensor& input);

// Accumulates `scale` times the loss gradient of one traced sample into the
// parameters' grad slots (allocating them as needed) and returns the sample's
// cross-entropy loss.
double backward(Network& net, const ForwardTrace& trace, int label, double scale = 1.0);

void zero_gradients(Network& net);

// Self-describing container: a magic line, one JSON header line (format
// version, config, tensor directory), then the raw parameter payload as
// little-endian 64-bit floats in canonical order.
void save_network(const Network& net, const std::filesystem::path& path);
Network load_network(const std::filesystem::path& path);

} // namespace seizurecast
