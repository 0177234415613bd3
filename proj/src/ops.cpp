#include "seizurecast/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace seizurecast {

namespace {

void require_rank(const Tensor& t, std::size_t r, const char* what) {
    if (t.rank() != r) {
        throw ShapeError(std::string(what) + ": expected rank " + std::to_string(r) +
                         ", got shape " + shape_string(t.shape));
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(what) + ": shape " + shape_string(a.shape) +
                         " does not match " + shape_string(b.shape));
    }
}

// Patch matrix for stride-1 same-padded convolution: column (y*w + x) holds
// the kh*kw window of every input channel centered (with even kernels,
// top/left-biased) on output position (y, x); out-of-range taps are zero.
Eigen::MatrixXd im2col(const Tensor& input, Eigen::Index kh, Eigen::Index kw) {
    const Eigen::Index c_in = input.shape[0];
    const Eigen::Index h = input.shape[1];
    const Eigen::Index w = input.shape[2];
    const Eigen::Index pad_top = (kh - 1) / 2;
    const Eigen::Index pad_left = (kw - 1) / 2;

    Eigen::MatrixXd patches(c_in * kh * kw, h * w);
    const double* in = input.data.data();
    for (Eigen::Index y = 0; y < h; ++y) {
        for (Eigen::Index x = 0; x < w; ++x) {
            double* col = patches.col(y * w + x).data();
            Eigen::Index r = 0;
            for (Eigen::Index c = 0; c < c_in; ++c) {
                for (Eigen::Index i = 0; i < kh; ++i) {
                    const Eigen::Index iy = y + i - pad_top;
                    if (iy < 0 || iy >= h) {
                        for (Eigen::Index j = 0; j < kw; ++j) col[r++] = 0.0;
                        continue;
                    }
                    const double* row = in + (c * h + iy) * w;
                    for (Eigen::Index j = 0; j < kw; ++j) {
                        const Eigen::Index ix = x + j - pad_left;
                        col[r++] = (ix >= 0 && ix < w) ? row[ix] : 0.0;
                    }
                }
            }
        }
    }
    return patches;
}

} // namespace

void ConvSpec::validate() const {
    if (out_channels < 1 || kernel_h < 1 || kernel_w < 1) {
        throw ParamError("conv spec: out_channels and kernel extents must be positive, got " +
                         std::to_string(out_channels) + ", " + std::to_string(kernel_h) + "x" +
                         std::to_string(kernel_w));
    }
}

void PoolSpec::validate() const {
    if (pool_h < 1 || pool_w < 1) {
        throw ParamError("pool spec: extents must be positive, got " + std::to_string(pool_h) +
                         "x" + std::to_string(pool_w));
    }
}

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias,
                      const ConvSpec& spec) {
    spec.validate();
    require_rank(input, 3, "conv2d");
    require_rank(weights, 4, "conv2d");
    require_rank(bias, 1, "conv2d");

    const std::vector<Eigen::Index> expected = {spec.out_channels, input.shape[0],
                                                spec.kernel_h, spec.kernel_w};
    if (weights.shape != expected) {
        throw ShapeError("conv2d: weights are " + shape_string(weights.shape) +
                         " but spec and input require " + shape_string(expected));
    }
    if (bias.shape[0] != spec.out_channels) {
        throw ShapeError("conv2d: bias has " + std::to_string(bias.shape[0]) +
                         " entries for " + std::to_string(spec.out_channels) + " channels");
    }

    const Eigen::Index h = input.shape[1];
    const Eigen::Index w = input.shape[2];
    const Eigen::Index k = input.shape[0] * spec.kernel_h * spec.kernel_w;

    const Eigen::MatrixXd patches = im2col(input, spec.kernel_h, spec.kernel_w);
    const auto w_mat = weights.as_matrix(spec.out_channels, k);
    const Eigen::Map<const Eigen::VectorXd> b(bias.data.data(), spec.out_channels);

    Tensor out({spec.out_channels, h, w});
    auto out_mat = out.as_matrix(spec.out_channels, h * w);
    out_mat.noalias() = w_mat * patches;
    out_mat.colwise() += b;
    return out;
}

ConvGrads conv2d_backward(const Tensor& grad_output, const Tensor& saved_input,
                          const Tensor& weights, bool need_grad_input) {
    if (saved_input.rank() == 0) {
        throw ParamError("conv2d backward: saved input is empty; the forward context is required");
    }
    require_rank(grad_output, 3, "conv2d backward");
    require_rank(saved_input, 3, "conv2d backward");
    require_rank(weights, 4, "conv2d backward");

    const Eigen::Index c_out = weights.shape[0];
    const Eigen::Index c_in = weights.shape[1];
    const Eigen::Index kh = weights.shape[2];
    const Eigen::Index kw = weights.shape[3];
    const Eigen::Index h = saved_input.shape[1];
    const Eigen::Index w = saved_input.shape[2];

    if (saved_input.shape[0] != c_in) {
        throw ShapeError("conv2d backward: saved input has " +
                         std::to_string(saved_input.shape[0]) + " channels, weights expect " +
                         std::to_string(c_in));
    }
    const std::vector<Eigen::Index> out_shape = {c_out, h, w};
    if (grad_output.shape != out_shape) {
        throw ShapeError("conv2d backward: grad is " + shape_string(grad_output.shape) +
                         ", forward output was " + shape_string(out_shape));
    }

    const Eigen::Index k = c_in * kh * kw;
    const Eigen::MatrixXd patches = im2col(saved_input, kh, kw);
    const auto g = grad_output.as_matrix(c_out, h * w);
    const auto w_mat = weights.as_matrix(c_out, k);

    ConvGrads grads;
    grads.weights = Tensor(weights.shape);
    grads.weights.as_matrix(c_out, k).noalias() = g * patches.transpose();

    grads.bias = Tensor({c_out});
    Eigen::Map<Eigen::VectorXd>(grads.bias.data.data(), c_out) = g.rowwise().sum();

    if (need_grad_input) {
        const Eigen::MatrixXd grad_patches = w_mat.transpose() * g;
        grads.input = Tensor(saved_input.shape);
        double* gin = grads.input.data.data();
        const Eigen::Index pad_top = (kh - 1) / 2;
        const Eigen::Index pad_left = (kw - 1) / 2;
        for (Eigen::Index y = 0; y < h; ++y) {
            for (Eigen::Index x = 0; x < w; ++x) {
                const double* col = grad_patches.col(y * w + x).data();
                Eigen::Index r = 0;
                for (Eigen::Index c = 0; c < c_in; ++c) {
                    for (Eigen::Index i = 0; i < kh; ++i) {
                        const Eigen::Index iy = y + i - pad_top;
                        if (iy < 0 || iy >= h) {
                            r += kw;
                            continue;
                        }
                        double* row = gin + (c * h + iy) * w;
                        for (Eigen::Index j = 0; j < kw; ++j) {
                            const Eigen::Index ix = x + j - pad_left;
                            if (ix >= 0 && ix < w) row[ix] += col[r];
                            ++r;
                        }
                    }
                }
            }
        }
    }
    return grads;
}

Tensor maxpool_forward(const Tensor& input, const PoolSpec& spec, PoolContext* ctx) {
    spec.validate();
    require_rank(input, 3, "maxpool");

    const Eigen::Index c_in = input.shape[0];
    const Eigen::Index h = input.shape[1];
    const Eigen::Index w = input.shape[2];
    const Eigen::Index oh = h / spec.pool_h;
    const Eigen::Index ow = w / spec.pool_w;
    if (oh < 1 || ow < 1) {
        throw ShapeError("maxpool: pool " + std::to_string(spec.pool_h) + "x" +
                         std::to_string(spec.pool_w) + " does not fit input " +
                         shape_string(input.shape));
    }

    Tensor out({c_in, oh, ow});
    std::vector<Eigen::Index> argmax(static_cast<std::size_t>(c_in * oh * ow));
    const double* in = input.data.data();
    Eigen::Index o = 0;
    for (Eigen::Index c = 0; c < c_in; ++c) {
        for (Eigen::Index y = 0; y < oh; ++y) {
            for (Eigen::Index x = 0; x < ow; ++x) {
                double best = -std::numeric_limits<double>::infinity();
                Eigen::Index best_idx = -1;
                for (Eigen::Index i = 0; i < spec.pool_h; ++i) {
                    const Eigen::Index base = (c * h + y * spec.pool_h + i) * w + x * spec.pool_w;
                    for (Eigen::Index j = 0; j < spec.pool_w; ++j) {
                        if (in[base + j] > best) {
                            best = in[base + j];
                            best_idx = base + j;
                        }
                    }
                }
                out.data[o] = best;
                argmax[static_cast<std::size_t>(o)] = best_idx;
                ++o;
            }
        }
    }
    if (ctx) {
        ctx->input_shape = input.shape;
        ctx->argmax = std::move(argmax);
    }
    return out;
}

Tensor maxpool_backward(const Tensor& grad_output, const PoolContext& ctx) {
    if (ctx.input_shape.empty()) {
        throw ParamError("maxpool backward: empty context; the forward context is required");
    }
    if (grad_output.size() != static_cast<Eigen::Index>(ctx.argmax.size())) {
        throw ShapeError("maxpool backward: grad has " + std::to_string(grad_output.size()) +
                         " elements, context recorded " + std::to_string(ctx.argmax.size()));
    }
    Tensor grad_input(ctx.input_shape);
    for (Eigen::Index o = 0; o < grad_output.size(); ++o) {
        grad_input.data[ctx.argmax[static_cast<std::size_t>(o)]] += grad_output.data[o];
    }
    return grad_input;
}

Tensor relu(const Tensor& input) {
    return {input.shape, input.data.max(0.0)};
}

Tensor relu_backward(const Tensor& grad_output, const Tensor& saved_input) {
    require_same_shape(grad_output, saved_input, "relu backward");
    return {grad_output.shape, (saved_input.data > 0.0).select(grad_output.data, 0.0)};
}

Tensor sigmoid(const Tensor& input) {
    Array out = input.data.unaryExpr([](double v) {
        if (v >= 0.0) {
            return 1.0 / (1.0 + std::exp(-v));
        }
        const double e = std::exp(v);
        return e / (1.0 + e);
    });
    return {input.shape, std::move(out)};
}

Tensor sigmoid_backward(const Tensor& grad_output, const Tensor& saved_output) {
    require_same_shape(grad_output, saved_output, "sigmoid backward");
    return {grad_output.shape,
            grad_output.data * saved_output.data * (1.0 - saved_output.data)};
}

Tensor softmax(const Tensor& logits) {
    require_rank(logits, 1, "softmax");
    const double m = logits.data.maxCoeff();
    Array e = (logits.data - m).exp();
    return {logits.shape, e / e.sum()};
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    require_rank(input, 1, "dense");
    require_rank(weights, 2, "dense");
    require_rank(bias, 1, "dense");
    const Eigen::Index m = weights.shape[0];
    const Eigen::Index n = weights.shape[1];
    if (input.shape[0] != n) {
        throw ShapeError("dense: input has " + std::to_string(input.shape[0]) +
                         " features, weights expect " + std::to_string(n));
    }
    if (bias.shape[0] != m) {
        throw ShapeError("dense: bias has " + std::to_string(bias.shape[0]) + " entries for " +
                         std::to_string(m) + " outputs");
    }
    Tensor out({m});
    Eigen::Map<Eigen::VectorXd>(out.data.data(), m).noalias() =
        weights.as_matrix(m, n) * Eigen::Map<const Eigen::VectorXd>(input.data.data(), n) +
        Eigen::Map<const Eigen::VectorXd>(bias.data.data(), m);
    return out;
}

DenseGrads dense_backward(const Tensor& grad_output, const Tensor& saved_input,
                          const Tensor& weights) {
    if (saved_input.rank() == 0) {
        throw ParamError("dense backward: saved input is empty; the forward context is required");
    }
    require_rank(grad_output, 1, "dense backward");
    require_rank(saved_input, 1, "dense backward");
    require_rank(weights, 2, "dense backward");
    const Eigen::Index m = weights.shape[0];
    const Eigen::Index n = weights.shape[1];
    if (grad_output.shape[0] != m || saved_input.shape[0] != n) {
        throw ShapeError("dense backward: grad " + shape_string(grad_output.shape) + ", input " +
                         shape_string(saved_input.shape) + " against weights " +
                         shape_string(weights.shape));
    }

    const Eigen::Map<const Eigen::VectorXd> g(grad_output.data.data(), m);
    const Eigen::Map<const Eigen::VectorXd> x(saved_input.data.data(), n);

    DenseGrads grads;
    grads.input = Tensor({n});
    Eigen::Map<Eigen::VectorXd>(grads.input.data.data(), n).noalias() =
        weights.as_matrix(m, n).transpose() * g;
    grads.weights = Tensor({m, n});
    grads.weights.as_matrix(m, n).noalias() = g * x.transpose();
    grads.bias = Tensor({m}, grad_output.data);
    return grads;
}

DropoutResult dropout(const Tensor& input, double rate, bool training, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) {
        throw ParamError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
    }
    DropoutResult result;
    if (!training || rate == 0.0) {
        result.output = input;
        result.mask = Array::Ones(input.size());
        return result;
    }
    const double scale = 1.0 / (1.0 - rate);
    result.mask = Array(input.size());
    for (Eigen::Index i = 0; i < input.size(); ++i) {
        result.mask[i] = rng.uniform() < rate ? 0.0 : scale;
    }
    result.output = Tensor(input.shape, input.data * result.mask);
    return result;
}

Tensor dropout_backward(const Tensor& grad_output, const Array& mask) {
    if (grad_output.size() != mask.size()) {
        throw ShapeError("dropout backward: grad has " + std::to_string(grad_output.size()) +
                         " elements, mask has " + std::to_string(mask.size()));
    }
    return {grad_output.shape, grad_output.data * mask};
}

double cross_entropy_loss(const Tensor& probabilities, int label) {
    require_rank(probabilities, 1, "cross entropy");
    if (label < 0 || label >= probabilities.shape[0]) {
        throw ParamError("cross entropy: label " + std::to_string(label) + " out of range for " +
                         std::to_string(probabilities.shape[0]) + " classes");
    }
    const double p = std::clamp(probabilities.data[label], 1e-12, 1.0 - 1e-12);
    return -std::log(p);
}

SoftmaxLossResult softmax_cross_entropy(const Tensor& logits, int label) {
    require_rank(logits, 1, "softmax cross entropy");
    if (label < 0 || label >= logits.shape[0]) {
        throw ParamError("softmax cross entropy: label " + std::to_string(label) +
                         " out of range for " + std::to_string(logits.shape[0]) + " classes");
    }
    const double m = logits.data.maxCoeff();
    const double lse = m + std::log((logits.data - m).exp().sum());

    SoftmaxLossResult result;
    result.loss = lse - logits.data[label];
    result.probabilities = Tensor(logits.shape, (logits.data - lse).exp());
    result.grad_logits = result.probabilities;
    result.grad_logits.data[label] -= 1.0;
    return result;
}

} // namespace seizurecast
