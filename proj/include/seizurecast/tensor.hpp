#pragma once

#include <Eigen/Dense>

#include <cassert>
#include <optional>
#include <string>
#include <vector>

#include "seizurecast/errors.hpp"

namespace seizurecast {

using Array = Eigen::ArrayXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::string shape_string(const std::vector<Eigen::Index>& shape);
Eigen::Index shape_numel(const std::vector<Eigen::Index>& shape);

// Dense n-dimensional value in row-major layout, with an optional gradient
// buffer of the same shape. The engine's universal currency: conv activations
// are rank 3 (channels, height, width), conv weights rank 4
// (out_channels, in_channels, kernel_h, kernel_w), dense weights rank 2,
// vectors rank 1.
struct Tensor {
    std::vector<Eigen::Index> shape;
    Array data;
    std::optional<Array> grad;

    Tensor() = default;

    explicit Tensor(std::vector<Eigen::Index> s)
        : shape(std::move(s)), data(Array::Zero(shape_numel(shape))) {}

    Tensor(std::vector<Eigen::Index> s, Array values)
        : shape(std::move(s)), data(std::move(values)) {
        if (data.size() != shape_numel(shape)) {
            throw ShapeError("tensor: " + std::to_string(data.size()) +
                             " values for shape " + shape_string(shape));
        }
    }

    static Tensor zeros(std::vector<Eigen::Index> s) { return Tensor(std::move(s)); }

    Eigen::Index size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }

    Eigen::Index extent(std::size_t axis) const {
        if (axis >= shape.size()) {
            throw ShapeError("tensor: axis " + std::to_string(axis) +
                             " out of range for shape " + shape_string(shape));
        }
        return shape[axis];
    }

    double& operator()(Eigen::Index a) {
        assert(rank() == 1);
        return data[a];
    }
    double operator()(Eigen::Index a) const {
        assert(rank() == 1);
        return data[a];
    }
    double& operator()(Eigen::Index a, Eigen::Index b) {
        assert(rank() == 2);
        return data[a * shape[1] + b];
    }
    double operator()(Eigen::Index a, Eigen::Index b) const {
        assert(rank() == 2);
        return data[a * shape[1] + b];
    }
    double& operator()(Eigen::Index a, Eigen::Index b, Eigen::Index c) {
        assert(rank() == 3);
        return data[(a * shape[1] + b) * shape[2] + c];
    }
    double operator()(Eigen::Index a, Eigen::Index b, Eigen::Index c) const {
        assert(rank() == 3);
        return data[(a * shape[1] + b) * shape[2] + c];
    }
    double& operator()(Eigen::Index a, Eigen::Index b, Eigen::Index c, Eigen::Index d) {
        assert(rank() == 4);
        return data[((a * shape[1] + b) * shape[2] + c) * shape[3] + d];
    }
    double operator()(Eigen::Index a, Eigen::Index b, Eigen::Index c, Eigen::Index d) const {
        assert(rank() == 4);
        return data[((a * shape[1] + b) * shape[2] + c) * shape[3] + d];
    }

    // Matrix view of the flat storage; rows*cols must equal size().
    Eigen::Map<RowMatrix> as_matrix(Eigen::Index rows, Eigen::Index cols);
    Eigen::Map<const RowMatrix> as_matrix(Eigen::Index rows, Eigen::Index cols) const;

    bool has_grad() const { return grad.has_value(); }

    // Allocates a zero gradient if absent; otherwise leaves it in place.
    void ensure_grad() {
        if (!grad) grad.emplace(Array::Zero(data.size()));
    }

    void zero_grad() {
        if (grad) grad->setZero();
    }

    bool all_finite() const { return data.allFinite(); }

    // Same extents, in order.
    bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

} // namespace seizurecast
