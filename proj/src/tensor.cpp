#include "seizurecast/tensor.hpp"

namespace seizurecast {

std::string shape_string(const std::vector<Eigen::Index>& shape) {
    if (shape.empty()) return "scalar";
    std::string out;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += 'x';
        out += std::to_string(shape[i]);
    }
    return out;
}

Eigen::Index shape_numel(const std::vector<Eigen::Index>& shape) {
    Eigen::Index n = 1;
    for (Eigen::Index e : shape) {
        if (e <= 0) throw ShapeError("tensor: non-positive extent in shape " + shape_string(shape));
        n *= e;
    }
    return n;
}

Eigen::Map<RowMatrix> Tensor::as_matrix(Eigen::Index rows, Eigen::Index cols) {
    if (rows * cols != size()) {
        throw ShapeError("tensor: cannot view " + shape_string(shape) + " as " +
                         std::to_string(rows) + "x" + std::to_string(cols));
    }
    return {data.data(), rows, cols};
}

Eigen::Map<const RowMatrix> Tensor::as_matrix(Eigen::Index rows, Eigen::Index cols) const {
    if (rows * cols != size()) {
        throw ShapeError("tensor: cannot view " + shape_string(shape) + " as " +
                         std::to_string(rows) + "x" + std::to_string(cols));
    }
    return {data.data(), rows, cols};
}

} // namespace seizurecast
