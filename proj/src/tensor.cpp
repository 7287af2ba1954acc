#include "guided/tensor.hpp"

#include <cmath>
#include <sstream>

#include "guided/errors.hpp"

namespace guided {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_product(shape_) != data_.size()) {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_str(shape_));
    }
}

Tensor Tensor::from_values(std::vector<std::size_t> shape, std::vector<double> data) {
    Tensor t(std::move(shape), std::move(data));
    if (!t.all_finite()) {
        throw DataError("tensor input contains NaN or Inf");
    }
    return t;
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    std::size_t r = rows.size();
    std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw ShapeError("ragged matrix initializer");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
}

std::size_t Tensor::rows() const {
    if (ndim() != 2) throw ShapeError("expected 2-D tensor, got " + shape_str(shape_));
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (ndim() != 2) throw ShapeError("expected 2-D tensor, got " + shape_str(shape_));
    return shape_[1];
}

double Tensor::scalar_value() const {
    if (data_.size() != 1) {
        throw UsageError("expected scalar tensor, got " + shape_str(shape_));
    }
    return data_[0];
}

double& Tensor::at(std::size_t r, std::size_t c) {
    return data_[r * cols() + c];
}

double Tensor::at(std::size_t r, std::size_t c) const {
    return data_[r * cols() + c];
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::fill(double v) {
    for (double& x : data_) x = v;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

} // namespace guided
