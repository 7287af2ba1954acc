#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace guided {

/// Dense n-dimensional array of 64-bit floats, row-major.
///
/// The flat data length always equals the product of the extents. Zero
/// extents are allowed (an empty tensor), which keeps degenerate cases like
/// concatenating a zero-width block well defined.
class Tensor {
public:
    Tensor() = default;

    /// Zero-filled tensor of the given shape.
    explicit Tensor(std::vector<std::size_t> shape);

    /// Tensor over existing data; data length must match the shape.
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    /// Construction from external input: additionally rejects NaN/Inf.
    static Tensor from_values(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    /// 2-D convenience: row-major matrix from nested braces.
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t ndim() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }

    /// Extent along dimension i.
    std::size_t extent(std::size_t i) const { return shape_.at(i); }

    /// Rows/cols of a 2-D tensor (ShapeError otherwise).
    std::size_t rows() const;
    std::size_t cols() const;

    bool is_scalar() const { return data_.size() == 1; }
    double scalar_value() const;

    double& at(std::size_t i) { return data_[i]; }
    double at(std::size_t i) const { return data_[i]; }
    double& at(std::size_t r, std::size_t c);
    double at(std::size_t r, std::size_t c) const;

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    void fill(double v);

    bool operator==(const Tensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

/// "m x n" rendering for error messages.
std::string shape_str(const std::vector<std::size_t>& shape);

} // namespace guided
