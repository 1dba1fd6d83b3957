#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ltree/error.hpp"

namespace ltree
{

enum class DType
{
    f32,
    f64
};

template <typename S>
constexpr DType dtype_of();
template <>
constexpr DType dtype_of<float>() { return DType::f32; }
template <>
constexpr DType dtype_of<double>() { return DType::f64; }

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

template <typename S>
using RowMatrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MatrixMap = Eigen::Map<RowMatrix<S>>;
template <typename S>
using ConstMatrixMap = Eigen::Map<const RowMatrix<S>>;

// Dense row-major tensor of rank 0, 1 or 2.
//
// Rank-1 tensors behave as a single row (1 x n) in matrix contexts and
// scalars (rank 0) as 1 x 1.
template <typename S>
class Tensor
{
public:
    using value_type = S;

    Tensor() = default;
    explicit Tensor(Shape shape, S fill = S{0});
    Tensor(Shape shape, std::vector<S> data);

    static Tensor scalar(S value);
    static Tensor vector(std::initializer_list<S> values);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<S> values);
    static Tensor from(const RowMatrix<S>& m);

    const Shape& shape() const { return _shape; }
    std::size_t rank() const { return _shape.size(); }
    std::size_t size() const { return _data.size(); }
    bool empty() const { return _data.empty(); }

    std::size_t rows() const;
    std::size_t cols() const;

    std::span<S> data() { return _data; }
    std::span<const S> data() const { return _data; }
    S* raw() { return _data.data(); }
    const S* raw() const { return _data.data(); }

    S& operator[](std::size_t i) { return _data[i]; }
    const S& operator[](std::size_t i) const { return _data[i]; }
    S& operator()(std::size_t r, std::size_t c) { return _data[r * cols() + c]; }
    const S& operator()(std::size_t r, std::size_t c) const { return _data[r * cols() + c]; }

    // Value of a one-element tensor.
    S item() const;

    MatrixMap<S> mat() { return MatrixMap<S>(_data.data(), rows(), cols()); }
    ConstMatrixMap<S> mat() const { return ConstMatrixMap<S>(_data.data(), rows(), cols()); }

    void fill(S value);
    bool all_finite() const;
    Tensor reshaped(Shape shape) const;

    template <typename T>
    Tensor<T> cast() const
    {
        std::vector<T> out(_data.begin(), _data.end());
        return Tensor<T>(_shape, std::move(out));
    }

    bool operator==(const Tensor& other) const = default;

private:
    // Aligned storage keeps Eigen's vectorized kernels on the same code path
    // for every allocation, so results are bit-reproducible.
    Shape _shape;
    std::vector<S, Eigen::aligned_allocator<S>> _data;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

}
