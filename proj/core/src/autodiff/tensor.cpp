#include "ltree/autodiff/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ltree
{

std::string shape_string(const Shape& shape)
{
    std::ostringstream out;
    out << "[";
    for (std::size_t i = 0; i < shape.size(); ++i)
    {
        if (i > 0)
            out << "x";
        out << shape[i];
    }
    out << "]";
    return out.str();
}

std::size_t shape_size(const Shape& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

template <typename S>
Tensor<S>::Tensor(Shape shape, S fill) :
    _shape(std::move(shape)),
    _data(shape_size(_shape), fill)
{
    if (_shape.size() > 2)
        throw ShapeError("tensor rank > 2 is not supported: " + shape_string(_shape));
}

template <typename S>
Tensor<S>::Tensor(Shape shape, std::vector<S> data) :
    _shape(std::move(shape)),
    _data(data.begin(), data.end())
{
    if (_shape.size() > 2)
        throw ShapeError("tensor rank > 2 is not supported: " + shape_string(_shape));
    if (shape_size(_shape) != _data.size())
        throw ShapeError(
            "tensor data length " + std::to_string(_data.size()) + " does not match shape " + shape_string(_shape)
        );
}

template <typename S>
Tensor<S> Tensor<S>::scalar(S value)
{
    return Tensor(Shape{}, std::vector<S>{value});
}

template <typename S>
Tensor<S> Tensor<S>::vector(std::initializer_list<S> values)
{
    return Tensor(Shape{values.size()}, std::vector<S>(values));
}

template <typename S>
Tensor<S> Tensor<S>::matrix(std::size_t rows, std::size_t cols, std::initializer_list<S> values)
{
    return Tensor(Shape{rows, cols}, std::vector<S>(values));
}

template <typename S>
Tensor<S> Tensor<S>::from(const RowMatrix<S>& m)
{
    Tensor t(Shape{static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
    t.mat() = m;
    return t;
}

template <typename S>
std::size_t Tensor<S>::rows() const
{
    return _shape.size() == 2 ? _shape[0] : 1;
}

template <typename S>
std::size_t Tensor<S>::cols() const
{
    if (_shape.size() == 2)
        return _shape[1];
    if (_shape.size() == 1)
        return _shape[0];
    return 1;
}

template <typename S>
S Tensor<S>::item() const
{
    if (_data.size() != 1)
        throw ShapeError("item() on tensor of shape " + shape_string(_shape));
    return _data[0];
}

template <typename S>
void Tensor<S>::fill(S value)
{
    std::fill(_data.begin(), _data.end(), value);
}

template <typename S>
bool Tensor<S>::all_finite() const
{
    // x * 0 is 0 for finite x and NaN for inf/NaN; Eigen vectorizes the sum.
    const Eigen::Map<const Eigen::Array<S, Eigen::Dynamic, 1>> a(_data.data(), static_cast<Eigen::Index>(_data.size()));
    return (a * S{0}).sum() == S{0};
}

template <typename S>
Tensor<S> Tensor<S>::reshaped(Shape shape) const
{
    if (shape_size(shape) != _data.size())
        throw ShapeError("cannot reshape " + shape_string(_shape) + " to " + shape_string(shape));
    if (shape.size() > 2)
        throw ShapeError("tensor rank > 2 is not supported: " + shape_string(shape));
    Tensor out = *this;
    out._shape = std::move(shape);
    return out;
}

template class Tensor<float>;
template class Tensor<double>;

}
