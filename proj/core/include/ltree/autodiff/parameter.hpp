#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "ltree/autodiff/tensor.hpp"

namespace ltree
{

// A named trainable tensor. Its address is stable for the lifetime of the
// owning ParameterStore, so tapes may refer to it by pointer.
template <typename S>
struct Parameter
{
    std::string name;
    Tensor<S> value;
    std::size_t index = 0;
};

template <typename S>
class ParameterStore
{
public:
    ParameterStore() = default;
    ParameterStore(const ParameterStore&) = delete;
    ParameterStore& operator=(const ParameterStore&) = delete;
    ParameterStore(ParameterStore&&) noexcept = default;
    ParameterStore& operator=(ParameterStore&&) noexcept = default;

    // Throws InvalidArgument when the name is already taken.
    Parameter<S>& add(std::string name, Tensor<S> value);

    Parameter<S>& get(const std::string& name);
    const Parameter<S>& get(const std::string& name) const;
    Parameter<S>* find(const std::string& name);

    std::size_t size() const { return _params.size(); }
    Parameter<S>& operator[](std::size_t i) { return *_params[i]; }
    const Parameter<S>& operator[](std::size_t i) const { return *_params[i]; }

    std::size_t total_elements() const;

    // Copies values from another store with identical names and shapes.
    void copy_values_from(const ParameterStore& other);

    template <typename T>
    void copy_values_cast_from(const ParameterStore<T>& other)
    {
        for (std::size_t i = 0; i < other.size(); ++i)
            get(other[i].name).value = other[i].value.template cast<S>();
    }

private:
    std::vector<std::unique_ptr<Parameter<S>>> _params;
};

extern template class ParameterStore<float>;
extern template class ParameterStore<double>;

}
