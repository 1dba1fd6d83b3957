#include "ltree/autodiff/parameter.hpp"

namespace ltree
{

template <typename S>
Parameter<S>& ParameterStore<S>::add(std::string name, Tensor<S> value)
{
    if (find(name) != nullptr)
        throw InvalidArgument("duplicate parameter name: " + name);
    auto p = std::make_unique<Parameter<S>>();
    p->name = std::move(name);
    p->value = std::move(value);
    p->index = _params.size();
    _params.push_back(std::move(p));
    return *_params.back();
}

template <typename S>
Parameter<S>* ParameterStore<S>::find(const std::string& name)
{
    for (auto& p : _params)
        if (p->name == name)
            return p.get();
    return nullptr;
}

template <typename S>
Parameter<S>& ParameterStore<S>::get(const std::string& name)
{
    if (Parameter<S>* p = find(name))
        return *p;
    throw InvalidArgument("unknown parameter: " + name);
}

template <typename S>
const Parameter<S>& ParameterStore<S>::get(const std::string& name) const
{
    return const_cast<ParameterStore*>(this)->get(name);
}

template <typename S>
std::size_t ParameterStore<S>::total_elements() const
{
    std::size_t total = 0;
    for (const auto& p : _params)
        total += p->value.size();
    return total;
}

template <typename S>
void ParameterStore<S>::copy_values_from(const ParameterStore& other)
{
    if (other.size() != size())
        throw InvalidArgument("parameter store size mismatch");
    for (std::size_t i = 0; i < size(); ++i)
    {
        if (other[i].name != _params[i]->name || other[i].value.shape() != _params[i]->value.shape())
            throw InvalidArgument("parameter mismatch at " + _params[i]->name);
        _params[i]->value = other[i].value;
    }
}

template class ParameterStore<float>;
template class ParameterStore<double>;

}
