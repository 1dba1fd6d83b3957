#include "ltree/nn/optim.hpp"

#include <cmath>

namespace ltree::nn
{

template <typename S>
GradientBuffer<S>::GradientBuffer(const ParameterStore<S>& store)
{
    _grads.reserve(store.size());
    for (std::size_t i = 0; i < store.size(); ++i)
        _grads.emplace_back(store[i].value.shape());
}

template <typename S>
void GradientBuffer<S>::zero()
{
    for (auto& g : _grads)
        g.fill(S{0});
}

template <typename S>
void GradientBuffer<S>::accumulate(const Gradients<S>& grads, S weight)
{
    for (const auto& e : grads.entries())
    {
        Tensor<S>& dst = _grads.at(e.parameter->index);
        if (dst.shape() != e.gradient.shape())
            throw ShapeError("gradient buffer: shape mismatch for " + e.parameter->name);
        dst.mat() += weight * e.gradient.mat();
    }
}

template <typename S>
void GradientBuffer<S>::accumulate(const GradientBuffer& other, S weight)
{
    for (std::size_t i = 0; i < _grads.size(); ++i)
        _grads[i].mat() += weight * other._grads[i].mat();
}

template <typename S>
void GradientBuffer<S>::scale(S factor)
{
    for (auto& g : _grads)
        g.mat() *= factor;
}

template <typename S>
double GradientBuffer<S>::global_norm() const
{
    double sq = 0.0;
    for (const auto& g : _grads)
        for (S v : g.data())
            sq += static_cast<double>(v) * static_cast<double>(v);
    return std::sqrt(sq);
}

template <typename S>
AdamState<S>::AdamState(const ParameterStore<S>& store, AdamConfig cfg) :
    config(cfg)
{
    for (std::size_t i = 0; i < store.size(); ++i)
    {
        first_moment.emplace_back(store[i].value.shape());
        second_moment.emplace_back(store[i].value.shape());
    }
}

template <typename S>
void adam_step(AdamState<S>& state, const GradientBuffer<S>& grads, ParameterStore<S>& params)
{
    if (grads.size() != params.size() || state.first_moment.size() != params.size())
        throw InvalidArgument("adam_step: gradient/parameter/state count mismatch");
    for (std::size_t i = 0; i < grads.size(); ++i)
        if (!grads[i].all_finite())
            throw NumericError("adam_step: non-finite gradient for " + params[i].name);

    ++state.step;
    const auto& c = state.config;
    const double t = static_cast<double>(state.step);
    const S b1 = static_cast<S>(c.beta1), b2 = static_cast<S>(c.beta2);
    const S correction1 = static_cast<S>(1.0 - std::pow(c.beta1, t));
    const S correction2 = static_cast<S>(1.0 - std::pow(c.beta2, t));
    const S lr = static_cast<S>(c.learning_rate);
    const S eps = static_cast<S>(c.epsilon);

    for (std::size_t i = 0; i < grads.size(); ++i)
    {
        auto& m = state.first_moment[i];
        auto& v = state.second_moment[i];
        auto& p = params[i].value;
        const auto& g = grads[i];
        for (std::size_t k = 0; k < p.size(); ++k)
        {
            m[k] = b1 * m[k] + (S{1} - b1) * g[k];
            v[k] = b2 * v[k] + (S{1} - b2) * g[k] * g[k];
            const S mhat = m[k] / correction1;
            const S vhat = v[k] / correction2;
            p[k] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

template <typename S>
double clip_gradient_norm(GradientBuffer<S>& grads, double max_norm)
{
    if (!(max_norm > 0.0))
        throw InvalidArgument("clip_gradient_norm: max norm must be positive");
    const double norm = grads.global_norm();
    if (norm > max_norm)
        grads.scale(static_cast<S>(max_norm / norm));
    return norm;
}

LrSchedule::LrSchedule(double learning_rate, std::size_t patience, double factor) :
    _lr(learning_rate),
    _patience(patience),
    _factor(factor)
{
    if (patience == 0)
        throw InvalidArgument("lr schedule: patience must be positive");
}

LrSchedule::Decision LrSchedule::step(double dev_score)
{
    ++_epoch;
    if (!_best || dev_score > *_best)
    {
        _best = dev_score;
        _best_epoch = _epoch;
        _stale = 0;
        return {_lr, false, true};
    }
    if (++_stale >= _patience)
    {
        _stale = 0;
        _lr *= _factor;
        return {_lr, true, false};
    }
    return {_lr, false, false};
}

template class GradientBuffer<float>;
template class GradientBuffer<double>;
template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step(AdamState<float>&, const GradientBuffer<float>&, ParameterStore<float>&);
template void adam_step(AdamState<double>&, const GradientBuffer<double>&, ParameterStore<double>&);
template double clip_gradient_norm(GradientBuffer<float>&, double);
template double clip_gradient_norm(GradientBuffer<double>&, double);

}
