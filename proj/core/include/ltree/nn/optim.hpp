#pragma once

#include <cstdint>
#include <cstddef>
#include <optional>
#include <vector>

#include "ltree/autodiff/parameter.hpp"
#include "ltree/autodiff/tape.hpp"

namespace ltree::nn
{

// Dense per-parameter gradient accumulator, indexed like the ParameterStore.
template <typename S>
class GradientBuffer
{
public:
    GradientBuffer() = default;
    explicit GradientBuffer(const ParameterStore<S>& store);

    void zero();
    void accumulate(const Gradients<S>& grads, S weight = S{1});
    void accumulate(const GradientBuffer& other, S weight = S{1});
    void scale(S factor);

    std::size_t size() const { return _grads.size(); }
    Tensor<S>& operator[](std::size_t i) { return _grads[i]; }
    const Tensor<S>& operator[](std::size_t i) const { return _grads[i]; }

    double global_norm() const;

private:
    std::vector<Tensor<S>> _grads;
};

struct AdamConfig
{
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

template <typename S>
struct AdamState
{
    AdamConfig config;
    std::vector<Tensor<S>> first_moment;
    std::vector<Tensor<S>> second_moment;
    std::uint64_t step = 0;

    AdamState() = default;
    AdamState(const ParameterStore<S>& store, AdamConfig cfg);
};

// One bias-corrected Adam update:
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2,
//   p <- p - lr * m_hat / (sqrt(v_hat) + eps).
// Throws NumericError on a non-finite gradient.
template <typename S>
void adam_step(AdamState<S>& state, const GradientBuffer<S>& grads, ParameterStore<S>& params);

// Rescales all gradients by max_norm / norm when the global L2 norm exceeds
// max_norm. Returns the norm measured before clipping.
template <typename S>
double clip_gradient_norm(GradientBuffer<S>& grads, double max_norm = 5.0);

// Multiplicative decay when the dev score has not improved for `patience`
// consecutive epochs; each decay also asks the caller to reload the best
// model seen so far, and restarts the window.
class LrSchedule
{
public:
    struct Decision
    {
        double learning_rate;
        bool reload_best;
        bool improved;
    };

    explicit LrSchedule(double learning_rate, std::size_t patience = 5, double factor = 0.9);

    Decision step(double dev_score);

    double learning_rate() const { return _lr; }
    std::optional<double> best_score() const { return _best; }
    std::size_t best_epoch() const { return _best_epoch; }
    std::size_t epochs_seen() const { return _epoch; }

private:
    double _lr;
    std::size_t _patience;
    double _factor;
    std::optional<double> _best;
    std::size_t _best_epoch = 0;
    std::size_t _epoch = 0;
    std::size_t _stale = 0;
};

extern template class GradientBuffer<float>;
extern template class GradientBuffer<double>;
extern template struct AdamState<float>;
extern template struct AdamState<double>;

}
