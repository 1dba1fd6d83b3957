#pragma once

#include <cstddef>

#include "ltree/autodiff/tape.hpp"
#include "ltree/parser/parse.hpp"
#include "ltree/sampler/rng.hpp"

namespace ltree
{

// -log(-log(u)) with u clamped to [1e-12, 1 - 1e-12].
double gumbel_from_uniform(double u);

// Matrix of i.i.d. standard Gumbel draws. Every entry is drawn (diagonal and
// column 0 included) so the stream position does not depend on which
// entries a consumer reads.
template <typename S>
Tensor<S> gumbel_sample(const Shape& shape, Rng& rng);

enum class Noise
{
    gumbel,
    zero
};

// Perturb-and-MAP: W~ = W + G with fresh Gumbel noise G (a constant on the
// tape, so gradients reach W only through W~), then parse(W~).
template <typename S>
Var<S> perturb_and_parse(Var<S> scores, Rng& rng, ParseMode mode, S temperature = S{1}, Noise noise = Noise::gumbel);

// Unconstrained head selection, independently per modifier column m >= 1
// over heads h != m:
//   discrete          one-hot argmax of W~[., m] (Gumbel-max sampling)
//   relaxed           softmax(W~[., m] / temperature)
//   straight_through  discrete value, softmax Jacobian
template <typename S>
Var<S> latent_head_sample(Var<S> scores, Rng& rng, ParseMode mode, S temperature = S{1}, Noise noise = Noise::gumbel);

// Arcs 0 -> 1 -> 2 -> ... -> n.
template <typename S>
Tensor<S> left_chain(std::size_t n);

extern template Tensor<float> gumbel_sample<float>(const Shape&, Rng&);
extern template Tensor<double> gumbel_sample<double>(const Shape&, Rng&);

}
