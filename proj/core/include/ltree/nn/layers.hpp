#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ltree/autodiff/ops.hpp"
#include "ltree/autodiff/parameter.hpp"
#include "ltree/sampler/rng.hpp"

namespace ltree::nn
{

enum class Activation
{
    relu,
    none
};

struct MlpLayerSpec
{
    std::size_t width = 0;
    Activation activation = Activation::relu;
    bool bias = true;
};

struct MlpSpec
{
    std::size_t input = 0;
    std::vector<MlpLayerSpec> layers;

    std::size_t output() const { return layers.empty() ? input : layers.back().width; }
};

// Glorot/Xavier uniform matrix: U(-a, a) with a = sqrt(6 / (rows + cols)).
template <typename S>
Tensor<S> glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng);

// Stack of affine maps (x W + b) with optional ReLU. Inputs are row-per-token
// matrices (tokens x input).
template <typename S>
class Mlp
{
public:
    Mlp() = default;
    Mlp(ParameterStore<S>& store, const std::string& prefix, MlpSpec spec, Rng& rng);

    const MlpSpec& spec() const { return _spec; }

    Var<S> forward(Tape<S>& tape, Var<S> input) const;

private:
    MlpSpec _spec;
    std::vector<Parameter<S>*> _weights;
    std::vector<Parameter<S>*> _biases;
};

// Standard four-gate LSTM (input, forget, cell, output gates in that column
// order) running over the rows of a (steps x input) matrix from zero initial
// state. The whole sequence is one fused tape node with a hand-written
// backpropagation-through-time rule.
template <typename S>
class Lstm
{
public:
    Lstm() = default;
    Lstm(ParameterStore<S>& store, const std::string& prefix, std::size_t input, std::size_t hidden, Rng& rng);

    std::size_t hidden() const { return _hidden; }

    // Returns (steps x hidden); when `reverse` is set the recurrence runs from
    // the last row to the first and output row t is the state after reading t.
    Var<S> forward(Tape<S>& tape, Var<S> sequence, bool reverse) const;

private:
    std::size_t _input = 0;
    std::size_t _hidden = 0;
    Parameter<S>* _wx = nullptr;
    Parameter<S>* _wh = nullptr;
    Parameter<S>* _b = nullptr;
};

struct BiLstmSpec
{
    std::size_t stacks = 2;
    std::size_t hidden = 100;
    std::size_t input = 100;

    std::size_t output() const { return 2 * hidden; }
};

// Each stack runs a left-to-right and a right-to-left LSTM over its input and
// concatenates their outputs; the next stack reads that concatenation.
template <typename S>
class BiLstm
{
public:
    BiLstm() = default;
    BiLstm(ParameterStore<S>& store, const std::string& prefix, BiLstmSpec spec, Rng& rng);

    const BiLstmSpec& spec() const { return _spec; }

    // Throws InvalidArgument on an empty sequence.
    Var<S> forward(Tape<S>& tape, Var<S> sequence) const;

private:
    BiLstmSpec _spec;
    std::vector<Lstm<S>> _forward;
    std::vector<Lstm<S>> _backward;
};

// Inverted dropout on a training tape; identity on an inference tape or for
// rate 0. Throws InvalidArgument unless 0 <= rate < 1.
template <typename S>
Var<S> dropout(Var<S> input, double rate, Rng& rng);

extern template class Mlp<float>;
extern template class Mlp<double>;
extern template class Lstm<float>;
extern template class Lstm<double>;
extern template class BiLstm<float>;
extern template class BiLstm<double>;

}
