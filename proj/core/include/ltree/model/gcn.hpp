#pragma once

#include <cstddef>
#include <string>

#include "ltree/nn/layers.hpp"

namespace ltree
{

struct GcnLayerSpec
{
    std::size_t input = 100;
    std::size_t width = 100;
    nn::Activation activation = nn::Activation::relu;
    // Concatenate the layer input to its output.
    bool dense = false;

    std::size_t output() const { return dense ? input + width : width; }
};

// Direction-sensitive graph convolution over a (soft) adjacency T with
// T[h][m] the weight of arc h -> m. In the column-per-token form
//   E' = act(f(E) + g(E) T + h(E) T^T)
// each token mixes its own vector (f), its heads' (g) and its modifiers'
// (h). Here tokens are rows, so the same map reads
//   E' = act(f(E) + T^T g(E) + T h(E)).
// f, g and h are single affine layers without activation.
template <typename S>
class GcnLayer
{
public:
    GcnLayer() = default;
    GcnLayer(ParameterStore<S>& store, const std::string& prefix, GcnLayerSpec spec, Rng& rng);

    const GcnLayerSpec& spec() const { return _spec; }

    // (n+1) x input embeddings, (n+1) x (n+1) adjacency.
    Var<S> forward(Tape<S>& tape, Var<S> embeddings, Var<S> adjacency) const;

private:
    GcnLayerSpec _spec;
    nn::Mlp<S> _self;
    nn::Mlp<S> _head;
    nn::Mlp<S> _modifier;
};

extern template class GcnLayer<float>;
extern template class GcnLayer<double>;

}
