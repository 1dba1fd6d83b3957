#include "ltree/model/gcn.hpp"

namespace ltree
{

template <typename S>
GcnLayer<S>::GcnLayer(ParameterStore<S>& store, const std::string& prefix, GcnLayerSpec spec, Rng& rng) :
    _spec(spec)
{
    const nn::MlpSpec affine{_spec.input, {{_spec.width, nn::Activation::none, true}}};
    _self = nn::Mlp<S>(store, prefix + ".f", affine, rng);
    _head = nn::Mlp<S>(store, prefix + ".g", affine, rng);
    _modifier = nn::Mlp<S>(store, prefix + ".h", affine, rng);
}

template <typename S>
Var<S> GcnLayer<S>::forward(Tape<S>& tape, Var<S> embeddings, Var<S> adjacency) const
{
    const Tensor<S>& e = embeddings.value();
    const Tensor<S>& t = adjacency.value();
    if (t.rank() != 2 || t.rows() != t.cols() || t.rows() != e.rows())
        throw ShapeError(
            "gcn: adjacency " + shape_string(t.shape()) + " does not match " + std::to_string(e.rows()) + " token embeddings"
        );
    Var<S> self = _self.forward(tape, embeddings);
    Var<S> from_heads = ad::matmul(ad::transpose(adjacency), _head.forward(tape, embeddings));
    Var<S> from_modifiers = ad::matmul(adjacency, _modifier.forward(tape, embeddings));
    Var<S> out = ad::add(ad::add(self, from_heads), from_modifiers);
    if (_spec.activation == nn::Activation::relu)
        out = ad::relu(out);
    if (_spec.dense)
        out = ad::concat_cols(embeddings, out);
    return out;
}

template class GcnLayer<float>;
template class GcnLayer<double>;

}
