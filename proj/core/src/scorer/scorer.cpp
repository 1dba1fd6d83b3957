#include "ltree/scorer/scorer.hpp"

#include <vector>

namespace ltree
{

std::size_t DistanceBuckets::bucket(std::ptrdiff_t distance) const
{
    const auto r = static_cast<std::ptrdiff_t>(radius);
    if (distance < -r)
        return 0;
    if (distance > r)
        return count() - 1;
    return static_cast<std::size_t>(distance + r + 1);
}

template <typename S>
ArcScorer<S>::ArcScorer(ParameterStore<S>& store, const std::string& prefix, ScorerSpec spec, Rng& rng) :
    _spec(std::move(spec))
{
    if (_spec.head.output() != _spec.modifier.output())
        throw ShapeError(
            "scorer: head projection width " + std::to_string(_spec.head.output()) + " differs from modifier projection width "
            + std::to_string(_spec.modifier.output())
        );
    _head = nn::Mlp<S>(store, prefix + ".head", _spec.head, rng);
    _modifier = nn::Mlp<S>(store, prefix + ".mod", _spec.modifier, rng);
    if (_spec.distance_bias)
        _bias = &store.add(prefix + ".distance_bias", Tensor<S>(Shape{_spec.buckets.count(), 1}));
}

template <typename S>
Var<S> ArcScorer<S>::forward(Tape<S>& tape, Var<S> embeddings) const
{
    const std::size_t tokens = embeddings.value().rows();
    Var<S> heads = _head.forward(tape, embeddings);
    Var<S> mods = _modifier.forward(tape, embeddings);
    Var<S> scores = ad::matmul(heads, ad::transpose(mods));
    if (!_bias)
        return scores;

    std::vector<std::size_t> buckets(tokens * tokens);
    for (std::size_t h = 0; h < tokens; ++h)
        for (std::size_t m = 0; m < tokens; ++m)
            buckets[h * tokens + m] =
                _spec.buckets.bucket(static_cast<std::ptrdiff_t>(h) - static_cast<std::ptrdiff_t>(m));
    Var<S> bias = ad::reshape(ad::gather_rows(tape.parameter(*_bias), buckets), Shape{tokens, tokens});
    return ad::add(scores, bias);
}

template class ArcScorer<float>;
template class ArcScorer<double>;

}
