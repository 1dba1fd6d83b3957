#pragma once

#include <cstddef>
#include <string>

#include "ltree/nn/layers.hpp"

namespace ltree
{

// Learned bias indexed by the signed distance h - m. Distances in
// [-radius, radius] have their own bucket; longer ones share one overflow
// bucket per side.
struct DistanceBuckets
{
    std::size_t radius = 10;

    std::size_t count() const { return 2 * radius + 3; }
    std::size_t bucket(std::ptrdiff_t distance) const;
};

struct ScorerSpec
{
    nn::MlpSpec head;
    nn::MlpSpec modifier;
    bool distance_bias = true;
    DistanceBuckets buckets;
};

// Deep dotted attention over contextual embeddings (one row per token,
// row 0 = root):
//   W[h][m] = head(e_h) . mod(e_m) + bias[h - m]
// Projections are computed once per token and the dot products as one
// matrix product.
template <typename S>
class ArcScorer
{
public:
    ArcScorer() = default;
    ArcScorer(ParameterStore<S>& store, const std::string& prefix, ScorerSpec spec, Rng& rng);

    const ScorerSpec& spec() const { return _spec; }

    // (n+1) x d embeddings -> (n+1) x (n+1) scores.
    Var<S> forward(Tape<S>& tape, Var<S> embeddings) const;

private:
    ScorerSpec _spec;
    nn::Mlp<S> _head;
    nn::Mlp<S> _modifier;
    Parameter<S>* _bias = nullptr;
};

extern template class ArcScorer<float>;
extern template class ArcScorer<double>;

}
