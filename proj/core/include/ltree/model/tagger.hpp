#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ltree/model/gcn.hpp"
#include "ltree/nn/layers.hpp"
#include "ltree/parser/parse.hpp"
#include "ltree/sampler/sampler.hpp"
#include "ltree/scorer/scorer.hpp"

namespace ltree
{

enum class StructureMode
{
    latent_tree,
    latent_head,
    left_chain,
    gold
};

StructureMode structure_mode_from_string(std::string_view name);
std::string to_string(StructureMode mode);

// How the tagger obtains the adjacency matrix fed to the GCN.
struct StructureOptions
{
    StructureMode mode = StructureMode::latent_tree;
    Noise noise = Noise::gumbel;
    ParseMode relaxation = ParseMode::relaxed;
    double temperature = 1.0;

    // Discrete MAP structure without noise, as used for evaluation.
    static StructureOptions evaluation(StructureMode mode)
    {
        return {mode, Noise::zero, ParseMode::discrete, 1.0};
    }
};

struct TaggerSpec
{
    std::size_t vocabulary = 17;
    std::size_t embedding = 100;
    nn::BiLstmSpec bilstm{2, 100, 100};
    std::size_t attention_hidden = 100;
    std::size_t attention_layers = 2;
    bool attention_output_relu = true; // false: the last attention layer is affine
    bool distance_bias = true;
    std::size_t distance_radius = 10;
    std::size_t gcn_input = 100;
    std::size_t gcn_width = 100;
    std::size_t gcn_layers = 1;
    bool gcn_dense = false;
    std::size_t tagger_hidden = 100;
    std::size_t labels = 6;
    double dropout = 0.0;
};

// Valency tagger: lexical embeddings -> BiLSTM -> dotted-attention arc
// scores -> structure (sampled/parsed tree, head selection, chain or gold)
// -> GCN over one shared unlexicalized embedding -> MLP -> label logits.
// The GCN never sees the tokens, so tags are recoverable only through the
// structure.
template <typename S>
class TaggerModel
{
public:
    struct Output
    {
        Var<S> logits;    // (n+1) x labels; row 0 is the root
        Var<S> adjacency; // (n+1) x (n+1) structure fed to the GCN
        Var<S> scores;    // arc scores; invalid for chain/gold modes
    };

    TaggerModel(TaggerSpec spec, std::uint64_t init_seed);

    const TaggerSpec& spec() const { return _spec; }
    ParameterStore<S>& parameters() { return _store; }
    const ParameterStore<S>& parameters() const { return _store; }

    // Arc scores for a token-id sequence (root first).
    Var<S> arc_scores(Tape<S>& tape, std::span<const std::size_t> tokens, Rng& rng) const;

    // GCN stack + tagger head on a given adjacency.
    Var<S> tag_logits(Tape<S>& tape, Var<S> adjacency, Rng& rng) const;

    // gold_heads is consulted only in gold mode. Throws InvalidArgument for an
    // empty sentence (the root alone).
    Output forward(
        Tape<S>& tape,
        std::span<const std::size_t> tokens,
        std::span<const int> gold_heads,
        const StructureOptions& structure,
        Rng& rng
    ) const;

private:
    TaggerSpec _spec;
    ParameterStore<S> _store;
    Parameter<S>* _lexical = nullptr;
    Parameter<S>* _unlexicalized = nullptr;
    nn::BiLstm<S> _bilstm;
    ArcScorer<S> _scorer;
    std::vector<GcnLayer<S>> _gcn;
    nn::Mlp<S> _tagger;
};

// Mean cross-entropy over the non-root tokens; gold_tags[m - 1] is the label
// index of token m. Throws InvalidArgument for a label outside the set.
template <typename S>
Var<S> nll_loss(Var<S> logits, std::span<const int> gold_tags);

// Argmax label per non-root token.
template <typename S>
std::vector<int> predict_tags(const Tensor<S>& logits);

extern template class TaggerModel<float>;
extern template class TaggerModel<double>;

}
