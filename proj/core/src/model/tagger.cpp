#include "ltree/model/tagger.hpp"

namespace ltree
{

StructureMode structure_mode_from_string(std::string_view name)
{
    if (name == "latent-tree")
        return StructureMode::latent_tree;
    if (name == "latent-head")
        return StructureMode::latent_head;
    if (name == "left-chain")
        return StructureMode::left_chain;
    if (name == "gold")
        return StructureMode::gold;
    throw InvalidArgument("unknown structure mode: " + std::string(name));
}

std::string to_string(StructureMode mode)
{
    switch (mode)
    {
        case StructureMode::latent_tree: return "latent-tree";
        case StructureMode::latent_head: return "latent-head";
        case StructureMode::left_chain: return "left-chain";
        case StructureMode::gold: return "gold";
    }
    return "unknown";
}

template <typename S>
TaggerModel<S>::TaggerModel(TaggerSpec spec, std::uint64_t init_seed) :
    _spec(spec)
{
    Rng rng = Rng::substream(init_seed, 0x1a11);
    _lexical = &_store.add("lexical_embeddings", nn::glorot_uniform<S>(_spec.vocabulary, _spec.embedding, rng));
    _unlexicalized = &_store.add("unlexicalized_embedding", nn::glorot_uniform<S>(1, _spec.gcn_input, rng));

    nn::BiLstmSpec bl = _spec.bilstm;
    bl.input = _spec.embedding;
    _bilstm = nn::BiLstm<S>(_store, "bilstm", bl, rng);

    nn::MlpSpec attention{bl.output(), {}};
    for (std::size_t l = 0; l < _spec.attention_layers; ++l)
        attention.layers.push_back({_spec.attention_hidden, nn::Activation::relu, true});
    if (!_spec.attention_output_relu && !attention.layers.empty())
        attention.layers.back().activation = nn::Activation::none;
    ScorerSpec ss{attention, attention, _spec.distance_bias, {_spec.distance_radius}};
    _scorer = ArcScorer<S>(_store, "scorer", ss, rng);

    std::size_t width = _spec.gcn_input;
    for (std::size_t l = 0; l < _spec.gcn_layers; ++l)
    {
        GcnLayerSpec gs{width, _spec.gcn_width, nn::Activation::relu, _spec.gcn_dense};
        _gcn.emplace_back(_store, "gcn" + std::to_string(l), gs, rng);
        width = gs.output();
    }

    nn::MlpSpec head{width, {{_spec.tagger_hidden, nn::Activation::relu, true}, {_spec.labels, nn::Activation::none, false}}};
    _tagger = nn::Mlp<S>(_store, "tagger", head, rng);
}

template <typename S>
Var<S> TaggerModel<S>::arc_scores(Tape<S>& tape, std::span<const std::size_t> tokens, Rng& rng) const
{
    Var<S> x = ad::gather_rows(tape.parameter(*_lexical), tokens);
    x = nn::dropout(x, _spec.dropout, rng);
    Var<S> e = _bilstm.forward(tape, x);
    return _scorer.forward(tape, e);
}

template <typename S>
Var<S> TaggerModel<S>::tag_logits(Tape<S>& tape, Var<S> adjacency, Rng& rng) const
{
    const std::size_t tokens = adjacency.value().rows();
    const std::vector<std::size_t> same(tokens, 0);
    Var<S> h = ad::gather_rows(tape.parameter(*_unlexicalized), same);
    for (const auto& layer : _gcn)
        h = nn::dropout(layer.forward(tape, h, adjacency), _spec.dropout, rng);
    return _tagger.forward(tape, h);
}

template <typename S>
typename TaggerModel<S>::Output TaggerModel<S>::forward(
    Tape<S>& tape,
    std::span<const std::size_t> tokens,
    std::span<const int> gold_heads,
    const StructureOptions& structure,
    Rng& rng
) const
{
    if (tokens.size() < 2)
        throw InvalidArgument("tagger: sentence must contain at least one word after the root");
    const std::size_t n = tokens.size() - 1;
    const S tau = static_cast<S>(structure.temperature);

    Output out;
    switch (structure.mode)
    {
        case StructureMode::gold:
            if (gold_heads.size() != n)
                throw InvalidArgument("tagger: gold mode needs one head per word");
            out.adjacency = tape.constant(adjacency_from_heads<S>(gold_heads));
            break;
        case StructureMode::left_chain:
            out.adjacency = tape.constant(left_chain<S>(n));
            break;
        case StructureMode::latent_tree:
            out.scores = arc_scores(tape, tokens, rng);
            out.adjacency = perturb_and_parse(out.scores, rng, structure.relaxation, tau, structure.noise);
            break;
        case StructureMode::latent_head:
            out.scores = arc_scores(tape, tokens, rng);
            out.adjacency = latent_head_sample(out.scores, rng, structure.relaxation, tau, structure.noise);
            break;
    }
    out.logits = tag_logits(tape, out.adjacency, rng);
    return out;
}

template <typename S>
Var<S> nll_loss(Var<S> logits, std::span<const int> gold_tags)
{
    if (logits.value().rows() != gold_tags.size() + 1)
        throw InvalidArgument("nll_loss: expected one tag per non-root token");
    std::vector<int> targets(gold_tags.size() + 1, -1);
    for (std::size_t m = 0; m < gold_tags.size(); ++m)
    {
        if (gold_tags[m] < 0)
            throw InvalidArgument("nll_loss: negative tag index");
        targets[m + 1] = gold_tags[m];
    }
    return ad::cross_entropy(logits, std::span<const int>(targets));
}

template <typename S>
std::vector<int> predict_tags(const Tensor<S>& logits)
{
    std::vector<int> tags;
    for (std::size_t r = 1; r < logits.rows(); ++r)
    {
        std::size_t best = 0;
        for (std::size_t c = 1; c < logits.cols(); ++c)
            if (logits(r, c) > logits(r, best))
                best = c;
        tags.push_back(static_cast<int>(best));
    }
    return tags;
}

template class TaggerModel<float>;
template class TaggerModel<double>;
template Var<float> nll_loss(Var<float>, std::span<const int>);
template Var<double> nll_loss(Var<double>, std::span<const int>);
template std::vector<int> predict_tags(const Tensor<float>&);
template std::vector<int> predict_tags(const Tensor<double>&);

}
