#include "ltree/parser/parse.hpp"

#include <memory>

namespace ltree
{

ParseMode parse_mode_from_string(std::string_view name)
{
    if (name == "discrete")
        return ParseMode::discrete;
    if (name == "relaxed" || name == "forward-relaxed")
        return ParseMode::relaxed;
    if (name == "straight-through" || name == "st")
        return ParseMode::straight_through;
    throw InvalidArgument("unknown parse mode: " + std::string(name));
}

std::string to_string(ParseMode mode)
{
    switch (mode)
    {
        case ParseMode::discrete: return "discrete";
        case ParseMode::relaxed: return "relaxed";
        case ParseMode::straight_through: return "straight-through";
    }
    return "unknown";
}

template <typename S>
Var<S> parse(Var<S> scores, ParseMode mode, S temperature)
{
    Tape<S>& tape = scores.tape();
    const Tensor<S>& w = scores.value();
    const std::size_t ps = scores.id();

    if (mode == ParseMode::discrete)
    {
        if (tape.training() && tape.requires_grad(ps))
            throw InvalidArgument("parse: discrete mode has no gradient path; use relaxed or straight-through on a training tape");
        return tape.constant(eisner_map_adjacency(w));
    }

    auto chart = std::make_shared<Chart<S>>();
    eisner_relaxed_forward(w, temperature, *chart);
    Tensor<S> relaxed = eisner_backtrack(*chart);

    auto backward = [ps, chart](const Node<S>& self, Tape<S>& t) {
        if (Tensor<S>* g = t.grad_slot(ps))
            g->mat() += eisner_relaxed_backward(*chart, self.adjoint).mat();
    };

    if (mode == ParseMode::relaxed)
        return tape.push(OpKind::eisner_relaxed, {ps}, std::move(relaxed), backward);
    return tape.push(OpKind::eisner_straight_through, {ps}, eisner_map_adjacency(w), backward);
}

template Var<float> parse(Var<float>, ParseMode, float);
template Var<double> parse(Var<double>, ParseMode, double);

}
