#pragma once

#include <string>
#include <string_view>

#include "ltree/autodiff/tape.hpp"
#include "ltree/parser/eisner.hpp"

namespace ltree
{

enum class ParseMode
{
    discrete,
    relaxed,
    straight_through
};

ParseMode parse_mode_from_string(std::string_view name);
std::string to_string(ParseMode mode);

// Parses an arc score matrix on a tape.
//   discrete          MAP tree as a constant; refused on a training tape when
//                     the scores require a gradient (there is no gradient path).
//   relaxed           softmax-relaxed chart + contribution backtrack; gradients
//                     flow through the soft backpointers.
//   straight_through  value is the MAP tree; the backward rule is the relaxed
//                     parser's vector-Jacobian product at the same scores.
template <typename S>
Var<S> parse(Var<S> scores, ParseMode mode, S temperature = S{1});

extern template Var<float> parse(Var<float>, ParseMode, float);
extern template Var<double> parse(Var<double>, ParseMode, double);

}
