#include "ltree/parser/enumerate.hpp"

#include <functional>

#include "ltree/error.hpp"

namespace ltree
{

namespace
{

// Partial head assignments; each entry fills a contiguous block of words.
using Partial = std::vector<std::pair<int, int>>; // (modifier, head)

// All ways for the words a..b to hang below `head` as a left-to-right
// sequence of complete child subtrees. The first subtree spans [a, e] and is
// headed by some c in [a, e]; c's own dependents fill [a, c-1] and [c+1, e].
void sequences(int head, int a, int b, Partial& acc, const std::function<void(Partial&)>& emit);

void subtree(int c, int a, int e, Partial& acc, const std::function<void(Partial&)>& emit)
{
    sequences(c, a, c - 1, acc, [&](Partial& left) { sequences(c, c + 1, e, left, emit); });
}

void sequences(int head, int a, int b, Partial& acc, const std::function<void(Partial&)>& emit)
{
    if (a > b)
    {
        emit(acc);
        return;
    }
    for (int e = a; e <= b; ++e)
        for (int c = a; c <= e; ++c)
        {
            acc.emplace_back(c, head);
            subtree(c, a, e, acc, [&](Partial& inner) { sequences(head, e + 1, b, inner, emit); });
            acc.pop_back();
        }
}

}

std::vector<Heads> enumerate_projective_trees(std::size_t n)
{
    if (n < 1 || n > 9)
        throw InvalidArgument("enumerate_projective_trees: n must be in [1, 9], got " + std::to_string(n));
    std::vector<Heads> trees;
    Partial acc;
    sequences(0, 1, static_cast<int>(n), acc, [&](Partial& full) {
        Heads heads(n, -1);
        for (auto [m, h] : full)
            heads[static_cast<std::size_t>(m - 1)] = h;
        trees.push_back(std::move(heads));
    });
    return trees;
}

}
