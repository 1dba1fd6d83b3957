#include "ltree/parser/tree.hpp"

#include <algorithm>
#include <functional>

namespace ltree
{

template <typename S>
std::size_t word_count(const Tensor<S>& square)
{
    if (square.rank() != 2 || square.rows() != square.cols() || square.rows() < 1)
        throw ShapeError("expected a square (n+1) x (n+1) matrix, got " + shape_string(square.shape()));
    return square.rows() - 1;
}

template <typename S>
Tensor<S> adjacency_from_heads(std::span<const int> heads)
{
    const std::size_t n = heads.size();
    Tensor<S> t(Shape{n + 1, n + 1});
    for (std::size_t m = 1; m <= n; ++m)
    {
        const int h = heads[m - 1];
        if (h < 0 || static_cast<std::size_t>(h) > n)
            throw InvalidArgument("head " + std::to_string(h) + " out of range for token " + std::to_string(m));
        t(static_cast<std::size_t>(h), m) = S{1};
    }
    return t;
}

template <typename S>
Heads heads_from_adjacency(const Tensor<S>& adjacency)
{
    const std::size_t n = word_count(adjacency);
    Heads heads(n, 0);
    for (std::size_t m = 1; m <= n; ++m)
    {
        std::size_t best = 0;
        for (std::size_t h = 1; h <= n; ++h)
            if (adjacency(h, m) > adjacency(best, m))
                best = h;
        heads[m - 1] = static_cast<int>(best);
    }
    return heads;
}

template <typename S>
double tree_score(const Tensor<S>& scores, std::span<const int> heads)
{
    const std::size_t n = word_count(scores);
    if (heads.size() != n)
        throw InvalidArgument("tree_score: head array length does not match score matrix");
    double total = 0.0;
    for (std::size_t m = 1; m <= n; ++m)
        total += static_cast<double>(scores(static_cast<std::size_t>(heads[m - 1]), m));
    return total;
}

std::string projective_tree_violation(std::span<const int> heads)
{
    const int n = static_cast<int>(heads.size());
    for (int m = 1; m <= n; ++m)
    {
        const int h = heads[m - 1];
        if (h < 0 || h > n)
            return "head out of range for token " + std::to_string(m);
        if (h == m)
            return "self-loop at token " + std::to_string(m);
    }
    for (int m = 1; m <= n; ++m)
    {
        int x = m;
        for (int steps = 0; x != 0; ++steps)
        {
            if (steps > n)
                return "cycle through token " + std::to_string(m);
            x = heads[x - 1];
        }
    }
    for (int a = 1; a <= n; ++a)
    {
        const int lo1 = std::min(a, heads[a - 1]), hi1 = std::max(a, heads[a - 1]);
        for (int b = a + 1; b <= n; ++b)
        {
            const int lo2 = std::min(b, heads[b - 1]), hi2 = std::max(b, heads[b - 1]);
            const bool nested = (lo1 <= lo2 && hi2 <= hi1) || (lo2 <= lo1 && hi1 <= hi2);
            const bool disjoint = hi1 <= lo2 || hi2 <= lo1;
            if (!nested && !disjoint)
                return "arcs into " + std::to_string(a) + " and " + std::to_string(b) + " cross";
        }
    }
    return {};
}

bool is_projective_tree(std::span<const int> heads)
{
    return projective_tree_violation(heads).empty();
}

std::string bracketed(std::span<const int> heads, std::span<const std::string> words)
{
    const std::size_t n = heads.size();
    if (words.size() != n + 1)
        throw InvalidArgument("bracketed: expected " + std::to_string(n + 1) + " words");
    std::vector<std::vector<std::size_t>> children(n + 1);
    for (std::size_t m = 1; m <= n; ++m)
        children.at(static_cast<std::size_t>(heads[m - 1])).push_back(m);

    std::string out;
    std::function<void(std::size_t, std::size_t)> render = [&](std::size_t node, std::size_t depth) {
        if (depth > n + 1)
            throw InvalidArgument("bracketed: head array contains a cycle");
        out += "(";
        out += words[node];
        for (std::size_t c : children[node])
        {
            out += " ";
            render(c, depth + 1);
        }
        out += ")";
    };
    render(0, 0);
    return out;
}

template std::size_t word_count(const Tensor<float>&);
template std::size_t word_count(const Tensor<double>&);
template Tensor<float> adjacency_from_heads<float>(std::span<const int>);
template Tensor<double> adjacency_from_heads<double>(std::span<const int>);
template Heads heads_from_adjacency(const Tensor<float>&);
template Heads heads_from_adjacency(const Tensor<double>&);
template double tree_score(const Tensor<float>&, std::span<const int>);
template double tree_score(const Tensor<double>&, std::span<const int>);

}
