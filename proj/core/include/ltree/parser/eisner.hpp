#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "ltree/autodiff/tensor.hpp"
#include "ltree/parser/tree.hpp"

namespace ltree
{

// Eisner item families [i, j, d, c]:
//   right_complete   [i, j, ->, T]   all of i..j descend from i, j takes no more right modifiers
//   left_complete    [i, j, <-, T]   all of i..j descend from j, i takes no more left modifiers
//   right_incomplete [i, j, ->, _|_] carries the arc i -> j
//   left_incomplete  [i, j, <-, _|_] carries the arc j -> i
// Left items never start at the root (i = 0), so the root is never a modifier.
enum class Family
{
    right_complete = 0,
    left_complete = 1,
    right_incomplete = 2,
    left_incomplete = 3,
};

const char* family_direction(Family f);
const char* family_completeness(Family f);

// Chart over spans of a sentence with n words. Every item with j > i stores
// its weight, a backpointer distribution over its j - i split points, the
// antecedent scores of those splits, and its contribution.
//
// Storage is reused across reset() calls, so one chart per worker acts as a
// scratch arena sized to the longest sentence seen so far.
template <typename S>
class Chart
{
public:
    Chart() = default;
    explicit Chart(std::size_t n) { reset(n); }

    // Clears the chart for a sentence of n words, keeping capacity.
    void reset(std::size_t n);

    std::size_t n() const { return _n; }
    bool built() const { return _built; }
    bool backtracked() const { return _backtracked; }
    bool discrete() const { return _discrete; }
    S temperature() const { return _temperature; }

    // Whether [i, j, family] is a deducible item.
    bool valid(Family f, std::size_t i, std::size_t j) const;

    S& weight(Family f, std::size_t i, std::size_t j) { return _weight[slot(f, i, j)]; }
    S weight(Family f, std::size_t i, std::size_t j) const { return _weight[slot(f, i, j)]; }
    S& contrib(Family f, std::size_t i, std::size_t j) { return _contrib[slot(f, i, j)]; }
    S contrib(Family f, std::size_t i, std::size_t j) const { return _contrib[slot(f, i, j)]; }

    // Split k (0-based) corresponds to k + i for right_incomplete,
    // left_incomplete and left_complete, and to k + i + 1 for right_complete.
    std::span<S> backptr(Family f, std::size_t i, std::size_t j) { return {&_backptr[split_offset(f, i, j)], j - i}; }
    std::span<const S> backptr(Family f, std::size_t i, std::size_t j) const
    {
        return {&_backptr[split_offset(f, i, j)], j - i};
    }
    std::span<S> splits(Family f, std::size_t i, std::size_t j) { return {&_splits[split_offset(f, i, j)], j - i}; }
    std::span<const S> splits(Family f, std::size_t i, std::size_t j) const
    {
        return {&_splits[split_offset(f, i, j)], j - i};
    }

    // Scratch adjoints used by the relaxed backward pass.
    S& weight_adjoint(Family f, std::size_t i, std::size_t j) { return _weight_adj[slot(f, i, j)]; }
    S& contrib_adjoint(Family f, std::size_t i, std::size_t j) { return _contrib_adj[slot(f, i, j)]; }
    std::span<S> backptr_adjoint(Family f, std::size_t i, std::size_t j)
    {
        return {&_backptr_adj[split_offset(f, i, j)], j - i};
    }
    // Sizes the adjoint scratch buffers and clears them.
    void reset_adjoints();

    std::size_t split_count() const { return _split_total; }

    // Goal item [0, n, ->, T].
    S goal_weight() const { return weight(Family::right_complete, 0, _n); }

    void mark_built(bool discrete, S temperature);
    void mark_backtracked() { _backtracked = true; }

    // Plain-text dump, one item per line: "i j d c weight contrib".
    void dump(std::ostream& out) const;

private:
    std::size_t slot(Family f, std::size_t i, std::size_t j) const
    {
        return static_cast<std::size_t>(f) * _cells + i * (_n + 1) + j;
    }
    std::size_t split_offset(Family f, std::size_t i, std::size_t j) const
    {
        return static_cast<std::size_t>(f) * _split_total + _offset[i * (_n + 1) + j];
    }

    std::size_t _n = 0;
    std::size_t _cells = 0;
    std::size_t _split_total = 0;
    bool _built = false;
    bool _backtracked = false;
    bool _discrete = false;
    S _temperature = S{1};
    std::vector<std::size_t> _offset;
    std::vector<S> _weight;
    std::vector<S> _contrib;
    std::vector<S> _backptr;
    std::vector<S> _splits;
    std::vector<S> _weight_adj;
    std::vector<S> _contrib_adj;
    std::vector<S> _backptr_adj;
};

// Fills the chart with hard maxima: one-hot backpointers, lowest split index
// wins ties. Throws InvalidArgument for n = 0 or non-finite scores.
template <typename S>
void eisner_max_forward(const Tensor<S>& scores, Chart<S>& chart);

// Softmax-relaxed chart: backpointers b = softmax(s / temperature) over the
// antecedent scores s, item weight b.s (plus the arc score for incomplete
// items). Throws InvalidArgument if temperature <= 0.
template <typename S>
void eisner_relaxed_forward(const Tensor<S>& scores, S temperature, Chart<S>& chart);

// Propagates contributions top-down from the goal (contribution 1) and reads
// the adjacency off the incomplete items: T[i][j] = contrib[i, j, ->, _|_],
// T[j][i] = contrib[i, j, <-, _|_]. Works on both chart kinds; on a hard chart
// the result is the 0/1 MAP tree. Throws InvalidArgument on an unbuilt chart.
template <typename S>
Tensor<S> eisner_backtrack(Chart<S>& chart);

template <typename S>
Tensor<S> eisner_relaxed_backtrack(Chart<S>& chart)
{
    return eisner_backtrack(chart);
}

// Vector-Jacobian product of the relaxed parser: given dL/dT for the
// adjacency produced by a relaxed, backtracked chart, returns dL/dW.
template <typename S>
Tensor<S> eisner_relaxed_backward(Chart<S>& chart, const Tensor<S>& adjacency_adjoint);

struct MapTree
{
    Heads heads;
    double score = 0.0;
};

// Highest-scoring projective tree (multiple root children allowed).
template <typename S>
MapTree eisner_map(const Tensor<S>& scores);

template <typename S>
Tensor<S> eisner_map_adjacency(const Tensor<S>& scores);

}
