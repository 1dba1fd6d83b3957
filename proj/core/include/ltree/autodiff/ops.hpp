#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ltree/autodiff/tape.hpp"

// Differentiable operations on tape variables. Every function evaluates its
// value immediately and records a node whose backward rule accumulates into
// the parents' adjoints. Shape mismatches raise ShapeError naming the op.
namespace ltree::ad
{

// (r x k) * (k x c) -> (r x c)
template <typename S>
Var<S> matmul(Var<S> a, Var<S> b);

// Elementwise a + b. `b` may also be a single row broadcast over a's rows.
template <typename S>
Var<S> add(Var<S> a, Var<S> b);

template <typename S>
Var<S> sub(Var<S> a, Var<S> b);

template <typename S>
Var<S> mul(Var<S> a, Var<S> b);

template <typename S>
Var<S> scale(Var<S> a, S factor);

// [a | b]: same row count, columns appended.
template <typename S>
Var<S> concat_cols(Var<S> a, Var<S> b);

// Subgradient at 0 is 0.
template <typename S>
Var<S> relu(Var<S> a);

template <typename S>
Var<S> tanh(Var<S> a);

template <typename S>
Var<S> sigmoid(Var<S> a);

// Softmax along an axis of a matrix: axis 1 normalises each row, axis 0 each
// column. Rank-1 input is treated as a single row.
template <typename S>
Var<S> softmax(Var<S> a, int axis = 1);

// Requires strictly positive input.
template <typename S>
Var<S> log(Var<S> a);

template <typename S>
Var<S> exp(Var<S> a);

// Maximum over all entries; the gradient goes to the first maximal entry.
template <typename S>
Var<S> max_reduce(Var<S> a);

template <typename S>
Var<S> sum(Var<S> a);

template <typename S>
Var<S> mean(Var<S> a);

template <typename S>
Var<S> transpose(Var<S> a);

template <typename S>
Var<S> slice_rows(Var<S> a, std::size_t begin, std::size_t count);

template <typename S>
Var<S> slice_cols(Var<S> a, std::size_t begin, std::size_t count);

template <typename S>
Var<S> reshape(Var<S> a, Shape shape);

// Rows of `table` selected by `indices`: (|indices| x d).
template <typename S>
Var<S> gather_rows(Var<S> table, std::span<const std::size_t> indices);

// Mean over rows with target >= 0 of -log softmax(logits[r])[target[r]].
// Rows whose target is negative are ignored. Targets must be < columns.
template <typename S>
Var<S> cross_entropy(Var<S> logits, std::span<const int> targets);

template <typename S>
Var<S> operator+(Var<S> a, Var<S> b) { return add(a, b); }
template <typename S>
Var<S> operator-(Var<S> a, Var<S> b) { return sub(a, b); }
template <typename S>
Var<S> operator*(Var<S> a, Var<S> b) { return mul(a, b); }

}
