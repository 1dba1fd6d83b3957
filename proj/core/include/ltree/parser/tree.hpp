#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ltree/autodiff/tensor.hpp"

namespace ltree
{

// Head array of a dependency tree over tokens 0..n: heads[m - 1] is the head
// of token m (token 0 is the root and has no entry).
using Heads = std::vector<int>;

// Number of words n of an (n+1) x (n+1) arc score / adjacency matrix.
template <typename S>
std::size_t word_count(const Tensor<S>& square);

// 0/1 adjacency with T[h][m] = 1 iff heads[m - 1] == h.
template <typename S>
Tensor<S> adjacency_from_heads(std::span<const int> heads);

// Per modifier, the head with the largest adjacency entry (ties: lowest h).
template <typename S>
Heads heads_from_adjacency(const Tensor<S>& adjacency);

// Sum of W[h][m] over the arcs of the tree.
template <typename S>
double tree_score(const Tensor<S>& scores, std::span<const int> heads);

// Single head per token (guaranteed by the representation), heads in range,
// no self-loops, acyclic (every token reaches the root) and no crossing arcs.
bool is_projective_tree(std::span<const int> heads);

// Reason the check failed, empty if the tree is valid.
std::string projective_tree_violation(std::span<const int> heads);

// Bracketed rendering: (word dependents...) with dependents in surface order.
std::string bracketed(std::span<const int> heads, std::span<const std::string> words);

}
