#pragma once

#include <cstddef>
#include <vector>

#include "ltree/parser/tree.hpp"

namespace ltree
{

// Every projective dependency tree over n words rooted at token 0 (the root
// may take several children), each exactly once. Intended as a brute-force
// oracle; n must lie in [1, 9].
std::vector<Heads> enumerate_projective_trees(std::size_t n);

}
