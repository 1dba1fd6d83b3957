#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ltree/autodiff/gradcheck.hpp"
#include "ltree/parser/parse.hpp"

namespace ltree::app
{

struct GradcheckCase
{
    std::size_t index = 0;
    std::size_t n = 0;
    ParseMode mode = ParseMode::relaxed;
    GradientReport report;
    // "pass", "fail", "expected-mismatch" (straight-through is biased by
    // design) or "non-differentiable" (discrete parsing has no gradient).
    std::string status;
};

struct GradcheckSuite
{
    std::vector<GradcheckCase> cases;
    // True when every relaxed case passes; ST and discrete rows never fail
    // the suite.
    bool pass = true;
    double max_relative_error = 0.0; // over relaxed cases
};

// Finite-difference check of the float64 composite
//   contextual embeddings -> arc scorer -> relaxed Eisner -> GCN over a
//   shared input vector -> tagger head -> cross-entropy
// with respect to the embeddings, for `cases` random instances with word
// counts cycling through 3..7. With `with_ablations`, each word count also
// gets a straight-through row and a discrete row.
GradcheckSuite run_gradcheck_suite(
    std::size_t cases = 20,
    std::uint64_t seed = 2024,
    double h = 1e-4,
    double tol = 1e-4,
    bool with_ablations = true
);

struct BenchRow
{
    std::size_t n = 0;
    std::size_t split_points = 0;
    double seconds = 0.0; // one relaxed forward + backtrack + backward pass
};

// Times the relaxed parser kernel at each length (best of `trials`, each
// averaging enough repetitions to run for at least `min_seconds`). Throws
// InvalidArgument for a zero length.
std::vector<BenchRow> bench_parser(
    std::span<const std::size_t> lengths,
    std::size_t trials = 5,
    double min_seconds = 0.05,
    std::uint64_t seed = 7
);

// Least-squares slope of log(seconds) against log(n).
double loglog_slope(std::span<const BenchRow> rows);

struct ArenaComparison
{
    std::size_t sentences = 0;
    std::size_t max_length = 0;
    double mean_length = 0.0;
    double arena_seconds = 0.0;  // DP over each true length, one reused chart
    double padded_seconds = 0.0; // DP over the padded max length
    double speedup = 0.0;
};

// Relaxed parse (forward, backtrack, backward) of a batch of mixed-length
// sentences: length-aware chart arena versus padding every sentence to the
// batch maximum. Lengths are drawn uniformly from [min_length, max_length].
ArenaComparison bench_arena(
    std::size_t sentences = 64,
    std::size_t min_length = 2,
    std::size_t max_length = 40,
    std::size_t trials = 3,
    std::uint64_t seed = 11
);

}
