#pragma once

#include <cstddef>
#include <functional>

#include "ltree/autodiff/tape.hpp"

namespace ltree
{

struct GradientReport
{
    double max_relative_error = 0.0;
    std::size_t worst_coordinate = 0;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
    std::size_t coordinates = 0;
    bool pass = false;
};

// Builds a scalar on a fresh tape from a differentiable input leaf.
using ScalarFunction = std::function<Var<double>(Tape<double>&, Var<double>)>;

// Compares the reverse-mode gradient of `f` at `input` with central
// differences (f(x+h) - f(x-h)) / 2h, coordinate by coordinate. The relative
// error is |a - f| / max(1, |a|, |f|). Throws Error if two evaluations at the
// same point disagree (the function must be deterministic).
GradientReport check_gradients(const ScalarFunction& f, const Tensor<double>& input, double h = 1e-4, double tol = 1e-4);

}
