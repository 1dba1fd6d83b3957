#include "ltree/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace ltree
{

namespace
{

double evaluate(const ScalarFunction& f, const Tensor<double>& x)
{
    Tape<double> tape;
    Var<double> in = tape.input(x);
    Var<double> out = f(tape, in);
    if (out.value().size() != 1)
        throw ShapeError("check_gradients: function output is not scalar: " + shape_string(out.value().shape()));
    return out.value()[0];
}

}

GradientReport check_gradients(const ScalarFunction& f, const Tensor<double>& input, double h, double tol)
{
    if (!(h > 0.0))
        throw InvalidArgument("check_gradients: step must be positive");

    Tensor<double> analytic;
    double reference = 0.0;
    {
        Tape<double> tape;
        Var<double> in = tape.input(input);
        Var<double> out = f(tape, in);
        reference = out.value().item();
        tape.backward(out);
        analytic = tape.adjoint(in).empty() ? Tensor<double>(input.shape()) : tape.adjoint(in);
    }
    if (evaluate(f, input) != reference)
        throw Error("check_gradients: function is not deterministic under a fixed seed");

    GradientReport report;
    report.coordinates = input.size();
    Tensor<double> x = input;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        const double saved = x[i];
        x[i] = saved + h;
        const double plus = evaluate(f, x);
        x[i] = saved - h;
        const double minus = evaluate(f, x);
        x[i] = saved;

        const double numeric = (plus - minus) / (2.0 * h);
        const double a = analytic[i];
        const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
        if (err > report.max_relative_error || i == 0)
        {
            report.max_relative_error = err;
            report.worst_coordinate = i;
            report.analytic_at_worst = a;
            report.numeric_at_worst = numeric;
        }
    }
    report.pass = report.max_relative_error < tol;
    return report;
}

}
