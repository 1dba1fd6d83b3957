#include "ltree/parser/eisner.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace ltree
{

namespace
{

constexpr Family RC = Family::right_complete;
constexpr Family LC = Family::left_complete;
constexpr Family RI = Family::right_incomplete;
constexpr Family LI = Family::left_incomplete;

// Antecedent pair of split k (0-based) of item [i, j, f].
struct Antecedents
{
    Family first_family;
    std::size_t first_i, first_j;
    Family second_family;
    std::size_t second_i, second_j;
};

inline Antecedents antecedents(Family f, std::size_t i, std::size_t j, std::size_t k)
{
    switch (f)
    {
        case Family::right_incomplete:
        case Family::left_incomplete:
            // [i, i+k, ->, T] + [i+k+1, j, <-, T]
            return {RC, i, i + k, LC, i + k + 1, j};
        case Family::right_complete:
            // [i, i+k+1, ->, _|_] + [i+k+1, j, ->, T]
            return {RI, i, i + k + 1, RC, i + k + 1, j};
        case Family::left_complete:
            // [i, i+k, <-, T] + [i+k, j, <-, _|_]
            return {LC, i, i + k, LI, i + k, j};
    }
    return {};
}

// Hard selection: one-hot on the first maximum.
template <typename S>
S select_max(std::span<const S> s, std::span<S> b)
{
    std::size_t arg = 0;
    for (std::size_t k = 1; k < s.size(); ++k)
        if (s[k] > s[arg])
            arg = k;
    std::fill(b.begin(), b.end(), S{0});
    b[arg] = S{1};
    return s[arg];
}

// Soft selection: b = softmax(s / tau), returns b.s.
template <typename S>
S select_soft(std::span<const S> s, std::span<S> b, S tau)
{
    const S m = *std::max_element(s.begin(), s.end());
    S z{0};
    for (std::size_t k = 0; k < s.size(); ++k)
    {
        b[k] = std::exp((s[k] - m) / tau);
        z += b[k];
    }
    S expected{0};
    for (std::size_t k = 0; k < s.size(); ++k)
    {
        b[k] /= z;
        expected += b[k] * s[k];
    }
    return expected;
}

template <typename S>
void check_scores(const Tensor<S>& scores)
{
    const std::size_t n = word_count(scores);
    if (n == 0)
        throw InvalidArgument("eisner: sentence must contain at least one word");
    for (std::size_t h = 0; h <= n; ++h)
        for (std::size_t m = 1; m <= n; ++m)
            if (h != m && !std::isfinite(scores(h, m)))
                throw InvalidArgument("eisner: non-finite arc score W[" + std::to_string(h) + "][" + std::to_string(m) + "]");
}

template <typename S, typename Select>
void fill_chart(const Tensor<S>& scores, Chart<S>& chart, Select select)
{
    const std::size_t n = word_count(scores);
    chart.reset(n);
    for (std::size_t w = 1; w <= n; ++w)
    {
        for (std::size_t i = 0; i + w <= n; ++i)
        {
            const std::size_t j = i + w;

            auto s = chart.splits(RI, i, j);
            for (std::size_t k = 0; k < w; ++k)
                s[k] = chart.weight(RC, i, i + k) + chart.weight(LC, i + k + 1, j);
            auto b = chart.backptr(RI, i, j);
            const S best = select(std::span<const S>(s), b);
            chart.weight(RI, i, j) = best + scores(i, j);
            if (i > 0)
            {
                std::copy(s.begin(), s.end(), chart.splits(LI, i, j).begin());
                std::copy(b.begin(), b.end(), chart.backptr(LI, i, j).begin());
                chart.weight(LI, i, j) = best + scores(j, i);
            }

            s = chart.splits(RC, i, j);
            for (std::size_t k = 0; k < w; ++k)
                s[k] = chart.weight(RI, i, i + k + 1) + chart.weight(RC, i + k + 1, j);
            chart.weight(RC, i, j) = select(std::span<const S>(s), chart.backptr(RC, i, j));

            if (i > 0)
            {
                s = chart.splits(LC, i, j);
                for (std::size_t k = 0; k < w; ++k)
                    s[k] = chart.weight(LC, i, i + k) + chart.weight(LI, i + k, j);
                chart.weight(LC, i, j) = select(std::span<const S>(s), chart.backptr(LC, i, j));
            }
        }
    }
}

}

const char* family_direction(Family f)
{
    return (f == Family::right_complete || f == Family::right_incomplete) ? "->" : "<-";
}

const char* family_completeness(Family f)
{
    return (f == Family::right_complete || f == Family::left_complete) ? "C" : "I";
}

template <typename S>
void Chart<S>::reset(std::size_t n)
{
    _n = n;
    _cells = (n + 1) * (n + 1);
    _offset.assign(_cells, 0);
    std::size_t total = 0;
    for (std::size_t i = 0; i <= n; ++i)
        for (std::size_t j = i + 1; j <= n; ++j)
        {
            _offset[i * (n + 1) + j] = total;
            total += j - i;
        }
    _split_total = total;
    _weight.assign(4 * _cells, S{0});
    _contrib.assign(4 * _cells, S{0});
    _backptr.resize(4 * _split_total);
    _splits.resize(4 * _split_total);
    _built = false;
    _backtracked = false;
}

template <typename S>
void Chart<S>::reset_adjoints()
{
    _weight_adj.assign(4 * _cells, S{0});
    _contrib_adj.assign(4 * _cells, S{0});
    _backptr_adj.assign(4 * _split_total, S{0});
}

template <typename S>
bool Chart<S>::valid(Family f, std::size_t i, std::size_t j) const
{
    if (j > _n || i > j)
        return false;
    if (f == Family::left_complete || f == Family::left_incomplete)
        if (i == 0 && j > 0)
            return false;
    if (f == Family::right_incomplete || f == Family::left_incomplete)
        return j > i;
    return true;
}

template <typename S>
void Chart<S>::mark_built(bool discrete, S temperature)
{
    _built = true;
    _backtracked = false;
    _discrete = discrete;
    _temperature = temperature;
}

template <typename S>
void Chart<S>::dump(std::ostream& out) const
{
    for (std::size_t w = 1; w <= _n; ++w)
        for (std::size_t i = 0; i + w <= _n; ++i)
            for (Family f : {RI, LI, RC, LC})
            {
                const std::size_t j = i + w;
                if (!valid(f, i, j))
                    continue;
                out << i << ' ' << j << ' ' << family_direction(f) << ' ' << family_completeness(f) << ' '
                    << weight(f, i, j) << ' ' << contrib(f, i, j) << '\n';
            }
}

template <typename S>
void eisner_max_forward(const Tensor<S>& scores, Chart<S>& chart)
{
    check_scores(scores);
    fill_chart(scores, chart, [](std::span<const S> s, std::span<S> b) { return select_max(s, b); });
    chart.mark_built(true, S{0});
}

template <typename S>
void eisner_relaxed_forward(const Tensor<S>& scores, S temperature, Chart<S>& chart)
{
    if (!(temperature > S{0}))
        throw InvalidArgument("eisner: temperature must be positive");
    check_scores(scores);
    fill_chart(scores, chart, [temperature](std::span<const S> s, std::span<S> b) {
        return select_soft(s, b, temperature);
    });
    chart.mark_built(false, temperature);
}

template <typename S>
Tensor<S> eisner_backtrack(Chart<S>& chart)
{
    if (!chart.built())
        throw InvalidArgument("eisner backtrack: chart has not been built");
    const std::size_t n = chart.n();

    for (std::size_t w = 0; w <= n; ++w)
        for (std::size_t i = 0; i + w <= n; ++i)
            for (Family f : {RC, LC, RI, LI})
                chart.contrib(f, i, i + w) = S{0};
    chart.contrib(RC, 0, n) = S{1};

    auto propagate = [&chart](Family f, std::size_t i, std::size_t j) {
        const S c = chart.contrib(f, i, j);
        if (c == S{0})
            return;
        const auto b = chart.backptr(f, i, j);
        for (std::size_t k = 0; k < b.size(); ++k)
        {
            if (b[k] == S{0})
                continue;
            const Antecedents a = antecedents(f, i, j, k);
            chart.contrib(a.first_family, a.first_i, a.first_j) += b[k] * c;
            chart.contrib(a.second_family, a.second_i, a.second_j) += b[k] * c;
        }
    };

    for (std::size_t w = n; w >= 1; --w)
        for (std::size_t i = 0; i + w <= n; ++i)
        {
            const std::size_t j = i + w;
            propagate(RC, i, j);
            if (i > 0)
                propagate(LC, i, j);
            propagate(RI, i, j);
            if (i > 0)
                propagate(LI, i, j);
        }

    Tensor<S> adjacency(Shape{n + 1, n + 1});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j <= n; ++j)
        {
            adjacency(i, j) = chart.contrib(RI, i, j);
            if (i > 0)
                adjacency(j, i) = chart.contrib(LI, i, j);
        }
    chart.mark_backtracked();
    return adjacency;
}

template <typename S>
Tensor<S> eisner_relaxed_backward(Chart<S>& chart, const Tensor<S>& adjacency_adjoint)
{
    if (!chart.backtracked() || chart.discrete())
        throw InvalidArgument("eisner backward: requires a relaxed, backtracked chart");
    const std::size_t n = chart.n();
    if (word_count(adjacency_adjoint) != n)
        throw ShapeError("eisner backward: adjoint shape " + shape_string(adjacency_adjoint.shape()) + " does not match chart");
    const S tau = chart.temperature();
    chart.reset_adjoints();

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j <= n; ++j)
        {
            chart.contrib_adjoint(RI, i, j) = adjacency_adjoint(i, j);
            if (i > 0)
                chart.contrib_adjoint(LI, i, j) = adjacency_adjoint(j, i);
        }

    // Reverse of the backtrack: contributions flow bottom-up, and each item
    // collects the adjoint of its backpointers.
    auto unpropagate = [&chart](Family f, std::size_t i, std::size_t j) {
        const auto b = chart.backptr(f, i, j);
        auto bhat = chart.backptr_adjoint(f, i, j);
        const S c = chart.contrib(f, i, j);
        S acc{0};
        for (std::size_t k = 0; k < b.size(); ++k)
        {
            const Antecedents a = antecedents(f, i, j, k);
            const S g = chart.contrib_adjoint(a.first_family, a.first_i, a.first_j)
                        + chart.contrib_adjoint(a.second_family, a.second_i, a.second_j);
            acc += b[k] * g;
            bhat[k] = c * g;
        }
        chart.contrib_adjoint(f, i, j) += acc;
    };
    for (std::size_t w = 1; w <= n; ++w)
        for (std::size_t i = 0; i + w <= n; ++i)
        {
            const std::size_t j = i + w;
            if (i > 0)
                unpropagate(LI, i, j);
            unpropagate(RI, i, j);
            if (i > 0)
                unpropagate(LC, i, j);
            unpropagate(RC, i, j);
        }

    // Reverse of the chart construction: through b = softmax(s / tau) and
    // weight = b.s (+ arc score).
    Tensor<S> grad(Shape{n + 1, n + 1});
    auto unfill = [&chart, &grad, tau](Family f, std::size_t i, std::size_t j) {
        const auto b = chart.backptr(f, i, j);
        const auto s = chart.splits(f, i, j);
        const auto bhat = chart.backptr_adjoint(f, i, j);
        const S what = chart.weight_adjoint(f, i, j);
        S mean{0}, dot{0};
        for (std::size_t k = 0; k < b.size(); ++k)
        {
            mean += b[k] * s[k];
            dot += b[k] * bhat[k];
        }
        for (std::size_t k = 0; k < b.size(); ++k)
        {
            const S shat = what * (b[k] + b[k] * (s[k] - mean) / tau) + b[k] * (bhat[k] - dot) / tau;
            const Antecedents a = antecedents(f, i, j, k);
            chart.weight_adjoint(a.first_family, a.first_i, a.first_j) += shat;
            chart.weight_adjoint(a.second_family, a.second_i, a.second_j) += shat;
        }
        if (f == Family::right_incomplete)
            grad(i, j) += what;
        else if (f == Family::left_incomplete)
            grad(j, i) += what;
    };
    for (std::size_t w = n; w >= 1; --w)
        for (std::size_t i = 0; i + w <= n; ++i)
        {
            const std::size_t j = i + w;
            if (i > 0)
                unfill(LC, i, j);
            unfill(RC, i, j);
            if (i > 0)
                unfill(LI, i, j);
            unfill(RI, i, j);
        }
    return grad;
}

template <typename S>
MapTree eisner_map(const Tensor<S>& scores)
{
    Chart<S> chart;
    eisner_max_forward(scores, chart);
    const Tensor<S> adjacency = eisner_backtrack(chart);
    MapTree tree;
    tree.heads = heads_from_adjacency(adjacency);
    tree.score = tree_score(scores, tree.heads);
    return tree;
}

template <typename S>
Tensor<S> eisner_map_adjacency(const Tensor<S>& scores)
{
    Chart<S> chart;
    eisner_max_forward(scores, chart);
    return eisner_backtrack(chart);
}

template class Chart<float>;
template class Chart<double>;
template void eisner_max_forward(const Tensor<float>&, Chart<float>&);
template void eisner_max_forward(const Tensor<double>&, Chart<double>&);
template void eisner_relaxed_forward(const Tensor<float>&, float, Chart<float>&);
template void eisner_relaxed_forward(const Tensor<double>&, double, Chart<double>&);
template Tensor<float> eisner_backtrack(Chart<float>&);
template Tensor<double> eisner_backtrack(Chart<double>&);
template Tensor<float> eisner_relaxed_backward(Chart<float>&, const Tensor<float>&);
template Tensor<double> eisner_relaxed_backward(Chart<double>&, const Tensor<double>&);
template MapTree eisner_map(const Tensor<float>&);
template MapTree eisner_map(const Tensor<double>&);
template Tensor<float> eisner_map_adjacency(const Tensor<float>&);
template Tensor<double> eisner_map_adjacency(const Tensor<double>&);

}
