#include "ltree/app/diagnostics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "ltree/error.hpp"
#include "ltree/model/gcn.hpp"
#include "ltree/model/tagger.hpp"
#include "ltree/parser/eisner.hpp"
#include "ltree/scorer/scorer.hpp"

namespace ltree::app
{

namespace
{

constexpr std::size_t probe_width = 8;
constexpr std::size_t probe_labels = 4;

// Small float64 replica of the tagger's differentiable path.
struct Composite
{
    ParameterStore<double> store;
    ArcScorer<double> scorer;
    GcnLayer<double> gcn;
    nn::Mlp<double> head;
    Tensor<double> shared; // 1 x width unlexicalized input

    explicit Composite(Rng& rng)
    {
        const std::size_t d = probe_width;
        const nn::MlpSpec attention{d, {{d, nn::Activation::relu, true}, {d, nn::Activation::relu, true}}};
        scorer = ArcScorer<double>(store, "scorer", ScorerSpec{attention, attention, true, {3}}, rng);
        gcn = GcnLayer<double>(store, "gcn", GcnLayerSpec{d, d, nn::Activation::relu, false}, rng);
        head = nn::Mlp<double>(
            store, "tagger", nn::MlpSpec{d, {{d, nn::Activation::relu, true}, {probe_labels, nn::Activation::none, false}}}, rng
        );
        // Non-zero biases so no parameter sits at a symmetric point.
        for (std::size_t i = 0; i < store.size(); ++i)
            for (auto& v : store[i].value.data())
                if (v == 0.0)
                    v = 0.1 * rng.normal();
        shared = Tensor<double>(Shape{1, d});
        for (auto& v : shared.data())
            v = rng.normal();
    }

    Var<double> loss(Tape<double>& tape, Var<double> embeddings, ParseMode mode, std::span<const int> tags) const
    {
        const std::size_t tokens = embeddings.value().rows();
        const Var<double> scores = scorer.forward(tape, embeddings);
        const Var<double> adjacency = parse(scores, mode, 1.0);
        Tensor<double> rows(Shape{tokens, probe_width});
        for (std::size_t r = 0; r < tokens; ++r)
            for (std::size_t c = 0; c < probe_width; ++c)
                rows(r, c) = shared(0, c);
        const Var<double> h = gcn.forward(tape, tape.constant(std::move(rows)), adjacency);
        return nll_loss(head.forward(tape, h), tags);
    }
};

template <typename F>
double time_per_call(F&& f, std::size_t trials, double min_seconds)
{
    using clock = std::chrono::steady_clock;
    double best = 0.0;
    for (std::size_t t = 0; t < trials; ++t)
    {
        std::size_t calls = 0;
        const auto start = clock::now();
        double elapsed = 0.0;
        do
        {
            f();
            ++calls;
            elapsed = std::chrono::duration<double>(clock::now() - start).count();
        } while (elapsed < min_seconds);
        const double per_call = elapsed / static_cast<double>(calls);
        best = t == 0 ? per_call : std::min(best, per_call);
    }
    return best;
}

Tensor<double> random_scores(std::size_t n, Rng& rng)
{
    Tensor<double> w(Shape{n + 1, n + 1});
    for (auto& v : w.data())
        v = rng.normal();
    return w;
}

// One relaxed forward + backtrack + backward pass over `chart`.
double relaxed_pass(const Tensor<double>& scores, Chart<double>& chart, const Tensor<double>& seed)
{
    eisner_relaxed_forward(scores, 1.0, chart);
    const Tensor<double> t = eisner_backtrack(chart);
    const Tensor<double> d = eisner_relaxed_backward(chart, seed);
    return t(0, 1) + d(0, 1);
}

}

GradcheckSuite run_gradcheck_suite(std::size_t cases, std::uint64_t seed, double h, double tol, bool with_ablations)
{
    GradcheckSuite suite;
    for (std::size_t c = 0; c < cases; ++c)
    {
        const std::size_t n = 3 + c % 5;
        Rng rng = Rng::substream(seed, c);
        const Composite model(rng);
        Tensor<double> embeddings(Shape{n + 1, probe_width});
        for (auto& v : embeddings.data())
            v = rng.normal();
        std::vector<int> tags(n);
        for (auto& t : tags)
            t = static_cast<int>(rng.below(probe_labels));

        std::vector<ParseMode> modes{ParseMode::relaxed};
        if (with_ablations && c < 5)
            modes.insert(modes.end(), {ParseMode::straight_through, ParseMode::discrete});
        for (const ParseMode mode : modes)
        {
            GradcheckCase row;
            row.index = c;
            row.n = n;
            row.mode = mode;
            if (mode == ParseMode::discrete)
            {
                row.status = "non-differentiable";
                suite.cases.push_back(row);
                continue;
            }
            row.report = check_gradients(
                [&](Tape<double>& tape, Var<double> x) { return model.loss(tape, x, mode, tags); }, embeddings, h, tol
            );
            if (mode == ParseMode::relaxed)
            {
                row.status = row.report.pass ? "pass" : "fail";
                suite.pass = suite.pass && row.report.pass;
                suite.max_relative_error = std::max(suite.max_relative_error, row.report.max_relative_error);
            }
            else
                row.status = row.report.pass ? "pass" : "expected-mismatch";
            suite.cases.push_back(row);
        }
    }
    return suite;
}

std::vector<BenchRow> bench_parser(std::span<const std::size_t> lengths, std::size_t trials, double min_seconds, std::uint64_t seed)
{
    std::vector<BenchRow> rows;
    for (const std::size_t n : lengths)
        if (n == 0)
            throw InvalidArgument("bench: sentence length must be at least 1");
    Chart<double> chart;
    for (const std::size_t n : lengths)
    {
        Rng rng = Rng::substream(seed, n);
        const Tensor<double> scores = random_scores(n, rng);
        const Tensor<double> seed_adj = random_scores(n, rng);
        double sink = 0.0;
        BenchRow row;
        row.n = n;
        row.seconds = time_per_call([&] { sink += relaxed_pass(scores, chart, seed_adj); }, trials, min_seconds);
        row.split_points = chart.split_count();
        if (!std::isfinite(sink))
            throw NumericError("bench: non-finite parser output");
        rows.push_back(row);
    }
    return rows;
}

double loglog_slope(std::span<const BenchRow> rows)
{
    if (rows.size() < 2)
        throw InvalidArgument("slope needs at least two lengths");
    double mx = 0.0, my = 0.0;
    for (const auto& r : rows)
    {
        mx += std::log(static_cast<double>(r.n));
        my += std::log(r.seconds);
    }
    mx /= static_cast<double>(rows.size());
    my /= static_cast<double>(rows.size());
    double sxy = 0.0, sxx = 0.0;
    for (const auto& r : rows)
    {
        const double dx = std::log(static_cast<double>(r.n)) - mx;
        sxy += dx * (std::log(r.seconds) - my);
        sxx += dx * dx;
    }
    if (sxx == 0.0)
        throw InvalidArgument("slope needs at least two distinct lengths");
    return sxy / sxx;
}

ArenaComparison bench_arena(std::size_t sentences, std::size_t min_length, std::size_t max_length, std::size_t trials, std::uint64_t seed)
{
    if (sentences == 0 || min_length == 0 || min_length > max_length)
        throw InvalidArgument("bench_arena: need sentences >= 1 and 1 <= min_length <= max_length");
    Rng rng(seed);
    std::vector<Tensor<double>> scores, seeds;
    std::size_t longest = 0;
    double total = 0.0;
    for (std::size_t s = 0; s < sentences; ++s)
    {
        const std::size_t n = min_length + rng.below(max_length - min_length + 1);
        scores.push_back(random_scores(n, rng));
        seeds.push_back(random_scores(n, rng));
        longest = std::max(longest, n);
        total += static_cast<double>(n);
    }
    // Padded copies: the true scores in the top-left block, zeros elsewhere.
    std::vector<Tensor<double>> padded_scores, padded_seeds;
    for (std::size_t s = 0; s < sentences; ++s)
    {
        Tensor<double> w(Shape{longest + 1, longest + 1});
        Tensor<double> g(Shape{longest + 1, longest + 1});
        const std::size_t k = scores[s].rows();
        for (std::size_t r = 0; r < k; ++r)
            for (std::size_t c = 0; c < k; ++c)
            {
                w(r, c) = scores[s](r, c);
                g(r, c) = seeds[s](r, c);
            }
        padded_scores.push_back(std::move(w));
        padded_seeds.push_back(std::move(g));
    }

    Chart<double> arena;
    double sink = 0.0;
    ArenaComparison out;
    out.sentences = sentences;
    out.max_length = longest;
    out.mean_length = total / static_cast<double>(sentences);
    out.arena_seconds = time_per_call(
        [&] {
            for (std::size_t s = 0; s < sentences; ++s)
                sink += relaxed_pass(scores[s], arena, seeds[s]);
        },
        trials,
        0.05
    );
    out.padded_seconds = time_per_call(
        [&] {
            for (std::size_t s = 0; s < sentences; ++s)
                sink += relaxed_pass(padded_scores[s], arena, padded_seeds[s]);
        },
        trials,
        0.05
    );
    if (!std::isfinite(sink))
        throw NumericError("bench: non-finite parser output");
    out.speedup = out.padded_seconds / out.arena_seconds;
    return out;
}

}
