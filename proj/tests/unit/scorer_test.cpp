#include <cmath>
#include <vector>

#include "doctest.h"
#include "ltree/autodiff/ops.hpp"
#include "ltree/scorer/scorer.hpp"
#include "oracles.hpp"

using namespace ltree;

namespace
{

ScorerSpec two_layer_spec(std::size_t input, std::size_t width, bool bias, std::size_t radius = 3)
{
    nn::MlpSpec mlp{input, {{width, nn::Activation::relu, true}, {width, nn::Activation::relu, true}}};
    return {mlp, mlp, bias, {radius}};
}

}

TEST_SUITE("scorer")
{
    TEST_CASE("distance buckets")
    {
        DistanceBuckets b{10};
        CHECK(b.count() == 23);
        CHECK(b.bucket(-11) == 0);
        CHECK(b.bucket(-100) == 0);
        CHECK(b.bucket(-10) == 1);
        CHECK(b.bucket(0) == 11);
        CHECK(b.bucket(10) == 21);
        CHECK(b.bucket(11) == 22);
    }

    TEST_CASE("zero projections and zero bias give zero scores")
    {
        Rng rng(1);
        ParameterStore<double> store;
        ArcScorer<double> scorer(store, "s", two_layer_spec(4, 5, true), rng);
        for (std::size_t i = 0; i < store.size(); ++i)
            store[i].value.fill(0.0);
        Tape<double> tape;
        const Tensor<double> w = scorer.forward(tape, tape.input(oracle::gaussian_matrix(6, 4, rng))).value();
        CHECK(w.shape() == Shape{6, 6});
        for (double v : w.data())
            CHECK(v == 0.0);
    }

    TEST_CASE("identity projections on one-hot embeddings")
    {
        Rng rng(2);
        ParameterStore<double> store;
        nn::MlpSpec identity{3, {{3, nn::Activation::none, false}}};
        ArcScorer<double> scorer(store, "s", {identity, identity, true, {1}}, rng);
        const Tensor<double> eye = Tensor<double>::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
        store.get("s.head.W0").value = eye;
        store.get("s.mod.W0").value = eye;
        // Buckets for radius 1: <-1, -1, 0, +1, >+1.
        store.get("s.distance_bias").value = Tensor<double>::matrix(5, 1, {10, 20, 30, 40, 50});
        const Tensor<double> e = Tensor<double>::matrix(3, 3, {1, 0, 0, 0, 1, 0, 1, 0, 0});
        Tape<double> tape;
        const Tensor<double> w = scorer.forward(tape, tape.input(e)).value();
        CHECK(w(0, 2) == 1.0 + 10.0); // same basis vector, h - m = -2
        CHECK(w(2, 0) == 1.0 + 50.0);
        CHECK(w(0, 1) == 20.0);
        CHECK(w(1, 0) == 40.0);
        CHECK(w(1, 2) == 20.0);
    }

    TEST_CASE("scores equal a naive per-pair recomputation")
    {
        Rng rng(3);
        ParameterStore<double> store;
        ArcScorer<double> scorer(store, "s", two_layer_spec(4, 6, true), rng);
        for (std::size_t i = 0; i < store.size(); ++i)
            for (auto& v : store[i].value.data())
                v = 0.5 * rng.normal();
        const Tensor<double> e = oracle::gaussian_matrix(9, 4, rng);
        Tape<double> tape;
        const Tensor<double> w = scorer.forward(tape, tape.input(e)).value();

        auto project = [&](const std::string& prefix, const std::vector<double>& x) {
            const auto b0 = oracle::to_matrix(store.get(prefix + ".b0").value)[0];
            const auto b1 = oracle::to_matrix(store.get(prefix + ".b1").value)[0];
            const auto hidden = oracle::affine(x, oracle::to_matrix(store.get(prefix + ".W0").value), &b0, true);
            return oracle::affine(hidden, oracle::to_matrix(store.get(prefix + ".W1").value), &b1, true);
        };
        const auto rows = oracle::to_matrix(e);
        const auto& bias = store.get("s.distance_bias").value;
        for (std::size_t h = 0; h < 9; ++h)
            for (std::size_t m = 1; m < 9; ++m)
            {
                if (h == m)
                    continue;
                const auto ph = project("s.head", rows[h]);
                const auto pm = project("s.mod", rows[m]);
                double dot = 0.0;
                for (std::size_t k = 0; k < ph.size(); ++k)
                    dot += ph[k] * pm[k];
                const long d = static_cast<long>(h) - static_cast<long>(m);
                const std::size_t bucket = d < -3 ? 0 : d > 3 ? 8 : static_cast<std::size_t>(d + 4);
                CHECK(std::abs(w(h, m) - (dot + bias(bucket, 0))) < 1e-6);
            }
    }

    TEST_CASE("a score depends only on its own two embeddings")
    {
        Rng rng(4);
        ParameterStore<double> store;
        ArcScorer<double> scorer(store, "s", two_layer_spec(3, 4, true), rng);
        Tensor<double> e = oracle::gaussian_matrix(6, 3, rng);
        Tape<double> tape;
        const Tensor<double> before = scorer.forward(tape, tape.input(e)).value();
        for (std::size_t d = 0; d < 3; ++d)
            e(4, d) += 1.0;
        const Tensor<double> after = scorer.forward(tape, tape.input(e)).value();
        for (std::size_t h = 0; h < 6; ++h)
            for (std::size_t m = 0; m < 6; ++m)
                if (h != 4 && m != 4)
                    CHECK(before(h, m) == after(h, m));
    }

    TEST_CASE("gradients reach both projections and the bias table")
    {
        Rng rng(5);
        ParameterStore<double> store;
        ArcScorer<double> scorer(store, "s", two_layer_spec(3, 4, true), rng);
        for (std::size_t i = 0; i < store.size(); ++i)
            for (auto& v : store[i].value.data())
                v = 0.5 * rng.normal();
        Tape<double> tape;
        const Tensor<double> r = oracle::gaussian_matrix(6, 6, rng);
        const auto grads = tape.backward(
            ad::sum(ad::mul(scorer.forward(tape, tape.input(oracle::gaussian_matrix(6, 3, rng))), tape.constant(r)))
        );
        for (std::size_t i = 0; i < store.size(); ++i)
        {
            const Tensor<double>* g = grads.find(store[i]);
            REQUIRE(g != nullptr);
            double norm = 0.0;
            for (double v : g->data())
                norm += v * v;
            INFO("parameter " << store[i].name);
            CHECK(norm > 0.0);
        }
    }

    TEST_CASE("parameter gradients match finite differences")
    {
        Rng rng(8);
        ParameterStore<double> store;
        ArcScorer<double> scorer(store, "s", two_layer_spec(3, 4, true, 2), rng);
        for (std::size_t i = 0; i < store.size(); ++i)
            for (auto& v : store[i].value.data())
                v = 0.5 * rng.normal();
        const Tensor<double> e = oracle::gaussian_matrix(7, 3, rng);
        const Tensor<double> r = oracle::gaussian_matrix(7, 7, rng);
        auto loss = [&] {
            Tape<double> tape;
            const Tensor<double> w = scorer.forward(tape, tape.input(e)).value();
            double s = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i)
                s += w[i] * r[i];
            return s;
        };
        Tape<double> tape;
        const auto grads = tape.backward(ad::sum(ad::mul(scorer.forward(tape, tape.input(e)), tape.constant(r))));
        for (std::size_t i = 0; i < store.size(); ++i)
        {
            Tensor<double>& value = store[i].value;
            const Tensor<double> saved = value;
            const Tensor<double> numeric = oracle::numeric_gradient(
                [&](const Tensor<double>& p) {
                    value = p;
                    return loss();
                },
                saved,
                1e-5
            );
            value = saved;
            INFO("parameter " << store[i].name);
            CHECK(oracle::max_relative_error(*grads.find(store[i]), numeric) < 1e-6);
        }
    }

    TEST_CASE("mismatched projection widths are rejected")
    {
        Rng rng(6);
        ParameterStore<double> store;
        ScorerSpec spec = two_layer_spec(3, 4, true);
        spec.modifier.layers.back().width = 5;
        CHECK_THROWS_AS(ArcScorer<double>(store, "s", spec, rng), ShapeError);
    }

    TEST_CASE("bias can be disabled")
    {
        Rng rng(7);
        ParameterStore<double> store;
        ArcScorer<double> scorer(store, "s", two_layer_spec(3, 4, false), rng);
        CHECK(store.find("s.distance_bias") == nullptr);
    }
}
