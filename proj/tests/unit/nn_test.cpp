#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "ltree/autodiff/gradcheck.hpp"
#include "ltree/autodiff/ops.hpp"
#include "ltree/nn/layers.hpp"
#include "ltree/nn/optim.hpp"
#include "oracles.hpp"

using namespace ltree;

namespace
{

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Textbook LSTM with gate order (input, forget, candidate, output) and zero
// initial states, one scalar at a time.
oracle::Matrix reference_lstm(const oracle::Matrix& x, const ParameterStore<double>& store, const std::string& prefix, bool reverse)
{
    const oracle::Matrix wx = oracle::to_matrix(store.get(prefix + ".Wx").value);
    const oracle::Matrix wh = oracle::to_matrix(store.get(prefix + ".Wh").value);
    const oracle::Matrix b = oracle::to_matrix(store.get(prefix + ".b").value);
    const std::size_t hidden = wh.size();
    const std::size_t steps = x.size();
    oracle::Matrix out(steps, std::vector<double>(hidden));
    std::vector<double> h(hidden, 0.0), c(hidden, 0.0);
    for (std::size_t s = 0; s < steps; ++s)
    {
        const std::size_t t = reverse ? steps - 1 - s : s;
        std::vector<double> a(4 * hidden);
        for (std::size_t k = 0; k < 4 * hidden; ++k)
        {
            double acc = b[0][k];
            for (std::size_t d = 0; d < x[t].size(); ++d)
                acc += x[t][d] * wx[d][k];
            for (std::size_t d = 0; d < hidden; ++d)
                acc += h[d] * wh[d][k];
            a[k] = acc;
        }
        for (std::size_t k = 0; k < hidden; ++k)
        {
            const double i = sigmoid(a[k]);
            const double f = sigmoid(a[hidden + k]);
            const double g = std::tanh(a[2 * hidden + k]);
            const double o = sigmoid(a[3 * hidden + k]);
            c[k] = f * c[k] + i * g;
            h[k] = o * std::tanh(c[k]);
            out[t][k] = h[k];
        }
    }
    return out;
}

void randomize(ParameterStore<double>& store, Rng& rng, double scale = 0.5)
{
    for (std::size_t i = 0; i < store.size(); ++i)
        for (auto& v : store[i].value.data())
            v = scale * rng.normal();
}

}

TEST_SUITE("nn")
{
    TEST_CASE("identity MLP and zero MLP")
    {
        Rng rng(1);
        ParameterStore<double> store;
        nn::Mlp<double> mlp(store, "m", {3, {{3, nn::Activation::none, true}}}, rng);
        store.get("m.W0").value = Tensor<double>::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
        Tape<double> tape;
        const Tensor<double> x = Tensor<double>::matrix(2, 3, {1, -2, 3, 0.5, 0, -1});
        CHECK(mlp.forward(tape, tape.input(x)).value() == x);

        ParameterStore<double> zero_store;
        nn::Mlp<double> zero(zero_store, "z", {3, {{4, nn::Activation::relu, true}}}, rng);
        zero_store.get("z.W0").value.fill(0.0);
        for (double v : zero.forward(tape, tape.input(x)).value().data())
            CHECK(v == 0.0);
    }

    TEST_CASE("two-layer MLP matches a hand-composed reference")
    {
        Rng rng(2);
        ParameterStore<double> store;
        nn::Mlp<double> mlp(store, "m", {4, {{5, nn::Activation::relu, true}, {3, nn::Activation::none, false}}}, rng);
        randomize(store, rng);
        const Tensor<double> x = oracle::gaussian_matrix(6, 4, rng);
        Tape<double> tape;
        const Tensor<double> y = mlp.forward(tape, tape.input(x)).value();

        const auto w0 = oracle::to_matrix(store.get("m.W0").value);
        const auto b0 = oracle::to_matrix(store.get("m.b0").value)[0];
        const auto w1 = oracle::to_matrix(store.get("m.W1").value);
        CHECK(store.find("m.b1") == nullptr);
        const auto rows = oracle::to_matrix(x);
        for (std::size_t r = 0; r < rows.size(); ++r)
        {
            const auto ref = oracle::affine(oracle::affine(rows[r], w0, &b0, true), w1, nullptr, false);
            for (std::size_t c = 0; c < ref.size(); ++c)
                CHECK(std::abs(y(r, c) - ref[c]) < 1e-6);
        }
    }

    TEST_CASE("MLP width mismatch is an error")
    {
        Rng rng(3);
        ParameterStore<double> store;
        nn::Mlp<double> mlp(store, "m", {4, {{2, nn::Activation::relu, true}}}, rng);
        Tape<double> tape;
        CHECK_THROWS_AS(mlp.forward(tape, tape.input(Tensor<double>(Shape{2, 3}))), ShapeError);
        CHECK_THROWS_AS(nn::Mlp<double>(store, "e", {4, {}}, rng), InvalidArgument);
    }

    TEST_CASE("LSTM matches a scalar reference in both directions")
    {
        Rng rng(4);
        ParameterStore<double> store;
        nn::Lstm<double> lstm(store, "l", 3, 4, rng);
        randomize(store, rng);
        const Tensor<double> x = oracle::gaussian_matrix(7, 3, rng);
        for (bool reverse : {false, true})
        {
            Tape<double> tape;
            const Tensor<double> y = lstm.forward(tape, tape.input(x), reverse).value();
            const auto ref = reference_lstm(oracle::to_matrix(x), store, "l", reverse);
            for (std::size_t t = 0; t < ref.size(); ++t)
                for (std::size_t k = 0; k < ref[t].size(); ++k)
                    CHECK(std::abs(y(t, k) - ref[t][k]) < 1e-12);
        }
    }

    TEST_CASE("LSTM gradients match finite differences")
    {
        Rng rng(5);
        ParameterStore<double> store;
        nn::BiLstm<double> bilstm(store, "b", {2, 3, 2}, rng);
        randomize(store, rng);
        const Tensor<double> x = oracle::gaussian_matrix(5, 2, rng);
        const Tensor<double> r = oracle::gaussian_matrix(5, 6, rng);
        auto loss = [&](Tape<double>& tape, Var<double> in) {
            return ad::sum(ad::mul(bilstm.forward(tape, in), tape.constant(r)));
        };
        CHECK(check_gradients(loss, x).pass);

        Tape<double> tape;
        const Gradients<double> grads = tape.backward(loss(tape, tape.constant(x)));
        for (std::size_t i = 0; i < store.size(); ++i)
        {
            Parameter<double>& p = store[i];
            const Tensor<double> saved = p.value;
            const Tensor<double> numeric = oracle::numeric_gradient(
                [&](const Tensor<double>& v) {
                    p.value = v;
                    Tape<double> t;
                    const double out = loss(t, t.constant(x)).value().item();
                    p.value = saved;
                    return out;
                },
                saved,
                1e-5
            );
            const Tensor<double>* g = grads.find(p);
            REQUIRE(g != nullptr);
            INFO("parameter " << p.name);
            CHECK(oracle::max_relative_error(*g, numeric) < 1e-6);
        }
    }

    TEST_CASE("BiLSTM shapes, zero weights and empty input")
    {
        Rng rng(6);
        ParameterStore<double> store;
        nn::BiLstm<double> bilstm(store, "b", {2, 5, 3}, rng);
        Tape<double> tape;
        CHECK(bilstm.forward(tape, tape.input(Tensor<double>(Shape{1, 3}))).value().shape() == Shape{1, 10});
        CHECK_THROWS_AS(bilstm.forward(tape, tape.input(Tensor<double>(Shape{0, 3}))), InvalidArgument);

        for (std::size_t i = 0; i < store.size(); ++i)
            store[i].value.fill(0.0);
        const Tensor<double> x = oracle::gaussian_matrix(4, 3, rng);
        for (double v : bilstm.forward(tape, tape.input(x)).value().data())
            CHECK(v == 0.0);
    }

    TEST_CASE("reversing the input swaps the directions of a single stack")
    {
        Rng rng(7);
        ParameterStore<double> store;
        nn::BiLstm<double> bilstm(store, "b", {1, 4, 3}, rng);
        randomize(store, rng);
        const Tensor<double> x = oracle::gaussian_matrix(6, 3, rng);
        Tensor<double> reversed(x.shape());
        for (std::size_t t = 0; t < 6; ++t)
            for (std::size_t d = 0; d < 3; ++d)
                reversed(t, d) = x(5 - t, d);

        // With both directions sharing parameters, reversing the input swaps
        // the halves and reverses them in time.
        for (const char* part : {".Wx", ".Wh", ".b"})
            store.get(std::string("b.stack0.bwd") + part).value = store.get(std::string("b.stack0.fwd") + part).value;
        Tape<double> tape;
        const Tensor<double> y = bilstm.forward(tape, tape.input(x)).value();
        const Tensor<double> z = bilstm.forward(tape, tape.input(reversed)).value();
        for (std::size_t t = 0; t < 6; ++t)
            for (std::size_t k = 0; k < 4; ++k)
            {
                CHECK(std::abs(z(5 - t, k) - y(t, 4 + k)) < 1e-12);
                CHECK(std::abs(z(5 - t, 4 + k) - y(t, k)) < 1e-12);
            }
        const auto fwd = reference_lstm(oracle::to_matrix(x), store, "b.stack0.fwd", false);
        const auto bwd = reference_lstm(oracle::to_matrix(x), store, "b.stack0.bwd", true);
        for (std::size_t t = 0; t < 6; ++t)
            for (std::size_t k = 0; k < 4; ++k)
            {
                CHECK(std::abs(y(t, k) - fwd[t][k]) < 1e-12);
                CHECK(std::abs(y(t, 4 + k) - bwd[t][k]) < 1e-12);
            }
    }

    TEST_CASE("Adam first step, zero gradients and lr = 0")
    {
        ParameterStore<double> store;
        store.add("p", Tensor<double>::scalar(1.0));
        nn::AdamState<double> state(store, {1e-3, 0.9, 0.999, 1e-8});
        nn::GradientBuffer<double> grads(store);
        grads[0][0] = 1.0;
        nn::adam_step(state, grads, store);
        CHECK(store[0].value[0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-8));
        CHECK(state.step == 1);

        grads[0][0] = 0.0;
        ParameterStore<double> still;
        still.add("p", Tensor<double>::scalar(2.0));
        nn::AdamState<double> fresh(still, {1e-3, 0.9, 0.999, 1e-8});
        for (int i = 0; i < 5; ++i)
            nn::adam_step(fresh, grads, still);
        CHECK(still[0].value[0] == 2.0);

        ParameterStore<double> frozen;
        frozen.add("p", Tensor<double>::matrix(1, 2, {0.3, -0.7}));
        nn::AdamState<double> zero_lr(frozen, {0.0, 0.9, 0.999, 1e-8});
        nn::GradientBuffer<double> g2(frozen);
        g2[0][0] = 5.0;
        g2[0][1] = -1.0;
        const Tensor<double> before = frozen[0].value;
        nn::adam_step(zero_lr, g2, frozen);
        CHECK(frozen[0].value == before);
    }

    TEST_CASE("Adam matches a hand-rolled recurrence")
    {
        ParameterStore<double> store;
        store.add("p", Tensor<double>::scalar(0.5));
        nn::AdamState<double> state(store, {0.01, 0.9, 0.999, 1e-8});
        oracle::ScalarAdam ref{0.01, 0.9, 0.999, 1e-8};
        double expected = 0.5;
        nn::GradientBuffer<double> grads(store);
        for (double g : {0.3, -1.2, 2.5})
        {
            grads[0][0] = g;
            nn::adam_step(state, grads, store);
            expected = ref.step(expected, g);
            CHECK(std::abs(store[0].value[0] - expected) < 1e-10);
        }
        CHECK(state.step == 3);
    }

    TEST_CASE("Adam refuses non-finite gradients")
    {
        ParameterStore<double> store;
        store.add("p", Tensor<double>::scalar(0.5));
        nn::AdamState<double> state(store, {});
        nn::GradientBuffer<double> grads(store);
        grads[0][0] = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(nn::adam_step(state, grads, store), NumericError);
    }

    TEST_CASE("gradient clipping")
    {
        ParameterStore<double> store;
        store.add("a", Tensor<double>::matrix(1, 2, {0, 0}));
        nn::GradientBuffer<double> grads(store);
        grads[0][0] = 3.0;
        grads[0][1] = 4.0;
        nn::clip_gradient_norm(grads, 5.0);
        CHECK(grads[0][0] == 3.0);
        CHECK(grads[0][1] == 4.0);

        grads[0][0] = 6.0;
        grads[0][1] = 8.0;
        nn::clip_gradient_norm(grads, 5.0);
        CHECK(grads[0][0] == doctest::Approx(3.0));
        CHECK(grads[0][1] == doctest::Approx(4.0));

        Rng rng(8);
        ParameterStore<double> many;
        many.add("x", Tensor<double>(Shape{4, 7}));
        many.add("y", Tensor<double>(Shape{3, 1}));
        nn::GradientBuffer<double> big(many);
        for (std::size_t i = 0; i < big.size(); ++i)
            for (auto& v : big[i].data())
                v = 10.0 * rng.normal();
        nn::clip_gradient_norm(big, 5.0);
        double norm = 0.0;
        for (std::size_t i = 0; i < big.size(); ++i)
            for (double v : big[i].data())
                norm += v * v;
        CHECK(std::sqrt(norm) <= 5.0 + 1e-9);

        // Idempotent.
        std::vector<double> once;
        for (std::size_t i = 0; i < big.size(); ++i)
            once.insert(once.end(), big[i].data().begin(), big[i].data().end());
        nn::clip_gradient_norm(big, 5.0);
        std::vector<double> twice;
        for (std::size_t i = 0; i < big.size(); ++i)
            twice.insert(twice.end(), big[i].data().begin(), big[i].data().end());
        CHECK(once == twice);
        CHECK_THROWS_AS(nn::clip_gradient_norm(big, 0.0), InvalidArgument);
    }

    TEST_CASE("learning-rate schedule")
    {
        nn::LrSchedule rising(1e-4);
        for (double s : {0.5, 0.6, 0.7})
            CHECK_FALSE(rising.step(s).reload_best);
        CHECK(rising.learning_rate() == 1e-4);

        nn::LrSchedule stale(1e-4, 5, 0.9);
        CHECK(stale.step(0.9).improved);
        for (int epoch = 2; epoch <= 5; ++epoch)
            CHECK_FALSE(stale.step(0.5).reload_best);
        const auto decision = stale.step(0.5);
        CHECK(decision.reload_best);
        CHECK(decision.learning_rate == doctest::Approx(0.9e-4));
        CHECK(stale.best_epoch() == 1);

        nn::LrSchedule monotone(1e-4);
        for (int epoch = 1; epoch <= 100; ++epoch)
            monotone.step(epoch * 0.001);
        CHECK(monotone.learning_rate() == 1e-4);
    }

    TEST_CASE("dropout")
    {
        Rng rng(9);
        Tape<double> train;
        auto ones = train.input(Tensor<double>(Shape{1000, 1000}, 1.0));
        CHECK(nn::dropout(ones, 0.0, rng).value() == ones.value());
        const Tensor<double> dropped = nn::dropout(ones, 0.2, rng).value();
        double mean = 0.0;
        for (double v : dropped.data())
            mean += v;
        mean /= static_cast<double>(dropped.size());
        CHECK(std::abs(mean - 1.0) < 0.01);

        Tape<double> inference(TapeMode::inference);
        auto x = inference.input(Tensor<double>(Shape{3, 3}, 2.0));
        CHECK(nn::dropout(x, 0.5, rng).value() == x.value());
        CHECK_THROWS_AS(nn::dropout(x, 1.0, rng), InvalidArgument);
    }

    TEST_CASE("Glorot-uniform bounds")
    {
        Rng rng(10);
        const Tensor<double> w = nn::glorot_uniform<double>(30, 20, rng);
        const double a = std::sqrt(6.0 / 50.0);
        for (double v : w.data())
            CHECK(std::abs(v) <= a);
    }
}
