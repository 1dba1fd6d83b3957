#include "ltree/sampler/sampler.hpp"

#include <limits>
#include <algorithm>
#include <cmath>

#include "ltree/autodiff/ops.hpp"

namespace ltree
{

double gumbel_from_uniform(double u)
{
    u = std::clamp(u, 1e-12, 1.0 - 1e-12);
    return -std::log(-std::log(u));
}

template <typename S>
Tensor<S> gumbel_sample(const Shape& shape, Rng& rng)
{
    Tensor<S> g(shape);
    for (auto& v : g.data())
        v = static_cast<S>(gumbel_from_uniform(rng.uniform01()));
    return g;
}

namespace
{

template <typename S>
Var<S> perturbed(Var<S> scores, Rng& rng, Noise noise)
{
    if (noise == Noise::zero)
        return scores;
    Tape<S>& tape = scores.tape();
    return ad::add(scores, tape.constant(gumbel_sample<S>(scores.value().shape(), rng)));
}

// Column-wise softmax over h != m for m >= 1; column 0 stays zero.
template <typename S>
Tensor<S> head_softmax(const Tensor<S>& w, S tau)
{
    const std::size_t n = word_count(w);
    Tensor<S> t(w.shape());
    for (std::size_t m = 1; m <= n; ++m)
    {
        S best = -std::numeric_limits<S>::infinity();
        for (std::size_t h = 0; h <= n; ++h)
            if (h != m)
                best = std::max(best, w(h, m));
        S z{0};
        for (std::size_t h = 0; h <= n; ++h)
            if (h != m)
            {
                t(h, m) = std::exp((w(h, m) - best) / tau);
                z += t(h, m);
            }
        for (std::size_t h = 0; h <= n; ++h)
            t(h, m) /= z;
    }
    return t;
}

template <typename S>
Tensor<S> head_argmax(const Tensor<S>& w)
{
    const std::size_t n = word_count(w);
    Tensor<S> t(w.shape());
    for (std::size_t m = 1; m <= n; ++m)
    {
        std::size_t arg = m == 0 ? 1 : 0;
        for (std::size_t h = 0; h <= n; ++h)
            if (h != m && w(h, m) > w(arg, m))
                arg = h;
        t(arg, m) = S{1};
    }
    return t;
}

}

template <typename S>
Var<S> perturb_and_parse(Var<S> scores, Rng& rng, ParseMode mode, S temperature, Noise noise)
{
    return parse(perturbed(scores, rng, noise), mode, temperature);
}

template <typename S>
Var<S> latent_head_sample(Var<S> scores, Rng& rng, ParseMode mode, S temperature, Noise noise)
{
    if (!(temperature > S{0}))
        throw InvalidArgument("latent_head_sample: temperature must be positive");
    word_count(scores.value());
    Var<S> w = perturbed(scores, rng, noise);
    Tape<S>& tape = w.tape();
    const std::size_t pw = w.id();

    if (mode == ParseMode::discrete)
    {
        if (tape.training() && tape.requires_grad(pw))
            throw InvalidArgument("latent_head_sample: discrete mode has no gradient path on a training tape");
        return tape.constant(head_argmax(w.value()));
    }

    Tensor<S> soft = head_softmax(w.value(), temperature);
    Tensor<S> value = mode == ParseMode::relaxed ? soft : head_argmax(w.value());
    auto backward = [pw, temperature, soft = std::move(soft)](const Node<S>& self, Tape<S>& t) {
        Tensor<S>* g = t.grad_slot(pw);
        if (!g)
            return;
        const std::size_t n = soft.rows() - 1;
        for (std::size_t m = 1; m <= n; ++m)
        {
            S dot{0};
            for (std::size_t h = 0; h <= n; ++h)
                dot += soft(h, m) * self.adjoint(h, m);
            for (std::size_t h = 0; h <= n; ++h)
                if (h != m)
                    (*g)(h, m) += soft(h, m) * (self.adjoint(h, m) - dot) / temperature;
        }
    };
    const OpKind op = mode == ParseMode::relaxed ? OpKind::head_softmax : OpKind::head_straight_through;
    return tape.push(op, {pw}, std::move(value), backward);
}

template <typename S>
Tensor<S> left_chain(std::size_t n)
{
    if (n < 1)
        throw InvalidArgument("left_chain: n must be at least 1");
    Tensor<S> t(Shape{n + 1, n + 1});
    for (std::size_t m = 1; m <= n; ++m)
        t(m - 1, m) = S{1};
    return t;
}

template Tensor<float> gumbel_sample<float>(const Shape&, Rng&);
template Tensor<double> gumbel_sample<double>(const Shape&, Rng&);
template Var<float> perturb_and_parse(Var<float>, Rng&, ParseMode, float, Noise);
template Var<double> perturb_and_parse(Var<double>, Rng&, ParseMode, double, Noise);
template Var<float> latent_head_sample(Var<float>, Rng&, ParseMode, float, Noise);
template Var<double> latent_head_sample(Var<double>, Rng&, ParseMode, double, Noise);
template Tensor<float> left_chain<float>(std::size_t);
template Tensor<double> left_chain<double>(std::size_t);

}
