#include "ltree/nn/layers.hpp"

#include <cmath>
#include <memory>

namespace ltree::nn
{

template <typename S>
Tensor<S> glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng)
{
    const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Tensor<S> t(Shape{rows, cols});
    for (auto& v : t.data())
        v = static_cast<S>(rng.uniform(-a, a));
    return t;
}

template <typename S>
Mlp<S>::Mlp(ParameterStore<S>& store, const std::string& prefix, MlpSpec spec, Rng& rng) :
    _spec(std::move(spec))
{
    if (_spec.layers.empty())
        throw InvalidArgument("MLP " + prefix + " needs at least one layer");
    std::size_t in = _spec.input;
    for (std::size_t l = 0; l < _spec.layers.size(); ++l)
    {
        const auto& layer = _spec.layers[l];
        _weights.push_back(&store.add(prefix + ".W" + std::to_string(l), glorot_uniform<S>(in, layer.width, rng)));
        _biases.push_back(layer.bias ? &store.add(prefix + ".b" + std::to_string(l), Tensor<S>(Shape{1, layer.width})) : nullptr);
        in = layer.width;
    }
}

template <typename S>
Var<S> Mlp<S>::forward(Tape<S>& tape, Var<S> input) const
{
    if (input.value().cols() != _spec.input)
        throw ShapeError(
            "mlp: input width " + std::to_string(input.value().cols()) + " does not match first layer width " + std::to_string(_spec.input)
        );
    Var<S> x = input;
    for (std::size_t l = 0; l < _spec.layers.size(); ++l)
    {
        x = ad::matmul(x, tape.parameter(*_weights[l]));
        if (_biases[l])
            x = ad::add(x, tape.parameter(*_biases[l]));
        if (_spec.layers[l].activation == Activation::relu)
            x = ad::relu(x);
    }
    return x;
}

template <typename S>
Lstm<S>::Lstm(ParameterStore<S>& store, const std::string& prefix, std::size_t input, std::size_t hidden, Rng& rng) :
    _input(input),
    _hidden(hidden)
{
    _wx = &store.add(prefix + ".Wx", glorot_uniform<S>(input, 4 * hidden, rng));
    _wh = &store.add(prefix + ".Wh", glorot_uniform<S>(hidden, 4 * hidden, rng));
    _b = &store.add(prefix + ".b", Tensor<S>(Shape{1, 4 * hidden}));
}

namespace
{

// sigma(x) = (1 + tanh(x / 2)) / 2: stable for any x and vectorized by Eigen.
template <typename Derived>
auto sigmoid_array(const Eigen::ArrayBase<Derived>& x)
{
    using S = typename Derived::Scalar;
    return S(0.5) * ((S(0.5) * x).tanh() + S(1));
}

template <typename S>
struct LstmCache
{
    RowMatrix<S> gates; // steps x 4h, post-activation (i, f, g, o)
    RowMatrix<S> cells; // steps x h
};

}

template <typename S>
Var<S> Lstm<S>::forward(Tape<S>& tape, Var<S> sequence, bool reverse) const
{
    const Tensor<S>& x = sequence.value();
    if (x.rank() != 2 || x.cols() != _input)
        throw ShapeError("lstm: expected (steps x " + std::to_string(_input) + ") input, got " + shape_string(x.shape()));
    const std::size_t steps = x.rows();
    const std::size_t h = _hidden;

    Var<S> wx = tape.parameter(*_wx);
    Var<S> wh = tape.parameter(*_wh);
    Var<S> b = tape.parameter(*_b);
    const auto Wh = wh.value().mat();

    auto cache = std::make_shared<LstmCache<S>>();
    cache->gates.resize(steps, 4 * h);
    cache->cells.resize(steps, h);
    cache->gates.noalias() = x.mat() * wx.value().mat();
    cache->gates.rowwise() += b.value().mat().row(0);

    Tensor<S> out(Shape{steps, h});
    Eigen::Matrix<S, 1, Eigen::Dynamic> hprev = Eigen::Matrix<S, 1, Eigen::Dynamic>::Zero(h);
    Eigen::Matrix<S, 1, Eigen::Dynamic> cprev = Eigen::Matrix<S, 1, Eigen::Dynamic>::Zero(h);
    for (std::size_t s = 0; s < steps; ++s)
    {
        const std::size_t t = reverse ? steps - 1 - s : s;
        auto a = cache->gates.row(t);
        a.noalias() += hprev * Wh;
        auto ifo = a.array();
        ifo.segment(0, 2 * h) = sigmoid_array(ifo.segment(0, 2 * h));
        ifo.segment(2 * h, h) = ifo.segment(2 * h, h).tanh();
        ifo.segment(3 * h, h) = sigmoid_array(ifo.segment(3 * h, h));
        auto c = cache->cells.row(t).array();
        c = ifo.segment(h, h) * cprev.array() + ifo.segment(0, h) * ifo.segment(2 * h, h);
        auto o = out.mat().row(t).array();
        o = ifo.segment(3 * h, h) * c.tanh();
        cprev = cache->cells.row(t);
        hprev = out.mat().row(t);
    }

    const std::size_t px = sequence.id(), pwx = wx.id(), pwh = wh.id(), pb = b.id();
    return tape.push(
        OpKind::lstm,
        {px, pwx, pwh, pb},
        std::move(out),
        [px, pwx, pwh, pb, h, steps, reverse, cache](const Node<S>& self, Tape<S>& tape) {
            const auto& G = cache->gates;
            const auto& C = cache->cells;
            const auto Hout = self.value.mat();
            const auto dH = self.adjoint.mat();
            const auto WhT = tape.value(pwh).mat().transpose();
            Tensor<S>* gwh = tape.grad_slot(pwh);

            RowMatrix<S> dA(steps, 4 * h);
            Eigen::Matrix<S, 1, Eigen::Dynamic> dh_next = Eigen::Matrix<S, 1, Eigen::Dynamic>::Zero(h);
            Eigen::Matrix<S, 1, Eigen::Dynamic> dc_next = Eigen::Matrix<S, 1, Eigen::Dynamic>::Zero(h);
            using Row = Eigen::Array<S, 1, Eigen::Dynamic>;
            const RowMatrix<S> TC = C.array().tanh().matrix();
            const Row zero = Row::Zero(h);
            for (std::size_t s = steps; s-- > 0;)
            {
                const std::size_t t = reverse ? steps - 1 - s : s;
                const std::size_t tprev = reverse ? t + 1 : t - 1;
                const auto gt = G.row(t).array();
                const auto i = gt.segment(0, h), f = gt.segment(h, h), g = gt.segment(2 * h, h), o = gt.segment(3 * h, h);
                const auto tc = TC.row(t).array();
                const Row cp = s == 0 ? zero : Row(C.row(tprev).array());
                const Row dh = dH.row(t).array() + dh_next.array();
                const Row dc = dc_next.array() + dh * o * (S{1} - tc * tc);
                auto da = dA.row(t).array();
                da.segment(0, h) = dc * g * i * (S{1} - i);
                da.segment(h, h) = dc * cp * f * (S{1} - f);
                da.segment(2 * h, h) = dc * i * (S{1} - g * g);
                da.segment(3 * h, h) = dh * tc * o * (S{1} - o);
                dc_next = (dc * f).matrix();
                dh_next.noalias() = dA.row(t) * WhT;
            }
            if (gwh && steps > 1)
            {
                // Step t consumed the hidden state of its predecessor.
                if (reverse)
                    gwh->mat().noalias() += Hout.bottomRows(steps - 1).transpose() * dA.topRows(steps - 1);
                else
                    gwh->mat().noalias() += Hout.topRows(steps - 1).transpose() * dA.bottomRows(steps - 1);
            }
            if (Tensor<S>* gx = tape.grad_slot(px))
                gx->mat().noalias() += dA * tape.value(pwx).mat().transpose();
            if (Tensor<S>* gwx = tape.grad_slot(pwx))
                gwx->mat().noalias() += tape.value(px).mat().transpose() * dA;
            if (Tensor<S>* gb = tape.grad_slot(pb))
                gb->mat().row(0) += dA.colwise().sum();
        }
    );
}

template <typename S>
BiLstm<S>::BiLstm(ParameterStore<S>& store, const std::string& prefix, BiLstmSpec spec, Rng& rng) :
    _spec(spec)
{
    if (_spec.stacks == 0)
        throw InvalidArgument("BiLSTM needs at least one stack");
    std::size_t in = _spec.input;
    for (std::size_t s = 0; s < _spec.stacks; ++s)
    {
        const std::string p = prefix + ".stack" + std::to_string(s);
        _forward.emplace_back(store, p + ".fwd", in, _spec.hidden, rng);
        _backward.emplace_back(store, p + ".bwd", in, _spec.hidden, rng);
        in = 2 * _spec.hidden;
    }
}

template <typename S>
Var<S> BiLstm<S>::forward(Tape<S>& tape, Var<S> sequence) const
{
    if (sequence.value().rows() == 0 || sequence.value().rank() != 2)
        throw InvalidArgument("bilstm: empty input sequence");
    Var<S> x = sequence;
    for (std::size_t s = 0; s < _spec.stacks; ++s)
        x = ad::concat_cols(_forward[s].forward(tape, x, false), _backward[s].forward(tape, x, true));
    return x;
}

template <typename S>
Var<S> dropout(Var<S> input, double rate, Rng& rng)
{
    if (!(rate >= 0.0 && rate < 1.0))
        throw InvalidArgument("dropout rate must be in [0, 1), got " + std::to_string(rate));
    Tape<S>& tape = input.tape();
    if (!tape.training() || rate == 0.0)
        return input;
    Tensor<S> mask(input.value().shape());
    const S keep = static_cast<S>(1.0 / (1.0 - rate));
    for (auto& m : mask.data())
        m = rng.uniform01() < rate ? S{0} : keep;
    return ad::mul(input, tape.constant(std::move(mask)));
}

template Tensor<float> glorot_uniform<float>(std::size_t, std::size_t, Rng&);
template Tensor<double> glorot_uniform<double>(std::size_t, std::size_t, Rng&);
template Var<float> dropout(Var<float>, double, Rng&);
template Var<double> dropout(Var<double>, double, Rng&);

template class Mlp<float>;
template class Mlp<double>;
template class Lstm<float>;
template class Lstm<double>;
template class BiLstm<float>;
template class BiLstm<double>;

}
