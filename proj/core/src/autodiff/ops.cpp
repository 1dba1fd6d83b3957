#include "ltree/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ltree::ad
{

namespace
{

template <typename S>
[[noreturn]] void shape_mismatch(OpKind op, const Tensor<S>& a, const Tensor<S>& b)
{
    throw ShapeError(
        std::string(op_name(op)) + ": incompatible shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape())
    );
}

template <typename S>
[[noreturn]] void shape_invalid(OpKind op, const Tensor<S>& a, const std::string& what)
{
    throw ShapeError(std::string(op_name(op)) + ": " + what + " for shape " + shape_string(a.shape()));
}

template <typename S>
void same_tape(Var<S> a, Var<S> b, OpKind op)
{
    if (&a.tape() != &b.tape())
        throw InvalidArgument(std::string(op_name(op)) + ": operands live on different tapes");
}

// Applies an elementwise unary map; `derivative(x, y)` gives dy/dx.
template <typename S, typename F, typename D>
Var<S> unary(Var<S> a, OpKind op, F f, D derivative)
{
    const Tensor<S>& x = a.value();
    Tensor<S> y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i)
        y[i] = f(x[i]);
    const std::size_t pa = a.id();
    return a.tape().push(op, {pa}, std::move(y), [pa, derivative](const Node<S>& self, Tape<S>& tape) {
        if (Tensor<S>* g = tape.grad_slot(pa))
        {
            const Tensor<S>& xv = tape.value(pa);
            for (std::size_t i = 0; i < xv.size(); ++i)
                (*g)[i] += self.adjoint[i] * derivative(xv[i], self.value[i]);
        }
    });
}

}

template <typename S>
Var<S> matmul(Var<S> a, Var<S> b)
{
    same_tape(a, b, OpKind::matmul);
    const Tensor<S>& x = a.value();
    const Tensor<S>& y = b.value();
    if (x.cols() != y.rows())
        shape_mismatch(OpKind::matmul, x, y);
    Tensor<S> out(Shape{x.rows(), y.cols()});
    out.mat().noalias() = x.mat() * y.mat();
    const std::size_t pa = a.id(), pb = b.id();
    return a.tape().push(OpKind::matmul, {pa, pb}, std::move(out), [pa, pb](const Node<S>& self, Tape<S>& tape) {
        if (Tensor<S>* ga = tape.grad_slot(pa))
            ga->mat().noalias() += self.adjoint.mat() * tape.value(pb).mat().transpose();
        if (Tensor<S>* gb = tape.grad_slot(pb))
            gb->mat().noalias() += tape.value(pa).mat().transpose() * self.adjoint.mat();
    });
}

template <typename S>
Var<S> add(Var<S> a, Var<S> b)
{
    same_tape(a, b, OpKind::add);
    const Tensor<S>& x = a.value();
    const Tensor<S>& y = b.value();
    const std::size_t pa = a.id(), pb = b.id();
    if (x.shape() == y.shape())
    {
        Tensor<S> out = x;
        out.mat() += y.mat();
        return a.tape().push(OpKind::add, {pa, pb}, std::move(out), [pa, pb](const Node<S>& self, Tape<S>& tape) {
            if (Tensor<S>* ga = tape.grad_slot(pa))
                ga->mat() += self.adjoint.mat();
            if (Tensor<S>* gb = tape.grad_slot(pb))
                gb->mat() += self.adjoint.mat();
        });
    }
    if (y.rows() == 1 && y.cols() == x.cols() && x.rank() == 2)
    {
        Tensor<S> out = x;
        out.mat().rowwise() += y.mat().row(0);
        return a.tape().push(OpKind::add, {pa, pb}, std::move(out), [pa, pb](const Node<S>& self, Tape<S>& tape) {
            if (Tensor<S>* ga = tape.grad_slot(pa))
                ga->mat() += self.adjoint.mat();
            if (Tensor<S>* gb = tape.grad_slot(pb))
                gb->mat().row(0) += self.adjoint.mat().colwise().sum();
        });
    }
    shape_mismatch(OpKind::add, x, y);
}

template <typename S>
Var<S> sub(Var<S> a, Var<S> b)
{
    same_tape(a, b, OpKind::sub);
    const Tensor<S>& x = a.value();
    const Tensor<S>& y = b.value();
    if (x.shape() != y.shape())
        shape_mismatch(OpKind::sub, x, y);
    Tensor<S> out = x;
    out.mat() -= y.mat();
    const std::size_t pa = a.id(), pb = b.id();
    return a.tape().push(OpKind::sub, {pa, pb}, std::move(out), [pa, pb](const Node<S>& self, Tape<S>& tape) {
        if (Tensor<S>* ga = tape.grad_slot(pa))
            ga->mat() += self.adjoint.mat();
        if (Tensor<S>* gb = tape.grad_slot(pb))
            gb->mat() -= self.adjoint.mat();
    });
}

template <typename S>
Var<S> mul(Var<S> a, Var<S> b)
{
    same_tape(a, b, OpKind::mul);
    const Tensor<S>& x = a.value();
    const Tensor<S>& y = b.value();
    if (x.shape() != y.shape())
        shape_mismatch(OpKind::mul, x, y);
    Tensor<S> out(x.shape());
    out.mat() = x.mat().cwiseProduct(y.mat());
    const std::size_t pa = a.id(), pb = b.id();
    return a.tape().push(OpKind::mul, {pa, pb}, std::move(out), [pa, pb](const Node<S>& self, Tape<S>& tape) {
        if (Tensor<S>* ga = tape.grad_slot(pa))
            ga->mat() += self.adjoint.mat().cwiseProduct(tape.value(pb).mat());
        if (Tensor<S>* gb = tape.grad_slot(pb))
            gb->mat() += self.adjoint.mat().cwiseProduct(tape.value(pa).mat());
    });
}

template <typename S>
Var<S> scale(Var<S> a, S factor)
{
    Tensor<S> out = a.value();
    out.mat() *= factor;
    const std::size_t pa = a.id();
    return a.tape().push(OpKind::scale, {pa}, std::move(out), [pa, factor](const Node<S>& self, Tape<S>& tape) {
        if (Tensor<S>* ga = tape.grad_slot(pa))
            ga->mat() += factor * self.adjoint.mat();
    });
}

template <typename S>
Var<S> concat_cols(Var<S> a, Var<S> b)
{
    same_tape(a, b, OpKind::concat_cols);
    const Tensor<S>& x = a.value();
    const Tensor<S>& y = b.value();
    if (x.rows() != y.rows())
        shape_mismatch(OpKind::concat_cols, x, y);
    const std::size_t r = x.rows(), c1 = x.cols(), c2 = y.cols();
    Tensor<S> out(Shape{r, c1 + c2});
    out.mat().leftCols(c1) = x.mat();
    out.mat().rightCols(c2) = y.mat();
    const std::size_t pa = a.id(), pb = b.id();
    return a.tape().push(OpKind::concat_cols, {pa, pb}, std::move(out), [pa, pb, c1, c2](const Node<S>& self, Tape<S>& tape) {
        if (Tensor<S>* ga = tape.grad_slot(pa))
            ga->mat() += self.adjoint.mat().leftCols(c1);
        if (Tensor<S>* gb = tape.grad_slot(pb))
            gb->mat() += self.adjoint.mat().rightCols(c2);
    });
}

template <typename S>
Var<S> relu(Var<S> a)
{
    return unary(
        a, OpKind::relu, [](S x) { return x > S{0} ? x : S{0}; }, [](S x, S) { return x > S{0} ? S{1} : S{0}; }
    );
}

template <typename S>
Var<S> tanh(Var<S> a)
{
    return unary(
        a, OpKind::tanh, [](S x) { return std::tanh(x); }, [](S, S y) { return S{1} - y * y; }
    );
}

template <typename S>
Var<S> sigmoid(Var<S> a)
{
    return unary(
        a,
        OpKind::sigmoid,
        [](S x) { return x >= S{0} ? S{1} / (S{1} + std::exp(-x)) : std::exp(x) / (S{1} + std::exp(x)); },
        [](S, S y) { return y * (S{1} - y); }
    );
}

template <typename S>
Var<S> log(Var<S> a)
{
    for (S v : a.value().data())
        if (!(v > S{0}))
            shape_invalid(OpKind::log, a.value(), "non-positive input");
    return unary(
        a, OpKind::log, [](S x) { return std::log(x); }, [](S x, S) { return S{1} / x; }
    );
}

template <typename S>
Var<S> exp(Var<S> a)
{
    return unary(
        a, OpKind::exp, [](S x) { return std::exp(x); }, [](S, S y) { return y; }
    );
}

template <typename S>
Var<S> softmax(Var<S> a, int axis)
{
    const Tensor<S>& x = a.value();
    if (axis != 0 && axis != 1)
        shape_invalid(OpKind::softmax, x, "axis must be 0 or 1");
    Tensor<S> out(x.shape());
    auto in = x.mat();
    auto y = out.mat();
    // Row-wise on the matrix view, or on its transpose for axis 0.
    auto normalise = [](const auto& src, auto&& dst) {
        for (Eigen::Index r = 0; r < src.rows(); ++r)
        {
            const S m = src.row(r).maxCoeff();
            dst.row(r) = (src.row(r).array() - m).exp().matrix();
            dst.row(r) /= dst.row(r).sum();
        }
    };
    if (axis == 1)
        normalise(in, y);
    else
    {
        RowMatrix<S> t = in.transpose();
        RowMatrix<S> u(t.rows(), t.cols());
        normalise(t, u);
        y = u.transpose();
    }
    const std::size_t pa = a.id();
    return a.tape().push(OpKind::softmax, {pa}, std::move(out), [pa, axis](const Node<S>& self, Tape<S>& tape) {
        Tensor<S>* ga = tape.grad_slot(pa);
        if (!ga)
            return;
        const auto yv = self.value.mat();
        const auto gy = self.adjoint.mat();
        if (axis == 1)
        {
            for (Eigen::Index r = 0; r < yv.rows(); ++r)
            {
                const S dot = yv.row(r).dot(gy.row(r));
                ga->mat().row(r) += (yv.row(r).array() * (gy.row(r).array() - dot)).matrix();
            }
        }
        else
        {
            for (Eigen::Index c = 0; c < yv.cols(); ++c)
            {
                const S dot = yv.col(c).dot(gy.col(c));
                ga->mat().col(c) += (yv.col(c).array() * (gy.col(c).array() - dot)).matrix();
            }
        }
    });
}

template <typename S>
Var<S> max_reduce(Var<S> a)
{
    const Tensor<S>& x = a.value();
    if (x.empty())
        shape_invalid(OpKind::max_reduce, x, "empty input");
    const std::size_t arg =
        static_cast<std::size_t>(std::max_element(x.data().begin(), x.data().end()) - x.data().begin());
    const std::size_t pa = a.id();
    return a.tape().push(OpKind::max_reduce, {pa}, Tensor<S>::scalar(x[arg]), [pa, arg](const Node<S>& self, Tape<S>& tape) {
        if (Tensor<S>* ga = tape.grad_slot(pa))
            (*ga)[arg] += self.adjoint[0];
    });
}

template <typename S>
Var<S> sum(Var<S> a)
{
    const Tensor<S>& x = a.value();
    S total{0};
    for (S v : x.data())
        total += v;
    const std::size_t pa = a.id();
    return a.tape().push(OpKind::sum, {pa}, Tensor<S>::scalar(total), [pa](const Node<S>& self, Tape<S>& tape) {
        if (Tensor<S>* ga = tape.grad_slot(pa))
            ga->mat().array() += self.adjoint[0];
    });
}

template <typename S>
Var<S> mean(Var<S> a)
{
    const std::size_t n = a.value().size();
    if (n == 0)
        shape_invalid(OpKind::sum, a.value(), "mean of empty tensor");
    return scale(sum(a), S{1} / static_cast<S>(n));
}

template <typename S>
Var<S> transpose(Var<S> a)
{
    const Tensor<S>& x = a.value();
    Tensor<S> out(Shape{x.cols(), x.rows()});
    out.mat() = x.mat().transpose();
    const std::size_t pa = a.id();
    return a.tape().push(OpKind::transpose, {pa}, std::move(out), [pa](const Node<S>& self, Tape<S>& tape) {
        if (Tensor<S>* ga = tape.grad_slot(pa))
            ga->mat() += self.adjoint.mat().transpose();
    });
}

template <typename S>
Var<S> slice_rows(Var<S> a, std::size_t begin, std::size_t count)
{
    const Tensor<S>& x = a.value();
    if (x.rank() != 2 || begin + count > x.rows())
        shape_invalid(OpKind::slice, x, "row range [" + std::to_string(begin) + ", " + std::to_string(begin + count) + ")");
    Tensor<S> out(Shape{count, x.cols()});
    out.mat() = x.mat().middleRows(begin, count);
    const std::size_t pa = a.id();
    return a.tape().push(OpKind::slice, {pa}, std::move(out), [pa, begin, count](const Node<S>& self, Tape<S>& tape) {
        if (Tensor<S>* ga = tape.grad_slot(pa))
            ga->mat().middleRows(begin, count) += self.adjoint.mat();
    });
}

template <typename S>
Var<S> slice_cols(Var<S> a, std::size_t begin, std::size_t count)
{
    const Tensor<S>& x = a.value();
    if (begin + count > x.cols())
        shape_invalid(OpKind::slice, x, "column range [" + std::to_string(begin) + ", " + std::to_string(begin + count) + ")");
    Tensor<S> out(Shape{x.rows(), count});
    out.mat() = x.mat().middleCols(begin, count);
    const std::size_t pa = a.id();
    return a.tape().push(OpKind::slice, {pa}, std::move(out), [pa, begin, count](const Node<S>& self, Tape<S>& tape) {
        if (Tensor<S>* ga = tape.grad_slot(pa))
            ga->mat().middleCols(begin, count) += self.adjoint.mat();
    });
}

template <typename S>
Var<S> reshape(Var<S> a, Shape shape)
{
    const Tensor<S>& x = a.value();
    if (shape_size(shape) != x.size())
        shape_invalid(OpKind::reshape, x, "cannot reshape to " + shape_string(shape));
    const std::size_t pa = a.id();
    return a.tape().push(OpKind::reshape, {pa}, x.reshaped(std::move(shape)), [pa](const Node<S>& self, Tape<S>& tape) {
        if (Tensor<S>* ga = tape.grad_slot(pa))
            for (std::size_t i = 0; i < self.adjoint.size(); ++i)
                (*ga)[i] += self.adjoint[i];
    });
}

template <typename S>
Var<S> gather_rows(Var<S> table, std::span<const std::size_t> indices)
{
    const Tensor<S>& t = table.value();
    const std::size_t d = t.cols();
    Tensor<S> out(Shape{indices.size(), d});
    for (std::size_t r = 0; r < indices.size(); ++r)
    {
        if (indices[r] >= t.rows())
            shape_invalid(OpKind::gather, t, "row index " + std::to_string(indices[r]) + " out of range");
        out.mat().row(r) = t.mat().row(indices[r]);
    }
    const std::size_t pa = table.id();
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    return table.tape().push(OpKind::gather, {pa}, std::move(out), [pa, idx = std::move(idx)](const Node<S>& self, Tape<S>& tape) {
        if (Tensor<S>* ga = tape.grad_slot(pa))
            for (std::size_t r = 0; r < idx.size(); ++r)
                ga->mat().row(idx[r]) += self.adjoint.mat().row(r);
    });
}

template <typename S>
Var<S> cross_entropy(Var<S> logits, std::span<const int> targets)
{
    const Tensor<S>& z = logits.value();
    if (z.rank() != 2 || targets.size() != z.rows())
        shape_invalid(OpKind::cross_entropy, z, std::to_string(targets.size()) + " targets");
    const std::size_t k = z.cols();
    // Softmax probabilities are kept for the backward rule.
    Tensor<S> probs(z.shape());
    S total{0};
    std::size_t counted = 0;
    for (std::size_t r = 0; r < z.rows(); ++r)
    {
        const auto row = z.mat().row(r);
        const S m = row.maxCoeff();
        const S lse = m + std::log((row.array() - m).exp().sum());
        probs.mat().row(r) = (row.array() - lse).exp().matrix();
        if (targets[r] < 0)
            continue;
        if (static_cast<std::size_t>(targets[r]) >= k)
            throw InvalidArgument(
                "cross-entropy-from-logits: target " + std::to_string(targets[r]) + " outside label set of size " + std::to_string(k)
            );
        total += lse - row[targets[r]];
        ++counted;
    }
    if (counted == 0)
        throw InvalidArgument("cross-entropy-from-logits: no scored rows");
    const S inv = S{1} / static_cast<S>(counted);
    const std::size_t pa = logits.id();
    std::vector<int> tg(targets.begin(), targets.end());
    return logits.tape().push(
        OpKind::cross_entropy,
        {pa},
        Tensor<S>::scalar(total * inv),
        [pa, inv, tg = std::move(tg), probs = std::move(probs)](const Node<S>& self, Tape<S>& tape) {
            Tensor<S>* ga = tape.grad_slot(pa);
            if (!ga)
                return;
            const S g = self.adjoint[0] * inv;
            for (std::size_t r = 0; r < tg.size(); ++r)
            {
                if (tg[r] < 0)
                    continue;
                ga->mat().row(r) += g * probs.mat().row(r);
                (*ga)(r, static_cast<std::size_t>(tg[r])) -= g;
            }
        }
    );
}

#define LTREE_INSTANTIATE_OPS(S)                                                         \
    template Var<S> matmul(Var<S>, Var<S>);                                              \
    template Var<S> add(Var<S>, Var<S>);                                                 \
    template Var<S> sub(Var<S>, Var<S>);                                                 \
    template Var<S> mul(Var<S>, Var<S>);                                                 \
    template Var<S> scale(Var<S>, S);                                                    \
    template Var<S> concat_cols(Var<S>, Var<S>);                                         \
    template Var<S> relu(Var<S>);                                                        \
    template Var<S> tanh(Var<S>);                                                        \
    template Var<S> sigmoid(Var<S>);                                                     \
    template Var<S> softmax(Var<S>, int);                                                \
    template Var<S> log(Var<S>);                                                         \
    template Var<S> exp(Var<S>);                                                         \
    template Var<S> max_reduce(Var<S>);                                                  \
    template Var<S> sum(Var<S>);                                                         \
    template Var<S> mean(Var<S>);                                                        \
    template Var<S> transpose(Var<S>);                                                   \
    template Var<S> slice_rows(Var<S>, std::size_t, std::size_t);                        \
    template Var<S> slice_cols(Var<S>, std::size_t, std::size_t);                        \
    template Var<S> reshape(Var<S>, Shape);                                              \
    template Var<S> gather_rows(Var<S>, std::span<const std::size_t>);                   \
    template Var<S> cross_entropy(Var<S>, std::span<const int>);

LTREE_INSTANTIATE_OPS(float)
LTREE_INSTANTIATE_OPS(double)

}
