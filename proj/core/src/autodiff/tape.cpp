#include "ltree/autodiff/tape.hpp"

#include <algorithm>

namespace ltree
{

const char* op_name(OpKind op)
{
    switch (op)
    {
        case OpKind::constant: return "constant";
        case OpKind::input: return "input";
        case OpKind::parameter: return "parameter";
        case OpKind::matmul: return "matmul";
        case OpKind::add: return "add";
        case OpKind::sub: return "sub";
        case OpKind::mul: return "elementwise-mul";
        case OpKind::scale: return "scale";
        case OpKind::concat_cols: return "concat-columns";
        case OpKind::relu: return "relu";
        case OpKind::tanh: return "tanh";
        case OpKind::sigmoid: return "sigmoid";
        case OpKind::softmax: return "softmax";
        case OpKind::log: return "log";
        case OpKind::exp: return "exp";
        case OpKind::max_reduce: return "max-reduce";
        case OpKind::sum: return "sum";
        case OpKind::transpose: return "transpose";
        case OpKind::slice: return "slice";
        case OpKind::reshape: return "reshape";
        case OpKind::gather: return "embedding-gather";
        case OpKind::cross_entropy: return "cross-entropy-from-logits";
        case OpKind::lstm: return "lstm";
        case OpKind::eisner_relaxed: return "eisner-relaxed";
        case OpKind::eisner_straight_through: return "eisner-straight-through";
        case OpKind::head_softmax: return "head-softmax";
        case OpKind::head_straight_through: return "head-straight-through";
    }
    return "unknown";
}

template <typename S>
const Tensor<S>& Gradients<S>::at_node(std::size_t node_id) const
{
    for (const auto& e : _entries)
        if (e.node_id == node_id)
            return e.gradient;
    throw InvalidArgument("no gradient recorded for node " + std::to_string(node_id));
}

template <typename S>
const Tensor<S>* Gradients<S>::find(const Parameter<S>& p) const
{
    for (const auto& e : _entries)
        if (e.parameter == &p)
            return &e.gradient;
    return nullptr;
}

template <typename S>
Var<S> Tape<S>::constant(Tensor<S> value)
{
    return push(OpKind::constant, {}, std::move(value), nullptr);
}

template <typename S>
Var<S> Tape<S>::input(Tensor<S> value)
{
    Var<S> v = push(OpKind::input, {}, std::move(value), nullptr);
    _nodes[v.id()].requires_grad = true;
    return v;
}

template <typename S>
Var<S> Tape<S>::parameter(Parameter<S>& p)
{
    if (auto it = _param_nodes.find(&p); it != _param_nodes.end())
        return Var<S>(this, it->second);
    Var<S> v = push(OpKind::parameter, {}, Tensor<S>(), nullptr);
    Node<S>& n = _nodes[v.id()];
    n.external = &p.value;
    n.requires_grad = true;
    n.parameter = &p;
    _param_nodes.emplace(&p, v.id());
    return v;
}

template <typename S>
Var<S> Tape<S>::push(OpKind op, std::vector<std::size_t> parents, Tensor<S> value, typename Node<S>::BackwardFn backward)
{
    if (!value.all_finite())
        throw NumericError(std::string("non-finite value produced by ") + op_name(op) + " at node " + std::to_string(_nodes.size()));

    Node<S> n;
    n.id = _nodes.size();
    n.op = op;
    n.value = std::move(value);
    for (std::size_t p : parents)
        n.requires_grad = n.requires_grad || _nodes[p].requires_grad;
    if (!training())
        n.requires_grad = false;
    if (n.requires_grad)
        n.backward = std::move(backward);
    n.parents = std::move(parents);
    _nodes.push_back(std::move(n));
    return Var<S>(this, _nodes.size() - 1);
}

template <typename S>
Tensor<S>* Tape<S>::grad_slot(std::size_t id)
{
    Node<S>& n = _nodes[id];
    if (!n.requires_grad)
        return nullptr;
    if (n.adjoint.shape() != n.val().shape() || n.adjoint.size() != n.val().size())
        n.adjoint = Tensor<S>(n.val().shape());
    return &n.adjoint;
}

template <typename S>
Gradients<S> Tape<S>::backward(Var<S> loss, S seed)
{
    if (loss.value().size() != 1)
        throw ShapeError("backward requires a scalar loss, got shape " + shape_string(loss.value().shape()));
    if (!training())
        throw InvalidArgument("backward called on an inference-mode tape");

    for (auto& n : _nodes)
        n.adjoint = Tensor<S>();

    Gradients<S> grads;
    const std::size_t last = loss.id();
    if (Tensor<S>* slot = grad_slot(last))
        (*slot)[0] = seed;

    for (std::size_t k = last + 1; k-- > 0;)
    {
        Node<S>& n = _nodes[k];
        if (n.adjoint.empty())
            continue;
        if (!n.adjoint.all_finite())
            throw NumericError(
                std::string("non-finite adjoint at node ") + std::to_string(n.id) + " (" + op_name(n.op) + ")"
            );
        if (n.backward)
            n.backward(n, *this);
    }

    // Parameter adjoints are moved into the result.
    for (auto& n : _nodes)
    {
        if (n.parameter == nullptr || n.id > last)
            continue;
        Tensor<S> g = n.adjoint.empty() ? Tensor<S>(n.val().shape()) : std::move(n.adjoint);
        n.adjoint = Tensor<S>();
        grads.add({n.id, n.parameter, std::move(g)});
    }
    return grads;
}

template class Gradients<float>;
template class Gradients<double>;
template class Tape<float>;
template class Tape<double>;

}
