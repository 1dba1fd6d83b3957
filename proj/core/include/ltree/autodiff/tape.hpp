#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "ltree/autodiff/parameter.hpp"
#include "ltree/autodiff/tensor.hpp"

namespace ltree
{

enum class OpKind
{
    constant,
    input,
    parameter,
    matmul,
    add,
    sub,
    mul,
    scale,
    concat_cols,
    relu,
    tanh,
    sigmoid,
    softmax,
    log,
    exp,
    max_reduce,
    sum,
    transpose,
    slice,
    reshape,
    gather,
    cross_entropy,
    lstm,
    eisner_relaxed,
    eisner_straight_through,
    head_softmax,
    head_straight_through,
};

const char* op_name(OpKind op);

enum class TapeMode
{
    train,
    inference
};

template <typename S>
class Tape;

template <typename S>
struct Node
{
    // Propagates self.adjoint into the adjoints of self.parents.
    using BackwardFn = std::function<void(const Node& self, Tape<S>& tape)>;

    std::size_t id = 0;
    OpKind op = OpKind::constant;
    std::vector<std::size_t> parents;
    Tensor<S> value;
    Tensor<S> adjoint;
    bool requires_grad = false;
    Parameter<S>* parameter = nullptr;
    // Parameter leaves alias the stored tensor instead of copying it; the
    // optimizer must not run while a tape that references it is alive.
    const Tensor<S>* external = nullptr;
    BackwardFn backward;

    const Tensor<S>& val() const { return external ? *external : value; }
};

// Handle to a node on a tape.
template <typename S>
class Var
{
public:
    Var() = default;
    Var(Tape<S>* tape, std::size_t id) :
        _tape(tape),
        _id(id)
    {}

    std::size_t id() const { return _id; }
    Tape<S>& tape() const { return *_tape; }
    const Tensor<S>& value() const;
    const Shape& shape() const { return value().shape(); }
    bool valid() const { return _tape != nullptr; }

private:
    Tape<S>* _tape = nullptr;
    std::size_t _id = 0;
};

// Result of a backward pass: one adjoint per parameter node on the tape.
template <typename S>
class Gradients
{
public:
    struct Entry
    {
        std::size_t node_id;
        Parameter<S>* parameter;
        Tensor<S> gradient;
    };

    const std::vector<Entry>& entries() const { return _entries; }
    std::size_t size() const { return _entries.size(); }

    const Tensor<S>& at_node(std::size_t node_id) const;
    const Tensor<S>* find(const Parameter<S>& p) const;

    void add(Entry e) { _entries.push_back(std::move(e)); }

private:
    std::vector<Entry> _entries;
};

// Append-only computation graph. Nodes are created in topological order and
// backward visits them in strict reverse creation order.
template <typename S>
class Tape
{
public:
    explicit Tape(TapeMode mode = TapeMode::train) :
        _mode(mode)
    {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    TapeMode mode() const { return _mode; }
    bool training() const { return _mode == TapeMode::train; }
    std::size_t size() const { return _nodes.size(); }

    Var<S> constant(Tensor<S> value);
    // A differentiable leaf that is not a parameter (gradient checks).
    Var<S> input(Tensor<S> value);
    // At most one leaf per parameter per tape.
    Var<S> parameter(Parameter<S>& p);

    // Generic forward_node: records an evaluated node. The backward function
    // is dropped in inference mode or when no parent requires a gradient.
    Var<S> push(OpKind op, std::vector<std::size_t> parents, Tensor<S> value, typename Node<S>::BackwardFn backward);

    const Node<S>& node(std::size_t id) const { return _nodes[id]; }
    const Tensor<S>& value(std::size_t id) const { return _nodes[id].val(); }
    bool requires_grad(std::size_t id) const { return _nodes[id].requires_grad; }

    // Adjoint accumulator of a node, allocated on first use, or nullptr when
    // the node does not require a gradient. Only valid during backward.
    Tensor<S>* grad_slot(std::size_t id);

    // Reverse sweep from a scalar loss. Throws NumericError naming the first
    // node (in reverse order) whose adjoint is not finite.
    Gradients<S> backward(Var<S> loss, S seed = S{1});

    // Adjoint left by the last backward pass (empty if never reached, and
    // empty for parameter leaves, whose adjoints move into the Gradients).
    const Tensor<S>& adjoint(Var<S> v) const { return _nodes[v.id()].adjoint; }

private:
    TapeMode _mode;
    // A deque keeps node (and value) references valid while the tape grows.
    std::deque<Node<S>> _nodes;
    std::unordered_map<const Parameter<S>*, std::size_t> _param_nodes;
};

template <typename S>
const Tensor<S>& Var<S>::value() const
{
    return _tape->value(_id);
}

extern template class Gradients<float>;
extern template class Gradients<double>;
extern template class Tape<float>;
extern template class Tape<double>;

}
