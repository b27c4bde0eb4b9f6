#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "epiga/tensor.hpp"

namespace epiga::ad {

class Tape;

// Handle to a recorded tensor on a tape.
class Var {
public:
    Var() = default;
    Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

    Tape* tape() const { return tape_; }
    std::uint32_t id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

    const Shape& shape() const;
    std::span<const double> values() const;
    double scalar_value() const;  // requires a scalar node

private:
    Tape* tape_ = nullptr;
    std::uint32_t id_ = 0;
};

// d(root)/d(variable) for every leaf recorded on the tape.
class GradientMap {
public:
    void insert(std::uint32_t id, Tensor grad) { grads_.emplace(id, std::move(grad)); }
    const Tensor& at(Var v) const;
    bool contains(Var v) const { return grads_.count(v.id()) != 0; }
    std::size_t size() const { return grads_.size(); }

private:
    std::unordered_map<std::uint32_t, Tensor> grads_;
};

// Reverse-mode tape over dense tensors. One forward/backward pass owns a tape
// exclusively; independent tapes may run concurrently over shared read-only
// parameter values.
//
// The node list is topologically ordered by construction. backward() seeds
// the (scalar) root with 1 and sweeps once; calling it again for the same
// recording is a structural error. mark()/truncate() allow a caller to keep
// leaf nodes (and their accumulated adjoints) while discarding a consumed
// subexpression — adjoints of retained leaves keep accumulating across
// sweeps, which is exactly reverse-mode addition semantics for a variable
// reused across subexpressions.
class Tape {
public:
    // Guards, per the engine's contract: denominators are clamped to
    // magnitude >= kDivGuard before dividing, sqrt inputs are clamped to >= 0.
    static constexpr double kDivGuard = 1e-12;

    Var leaf(const Tensor& t);      // differentiable input
    Var constant(const Tensor& t);  // recorded but not differentiated
    Var constant_scalar(double x) { return constant(Tensor::scalar(x)); }

    // Element-wise arithmetic (operands must share a shape).
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);  // element-wise product
    Var div(Var a, Var b);

    Var matmul(Var a, Var b);  // (m,k)x(k,n) matrix or (m,k)x(k) matrix-vector
    Var dot(Var a, Var b);     // vector . vector -> scalar

    // Reductions to a scalar.
    Var sum(Var a);
    Var mean(Var a);
    Var variance(Var a);  // population variance
    Var max(Var a);       // subgradient: first maximal element on ties

    // Element-wise functions.
    Var sin(Var a);
    Var cos(Var a);
    Var exp(Var a);
    Var sqrt(Var a);  // input clamped to >= 0
    Var square(Var a);
    Var power(Var a, double exponent);
    Var tanh(Var a);
    Var sigmoid(Var a);
    Var scale(Var a, double factor);

    // Structural ops (gradient = scatter / broadcast).
    Var reshape(Var a, Shape s);
    Var row_sums(Var m);                        // (r,c) -> vector(r)
    Var stack(std::span<const Var> scalars);    // n scalars -> vector(n)
    Var element(Var v, std::size_t i);          // vector -> scalar component

    // Reverse sweep from a scalar root. Adjoints of nodes recorded before the
    // current mark (typically parameter leaves) accumulate across sweeps.
    void backward(Var root);

    Tensor grad(Var v) const;
    std::span<const double> grad_view(Var v) const;
    GradientMap leaf_gradients() const;  // one entry per leaf

    // Watermark support for the record/backward/truncate loop. Nodes kept
    // across a truncate must be leaves or constants.
    struct Mark {
        std::size_t nodes;
        std::size_t values;
        std::size_t pool;
    };
    Mark mark() const { return {nodes_.size(), values_.size(), parent_pool_.size()}; }
    void truncate(Mark m);

    void reset();
    std::size_t node_count() const { return nodes_.size(); }

    const Shape& shape_of(std::uint32_t id) const { return nodes_[id].shape; }
    std::span<const double> values_of(std::uint32_t id) const;

private:
    enum class Op : std::uint8_t {
        leaf, constant,
        add, sub, mul, div, matmul, dot,
        sum, mean, variance, max,
        op_sin, op_cos, op_exp, op_sqrt, square, power, op_tanh, sigmoid, scale,
        reshape, row_sums, stack, element,
    };

    struct Node {
        Op op;
        std::uint32_t p0 = 0;        // first parent, or parent-pool offset for stack
        std::uint32_t p1 = 0;        // second parent
        std::uint32_t nparents = 0;  // stack only
        std::uint32_t iaux = 0;      // argmax / element index
        double aux = 0.0;            // scale factor / exponent
        Shape shape;
        std::size_t val_off = 0;
    };

    Var push(Op op, Shape shape, std::uint32_t p0, std::uint32_t p1, std::uint32_t nparents = 0);
    std::span<double> values_mut(std::uint32_t id);
    void check_finite(std::uint32_t id, const char* opname) const;
    void check_same_shape(Var a, Var b, const char* opname) const;
    Var unary(Op op, Var a, const char* opname, double aux = 0.0);
    void backward_node(std::uint32_t id);

    std::vector<Node> nodes_;
    std::vector<std::uint32_t> parent_pool_;
    std::vector<double> values_;
    std::vector<double> adjoints_;
    std::size_t last_backward_size_ = static_cast<std::size_t>(-1);
};

// Spec-shaped convenience: sweep and collect all leaf gradients.
inline GradientMap backward(Tape& tape, Var root) {
    tape.backward(root);
    return tape.leaf_gradients();
}

inline Var operator+(Var a, Var b) { return a.tape()->add(a, b); }
inline Var operator-(Var a, Var b) { return a.tape()->sub(a, b); }
inline Var operator*(Var a, Var b) { return a.tape()->mul(a, b); }
inline Var operator/(Var a, Var b) { return a.tape()->div(a, b); }

}  // namespace epiga::ad
