#include "epiga/tape.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace epiga::ad {

std::string to_string(const Shape& s) {
    char buf[64];
    switch (s.rank) {
        case 0: return "scalar";
        case 1: std::snprintf(buf, sizeof(buf), "vector(%zu)", s.dim[0]); return buf;
        default: std::snprintf(buf, sizeof(buf), "matrix(%zux%zu)", s.dim[0], s.dim[1]); return buf;
    }
}

const Shape& Var::shape() const { return tape_->shape_of(id_); }

std::span<const double> Var::values() const { return tape_->values_of(id_); }

double Var::scalar_value() const {
    auto v = values();
    if (v.size() != 1) throw StructuralError("scalar_value on non-scalar variable");
    return v[0];
}

const Tensor& GradientMap::at(Var v) const {
    auto it = grads_.find(v.id());
    if (it == grads_.end()) throw StructuralError("no gradient entry for variable");
    return it->second;
}

std::span<const double> Tape::values_of(std::uint32_t id) const {
    const Node& n = nodes_[id];
    return {values_.data() + n.val_off, n.shape.count()};
}

std::span<double> Tape::values_mut(std::uint32_t id) {
    const Node& n = nodes_[id];
    return {values_.data() + n.val_off, n.shape.count()};
}

Var Tape::push(Op op, Shape shape, std::uint32_t p0, std::uint32_t p1, std::uint32_t nparents) {
    Node n;
    n.op = op;
    n.p0 = p0;
    n.p1 = p1;
    n.nparents = nparents;
    n.shape = shape;
    n.val_off = values_.size();
    values_.resize(values_.size() + shape.count(), 0.0);
    nodes_.push_back(n);
    return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

void Tape::check_finite(std::uint32_t id, const char* opname) const {
    for (double x : values_of(id))
        if (!std::isfinite(x))
            throw NumericError(std::string(opname) + " produced a non-finite value");
}

void Tape::check_same_shape(Var a, Var b, const char* opname) const {
    if (a.tape() != this || b.tape() != this)
        throw StructuralError(std::string(opname) + ": operand recorded on a different tape");
    if (a.shape() != b.shape())
        throw StructuralError(std::string(opname) + ": shape mismatch " + to_string(a.shape()) +
                              " vs " + to_string(b.shape()));
}

Var Tape::leaf(const Tensor& t) {
    Var v = push(Op::leaf, t.shape, 0, 0);
    auto out = values_mut(v.id());
    std::copy(t.values.begin(), t.values.end(), out.begin());
    check_finite(v.id(), "leaf");
    return v;
}

Var Tape::constant(const Tensor& t) {
    Var v = push(Op::constant, t.shape, 0, 0);
    auto out = values_mut(v.id());
    std::copy(t.values.begin(), t.values.end(), out.begin());
    check_finite(v.id(), "constant");
    return v;
}

Var Tape::add(Var a, Var b) {
    check_same_shape(a, b, "add");
    Var v = push(Op::add, a.shape(), a.id(), b.id());
    auto out = values_mut(v.id());
    auto va = values_of(a.id()), vb = values_of(b.id());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] + vb[i];
    check_finite(v.id(), "add");
    return v;
}

Var Tape::sub(Var a, Var b) {
    check_same_shape(a, b, "sub");
    Var v = push(Op::sub, a.shape(), a.id(), b.id());
    auto out = values_mut(v.id());
    auto va = values_of(a.id()), vb = values_of(b.id());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] - vb[i];
    check_finite(v.id(), "sub");
    return v;
}

Var Tape::mul(Var a, Var b) {
    check_same_shape(a, b, "mul");
    Var v = push(Op::mul, a.shape(), a.id(), b.id());
    auto out = values_mut(v.id());
    auto va = values_of(a.id()), vb = values_of(b.id());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * vb[i];
    check_finite(v.id(), "mul");
    return v;
}

namespace {
inline double guard_denominator(double d) {
    if (d >= Tape::kDivGuard || d <= -Tape::kDivGuard) return d;
    return d < 0.0 ? -Tape::kDivGuard : Tape::kDivGuard;
}
}  // namespace

Var Tape::div(Var a, Var b) {
    check_same_shape(a, b, "div");
    Var v = push(Op::div, a.shape(), a.id(), b.id());
    auto out = values_mut(v.id());
    auto va = values_of(a.id()), vb = values_of(b.id());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] / guard_denominator(vb[i]);
    check_finite(v.id(), "div");
    return v;
}

Var Tape::matmul(Var a, Var b) {
    if (a.tape() != this || b.tape() != this)
        throw StructuralError("matmul: operand recorded on a different tape");
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    if (sa.rank != 2 || sb.rank == 0)
        throw StructuralError("matmul: expects matrix x (matrix|vector), got " + to_string(sa) +
                              " x " + to_string(sb));
    const std::size_t m = sa.rows(), k = sa.cols();
    const std::size_t n = (sb.rank == 1) ? 1 : sb.cols();
    if ((sb.rank == 1 ? sb.rows() : sb.rows()) != k)
        throw StructuralError("matmul: inner dimensions differ, " + to_string(sa) + " x " + to_string(sb));
    Shape out_shape = (sb.rank == 1) ? Shape::vector(m) : Shape::matrix(m, n);
    Var v = push(Op::matmul, out_shape, a.id(), b.id());
    auto out = values_mut(v.id());
    auto va = values_of(a.id()), vb = values_of(b.id());
    if (n == 1) {
        for (std::size_t i = 0; i < m; ++i) {
            double acc = 0.0;
            const double* row = va.data() + i * k;
            for (std::size_t l = 0; l < k; ++l) acc += row[l] * vb[l];
            out[i] = acc;
        }
    } else {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double acc = 0.0;
                for (std::size_t l = 0; l < k; ++l) acc += va[i * k + l] * vb[l * n + j];
                out[i * n + j] = acc;
            }
    }
    check_finite(v.id(), "matmul");
    return v;
}

Var Tape::dot(Var a, Var b) {
    check_same_shape(a, b, "dot");
    if (a.shape().rank != 1) throw StructuralError("dot: expects vectors");
    Var v = push(Op::dot, Shape::scalar(), a.id(), b.id());
    auto va = values_of(a.id()), vb = values_of(b.id());
    double acc = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) acc += va[i] * vb[i];
    values_mut(v.id())[0] = acc;
    check_finite(v.id(), "dot");
    return v;
}

Var Tape::sum(Var a) {
    Var v = push(Op::sum, Shape::scalar(), a.id(), 0);
    double acc = 0.0;
    for (double x : values_of(a.id())) acc += x;
    values_mut(v.id())[0] = acc;
    check_finite(v.id(), "sum");
    return v;
}

Var Tape::mean(Var a) {
    if (a.shape().count() == 0) throw StructuralError("mean of empty tensor");
    Var v = push(Op::mean, Shape::scalar(), a.id(), 0);
    double acc = 0.0;
    auto va = values_of(a.id());
    for (double x : va) acc += x;
    values_mut(v.id())[0] = acc / static_cast<double>(va.size());
    check_finite(v.id(), "mean");
    return v;
}

Var Tape::variance(Var a) {
    if (a.shape().count() == 0) throw StructuralError("variance of empty tensor");
    Var v = push(Op::variance, Shape::scalar(), a.id(), 0);
    auto va = values_of(a.id());
    const double n = static_cast<double>(va.size());
    double mu = 0.0;
    for (double x : va) mu += x;
    mu /= n;
    double acc = 0.0;
    for (double x : va) acc += (x - mu) * (x - mu);
    values_mut(v.id())[0] = acc / n;
    check_finite(v.id(), "variance");
    return v;
}

Var Tape::max(Var a) {
    if (a.shape().count() == 0) throw StructuralError("max of empty tensor");
    Var v = push(Op::max, Shape::scalar(), a.id(), 0);
    auto va = values_of(a.id());
    std::size_t arg = 0;
    for (std::size_t i = 1; i < va.size(); ++i)
        if (va[i] > va[arg]) arg = i;  // first index wins ties
    nodes_[v.id()].iaux = static_cast<std::uint32_t>(arg);
    values_mut(v.id())[0] = va[arg];
    check_finite(v.id(), "max");
    return v;
}

Var Tape::unary(Op op, Var a, const char* opname, double aux) {
    if (a.tape() != this) throw StructuralError(std::string(opname) + ": operand recorded on a different tape");
    Var v = push(op, a.shape(), a.id(), 0);
    nodes_[v.id()].aux = aux;
    auto out = values_mut(v.id());
    auto va = values_of(a.id());
    switch (op) {
        case Op::op_sin:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sin(va[i]);
            break;
        case Op::op_cos:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::cos(va[i]);
            break;
        case Op::op_exp:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(va[i]);
            break;
        case Op::op_sqrt:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(va[i] > 0.0 ? va[i] : 0.0);
            break;
        case Op::square:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * va[i];
            break;
        case Op::power:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::pow(va[i], aux);
            break;
        case Op::op_tanh:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(va[i]);
            break;
        case Op::sigmoid:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-va[i]));
            break;
        case Op::scale:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * aux;
            break;
        default:
            throw StructuralError("internal: bad unary op");
    }
    check_finite(v.id(), opname);
    return v;
}

Var Tape::sin(Var a) { return unary(Op::op_sin, a, "sin"); }
Var Tape::cos(Var a) { return unary(Op::op_cos, a, "cos"); }
Var Tape::exp(Var a) { return unary(Op::op_exp, a, "exp"); }
Var Tape::sqrt(Var a) { return unary(Op::op_sqrt, a, "sqrt"); }
Var Tape::square(Var a) { return unary(Op::square, a, "square"); }
Var Tape::power(Var a, double exponent) { return unary(Op::power, a, "power", exponent); }
Var Tape::tanh(Var a) { return unary(Op::op_tanh, a, "tanh"); }
Var Tape::sigmoid(Var a) { return unary(Op::sigmoid, a, "sigmoid"); }
Var Tape::scale(Var a, double factor) { return unary(Op::scale, a, "scale", factor); }

Var Tape::reshape(Var a, Shape s) {
    if (a.tape() != this) throw StructuralError("reshape: operand recorded on a different tape");
    if (s.count() != a.shape().count())
        throw StructuralError("reshape: element count mismatch " + to_string(a.shape()) + " -> " + to_string(s));
    Var v = push(Op::reshape, s, a.id(), 0);
    auto out = values_mut(v.id());
    auto va = values_of(a.id());
    std::copy(va.begin(), va.end(), out.begin());
    return v;
}

Var Tape::row_sums(Var m) {
    if (m.tape() != this) throw StructuralError("row_sums: operand recorded on a different tape");
    if (m.shape().rank != 2) throw StructuralError("row_sums: expects a matrix");
    const std::size_t r = m.shape().rows(), c = m.shape().cols();
    Var v = push(Op::row_sums, Shape::vector(r), m.id(), 0);
    auto out = values_mut(v.id());
    auto vm = values_of(m.id());
    for (std::size_t i = 0; i < r; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < c; ++j) acc += vm[i * c + j];
        out[i] = acc;
    }
    check_finite(v.id(), "row_sums");
    return v;
}

Var Tape::stack(std::span<const Var> scalars) {
    if (scalars.empty()) throw StructuralError("stack of zero variables");
    const std::uint32_t off = static_cast<std::uint32_t>(parent_pool_.size());
    for (Var s : scalars) {
        if (s.tape() != this) throw StructuralError("stack: operand recorded on a different tape");
        if (s.shape().rank != 0) throw StructuralError("stack: expects scalars");
        parent_pool_.push_back(s.id());
    }
    Var v = push(Op::stack, Shape::vector(scalars.size()), off, 0,
                 static_cast<std::uint32_t>(scalars.size()));
    auto out = values_mut(v.id());
    for (std::size_t i = 0; i < scalars.size(); ++i) out[i] = values_of(scalars[i].id())[0];
    return v;
}

Var Tape::element(Var vec, std::size_t i) {
    if (vec.tape() != this) throw StructuralError("element: operand recorded on a different tape");
    if (vec.shape().rank != 1 || i >= vec.shape().count())
        throw StructuralError("element: index out of range");
    Var v = push(Op::element, Shape::scalar(), vec.id(), 0);
    nodes_[v.id()].iaux = static_cast<std::uint32_t>(i);
    values_mut(v.id())[0] = values_of(vec.id())[i];
    return v;
}

void Tape::backward(Var root) {
    if (root.tape() != this) throw StructuralError("backward: root recorded on a different tape");
    if (root.shape().rank != 0) throw StructuralError("backward: root must be a scalar");
    if (nodes_.size() == last_backward_size_)
        throw StructuralError("backward: already run for this recording");
    adjoints_.resize(values_.size(), 0.0);
    adjoints_[nodes_[root.id()].val_off] += 1.0;
    for (std::uint32_t i = root.id() + 1; i-- > 0;) backward_node(i);
    last_backward_size_ = nodes_.size();
}

void Tape::backward_node(std::uint32_t id) {
    const Node& n = nodes_[id];
    if (n.op == Op::leaf || n.op == Op::constant) return;
    const double* g = adjoints_.data() + n.val_off;
    const std::size_t cnt = n.shape.count();
    auto adj = [&](std::uint32_t pid) { return adjoints_.data() + nodes_[pid].val_off; };
    auto val = [&](std::uint32_t pid) { return values_.data() + nodes_[pid].val_off; };
    switch (n.op) {
        case Op::add: {
            double *da = adj(n.p0), *db = adj(n.p1);
            for (std::size_t i = 0; i < cnt; ++i) { da[i] += g[i]; db[i] += g[i]; }
            break;
        }
        case Op::sub: {
            double *da = adj(n.p0), *db = adj(n.p1);
            for (std::size_t i = 0; i < cnt; ++i) { da[i] += g[i]; db[i] -= g[i]; }
            break;
        }
        case Op::mul: {
            double *da = adj(n.p0), *db = adj(n.p1);
            const double *a = val(n.p0), *b = val(n.p1);
            for (std::size_t i = 0; i < cnt; ++i) { da[i] += g[i] * b[i]; db[i] += g[i] * a[i]; }
            break;
        }
        case Op::div: {
            double *da = adj(n.p0), *db = adj(n.p1);
            const double *a = val(n.p0), *b = val(n.p1);
            for (std::size_t i = 0; i < cnt; ++i) {
                const double bc = guard_denominator(b[i]);
                da[i] += g[i] / bc;
                db[i] -= g[i] * a[i] / (bc * bc);
            }
            break;
        }
        case Op::matmul: {
            const Shape& sa = nodes_[n.p0].shape;
            const std::size_t m = sa.rows(), k = sa.cols();
            const Shape& sb = nodes_[n.p1].shape;
            const std::size_t nn = (sb.rank == 1) ? 1 : sb.cols();
            double *da = adj(n.p0), *db = adj(n.p1);
            const double *a = val(n.p0), *b = val(n.p1);
            if (nn == 1) {
                for (std::size_t i = 0; i < m; ++i) {
                    const double gi = g[i];
                    if (gi == 0.0) continue;
                    double* da_row = da + i * k;
                    const double* a_row = a + i * k;
                    for (std::size_t l = 0; l < k; ++l) {
                        da_row[l] += gi * b[l];
                        db[l] += a_row[l] * gi;
                    }
                }
            } else {
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t l = 0; l < k; ++l) {
                        double acc = 0.0;
                        const double a_il = a[i * k + l];
                        for (std::size_t j = 0; j < nn; ++j) {
                            acc += g[i * nn + j] * b[l * nn + j];
                            db[l * nn + j] += a_il * g[i * nn + j];
                        }
                        da[i * k + l] += acc;
                    }
            }
            break;
        }
        case Op::dot: {
            double *da = adj(n.p0), *db = adj(n.p1);
            const double *a = val(n.p0), *b = val(n.p1);
            const std::size_t len = nodes_[n.p0].shape.count();
            for (std::size_t i = 0; i < len; ++i) { da[i] += g[0] * b[i]; db[i] += g[0] * a[i]; }
            break;
        }
        case Op::sum: {
            double* da = adj(n.p0);
            const std::size_t len = nodes_[n.p0].shape.count();
            for (std::size_t i = 0; i < len; ++i) da[i] += g[0];
            break;
        }
        case Op::mean: {
            double* da = adj(n.p0);
            const std::size_t len = nodes_[n.p0].shape.count();
            const double s = g[0] / static_cast<double>(len);
            for (std::size_t i = 0; i < len; ++i) da[i] += s;
            break;
        }
        case Op::variance: {
            double* da = adj(n.p0);
            const double* a = val(n.p0);
            const std::size_t len = nodes_[n.p0].shape.count();
            double mu = 0.0;
            for (std::size_t i = 0; i < len; ++i) mu += a[i];
            mu /= static_cast<double>(len);
            const double s = 2.0 * g[0] / static_cast<double>(len);
            for (std::size_t i = 0; i < len; ++i) da[i] += s * (a[i] - mu);
            break;
        }
        case Op::max:
            adj(n.p0)[n.iaux] += g[0];
            break;
        case Op::op_sin: {
            double* da = adj(n.p0);
            const double* a = val(n.p0);
            for (std::size_t i = 0; i < cnt; ++i) da[i] += g[i] * std::cos(a[i]);
            break;
        }
        case Op::op_cos: {
            double* da = adj(n.p0);
            const double* a = val(n.p0);
            for (std::size_t i = 0; i < cnt; ++i) da[i] -= g[i] * std::sin(a[i]);
            break;
        }
        case Op::op_exp: {
            double* da = adj(n.p0);
            const double* out = values_.data() + n.val_off;
            for (std::size_t i = 0; i < cnt; ++i) da[i] += g[i] * out[i];
            break;
        }
        case Op::op_sqrt: {
            double* da = adj(n.p0);
            const double* a = val(n.p0);
            const double* out = values_.data() + n.val_off;
            for (std::size_t i = 0; i < cnt; ++i)
                if (a[i] > 0.0) da[i] += g[i] * 0.5 / out[i];
            break;
        }
        case Op::square: {
            double* da = adj(n.p0);
            const double* a = val(n.p0);
            for (std::size_t i = 0; i < cnt; ++i) da[i] += 2.0 * g[i] * a[i];
            break;
        }
        case Op::power: {
            double* da = adj(n.p0);
            const double* a = val(n.p0);
            for (std::size_t i = 0; i < cnt; ++i) da[i] += g[i] * n.aux * std::pow(a[i], n.aux - 1.0);
            break;
        }
        case Op::op_tanh: {
            double* da = adj(n.p0);
            const double* out = values_.data() + n.val_off;
            for (std::size_t i = 0; i < cnt; ++i) da[i] += g[i] * (1.0 - out[i] * out[i]);
            break;
        }
        case Op::sigmoid: {
            double* da = adj(n.p0);
            const double* out = values_.data() + n.val_off;
            for (std::size_t i = 0; i < cnt; ++i) da[i] += g[i] * out[i] * (1.0 - out[i]);
            break;
        }
        case Op::scale: {
            double* da = adj(n.p0);
            for (std::size_t i = 0; i < cnt; ++i) da[i] += g[i] * n.aux;
            break;
        }
        case Op::reshape: {
            double* da = adj(n.p0);
            for (std::size_t i = 0; i < cnt; ++i) da[i] += g[i];
            break;
        }
        case Op::row_sums: {
            double* da = adj(n.p0);
            const std::size_t c = nodes_[n.p0].shape.cols();
            for (std::size_t i = 0; i < cnt; ++i) {
                const double gi = g[i];
                double* row = da + i * c;
                for (std::size_t j = 0; j < c; ++j) row[j] += gi;
            }
            break;
        }
        case Op::stack:
            for (std::size_t i = 0; i < n.nparents; ++i)
                adj(parent_pool_[n.p0 + i])[0] += g[i];
            break;
        case Op::element:
            adj(n.p0)[n.iaux] += g[0];
            break;
        default:
            break;
    }
}

Tensor Tape::grad(Var v) const {
    auto gv = grad_view(v);
    return Tensor(v.shape(), std::vector<double>(gv.begin(), gv.end()));
}

std::span<const double> Tape::grad_view(Var v) const {
    if (v.tape() != this) throw StructuralError("grad: variable recorded on a different tape");
    if (adjoints_.size() < values_.size()) throw StructuralError("grad: backward has not run");
    const Node& n = nodes_[v.id()];
    return {adjoints_.data() + n.val_off, n.shape.count()};
}

GradientMap Tape::leaf_gradients() const {
    if (adjoints_.size() < values_.size()) throw StructuralError("leaf_gradients: backward has not run");
    GradientMap gm;
    for (std::uint32_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].op == Op::leaf)
            gm.insert(i, grad(Var(const_cast<Tape*>(this), i)));
    return gm;
}

void Tape::truncate(Mark m) {
    nodes_.resize(m.nodes);
    values_.resize(m.values);
    parent_pool_.resize(m.pool);
    if (adjoints_.size() > m.values) adjoints_.resize(m.values);
    last_backward_size_ = static_cast<std::size_t>(-1);
}

void Tape::reset() {
    nodes_.clear();
    values_.clear();
    parent_pool_.clear();
    adjoints_.clear();
    last_backward_size_ = static_cast<std::size_t>(-1);
}

}  // namespace epiga::ad
