#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "epiga/errors.hpp"

namespace epiga::ad {

// Dense shapes of rank 0 (scalar), 1 (vector) or 2 (row-major matrix).
struct Shape {
    std::array<std::size_t, 2> dim{1, 1};
    int rank = 0;

    static Shape scalar() { return {}; }
    static Shape vector(std::size_t n) { return {{n, 1}, 1}; }
    static Shape matrix(std::size_t rows, std::size_t cols) { return {{rows, cols}, 2}; }

    std::size_t rows() const { return dim[0]; }
    std::size_t cols() const { return dim[1]; }
    std::size_t count() const { return dim[0] * dim[1]; }

    bool operator==(const Shape& o) const { return rank == o.rank && dim == o.dim; }
    bool operator!=(const Shape& o) const { return !(*this == o); }
};

std::string to_string(const Shape& s);

// Value carrier: a shape plus a flat row-major array.
struct Tensor {
    Shape shape;
    std::vector<double> values;

    Tensor() = default;
    Tensor(Shape s, std::vector<double> v) : shape(s), values(std::move(v)) {
        if (shape.count() != values.size())
            throw StructuralError("tensor shape " + to_string(shape) + " does not match value count");
    }

    static Tensor scalar(double x) { return Tensor(Shape::scalar(), {x}); }
    static Tensor vector(std::vector<double> v) {
        Shape s = Shape::vector(v.size());
        return Tensor(s, std::move(v));
    }
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
        return Tensor(Shape::matrix(rows, cols), std::move(v));
    }
    static Tensor zeros(Shape s) { return Tensor(s, std::vector<double>(s.count(), 0.0)); }

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    double& at(std::size_t r, std::size_t c) { return values[r * shape.cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * shape.cols() + c]; }
};

}  // namespace epiga::ad
