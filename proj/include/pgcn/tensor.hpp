#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace pgcn {

using Shape = std::vector<int>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);  // "(3, 4)"

// Dense row-major array of 64-bit floats. Shape is fixed at construction;
// reshaped() returns a copy with a new shape of equal element count.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape);  // zero-filled
    Tensor(Shape shape, std::vector<double> data);
    Tensor(Shape shape, std::initializer_list<double> data);

    static Tensor scalar(double v);
    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor ones(Shape shape);
    static Tensor full(Shape shape, double v);
    static Tensor identity(int n);

    const Shape& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int axis) const;  // negative axis counts from the back
    std::size_t numel() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // Multi-index access for tests and small-scale code paths.
    double& at(std::initializer_list<int> idx);
    double at(std::initializer_list<int> idx) const;

    Tensor reshaped(Shape new_shape) const;
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

    void fill(double v);

private:
    std::size_t flat_index(std::initializer_list<int> idx) const;

    Shape shape_;
    std::vector<double> data_;
};

// A named learnable value with an always-allocated gradient of equal shape.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string name, Tensor v);

    std::size_t numel() const { return value.numel(); }
    void zero_grad() { grad.fill(0.0); }
};

// ---- raw accumulating matrix kernels (row-major, C += op(A)*op(B)) ----
// Callers zero-initialize C. Loop orders are fixed so results are
// reproducible run to run.
void gemm_nn_acc(int m, int k, int n, const double* a, const double* b, double* c);
void gemm_nt_acc(int m, int k, int n, const double* a, const double* b, double* c);  // b is n x k
void gemm_tn_acc(int m, int k, int n, const double* a, const double* b, double* c);  // a is k x m

// ---- plain tensor helpers (not differentiable) ----
Tensor transpose2d(const Tensor& a);
// Swap axes 1 and 2 of a rank-3 or rank-4 tensor ([B,T,N,...] <-> [B,N,T,...]).
Tensor swap_axes12(const Tensor& a);
// Prepend `count` zero steps along the time axis (= rank-2 axis).
Tensor pad_time_front(const Tensor& a, int count);

double max_abs_diff(const Tensor& a, const Tensor& b);
bool bitwise_equal(const Tensor& a, const Tensor& b);

}  // namespace pgcn
