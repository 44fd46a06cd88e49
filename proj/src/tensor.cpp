#include "pgcn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <sstream>

#include "pgcn/errors.hpp"

#ifdef PGCN_USE_OPENBLAS
#include <cblas.h>
extern "C" void openblas_set_num_threads(int);
#endif

namespace pgcn {

namespace {

#ifdef PGCN_USE_OPENBLAS
// Large products go through BLAS; small ones stay on the plain loops so
// that per-row arithmetic is independent of the other rows (the adjacency
// permutation-equivariance argument relies on that). Sparse left operands
// (road-network transition matrices) also stay on the loops, which skip
// zero entries. PGCN_THREADS caps the BLAS thread pool and defaults to 1
// for determinism.
constexpr std::size_t kBlasThreshold = 32768;

bool blas_ready() {
    static const bool ready = [] {
        int threads = 1;
        if (const char* env = std::getenv("PGCN_THREADS")) {
            threads = std::max(1, std::atoi(env));
        }
        openblas_set_num_threads(threads);
        return true;
    }();
    return ready;
}

bool mostly_dense(const double* a, std::size_t len) {
    std::size_t nonzero = 0;
    for (std::size_t i = 0; i < len; ++i) nonzero += a[i] != 0.0;
    return nonzero * 4 >= len;
}
#endif

}  // namespace

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw DimensionError("non-positive extent in shape " + shape_str(shape));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_numel(shape_) != data_.size()) {
        throw DimensionError("data length " + std::to_string(data_.size()) + " does not match shape " +
                             shape_str(shape_));
    }
}

Tensor::Tensor(Shape shape, std::initializer_list<double> data)
    : Tensor(std::move(shape), std::vector<double>(data)) {}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::ones(Shape shape) { return full(std::move(shape), 1.0); }

Tensor Tensor::full(Shape shape, double v) {
    Tensor t(std::move(shape));
    t.fill(v);
    return t;
}

Tensor Tensor::identity(int n) {
    Tensor t({n, n});
    for (int i = 0; i < n; ++i) t.data()[static_cast<std::size_t>(i) * n + i] = 1.0;
    return t;
}

int Tensor::dim(int axis) const {
    int r = rank();
    if (axis < 0) axis += r;
    if (axis < 0 || axis >= r) throw DimensionError("axis out of range for shape " + shape_str(shape_));
    return shape_[static_cast<std::size_t>(axis)];
}

std::size_t Tensor::flat_index(std::initializer_list<int> idx) const {
    if (static_cast<int>(idx.size()) != rank()) {
        throw DimensionError("index rank " + std::to_string(idx.size()) + " does not match shape " +
                             shape_str(shape_));
    }
    std::size_t flat = 0;
    std::size_t axis = 0;
    for (int i : idx) {
        int extent = shape_[axis];
        if (i < 0 || i >= extent) throw DimensionError("index out of bounds for shape " + shape_str(shape_));
        flat = flat * static_cast<std::size_t>(extent) + static_cast<std::size_t>(i);
        ++axis;
    }
    return flat;
}

double& Tensor::at(std::initializer_list<int> idx) { return data_[flat_index(idx)]; }
double Tensor::at(std::initializer_list<int> idx) const { return data_[flat_index(idx)]; }

Tensor Tensor::reshaped(Shape new_shape) const {
    if (shape_numel(new_shape) != data_.size()) {
        throw DimensionError("cannot reshape " + shape_str(shape_) + " to " + shape_str(new_shape));
    }
    return Tensor(std::move(new_shape), data_);
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Parameter::Parameter(std::string name, Tensor v) : name(std::move(name)), value(std::move(v)) {
    grad = Tensor(value.shape());
}

void gemm_nn_acc(int m, int k, int n, const double* a, const double* b, double* c) {
#ifdef PGCN_USE_OPENBLAS
    if (static_cast<std::size_t>(m) * k * n >= kBlasThreshold &&
        mostly_dense(a, static_cast<std::size_t>(m) * k) && blas_ready()) {
        cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, m, n, k, 1.0, a, k, b, n, 1.0, c, n);
        return;
    }
#endif
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::size_t>(i) * k;
        double* crow = c + static_cast<std::size_t>(i) * n;
        for (int kk = 0; kk < k; ++kk) {
            double av = arow[kk];
            if (av == 0.0) continue;
            const double* brow = b + static_cast<std::size_t>(kk) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void gemm_nt_acc(int m, int k, int n, const double* a, const double* b, double* c) {
#ifdef PGCN_USE_OPENBLAS
    if (static_cast<std::size_t>(m) * k * n >= kBlasThreshold && blas_ready()) {
        cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, m, n, k, 1.0, a, k, b, k, 1.0, c, n);
        return;
    }
#endif
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::size_t>(i) * k;
        double* crow = c + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* brow = b + static_cast<std::size_t>(j) * k;
            double acc = 0.0;
            for (int kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
            crow[j] += acc;
        }
    }
}

void gemm_tn_acc(int m, int k, int n, const double* a, const double* b, double* c) {
#ifdef PGCN_USE_OPENBLAS
    if (static_cast<std::size_t>(m) * k * n >= kBlasThreshold &&
        mostly_dense(a, static_cast<std::size_t>(m) * k) && blas_ready()) {
        cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, m, n, k, 1.0, a, m, b, n, 1.0, c, n);
        return;
    }
#endif
    for (int kk = 0; kk < k; ++kk) {
        const double* arow = a + static_cast<std::size_t>(kk) * m;
        const double* brow = b + static_cast<std::size_t>(kk) * n;
        for (int i = 0; i < m; ++i) {
            double av = arow[i];
            if (av == 0.0) continue;
            double* crow = c + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

Tensor transpose2d(const Tensor& a) {
    if (a.rank() != 2) throw DimensionError("transpose2d expects rank-2, got " + shape_str(a.shape()));
    int m = a.dim(0), n = a.dim(1);
    Tensor out({n, m});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            out.data()[static_cast<std::size_t>(j) * m + i] = a.data()[static_cast<std::size_t>(i) * n + j];
    return out;
}

Tensor swap_axes12(const Tensor& a) {
    if (a.rank() != 3 && a.rank() != 4) {
        throw DimensionError("swap_axes12 expects rank-3/4, got " + shape_str(a.shape()));
    }
    int b = a.dim(0), d1 = a.dim(1), d2 = a.dim(2);
    int tail = a.rank() == 4 ? a.dim(3) : 1;
    Shape out_shape = a.rank() == 4 ? Shape{b, d2, d1, tail} : Shape{b, d2, d1};
    Tensor out(out_shape);
    const std::size_t st = static_cast<std::size_t>(tail);
    for (int ib = 0; ib < b; ++ib)
        for (int i = 0; i < d1; ++i)
            for (int j = 0; j < d2; ++j) {
                const double* src = a.data() + ((static_cast<std::size_t>(ib) * d1 + i) * d2 + j) * st;
                double* dst = out.data() + ((static_cast<std::size_t>(ib) * d2 + j) * d1 + i) * st;
                std::memcpy(dst, src, st * sizeof(double));
            }
    return out;
}

Tensor pad_time_front(const Tensor& a, int count) {
    if (count < 0) throw DimensionError("pad_time_front: negative pad count");
    if (count == 0) return a;
    if (a.rank() < 2) throw DimensionError("pad_time_front expects rank >= 2, got " + shape_str(a.shape()));
    Shape out_shape = a.shape();
    int time_axis = a.rank() - 2;
    int t_in = out_shape[static_cast<std::size_t>(time_axis)];
    out_shape[static_cast<std::size_t>(time_axis)] = t_in + count;
    Tensor out(out_shape);
    std::size_t inner = static_cast<std::size_t>(a.dim(-1));
    std::size_t outer = a.numel() / (inner * static_cast<std::size_t>(t_in));
    for (std::size_t o = 0; o < outer; ++o) {
        const double* src = a.data() + o * t_in * inner;
        double* dst = out.data() + (o * (t_in + count) + count) * inner;
        std::memcpy(dst, src, static_cast<std::size_t>(t_in) * inner * sizeof(double));
    }
    return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw DimensionError("max_abs_diff: shapes " + shape_str(a.shape()) + " vs " +
                                               shape_str(b.shape()));
    double m = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) return false;
    return std::memcmp(a.data(), b.data(), a.numel() * sizeof(double)) == 0;
}

}  // namespace pgcn
