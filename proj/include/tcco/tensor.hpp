#pragma once

#include <cassert>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace tcco::nn {

// Dense 2-D row-major tensor of 64-bit floats. Desk scale: clarity and
// verifiability over speed, but the matmul kernels below are written to
// auto-vectorize.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}
    Tensor(int r, int c, std::vector<double> data) : rows(r), cols(c), v(std::move(data)) {
        assert(static_cast<std::size_t>(rows) * cols == v.size());
    }

    double& operator()(int i, int j) { return v[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const {
        return v[static_cast<std::size_t>(i) * cols + j];
    }
    double* row(int i) { return v.data() + static_cast<std::size_t>(i) * cols; }
    const double* row(int i) const { return v.data() + static_cast<std::size_t>(i) * cols; }
    std::size_t size() const { return v.size(); }
    void fill(double x) { std::fill(v.begin(), v.end(), x); }
};

// C += A * B
void matmul_acc(const Tensor& a, const Tensor& b, Tensor& c);
// C += A * B^T
void matmul_nt_acc(const Tensor& a, const Tensor& b, Tensor& c);
// C += A^T * B
void matmul_tn_acc(const Tensor& a, const Tensor& b, Tensor& c);

Tensor matmul(const Tensor& a, const Tensor& b);

// Named trainable array with its gradient accumulator.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;

    Param() = default;
    Param(std::string n, int r, int c) : name(std::move(n)), value(r, c), grad(r, c) {}
    void zero_grad() { grad.fill(0.0); }
};

// Reverse-mode tape. Creation order is a topological order, so the
// backward pass is a single reverse sweep; every node is visited once.
class Tape {
public:
    struct Var {
        int id = -1;
        int rows = 0;
        int cols = 0;
    };

    Var input(Tensor t);
    Var param(Param& p);

    Var matmul(Var a, Var b);
    Var matmul_nt(Var a, Var b);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var hadamard(Var a, Var b);
    Var scale(Var a, double c);
    Var add_rowvec(Var a, Var row);  // row is [1, cols], broadcast over rows
    Var relu(Var a);
    Var softmax_rows(Var a);
    Var layer_norm_rows(Var x, Var gain, Var bias, double eps = 1e-5);
    Var block(Var a, int r0, int c0, int nr, int nc);
    Var hstack(std::span<const Var> parts);
    Var vstack(std::span<const Var> parts);
    Var tile_rows(Var a, int times);
    Var select_per_row(Var a, std::vector<int> idx);  // one column per row
    Var sum_all(Var a);

    const Tensor& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].val; }
    const Tensor& grad_of(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].grad; }

    // Seeds d(scalar)=1 and accumulates gradients into every bound Param.
    void backward(Var scalar);

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor val;
        Tensor grad;
        // Backward step: receives the node's own output gradient and
        // value, accumulates into parents. Empty for leaves.
        std::function<void(Tape&, const Tensor& dself, const Tensor& vself)> back;
        Param* bound = nullptr;
    };

    using BackFn = std::function<void(Tape&, const Tensor&, const Tensor&)>;
    Var push(Tensor val, BackFn back, Param* bound = nullptr);
    Tensor& grad_mut(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }
    const Tensor& val_of(int id) const { return nodes_[static_cast<std::size_t>(id)].val; }

    std::vector<Node> nodes_;
};

// softmax((Q K^T)/sqrt(d_head) + mask) V for one head. Masked entries
// use a large negative constant so they vanish after the max-subtracted
// softmax. Gradients flow through the primitive composition.
Tape::Var scaled_dot_attention(Tape& t, Tape::Var q, Tape::Var k, Tape::Var v,
                               Tape::Var mask);

// Lower-triangular (causal) additive mask of side L, with positions
// before `valid_from` blocked as well. Diagonal entries always open so
// padded rows stay numerically sane.
Tensor causal_mask(int len, int valid_from = 0, double neg = -1e30);

}  // namespace tcco::nn
