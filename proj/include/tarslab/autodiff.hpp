#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tarslab/tensor.hpp"

// Tape-based reverse-mode autodiff. A Graph is built per training step and
// dropped afterwards; nodes are stored in construction order, which is a
// topological order by construction, and the backward sweep visits each node
// exactly once in reverse. Subgraphs that cannot reach a tracked leaf carry
// no backward closure, so frozen-model forwards cost no extra memory.
namespace tarslab::ag {

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

class Graph {
  public:
    Var input(Tensor value);  // constant leaf
    Var param(Tensor value);  // tracked leaf

    const Tensor& val(Var v) const;
    bool tracked(Var v) const;
    std::size_t size() const { return nodes_.size(); }

    // Reverse sweep from a scalar loss. May be called once per graph.
    void backward(Var loss);

    // Gradient of the last backward() w.r.t. v; zeros when v was not reached.
    Tensor grad_of(Var v) const;

    // --- internal, used by op builders ---
    using BackFn = std::function<void(Graph&, int)>;
    Var emit(Tensor value, std::vector<int> parents, BackFn back);
    Tensor& grad_buf(int id);
    const Tensor& node_val(int id) const { return nodes_[id].value; }
    bool node_tracked(int id) const { return nodes_[id].needs_grad; }

  private:
    struct Node {
        Tensor value;
        bool needs_grad = false;
        std::vector<int> parents;
        BackFn back;
        Tensor grad;
        bool grad_set = false;
    };
    std::vector<Node> nodes_;
    bool swept_ = false;

    void check(Var v) const;
};

// Elementwise and structural ops.
Var add(Graph& g, Var a, Var b);
Var sub(Graph& g, Var a, Var b);
Var mul(Graph& g, Var a, Var b);
Var scale(Graph& g, Var a, double c);
Var add_rowvec(Graph& g, Var m, Var v);  // broadcast 1 x d over rows
Var matmul(Graph& g, Var a, Var b);
Var gather_rows(Graph& g, Var table, const std::vector<int>& ids);
Var slice_rows(Graph& g, Var m, std::size_t start, std::size_t count);
Var mean_rows(Graph& g, Var m);           // 1 x d
Var causal_prefix_mean(Graph& g, Var m);  // out[t] = mean of rows 0..t
Var tanh_vec(Graph& g, Var a);
Var sigmoid(Graph& g, Var a);
Var log_softmax_rows(Graph& g, Var logits);
Var sum(Graph& g, Var a);  // scalar
Var sum_select(Graph& g, Var m, const std::vector<int>& col_per_row);  // scalar
Var select_entries(Graph& g, Var vec, const std::vector<int>& idx);
Var mean_vec(Graph& g, Var vec);  // scalar
Var log_vec(Graph& g, Var vec);   // elementwise ln, entries must be > 0
Var neg_log_sigmoid(Graph& g, Var s);  // -ln sigmoid(s), stable for |s| large

// ||Re(DFT along rows of z)||_2 per frequency; z is L x D, result length L.
// Radix-2 FFT when L is a power of two, direct evaluation otherwise.
Var spectral_magnitude(Graph& g, Var z);

// Plain-tensor helpers shared with non-differentiable callers.
Tensor t_matmul(const Tensor& a, const Tensor& b);
Tensor t_transpose(const Tensor& m);
Tensor t_gather_rows(const Tensor& table, const std::vector<int>& ids);
Tensor l2_normalize_rows(const Tensor& m);
double sigmoid_scalar(double x);

// Real parts of the DFT of each column sequence: z is L x D row-major,
// out[k*D + d] = Re(sum_l z[l,d] exp(-2*pi*i*k*l/L)).
void spectral_real_parts(const double* z, std::size_t len, std::size_t dim, double* out);

}  // namespace tarslab::ag
