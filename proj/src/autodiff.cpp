#include "tarslab/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tarslab/kernels.hpp"

namespace tarslab::ag {

namespace {
const kern::Kernels& K() { return kern::active(); }

bool any_tracked(const Graph& g, const std::vector<int>& parents) {
    for (const int p : parents) {
        if (g.node_tracked(p)) return true;
    }
    return false;
}
}  // namespace

Var Graph::input(Tensor value) {
    nodes_.push_back(Node{std::move(value), false, {}, nullptr, {}, false});
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Graph::param(Tensor value) {
    nodes_.push_back(Node{std::move(value), true, {}, nullptr, {}, false});
    return Var{static_cast<int>(nodes_.size()) - 1};
}

void Graph::check(Var v) const {
    if (!v.valid() || v.id >= static_cast<int>(nodes_.size())) {
        fail_contract("autodiff: variable does not belong to this graph");
    }
}

const Tensor& Graph::val(Var v) const {
    check(v);
    return nodes_[v.id].value;
}

bool Graph::tracked(Var v) const {
    check(v);
    return nodes_[v.id].needs_grad;
}

Var Graph::emit(Tensor value, std::vector<int> parents, BackFn back) {
    const bool needs = any_tracked(*this, parents);
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs;
    if (needs) {
        n.parents = std::move(parents);
        n.back = std::move(back);
    }
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Tensor& Graph::grad_buf(int id) {
    Node& n = nodes_[id];
    if (!n.grad_set) {
        n.grad = Tensor::zeros(n.value.shape());
        n.grad_set = true;
    }
    return n.grad;
}

void Graph::backward(Var loss) {
    check(loss);
    if (swept_) fail_contract("autodiff: backward already run on this graph");
    if (nodes_[loss.id].value.numel() != 1) {
        fail_contract("autodiff: backward requires a scalar loss, got shape " +
                      nodes_[loss.id].value.shape_str());
    }
    swept_ = true;
    if (!nodes_[loss.id].needs_grad) return;  // loss independent of all params
    grad_buf(loss.id)[0] = 1.0;
    for (int id = loss.id; id >= 0; --id) {
        Node& n = nodes_[id];
        if (!n.grad_set || !n.back) continue;
        n.back(*this, id);
    }
}

Tensor Graph::grad_of(Var v) const {
    check(v);
    const Node& n = nodes_[v.id];
    if (n.grad_set) return n.grad;
    return Tensor::zeros(n.value.shape());
}

// ---------------------------------------------------------------------------
// ops

Var add(Graph& g, Var a, Var b) {
    const Tensor& ta = g.val(a);
    const Tensor& tb = g.val(b);
    if (!ta.same_shape(tb)) fail_dim("add", ta, tb);
    Tensor out(ta.shape());
    K().add(out.data(), ta.data(), tb.data(), out.numel());
    return g.emit(std::move(out), {a.id, b.id}, [a, b](Graph& gg, int self) {
        const Tensor& d = gg.grad_buf(self);
        if (gg.node_tracked(a.id)) K().axpy(gg.grad_buf(a.id).data(), 1.0, d.data(), d.numel());
        if (gg.node_tracked(b.id)) K().axpy(gg.grad_buf(b.id).data(), 1.0, d.data(), d.numel());
    });
}

Var sub(Graph& g, Var a, Var b) {
    const Tensor& ta = g.val(a);
    const Tensor& tb = g.val(b);
    if (!ta.same_shape(tb)) fail_dim("sub", ta, tb);
    Tensor out(ta.shape());
    K().sub(out.data(), ta.data(), tb.data(), out.numel());
    return g.emit(std::move(out), {a.id, b.id}, [a, b](Graph& gg, int self) {
        const Tensor& d = gg.grad_buf(self);
        if (gg.node_tracked(a.id)) K().axpy(gg.grad_buf(a.id).data(), 1.0, d.data(), d.numel());
        if (gg.node_tracked(b.id)) K().axpy(gg.grad_buf(b.id).data(), -1.0, d.data(), d.numel());
    });
}

Var mul(Graph& g, Var a, Var b) {
    const Tensor& ta = g.val(a);
    const Tensor& tb = g.val(b);
    if (!ta.same_shape(tb)) fail_dim("mul", ta, tb);
    Tensor out(ta.shape());
    K().mul(out.data(), ta.data(), tb.data(), out.numel());
    return g.emit(std::move(out), {a.id, b.id}, [a, b](Graph& gg, int self) {
        const Tensor& d = gg.grad_buf(self);
        const std::size_t n = d.numel();
        if (gg.node_tracked(a.id)) {
            Tensor& da = gg.grad_buf(a.id);
            const Tensor& vb = gg.node_val(b.id);
            for (std::size_t i = 0; i < n; ++i) da[i] += d[i] * vb[i];
        }
        if (gg.node_tracked(b.id)) {
            Tensor& db = gg.grad_buf(b.id);
            const Tensor& va = gg.node_val(a.id);
            for (std::size_t i = 0; i < n; ++i) db[i] += d[i] * va[i];
        }
    });
}

Var scale(Graph& g, Var a, double c) {
    const Tensor& ta = g.val(a);
    Tensor out = ta;
    K().scale(out.data(), c, out.numel());
    return g.emit(std::move(out), {a.id}, [a, c](Graph& gg, int self) {
        const Tensor& d = gg.grad_buf(self);
        K().axpy(gg.grad_buf(a.id).data(), c, d.data(), d.numel());
    });
}

Var add_rowvec(Graph& g, Var m, Var v) {
    const Tensor& tm = g.val(m);
    const Tensor& tv = g.val(v);
    if (tm.rank() != 2 || tv.rank() != 2 || tv.rows() != 1 || tv.cols() != tm.cols()) {
        fail_dim("add_rowvec", tm, tv);
    }
    const std::size_t rows = tm.rows(), cols = tm.cols();
    Tensor out(tm.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        K().add(out.data() + r * cols, tm.data() + r * cols, tv.data(), cols);
    }
    return g.emit(std::move(out), {m.id, v.id}, [m, v, rows, cols](Graph& gg, int self) {
        const Tensor& d = gg.grad_buf(self);
        if (gg.node_tracked(m.id)) {
            K().axpy(gg.grad_buf(m.id).data(), 1.0, d.data(), d.numel());
        }
        if (gg.node_tracked(v.id)) {
            Tensor& dv = gg.grad_buf(v.id);
            for (std::size_t r = 0; r < rows; ++r) {
                K().axpy(dv.data(), 1.0, d.data() + r * cols, cols);
            }
        }
    });
}

Var matmul(Graph& g, Var a, Var b) {
    const Tensor& ta = g.val(a);
    const Tensor& tb = g.val(b);
    if (ta.rank() != 2 || tb.rank() != 2 || ta.cols() != tb.rows()) {
        fail_dim("matmul", ta, tb);
    }
    Tensor out = t_matmul(ta, tb);
    const std::size_t m = ta.rows(), k = ta.cols(), n = tb.cols();
    return g.emit(std::move(out), {a.id, b.id}, [a, b, m, k, n](Graph& gg, int self) {
        const Tensor& d = gg.grad_buf(self);  // m x n
        if (gg.node_tracked(a.id)) {
            // dA = dC * B^T
            const Tensor bt = t_transpose(gg.node_val(b.id));
            Tensor da({m, k});
            K().matmul(da.data(), d.data(), bt.data(), m, n, k);
            K().axpy(gg.grad_buf(a.id).data(), 1.0, da.data(), da.numel());
        }
        if (gg.node_tracked(b.id)) {
            // dB = A^T * dC
            const Tensor at = t_transpose(gg.node_val(a.id));
            Tensor db({k, n});
            K().matmul(db.data(), at.data(), d.data(), k, m, n);
            K().axpy(gg.grad_buf(b.id).data(), 1.0, db.data(), db.numel());
        }
    });
}

Var gather_rows(Graph& g, Var table, const std::vector<int>& ids) {
    Tensor out = t_gather_rows(g.val(table), ids);
    const std::size_t cols = g.val(table).cols();
    return g.emit(std::move(out), {table.id}, [table, ids, cols](Graph& gg, int self) {
        const Tensor& d = gg.grad_buf(self);
        Tensor& dt = gg.grad_buf(table.id);
        for (std::size_t r = 0; r < ids.size(); ++r) {
            K().axpy(dt.data() + static_cast<std::size_t>(ids[r]) * cols, 1.0,
                     d.data() + r * cols, cols);
        }
    });
}

Var slice_rows(Graph& g, Var m, std::size_t start, std::size_t count) {
    const Tensor& tm = g.val(m);
    if (tm.rank() != 2 || start + count > tm.rows() || count == 0) {
        fail_contract("slice_rows: rows [" + std::to_string(start) + ", " +
                      std::to_string(start + count) + ") out of range for " + tm.shape_str());
    }
    const std::size_t cols = tm.cols();
    Tensor out({count, cols},
               std::vector<double>(tm.data() + start * cols, tm.data() + (start + count) * cols));
    return g.emit(std::move(out), {m.id}, [m, start, count, cols](Graph& gg, int self) {
        const Tensor& d = gg.grad_buf(self);
        Tensor& dm = gg.grad_buf(m.id);
        K().axpy(dm.data() + start * cols, 1.0, d.data(), count * cols);
    });
}

Var mean_rows(Graph& g, Var m) {
    const Tensor& tm = g.val(m);
    const std::size_t rows = tm.rows(), cols = tm.cols();
    Tensor out({1, cols});
    // column sums accumulate in sorted value order, so the pooled result is
    // invariant under row permutations
    std::vector<double> column(rows);
    for (std::size_t c = 0; c < cols; ++c) {
        for (std::size_t r = 0; r < rows; ++r) column[r] = tm.at(r, c);
        std::sort(column.begin(), column.end());
        double acc = 0.0;
        for (const double v : column) acc += v;
        out[c] = acc;
    }
    K().scale(out.data(), 1.0 / static_cast<double>(rows), cols);
    return g.emit(std::move(out), {m.id}, [m, rows, cols](Graph& gg, int self) {
        const Tensor& d = gg.grad_buf(self);
        Tensor& dm = gg.grad_buf(m.id);
        const double inv = 1.0 / static_cast<double>(rows);
        for (std::size_t r = 0; r < rows; ++r) K().axpy(dm.data() + r * cols, inv, d.data(), cols);
    });
}

Var causal_prefix_mean(Graph& g, Var m) {
    const Tensor& tm = g.val(m);
    const std::size_t rows = tm.rows(), cols = tm.cols();
    Tensor out(tm.shape());
    std::vector<double> acc(cols, 0.0);
    for (std::size_t t = 0; t < rows; ++t) {
        K().add(acc.data(), acc.data(), tm.data() + t * cols, cols);
        const double inv = 1.0 / static_cast<double>(t + 1);
        for (std::size_t c = 0; c < cols; ++c) out.data()[t * cols + c] = acc[c] * inv;
    }
    return g.emit(std::move(out), {m.id}, [m, rows, cols](Graph& gg, int self) {
        const Tensor& d = gg.grad_buf(self);
        Tensor& dm = gg.grad_buf(m.id);
        // d in[s] = sum_{t >= s} d out[t] / (t+1): reverse suffix accumulation
        std::vector<double> acc(cols, 0.0);
        for (std::size_t t = rows; t-- > 0;) {
            K().axpy(acc.data(), 1.0 / static_cast<double>(t + 1), d.data() + t * cols, cols);
            K().add(dm.data() + t * cols, dm.data() + t * cols, acc.data(), cols);
        }
    });
}

Var tanh_vec(Graph& g, Var a) {
    const Tensor& ta = g.val(a);
    Tensor out(ta.shape());
    for (std::size_t i = 0; i < ta.numel(); ++i) out[i] = std::tanh(ta[i]);
    return g.emit(std::move(out), {a.id}, [a](Graph& gg, int self) {
        const Tensor& d = gg.grad_buf(self);
        const Tensor& y = gg.node_val(self);
        Tensor& da = gg.grad_buf(a.id);
        for (std::size_t i = 0; i < d.numel(); ++i) da[i] += d[i] * (1.0 - y[i] * y[i]);
    });
}

double sigmoid_scalar(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Var sigmoid(Graph& g, Var a) {
    const Tensor& ta = g.val(a);
    Tensor out(ta.shape());
    for (std::size_t i = 0; i < ta.numel(); ++i) out[i] = sigmoid_scalar(ta[i]);
    return g.emit(std::move(out), {a.id}, [a](Graph& gg, int self) {
        const Tensor& d = gg.grad_buf(self);
        const Tensor& y = gg.node_val(self);
        Tensor& da = gg.grad_buf(a.id);
        for (std::size_t i = 0; i < d.numel(); ++i) da[i] += d[i] * y[i] * (1.0 - y[i]);
    });
}

Var log_softmax_rows(Graph& g, Var logits) {
    const Tensor& tl = g.val(logits);
    const std::size_t rows = tl.rows(), cols = tl.cols();
    Tensor out(tl.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = tl.data() + r * cols;
        double* o = out.data() + r * cols;
        const double mx = K().max(in, cols);  // stabilization
        double z = 0.0;
        for (std::size_t c = 0; c < cols; ++c) z += std::exp(in[c] - mx);
        const double lz = std::log(z) + mx;
        for (std::size_t c = 0; c < cols; ++c) o[c] = in[c] - lz;
    }
    return g.emit(std::move(out), {logits.id}, [logits, rows, cols](Graph& gg, int self) {
        const Tensor& d = gg.grad_buf(self);
        const Tensor& y = gg.node_val(self);
        Tensor& dl = gg.grad_buf(logits.id);
        for (std::size_t r = 0; r < rows; ++r) {
            const double rowsum = K().sum(d.data() + r * cols, cols);
            const double* dr = d.data() + r * cols;
            const double* yr = y.data() + r * cols;
            double* o = dl.data() + r * cols;
            for (std::size_t c = 0; c < cols; ++c) o[c] += dr[c] - std::exp(yr[c]) * rowsum;
        }
    });
}

Var sum(Graph& g, Var a) {
    const Tensor& ta = g.val(a);
    Tensor out = Tensor::scalar(K().sum(ta.data(), ta.numel()));
    return g.emit(std::move(out), {a.id}, [a](Graph& gg, int self) {
        const double d = gg.grad_buf(self)[0];
        Tensor& da = gg.grad_buf(a.id);
        for (std::size_t i = 0; i < da.numel(); ++i) da[i] += d;
    });
}

Var sum_select(Graph& g, Var m, const std::vector<int>& col_per_row) {
    const Tensor& tm = g.val(m);
    if (tm.rank() != 2 || col_per_row.size() != tm.rows()) {
        fail_contract("sum_select: need one column index per row of " + tm.shape_str());
    }
    const std::size_t cols = tm.cols();
    double acc = 0.0;
    for (std::size_t r = 0; r < col_per_row.size(); ++r) {
        const int c = col_per_row[r];
        if (c < 0 || static_cast<std::size_t>(c) >= cols) {
            fail_contract("sum_select: column id " + std::to_string(c) + " out of range [0, " +
                          std::to_string(cols) + ")");
        }
        acc += tm.at(r, static_cast<std::size_t>(c));
    }
    return g.emit(Tensor::scalar(acc), {m.id}, [m, col_per_row, cols](Graph& gg, int self) {
        const double d = gg.grad_buf(self)[0];
        Tensor& dm = gg.grad_buf(m.id);
        for (std::size_t r = 0; r < col_per_row.size(); ++r) {
            dm.data()[r * cols + static_cast<std::size_t>(col_per_row[r])] += d;
        }
    });
}

Var select_entries(Graph& g, Var vec, const std::vector<int>& idx) {
    const Tensor& tv = g.val(vec);
    if (idx.empty()) fail_contract("select_entries: empty index set");
    std::vector<double> vals(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const int j = idx[i];
        if (j < 0 || static_cast<std::size_t>(j) >= tv.numel()) {
            fail_contract("select_entries: index " + std::to_string(j) + " out of range");
        }
        vals[i] = tv[static_cast<std::size_t>(j)];
    }
    Tensor out({idx.size()}, std::move(vals));
    return g.emit(std::move(out), {vec.id}, [vec, idx](Graph& gg, int self) {
        const Tensor& d = gg.grad_buf(self);
        Tensor& dv = gg.grad_buf(vec.id);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            dv[static_cast<std::size_t>(idx[i])] += d[i];
        }
    });
}

Var mean_vec(Graph& g, Var vec) {
    const Tensor& tv = g.val(vec);
    const std::size_t n = tv.numel();
    Tensor out = Tensor::scalar(K().sum(tv.data(), n) / static_cast<double>(n));
    return g.emit(std::move(out), {vec.id}, [vec, n](Graph& gg, int self) {
        const double d = gg.grad_buf(self)[0] / static_cast<double>(n);
        Tensor& dv = gg.grad_buf(vec.id);
        for (std::size_t i = 0; i < n; ++i) dv[i] += d;
    });
}

Var log_vec(Graph& g, Var vec) {
    const Tensor& tv = g.val(vec);
    Tensor out(tv.shape());
    for (std::size_t i = 0; i < tv.numel(); ++i) {
        if (!(tv[i] > 0.0)) {
            fail_contract("log_vec: non-positive entry " + std::to_string(tv[i]));
        }
        out[i] = std::log(tv[i]);
    }
    return g.emit(std::move(out), {vec.id}, [vec](Graph& gg, int self) {
        const Tensor& d = gg.grad_buf(self);
        const Tensor& x = gg.node_val(vec.id);
        Tensor& dv = gg.grad_buf(vec.id);
        for (std::size_t i = 0; i < d.numel(); ++i) dv[i] += d[i] / x[i];
    });
}

Var neg_log_sigmoid(Graph& g, Var s) {
    const Tensor& ts = g.val(s);
    if (ts.numel() != 1) fail_contract("neg_log_sigmoid: expected scalar, got " + ts.shape_str());
    const double x = ts[0];
    // -ln sigmoid(x) = softplus(-x), evaluated without overflow/underflow
    const double z = -x;
    const double value = std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z)));
    return g.emit(Tensor::scalar(value), {s.id}, [s](Graph& gg, int self) {
        const double d = gg.grad_buf(self)[0];
        const double x0 = gg.node_val(s.id)[0];
        gg.grad_buf(s.id)[0] += d * (sigmoid_scalar(x0) - 1.0);
    });
}

// ---------------------------------------------------------------------------
// plain-tensor helpers

Tensor t_matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) fail_dim("matmul", a, b);
    Tensor c({a.rows(), b.cols()});
    K().matmul(c.data(), a.data(), b.data(), a.rows(), a.cols(), b.cols());
    return c;
}

Tensor t_transpose(const Tensor& m) {
    const std::size_t r = m.rows(), c = m.cols();
    Tensor out({c, r});
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) out.at(j, i) = m.at(i, j);
    }
    return out;
}

Tensor t_gather_rows(const Tensor& table, const std::vector<int>& ids) {
    if (table.rank() != 2) fail_contract("gather_rows: table must be rank-2");
    if (ids.empty()) fail_contract("gather_rows: empty id list");
    const std::size_t rows = table.rows(), cols = table.cols();
    Tensor out({ids.size(), cols});
    for (std::size_t r = 0; r < ids.size(); ++r) {
        const int id = ids[r];
        if (id < 0 || static_cast<std::size_t>(id) >= rows) {
            throw std::out_of_range("gather_rows: id " + std::to_string(id) +
                                    " outside table with " + std::to_string(rows) + " rows");
        }
        const double* src = table.data() + static_cast<std::size_t>(id) * cols;
        std::copy(src, src + cols, out.data() + r * cols);
    }
    return out;
}

Tensor l2_normalize_rows(const Tensor& m) {
    Tensor out = m;
    const std::size_t rows = m.rows(), cols = m.cols();
    for (std::size_t r = 0; r < rows; ++r) {
        double* row = out.data() + r * cols;
        const double norm = std::sqrt(K().sumsq(row, cols));
        if (norm == 0.0) fail_contract("l2_normalize_rows: zero row " + std::to_string(r));
        K().scale(row, 1.0 / norm, cols);
    }
    return out;
}

}  // namespace tarslab::ag
