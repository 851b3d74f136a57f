#pragma once

#include <functional>
#include <limits>

#include "clutter/tensor.hpp"

namespace clutter {

// Reverse-mode tape over Tensor values. A Var names a tape slot; ops append
// slots with backward closures. One tape per forward pass; backward() runs
// the closures in reverse and adds leaf gradients into the caller's
// accumulators. Single-threaded by design.
struct Var {
  int idx = -1;
  int rows = 0;
  int cols = 0;
};

class Tape {
 public:
  const Tensor& value(Var x) const { return nodes_[x.idx].val; }
  Tensor& grad(Var x) { return nodes_[x.idx].grad; }

  // Leaf whose gradient is accumulated into *acc (may be null for inputs).
  Var leaf(const Tensor& t, Tensor* acc = nullptr) {
    Var v = push(t);
    nodes_[v.idx].acc = acc;
    return v;
  }

  Var matmul(Var a, Var b) {
    Var out = push(clutter::matmul(value(a), value(b)));
    record(out, [this, a, b, out] {
      const Tensor& g = nodes_[out.idx].grad;
      const Tensor& av = value(a);
      const Tensor& bv = value(b);
      Tensor& ga = nodes_[a.idx].grad;
      Tensor& gb = nodes_[b.idx].grad;
      for (int i = 0; i < av.rows; ++i)
        for (int j = 0; j < bv.cols; ++j) {
          double gij = g.at(i, j);
          if (gij == 0.0) continue;
          for (int k = 0; k < av.cols; ++k) {
            ga.at(i, k) += gij * bv.at(k, j);
            gb.at(k, j) += gij * av.at(i, k);
          }
        }
    });
    return out;
  }

  Var add(Var a, Var b) {
    const Tensor& av = value(a);
    if (!av.same_shape(value(b))) throw std::logic_error("add shape mismatch");
    Tensor t = av;
    for (std::size_t i = 0; i < t.size(); ++i) t.v[i] += value(b).v[i];
    Var out = push(t);
    record(out, [this, a, b, out] {
      const Tensor& g = nodes_[out.idx].grad;
      for (std::size_t i = 0; i < g.size(); ++i) {
        nodes_[a.idx].grad.v[i] += g.v[i];
        nodes_[b.idx].grad.v[i] += g.v[i];
      }
    });
    return out;
  }

  Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

  // X [n x m] plus a row vector [1 x m] on every row.
  Var add_row(Var x, Var b) {
    const Tensor& xv = value(x);
    const Tensor& bv = value(b);
    if (bv.rows != 1 || bv.cols != xv.cols)
      throw std::logic_error("add_row shape mismatch");
    Tensor t = xv;
    for (int i = 0; i < t.rows; ++i)
      for (int j = 0; j < t.cols; ++j) t.at(i, j) += bv.at(0, j);
    Var out = push(t);
    record(out, [this, x, b, out] {
      const Tensor& g = nodes_[out.idx].grad;
      for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j) {
          nodes_[x.idx].grad.at(i, j) += g.at(i, j);
          nodes_[b.idx].grad.at(0, j) += g.at(i, j);
        }
    });
    return out;
  }

  Var scale(Var a, double c) {
    Tensor t = value(a);
    for (double& x : t.v) x *= c;
    Var out = push(t);
    record(out, [this, a, c, out] {
      const Tensor& g = nodes_[out.idx].grad;
      for (std::size_t i = 0; i < g.size(); ++i)
        nodes_[a.idx].grad.v[i] += c * g.v[i];
    });
    return out;
  }

  Var mul(Var a, Var b) {
    const Tensor& av = value(a);
    if (!av.same_shape(value(b))) throw std::logic_error("mul shape mismatch");
    Tensor t = av;
    for (std::size_t i = 0; i < t.size(); ++i) t.v[i] *= value(b).v[i];
    Var out = push(t);
    record(out, [this, a, b, out] {
      const Tensor& g = nodes_[out.idx].grad;
      for (std::size_t i = 0; i < g.size(); ++i) {
        nodes_[a.idx].grad.v[i] += g.v[i] * value(b).v[i];
        nodes_[b.idx].grad.v[i] += g.v[i] * value(a).v[i];
      }
    });
    return out;
  }

  Var leaky_relu(Var a, double slope) {
    Tensor t = value(a);
    for (double& x : t.v)
      if (x < 0.0) x *= slope;
    Var out = push(t);
    record(out, [this, a, slope, out] {
      const Tensor& g = nodes_[out.idx].grad;
      for (std::size_t i = 0; i < g.size(); ++i)
        nodes_[a.idx].grad.v[i] +=
            g.v[i] * (value(a).v[i] < 0.0 ? slope : 1.0);
    });
    return out;
  }

  Var concat_cols(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.rows != bv.rows) throw std::logic_error("concat rows mismatch");
    Tensor t(av.rows, av.cols + bv.cols);
    for (int i = 0; i < av.rows; ++i) {
      for (int j = 0; j < av.cols; ++j) t.at(i, j) = av.at(i, j);
      for (int j = 0; j < bv.cols; ++j) t.at(i, av.cols + j) = bv.at(i, j);
    }
    Var out = push(t);
    record(out, [this, a, b, out] {
      const Tensor& g = nodes_[out.idx].grad;
      const Tensor& av = value(a);
      const Tensor& bv = value(b);
      for (int i = 0; i < av.rows; ++i) {
        for (int j = 0; j < av.cols; ++j)
          nodes_[a.idx].grad.at(i, j) += g.at(i, j);
        for (int j = 0; j < bv.cols; ++j)
          nodes_[b.idx].grad.at(i, j) += g.at(i, av.cols + j);
      }
    });
    return out;
  }

  Var concat_cols(Var a, Var b, Var c) {
    return concat_cols(concat_cols(a, b), c);
  }

  Var concat_rows(Var a, Var b) {
    const Tensor& av = value(a);
    const Tensor& bv = value(b);
    if (av.cols != bv.cols) throw std::logic_error("concat cols mismatch");
    Tensor t(av.rows + bv.rows, av.cols);
    std::copy(av.v.begin(), av.v.end(), t.v.begin());
    std::copy(bv.v.begin(), bv.v.end(), t.v.begin() + av.size());
    Var out = push(t);
    record(out, [this, a, b, out] {
      const Tensor& g = nodes_[out.idx].grad;
      Tensor& ga = nodes_[a.idx].grad;
      Tensor& gb = nodes_[b.idx].grad;
      for (std::size_t i = 0; i < ga.size(); ++i) ga.v[i] += g.v[i];
      for (std::size_t i = 0; i < gb.size(); ++i)
        gb.v[i] += g.v[ga.size() + i];
    });
    return out;
  }

  Var exp(Var a) {
    Tensor t = value(a);
    for (double& x : t.v) x = std::exp(x);
    Var out = push(t);
    record(out, [this, a, out] {
      const Tensor& g = nodes_[out.idx].grad;
      const Tensor& ev = value(out);
      for (std::size_t i = 0; i < g.size(); ++i)
        nodes_[a.idx].grad.v[i] += g.v[i] * ev.v[i];
    });
    return out;
  }

  Var gather_rows(Var x, const std::vector<int>& idx) {
    const Tensor& xv = value(x);
    Tensor t(static_cast<int>(idx.size()), xv.cols);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (int j = 0; j < xv.cols; ++j)
        t.at(static_cast<int>(i), j) = xv.at(idx[i], j);
    Var out = push(t);
    record(out, [this, x, idx, out] {
      const Tensor& g = nodes_[out.idx].grad;
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (int j = 0; j < g.cols; ++j)
          nodes_[x.idx].grad.at(idx[i], j) += g.at(static_cast<int>(i), j);
    });
    return out;
  }

  // Row i of the result repeats the single row of x.
  Var broadcast_row(Var x, int n) {
    const Tensor& xv = value(x);
    if (xv.rows != 1) throw std::logic_error("broadcast needs a row vector");
    Tensor t(n, xv.cols);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < xv.cols; ++j) t.at(i, j) = xv.at(0, j);
    Var out = push(t);
    record(out, [this, x, out] {
      const Tensor& g = nodes_[out.idx].grad;
      for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j)
          nodes_[x.idx].grad.at(0, j) += g.at(i, j);
    });
    return out;
  }

  // Componentwise max over message rows sharing a receiver; receivers with
  // no incoming rows keep zeros. Gradient goes to the first maximal row.
  Var segment_max(Var msgs, const std::vector<int>& recv, int n) {
    const Tensor& mv = value(msgs);
    Tensor t(n, mv.cols);
    Tensor amax(n, mv.cols);
    for (double& x : amax.v) x = -1.0;
    for (int e = 0; e < mv.rows; ++e)
      for (int j = 0; j < mv.cols; ++j) {
        int r = recv[e];
        if (amax.at(r, j) < 0.0 || mv.at(e, j) > t.at(r, j)) {
          t.at(r, j) = mv.at(e, j);
          amax.at(r, j) = e;
        }
      }
    Var out = push(t);
    record(out, [this, msgs, amax, out] {
      const Tensor& g = nodes_[out.idx].grad;
      for (int r = 0; r < g.rows; ++r)
        for (int j = 0; j < g.cols; ++j) {
          int e = static_cast<int>(amax.at(r, j));
          if (e >= 0) nodes_[msgs.idx].grad.at(e, j) += g.at(r, j);
        }
    });
    return out;
  }

  // Softmax down a column vector [n x 1].
  Var softmax_col(Var x) {
    const Tensor& xv = value(x);
    if (xv.cols != 1) throw std::logic_error("softmax_col needs a column");
    Tensor t = xv;
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : t.v) hi = std::max(hi, v);
    double z = 0.0;
    for (double& v : t.v) z += (v = std::exp(v - hi));
    for (double& v : t.v) v /= z;
    Var out = push(t);
    record(out, [this, x, out] {
      const Tensor& g = nodes_[out.idx].grad;
      const Tensor& p = value(out);
      double dot = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) dot += g.v[i] * p.v[i];
      for (std::size_t i = 0; i < p.size(); ++i)
        nodes_[x.idx].grad.v[i] += p.v[i] * (g.v[i] - dot);
    });
    return out;
  }

  // sum_i w_i * row_i(x): [n x d] weighted by [n x 1] into [1 x d].
  Var rows_weighted_sum(Var x, Var w) {
    const Tensor& xv = value(x);
    const Tensor& wv = value(w);
    if (wv.rows != xv.rows || wv.cols != 1)
      throw std::logic_error("weight column mismatch");
    Tensor t(1, xv.cols);
    for (int i = 0; i < xv.rows; ++i)
      for (int j = 0; j < xv.cols; ++j)
        t.at(0, j) += wv.at(i, 0) * xv.at(i, j);
    Var out = push(t);
    record(out, [this, x, w, out] {
      const Tensor& g = nodes_[out.idx].grad;
      const Tensor& xv = value(x);
      const Tensor& wv = value(w);
      for (int i = 0; i < xv.rows; ++i)
        for (int j = 0; j < xv.cols; ++j) {
          nodes_[x.idx].grad.at(i, j) += wv.at(i, 0) * g.at(0, j);
          nodes_[w.idx].grad.at(i, 0) += xv.at(i, j) * g.at(0, j);
        }
    });
    return out;
  }

  // log softmax over the unmasked entries of a column; masked rows emit 0
  // and receive no gradient.
  Var masked_log_softmax_col(Var x, const std::vector<char>& mask) {
    const Tensor& xv = value(x);
    if (xv.cols != 1 || static_cast<int>(mask.size()) != xv.rows)
      throw std::logic_error("mask length mismatch");
    double hi = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < xv.rows; ++i)
      if (mask[i]) hi = std::max(hi, xv.at(i, 0));
    if (hi == -std::numeric_limits<double>::infinity())
      throw std::logic_error("all entries masked");
    double z = 0.0;
    for (int i = 0; i < xv.rows; ++i)
      if (mask[i]) z += std::exp(xv.at(i, 0) - hi);
    double lse = hi + std::log(z);
    Tensor t(xv.rows, 1);
    for (int i = 0; i < xv.rows; ++i)
      if (mask[i]) t.at(i, 0) = xv.at(i, 0) - lse;
    Var out = push(t);
    record(out, [this, x, mask, out] {
      const Tensor& g = nodes_[out.idx].grad;
      const Tensor& lp = value(out);
      double gsum = 0.0;
      for (int i = 0; i < g.rows; ++i)
        if (mask[i]) gsum += g.at(i, 0);
      for (int i = 0; i < g.rows; ++i)
        if (mask[i])
          nodes_[x.idx].grad.at(i, 0) +=
              g.at(i, 0) - std::exp(lp.at(i, 0)) * gsum;
    });
    return out;
  }

  Var sum_all(Var x) {
    Tensor t(1, 1);
    for (double v : value(x).v) t.v[0] += v;
    Var out = push(t);
    record(out, [this, x, out] {
      double g = nodes_[out.idx].grad.v[0];
      for (double& v : nodes_[x.idx].grad.v) v += g;
    });
    return out;
  }

  Var at(Var x, int r, int c) {
    Tensor t(1, 1);
    t.v[0] = value(x).at(r, c);
    Var out = push(t);
    record(out, [this, x, r, c, out] {
      nodes_[x.idx].grad.at(r, c) += nodes_[out.idx].grad.v[0];
    });
    return out;
  }

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape backwards, adding leaf
  // gradients into their accumulators.
  void backward(Var loss) {
    if (value(loss).size() != 1)
      throw std::logic_error("backward needs a scalar loss");
    nodes_[loss.idx].grad.v[0] = 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
      if (nodes_[i].back) nodes_[i].back();
      if (nodes_[i].acc) {
        Tensor& acc = *nodes_[i].acc;
        for (std::size_t k = 0; k < acc.size(); ++k)
          acc.v[k] += nodes_[i].grad.v[k];
      }
    }
  }

 private:
  struct Node {
    Tensor val;
    Tensor grad;
    Tensor* acc = nullptr;
    std::function<void()> back;
  };

  Var push(Tensor t) {
    Var v{static_cast<int>(nodes_.size()), t.rows, t.cols};
    Node n;
    n.grad = Tensor(t.rows, t.cols);
    n.val = std::move(t);
    nodes_.push_back(std::move(n));
    return v;
  }

  void record(Var v, std::function<void()> fn) {
    nodes_[v.idx].back = std::move(fn);
  }

  std::vector<Node> nodes_;
};

}  // namespace clutter
