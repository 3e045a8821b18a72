#include "planopt/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace planopt::ad {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

Tensor Tensor::row(std::span<const double> data) {
  Tensor t(1, static_cast<int>(data.size()));
  std::copy(data.begin(), data.end(), t.v.begin());
  return t;
}

bool Tensor::all_finite() const {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void matmul_accum(const Tensor& a, const Tensor& b, Tensor& out) {
  const int rows = a.rows, inner = a.cols, cols = b.cols;
  for (int r = 0; r < rows; ++r) {
    const double* arow = &a.v[static_cast<size_t>(r) * inner];
    double* orow = &out.v[static_cast<size_t>(r) * cols];
    for (int i = 0; i < inner; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      const double* brow = &b.v[static_cast<size_t>(i) * cols];
      for (int c = 0; c < cols; ++c) orow[c] += av * brow[c];
    }
  }
}

Tensor matmul_plain(const Tensor& a, const Tensor& b) {
  Tensor out(a.rows, b.cols);
  matmul_accum(a, b, out);
  return out;
}

NodeId Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

Tensor& Graph::grad_buf(NodeId id) {
  Node& n = at(id);
  if (n.grad.v.empty()) n.grad = Tensor(n.val.rows, n.val.cols);
  return n.grad;
}

NodeId Graph::input(Tensor value) {
  Node n;
  n.val = std::move(value);
  n.op = Op::input;
  return push(std::move(n));
}

NodeId Graph::input_row(std::span<const double> data) { return input(Tensor::row(data)); }

NodeId Graph::param(Param& p) {
  Node n;
  n.val = p.value;
  n.op = Op::param;
  n.bound = &p;
  n.needs_grad = true;
  return push(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  const Tensor& ta = at(a).val;
  const Tensor& tb = at(b).val;
  check(ta.cols == tb.rows, "matmul: inner dimensions differ");
  Node n;
  n.val = matmul_plain(ta, tb);
  n.op = Op::matmul;
  n.a = a;
  n.b = b;
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  return push(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) {
  const Tensor& ta = at(a).val;
  const Tensor& tb = at(b).val;
  check(ta.same_shape(tb), "add: shape mismatch");
  Node n;
  n.val = ta;
  for (size_t i = 0; i < n.val.count(); ++i) n.val.v[i] += tb.v[i];
  n.op = Op::add;
  n.a = a;
  n.b = b;
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  return push(std::move(n));
}

NodeId Graph::sub(NodeId a, NodeId b) {
  const Tensor& ta = at(a).val;
  const Tensor& tb = at(b).val;
  check(ta.same_shape(tb), "sub: shape mismatch");
  Node n;
  n.val = ta;
  for (size_t i = 0; i < n.val.count(); ++i) n.val.v[i] -= tb.v[i];
  n.op = Op::sub;
  n.a = a;
  n.b = b;
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  return push(std::move(n));
}

NodeId Graph::mul(NodeId a, NodeId b) {
  const Tensor& ta = at(a).val;
  const Tensor& tb = at(b).val;
  check(ta.same_shape(tb), "mul: shape mismatch");
  Node n;
  n.val = ta;
  for (size_t i = 0; i < n.val.count(); ++i) n.val.v[i] *= tb.v[i];
  n.op = Op::mul;
  n.a = a;
  n.b = b;
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  return push(std::move(n));
}

NodeId Graph::add_rowvec(NodeId a, NodeId row) {
  const Tensor& ta = at(a).val;
  const Tensor& tr = at(row).val;
  check(tr.rows == 1 && tr.cols == ta.cols, "add_rowvec: need 1xC row matching columns");
  Node n;
  n.val = ta;
  for (int r = 0; r < ta.rows; ++r) {
    for (int c = 0; c < ta.cols; ++c) n.val.at(r, c) += tr.at(0, c);
  }
  n.op = Op::add_rowvec;
  n.a = a;
  n.b = row;
  n.needs_grad = at(a).needs_grad || at(row).needs_grad;
  return push(std::move(n));
}

NodeId Graph::scale(NodeId a, double k) {
  Node n;
  n.val = at(a).val;
  for (double& x : n.val.v) x *= k;
  n.op = Op::affine_const;
  n.a = a;
  n.k0 = k;
  n.k1 = 0.0;
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

NodeId Graph::add_const(NodeId a, double k) {
  Node n;
  n.val = at(a).val;
  for (double& x : n.val.v) x += k;
  n.op = Op::affine_const;
  n.a = a;
  n.k0 = 1.0;
  n.k1 = k;
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

NodeId Graph::tanh(NodeId a) {
  Node n;
  n.val = at(a).val;
  for (double& x : n.val.v) x = std::tanh(x);
  n.op = Op::tanh;
  n.a = a;
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

NodeId Graph::sigmoid(NodeId a) {
  Node n;
  n.val = at(a).val;
  for (double& x : n.val.v) x = stable_sigmoid(x);
  n.op = Op::sigmoid;
  n.a = a;
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

NodeId Graph::softmax_rows(NodeId a) {
  Node n;
  n.val = at(a).val;
  for (int r = 0; r < n.val.rows; ++r) {
    double* row = &n.val.v[static_cast<size_t>(r) * n.val.cols];
    const double m = *std::max_element(row, row + n.val.cols);
    double sum = 0.0;
    for (int c = 0; c < n.val.cols; ++c) {
      row[c] = std::exp(row[c] - m);
      sum += row[c];
    }
    for (int c = 0; c < n.val.cols; ++c) row[c] /= sum;
  }
  n.op = Op::softmax_rows;
  n.a = a;
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

NodeId Graph::clamp(NodeId a, double lo, double hi) {
  check(lo < hi, "clamp: lo must be < hi");
  Node n;
  n.val = at(a).val;
  for (double& x : n.val.v) x = std::clamp(x, lo, hi);
  n.op = Op::clamp;
  n.a = a;
  n.k0 = lo;
  n.k1 = hi;
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

NodeId Graph::slice_cols(NodeId a, int begin, int len) {
  const Tensor& ta = at(a).val;
  check(begin >= 0 && len >= 1 && begin + len <= ta.cols, "slice_cols: range out of bounds");
  Node n;
  n.val = Tensor(ta.rows, len);
  for (int r = 0; r < ta.rows; ++r) {
    for (int c = 0; c < len; ++c) n.val.at(r, c) = ta.at(r, begin + c);
  }
  n.op = Op::slice_cols;
  n.a = a;
  n.i0 = begin;
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

NodeId Graph::concat_cols(std::span<const NodeId> parts) {
  check(!parts.empty(), "concat_cols: no operands");
  const int rows = at(parts[0]).val.rows;
  int cols = 0;
  bool needs = false;
  for (NodeId p : parts) {
    check(at(p).val.rows == rows, "concat_cols: row mismatch");
    cols += at(p).val.cols;
    needs = needs || at(p).needs_grad;
  }
  Node n;
  n.val = Tensor(rows, cols);
  int offset = 0;
  for (NodeId p : parts) {
    const Tensor& tp = at(p).val;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < tp.cols; ++c) n.val.at(r, offset + c) = tp.at(r, c);
    }
    offset += tp.cols;
  }
  n.op = Op::concat_cols;
  n.list.assign(parts.begin(), parts.end());
  n.needs_grad = needs;
  return push(std::move(n));
}

NodeId Graph::row_sum(NodeId a) {
  const Tensor& ta = at(a).val;
  Node n;
  n.val = Tensor(ta.rows, 1);
  for (int r = 0; r < ta.rows; ++r) {
    double s = 0.0;
    for (int c = 0; c < ta.cols; ++c) s += ta.at(r, c);
    n.val.at(r, 0) = s;
  }
  n.op = Op::row_sum;
  n.a = a;
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

NodeId Graph::reduce_sum(NodeId a) {
  Node n;
  n.val = Tensor(1, 1);
  for (double x : at(a).val.v) n.val.v[0] += x;
  n.op = Op::reduce_sum;
  n.a = a;
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

NodeId Graph::reduce_mean(NodeId a) {
  check(at(a).val.count() > 0, "reduce_mean: empty tensor");
  Node n;
  n.val = Tensor(1, 1);
  for (double x : at(a).val.v) n.val.v[0] += x;
  n.val.v[0] /= static_cast<double>(at(a).val.count());
  n.op = Op::reduce_mean;
  n.a = a;
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

NodeId Graph::gaussian_reparam(NodeId mu, NodeId log_sigma, NodeId eps) {
  const Tensor& tm = at(mu).val;
  const Tensor& tl = at(log_sigma).val;
  const Tensor& te = at(eps).val;
  check(tl.rows == 1 && tl.cols == tm.cols, "gaussian_reparam: log_sigma must be 1xD");
  check(te.same_shape(tm), "gaussian_reparam: eps/mu shape mismatch");
  Node n;
  n.val = tm;
  for (int r = 0; r < tm.rows; ++r) {
    for (int c = 0; c < tm.cols; ++c) {
      n.val.at(r, c) += std::exp(tl.at(0, c)) * te.at(r, c);
    }
  }
  n.op = Op::reparam;
  n.a = mu;
  n.b = log_sigma;
  n.c = eps;
  n.needs_grad = at(mu).needs_grad || at(log_sigma).needs_grad || at(eps).needs_grad;
  return push(std::move(n));
}

NodeId Graph::gaussian_nll(NodeId y, NodeId mu, NodeId log_sigma) {
  const Tensor& ty = at(y).val;
  const Tensor& tm = at(mu).val;
  const Tensor& tl = at(log_sigma).val;
  check(ty.cols == 1 && tm.same_shape(ty) && tl.same_shape(ty), "gaussian_nll: operands must be Bx1");
  Node n;
  n.val = Tensor(ty.rows, 1);
  for (int r = 0; r < ty.rows; ++r) {
    const double resid = ty.at(r, 0) - tm.at(r, 0);
    const double ls = tl.at(r, 0);
    n.val.at(r, 0) = 0.5 * (resid * resid * std::exp(-2.0 * ls) + 2.0 * ls + kLog2Pi);
  }
  n.op = Op::nll;
  n.a = y;
  n.b = mu;
  n.c = log_sigma;
  n.needs_grad = at(y).needs_grad || at(mu).needs_grad || at(log_sigma).needs_grad;
  return push(std::move(n));
}

void Graph::backward(NodeId loss) {
  check(loss >= 0 && loss < static_cast<NodeId>(nodes_.size()), "backward: bad node id");
  check(at(loss).val.rows == 1 && at(loss).val.cols == 1, "backward: loss must be scalar");
  grad_buf(loss).v[0] = 1.0;

  for (NodeId id = loss; id >= 0; --id) {
    Node& n = at(id);
    if (n.grad.v.empty() || !n.needs_grad) continue;
    const Tensor& g = n.grad;
    switch (n.op) {
      case Op::input:
        break;
      case Op::param:
        for (size_t i = 0; i < g.count(); ++i) n.bound->grad.v[i] += g.v[i];
        break;
      case Op::matmul: {
        const Tensor& a = at(n.a).val;
        const Tensor& b = at(n.b).val;
        if (at(n.a).needs_grad) {
          Tensor& da = grad_buf(n.a);
          // dA = dC * B^T
          for (int r = 0; r < a.rows; ++r) {
            for (int i = 0; i < a.cols; ++i) {
              const double* grow = &g.v[static_cast<size_t>(r) * g.cols];
              const double* brow = &b.v[static_cast<size_t>(i) * b.cols];
              double s = 0.0;
              for (int c = 0; c < b.cols; ++c) s += grow[c] * brow[c];
              da.at(r, i) += s;
            }
          }
        }
        if (at(n.b).needs_grad) {
          Tensor& db = grad_buf(n.b);
          // dB = A^T * dC
          for (int r = 0; r < a.rows; ++r) {
            const double* arow = &a.v[static_cast<size_t>(r) * a.cols];
            const double* grow = &g.v[static_cast<size_t>(r) * g.cols];
            for (int i = 0; i < a.cols; ++i) {
              const double av = arow[i];
              if (av == 0.0) continue;
              double* dbrow = &db.v[static_cast<size_t>(i) * db.cols];
              for (int c = 0; c < g.cols; ++c) dbrow[c] += av * grow[c];
            }
          }
        }
        break;
      }
      case Op::add:
        if (at(n.a).needs_grad) {
          Tensor& da = grad_buf(n.a);
          for (size_t i = 0; i < g.count(); ++i) da.v[i] += g.v[i];
        }
        if (at(n.b).needs_grad) {
          Tensor& db = grad_buf(n.b);
          for (size_t i = 0; i < g.count(); ++i) db.v[i] += g.v[i];
        }
        break;
      case Op::sub:
        if (at(n.a).needs_grad) {
          Tensor& da = grad_buf(n.a);
          for (size_t i = 0; i < g.count(); ++i) da.v[i] += g.v[i];
        }
        if (at(n.b).needs_grad) {
          Tensor& db = grad_buf(n.b);
          for (size_t i = 0; i < g.count(); ++i) db.v[i] -= g.v[i];
        }
        break;
      case Op::mul:
        if (at(n.a).needs_grad) {
          Tensor& da = grad_buf(n.a);
          const Tensor& b = at(n.b).val;
          for (size_t i = 0; i < g.count(); ++i) da.v[i] += g.v[i] * b.v[i];
        }
        if (at(n.b).needs_grad) {
          Tensor& db = grad_buf(n.b);
          const Tensor& a = at(n.a).val;
          for (size_t i = 0; i < g.count(); ++i) db.v[i] += g.v[i] * a.v[i];
        }
        break;
      case Op::add_rowvec:
        if (at(n.a).needs_grad) {
          Tensor& da = grad_buf(n.a);
          for (size_t i = 0; i < g.count(); ++i) da.v[i] += g.v[i];
        }
        if (at(n.b).needs_grad) {
          Tensor& dr = grad_buf(n.b);
          for (int r = 0; r < g.rows; ++r) {
            for (int c = 0; c < g.cols; ++c) dr.at(0, c) += g.at(r, c);
          }
        }
        break;
      case Op::affine_const: {
        Tensor& da = grad_buf(n.a);
        for (size_t i = 0; i < g.count(); ++i) da.v[i] += n.k0 * g.v[i];
        break;
      }
      case Op::tanh: {
        Tensor& da = grad_buf(n.a);
        for (size_t i = 0; i < g.count(); ++i) {
          da.v[i] += g.v[i] * (1.0 - n.val.v[i] * n.val.v[i]);
        }
        break;
      }
      case Op::sigmoid: {
        Tensor& da = grad_buf(n.a);
        for (size_t i = 0; i < g.count(); ++i) {
          da.v[i] += g.v[i] * n.val.v[i] * (1.0 - n.val.v[i]);
        }
        break;
      }
      case Op::softmax_rows: {
        Tensor& da = grad_buf(n.a);
        for (int r = 0; r < g.rows; ++r) {
          double dot = 0.0;
          for (int c = 0; c < g.cols; ++c) dot += g.at(r, c) * n.val.at(r, c);
          for (int c = 0; c < g.cols; ++c) {
            da.at(r, c) += n.val.at(r, c) * (g.at(r, c) - dot);
          }
        }
        break;
      }
      case Op::clamp: {
        Tensor& da = grad_buf(n.a);
        const Tensor& a = at(n.a).val;
        for (size_t i = 0; i < g.count(); ++i) {
          if (a.v[i] >= n.k0 && a.v[i] <= n.k1) da.v[i] += g.v[i];
        }
        break;
      }
      case Op::slice_cols: {
        Tensor& da = grad_buf(n.a);
        for (int r = 0; r < g.rows; ++r) {
          for (int c = 0; c < g.cols; ++c) da.at(r, n.i0 + c) += g.at(r, c);
        }
        break;
      }
      case Op::concat_cols: {
        int offset = 0;
        for (NodeId p : n.list) {
          const int pc = at(p).val.cols;
          if (at(p).needs_grad) {
            Tensor& dp = grad_buf(p);
            for (int r = 0; r < g.rows; ++r) {
              for (int c = 0; c < pc; ++c) dp.at(r, c) += g.at(r, offset + c);
            }
          }
          offset += pc;
        }
        break;
      }
      case Op::row_sum: {
        Tensor& da = grad_buf(n.a);
        for (int r = 0; r < da.rows; ++r) {
          const double gr = g.at(r, 0);
          for (int c = 0; c < da.cols; ++c) da.at(r, c) += gr;
        }
        break;
      }
      case Op::reduce_sum: {
        Tensor& da = grad_buf(n.a);
        for (double& x : da.v) x += g.v[0];
        break;
      }
      case Op::reduce_mean: {
        Tensor& da = grad_buf(n.a);
        const double k = g.v[0] / static_cast<double>(da.count());
        for (double& x : da.v) x += k;
        break;
      }
      case Op::reparam: {
        const Tensor& ls = at(n.b).val;
        const Tensor& mu = at(n.a).val;
        if (at(n.a).needs_grad) {
          Tensor& dm = grad_buf(n.a);
          for (size_t i = 0; i < g.count(); ++i) dm.v[i] += g.v[i];
        }
        if (at(n.b).needs_grad) {
          Tensor& dl = grad_buf(n.b);
          // d out / d ls_c = exp(ls_c) * eps[r, c] = out - mu
          for (int r = 0; r < g.rows; ++r) {
            for (int c = 0; c < g.cols; ++c) {
              dl.at(0, c) += g.at(r, c) * (n.val.at(r, c) - mu.at(r, c));
            }
          }
        }
        if (at(n.c).needs_grad) {
          Tensor& de = grad_buf(n.c);
          for (int r = 0; r < g.rows; ++r) {
            for (int c = 0; c < g.cols; ++c) de.at(r, c) += g.at(r, c) * std::exp(ls.at(0, c));
          }
        }
        break;
      }
      case Op::nll: {
        const Tensor& y = at(n.a).val;
        const Tensor& mu = at(n.b).val;
        const Tensor& ls = at(n.c).val;
        for (int r = 0; r < g.rows; ++r) {
          const double gr = g.at(r, 0);
          const double resid = y.at(r, 0) - mu.at(r, 0);
          const double e = std::exp(-2.0 * ls.at(r, 0));
          if (at(n.a).needs_grad) grad_buf(n.a).at(r, 0) += gr * resid * e;
          if (at(n.b).needs_grad) grad_buf(n.b).at(r, 0) += gr * (-resid * e);
          if (at(n.c).needs_grad) grad_buf(n.c).at(r, 0) += gr * (1.0 - resid * resid * e);
        }
        break;
      }
    }
  }
}

}  // namespace planopt::ad
