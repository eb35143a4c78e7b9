#include "contactdyn/num/graph.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "contactdyn/error.hpp"

namespace contactdyn::num {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

CMapMat as_mat(const Tensor& t, std::size_t rows, std::size_t cols) {
  return CMapMat(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
MapMat as_mat(Tensor& t, std::size_t rows, std::size_t cols) {
  return MapMat(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void require(bool cond, const std::string& msg) {
  if (!cond) fail(ErrorCode::kShape, msg);
}

double sigmoid_fn(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

// ParameterSet ---------------------------------------------------------------

std::size_t ParameterSet::add(std::string name, Tensor value, bool trainable) {
  if (index_.count(name)) fail(ErrorCode::kInvalidArgument, "duplicate parameter " + name);
  const std::size_t i = entries_.size();
  index_.emplace(name, i);
  Tensor grad(value.shape());
  entries_.push_back(Entry{std::move(name), std::move(value), std::move(grad), trainable});
  return i;
}

bool ParameterSet::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

std::size_t ParameterSet::index(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) fail(ErrorCode::kInvalidArgument, "unknown parameter " + std::string(name));
  return it->second;
}

void ParameterSet::zero_grad() {
  for (auto& e : entries_) e.grad.fill(0.0);
}

std::size_t ParameterSet::trainable_count() const {
  return static_cast<std::size_t>(std::count_if(entries_.begin(), entries_.end(), [](const Entry& e) { return e.trainable; }));
}

bool ParameterSet::operator==(const ParameterSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || a.trainable != b.trainable || !(a.value == b.value)) return false;
  }
  return true;
}

// Graph ----------------------------------------------------------------------

const Graph::Node& Graph::node(Var v) const {
  if (!v.valid() || v.generation != generation_ || v.id >= nodes_.size()) {
    fail(ErrorCode::kInvalidArgument, "variable does not belong to the current tape (backward before forward?)");
  }
  return nodes_[v.id];
}

const Tensor& Graph::val(std::uint32_t id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.value;
}

const Tensor& Graph::value(Var v) const {
  node(v);
  return val(v.id);
}

Tensor& Graph::grad_of(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.size() != val(id).size() || n.grad.shape() != val(id).shape()) n.grad = Tensor(val(id).shape());
  return n.grad;
}

Var Graph::push(const char* op, Tensor value, bool needs_grad, std::function<void(const Tensor&)> bw) {
  if (!value.all_finite()) fail(ErrorCode::kNonFinite, std::string("non-finite value produced by ") + op);
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.backward = std::move(bw);
  n.op = op;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1), generation_};
}

Var Graph::input(Tensor value) { return push("input", std::move(value), false, nullptr); }

Var Graph::param(const ParameterSet& params, std::size_t index) {
  const Tensor& v = params.value(index);
  if (!v.all_finite()) fail(ErrorCode::kNonFinite, "non-finite parameter " + params.name(index));
  Node n;
  n.external = &v;
  n.needs_grad = params.trainable(index);
  n.params = &params;
  n.param_index = index;
  n.op = "param";
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1), generation_};
}

Var Graph::param(const ParameterSet& params, std::string_view name) { return param(params, params.index(name)); }

void Graph::reset() {
  nodes_.clear();
  ++generation_;
}

Var Graph::affine(Var x, Var w, Var b) {
  const Tensor& X = value(x);
  const Tensor& W = value(w);
  const Tensor& Bv = value(b);
  require(W.rank() == 2 && X.rank() >= 1 && X.shape().back() == W.dim(0),
          "affine: input " + to_string(X.shape()) + " vs weight " + to_string(W.shape()));
  require(Bv.rank() == 1 && Bv.dim(0) == W.dim(1), "affine: bias " + to_string(Bv.shape()));
  const std::size_t in = W.dim(0), out = W.dim(1), rows = X.size() / in;
  Shape os = X.shape();
  os.back() = out;
  Tensor Y(os);
  auto ym = as_mat(Y, rows, out);
  ym.noalias() = as_mat(X, rows, in) * as_mat(W, in, out);
  ym.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(Bv.data(), static_cast<Eigen::Index>(out));
  const std::uint32_t xi = x.id, wi = w.id, bi = b.id;
  return push("affine", std::move(Y), needs(xi) || needs(wi) || needs(bi), [this, xi, wi, bi, rows, in, out](const Tensor& g) {
    auto gm = as_mat(g, rows, out);
    if (needs(xi)) as_mat(grad_of(xi), rows, in).noalias() += gm * as_mat(val(wi), in, out).transpose();
    if (needs(wi)) as_mat(grad_of(wi), in, out).noalias() += as_mat(val(xi), rows, in).transpose() * gm;
    if (needs(bi)) as_mat(grad_of(bi), 1, out) += gm.colwise().sum();
  });
}

Var Graph::conv1d(Var x, Var w, Var b, std::size_t stride) {
  const Tensor& X = value(x);
  const Tensor& W = value(w);
  const Tensor& Bv = value(b);
  require(X.rank() == 3 && W.rank() == 3 && W.dim(1) == X.dim(2) && W.dim(0) % 2 == 1 && stride >= 1,
          "conv1d: input " + to_string(X.shape()) + " vs kernel " + to_string(W.shape()));
  require(Bv.rank() == 1 && Bv.dim(0) == W.dim(2), "conv1d: bias " + to_string(Bv.shape()));
  const std::size_t B = X.dim(0), L = X.dim(1), cin = X.dim(2);
  const std::size_t k = W.dim(0), cout = W.dim(2), pad = (k - 1) / 2;
  const std::size_t lout = (L + 2 * pad - k) / stride + 1;
  // im2col: rows (b, l_out), cols (tap, cin)
  Tensor cols({B * lout, k * cin});
  for (std::size_t bb = 0; bb < B; ++bb) {
    for (std::size_t lo = 0; lo < lout; ++lo) {
      double* row = cols.data() + (bb * lout + lo) * k * cin;
      for (std::size_t tap = 0; tap < k; ++tap) {
        const std::ptrdiff_t li = static_cast<std::ptrdiff_t>(lo * stride + tap) - static_cast<std::ptrdiff_t>(pad);
        if (li < 0 || li >= static_cast<std::ptrdiff_t>(L)) continue;
        std::copy_n(X.data() + (bb * L + static_cast<std::size_t>(li)) * cin, cin, row + tap * cin);
      }
    }
  }
  Tensor Y({B, lout, cout});
  auto ym = as_mat(Y, B * lout, cout);
  ym.noalias() = as_mat(cols, B * lout, k * cin) * as_mat(W, k * cin, cout);
  ym.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(Bv.data(), static_cast<Eigen::Index>(cout));
  const std::uint32_t xi = x.id, wi = w.id, bi = b.id;
  return push("conv1d", std::move(Y), needs(xi) || needs(wi) || needs(bi),
              [this, xi, wi, bi, cols = std::move(cols), B, L, cin, k, cout, pad, lout, stride](const Tensor& g) {
                auto gm = as_mat(g, B * lout, cout);
                if (needs(wi)) as_mat(grad_of(wi), k * cin, cout).noalias() += as_mat(cols, B * lout, k * cin).transpose() * gm;
                if (needs(bi)) as_mat(grad_of(bi), 1, cout) += gm.colwise().sum();
                if (needs(xi)) {
                  RowMat dcols = gm * as_mat(val(wi), k * cin, cout).transpose();
                  Tensor& gx = grad_of(xi);
                  for (std::size_t bb = 0; bb < B; ++bb) {
                    for (std::size_t lo = 0; lo < lout; ++lo) {
                      const double* row = dcols.data() + (bb * lout + lo) * k * cin;
                      for (std::size_t tap = 0; tap < k; ++tap) {
                        const std::ptrdiff_t li =
                            static_cast<std::ptrdiff_t>(lo * stride + tap) - static_cast<std::ptrdiff_t>(pad);
                        if (li < 0 || li >= static_cast<std::ptrdiff_t>(L)) continue;
                        double* dst = gx.data() + (bb * L + static_cast<std::size_t>(li)) * cin;
                        for (std::size_t c = 0; c < cin; ++c) dst[c] += row[tap * cin + c];
                      }
                    }
                  }
                }
              });
}

Var Graph::add(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& Bt = value(b);
  require(A.shape() == Bt.shape(), "add: " + to_string(A.shape()) + " vs " + to_string(Bt.shape()));
  Tensor Y = A;
  for (std::size_t i = 0; i < Y.size(); ++i) Y[i] += Bt[i];
  const std::uint32_t ai = a.id, bi = b.id;
  return push("add", std::move(Y), needs(ai) || needs(bi), [this, ai, bi](const Tensor& g) {
    for (std::uint32_t id : {ai, bi}) {
      if (!needs(id)) continue;
      Tensor& gg = grad_of(id);
      for (std::size_t i = 0; i < g.size(); ++i) gg[i] += g[i];
    }
  });
}

Var Graph::sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var Graph::mul(Var a, Var b) {
  const Tensor& A = value(a);
  const Tensor& Bt = value(b);
  require(A.shape() == Bt.shape(), "mul: " + to_string(A.shape()) + " vs " + to_string(Bt.shape()));
  Tensor Y = A;
  for (std::size_t i = 0; i < Y.size(); ++i) Y[i] *= Bt[i];
  const std::uint32_t ai = a.id, bi = b.id;
  return push("mul", std::move(Y), needs(ai) || needs(bi), [this, ai, bi](const Tensor& g) {
    if (needs(ai)) {
      Tensor& ga = grad_of(ai);
      const Tensor& Bv = val(bi);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * Bv[i];
    }
    if (needs(bi)) {
      Tensor& gb = grad_of(bi);
      const Tensor& Av = val(ai);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * Av[i];
    }
  });
}

Var Graph::add_bcast(Var x, Var y) {
  const Tensor& X = value(x);
  const Tensor& Yv = value(y);
  require(X.rank() == 3 && Yv.rank() == 2 && Yv.dim(0) == X.dim(0) && Yv.dim(1) == X.dim(2),
          "add_bcast: " + to_string(X.shape()) + " vs " + to_string(Yv.shape()));
  const std::size_t B = X.dim(0), L = X.dim(1), C = X.dim(2);
  Tensor out = X;
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t l = 0; l < L; ++l)
      for (std::size_t c = 0; c < C; ++c) out[(b * L + l) * C + c] += Yv[b * C + c];
  const std::uint32_t xi = x.id, yi = y.id;
  return push("add_bcast", std::move(out), needs(xi) || needs(yi), [this, xi, yi, B, L, C](const Tensor& g) {
    if (needs(xi)) {
      Tensor& gx = grad_of(xi);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (needs(yi)) {
      Tensor& gy = grad_of(yi);
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t l = 0; l < L; ++l)
          for (std::size_t c = 0; c < C; ++c) gy[b * C + c] += g[(b * L + l) * C + c];
    }
  });
}

Var Graph::mul_bcast(Var x, Var y) {
  const Tensor& X = value(x);
  const Tensor& Yv = value(y);
  require(X.rank() == 3 && Yv.rank() == 2 && Yv.dim(0) == X.dim(0) && Yv.dim(1) == X.dim(2),
          "mul_bcast: " + to_string(X.shape()) + " vs " + to_string(Yv.shape()));
  const std::size_t B = X.dim(0), L = X.dim(1), C = X.dim(2);
  Tensor out = X;
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t l = 0; l < L; ++l)
      for (std::size_t c = 0; c < C; ++c) out[(b * L + l) * C + c] *= Yv[b * C + c];
  const std::uint32_t xi = x.id, yi = y.id;
  return push("mul_bcast", std::move(out), needs(xi) || needs(yi), [this, xi, yi, B, L, C](const Tensor& g) {
    const Tensor& Xv = val(xi);
    const Tensor& Ym = val(yi);
    if (needs(xi)) {
      Tensor& gx = grad_of(xi);
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t l = 0; l < L; ++l)
          for (std::size_t c = 0; c < C; ++c) gx[(b * L + l) * C + c] += g[(b * L + l) * C + c] * Ym[b * C + c];
    }
    if (needs(yi)) {
      Tensor& gy = grad_of(yi);
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t l = 0; l < L; ++l)
          for (std::size_t c = 0; c < C; ++c) gy[b * C + c] += g[(b * L + l) * C + c] * Xv[(b * L + l) * C + c];
    }
  });
}

Var Graph::scale(Var x, double c) {
  Tensor Y = value(x);
  for (double& v : Y.storage()) v *= c;
  const std::uint32_t xi = x.id;
  return push("scale", std::move(Y), needs(xi), [this, xi, c](const Tensor& g) {
    Tensor& gx = grad_of(xi);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += c * g[i];
  });
}

Var Graph::elementwise(const char* op, Var x, double (*f)(double), double (*df)(double, double)) {
  const Tensor& X = value(x);
  Tensor Y(X.shape());
  for (std::size_t i = 0; i < X.size(); ++i) Y[i] = f(X[i]);
  const std::uint32_t xi = x.id;
  const std::uint32_t yi = static_cast<std::uint32_t>(nodes_.size());
  return push(op, std::move(Y), needs(xi), [this, xi, yi, df](const Tensor& g) {
    Tensor& gx = grad_of(xi);
    const Tensor& Xv = val(xi);
    const Tensor& Yv = val(yi);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(Xv[i], Yv[i]);
  });
}

Var Graph::sigmoid(Var x) {
  return elementwise("sigmoid", x, sigmoid_fn, [](double, double y) { return y * (1.0 - y); });
}

Var Graph::silu(Var x) {
  return elementwise(
      "silu", x, [](double v) { return v * sigmoid_fn(v); },
      [](double v, double) {
        const double s = sigmoid_fn(v);
        return s * (1.0 + v * (1.0 - s));
      });
}

Var Graph::softplus(Var x) {
  return elementwise(
      "softplus", x, [](double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); },
      [](double v, double) { return sigmoid_fn(v); });
}

Var Graph::max_points(Var x) {
  const Tensor& X = value(x);
  require(X.rank() == 3 && X.dim(1) >= 1, "max_points: " + to_string(X.shape()));
  const std::size_t B = X.dim(0), N = X.dim(1), F = X.dim(2);
  Tensor Y({B, F});
  std::vector<std::size_t> arg(B * F, 0);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t f = 0; f < F; ++f) {
      std::size_t best = 0;
      double bv = X[(b * N) * F + f];
      for (std::size_t n = 1; n < N; ++n) {
        const double v = X[(b * N + n) * F + f];
        if (v > bv) {
          bv = v;
          best = n;
        }
      }
      Y[b * F + f] = bv;
      arg[b * F + f] = best;
    }
  }
  const std::uint32_t xi = x.id;
  return push("max_points", std::move(Y), needs(xi), [this, xi, arg = std::move(arg), B, N, F](const Tensor& g) {
    Tensor& gx = grad_of(xi);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t f = 0; f < F; ++f) gx[(b * N + arg[b * F + f]) * F + f] += g[b * F + f];
  });
}

Var Graph::concat(std::span<const Var> xs) {
  require(!xs.empty(), "concat: no inputs");
  const Shape& first = value(xs[0]).shape();
  require(first.size() >= 1, "concat: scalar input");
  const std::size_t rows = numel(first) / first.back();
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (Var v : xs) {
    const Tensor& t = value(v);
    Shape lead(t.shape().begin(), t.shape().end() - 1);
    require(t.rank() == first.size() && Shape(first.begin(), first.end() - 1) == lead,
            "concat: " + to_string(t.shape()) + " vs " + to_string(first));
    ids.push_back(v.id);
    widths.push_back(t.shape().back());
    total += t.shape().back();
  }
  Shape os = first;
  os.back() = total;
  Tensor Y(os);
  bool any = false;
  for (std::size_t k = 0, off = 0; k < ids.size(); off += widths[k], ++k) {
    const Tensor& t = val(ids[k]);
    any = any || needs(ids[k]);
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(t.data() + r * widths[k], widths[k], Y.data() + r * total + off);
  }
  return push("concat", std::move(Y), any, [this, ids, widths, rows, total](const Tensor& g) {
    for (std::size_t k = 0, off = 0; k < ids.size(); off += widths[k], ++k) {
      if (!needs(ids[k])) continue;
      Tensor& gk = grad_of(ids[k]);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < widths[k]; ++c) gk[r * widths[k] + c] += g[r * total + off + c];
    }
  });
}

Var Graph::layer_norm(Var x, double eps) {
  const Tensor& X = value(x);
  require(X.rank() >= 1, "layer_norm: scalar input");
  const std::size_t C = X.shape().back(), rows = X.size() / C;
  Tensor Y(X.shape());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = X.data() + r * C;
    double mu = 0.0;
    for (std::size_t c = 0; c < C; ++c) mu += xr[c];
    mu /= static_cast<double>(C);
    double var = 0.0;
    for (std::size_t c = 0; c < C; ++c) var += (xr[c] - mu) * (xr[c] - mu);
    var /= static_cast<double>(C);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < C; ++c) Y[r * C + c] = (xr[c] - mu) * inv_std[r];
  }
  const std::uint32_t xi = x.id;
  const std::uint32_t yi = static_cast<std::uint32_t>(nodes_.size());
  return push("layer_norm", std::move(Y), needs(xi), [this, xi, yi, inv_std = std::move(inv_std), rows, C](const Tensor& g) {
    Tensor& gx = grad_of(xi);
    const Tensor& Yv = val(yi);
    for (std::size_t r = 0; r < rows; ++r) {
      double mg = 0.0, mgy = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        mg += g[r * C + c];
        mgy += g[r * C + c] * Yv[r * C + c];
      }
      mg /= static_cast<double>(C);
      mgy /= static_cast<double>(C);
      for (std::size_t c = 0; c < C; ++c)
        gx[r * C + c] += inv_std[r] * (g[r * C + c] - mg - Yv[r * C + c] * mgy);
    }
  });
}

Var Graph::gather(Var x, std::size_t axis, std::vector<std::size_t> indices) {
  const Tensor& X = value(x);
  require(axis < X.rank() && axis <= 1, "gather: axis " + std::to_string(axis) + " on " + to_string(X.shape()));
  const std::size_t outer = axis == 0 ? 1 : X.dim(0);
  const std::size_t n = X.dim(axis);
  const std::size_t inner = X.size() / (outer * n);
  for (std::size_t i : indices) require(i < n, "gather: index out of range");
  Shape os = X.shape();
  os[axis] = indices.size();
  Tensor Y(os);
  const std::size_t m = indices.size();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t j = 0; j < m; ++j)
      std::copy_n(X.data() + (o * n + indices[j]) * inner, inner, Y.data() + (o * m + j) * inner);
  const std::uint32_t xi = x.id;
  return push("gather", std::move(Y), needs(xi), [this, xi, indices = std::move(indices), outer, n, m, inner](const Tensor& g) {
    Tensor& gx = grad_of(xi);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t j = 0; j < m; ++j) {
        double* dst = gx.data() + (o * n + indices[j]) * inner;
        const double* src = g.data() + (o * m + j) * inner;
        for (std::size_t c = 0; c < inner; ++c) dst[c] += src[c];
      }
  });
}

Var Graph::reshape(Var x, Shape shape) {
  Tensor Y = value(x).reshaped(std::move(shape));
  const std::uint32_t xi = x.id;
  return push("reshape", std::move(Y), needs(xi), [this, xi](const Tensor& g) {
    Tensor& gx = grad_of(xi);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var Graph::detach(Var x) { return push("detach", value(x), false, nullptr); }

Var Graph::sum(Var x) {
  const Tensor& X = value(x);
  double s = 0.0;
  for (double v : X.values()) s += v;
  const std::uint32_t xi = x.id;
  return push("sum", Tensor::scalar(s), needs(xi), [this, xi](const Tensor& g) {
    Tensor& gx = grad_of(xi);
    const double gv = g[0];
    for (double& v : gx.storage()) v += gv;
  });
}

Var Graph::mean(Var x) {
  const double n = static_cast<double>(value(x).size());
  return scale(sum(x), 1.0 / n);
}

Var Graph::mse(Var pred, Var target) {
  const Tensor& P = value(pred);
  const Tensor& T = value(target);
  require(P.shape() == T.shape() && P.size() > 0, "mse: " + to_string(P.shape()) + " vs " + to_string(T.shape()));
  const double n = static_cast<double>(P.size());
  double s = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) s += (P[i] - T[i]) * (P[i] - T[i]);
  const std::uint32_t pi = pred.id, ti = target.id;
  return push("mse", Tensor::scalar(s / n), needs(pi) || needs(ti), [this, pi, ti, n](const Tensor& g) {
    const Tensor& Pv = val(pi);
    const Tensor& Tv = val(ti);
    const double c = 2.0 * g[0] / n;
    if (needs(pi)) {
      Tensor& gp = grad_of(pi);
      for (std::size_t i = 0; i < Pv.size(); ++i) gp[i] += c * (Pv[i] - Tv[i]);
    }
    if (needs(ti)) {
      Tensor& gt = grad_of(ti);
      for (std::size_t i = 0; i < Pv.size(); ++i) gt[i] -= c * (Pv[i] - Tv[i]);
    }
  });
}

Var Graph::bce(Var prob, Var target, double clamp) {
  const Tensor& P = value(prob);
  const Tensor& T = value(target);
  require(P.shape() == T.shape() && P.size() > 0, "bce: " + to_string(P.shape()) + " vs " + to_string(T.shape()));
  const double n = static_cast<double>(P.size());
  double s = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    const double p = std::clamp(P[i], clamp, 1.0 - clamp);
    s -= T[i] * std::log(p) + (1.0 - T[i]) * std::log(1.0 - p);
  }
  const std::uint32_t pi = prob.id, ti = target.id;
  return push("bce", Tensor::scalar(s / n), needs(pi), [this, pi, ti, n, clamp](const Tensor& g) {
    const Tensor& Pv = val(pi);
    const Tensor& Tv = val(ti);
    Tensor& gp = grad_of(pi);
    for (std::size_t i = 0; i < Pv.size(); ++i) {
      // zero gradient where the clamp is active
      if (Pv[i] < clamp || Pv[i] > 1.0 - clamp) continue;
      const double p = Pv[i];
      gp[i] += g[0] / n * (-Tv[i] / p + (1.0 - Tv[i]) / (1.0 - p));
    }
  });
}

void Graph::backward(Var output, ParameterSet& params) {
  const Tensor& out = value(output);
  if (out.size() != 1) fail(ErrorCode::kShape, "backward: output must be a scalar, got " + to_string(out.shape()));
  if (!nodes_[output.id].needs_grad) return;
  for (auto& n : nodes_) n.grad = Tensor();
  grad_of(output.id)[0] = 1.0;
  for (std::size_t i = output.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(n.grad);
    if (n.params) {
      if (n.params != &params) fail(ErrorCode::kInvalidArgument, "backward: parameter leaf from a different set");
      Tensor& g = params.grad(n.param_index);
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += n.grad[k];
    }
  }
}

}  // namespace contactdyn::num
