#include "relatent/tensor.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "relatent/errors.hpp"

namespace relatent {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

ConstMatMap cmap(const Tensor& t, Dim rows, Dim cols) {
  return ConstMatMap(t.data.data(), rows, cols);
}

MatMap map_grad(Tensor& t, Dim rows, Dim cols) {
  t.ensure_grad();
  return MatMap(t.grad.data(), rows, cols);
}

ConstMatMap cmap_grad(const Tensor& t, Dim rows, Dim cols) {
  return ConstMatMap(t.grad.data(), rows, cols);
}

thread_local Tape* g_active_tape = nullptr;

void require_rank2(const Tensor& t, const char* op) {
  if (t.shape.size() != 2) {
    throw ShapeError(std::string(op) + ": expected rank-2 tensor, got shape " +
                     shape_str(t.shape));
  }
}

/// Records the op if a tape is active and any input carries a gradient;
/// otherwise the output stays a detached constant.
void finish_op(const char* name, std::vector<TensorPtr> inputs,
               const TensorPtr& out, std::function<void()> backward_fn) {
  Tape* tape = g_active_tape;
  if (tape == nullptr) return;
  bool needs = false;
  for (const auto& in : inputs) needs = needs || in->requires_grad;
  if (!needs) return;
  out->requires_grad = true;
  out->tape = tape;
  tape->record({name, std::move(inputs), out, std::move(backward_fn)});
}

}  // namespace

Dim shape_numel(const Shape& shape) {
  Dim n = 1;
  for (Dim d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << "]";
  return out.str();
}

double Tensor::scalar_value() const {
  if (!is_scalar()) {
    throw ContractError("scalar_value: tensor has shape " + shape_str(shape));
  }
  return data[0];
}

void Tensor::ensure_grad() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

void Tensor::accum_grad(const double* g, Dim n) {
  if (n != numel()) throw ShapeError("accum_grad: gradient size mismatch");
  ensure_grad();
  for (Dim i = 0; i < n; ++i) grad[static_cast<std::size_t>(i)] += g[i];
}

bool Tensor::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double& Tensor::at(Dim r, Dim c) {
  return data[static_cast<std::size_t>(r * shape[1] + c)];
}

double Tensor::at(Dim r, Dim c) const {
  return data[static_cast<std::size_t>(r * shape[1] + c)];
}

TensorPtr make_tensor(Shape shape, std::vector<double> values,
                      bool requires_grad) {
  auto t = std::make_shared<Tensor>();
  if (shape_numel(shape) != static_cast<Dim>(values.size())) {
    throw ShapeError("make_tensor: shape " + shape_str(shape) + " wants " +
                     std::to_string(shape_numel(shape)) + " values, got " +
                     std::to_string(values.size()));
  }
  t->shape = std::move(shape);
  t->data = std::move(values);
  t->requires_grad = requires_grad;
  return t;
}

TensorPtr zeros(Shape shape, bool requires_grad) {
  auto n = shape_numel(shape);
  return make_tensor(std::move(shape), std::vector<double>(n, 0.0),
                     requires_grad);
}

TensorPtr full(Shape shape, double value, bool requires_grad) {
  auto n = shape_numel(shape);
  return make_tensor(std::move(shape), std::vector<double>(n, value),
                     requires_grad);
}

TensorPtr scalar_tensor(double value, bool requires_grad) {
  return make_tensor({1}, {value}, requires_grad);
}

void Tape::record(OpRecord rec) {
  rec.output->node_index = static_cast<int>(ops_.size());
  ops_.push_back(std::move(rec));
}

void Tape::backward(const TensorPtr& root) {
  if (!root->is_scalar()) {
    throw ContractError("backward: root must be scalar, has shape " +
                        shape_str(root->shape));
  }
  if (root->tape != this || root->node_index < 0) {
    throw ContractError("backward: root was not recorded on this tape");
  }
  root->ensure_grad();
  root->grad[0] += 1.0;
  for (int i = root->node_index; i >= 0; --i) {
    OpRecord& rec = ops_[static_cast<std::size_t>(i)];
    if (rec.output->grad.empty()) continue;
    rec.backward();
  }
}

void Tape::clear() { ops_.clear(); }

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) {
  g_active_tape = &tape;
}

TapeScope::~TapeScope() { g_active_tape = previous_; }

Tape* active_tape() { return g_active_tape; }

void backward(const TensorPtr& root) {
  if (root->tape == nullptr) {
    throw ContractError("backward: tensor is not attached to a tape");
  }
  root->tape->backward(root);
}

// ---------------------------------------------------------------------------
// Matrix products
// ---------------------------------------------------------------------------

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
  require_rank2(*a, "matmul");
  require_rank2(*b, "matmul");
  const Dim m = a->shape[0], k = a->shape[1], k2 = b->shape[0], n = b->shape[1];
  if (k != k2) {
    throw ShapeError("matmul: inner dimensions differ, " + shape_str(a->shape) +
                     " x " + shape_str(b->shape));
  }
  auto out = zeros({m, n});
  MatMap(out->data.data(), m, n).noalias() = cmap(*a, m, k) * cmap(*b, k, n);

  finish_op("matmul", {a, b}, out, [a, b, out, m, k, n]() {
    auto g = cmap_grad(*out, m, n);
    if (a->requires_grad) {
      map_grad(*a, m, k).noalias() += g * cmap(*b, k, n).transpose();
    }
    if (b->requires_grad) {
      map_grad(*b, k, n).noalias() += cmap(*a, m, k).transpose() * g;
    }
  });
  return out;
}

TensorPtr linear(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b) {
  require_rank2(*x, "linear");
  require_rank2(*w, "linear");
  const Dim rows = x->shape[0], in = x->shape[1];
  const Dim out_dim = w->shape[0];
  if (w->shape[1] != in) {
    throw ShapeError("linear: weight shape " + shape_str(w->shape) +
                     " does not accept input " + shape_str(x->shape));
  }
  if (b->numel() != out_dim) {
    throw ShapeError("linear: bias shape " + shape_str(b->shape) +
                     " does not match " + std::to_string(out_dim) + " outputs");
  }
  auto out = zeros({rows, out_dim});
  MatMap y(out->data.data(), rows, out_dim);
  y.noalias() = cmap(*x, rows, in) * cmap(*w, out_dim, in).transpose();
  y.rowwise() += ConstVecMap(b->data.data(), out_dim).transpose();

  finish_op("linear", {x, w, b}, out, [x, w, b, out, rows, in, out_dim]() {
    auto g = cmap_grad(*out, rows, out_dim);
    if (x->requires_grad) {
      map_grad(*x, rows, in).noalias() += g * cmap(*w, out_dim, in);
    }
    if (w->requires_grad) {
      map_grad(*w, out_dim, in).noalias() +=
          g.transpose() * cmap(*x, rows, in);
    }
    if (b->requires_grad) {
      b->ensure_grad();
      VecMap(b->grad.data(), out_dim).noalias() +=
          g.colwise().sum().transpose();
    }
  });
  return out;
}

TensorPtr linear2(const TensorPtr& x, const TensorPtr& w, const TensorPtr& s,
                  const TensorPtr& u, const TensorPtr& b) {
  require_rank2(*x, "linear2");
  require_rank2(*s, "linear2");
  const Dim rows = x->shape[0], in = x->shape[1];
  const Dim out_dim = w->shape[0], hidden = s->shape[1];
  if (s->shape[0] != rows) {
    throw ShapeError("linear2: row mismatch " + shape_str(x->shape) + " vs " +
                     shape_str(s->shape));
  }
  if (w->shape[1] != in || u->shape[0] != out_dim || u->shape[1] != hidden ||
      b->numel() != out_dim) {
    throw ShapeError("linear2: parameter shapes w=" + shape_str(w->shape) +
                     " u=" + shape_str(u->shape) + " b=" + shape_str(b->shape) +
                     " do not fit inputs " + shape_str(x->shape) + ", " +
                     shape_str(s->shape));
  }
  auto out = zeros({rows, out_dim});
  MatMap y(out->data.data(), rows, out_dim);
  y.noalias() = cmap(*x, rows, in) * cmap(*w, out_dim, in).transpose();
  y.noalias() += cmap(*s, rows, hidden) * cmap(*u, out_dim, hidden).transpose();
  y.rowwise() += ConstVecMap(b->data.data(), out_dim).transpose();

  finish_op("linear2", {x, w, s, u, b}, out,
            [x, w, s, u, b, out, rows, in, out_dim, hidden]() {
              auto g = cmap_grad(*out, rows, out_dim);
              if (x->requires_grad) {
                map_grad(*x, rows, in).noalias() += g * cmap(*w, out_dim, in);
              }
              if (w->requires_grad) {
                map_grad(*w, out_dim, in).noalias() +=
                    g.transpose() * cmap(*x, rows, in);
              }
              if (s->requires_grad) {
                map_grad(*s, rows, hidden).noalias() +=
                    g * cmap(*u, out_dim, hidden);
              }
              if (u->requires_grad) {
                map_grad(*u, out_dim, hidden).noalias() +=
                    g.transpose() * cmap(*s, rows, hidden);
              }
              if (b->requires_grad) {
                b->ensure_grad();
                VecMap(b->grad.data(), out_dim).noalias() +=
                    g.colwise().sum().transpose();
              }
            });
  return out;
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

namespace {

enum class BinaryKind { Add, Sub, Mul };

TensorPtr binary_op(const char* name, BinaryKind kind, const TensorPtr& a,
                    const TensorPtr& b) {
  const bool a_scalar = a->is_scalar();
  const bool b_scalar = b->is_scalar();
  if (!a_scalar && !b_scalar && a->shape != b->shape) {
    throw ShapeError(std::string(name) + ": shape mismatch " +
                     shape_str(a->shape) + " vs " + shape_str(b->shape));
  }
  const Shape& out_shape = a_scalar ? b->shape : a->shape;
  const Dim n = shape_numel(out_shape);
  auto out = zeros(out_shape);
  const double* pa = a->data.data();
  const double* pb = b->data.data();
  double* po = out->data.data();
  const Dim sa = a_scalar ? 0 : 1;
  const Dim sb = b_scalar ? 0 : 1;
  switch (kind) {
    case BinaryKind::Add:
      for (Dim i = 0; i < n; ++i) po[i] = pa[i * sa] + pb[i * sb];
      break;
    case BinaryKind::Sub:
      for (Dim i = 0; i < n; ++i) po[i] = pa[i * sa] - pb[i * sb];
      break;
    case BinaryKind::Mul:
      for (Dim i = 0; i < n; ++i) po[i] = pa[i * sa] * pb[i * sb];
      break;
  }

  finish_op(name, {a, b}, out, [kind, a, b, out, n, sa, sb]() {
    const double* g = out->grad.data();
    const double* pa = a->data.data();
    const double* pb = b->data.data();
    if (a->requires_grad) {
      a->ensure_grad();
      double* ga = a->grad.data();
      for (Dim i = 0; i < n; ++i) {
        double local = 0.0;
        switch (kind) {
          case BinaryKind::Add: local = g[i]; break;
          case BinaryKind::Sub: local = g[i]; break;
          case BinaryKind::Mul: local = g[i] * pb[i * sb]; break;
        }
        ga[i * sa] += local;
      }
    }
    if (b->requires_grad) {
      b->ensure_grad();
      double* gb = b->grad.data();
      for (Dim i = 0; i < n; ++i) {
        double local = 0.0;
        switch (kind) {
          case BinaryKind::Add: local = g[i]; break;
          case BinaryKind::Sub: local = -g[i]; break;
          case BinaryKind::Mul: local = g[i] * pa[i * sa]; break;
        }
        gb[i * sb] += local;
      }
    }
  });
  return out;
}

/// Unary op: forward value, plus a backward that sees (input value,
/// output value, upstream grad) and returns the local contribution.
template <typename Fwd, typename Bwd>
TensorPtr unary_op(const char* name, const TensorPtr& x, Fwd fwd, Bwd bwd) {
  const Dim n = x->numel();
  auto out = zeros(x->shape);
  const double* px = x->data.data();
  double* po = out->data.data();
  for (Dim i = 0; i < n; ++i) po[i] = fwd(px[i]);

  finish_op(name, {x}, out, [x, out, n, bwd]() {
    if (!x->requires_grad) return;
    x->ensure_grad();
    const double* g = out->grad.data();
    const double* px = x->data.data();
    const double* po = out->data.data();
    double* gx = x->grad.data();
    for (Dim i = 0; i < n; ++i) gx[i] += bwd(px[i], po[i], g[i]);
  });
  return out;
}

}  // namespace

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
  return binary_op("add", BinaryKind::Add, a, b);
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
  return binary_op("sub", BinaryKind::Sub, a, b);
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
  return binary_op("mul", BinaryKind::Mul, a, b);
}

TensorPtr affine(const TensorPtr& x, double scale, double shift) {
  return unary_op(
      "affine", x, [scale, shift](double v) { return scale * v + shift; },
      [scale](double, double, double g) { return scale * g; });
}

TensorPtr sigmoid(const TensorPtr& x) {
  return unary_op(
      "sigmoid", x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y, double g) { return g * y * (1.0 - y); });
}

TensorPtr tanh_op(const TensorPtr& x) {
  return unary_op(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](double, double y, double g) { return g * (1.0 - y * y); });
}

TensorPtr relu(const TensorPtr& x) {
  return unary_op(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double, double g) { return v > 0.0 ? g : 0.0; });
}

TensorPtr log_op(const TensorPtr& x) {
  for (double v : x->data) {
    if (!(v > 0.0)) {
      throw DomainError("log: input " + std::to_string(v) +
                        " is outside (0, inf)");
    }
  }
  return unary_op(
      "log", x, [](double v) { return std::log(v); },
      [](double v, double, double g) { return g / v; });
}

TensorPtr exp_op(const TensorPtr& x) {
  return unary_op(
      "exp", x, [](double v) { return std::exp(v); },
      [](double, double y, double g) { return g * y; });
}

TensorPtr square(const TensorPtr& x) {
  return unary_op(
      "square", x, [](double v) { return v * v; },
      [](double v, double, double g) { return 2.0 * v * g; });
}

TensorPtr sqrt_op(const TensorPtr& x) {
  for (double v : x->data) {
    if (v < 0.0) {
      throw DomainError("sqrt: input " + std::to_string(v) + " is negative");
    }
  }
  // Subgradient 0 at the origin keeps zero-variance reductions finite.
  return unary_op(
      "sqrt", x, [](double v) { return std::sqrt(v); },
      [](double, double y, double g) { return y > 0.0 ? g * 0.5 / y : 0.0; });
}

TensorPtr clamp(const TensorPtr& x, double lo, double hi) {
  if (!(lo <= hi)) throw ContractError("clamp: lo must be <= hi");
  return unary_op(
      "clamp", x,
      [lo, hi](double v) { return std::min(std::max(v, lo), hi); },
      [lo, hi](double v, double, double g) {
        return (v > lo && v < hi) ? g : 0.0;
      });
}

TensorPtr scale_rows(const TensorPtr& x, const TensorPtr& v) {
  require_rank2(*x, "scale_rows");
  const Dim rows = x->shape[0], cols = x->shape[1];
  if (v->numel() != rows) {
    throw ShapeError("scale_rows: scale shape " + shape_str(v->shape) +
                     " does not match " + std::to_string(rows) + " rows");
  }
  auto out = zeros(x->shape);
  const double* px = x->data.data();
  const double* pv = v->data.data();
  double* po = out->data.data();
  for (Dim r = 0; r < rows; ++r) {
    for (Dim c = 0; c < cols; ++c) po[r * cols + c] = px[r * cols + c] * pv[r];
  }

  finish_op("scale_rows", {x, v}, out, [x, v, out, rows, cols]() {
    const double* g = out->grad.data();
    const double* px = x->data.data();
    const double* pv = v->data.data();
    if (x->requires_grad) {
      x->ensure_grad();
      double* gx = x->grad.data();
      for (Dim r = 0; r < rows; ++r) {
        for (Dim c = 0; c < cols; ++c) gx[r * cols + c] += g[r * cols + c] * pv[r];
      }
    }
    if (v->requires_grad) {
      v->ensure_grad();
      double* gv = v->grad.data();
      for (Dim r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (Dim c = 0; c < cols; ++c) acc += g[r * cols + c] * px[r * cols + c];
        gv[r] += acc;
      }
    }
  });
  return out;
}

TensorPtr concat(const std::vector<TensorPtr>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no parts given");
  const Shape& first = parts[0]->shape;
  const int rank = static_cast<int>(first.size());
  if (axis < 0 || axis >= rank) {
    throw ShapeError("concat: axis " + std::to_string(axis) +
                     " out of range for rank " + std::to_string(rank));
  }
  Dim axis_total = 0;
  for (const auto& p : parts) {
    if (static_cast<int>(p->shape.size()) != rank) {
      throw ShapeError("concat: rank mismatch " + shape_str(first) + " vs " +
                       shape_str(p->shape));
    }
    for (int d = 0; d < rank; ++d) {
      if (d != axis && p->shape[d] != first[d]) {
        throw ShapeError("concat: incompatible shapes " + shape_str(first) +
                         " vs " + shape_str(p->shape) + " on axis " +
                         std::to_string(d));
      }
    }
    axis_total += p->shape[static_cast<std::size_t>(axis)];
  }
  Shape out_shape = first;
  out_shape[static_cast<std::size_t>(axis)] = axis_total;
  auto out = zeros(out_shape);

  Dim outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= first[static_cast<std::size_t>(d)];
  for (int d = axis + 1; d < rank; ++d) inner *= first[static_cast<std::size_t>(d)];

  const Dim out_row = axis_total * inner;
  Dim offset = 0;  // in units of inner
  std::vector<Dim> part_offsets(parts.size());
  for (std::size_t p = 0; p < parts.size(); ++p) {
    part_offsets[p] = offset;
    const Dim ax = parts[p]->shape[static_cast<std::size_t>(axis)];
    const Dim chunk = ax * inner;
    const double* src = parts[p]->data.data();
    for (Dim o = 0; o < outer; ++o) {
      std::copy(src + o * chunk, src + (o + 1) * chunk,
                out->data.data() + o * out_row + offset * inner);
    }
    offset += ax;
  }

  finish_op("concat", parts, out,
            [parts, part_offsets, out, outer, inner, out_row]() {
              const double* g = out->grad.data();
              for (std::size_t p = 0; p < parts.size(); ++p) {
                if (!parts[p]->requires_grad) continue;
                parts[p]->ensure_grad();
                const Dim chunk = parts[p]->numel() / (outer == 0 ? 1 : outer);
                double* gp = parts[p]->grad.data();
                for (Dim o = 0; o < outer; ++o) {
                  const double* src = g + o * out_row + part_offsets[p] * inner;
                  double* dst = gp + o * chunk;
                  for (Dim i = 0; i < chunk; ++i) dst[i] += src[i];
                }
              }
            });
  return out;
}

namespace {

TensorPtr reduce_full(const char* name, const TensorPtr& x, bool mean) {
  const Dim n = x->numel();
  if (n == 0) throw DomainError(std::string(name) + ": empty reduction");
  double acc = 0.0;
  for (double v : x->data) acc += v;
  const double denom = mean ? static_cast<double>(n) : 1.0;
  auto out = scalar_tensor(acc / denom);

  finish_op(name, {x}, out, [x, out, n, denom]() {
    if (!x->requires_grad) return;
    x->ensure_grad();
    const double g = out->grad[0] / denom;
    double* gx = x->grad.data();
    for (Dim i = 0; i < n; ++i) gx[i] += g;
  });
  return out;
}

TensorPtr reduce_axis(const char* name, const TensorPtr& x, int axis,
                      bool mean) {
  const int rank = static_cast<int>(x->shape.size());
  if (axis < 0 || axis >= rank) {
    throw ShapeError(std::string(name) + ": axis " + std::to_string(axis) +
                     " out of range for shape " + shape_str(x->shape));
  }
  const Dim extent = x->shape[static_cast<std::size_t>(axis)];
  if (extent == 0) throw DomainError(std::string(name) + ": empty reduction axis");
  Dim outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= x->shape[static_cast<std::size_t>(d)];
  for (int d = axis + 1; d < rank; ++d) inner *= x->shape[static_cast<std::size_t>(d)];
  Shape out_shape;
  for (int d = 0; d < rank; ++d) {
    if (d != axis) out_shape.push_back(x->shape[static_cast<std::size_t>(d)]);
  }
  if (out_shape.empty()) out_shape.push_back(1);
  auto out = zeros(out_shape);
  const double denom = mean ? static_cast<double>(extent) : 1.0;
  const double* px = x->data.data();
  double* po = out->data.data();
  for (Dim o = 0; o < outer; ++o) {
    for (Dim e = 0; e < extent; ++e) {
      const double* src = px + (o * extent + e) * inner;
      double* dst = po + o * inner;
      for (Dim i = 0; i < inner; ++i) dst[i] += src[i];
    }
  }
  if (mean) {
    for (Dim i = 0; i < outer * inner; ++i) po[i] /= denom;
  }

  finish_op(name, {x}, out, [x, out, outer, extent, inner, denom]() {
    if (!x->requires_grad) return;
    x->ensure_grad();
    const double* g = out->grad.data();
    double* gx = x->grad.data();
    for (Dim o = 0; o < outer; ++o) {
      for (Dim e = 0; e < extent; ++e) {
        double* dst = gx + (o * extent + e) * inner;
        const double* src = g + o * inner;
        for (Dim i = 0; i < inner; ++i) dst[i] += src[i] / denom;
      }
    }
  });
  return out;
}

}  // namespace

TensorPtr reduce_sum(const TensorPtr& x) { return reduce_full("sum", x, false); }
TensorPtr reduce_mean(const TensorPtr& x) { return reduce_full("mean", x, true); }

TensorPtr reduce_sum(const TensorPtr& x, int axis) {
  return reduce_axis("sum", x, axis, false);
}

TensorPtr reduce_mean(const TensorPtr& x, int axis) {
  return reduce_axis("mean", x, axis, true);
}

TensorPtr gather_rows(const TensorPtr& x, const std::vector<Dim>& idx) {
  require_rank2(*x, "gather_rows");
  const Dim rows = x->shape[0], cols = x->shape[1];
  for (Dim i : idx) {
    if (i < 0 || i >= rows) {
      throw ContractError("gather_rows: index " + std::to_string(i) +
                          " out of range [0, " + std::to_string(rows) + ")");
    }
  }
  const Dim k = static_cast<Dim>(idx.size());
  auto out = zeros({k, cols});
  const double* px = x->data.data();
  double* po = out->data.data();
  for (Dim r = 0; r < k; ++r) {
    std::copy(px + idx[static_cast<std::size_t>(r)] * cols,
              px + (idx[static_cast<std::size_t>(r)] + 1) * cols, po + r * cols);
  }

  finish_op("gather_rows", {x}, out, [x, out, idx, cols, k]() {
    if (!x->requires_grad) return;
    x->ensure_grad();
    const double* g = out->grad.data();
    double* gx = x->grad.data();
    for (Dim r = 0; r < k; ++r) {
      double* dst = gx + idx[static_cast<std::size_t>(r)] * cols;
      const double* src = g + r * cols;
      for (Dim c = 0; c < cols; ++c) dst[c] += src[c];
    }
  });
  return out;
}

TensorPtr segment_sum(const TensorPtr& x, const std::vector<Dim>& seg,
                      Dim n_segments) {
  require_rank2(*x, "segment_sum");
  const Dim rows = x->shape[0], cols = x->shape[1];
  if (static_cast<Dim>(seg.size()) != rows) {
    throw ShapeError("segment_sum: got " + std::to_string(seg.size()) +
                     " segment ids for " + std::to_string(rows) + " rows");
  }
  for (Dim s : seg) {
    if (s < 0 || s >= n_segments) {
      throw ContractError("segment_sum: segment id " + std::to_string(s) +
                          " out of range [0, " + std::to_string(n_segments) + ")");
    }
  }
  auto out = zeros({n_segments, cols});
  const double* px = x->data.data();
  double* po = out->data.data();
  for (Dim r = 0; r < rows; ++r) {
    double* dst = po + seg[static_cast<std::size_t>(r)] * cols;
    const double* src = px + r * cols;
    for (Dim c = 0; c < cols; ++c) dst[c] += src[c];
  }

  finish_op("segment_sum", {x}, out, [x, out, seg, rows, cols]() {
    if (!x->requires_grad) return;
    x->ensure_grad();
    const double* g = out->grad.data();
    double* gx = x->grad.data();
    for (Dim r = 0; r < rows; ++r) {
      const double* src = g + seg[static_cast<std::size_t>(r)] * cols;
      double* dst = gx + r * cols;
      for (Dim c = 0; c < cols; ++c) dst[c] += src[c];
    }
  });
  return out;
}

TensorPtr reshape(const TensorPtr& x, Shape shape) {
  if (shape_numel(shape) != x->numel()) {
    throw ShapeError("reshape: cannot view " + shape_str(x->shape) + " as " +
                     shape_str(shape));
  }
  auto out = make_tensor(std::move(shape), x->data);

  finish_op("reshape", {x}, out, [x, out]() {
    if (!x->requires_grad) return;
    x->accum_grad(out->grad.data(), out->numel());
  });
  return out;
}

}  // namespace relatent
