#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace relatent {

using Dim = std::int64_t;
using Shape = std::vector<Dim>;

Dim shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tape;

/// Dense row-major tensor of 64-bit floats. Tensors produced by recorded
/// operations remember their tape so `backward` can be started from them.
struct Tensor {
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;  // empty until a gradient is accumulated
  Tape* tape = nullptr;      // tape that recorded this tensor, or null
  int node_index = -1;       // position on that tape

  Dim numel() const { return static_cast<Dim>(data.size()); }
  bool is_scalar() const { return data.size() == 1; }
  double scalar_value() const;

  void ensure_grad();
  void zero_grad();
  void accum_grad(const double* g, Dim n);
  bool all_finite() const;

  double& at(Dim r, Dim c);
  double at(Dim r, Dim c) const;
};

using TensorPtr = std::shared_ptr<Tensor>;

TensorPtr make_tensor(Shape shape, std::vector<double> values,
                      bool requires_grad = false);
TensorPtr zeros(Shape shape, bool requires_grad = false);
TensorPtr full(Shape shape, double value, bool requires_grad = false);
TensorPtr scalar_tensor(double value, bool requires_grad = false);

/// Ordered record of performed operations. Inputs always precede the
/// operations consuming them, so one reverse sweep is a valid backward pass.
class Tape {
 public:
  struct OpRecord {
    const char* name;
    std::vector<TensorPtr> inputs;
    TensorPtr output;
    std::function<void()> backward;
  };

  void record(OpRecord rec);

  /// Reverse-mode sweep from a scalar root recorded on this tape.
  /// Gradients accumulate additively into every requires_grad tensor.
  void backward(const TensorPtr& root);

  void clear();
  std::size_t size() const { return ops_.size(); }

 private:
  std::vector<OpRecord> ops_;
};

/// Binds a tape to the current thread for the lifetime of the scope.
/// Operations record themselves only while a tape is active; without one
/// they evaluate eagerly (inference mode).
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

/// Convenience: root->tape->backward(root).
void backward(const TensorPtr& root);

// ---------------------------------------------------------------------------
// Operations. All differentiable; each registers its backward rule when a
// tape is active and some input requires a gradient.
// ---------------------------------------------------------------------------

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);

/// y = x * w^T + b with x:[R,in], w:[out,in], b:[out].
TensorPtr linear(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b);

/// y = x * w^T + s * u^T + b. Recurrent-gate form.
TensorPtr linear2(const TensorPtr& x, const TensorPtr& w, const TensorPtr& s,
                  const TensorPtr& u, const TensorPtr& b);

// Binary elementwise; operands must have equal shapes, or one of them may be
// a single-element tensor which broadcasts.
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);

/// y = scale * x + shift, with constant scalars.
TensorPtr affine(const TensorPtr& x, double scale, double shift);

TensorPtr sigmoid(const TensorPtr& x);
TensorPtr tanh_op(const TensorPtr& x);
TensorPtr relu(const TensorPtr& x);
TensorPtr log_op(const TensorPtr& x);
TensorPtr exp_op(const TensorPtr& x);
TensorPtr square(const TensorPtr& x);
TensorPtr sqrt_op(const TensorPtr& x);

/// Clamp to [lo, hi]; gradient is zero where the value was clamped.
TensorPtr clamp(const TensorPtr& x, double lo, double hi);

/// Multiplies every row r of x:[R,C] by v[r], v:[R,1] or [R].
TensorPtr scale_rows(const TensorPtr& x, const TensorPtr& v);

TensorPtr concat(const std::vector<TensorPtr>& parts, int axis);

TensorPtr reduce_sum(const TensorPtr& x);
TensorPtr reduce_mean(const TensorPtr& x);
TensorPtr reduce_sum(const TensorPtr& x, int axis);
TensorPtr reduce_mean(const TensorPtr& x, int axis);

/// out[k, :] = x[idx[k], :]. Backward scatter-adds.
TensorPtr gather_rows(const TensorPtr& x, const std::vector<Dim>& idx);

/// out[s, :] = sum of rows of x whose segment id is s.
TensorPtr segment_sum(const TensorPtr& x, const std::vector<Dim>& seg,
                      Dim n_segments);

TensorPtr reshape(const TensorPtr& x, Shape shape);

}  // namespace relatent
