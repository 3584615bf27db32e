#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "nargis/errors.hpp"
#include "nargis/rng.hpp"

namespace nargis {

class Tape;

// Dense 2-D row-major matrix of doubles.
//
// Copies are shallow and share storage. Values are immutable once built,
// with one sanctioned exception: parameter tensors, whose storage is updated
// in place by adam_step and by initialization code via mutable_values().
//
// A tensor participates in autodiff either as a leaf (requires_grad set) or
// as the product of an op recorded on a live tape. Tensors detached from any
// tape are plain values and safe to share across threads.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(int rows, int cols);
  static Tensor full(int rows, int cols, double value);
  static Tensor from_rows(int rows, int cols, std::vector<double> values);
  static Tensor row_vector(std::vector<double> values);
  static Tensor scalar(double value);
  // Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
  static Tensor glorot_uniform(int rows, int cols, Rng& rng);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int size() const { return rows_ * cols_; }
  bool empty() const { return size() == 0; }

  double at(int r, int c) const { return (*data_)[static_cast<std::size_t>(r) * cols_ + c]; }
  double item() const;  // value of a 1x1 tensor; throws NotScalar otherwise

  const std::vector<double>& values() const { return *data_; }
  std::shared_ptr<const std::vector<double>> shared_values() const { return data_; }
  // Parameter storage for optimizers and loaders. Must not be called on
  // tensors that other code may be reading concurrently.
  std::vector<double>& mutable_values() { return *data_; }

  // Identity of the underlying storage; keys gradient maps and Adam slots.
  // Stable across shallow copies and in-place updates.
  const void* key() const { return data_.get(); }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool on) { requires_grad_ = on; }

  Tensor clone() const;     // deep copy; grad flag and tape handle cleared
  Tensor detached() const;  // shares storage but ignores any tape attachment

 private:
  friend class Tape;

  int rows_ = 0;
  int cols_ = 0;
  std::shared_ptr<std::vector<double>> data_;
  bool requires_grad_ = false;

  // Set when this tensor is the output of a recorded op.
  Tape* tape_ = nullptr;
  std::uint64_t tape_gen_ = 0;
  int node_ = -1;
};

// Gradients keyed by Tensor::key() of the leaf they belong to.
using GradMap = std::unordered_map<const void*, Tensor>;

// Records one forward pass as an ordered list of ops (creation order is a
// topological order) and replays it backwards to accumulate gradients.
// Intended use: one tape per training step; reset() and rebuild each step.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Drops every recorded node. Tensors produced earlier degrade to plain
  // values; using them in later ops treats them as constants.
  void reset();

  std::size_t node_count() const { return nodes_.size(); }

  // Reverse sweep from a scalar loss produced on this tape. Returns the
  // gradient of the loss for every requires-grad leaf touched by the forward
  // pass. Saved activations are freed afterwards; a tape can be swept once.
  // Throws NotScalar if loss is not 1x1, DetachedTensor if it was not
  // recorded here.
  GradMap backward(const Tensor& loss);

  // --- recording interface, used by the op functions ---

  using Backprop = std::function<void(const std::vector<double>& out_grad,
                                      std::vector<std::vector<double>>& grads)>;

  // True if t contributes gradient when used as an operand on this tape.
  bool tracked(const Tensor& t) const;
  // Node id of t on this tape, registering a leaf node on first touch.
  int touch(const Tensor& t);
  int record(int rows, int cols, Backprop backprop);
  void attach(Tensor& t, int node);

 private:
  struct Node {
    int rows = 0;
    int cols = 0;
    Backprop backprop;
    bool leaf = false;
    const void* leaf_key = nullptr;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const void*, int> leaf_ids_;
  std::uint64_t gen_ = 1;
  bool consumed_ = false;
};

// Differentiable op catalogue. Every function computes eagerly; a node is
// recorded only when at least one operand is tracked on the tape.
namespace ops {

inline constexpr double kLogEps = 1e-12;  // additive clamp inside log

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(Tape& tape, const Tensor& a, double s);
Tensor relu(Tape& tape, const Tensor& a);
Tensor sigmoid(Tape& tape, const Tensor& a);
// ln(x + eps). The default additive clamp keeps log finite at zero; passing
// eps = 0 gives the exact log for inputs guarded elsewhere.
Tensor log(Tape& tape, const Tensor& a, double eps = kLogEps);
Tensor exp(Tape& tape, const Tensor& a);
Tensor sqrt(Tape& tape, const Tensor& a);          // subgradient 0 at x = 0
Tensor div(Tape& tape, const Tensor& a, const Tensor& b);  // elementwise a / b
Tensor row_softmax(Tape& tape, const Tensor& a);
Tensor row_mean(Tape& tape, const Tensor& a);  // n x m -> n x 1
Tensor row_slice(Tape& tape, const Tensor& a, int first, int count);
Tensor gather_rows(Tape& tape, const Tensor& a, const std::vector<int>& index);
Tensor concat_rows(Tape& tape, const Tensor& a, const Tensor& b);
// Inverted dropout: kept entries scaled by 1/(1-p). Identity when not
// training or p == 0.
Tensor dropout(Tape& tape, const Tensor& a, double p, Rng& rng, bool training);
Tensor sum(Tape& tape, const Tensor& a);   // -> 1x1
Tensor mean(Tape& tape, const Tensor& a);  // -> 1x1

}  // namespace ops

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Coupled L2 decay: wd * param is added to the gradient before the moment
  // updates.
  double weight_decay = 0.0;
};

// First and second moment buffers per parameter plus the shared step count.
class AdamState {
 public:
  explicit AdamState(AdamConfig cfg) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  std::int64_t step_count() const { return t_; }

  // One bias-corrected update over params. Parameters without an entry in
  // grads are treated as having zero gradient.
  void step(std::span<Tensor* const> params, const GradMap& grads);

 private:
  struct Slot {
    std::vector<double> m, v;
  };

  AdamConfig cfg_;
  std::int64_t t_ = 0;
  std::unordered_map<const void*, Slot> slots_;
};

inline void adam_step(std::span<Tensor* const> params, const GradMap& grads,
                      AdamState& state) {
  state.step(params, grads);
}

// Scalar-valued function of one tensor, evaluated through the op catalogue.
using ScalarFn = std::function<Tensor(Tape&, const Tensor&)>;

struct FdReport {
  double max_rel_error = 0.0;
  int worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central-difference check of backward() against (f(x+h)-f(x-h)) / 2h per
// coordinate. Relative error uses max(1, |analytic|, |numeric|) as the
// denominator so near-zero gradients compare absolutely.
FdReport finite_difference_check(const ScalarFn& f, const Tensor& point,
                                 double h = 1e-5);

// Plain-text sidecar format: a "rows cols" header line, then one line per
// row with space-separated values that round-trip doubles exactly.
void save_tensor(const Tensor& t, const std::string& path);
Tensor load_tensor(const std::string& path);

}  // namespace nargis
