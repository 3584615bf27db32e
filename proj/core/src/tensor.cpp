#include "nargis/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>

namespace nargis {

namespace {

std::shared_ptr<std::vector<double>> make_storage(int rows, int cols, double fill) {
  if (rows < 0 || cols < 0) throw ShapeMismatch("negative tensor dimension");
  return std::make_shared<std::vector<double>>(
      static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill);
}

std::string shape_str(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

// c (n x m) += or = a (n x k) * b (k x m)
void matmul_nn(const double* a, const double* b, double* c, int n, int k, int m,
               bool accumulate) {
  if (!accumulate) std::fill(c, c + static_cast<std::size_t>(n) * m, 0.0);
  for (int i = 0; i < n; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * k;
    double* crow = c + static_cast<std::size_t>(i) * m;
    for (int l = 0; l < k; ++l) {
      const double av = arow[l];
      if (av == 0.0) continue;
      const double* brow = b + static_cast<std::size_t>(l) * m;
      for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

// c (n x k) += a (n x m) * b^T, where b is k x m
void matmul_nt(const double* a, const double* b, double* c, int n, int m, int k) {
  for (int i = 0; i < n; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * m;
    double* crow = c + static_cast<std::size_t>(i) * k;
    for (int j = 0; j < k; ++j) {
      const double* brow = b + static_cast<std::size_t>(j) * m;
      double acc = 0.0;
      for (int l = 0; l < m; ++l) acc += arow[l] * brow[l];
      crow[j] += acc;
    }
  }
}

// c (k x m) += a^T * b, where a is n x k and b is n x m
void matmul_tn(const double* a, const double* b, double* c, int n, int k, int m) {
  for (int i = 0; i < n; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * k;
    const double* brow = b + static_cast<std::size_t>(i) * m;
    for (int l = 0; l < k; ++l) {
      const double av = arow[l];
      if (av == 0.0) continue;
      double* crow = c + static_cast<std::size_t>(l) * m;
      for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

std::vector<double>& grad_buffer(std::vector<std::vector<double>>& grads, int id,
                                 std::size_t size) {
  auto& g = grads[static_cast<std::size_t>(id)];
  if (g.empty()) g.assign(size, 0.0);
  return g;
}

}  // namespace

Tensor Tensor::zeros(int rows, int cols) { return full(rows, cols, 0.0); }

Tensor Tensor::full(int rows, int cols, double value) {
  Tensor t;
  t.rows_ = rows;
  t.cols_ = cols;
  t.data_ = make_storage(rows, cols, value);
  return t;
}

Tensor Tensor::from_rows(int rows, int cols, std::vector<double> values) {
  if (values.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
    throw ShapeMismatch("from_rows: value count does not match shape");
  Tensor t;
  t.rows_ = rows;
  t.cols_ = cols;
  t.data_ = std::make_shared<std::vector<double>>(std::move(values));
  return t;
}

Tensor Tensor::row_vector(std::vector<double> values) {
  const int n = static_cast<int>(values.size());
  return from_rows(1, n, std::move(values));
}

Tensor Tensor::scalar(double value) { return from_rows(1, 1, {value}); }

Tensor Tensor::glorot_uniform(int rows, int cols, Rng& rng) {
  const double a = std::sqrt(6.0 / (rows + cols));
  std::uniform_real_distribution<double> dist(-a, a);
  Tensor t = zeros(rows, cols);
  for (double& v : *t.data_) v = dist(rng);
  return t;
}

double Tensor::item() const {
  if (rows_ != 1 || cols_ != 1)
    throw NotScalar("item() on a " + shape_str(*this) + " tensor");
  return (*data_)[0];
}

Tensor Tensor::clone() const {
  Tensor t;
  t.rows_ = rows_;
  t.cols_ = cols_;
  t.data_ = data_ ? std::make_shared<std::vector<double>>(*data_)
                  : make_storage(0, 0, 0.0);
  return t;
}

Tensor Tensor::detached() const {
  Tensor t = *this;
  t.requires_grad_ = false;
  t.tape_ = nullptr;
  t.tape_gen_ = 0;
  t.node_ = -1;
  return t;
}

void Tape::reset() {
  nodes_.clear();
  leaf_ids_.clear();
  ++gen_;
  consumed_ = false;
}

bool Tape::tracked(const Tensor& t) const {
  if (t.requires_grad_) return true;
  return t.tape_ == this && t.tape_gen_ == gen_ && t.node_ >= 0;
}

int Tape::touch(const Tensor& t) {
  if (t.tape_ == this && t.tape_gen_ == gen_ && t.node_ >= 0) return t.node_;
  if (!t.requires_grad_)
    throw DetachedTensor("touch() on a tensor that is not tracked");
  auto it = leaf_ids_.find(t.key());
  if (it != leaf_ids_.end()) return it->second;
  Node node;
  node.rows = t.rows_;
  node.cols = t.cols_;
  node.leaf = true;
  node.leaf_key = t.key();
  nodes_.push_back(std::move(node));
  const int id = static_cast<int>(nodes_.size()) - 1;
  leaf_ids_.emplace(t.key(), id);
  return id;
}

int Tape::record(int rows, int cols, Backprop backprop) {
  Node node;
  node.rows = rows;
  node.cols = cols;
  node.backprop = std::move(backprop);
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

void Tape::attach(Tensor& t, int node) {
  t.tape_ = this;
  t.tape_gen_ = gen_;
  t.node_ = node;
}

GradMap Tape::backward(const Tensor& loss) {
  if (loss.rows() != 1 || loss.cols() != 1)
    throw NotScalar("backward from a " + shape_str(loss) + " tensor");
  if (loss.tape_ != this || loss.tape_gen_ != gen_ || loss.node_ < 0)
    throw DetachedTensor("backward from a tensor not recorded on this tape");
  if (consumed_) throw Error("tape already swept; reset() before reuse");
  consumed_ = true;

  std::vector<std::vector<double>> grads(nodes_.size());
  grads[static_cast<std::size_t>(loss.node_)] = {1.0};

  for (int id = loss.node_; id >= 0; --id) {
    auto& g = grads[static_cast<std::size_t>(id)];
    if (g.empty()) continue;
    auto& node = nodes_[static_cast<std::size_t>(id)];
    if (node.backprop) node.backprop(g, grads);
  }

  GradMap out;
  for (const auto& [key, id] : leaf_ids_) {
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    auto& g = grads[static_cast<std::size_t>(id)];
    if (g.empty())
      out.emplace(key, Tensor::zeros(node.rows, node.cols));
    else
      out.emplace(key, Tensor::from_rows(node.rows, node.cols, std::move(g)));
  }

  // Saved activations live in the backprop closures; release them now.
  for (auto& node : nodes_) node.backprop = nullptr;
  return out;
}

namespace ops {

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeMismatch(std::string(what) + ": " + shape_str(a) + " vs " +
                        shape_str(b));
}

void check_nonempty(const Tensor& a, const char* what) {
  if (a.empty()) throw ShapeMismatch(std::string(what) + ": empty tensor");
}

Tensor make_result(Tape& tape, int rows, int cols, std::vector<double> values,
                   bool track, Tape::Backprop backprop) {
  Tensor out = Tensor::from_rows(rows, cols, std::move(values));
  if (track) tape.attach(out, tape.record(rows, cols, std::move(backprop)));
  return out;
}

// Elementwise unary op with gradient dy/dx expressed over the saved input.
template <typename Fwd, typename Bwd>
Tensor unary_elementwise(Tape& tape, const Tensor& a, Fwd fwd, Bwd bwd) {
  check_nonempty(a, "unary op");
  const auto& x = a.values();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
  const bool track = tape.tracked(a);
  Tape::Backprop bp;
  if (track) {
    const int ia = tape.touch(a);
    auto xdata = a.shared_values();
    const std::size_t n = x.size();
    bp = [ia, xdata, n, bwd](const std::vector<double>& og,
                             std::vector<std::vector<double>>& grads) {
      auto& ga = grad_buffer(grads, ia, n);
      for (std::size_t i = 0; i < n; ++i) ga[i] += og[i] * bwd((*xdata)[i]);
    };
  }
  return make_result(tape, a.rows(), a.cols(), std::move(y), track, std::move(bp));
}

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    throw ShapeMismatch("matmul: " + shape_str(a) + " * " + shape_str(b));
  const int n = a.rows(), k = a.cols(), m = b.cols();
  std::vector<double> y(static_cast<std::size_t>(n) * m);
  matmul_nn(a.values().data(), b.values().data(), y.data(), n, k, m, false);

  const bool ta = tape.tracked(a), tb = tape.tracked(b);
  Tape::Backprop bp;
  if (ta || tb) {
    const int ia = ta ? tape.touch(a) : -1;
    const int ib = tb ? tape.touch(b) : -1;
    auto adata = a.shared_values();
    auto bdata = b.shared_values();
    bp = [ia, ib, adata, bdata, n, k, m](const std::vector<double>& og,
                                         std::vector<std::vector<double>>& grads) {
      if (ia >= 0) {
        auto& ga = grad_buffer(grads, ia, static_cast<std::size_t>(n) * k);
        matmul_nt(og.data(), bdata->data(), ga.data(), n, m, k);
      }
      if (ib >= 0) {
        auto& gb = grad_buffer(grads, ib, static_cast<std::size_t>(k) * m);
        matmul_tn(adata->data(), og.data(), gb.data(), n, k, m);
      }
    };
  }
  return make_result(tape, n, m, std::move(y), ta || tb, std::move(bp));
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  const auto& xa = a.values();
  const auto& xb = b.values();
  std::vector<double> y(xa.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = xa[i] + xb[i];

  const bool ta = tape.tracked(a), tb = tape.tracked(b);
  Tape::Backprop bp;
  if (ta || tb) {
    const int ia = ta ? tape.touch(a) : -1;
    const int ib = tb ? tape.touch(b) : -1;
    const std::size_t sz = y.size();
    bp = [ia, ib, sz](const std::vector<double>& og,
                      std::vector<std::vector<double>>& grads) {
      for (int id : {ia, ib}) {
        if (id < 0) continue;
        auto& g = grad_buffer(grads, id, sz);
        for (std::size_t i = 0; i < sz; ++i) g[i] += og[i];
      }
    };
  }
  return make_result(tape, a.rows(), a.cols(), std::move(y), ta || tb, std::move(bp));
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  return add(tape, a, scale(tape, b, -1.0));
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  const auto& xa = a.values();
  const auto& xb = b.values();
  std::vector<double> y(xa.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = xa[i] * xb[i];

  const bool ta = tape.tracked(a), tb = tape.tracked(b);
  Tape::Backprop bp;
  if (ta || tb) {
    const int ia = ta ? tape.touch(a) : -1;
    const int ib = tb ? tape.touch(b) : -1;
    auto adata = a.shared_values();
    auto bdata = b.shared_values();
    const std::size_t sz = y.size();
    bp = [ia, ib, adata, bdata, sz](const std::vector<double>& og,
                                    std::vector<std::vector<double>>& grads) {
      if (ia >= 0) {
        auto& ga = grad_buffer(grads, ia, sz);
        for (std::size_t i = 0; i < sz; ++i) ga[i] += og[i] * (*bdata)[i];
      }
      if (ib >= 0) {
        auto& gb = grad_buffer(grads, ib, sz);
        for (std::size_t i = 0; i < sz; ++i) gb[i] += og[i] * (*adata)[i];
      }
    };
  }
  return make_result(tape, a.rows(), a.cols(), std::move(y), ta || tb, std::move(bp));
}

Tensor scale(Tape& tape, const Tensor& a, double s) {
  check_nonempty(a, "scale");
  const auto& x = a.values();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = s * x[i];

  const bool track = tape.tracked(a);
  Tape::Backprop bp;
  if (track) {
    const int ia = tape.touch(a);
    const std::size_t sz = y.size();
    bp = [ia, s, sz](const std::vector<double>& og,
                     std::vector<std::vector<double>>& grads) {
      auto& ga = grad_buffer(grads, ia, sz);
      for (std::size_t i = 0; i < sz; ++i) ga[i] += s * og[i];
    };
  }
  return make_result(tape, a.rows(), a.cols(), std::move(y), track, std::move(bp));
}

Tensor relu(Tape& tape, const Tensor& a) {
  return unary_elementwise(
      tape, a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(Tape& tape, const Tensor& a) {
  auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  return unary_elementwise(tape, a, sig, [sig](double x) {
    const double s = sig(x);
    return s * (1.0 - s);
  });
}

Tensor log(Tape& tape, const Tensor& a, double eps) {
  return unary_elementwise(
      tape, a, [eps](double x) { return std::log(x + eps); },
      [eps](double x) { return 1.0 / (x + eps); });
}

Tensor exp(Tape& tape, const Tensor& a) {
  return unary_elementwise(tape, a, [](double x) { return std::exp(x); },
                           [](double x) { return std::exp(x); });
}

Tensor sqrt(Tape& tape, const Tensor& a) {
  return unary_elementwise(
      tape, a, [](double x) { return std::sqrt(x); },
      [](double x) { return x > 0.0 ? 0.5 / std::sqrt(x) : 0.0; });
}

Tensor div(Tape& tape, const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "div");
  const auto& xa = a.values();
  const auto& xb = b.values();
  std::vector<double> y(xa.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = xa[i] / xb[i];

  const bool ta = tape.tracked(a), tb = tape.tracked(b);
  Tape::Backprop bp;
  if (ta || tb) {
    const int ia = ta ? tape.touch(a) : -1;
    const int ib = tb ? tape.touch(b) : -1;
    auto adata = a.shared_values();
    auto bdata = b.shared_values();
    const std::size_t sz = y.size();
    bp = [ia, ib, adata, bdata, sz](const std::vector<double>& og,
                                    std::vector<std::vector<double>>& grads) {
      if (ia >= 0) {
        auto& ga = grad_buffer(grads, ia, sz);
        for (std::size_t i = 0; i < sz; ++i) ga[i] += og[i] / (*bdata)[i];
      }
      if (ib >= 0) {
        auto& gb = grad_buffer(grads, ib, sz);
        for (std::size_t i = 0; i < sz; ++i) {
          const double bb = (*bdata)[i];
          gb[i] -= og[i] * (*adata)[i] / (bb * bb);
        }
      }
    };
  }
  return make_result(tape, a.rows(), a.cols(), std::move(y), ta || tb, std::move(bp));
}

Tensor row_softmax(Tape& tape, const Tensor& a) {
  check_nonempty(a, "row_softmax");
  const int n = a.rows(), m = a.cols();
  std::vector<double> y(a.values().size());
  for (int i = 0; i < n; ++i) {
    const double* x = a.values().data() + static_cast<std::size_t>(i) * m;
    double* out = y.data() + static_cast<std::size_t>(i) * m;
    double mx = x[0];
    for (int j = 1; j < m; ++j) mx = std::max(mx, x[j]);
    double z = 0.0;
    for (int j = 0; j < m; ++j) {
      out[j] = std::exp(x[j] - mx);
      z += out[j];
    }
    for (int j = 0; j < m; ++j) out[j] /= z;
  }

  const bool track = tape.tracked(a);
  Tape::Backprop bp;
  if (track) {
    const int ia = tape.touch(a);
    auto ydata = std::make_shared<std::vector<double>>(y);
    bp = [ia, ydata, n, m](const std::vector<double>& og,
                           std::vector<std::vector<double>>& grads) {
      auto& ga = grad_buffer(grads, ia, ydata->size());
      for (int i = 0; i < n; ++i) {
        const double* s = ydata->data() + static_cast<std::size_t>(i) * m;
        const double* go = og.data() + static_cast<std::size_t>(i) * m;
        double dot = 0.0;
        for (int j = 0; j < m; ++j) dot += go[j] * s[j];
        double* gi = ga.data() + static_cast<std::size_t>(i) * m;
        for (int j = 0; j < m; ++j) gi[j] += s[j] * (go[j] - dot);
      }
    };
  }
  return make_result(tape, n, m, std::move(y), track, std::move(bp));
}

Tensor row_mean(Tape& tape, const Tensor& a) {
  check_nonempty(a, "row_mean");
  const int n = a.rows(), m = a.cols();
  std::vector<double> y(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double* x = a.values().data() + static_cast<std::size_t>(i) * m;
    double acc = 0.0;
    for (int j = 0; j < m; ++j) acc += x[j];
    y[static_cast<std::size_t>(i)] = acc / m;
  }

  const bool track = tape.tracked(a);
  Tape::Backprop bp;
  if (track) {
    const int ia = tape.touch(a);
    bp = [ia, n, m](const std::vector<double>& og,
                    std::vector<std::vector<double>>& grads) {
      auto& ga = grad_buffer(grads, ia, static_cast<std::size_t>(n) * m);
      for (int i = 0; i < n; ++i) {
        const double g = og[static_cast<std::size_t>(i)] / m;
        double* gi = ga.data() + static_cast<std::size_t>(i) * m;
        for (int j = 0; j < m; ++j) gi[j] += g;
      }
    };
  }
  return make_result(tape, n, 1, std::move(y), track, std::move(bp));
}

Tensor row_slice(Tape& tape, const Tensor& a, int first, int count) {
  if (first < 0 || count < 1 || first + count > a.rows())
    throw ShapeMismatch("row_slice: rows [" + std::to_string(first) + ", " +
                        std::to_string(first + count) + ") of " + shape_str(a));
  const int m = a.cols();
  std::vector<double> y(
      a.values().begin() + static_cast<std::size_t>(first) * m,
      a.values().begin() + static_cast<std::size_t>(first + count) * m);

  const bool track = tape.tracked(a);
  Tape::Backprop bp;
  if (track) {
    const int ia = tape.touch(a);
    const int rows = a.rows();
    bp = [ia, rows, m, first, count](const std::vector<double>& og,
                                     std::vector<std::vector<double>>& grads) {
      auto& ga = grad_buffer(grads, ia, static_cast<std::size_t>(rows) * m);
      for (std::size_t i = 0; i < static_cast<std::size_t>(count) * m; ++i)
        ga[static_cast<std::size_t>(first) * m + i] += og[i];
    };
  }
  return make_result(tape, count, m, std::move(y), track, std::move(bp));
}

Tensor gather_rows(Tape& tape, const Tensor& a, const std::vector<int>& index) {
  if (index.empty()) throw ShapeMismatch("gather_rows: empty index");
  const int m = a.cols();
  for (int r : index)
    if (r < 0 || r >= a.rows())
      throw ShapeMismatch("gather_rows: row " + std::to_string(r) + " of " +
                          shape_str(a));
  const int n = static_cast<int>(index.size());
  std::vector<double> y(static_cast<std::size_t>(n) * m);
  for (int i = 0; i < n; ++i)
    std::copy_n(a.values().data() + static_cast<std::size_t>(index[static_cast<std::size_t>(i)]) * m,
                m, y.data() + static_cast<std::size_t>(i) * m);

  const bool track = tape.tracked(a);
  Tape::Backprop bp;
  if (track) {
    const int ia = tape.touch(a);
    const int rows = a.rows();
    auto idx = std::make_shared<std::vector<int>>(index);
    bp = [ia, rows, m, idx](const std::vector<double>& og,
                            std::vector<std::vector<double>>& grads) {
      auto& ga = grad_buffer(grads, ia, static_cast<std::size_t>(rows) * m);
      for (std::size_t i = 0; i < idx->size(); ++i) {
        double* dst = ga.data() + static_cast<std::size_t>((*idx)[i]) * m;
        const double* src = og.data() + i * m;
        for (int j = 0; j < m; ++j) dst[j] += src[j];
      }
    };
  }
  return make_result(tape, n, m, std::move(y), track, std::move(bp));
}

Tensor concat_rows(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols())
    throw ShapeMismatch("concat_rows: " + shape_str(a) + " over " + shape_str(b));
  const int m = a.cols();
  std::vector<double> y;
  y.reserve(a.values().size() + b.values().size());
  y.insert(y.end(), a.values().begin(), a.values().end());
  y.insert(y.end(), b.values().begin(), b.values().end());

  const bool ta = tape.tracked(a), tb = tape.tracked(b);
  Tape::Backprop bp;
  if (ta || tb) {
    const int ia = ta ? tape.touch(a) : -1;
    const int ib = tb ? tape.touch(b) : -1;
    const std::size_t asz = a.values().size();
    const std::size_t bsz = b.values().size();
    bp = [ia, ib, asz, bsz](const std::vector<double>& og,
                            std::vector<std::vector<double>>& grads) {
      if (ia >= 0) {
        auto& ga = grad_buffer(grads, ia, asz);
        for (std::size_t i = 0; i < asz; ++i) ga[i] += og[i];
      }
      if (ib >= 0) {
        auto& gb = grad_buffer(grads, ib, bsz);
        for (std::size_t i = 0; i < bsz; ++i) gb[i] += og[asz + i];
      }
    };
  }
  return make_result(tape, a.rows() + b.rows(), m, std::move(y), ta || tb,
                     std::move(bp));
}

Tensor dropout(Tape& tape, const Tensor& a, double p, Rng& rng, bool training) {
  if (p < 0.0 || p >= 1.0) throw BadParams("dropout rate must be in [0, 1)");
  if (!training || p == 0.0) return a;
  check_nonempty(a, "dropout");
  const double keep = 1.0 - p;
  std::bernoulli_distribution coin(keep);
  auto mask = std::make_shared<std::vector<double>>(a.values().size());
  std::vector<double> y(a.values().size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double m = coin(rng) ? 1.0 / keep : 0.0;
    (*mask)[i] = m;
    y[i] = a.values()[i] * m;
  }

  const bool track = tape.tracked(a);
  Tape::Backprop bp;
  if (track) {
    const int ia = tape.touch(a);
    const std::size_t sz = y.size();
    bp = [ia, mask, sz](const std::vector<double>& og,
                        std::vector<std::vector<double>>& grads) {
      auto& ga = grad_buffer(grads, ia, sz);
      for (std::size_t i = 0; i < sz; ++i) ga[i] += og[i] * (*mask)[i];
    };
  }
  return make_result(tape, a.rows(), a.cols(), std::move(y), track, std::move(bp));
}

namespace {

Tensor reduce_all(Tape& tape, const Tensor& a, bool take_mean) {
  check_nonempty(a, take_mean ? "mean" : "sum");
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  const double denom = take_mean ? static_cast<double>(a.size()) : 1.0;
  std::vector<double> y{acc / denom};

  const bool track = tape.tracked(a);
  Tape::Backprop bp;
  if (track) {
    const int ia = tape.touch(a);
    const std::size_t sz = a.values().size();
    bp = [ia, sz, denom](const std::vector<double>& og,
                         std::vector<std::vector<double>>& grads) {
      auto& ga = grad_buffer(grads, ia, sz);
      const double g = og[0] / denom;
      for (std::size_t i = 0; i < sz; ++i) ga[i] += g;
    };
  }
  return make_result(tape, 1, 1, std::move(y), track, std::move(bp));
}

}  // namespace

Tensor sum(Tape& tape, const Tensor& a) { return reduce_all(tape, a, false); }

Tensor mean(Tape& tape, const Tensor& a) { return reduce_all(tape, a, true); }

}  // namespace ops

void AdamState::step(std::span<Tensor* const> params, const GradMap& grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (Tensor* param : params) {
    auto& p = param->mutable_values();
    auto& slot = slots_[param->key()];
    if (slot.m.empty()) {
      slot.m.assign(p.size(), 0.0);
      slot.v.assign(p.size(), 0.0);
    }
    const auto it = grads.find(param->key());
    const std::vector<double>* g = it == grads.end() ? nullptr : &it->second.values();
    if (g && g->size() != p.size())
      throw ShapeMismatch("adam step: gradient size does not match parameter");
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = (g ? (*g)[i] : 0.0) + cfg_.weight_decay * p[i];
      slot.m[i] = cfg_.beta1 * slot.m[i] + (1.0 - cfg_.beta1) * gi;
      slot.v[i] = cfg_.beta2 * slot.v[i] + (1.0 - cfg_.beta2) * gi * gi;
      const double mhat = slot.m[i] / bc1;
      const double vhat = slot.v[i] / bc2;
      p[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

FdReport finite_difference_check(const ScalarFn& f, const Tensor& point, double h) {
  if (h <= 0.0) throw BadParams("finite difference step must be positive");

  Tensor x = point.clone();
  x.set_requires_grad(true);
  Tape tape;
  Tensor out = f(tape, x);
  Tensor analytic = Tensor::zeros(point.rows(), point.cols());
  if (tape.tracked(out)) {
    // An untracked output never touched x, so its gradient is zero.
    GradMap grads = tape.backward(out);
    if (auto it = grads.find(x.key()); it != grads.end()) analytic = it->second;
  }

  FdReport report;
  for (int i = 0; i < point.size(); ++i) {
    Tensor xp = point.clone();
    xp.mutable_values()[static_cast<std::size_t>(i)] += h;
    Tensor xm = point.clone();
    xm.mutable_values()[static_cast<std::size_t>(i)] -= h;
    Tape tp, tm;
    const double fp = f(tp, xp).item();
    const double fm = f(tm, xm).item();
    const double numeric = (fp - fm) / (2.0 * h);
    const double a = analytic.values()[static_cast<std::size_t>(i)];
    const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
    const double rel = std::abs(a - numeric) / denom;
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_index = i;
      report.analytic = a;
      report.numeric = numeric;
    }
  }
  return report;
}

void save_tensor(const Tensor& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot open " + path + " for writing");
  out << t.rows() << " " << t.cols() << "\n";
  char buf[64];
  for (int r = 0; r < t.rows(); ++r) {
    for (int c = 0; c < t.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", t.at(r, c));
      out << (c ? " " : "") << buf;
    }
    out << "\n";
  }
  if (!out) throw IoFailure("write failed for " + path);
}

Tensor load_tensor(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open " + path);
  int rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows < 0 || cols < 0)
    throw MalformedFile(path + ": bad tensor header");
  std::vector<double> values(static_cast<std::size_t>(rows) * cols);
  for (double& v : values) {
    if (!(in >> v)) throw MalformedFile(path + ": short tensor body");
    if (!std::isfinite(v)) throw MalformedFile(path + ": non-finite value");
  }
  std::string extra;
  if (in >> extra) throw MalformedFile(path + ": trailing content");
  return Tensor::from_rows(rows, cols, std::move(values));
}

}  // namespace nargis
