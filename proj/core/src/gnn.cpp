#include "nargis/gnn.hpp"

#include <cmath>
#include <limits>

#include "nargis/losses.hpp"

namespace nargis {

std::vector<Tensor*> GnnParams::weights() {
  if (kind == GnnKind::kGcn) return {&w0, &w1};
  return {&w0_self, &w0_neigh, &w1_self, &w1_neigh};
}

std::vector<const Tensor*> GnnParams::weights() const {
  if (kind == GnnKind::kGcn) return {&w0, &w1};
  return {&w0_self, &w0_neigh, &w1_self, &w1_neigh};
}

GnnParams GnnParams::clone() const {
  GnnParams out;
  out.kind = kind;
  out.dropout = dropout;
  if (kind == GnnKind::kGcn) {
    out.w0 = w0.clone();
    out.w1 = w1.clone();
  } else {
    out.w0_self = w0_self.clone();
    out.w0_neigh = w0_neigh.clone();
    out.w1_self = w1_self.clone();
    out.w1_neigh = w1_neigh.clone();
  }
  return out;
}

void GnnParams::set_requires_grad(bool on) {
  for (Tensor* w : weights()) w->set_requires_grad(on);
}

GnnParams init_gnn(GnnKind kind, int d, int hidden, int c, double dropout,
                   Rng& rng) {
  if (d < 1 || hidden < 1 || c < 1)
    throw BadParams("gnn dimensions must be positive");
  if (dropout < 0.0 || dropout >= 1.0)
    throw BadParams("dropout must be in [0, 1)");
  GnnParams p;
  p.kind = kind;
  p.dropout = dropout;
  if (kind == GnnKind::kGcn) {
    p.w0 = Tensor::glorot_uniform(d, hidden, rng);
    p.w1 = Tensor::glorot_uniform(hidden, c, rng);
  } else {
    p.w0_self = Tensor::glorot_uniform(d, hidden, rng);
    p.w0_neigh = Tensor::glorot_uniform(d, hidden, rng);
    p.w1_self = Tensor::glorot_uniform(hidden, c, rng);
    p.w1_neigh = Tensor::glorot_uniform(hidden, c, rng);
  }
  return p;
}

Tensor normalize_adjacency(int n, std::span<const Edge> edges) {
  if (n < 1) throw BadParams("need at least one node");
  Tensor adj = Tensor::zeros(n, n);
  std::vector<double>& a = adj.mutable_values();
  for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i) * n + i] = 1.0;
  for (const Edge& e : edges) {
    if (e.u < 0 || e.v >= n) throw BadNodeId("edge endpoint out of range");
    a[static_cast<std::size_t>(e.u) * n + e.v] = 1.0;
    a[static_cast<std::size_t>(e.v) * n + e.u] = 1.0;
  }
  std::vector<double> inv_sqrt(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double deg = 0.0;
    for (int j = 0; j < n; ++j) deg += a[static_cast<std::size_t>(i) * n + j];
    inv_sqrt[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(deg);
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      a[static_cast<std::size_t>(i) * n + j] *=
          inv_sqrt[static_cast<std::size_t>(i)] * inv_sqrt[static_cast<std::size_t>(j)];
  return adj;
}

Tensor normalize_adjacency(const Graph& g) {
  return normalize_adjacency(g.n, g.edges);
}

Tensor mean_adjacency(int n, std::span<const Edge> edges) {
  if (n < 1) throw BadParams("need at least one node");
  Tensor adj = Tensor::zeros(n, n);
  std::vector<double>& a = adj.mutable_values();
  std::vector<int> degree(static_cast<std::size_t>(n), 0);
  for (const Edge& e : edges) {
    if (e.u < 0 || e.v >= n) throw BadNodeId("edge endpoint out of range");
    a[static_cast<std::size_t>(e.u) * n + e.v] = 1.0;
    a[static_cast<std::size_t>(e.v) * n + e.u] = 1.0;
    ++degree[static_cast<std::size_t>(e.u)];
    ++degree[static_cast<std::size_t>(e.v)];
  }
  for (int i = 0; i < n; ++i) {
    if (degree[static_cast<std::size_t>(i)] == 0) continue;
    const double inv = 1.0 / degree[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) a[static_cast<std::size_t>(i) * n + j] *= inv;
  }
  return adj;
}

Tensor mean_adjacency(const Graph& g) { return mean_adjacency(g.n, g.edges); }

Tensor propagation_matrix(GnnKind kind, int n, std::span<const Edge> edges) {
  return kind == GnnKind::kGcn ? normalize_adjacency(n, edges)
                               : mean_adjacency(n, edges);
}

Tensor forward_gnn(Tape& tape, const GnnParams& p, const Tensor& prop,
                   const Tensor& x, bool training, Rng& rng) {
  if (prop.rows() != prop.cols() || prop.rows() != x.rows())
    throw ShapeMismatch("propagation matrix must be n x n matching features");
  if (p.kind == GnnKind::kGcn) {
    Tensor h = ops::relu(tape, ops::matmul(tape, ops::matmul(tape, prop, x), p.w0));
    h = ops::dropout(tape, h, p.dropout, rng, training);
    return ops::row_softmax(tape, ops::matmul(tape, ops::matmul(tape, prop, h), p.w1));
  }
  Tensor mixed = ops::add(tape, ops::matmul(tape, x, p.w0_self),
                          ops::matmul(tape, ops::matmul(tape, prop, x), p.w0_neigh));
  Tensor h = ops::relu(tape, mixed);
  h = ops::dropout(tape, h, p.dropout, rng, training);
  Tensor out = ops::add(tape, ops::matmul(tape, h, p.w1_self),
                        ops::matmul(tape, ops::matmul(tape, prop, h), p.w1_neigh));
  return ops::row_softmax(tape, out);
}

Tensor posteriors(const GnnParams& p, const Graph& g) {
  Tape tape;
  Rng unused = make_rng(0);
  const Tensor prop = propagation_matrix(p.kind, g.n, g.edges);
  return forward_gnn(tape, p, prop, g.features, false, unused).detached();
}

TrainedGnn train_node_classifier(GnnKind kind, const Graph& g,
                                 const std::vector<int>& train_nodes,
                                 const std::vector<int>& val_nodes,
                                 const TrainConfig& cfg, Rng& rng) {
  if (cfg.epochs < 0) throw BadParams("epochs must be non-negative");
  if (cfg.lr <= 0 || cfg.hidden < 1 || cfg.validate_every < 1 ||
      cfg.weight_decay < 0)
    throw BadParams("bad training configuration");
  if (train_nodes.empty()) throw EmptyMask("no training nodes");

  TrainedGnn out;
  out.params = init_gnn(kind, g.d, cfg.hidden, g.c, cfg.dropout, rng);
  out.params.set_requires_grad(true);
  const Tensor prop = propagation_matrix(kind, g.n, g.edges);

  AdamConfig opt;
  opt.lr = cfg.lr;
  opt.weight_decay = cfg.weight_decay;
  AdamState state(opt);
  const std::vector<Tensor*> learnable = out.params.weights();
  Tape tape;

  GnnParams best;
  double best_val = std::numeric_limits<double>::infinity();
  bool have_best = false;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    tape.reset();
    const Tensor post = forward_gnn(tape, out.params, prop, g.features, true, rng);
    const Tensor loss = loss_class(tape, post, g.labels, train_nodes);
    TrainRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss.item();
    rec.val_loss = std::numeric_limits<double>::quiet_NaN();
    GradMap grads = tape.backward(loss);
    adam_step(learnable, grads, state);

    if (epoch % cfg.validate_every == 0 && !val_nodes.empty()) {
      Tape vtape;
      const Tensor vpost =
          forward_gnn(vtape, out.params, prop, g.features, false, rng);
      rec.val_loss = loss_class(vtape, vpost, g.labels, val_nodes).item();
      if (rec.val_loss < best_val) {
        best_val = rec.val_loss;
        best = out.params.clone();
        have_best = true;
      }
    }
    out.history.push_back(rec);
  }

  if (have_best) out.params = best;
  out.params.set_requires_grad(false);
  return out;
}

double accuracy(const Tensor& post, const std::vector<int>& labels,
                const std::vector<int>& mask) {
  if (mask.empty()) throw EmptyMask("accuracy over an empty mask");
  int hits = 0;
  for (int u : mask) {
    if (u < 0 || u >= post.rows()) throw BadNodeId("mask node out of range");
    int arg = 0;
    for (int j = 1; j < post.cols(); ++j)
      if (post.at(u, j) > post.at(u, arg)) arg = j;
    if (arg == labels[static_cast<std::size_t>(u)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(mask.size());
}

}  // namespace nargis
