#pragma once

#include <span>
#include <vector>

#include "nargis/graph.hpp"
#include "nargis/tensor.hpp"

namespace nargis {

enum class GnnKind { kGcn, kSage };

// Two-layer node classifier. The gcn path uses one weight matrix per layer;
// the sage path keeps separate self and neighbor transforms per layer.
struct GnnParams {
  GnnKind kind = GnnKind::kGcn;
  double dropout = 0.5;
  Tensor w0, w1;                                // gcn: d x h, h x c
  Tensor w0_self, w0_neigh, w1_self, w1_neigh;  // sage: same shapes, twice

  std::vector<Tensor*> weights();
  std::vector<const Tensor*> weights() const;
  GnnParams clone() const;
  void set_requires_grad(bool on);
};

GnnParams init_gnn(GnnKind kind, int d, int hidden, int c, double dropout,
                   Rng& rng);

// Symmetric propagation D~^{-1/2} (A + I) D~^{-1/2} over the self-looped
// adjacency, dense.
Tensor normalize_adjacency(int n, std::span<const Edge> edges);
Tensor normalize_adjacency(const Graph& g);

// Neighbor mean D^{-1} A; rows of isolated nodes are zero.
Tensor mean_adjacency(int n, std::span<const Edge> edges);
Tensor mean_adjacency(const Graph& g);

// The matrix forward_gnn consumes for the given model kind.
Tensor propagation_matrix(GnnKind kind, int n, std::span<const Edge> edges);

// Posterior matrix (rows sum to 1). training enables dropout after the first
// activation, drawing the mask from rng; otherwise rng is untouched.
Tensor forward_gnn(Tape& tape, const GnnParams& p, const Tensor& prop,
                   const Tensor& x, bool training, Rng& rng);

// Inference posteriors for a plain graph: no dropout, detached result.
Tensor posteriors(const GnnParams& p, const Graph& g);

struct TrainConfig {
  int epochs = 200;
  double lr = 0.005;
  double weight_decay = 5e-4;
  int validate_every = 10;
  int hidden = 16;
  double dropout = 0.5;
};

struct TrainRecord {
  int epoch = 0;          // 1-based
  double train_loss = 0;  // masked NLL with dropout active
  double val_loss = 0;    // NaN on epochs without validation
};

struct TrainedGnn {
  GnnParams params;  // checkpoint with the lowest validation loss
  std::vector<TrainRecord> history;
};

// Full-batch Adam on the masked NLL; validation every validate_every epochs,
// keeping the best checkpoint. With no validation nodes the final parameters
// are returned.
TrainedGnn train_node_classifier(GnnKind kind, const Graph& g,
                                 const std::vector<int>& train_nodes,
                                 const std::vector<int>& val_nodes,
                                 const TrainConfig& cfg, Rng& rng);

// Fraction of masked nodes whose argmax class matches the label; argmax ties
// resolve to the lowest class index.
double accuracy(const Tensor& post, const std::vector<int>& labels,
                const std::vector<int>& mask);

}  // namespace nargis
