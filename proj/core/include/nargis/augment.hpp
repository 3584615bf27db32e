#pragma once

#include <string>
#include <vector>

#include "nargis/graph.hpp"
#include "nargis/tensor.hpp"

namespace nargis {

// A graph extended with injected nodes. New node n + i carries one edge to
// the center of spectral cluster i, a uniformly random label, and a learnable
// feature row theta[i] laid over an all-zero base. New nodes never join the
// labeled train/val/test masks, which only ever name original ids.
struct AugmentedGraph {
  Graph base;
  int n_new = 0;
  std::vector<Edge> new_edges;  // one per new node, (center, n + i) ordered
  std::vector<int> new_labels;  // size n_new, values in [0, c)
  Tensor theta;                 // n_new x d overlay, zero before learning

  int total_nodes() const { return base.n + n_new; }
  // Base edges plus injection edges, sorted. No new-new edges exist.
  std::vector<Edge> all_edges() const;
};

// Cluster the graph into n_new groups and attach one zero-featured node to
// each group's center.
AugmentedGraph get_augmented_graph(const Graph& g, int n_new, Rng& rng);

// Differentiable augmented feature matrix: base features (constant) stacked
// over theta, so gradients of anything built on the result flow into theta.
Tensor materialize(Tape& tape, const AugmentedGraph& aug);

// Plain-graph snapshot of the augmented graph: current theta values become
// the feature rows of the new nodes.
Graph compose_graph(const AugmentedGraph& aug);

// The composed graph in the standard format plus a "<path>.theta" sidecar.
void save_augmented(const AugmentedGraph& aug, const std::string& path);
AugmentedGraph load_augmented(const std::string& path);

}  // namespace nargis
