#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nargis/errors.hpp"
#include "nargis/rng.hpp"
#include "nargis/tensor.hpp"

namespace nargis {

// Undirected edge, stored with u < v.
struct Edge {
  int u = 0;
  int v = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

inline Edge make_edge(int u, int v) {
  return u < v ? Edge{u, v} : Edge{v, u};
}

// Undirected, unweighted attributed graph. Immutable once built: n nodes,
// d-dimensional features, c classes, labels in [-1, c) with -1 meaning
// unlabeled, and a deduplicated edge list sorted lexicographically with
// u < v throughout.
struct Graph {
  int n = 0;
  int d = 0;
  int c = 0;
  Tensor features;          // n x d
  std::vector<int> labels;  // size n
  std::vector<Edge> edges;

  bool has_edge(int u, int v) const;
  std::size_t pair_count() const {
    return static_cast<std::size_t>(n) * (n - 1) / 2;
  }
  std::vector<std::vector<int>> adjacency_lists() const;

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.n == b.n && a.d == b.d && a.c == b.c &&
           a.features.values() == b.features.values() && a.labels == b.labels &&
           a.edges == b.edges;
  }
};

// Throws MalformedFile if the fields are inconsistent (shape mismatches,
// labels out of range, bad endpoints, self loops, unsorted or duplicate
// edges, non-finite features).
void validate_graph(const Graph& g);

// Text format, whitespace separated:
//   line 1:            n d c
//   next n lines:      d feature values
//   next line:         n labels (-1 allowed)
//   next line:         m
//   next m lines:      u v        (u < v, sorted lexicographically)
// The loader deduplicates and symmetrizes edge endpoints; the writer emits
// the canonical form with round-trippable float formatting.
Graph load_graph(const std::string& path);
void save_graph(const Graph& g, const std::string& path);

// Edge density e / (n * (n - 1)) with each undirected edge counted once.
// Throws DegenerateGraph for n < 2.
double density(const Graph& g);

// Uniform sample of `count` distinct non-adjacent pairs, excluding
// self-loops and everything in `exclude`. Returns them sorted.
std::vector<Edge> sample_negative_edges(const Graph& g, std::size_t count,
                                        std::span<const Edge> exclude, Rng& rng);

struct SplitRatios {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
};

// Transductive split: node masks over labeled nodes and a partition of the
// edge set, with one uniformly sampled negative edge per positive in each
// split and all negative sets mutually disjoint.
struct SplitBundle {
  std::vector<int> train_nodes, val_nodes, test_nodes;
  std::vector<Edge> train_pos, val_pos, test_pos;
  std::vector<Edge> train_neg, val_neg, test_neg;
};

// Counts are floor(ratio * total) with the remainder assigned to train, for
// nodes and positive edges alike. Unlabeled nodes appear in no mask.
// Requires at least 10 edges and ratios summing to 1.
SplitBundle split_graph(const Graph& g, const SplitRatios& ratios, Rng& rng);

// Labeled node pair with y = 1 for an edge and y = 0 for a non-edge.
struct EdgeExample {
  int u = 0;
  int v = 0;
  int y = 0;

  friend bool operator==(const EdgeExample&, const EdgeExample&) = default;
};

struct EdgeDataset {
  std::vector<EdgeExample> rows;

  friend bool operator==(const EdgeDataset&, const EdgeDataset&) = default;
};

// CSV with a "u,v,y" header line.
EdgeDataset load_edge_dataset(const std::string& path);
void save_edge_dataset(const EdgeDataset& ds, const std::string& path);

// Stochastic block model with homophilous features: label = block id, the
// feature vector is the one-hot block signature plus independent
// N(0, feature_noise^2) noise in every dimension, and each pair is an edge
// with probability p_in (same block) or p_out (different blocks).
// Requires p_in > p_out, probabilities in [0, 1], d >= block count.
Graph synth_sbm(const std::vector<int>& block_sizes, double p_in, double p_out,
                int d, double feature_noise, Rng& rng);

}  // namespace nargis
