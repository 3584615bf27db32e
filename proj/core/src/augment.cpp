#include "nargis/augment.hpp"

#include <algorithm>
#include <utility>

#include "nargis/spectral.hpp"

namespace nargis {

std::vector<Edge> AugmentedGraph::all_edges() const {
  std::vector<Edge> edges = base.edges;
  edges.insert(edges.end(), new_edges.begin(), new_edges.end());
  std::sort(edges.begin(), edges.end());
  return edges;
}

AugmentedGraph get_augmented_graph(const Graph& g, int n_new, Rng& rng) {
  if (n_new < 1 || n_new > g.n)
    throw BadParams("need 1 <= n_new <= n injected nodes");

  const ClusterResult clusters = spectral_cluster(g, n_new, rng);

  AugmentedGraph aug;
  aug.base = g;
  aug.n_new = n_new;
  aug.theta = Tensor::zeros(n_new, g.d);
  std::uniform_int_distribution<int> label(0, g.c - 1);
  for (int i = 0; i < n_new; ++i) {
    aug.new_edges.push_back(
        make_edge(clusters.centers[static_cast<std::size_t>(i)], g.n + i));
    aug.new_labels.push_back(label(rng));
  }
  return aug;
}

Tensor materialize(Tape& tape, const AugmentedGraph& aug) {
  if (aug.theta.rows() != aug.n_new || aug.theta.cols() != aug.base.d)
    throw ShapeMismatch("theta must be n_new x d");
  return ops::concat_rows(tape, aug.base.features, aug.theta);
}

Graph compose_graph(const AugmentedGraph& aug) {
  Graph g;
  g.n = aug.total_nodes();
  g.d = aug.base.d;
  g.c = aug.base.c;
  std::vector<double> x = aug.base.features.values();
  const std::vector<double>& overlay = aug.theta.values();
  x.insert(x.end(), overlay.begin(), overlay.end());
  g.features = Tensor::from_rows(g.n, g.d, std::move(x));
  g.labels = aug.base.labels;
  g.labels.insert(g.labels.end(), aug.new_labels.begin(), aug.new_labels.end());
  g.edges = aug.all_edges();
  return g;
}

void save_augmented(const AugmentedGraph& aug, const std::string& path) {
  save_graph(compose_graph(aug), path);
  save_tensor(aug.theta, path + ".theta");
}

AugmentedGraph load_augmented(const std::string& path) {
  const Graph composed = load_graph(path);
  Tensor theta = load_tensor(path + ".theta");
  const int n_new = theta.rows();
  if (n_new < 1 || n_new >= composed.n)
    throw MalformedFile(path + ".theta: row count incompatible with graph");
  if (theta.cols() != composed.d)
    throw MalformedFile(path + ".theta: column count differs from features");
  const int n = composed.n - n_new;

  AugmentedGraph aug;
  aug.n_new = n_new;
  aug.theta = std::move(theta);
  aug.base.n = n;
  aug.base.d = composed.d;
  aug.base.c = composed.c;
  aug.base.labels.assign(composed.labels.begin(), composed.labels.begin() + n);
  aug.new_labels.assign(composed.labels.begin() + n, composed.labels.end());
  std::vector<double> x(composed.features.values().begin(),
                        composed.features.values().begin() +
                            static_cast<std::size_t>(n) * composed.d);
  aug.base.features = Tensor::from_rows(n, composed.d, std::move(x));
  for (int i = 0; i < n_new; ++i)
    for (int j = 0; j < composed.d; ++j)
      if (composed.features.at(n + i, j) != aug.theta.at(i, j))
        throw MalformedFile(path + ": new-node features disagree with sidecar");

  std::vector<int> degree(static_cast<std::size_t>(n_new), 0);
  for (const Edge& e : composed.edges) {
    if (e.v < n) {
      aug.base.edges.push_back(e);
    } else if (e.u < n) {
      aug.new_edges.push_back(e);
      ++degree[static_cast<std::size_t>(e.v - n)];
    } else {
      throw MalformedFile(path + ": edge between two injected nodes");
    }
  }
  for (int deg : degree)
    if (deg != 1) throw MalformedFile(path + ": injected node degree is not 1");
  std::sort(aug.new_edges.begin(), aug.new_edges.end(),
            [](const Edge& a, const Edge& b) { return a.v < b.v; });
  return aug;
}

}  // namespace nargis
