#pragma once

#include <cstdint>
#include <vector>

#include "nargis/graph.hpp"
#include "nargis/tensor.hpp"

namespace nargis {

// L = D - A, dense.
Tensor unnormalized_laplacian(const Graph& g);

struct EigenPairs {
  std::vector<double> values;  // ascending, size k
  Tensor vectors;              // n x k, column j pairs with values[j]
};

// The k algebraically smallest eigenpairs of a symmetric matrix. Vectors are
// orthonormal and sign-fixed (largest-magnitude component positive); each
// pair satisfies ||A v - lambda v|| <= tol * max(1, ||A||_F) or
// ConvergenceFailure is thrown.
EigenPairs smallest_eigenpairs(const Tensor& sym, int k, double tol = 1e-8);

struct KmeansResult {
  std::vector<int> assignment;  // size n, values in [0, k)
  Tensor centroids;             // k x dims
  int iterations = 0;
};

// Lloyd iterations from a k-means++ seeding. Ties in assignment go to the
// lowest centroid index; an emptied cluster is re-seeded with the point
// farthest from its current centroid; convergence is max centroid shift
// below 1e-9. Every cluster is non-empty on return.
KmeansResult kmeans(const Tensor& points, int k, Rng& rng, int max_iters = 100);

struct ClusterResult {
  int k = 0;
  std::vector<int> assignment;  // size n
  std::vector<int> centers;     // size k, node id of each cluster's center
  Tensor embedding;             // n x k spectral coordinates
};

// Embed nodes with the k smallest Laplacian eigenvectors, cluster the rows
// with kmeans, and pick each cluster's center node.
ClusterResult spectral_cluster(const Graph& g, int k, Rng& rng);

// Member whose mean Euclidean distance to the cluster's members (in the
// embedding) is minimal; ties resolve to the lowest node id.
int cluster_center(const Tensor& embedding, const std::vector<int>& assignment,
                   int cluster);

// Largest edge count of a K-ary tree of depth L grown from one root:
// K * ((K-1)^L - 1) / (K - 2) for K > 2, and 2L for K = 2.
std::uint64_t kary_tree_max_edges(std::uint64_t k, std::uint64_t depth);

struct ClusterCountRecommendation {
  long long raw = 0;      // floor(base_count * base_density / target_density)
  int rounded = 0;        // nearest positive multiple of 10, at least 10
};

// Scale a reference cluster count by relative density to pick how many nodes
// to inject into a sparser or denser graph.
ClusterCountRecommendation recommended_cluster_count(int base_count,
                                                     double base_density,
                                                     double target_density);

}  // namespace nargis
