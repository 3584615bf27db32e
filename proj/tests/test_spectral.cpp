#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <utility>
#include <vector>

#include "nargis/graph.hpp"
#include "nargis/spectral.hpp"

using namespace nargis;

namespace {

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  REQUIRE(a.size() == b.size());
  const double n = static_cast<double>(a.size());
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1;
    ra[a[i]] += 1;
    rb[b[i]] += 1;
  }
  auto choose2 = [](double m) { return m * (m - 1) / 2; };
  double sum_joint = 0, sum_a = 0, sum_b = 0;
  for (const auto& [k, v] : joint) sum_joint += choose2(v);
  for (const auto& [k, v] : ra) sum_a += choose2(v);
  for (const auto& [k, v] : rb) sum_b += choose2(v);
  const double expected = sum_a * sum_b / choose2(n);
  const double max_index = (sum_a + sum_b) / 2;
  if (max_index == expected) return 1.0;
  return (sum_joint - expected) / (max_index - expected);
}

int component_count(const Graph& g) {
  std::vector<int> parent(static_cast<std::size_t>(g.n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  int components = g.n;
  for (const Edge& e : g.edges) {
    const int pu = find(e.u), pv = find(e.v);
    if (pu != pv) {
      parent[static_cast<std::size_t>(pu)] = pv;
      --components;
    }
  }
  return components;
}

Graph featureless(int n, std::vector<Edge> edges) {
  Graph g;
  g.n = n;
  g.d = 1;
  g.c = 2;
  g.features = Tensor::zeros(n, 1);
  g.labels.assign(static_cast<std::size_t>(n), 0);
  std::sort(edges.begin(), edges.end());
  g.edges = std::move(edges);
  return g;
}

Graph random_edge_graph(Rng& rng, int n, double p) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<Edge> edges;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (coin(rng) < p) edges.push_back({u, v});
  return featureless(n, std::move(edges));
}

TEST_CASE("laplacian spectra of small graphs match closed forms") {
  // Triangle: eigenvalues 0, 3, 3.
  const Graph k3 = featureless(3, {{0, 1}, {0, 2}, {1, 2}});
  const EigenPairs tri = smallest_eigenpairs(unnormalized_laplacian(k3), 3);
  CHECK(std::abs(tri.values[0]) < 1e-8);
  CHECK(std::abs(tri.values[1] - 3.0) < 1e-8);
  CHECK(std::abs(tri.values[2] - 3.0) < 1e-8);

  // Path on three nodes: eigenvalues 0, 1, 3.
  const Graph p3 = featureless(3, {{0, 1}, {1, 2}});
  const EigenPairs path = smallest_eigenpairs(unnormalized_laplacian(p3), 3);
  CHECK(std::abs(path.values[0]) < 1e-8);
  CHECK(std::abs(path.values[1] - 1.0) < 1e-8);
  CHECK(std::abs(path.values[2] - 3.0) < 1e-8);
}

TEST_CASE("laplacian entries are degree minus adjacency") {
  const Graph p3 = featureless(3, {{0, 1}, {1, 2}});
  const Tensor lap = unnormalized_laplacian(p3);
  CHECK(lap.at(0, 0) == 1.0);
  CHECK(lap.at(1, 1) == 2.0);
  CHECK(lap.at(2, 2) == 1.0);
  CHECK(lap.at(0, 1) == -1.0);
  CHECK(lap.at(1, 0) == -1.0);
  CHECK(lap.at(0, 2) == 0.0);
}

TEST_CASE("zero eigenvalue multiplicity equals the component count") {
  Rng rng = make_rng(7001);
  for (int trial = 0; trial < 10; ++trial) {
    const Graph g = random_edge_graph(rng, 12, 0.12);
    const EigenPairs pairs = smallest_eigenpairs(unnormalized_laplacian(g), g.n);
    int zeros = 0;
    for (double v : pairs.values)
      if (std::abs(v) < 1e-7) ++zeros;
    CHECK(zeros == component_count(g));
  }
}

TEST_CASE("eigenpair contract holds on random symmetric matrices") {
  Rng rng = make_rng(7002);
  std::uniform_real_distribution<double> entry(-2.0, 2.0);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 3 + trial;
    Tensor sym = Tensor::zeros(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const double v = entry(rng);
        sym.mutable_values()[static_cast<std::size_t>(i) * n + j] = v;
        sym.mutable_values()[static_cast<std::size_t>(j) * n + i] = v;
      }
    const int k = 1 + trial % n;
    const EigenPairs pairs = smallest_eigenpairs(sym, k);
    REQUIRE(pairs.values.size() == static_cast<std::size_t>(k));
    REQUIRE(pairs.vectors.rows() == n);
    REQUIRE(pairs.vectors.cols() == k);
    CHECK(std::is_sorted(pairs.values.begin(), pairs.values.end()));

    double frob = 0.0;
    for (double v : sym.values()) frob += v * v;
    frob = std::sqrt(frob);
    for (int j = 0; j < k; ++j) {
      // Residual within tolerance.
      double res = 0.0, norm = 0.0, largest = 0.0;
      int arg_largest = 0;
      for (int i = 0; i < n; ++i) {
        double av = 0.0;
        for (int l = 0; l < n; ++l) av += sym.at(i, l) * pairs.vectors.at(l, j);
        const double diff = av - pairs.values[static_cast<std::size_t>(j)] *
                                     pairs.vectors.at(i, j);
        res += diff * diff;
        norm += pairs.vectors.at(i, j) * pairs.vectors.at(i, j);
        if (std::abs(pairs.vectors.at(i, j)) > largest) {
          largest = std::abs(pairs.vectors.at(i, j));
          arg_largest = i;
        }
      }
      CHECK(std::sqrt(res) <= 1e-8 * std::max(1.0, frob));
      CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-8);
      // Sign convention: the largest-magnitude component is positive.
      CHECK(pairs.vectors.at(arg_largest, j) > 0.0);
      // Orthogonality against the other vectors.
      for (int l = j + 1; l < k; ++l) {
        double dot = 0.0;
        for (int i = 0; i < n; ++i)
          dot += pairs.vectors.at(i, j) * pairs.vectors.at(i, l);
        CHECK(std::abs(dot) < 1e-8);
      }
    }
  }
}

TEST_CASE("eigen solver rejects bad inputs") {
  Tensor rect = Tensor::zeros(2, 3);
  CHECK_THROWS_AS(smallest_eigenpairs(rect, 1), BadParams);
  Tensor asym = Tensor::from_rows(2, 2, {0.0, 1.0, -1.0, 0.0});
  CHECK_THROWS_AS(smallest_eigenpairs(asym, 1), BadParams);
  Tensor ok = Tensor::zeros(2, 2);
  CHECK_THROWS_AS(smallest_eigenpairs(ok, 0), BadParams);
  CHECK_THROWS_AS(smallest_eigenpairs(ok, 3), BadParams);
}

TEST_CASE("kmeans recovers well separated blobs") {
  Rng rng = make_rng(4040);
  std::normal_distribution<double> jitter(0.0, 0.05);
  const double centers[3][2] = {{0, 0}, {10, 0}, {0, 10}};
  std::vector<double> pts;
  std::vector<int> truth;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 20; ++i) {
      pts.push_back(centers[c][0] + jitter(rng));
      pts.push_back(centers[c][1] + jitter(rng));
      truth.push_back(c);
    }
  const Tensor points = Tensor::from_rows(60, 2, std::move(pts));
  const KmeansResult km = kmeans(points, 3, rng);
  CHECK(adjusted_rand_index(km.assignment, truth) == doctest::Approx(1.0));
  std::vector<int> counts(3, 0);
  for (int a : km.assignment) {
    REQUIRE(a >= 0);
    REQUIRE(a < 3);
    ++counts[static_cast<std::size_t>(a)];
  }
  for (int c : counts) CHECK(c == 20);
}

TEST_CASE("kmeans edge cases") {
  Rng rng = make_rng(5);
  const Tensor points = Tensor::from_rows(4, 1, {0.0, 1.0, 2.0, 3.0});

  const KmeansResult one = kmeans(points, 1, rng);
  CHECK(one.assignment == std::vector<int>{0, 0, 0, 0});
  CHECK(one.centroids.at(0, 0) == doctest::Approx(1.5));

  const KmeansResult all = kmeans(points, 4, rng);
  std::vector<int> sorted = all.assignment;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3});

  CHECK_THROWS_AS(kmeans(points, 0, rng), BadParams);
  CHECK_THROWS_AS(kmeans(points, 5, rng), BadParams);
}

TEST_CASE("kmeans is deterministic per rng state") {
  Rng data_rng = make_rng(88);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> pts;
  for (int i = 0; i < 80; ++i) pts.push_back(u(data_rng));
  const Tensor points = Tensor::from_rows(40, 2, std::move(pts));
  Rng a = make_rng(3), b = make_rng(3);
  const KmeansResult ra = kmeans(points, 5, a);
  const KmeansResult rb = kmeans(points, 5, b);
  CHECK(ra.assignment == rb.assignment);
  CHECK(ra.centroids.values() == rb.centroids.values());
}

TEST_CASE("spectral clustering separates disjoint triangles") {
  const Graph two = featureless(6, {{0, 1}, {0, 2}, {1, 2}, {3, 4}, {3, 5}, {4, 5}});
  Rng rng = make_rng(11);
  const ClusterResult res = spectral_cluster(two, 2, rng);
  CHECK(res.k == 2);
  CHECK(adjusted_rand_index(res.assignment, {0, 0, 0, 1, 1, 1}) ==
        doctest::Approx(1.0));
  REQUIRE(res.centers.size() == 2);
  // One center per component, and the center belongs to its own cluster.
  for (int c = 0; c < 2; ++c)
    CHECK(res.assignment[static_cast<std::size_t>(res.centers[static_cast<std::size_t>(c)])] == c);
  CHECK(res.embedding.rows() == 6);
  CHECK(res.embedding.cols() == 2);
}

TEST_CASE("spectral clustering recovers planted blocks") {
  Rng graph_rng = make_rng(9090);
  const Graph g = synth_sbm({30, 30}, 0.4, 0.01, 2, 0.0, graph_rng);
  Rng rng = make_rng(17);
  const ClusterResult res = spectral_cluster(g, 2, rng);
  CHECK(adjusted_rand_index(res.assignment, g.labels) >= 0.95);
}

TEST_CASE("cluster centers minimize mean distance with lowest-id ties") {
  const Tensor line = Tensor::from_rows(3, 1, {0.0, 0.1, 1.0});
  CHECK(cluster_center(line, {0, 0, 0}, 0) == 1);

  const Tensor pair = Tensor::from_rows(2, 1, {0.0, 1.0});
  CHECK(cluster_center(pair, {0, 0}, 0) == 0);  // symmetric, tie to node 0

  const Tensor mixed = Tensor::from_rows(4, 1, {5.0, 0.0, 0.2, 9.0});
  CHECK(cluster_center(mixed, {1, 0, 0, 1}, 0) == 1);
  CHECK(cluster_center(mixed, {1, 0, 0, 1}, 1) == 0);  // singleton-ish: {0,3}
  CHECK(cluster_center(mixed, {0, 1, 1, 2}, 2) == 3);  // singleton

  CHECK_THROWS_AS(cluster_center(mixed, {0, 0, 0, 0}, 1), EmptyCluster);
}

TEST_CASE("kary tree edge bound matches the level sum") {
  for (std::uint64_t k = 2; k <= 5; ++k)
    for (std::uint64_t depth = 1; depth <= 4; ++depth) {
      // Level l has k * (k-1)^(l-1) nodes, each adding one edge.
      std::uint64_t oracle = 0, width = k;
      for (std::uint64_t l = 1; l <= depth; ++l) {
        oracle += width;
        width *= k - 1;
      }
      CHECK(kary_tree_max_edges(k, depth) == oracle);
    }
  CHECK(kary_tree_max_edges(3, 2) == 9);
  CHECK(kary_tree_max_edges(2, 6) == 12);
  CHECK_THROWS_AS(kary_tree_max_edges(1, 3), BadParams);
  CHECK_THROWS_AS(kary_tree_max_edges(3, 0), BadParams);
}

TEST_CASE("cluster count recommendation scales by density and rounds to tens") {
  const ClusterCountRecommendation a =
      recommended_cluster_count(10, 0.00144, 0.000823);
  CHECK(a.raw == 17);
  CHECK(a.rounded == 20);

  const ClusterCountRecommendation b =
      recommended_cluster_count(10, 0.00144, 0.000228);
  CHECK(b.raw == 63);
  CHECK(b.rounded == 60);

  const ClusterCountRecommendation same = recommended_cluster_count(10, 0.5, 0.5);
  CHECK(same.raw == 10);
  CHECK(same.rounded == 10);

  // The floor never drops below ten clusters.
  const ClusterCountRecommendation tiny = recommended_cluster_count(10, 0.1, 0.9);
  CHECK(tiny.raw == 1);
  CHECK(tiny.rounded == 10);

  CHECK_THROWS_AS(recommended_cluster_count(0, 0.1, 0.1), BadParams);
  CHECK_THROWS_AS(recommended_cluster_count(10, 0.0, 0.1), BadParams);
  CHECK_THROWS_AS(recommended_cluster_count(10, 0.1, -0.2), BadParams);
}

}  // namespace
