#include "nargis/spectral.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace nargis {

namespace {

double sq_dist(const double* a, const double* b, int dims) {
  double acc = 0.0;
  for (int j = 0; j < dims; ++j) {
    const double diff = a[j] - b[j];
    acc += diff * diff;
  }
  return acc;
}

}  // namespace

Tensor unnormalized_laplacian(const Graph& g) {
  Tensor lap = Tensor::zeros(g.n, g.n);
  auto& l = lap.mutable_values();
  const std::size_t n = static_cast<std::size_t>(g.n);
  for (const Edge& e : g.edges) {
    l[static_cast<std::size_t>(e.u) * n + e.v] = -1.0;
    l[static_cast<std::size_t>(e.v) * n + e.u] = -1.0;
    l[static_cast<std::size_t>(e.u) * n + e.u] += 1.0;
    l[static_cast<std::size_t>(e.v) * n + e.v] += 1.0;
  }
  return lap;
}

EigenPairs smallest_eigenpairs(const Tensor& sym, int k, double tol) {
  const int n = sym.rows();
  if (n < 1 || sym.cols() != n) throw BadParams("matrix must be square");
  if (k < 1 || k > n) throw BadParams("need 1 <= k <= n eigenpairs");
  if (tol <= 0) throw BadParams("tolerance must be positive");

  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>>
      a(sym.values().data(), n, n);
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if (asym > 1e-10 * scale) throw BadParams("matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success)
    throw ConvergenceFailure("eigensolver did not converge");

  EigenPairs out;
  out.values.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + k);
  out.vectors = Tensor::zeros(n, k);
  auto& v = out.vectors.mutable_values();
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd col = solver.eigenvectors().col(j);
    // Canonical orientation: largest-magnitude component positive.
    int arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < 0) col = -col;
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i) * k + j] = col(i);
  }

  const double residual_budget = tol * std::max(1.0, a.norm());
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd col(n);
    for (int i = 0; i < n; ++i) col(i) = v[static_cast<std::size_t>(i) * k + j];
    const double residual = (a * col - out.values[static_cast<std::size_t>(j)] * col).norm();
    if (residual > residual_budget)
      throw ConvergenceFailure("eigenpair " + std::to_string(j) +
                               " residual " + std::to_string(residual));
    for (int l = 0; l <= j; ++l) {
      double dot = 0.0;
      for (int i = 0; i < n; ++i)
        dot += col(i) * v[static_cast<std::size_t>(i) * k + l];
      const double want = l == j ? 1.0 : 0.0;
      if (std::abs(dot - want) > 1e-8)
        throw ConvergenceFailure("eigenvectors not orthonormal");
    }
  }
  return out;
}

KmeansResult kmeans(const Tensor& points, int k, Rng& rng, int max_iters) {
  const int n = points.rows();
  const int dims = points.cols();
  if (n < 1 || dims < 1) throw BadParams("kmeans needs a non-empty point set");
  if (k < 1 || k > n) throw BadParams("need 1 <= k <= point count");
  if (max_iters < 1) throw BadParams("max_iters must be positive");
  const double* pts = points.values().data();
  auto point = [&](int i) { return pts + static_cast<std::size_t>(i) * dims; };

  // k-means++ seeding.
  Tensor centroids = Tensor::zeros(k, dims);
  auto& cent = centroids.mutable_values();
  auto centroid = [&](int j) { return cent.data() + static_cast<std::size_t>(j) * dims; };
  std::vector<char> chosen(static_cast<std::size_t>(n), 0);
  {
    std::uniform_int_distribution<int> first(0, n - 1);
    const int c0 = first(rng);
    chosen[static_cast<std::size_t>(c0)] = 1;
    std::copy_n(point(c0), dims, centroid(0));
  }
  std::vector<double> best(static_cast<std::size_t>(n));
  for (int j = 1; j < k; ++j) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double d = std::numeric_limits<double>::infinity();
      for (int l = 0; l < j; ++l) d = std::min(d, sq_dist(point(i), centroid(l), dims));
      if (chosen[static_cast<std::size_t>(i)]) d = 0.0;
      best[static_cast<std::size_t>(i)] = d;
      total += d;
    }
    int pick = -1;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng);
      for (int i = 0; i < n; ++i) {
        r -= best[static_cast<std::size_t>(i)];
        if (r <= 0.0) {
          pick = i;
          break;
        }
      }
      if (pick < 0) pick = n - 1;
    } else {
      // Duplicated points: fall back to a uniform unchosen point.
      std::vector<int> remaining;
      for (int i = 0; i < n; ++i)
        if (!chosen[static_cast<std::size_t>(i)]) remaining.push_back(i);
      std::uniform_int_distribution<std::size_t> u(0, remaining.size() - 1);
      pick = remaining[u(rng)];
    }
    chosen[static_cast<std::size_t>(pick)] = 1;
    std::copy_n(point(pick), dims, centroid(j));
  }

  KmeansResult result;
  result.assignment.assign(static_cast<std::size_t>(n), 0);
  std::vector<int> counts(static_cast<std::size_t>(k));
  std::vector<double> sums(static_cast<std::size_t>(k) * dims);

  for (int iter = 0; iter < max_iters; ++iter) {
    result.iterations = iter + 1;
    for (int i = 0; i < n; ++i) {
      int arg = 0;
      double bd = sq_dist(point(i), centroid(0), dims);
      for (int j = 1; j < k; ++j) {
        const double d = sq_dist(point(i), centroid(j), dims);
        if (d < bd) {
          bd = d;
          arg = j;
        }
      }
      result.assignment[static_cast<std::size_t>(i)] = arg;
    }

    // Re-seed every emptied cluster with the point farthest from its
    // centroid, one cluster at a time.
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(result.assignment[static_cast<std::size_t>(i)])];
    for (int j = 0; j < k; ++j) {
      if (counts[static_cast<std::size_t>(j)] > 0) continue;
      int farthest = -1;
      double fd = -1.0;
      for (int i = 0; i < n; ++i) {
        const int a = result.assignment[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(a)] <= 1) continue;
        const double d = sq_dist(point(i), centroid(a), dims);
        if (d > fd) {
          fd = d;
          farthest = i;
        }
      }
      if (farthest < 0) throw EmptyCluster("cannot re-seed empty cluster");
      --counts[static_cast<std::size_t>(result.assignment[static_cast<std::size_t>(farthest)])];
      result.assignment[static_cast<std::size_t>(farthest)] = j;
      counts[static_cast<std::size_t>(j)] = 1;
      std::copy_n(point(farthest), dims, centroid(j));
    }

    std::fill(sums.begin(), sums.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      double* s = sums.data() + static_cast<std::size_t>(result.assignment[static_cast<std::size_t>(i)]) * dims;
      const double* p = point(i);
      for (int jd = 0; jd < dims; ++jd) s[jd] += p[jd];
    }
    double shift = 0.0;
    for (int j = 0; j < k; ++j) {
      double sd = 0.0;
      double* cj = centroid(j);
      const double* sj = sums.data() + static_cast<std::size_t>(j) * dims;
      for (int jd = 0; jd < dims; ++jd) {
        const double next = sj[jd] / counts[static_cast<std::size_t>(j)];
        const double diff = next - cj[jd];
        sd += diff * diff;
        cj[jd] = next;
      }
      shift = std::max(shift, std::sqrt(sd));
    }
    if (shift < 1e-9) break;
  }

  result.centroids = centroids;
  return result;
}

ClusterResult spectral_cluster(const Graph& g, int k, Rng& rng) {
  if (k < 1 || k > g.n) throw BadParams("need 1 <= k <= n clusters");
  const Tensor lap = unnormalized_laplacian(g);
  EigenPairs pairs = smallest_eigenpairs(lap, k);
  KmeansResult km = kmeans(pairs.vectors, k, rng);

  ClusterResult out;
  out.k = k;
  out.assignment = std::move(km.assignment);
  out.embedding = pairs.vectors;
  out.centers.reserve(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j)
    out.centers.push_back(cluster_center(out.embedding, out.assignment, j));
  return out;
}

int cluster_center(const Tensor& embedding, const std::vector<int>& assignment,
                   int cluster) {
  const int dims = embedding.cols();
  std::vector<int> members;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] == cluster) members.push_back(static_cast<int>(i));
  if (members.empty())
    throw EmptyCluster("cluster " + std::to_string(cluster) + " has no members");

  const double* pts = embedding.values().data();
  int best = members.front();
  double best_mean = std::numeric_limits<double>::infinity();
  for (int u : members) {
    double acc = 0.0;
    for (int v : members)
      acc += std::sqrt(sq_dist(pts + static_cast<std::size_t>(u) * dims,
                               pts + static_cast<std::size_t>(v) * dims, dims));
    const double mean_dist = acc / static_cast<double>(members.size());
    if (mean_dist < best_mean - 1e-15) {
      best_mean = mean_dist;
      best = u;  // members ascend, so ties keep the lowest node id
    }
  }
  return best;
}

std::uint64_t kary_tree_max_edges(std::uint64_t k, std::uint64_t depth) {
  if (k < 2 || depth < 1) throw BadParams("need k >= 2 and depth >= 1");
  if (k == 2) return 2 * depth;
  std::uint64_t pw = 1;  // (k-1)^depth
  for (std::uint64_t i = 0; i < depth; ++i) pw *= k - 1;
  return k * (pw - 1) / (k - 2);
}

ClusterCountRecommendation recommended_cluster_count(int base_count,
                                                     double base_density,
                                                     double target_density) {
  if (base_count < 1) throw BadParams("base cluster count must be positive");
  if (base_density <= 0 || target_density <= 0)
    throw BadParams("densities must be positive");
  ClusterCountRecommendation rec;
  rec.raw = static_cast<long long>(
      std::floor(base_count * base_density / target_density));
  const long long tens = (rec.raw + 5) / 10;
  rec.rounded = static_cast<int>(std::max(1LL, tens) * 10);
  return rec;
}

}  // namespace nargis
