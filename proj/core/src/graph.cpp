#include "nargis/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace nargis {

namespace {

// Round-trippable double formatting for the canonical writer.
std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
T read_token(std::istream& in, const char* what) {
  T value;
  if (!(in >> value))
    throw MalformedFile(std::string("expected ") + what);
  return value;
}

}  // namespace

bool Graph::has_edge(int u, int v) const {
  if (u == v) return false;
  return std::binary_search(edges.begin(), edges.end(), make_edge(u, v));
}

std::vector<std::vector<int>> Graph::adjacency_lists() const {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (const Edge& e : edges) {
    adj[static_cast<std::size_t>(e.u)].push_back(e.v);
    adj[static_cast<std::size_t>(e.v)].push_back(e.u);
  }
  return adj;
}

void validate_graph(const Graph& g) {
  if (g.n < 1 || g.d < 1 || g.c < 1)
    throw MalformedFile("graph header must have n, d, c >= 1");
  if (g.features.rows() != g.n || g.features.cols() != g.d)
    throw MalformedFile("feature matrix shape does not match header");
  for (double v : g.features.values())
    if (!std::isfinite(v)) throw MalformedFile("non-finite feature value");
  if (static_cast<int>(g.labels.size()) != g.n)
    throw MalformedFile("label count does not match node count");
  for (int y : g.labels)
    if (y < -1 || y >= g.c)
      throw MalformedFile("label " + std::to_string(y) + " outside [-1, " +
                          std::to_string(g.c) + ")");
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const Edge& e = g.edges[i];
    if (e.u < 0 || e.v < 0 || e.u >= g.n || e.v >= g.n)
      throw MalformedFile("edge endpoint outside [0, n)");
    if (e.u == e.v) throw MalformedFile("self loop on node " + std::to_string(e.u));
    if (e.u > e.v) throw MalformedFile("edge endpoints not ordered u < v");
    if (i > 0 && !(g.edges[i - 1] < e))
      throw MalformedFile("edge list not sorted or has duplicates");
  }
}

Graph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open " + path);

  Graph g;
  g.n = read_token<int>(in, "node count");
  g.d = read_token<int>(in, "feature dimension");
  g.c = read_token<int>(in, "class count");
  if (g.n < 1 || g.d < 1 || g.c < 1)
    throw MalformedFile("graph header must have n, d, c >= 1");

  std::vector<double> feats(static_cast<std::size_t>(g.n) * g.d);
  for (double& v : feats) v = read_token<double>(in, "feature value");
  g.features = Tensor::from_rows(g.n, g.d, std::move(feats));

  g.labels.resize(static_cast<std::size_t>(g.n));
  for (int& y : g.labels) y = read_token<int>(in, "label");

  const int m = read_token<int>(in, "edge count");
  if (m < 0) throw MalformedFile("negative edge count");
  g.edges.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const int u = read_token<int>(in, "edge endpoint");
    const int v = read_token<int>(in, "edge endpoint");
    if (u == v) throw MalformedFile("self loop on node " + std::to_string(u));
    g.edges.push_back(make_edge(u, v));
  }
  std::string trailing;
  if (in >> trailing) throw MalformedFile("trailing content after edge list");

  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());

  validate_graph(g);
  return g;
}

void save_graph(const Graph& g, const std::string& path) {
  validate_graph(g);
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot open " + path + " for writing");

  out << g.n << ' ' << g.d << ' ' << g.c << '\n';
  for (int i = 0; i < g.n; ++i) {
    for (int j = 0; j < g.d; ++j) {
      if (j) out << ' ';
      out << format_double(g.features.at(i, j));
    }
    out << '\n';
  }
  for (int i = 0; i < g.n; ++i) {
    if (i) out << ' ';
    out << g.labels[static_cast<std::size_t>(i)];
  }
  out << '\n' << g.edges.size() << '\n';
  for (const Edge& e : g.edges) out << e.u << ' ' << e.v << '\n';

  if (!out) throw IoFailure("write failed for " + path);
}

double density(const Graph& g) {
  if (g.n < 2) throw DegenerateGraph("density needs at least two nodes");
  return static_cast<double>(g.edges.size()) /
         (static_cast<double>(g.n) * (g.n - 1));
}

std::vector<Edge> sample_negative_edges(const Graph& g, std::size_t count,
                                        std::span<const Edge> exclude, Rng& rng) {
  for (const Edge& e : exclude)
    if (e.u < 0 || e.v < 0 || e.u >= g.n || e.v >= g.n)
      throw BadNodeId("excluded pair endpoint outside [0, n)");
  if (count == 0) return {};

  std::vector<Edge> skip(exclude.begin(), exclude.end());
  for (Edge& e : skip) e = make_edge(e.u, e.v);
  skip.insert(skip.end(), g.edges.begin(), g.edges.end());
  std::sort(skip.begin(), skip.end());
  skip.erase(std::unique(skip.begin(), skip.end()), skip.end());

  // Desk-scale graphs: enumerate the candidate pool and take a partial
  // Fisher-Yates sample, which is uniform without replacement.
  std::vector<Edge> pool;
  for (int u = 0; u < g.n; ++u) {
    for (int v = u + 1; v < g.n; ++v) {
      const Edge e{u, v};
      if (!std::binary_search(skip.begin(), skip.end(), e)) pool.push_back(e);
    }
  }
  if (count > pool.size())
    throw NotEnoughNegatives("requested " + std::to_string(count) +
                             " negatives, only " + std::to_string(pool.size()) +
                             " non-edges available");

  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

namespace {

struct SplitCounts {
  std::size_t train = 0, val = 0, test = 0;
};

SplitCounts split_counts(std::size_t total, const SplitRatios& r) {
  SplitCounts c;
  c.val = static_cast<std::size_t>(std::floor(total * r.val));
  c.test = static_cast<std::size_t>(std::floor(total * r.test));
  c.train = total - c.val - c.test;  // remainder goes to train
  return c;
}

}  // namespace

SplitBundle split_graph(const Graph& g, const SplitRatios& ratios, Rng& rng) {
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
    throw BadParams("split ratios must be non-negative and sum to 1");
  if (g.edges.size() < 10)
    throw BadParams("split_graph needs at least 10 edges");

  SplitBundle b;

  std::vector<int> labeled;
  for (int u = 0; u < g.n; ++u)
    if (g.labels[static_cast<std::size_t>(u)] != -1) labeled.push_back(u);
  std::shuffle(labeled.begin(), labeled.end(), rng);
  const SplitCounts nc = split_counts(labeled.size(), ratios);
  b.train_nodes.assign(labeled.begin(), labeled.begin() + nc.train);
  b.val_nodes.assign(labeled.begin() + nc.train,
                     labeled.begin() + nc.train + nc.val);
  b.test_nodes.assign(labeled.begin() + nc.train + nc.val, labeled.end());
  std::sort(b.train_nodes.begin(), b.train_nodes.end());
  std::sort(b.val_nodes.begin(), b.val_nodes.end());
  std::sort(b.test_nodes.begin(), b.test_nodes.end());

  std::vector<Edge> pos(g.edges);
  std::shuffle(pos.begin(), pos.end(), rng);
  const SplitCounts ec = split_counts(pos.size(), ratios);
  b.train_pos.assign(pos.begin(), pos.begin() + ec.train);
  b.val_pos.assign(pos.begin() + ec.train, pos.begin() + ec.train + ec.val);
  b.test_pos.assign(pos.begin() + ec.train + ec.val, pos.end());
  std::sort(b.train_pos.begin(), b.train_pos.end());
  std::sort(b.val_pos.begin(), b.val_pos.end());
  std::sort(b.test_pos.begin(), b.test_pos.end());

  std::vector<Edge> neg = sample_negative_edges(g, pos.size(), {}, rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  b.train_neg.assign(neg.begin(), neg.begin() + ec.train);
  b.val_neg.assign(neg.begin() + ec.train, neg.begin() + ec.train + ec.val);
  b.test_neg.assign(neg.begin() + ec.train + ec.val, neg.end());
  std::sort(b.train_neg.begin(), b.train_neg.end());
  std::sort(b.val_neg.begin(), b.val_neg.end());
  std::sort(b.test_neg.begin(), b.test_neg.end());

  return b;
}

EdgeDataset load_edge_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "u,v,y")
    throw MalformedFile("edge dataset must start with 'u,v,y' header");
  EdgeDataset ds;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EdgeExample row;
    char c1 = 0, c2 = 0;
    std::istringstream ss(line);
    if (!(ss >> row.u >> c1 >> row.v >> c2 >> row.y) || c1 != ',' || c2 != ',')
      throw MalformedFile("bad edge dataset row: " + line);
    std::string trailing;
    if (ss >> trailing) throw MalformedFile("bad edge dataset row: " + line);
    if (row.y != 0 && row.y != 1)
      throw MalformedFile("edge label must be 0 or 1");
    ds.rows.push_back(row);
  }
  return ds;
}

void save_edge_dataset(const EdgeDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot open " + path + " for writing");
  out << "u,v,y\n";
  for (const EdgeExample& row : ds.rows)
    out << row.u << ',' << row.v << ',' << row.y << '\n';
  if (!out) throw IoFailure("write failed for " + path);
}

Graph synth_sbm(const std::vector<int>& block_sizes, double p_in, double p_out,
                int d, double feature_noise, Rng& rng) {
  if (block_sizes.empty()) throw BadParams("need at least one block");
  for (int s : block_sizes)
    if (s < 1) throw BadParams("block sizes must be positive");
  if (p_in < 0 || p_in > 1 || p_out < 0 || p_out > 1)
    throw BadParams("edge probabilities must be in [0, 1]");
  if (p_in <= p_out) throw BadParams("p_in must exceed p_out");
  const int c = static_cast<int>(block_sizes.size());
  if (d < c) throw BadParams("feature dimension must cover the block signature");
  if (feature_noise < 0) throw BadParams("feature noise must be non-negative");

  Graph g;
  g.c = c;
  g.d = d;
  for (int s : block_sizes) g.n += s;

  g.labels.reserve(static_cast<std::size_t>(g.n));
  for (int b = 0; b < c; ++b)
    g.labels.insert(g.labels.end(), static_cast<std::size_t>(block_sizes[static_cast<std::size_t>(b)]), b);

  std::normal_distribution<double> noise(0.0, feature_noise);
  std::vector<double> feats(static_cast<std::size_t>(g.n) * d, 0.0);
  for (int u = 0; u < g.n; ++u) {
    double* row = feats.data() + static_cast<std::size_t>(u) * d;
    row[g.labels[static_cast<std::size_t>(u)]] = 1.0;
    if (feature_noise > 0)
      for (int j = 0; j < d; ++j) row[j] += noise(rng);
  }
  g.features = Tensor::from_rows(g.n, d, std::move(feats));

  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int u = 0; u < g.n; ++u) {
    for (int v = u + 1; v < g.n; ++v) {
      const double p = g.labels[static_cast<std::size_t>(u)] ==
                               g.labels[static_cast<std::size_t>(v)]
                           ? p_in
                           : p_out;
      if (coin(rng) < p) g.edges.push_back({u, v});
    }
  }

  return g;
}

}  // namespace nargis
