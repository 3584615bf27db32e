#include "nargis/losses.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace nargis {

namespace {

constexpr double kClamp = 1e-12;

// max(x, kClamp) built as x + relu(kClamp - x); exact for x >= kClamp.
Tensor clamp_floor(Tape& tape, const Tensor& x) {
  const Tensor floor = Tensor::full(x.rows(), x.cols(), kClamp);
  return ops::add(tape, x, ops::relu(tape, ops::sub(tape, floor, x)));
}

// ln(max(x, kClamp)) with no additive shift, so in-range values log exactly.
Tensor clamped_log(Tape& tape, const Tensor& x) {
  return ops::log(tape, clamp_floor(tape, x), 0.0);
}

// n x 1 row sums.
Tensor row_sum(Tape& tape, const Tensor& x) {
  return ops::matmul(tape, x, Tensor::full(x.cols(), 1, 1.0));
}

void check_ids(const EdgeDataset& ds, const Tensor& post) {
  for (const EdgeExample& row : ds.rows)
    if (row.u < 0 || row.u >= post.rows() || row.v < 0 || row.v >= post.rows())
      throw BadNodeId("dataset row references a missing posterior row");
}

struct GatheredPairs {
  Tensor u, v;           // m x c posterior rows
  std::vector<double> y; // labels as doubles
};

GatheredPairs gather_pairs(Tape& tape, const EdgeDataset& ds,
                           const Tensor& post, bool positives_only) {
  check_ids(ds, post);
  std::vector<int> u_ids, v_ids;
  std::vector<double> y;
  for (const EdgeExample& row : ds.rows) {
    if (positives_only && row.y != 1) continue;
    u_ids.push_back(row.u);
    v_ids.push_back(row.v);
    y.push_back(static_cast<double>(row.y));
  }
  if (u_ids.empty()) {
    if (positives_only) throw NoPositiveEdges("dataset has no y=1 rows");
    throw EmptyDataset("dataset has no rows");
  }
  GatheredPairs out;
  out.u = ops::gather_rows(tape, post, u_ids);
  out.v = ops::gather_rows(tape, post, v_ids);
  out.y = std::move(y);
  return out;
}

// One-hot matrix of the true labels for the listed nodes.
Tensor one_hot(const std::vector<int>& labels, const std::vector<int>& nodes,
               int classes) {
  const int m = static_cast<int>(nodes.size());
  Tensor hot = Tensor::zeros(m, classes);
  std::vector<double>& h = hot.mutable_values();
  for (int i = 0; i < m; ++i) {
    const int u = nodes[static_cast<std::size_t>(i)];
    if (u < 0 || u >= static_cast<int>(labels.size()))
      throw BadNodeId("node " + std::to_string(u) + " has no label entry");
    const int y = labels[static_cast<std::size_t>(u)];
    if (y < 0 || y >= classes)
      throw UnlabeledEndpoint("node " + std::to_string(u) + " is unlabeled");
    h[static_cast<std::size_t>(i) * classes + y] = 1.0;
  }
  return hot;
}

// m x 1 true-class probabilities for the given nodes.
Tensor true_class_prob(Tape& tape, const Tensor& post,
                       const std::vector<int>& labels,
                       const std::vector<int>& nodes) {
  const Tensor rows = ops::gather_rows(tape, post, nodes);
  const Tensor hot = one_hot(labels, nodes, post.cols());
  return row_sum(tape, ops::mul(tape, rows, hot));
}

// m x 1 per-row Jensen-Shannon divergences between paired rows.
Tensor jensen_shannon_rows(Tape& tape, const Tensor& u, const Tensor& v) {
  const Tensor mid = ops::scale(tape, ops::add(tape, u, v), 0.5);
  const Tensor log_mid = clamped_log(tape, mid);
  const Tensor kl_u =
      row_sum(tape, ops::mul(tape, u, ops::sub(tape, clamped_log(tape, u), log_mid)));
  const Tensor kl_v =
      row_sum(tape, ops::mul(tape, v, ops::sub(tape, clamped_log(tape, v), log_mid)));
  return ops::scale(tape, ops::add(tape, kl_u, kl_v), 0.5);
}

}  // namespace

SurrogateAttackerParams init_surrogate_attacker(int c, int hidden, Rng& rng) {
  if (c < 1 || hidden < 1) throw BadParams("attacker dimensions must be positive");
  SurrogateAttackerParams p;
  p.m = Tensor::glorot_uniform(c, hidden, rng);
  return p;
}

Tensor surrogate_attacker_scores(Tape& tape, const SurrogateAttackerParams& p,
                                 const Tensor& u_rows, const Tensor& v_rows) {
  if (u_rows.rows() != v_rows.rows() || u_rows.cols() != v_rows.cols())
    throw ShapeMismatch("posterior row blocks must match");
  if (u_rows.cols() != p.m.rows())
    throw ShapeMismatch("posterior width must match attacker rows");
  const Tensor um = ops::matmul(tape, u_rows, p.m);
  const Tensor vm = ops::matmul(tape, v_rows, p.m);
  return ops::sigmoid(tape, row_sum(tape, ops::mul(tape, um, vm)));
}

double surrogate_attacker_score(const SurrogateAttackerParams& p,
                                std::span<const double> chi_u,
                                std::span<const double> chi_v) {
  if (chi_u.size() != chi_v.size())
    throw ShapeMismatch("posterior vectors must have equal length");
  Tape tape;
  const Tensor u = Tensor::row_vector({chi_u.begin(), chi_u.end()});
  const Tensor v = Tensor::row_vector({chi_v.begin(), chi_v.end()});
  return surrogate_attacker_scores(tape, p, u, v).item();
}

Tensor loss_class(Tape& tape, const Tensor& post,
                  const std::vector<int>& labels,
                  const std::vector<int>& node_set) {
  if (node_set.empty()) throw EmptyMask("loss over an empty node set");
  for (int u : node_set)
    if (u < 0 || u >= post.rows())
      throw BadNodeId("node " + std::to_string(u) + " has no posterior row");
  const Tensor p = true_class_prob(tape, post, labels, node_set);
  return ops::scale(tape, ops::mean(tape, clamped_log(tape, p)), -1.0);
}

Tensor loss_attack(Tape& tape, const EdgeDataset& ds, const Tensor& post,
                   const SurrogateAttackerParams& p) {
  const GatheredPairs pairs = gather_pairs(tape, ds, post, false);
  const int m = pairs.u.rows();
  const Tensor g = surrogate_attacker_scores(tape, p, pairs.u, pairs.v);
  const Tensor y = Tensor::from_rows(m, 1, pairs.y);
  std::vector<double> inv(pairs.y.size());
  for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 - pairs.y[i];
  const Tensor y_inv = Tensor::from_rows(m, 1, std::move(inv));
  const Tensor ones = Tensor::full(m, 1, 1.0);
  const Tensor pos = ops::mul(tape, y, clamped_log(tape, g));
  const Tensor neg =
      ops::mul(tape, y_inv, clamped_log(tape, ops::sub(tape, ones, g)));
  return ops::scale(tape, ops::mean(tape, ops::add(tape, pos, neg)), -1.0);
}

double jensen_shannon(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty())
    throw NotADistribution("distributions must share a positive length");
  double sum_p = 0.0, sum_q = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0)
      throw NotADistribution("negative probability mass");
    sum_p += p[i];
    sum_q += q[i];
  }
  if (std::abs(sum_p - 1.0) > 1e-9 || std::abs(sum_q - 1.0) > 1e-9)
    throw NotADistribution("distribution does not sum to 1");
  double js = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) js += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) js += 0.5 * q[i] * std::log(q[i] / m);
  }
  return js;
}

Tensor loss_dist(Tape& tape, const EdgeDataset& ds, const Tensor& post) {
  const GatheredPairs pairs = gather_pairs(tape, ds, post, true);
  const Tensor js = jensen_shannon_rows(tape, pairs.u, pairs.v);
  return ops::scale(tape, ops::mean(tape, js), -1.0);
}

Tensor loss_corr(Tape& tape, const EdgeDataset& ds, const Tensor& post) {
  const GatheredPairs pairs = gather_pairs(tape, ds, post, true);
  const int c = post.cols();
  const Tensor mean_weights = Tensor::full(c, 1, 1.0 / c);
  const Tensor spread = Tensor::full(1, c, 1.0);
  auto centered = [&](const Tensor& rows) {
    const Tensor means = ops::matmul(tape, rows, mean_weights);
    return ops::sub(tape, rows, ops::matmul(tape, means, spread));
  };
  const Tensor cu = centered(pairs.u);
  const Tensor cv = centered(pairs.v);
  const Tensor dots = row_sum(tape, ops::mul(tape, cu, cv));
  const Tensor nu = ops::sqrt(tape, row_sum(tape, ops::mul(tape, cu, cu)));
  const Tensor nv = ops::sqrt(tape, row_sum(tape, ops::mul(tape, cv, cv)));
  const Tensor corr =
      ops::div(tape, dots, clamp_floor(tape, ops::mul(tape, nu, nv)));
  return ops::sub(tape, ops::mean(tape, corr), Tensor::scalar(1.0));
}

Tensor loss_align(Tape& tape, const EdgeDataset& ds, const Tensor& post,
                  const std::vector<int>& labels) {
  if (ds.rows.empty()) throw EmptyDataset("dataset has no rows");
  check_ids(ds, post);
  std::vector<int> u_ids, v_ids;
  for (const EdgeExample& row : ds.rows) {
    u_ids.push_back(row.u);
    v_ids.push_back(row.v);
  }
  const Tensor lp_u =
      clamped_log(tape, true_class_prob(tape, post, labels, u_ids));
  const Tensor lp_v =
      clamped_log(tape, true_class_prob(tape, post, labels, v_ids));
  return ops::scale(tape, ops::mean(tape, ops::add(tape, lp_u, lp_v)), -1.0);
}

Tensor loss_miss(Tape& tape, const EdgeDataset& ds, const Tensor& post,
                 const SurrogateAttackerParams& p) {
  const GatheredPairs pairs = gather_pairs(tape, ds, post, false);
  const int m = pairs.u.rows();
  const Tensor g = surrogate_attacker_scores(tape, p, pairs.u, pairs.v);
  const Tensor y = Tensor::from_rows(m, 1, pairs.y);
  std::vector<double> inv(pairs.y.size());
  for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 - pairs.y[i];
  const Tensor y_inv = Tensor::from_rows(m, 1, std::move(inv));
  const Tensor ones = Tensor::full(m, 1, 1.0);
  const Tensor p_true =
      ops::add(tape, ops::mul(tape, y, g),
               ops::mul(tape, y_inv, ops::sub(tape, ones, g)));
  const Tensor miss = clamped_log(tape, ops::sub(tape, ones, p_true));
  return ops::scale(tape, ops::mean(tape, miss), -1.0);
}

Tensor loss_defense(Tape& tape, const EdgeDataset& ds, const Tensor& post,
                    const std::vector<int>& labels,
                    const SurrogateAttackerParams& p,
                    const DefenseLossWeights& weights) {
  for (double w : {weights.miss, weights.align, weights.dist, weights.corr})
    if (!(w >= 0.0) || !std::isfinite(w))
      throw BadParams("defense loss weights must be finite and non-negative");
  const Tensor miss = ops::scale(tape, loss_miss(tape, ds, post, p), weights.miss);
  const Tensor align =
      ops::scale(tape, loss_align(tape, ds, post, labels), weights.align);
  const Tensor dist = ops::scale(tape, loss_dist(tape, ds, post), weights.dist);
  const Tensor corr = ops::scale(tape, loss_corr(tape, ds, post), weights.corr);
  return ops::add(tape, ops::add(tape, miss, align), ops::add(tape, dist, corr));
}

}  // namespace nargis
