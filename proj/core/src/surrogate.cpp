#include "nargis/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>

#include "nargis/gnn.hpp"

namespace nargis {

namespace {

void check_gvae_config(const GvaeConfig& cfg) {
  if (!(cfg.zeta > 0.0 && cfg.zeta < 1.0)) throw BadParams("zeta must lie in (0, 1)");
  if (cfg.epochs < 0) throw BadParams("epochs must be nonnegative");
  if (!(cfg.lr > 0.0)) throw BadParams("lr must be positive");
  if (cfg.latent < 1 || cfg.hidden < 1) throw BadParams("gvae sizes must be positive");
}

struct TrainingPairs {
  std::vector<Edge> pos, neg;
};

// The train split when one is given; otherwise all edges plus an
// availability-capped equal count of sampled non-edges.
TrainingPairs gather_training_pairs(const Graph& g, const SplitBundle* splits,
                                    Rng& rng) {
  TrainingPairs out;
  if (splits != nullptr) {
    out.pos = splits->train_pos;
    out.neg = splits->train_neg;
  } else {
    out.pos = g.edges;
    const std::size_t available = g.pair_count() - g.edges.size();
    const std::size_t want = std::min(g.edges.size(), available);
    if (want == 0 && !g.edges.empty()) throw NotEnoughNegatives("graph has no non-edges to sample");
    out.neg = sample_negative_edges(g, want, g.edges, rng);
  }
  if (out.pos.empty()) throw NoPositiveEdges("gvae training needs positive edges");
  return out;
}

// relu(A_hat X W_in), shared by both heads.
Tensor encoder_hidden(Tape& tape, const GvaeParams& p, const Tensor& a_hat,
                      const Tensor& x) {
  return ops::relu(tape, ops::matmul(tape, a_hat, ops::matmul(tape, x, p.w_in)));
}

Tensor head(Tape& tape, const Tensor& a_hat, const Tensor& h, const Tensor& w) {
  return ops::matmul(tape, a_hat, ops::matmul(tape, h, w));
}

// m x 1 sigmoid(z_u . z_v) for the listed pairs.
Tensor pair_scores(Tape& tape, const Tensor& z, const std::vector<int>& us,
                   const std::vector<int>& vs) {
  Tensor zu = ops::gather_rows(tape, z, us);
  Tensor zv = ops::gather_rows(tape, z, vs);
  Tensor dots = ops::matmul(tape, ops::mul(tape, zu, zv),
                            Tensor::full(z.cols(), 1, 1.0));
  return ops::sigmoid(tape, dots);
}

}  // namespace

GvaeParams train_gvae(const Graph& g, const SplitBundle* splits,
                      const GvaeConfig& cfg, Rng& rng) {
  check_gvae_config(cfg);
  const TrainingPairs pairs = gather_training_pairs(g, splits, rng);

  GvaeParams p;
  p.w_in = Tensor::glorot_uniform(g.d, cfg.hidden, rng);
  p.w_mu = Tensor::glorot_uniform(cfg.hidden, cfg.latent, rng);
  p.w_logvar = Tensor::glorot_uniform(cfg.hidden, cfg.latent, rng);
  p.w_in.set_requires_grad(true);
  p.w_mu.set_requires_grad(true);
  p.w_logvar.set_requires_grad(true);

  std::vector<int> us, vs;
  std::vector<double> targets;
  for (const Edge& e : pairs.pos) {
    us.push_back(e.u);
    vs.push_back(e.v);
    targets.push_back(1.0);
  }
  for (const Edge& e : pairs.neg) {
    us.push_back(e.u);
    vs.push_back(e.v);
    targets.push_back(0.0);
  }
  const int pair_count = static_cast<int>(targets.size());
  const Tensor y = Tensor::from_rows(pair_count, 1, std::move(targets));

  const Tensor a_hat = normalize_adjacency(g);
  AdamState state(AdamConfig{.lr = cfg.lr, .weight_decay = 0.0});
  const std::vector<Tensor*> learnable = {&p.w_in, &p.w_mu, &p.w_logvar};
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Tape tape;
    Tensor h = encoder_hidden(tape, p, a_hat, g.features);
    Tensor mu = head(tape, a_hat, h, p.w_mu);
    Tensor logvar = head(tape, a_hat, h, p.w_logvar);

    Tensor noise = Tensor::zeros(g.n, cfg.latent);
    for (double& v : noise.mutable_values()) v = gauss(rng);
    Tensor z = ops::add(tape, mu,
                        ops::mul(tape, ops::exp(tape, ops::scale(tape, logvar, 0.5)),
                                 noise));

    Tensor diff = ops::sub(tape, pair_scores(tape, z, us, vs), y);
    Tensor loss = ops::mean(tape, ops::mul(tape, diff, diff));
    GradMap grads = tape.backward(loss);
    adam_step(learnable, grads, state);
  }

  p.w_in.set_requires_grad(false);
  p.w_mu.set_requires_grad(false);
  p.w_logvar.set_requires_grad(false);
  return p;
}

Tensor gvae_embed(const GvaeParams& p, const Graph& g) {
  Tape tape;
  const Tensor a_hat = normalize_adjacency(g);
  Tensor h = encoder_hidden(tape, p, a_hat, g.features);
  return head(tape, a_hat, h, p.w_mu).detached();
}

namespace {

double prob_from_embedding(const Tensor& z, int u, int v) {
  double dot = 0.0;
  for (int j = 0; j < z.cols(); ++j) dot += z.at(u, j) * z.at(v, j);
  return 1.0 / (1.0 + std::exp(-dot));
}

}  // namespace

double gvae_pair_prob(const GvaeParams& p, const Graph& g, int u, int v) {
  if (u < 0 || u >= g.n || v < 0 || v >= g.n) throw BadNodeId("pair endpoint out of range");
  return prob_from_embedding(gvae_embed(p, g), u, v);
}

std::vector<double> gvae_edge_prob(const GvaeParams& p, const Graph& g,
                                   std::span<const Edge> edges) {
  const Tensor z = gvae_embed(p, g);
  std::vector<double> out;
  out.reserve(edges.size());
  for (const Edge& e : edges) {
    if (e.u < 0 || e.u >= g.n || e.v < 0 || e.v >= g.n) throw BadNodeId("edge endpoint out of range");
    out.push_back(prob_from_embedding(z, e.u, e.v));
  }
  return out;
}

EdgeDataset generate_surrogate_edge_query_dataset(const Graph& g,
                                                  const SplitBundle* splits,
                                                  const GvaeConfig& cfg,
                                                  Rng& rng) {
  check_gvae_config(cfg);
  // Re-derive the training negatives with a forked stream so the scored set
  // matches what the trainer saw.
  Rng pair_rng = rng;
  const TrainingPairs pairs = gather_training_pairs(g, splits, pair_rng);
  const GvaeParams p = train_gvae(g, splits, cfg, rng);

  std::vector<Edge> big = g.edges;
  big.insert(big.end(), pairs.neg.begin(), pairs.neg.end());
  const std::vector<double> probs = gvae_edge_prob(p, g, big);

  EdgeDataset ds;
  ds.rows.reserve(big.size());
  for (std::size_t i = 0; i < big.size(); ++i) {
    ds.rows.push_back({big[i].u, big[i].v, probs[i] > cfg.zeta ? 1 : 0});
  }
  return ds;
}

EdgeDataset direct_edge_query_dataset(const Graph& g,
                                      const SplitBundle* splits, Rng& rng) {
  EdgeDataset ds;
  if (splits != nullptr) {
    for (const Edge& e : splits->train_pos) ds.rows.push_back({e.u, e.v, 1});
    for (const Edge& e : splits->train_neg) ds.rows.push_back({e.u, e.v, 0});
    if (ds.rows.empty()) throw NoPositiveEdges("split has no train edges");
    return ds;
  }
  if (g.edges.empty()) throw NoPositiveEdges("graph has no edges");
  const std::size_t available = g.pair_count() - g.edges.size();
  const std::size_t want = std::min(g.edges.size(), available);
  if (want == 0) throw NotEnoughNegatives("graph has no non-edges to sample");
  const std::vector<Edge> negs = sample_negative_edges(g, want, g.edges, rng);
  for (const Edge& e : g.edges) ds.rows.push_back({e.u, e.v, 1});
  for (const Edge& e : negs) ds.rows.push_back({e.u, e.v, 0});
  return ds;
}

}  // namespace nargis
