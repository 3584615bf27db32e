#pragma once

#include <span>
#include <vector>

#include "nargis/graph.hpp"
#include "nargis/tensor.hpp"

namespace nargis {

// Graph variational autoencoder used as an edge ground-truth provider: a
// shared GCN layer feeding mean and log-variance heads, inner-product
// decoder, squared-error reconstruction loss with no KL term.
struct GvaeConfig {
  double zeta = 0.5;  // probability threshold for labeling
  int epochs = 200;
  double lr = 0.01;
  int latent = 16;
  int hidden = 32;
};

struct GvaeParams {
  Tensor w_in;      // d x hidden
  Tensor w_mu;      // hidden x latent
  Tensor w_logvar;  // hidden x latent
};

// Trains on the split's train positives and negatives when splits is given;
// otherwise on every edge plus an equal count of sampled non-edges (capped
// by availability). Sampling z = mu + exp(logvar / 2) * noise during
// training only.
GvaeParams train_gvae(const Graph& g, const SplitBundle* splits,
                      const GvaeConfig& cfg, Rng& rng);

// n x latent mean embedding; inference never samples.
Tensor gvae_embed(const GvaeParams& p, const Graph& g);

// sigmoid(z_u . z_v) on the mean embedding. Symmetric in (u, v).
double gvae_pair_prob(const GvaeParams& p, const Graph& g, int u, int v);
std::vector<double> gvae_edge_prob(const GvaeParams& p, const Graph& g,
                                   std::span<const Edge> edges);

// Trains a GVAE, scores every edge plus the training negatives, and labels
// each pair by thresholding the predicted probability at zeta.
EdgeDataset generate_surrogate_edge_query_dataset(const Graph& g,
                                                  const SplitBundle* splits,
                                                  const GvaeConfig& cfg,
                                                  Rng& rng);

// Adjacency labels: train positives as 1 and the split's train negatives as
// 0 when splits is given; otherwise every edge plus up to as many sampled
// non-edges as the graph can provide.
EdgeDataset direct_edge_query_dataset(const Graph& g,
                                      const SplitBundle* splits, Rng& rng);

}  // namespace nargis
