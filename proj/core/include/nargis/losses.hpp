#pragma once

#include <span>
#include <vector>

#include "nargis/graph.hpp"
#include "nargis/tensor.hpp"

namespace nargis {

// The defender-side edge attacker: a learnable c x h matrix M scoring a node
// pair by sigmoid((chi_u M) . (chi_v M)).
struct SurrogateAttackerParams {
  Tensor m;
};

SurrogateAttackerParams init_surrogate_attacker(int c, int hidden, Rng& rng);

// Batched scores: rows of u_rows/v_rows are posterior pairs; returns m x 1
// sigmoid probabilities.
Tensor surrogate_attacker_scores(Tape& tape, const SurrogateAttackerParams& p,
                                 const Tensor& u_rows, const Tensor& v_rows);

// Scalar convenience for a single posterior pair.
double surrogate_attacker_score(const SurrogateAttackerParams& p,
                                std::span<const double> chi_u,
                                std::span<const double> chi_v);

// Mean negative log posterior of the true class over the node set.
Tensor loss_class(Tape& tape, const Tensor& post,
                  const std::vector<int>& labels,
                  const std::vector<int>& node_set);

// Mean binary cross-entropy of the surrogate score against dataset labels.
Tensor loss_attack(Tape& tape, const EdgeDataset& ds, const Tensor& post,
                   const SurrogateAttackerParams& p);

// 0.5 KL(p||m) + 0.5 KL(q||m) with m the midpoint, natural log. Zero entries
// contribute zero exactly.
double jensen_shannon(std::span<const double> p, std::span<const double> q);

// Mean over positive rows of minus the endpoint Jensen-Shannon divergence.
Tensor loss_dist(Tape& tape, const EdgeDataset& ds, const Tensor& post);

// Mean over positive rows of (pearson correlation - 1) of the endpoint
// posteriors; a constant posterior row correlates as zero.
Tensor loss_corr(Tape& tape, const EdgeDataset& ds, const Tensor& post);

// Mean over all rows of the summed endpoint true-class negative logs.
Tensor loss_align(Tape& tape, const EdgeDataset& ds, const Tensor& post,
                  const std::vector<int>& labels);

// Mean of -log(1 - p_true) where p_true is the surrogate's probability mass
// on the correct edge label; minimizing pushes the attacker to misclassify.
Tensor loss_miss(Tape& tape, const EdgeDataset& ds, const Tensor& post,
                 const SurrogateAttackerParams& p);

struct DefenseLossWeights {
  double miss = 4.0;
  double align = 0.8;
  double dist = 2.0;
  double corr = 0.6;
};

// weights.miss * loss_miss + weights.align * loss_align
// + weights.dist * loss_dist + weights.corr * loss_corr.
Tensor loss_defense(Tape& tape, const EdgeDataset& ds, const Tensor& post,
                    const std::vector<int>& labels,
                    const SurrogateAttackerParams& p,
                    const DefenseLossWeights& weights);

}  // namespace nargis
