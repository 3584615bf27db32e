#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nargis/augment.hpp"
#include "nargis/gnn.hpp"
#include "nargis/graph.hpp"

namespace nargis {

// Pairwise feature designs for the link-stealing attackers.
enum class EdgeFeatureSet { kCorrelationOnly, kPosteriorDistances, kAll };

// The eight pair distances, in order: cosine, euclidean, correlation,
// chebyshev, manhattan, squared euclidean, canberra, bray-curtis.
std::vector<double> pair_distances(std::span<const double> a,
                                   std::span<const double> b);

// Shannon entropy with natural log; zero entries contribute zero.
double entropy(std::span<const double> p);

// kCorrelationOnly -> [correlation distance]; kPosteriorDistances -> the 8
// distances; kAll -> 8 distances + the sorted entropy pair, plus the 8
// attribute distances when attribute rows are passed (kAll only). Symmetric
// under endpoint swap.
std::vector<double> posterior_pair_features(std::span<const double> chi_u,
                                            std::span<const double> chi_v,
                                            EdgeFeatureSet selector,
                                            std::span<const double> attr_u = {},
                                            std::span<const double> attr_v = {});

// Mann-Whitney AUC via average ranks; ties count one half.
double auc(std::span<const double> scores, std::span<const int> labels);

// Scores each candidate pair by minus the posterior correlation distance.
double attack0_unsupervised(const Tensor& posteriors, const EdgeDataset& eval);

struct AttackerMlpConfig {
  int attacker_hidden = 32;  // three hidden layers this wide
  int attacker_epochs = 50;
  double attacker_lr = 0.005;
  int reference_hidden1 = 64;
  int reference_hidden2 = 32;
  int reference_epochs = 50;
  double reference_lr = 0.01;
  double reference_weight_decay = 5e-4;
  int shadow_hidden = 32;
  int shadow_epochs = 100;
};

// f -> h -> h -> h -> 1 with relu hidden layers and a sigmoid output.
struct AttackerMlp {
  Tensor w1, w2, w3, w4;
};

AttackerMlp train_attacker_mlp(const Tensor& features,
                               const std::vector<int>& labels,
                               const AttackerMlpConfig& cfg, Rng& rng);

// m x 1 edge probabilities.
Tensor attacker_scores(const AttackerMlp& p, const Tensor& features);

// Trains the 64/32 relu MLP classifier on the rows with labels >= 0 and
// returns softmax posteriors for every row.
Tensor reference_posteriors(const Tensor& features,
                            const std::vector<int>& labels,
                            const AttackerMlpConfig& cfg, Rng& rng);

// What the attacker holds: target attributes, the target's train edge
// split, and a shadow graph from the same distribution.
struct AttackKnowledge {
  bool has_attributes = false;
  bool has_partial_graph = false;
  const Graph* shadow = nullptr;
};

// Settings 0-7 consume exactly the granted inputs; a missing granted input
// raises KnowledgeMismatch and an extra one is never read. Evaluation is
// always the target's positive plus negative test edges.
double run_attack(int setting, const AttackKnowledge& knowledge,
                  const Tensor& target_posteriors, const Graph& target,
                  const SplitBundle& splits, const AttackerMlpConfig& cfg,
                  Rng& rng);

using PosteriorQuery = std::function<Tensor(const Tensor&)>;

struct LinkTellerResult {
  std::vector<double> scores;  // one per candidate row
  std::vector<Edge> predicted;
  double auc_value = 0.0;
};

// Influence probing: rescales one feature row by 1 + delta, measures the L2
// posterior shift per candidate endpoint, symmetrizes by max, and predicts
// the top ceil(belief * pairs) scores. Belief defaults to the candidate
// positive rate.
LinkTellerResult linkteller(const PosteriorQuery& query, const Tensor& features,
                            const EdgeDataset& candidates, double delta = 1e-3,
                            std::optional<double> density_belief = std::nullopt);

// Deterministic posterior queries for trained models; the feature matrix
// passed to the query replaces the stored one.
PosteriorQuery make_gnn_query(const GnnParams& params, const Graph& g);
PosteriorQuery make_augmented_query(const GnnParams& params,
                                    const AugmentedGraph& aug);

struct AttackRecord {
  int setting = 0;
  std::string feature_set;
  double auc_value = 0.0;
  bool knows_attributes = false;
  bool knows_partial_graph = false;
  bool knows_shadow = false;
  std::uint64_t seed = 0;
};

// CSV with header "attack,feature_set,auc,F,A,Dprime,seed".
void save_attack_records(const std::vector<AttackRecord>& records,
                         const std::string& path);

}  // namespace nargis
