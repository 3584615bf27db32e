#pragma once

#include <functional>
#include <vector>

#include "nargis/augment.hpp"
#include "nargis/gnn.hpp"
#include "nargis/losses.hpp"
#include "nargis/surrogate.hpp"

namespace nargis {

// Tri-level feature learning: an outer loop that alternates classifier
// training (stage 1), a one-time surrogate attacker fit (stage 2, first
// round only), and defense updates of the injected features (stage 3).
struct TriOptConfig {
  int eta_outer = 10;
  int eta_class = 200;
  int eta_def = 50;
  int surrogate_batch = 512;  // one pass over the dataset in batches
  double class_lr = 0.01;
  double class_weight_decay = 5e-4;
  double surrogate_lr = 0.001;
  double defense_lr = 0.001;
  double defense_weight_decay = 5e-4;
  int attacker_hidden = 10;
  GnnKind kind = GnnKind::kGcn;
  int hidden = 16;
  double dropout = 0.5;
  // Resume keeps classifier params and optimizer moments across outer
  // rounds; the fresh variant reinitializes both every round.
  bool fresh_classifier_each_round = false;
};

enum class TriOptStage { kClassifier = 1, kSurrogate = 2, kDefense = 3 };

struct LossPoint {
  int outer = 0;
  int stage = 0;
  int inner = 0;
  double loss = 0.0;
};

// Snapshot passed to the observer after each inner step; the pointers are
// valid only during the call.
struct TriOptEvent {
  int outer = 0;
  TriOptStage stage = TriOptStage::kClassifier;
  int inner = 0;
  double loss = 0.0;
  const GnnParams* classifier = nullptr;
  const SurrogateAttackerParams* attacker = nullptr;
  const Tensor* theta = nullptr;
};

using TriOptObserver = std::function<void(const TriOptEvent&)>;

struct TriOptResult {
  AugmentedGraph learned;
  GnnParams classifier;
  SurrogateAttackerParams attacker;
  std::vector<LossPoint> curve;
};

// The input augmentation is copied; its features are never touched.
TriOptResult run_tri_optimization(const AugmentedGraph& aug,
                                  const EdgeDataset& dq,
                                  const TriOptConfig& cfg,
                                  const DefenseLossWeights& weights, Rng& rng,
                                  const TriOptObserver& observer = {});

// One "outer_t,stage,inner_step,loss" row per curve point.
void save_loss_curve(const std::vector<LossPoint>& curve,
                     const std::string& path);

// Fresh classifier trained on the composed augmented graph with the
// injected features held fixed; returns the full posterior matrix over
// original and injected nodes.
Tensor learn_perturbed_graph_embedding(const AugmentedGraph& aug, GnnKind kind,
                                       const TrainConfig& cfg,
                                       const std::vector<int>& train_nodes,
                                       const std::vector<int>& val_nodes,
                                       Rng& rng);

struct NargisConfig {
  int n_new = 10;
  TriOptConfig tri;
  TrainConfig retrain;
  DefenseLossWeights weights;
  bool use_gvae_provider = false;
  GvaeConfig gvae;
};

struct NargisResult {
  Tensor posteriors;       // n x c, original nodes only
  Tensor full_posteriors;  // n_aug x c
  AugmentedGraph learned;
  std::vector<LossPoint> curve;
};

// Injects nodes, learns their features against a surrogate attacker, then
// retrains from scratch on the learned graph. The input graph is left
// unmodified.
NargisResult nargis(const Graph& g, const SplitBundle& splits,
                    const NargisConfig& cfg, Rng& rng,
                    const TriOptObserver& observer = {});

}  // namespace nargis
