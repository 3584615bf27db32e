#include "nargis/defense.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <utility>

namespace nargis {

namespace {

void check_tri_config(const TriOptConfig& cfg) {
  if (cfg.eta_outer < 1 || cfg.eta_class < 1 || cfg.eta_def < 1) {
    throw BadParams("stage epoch counts must be positive");
  }
  if (cfg.surrogate_batch < 1) throw BadParams("surrogate batch must be positive");
  if (!(cfg.class_lr > 0.0) || !(cfg.surrogate_lr > 0.0) || !(cfg.defense_lr > 0.0)) {
    throw BadParams("learning rates must be positive");
  }
  if (cfg.class_weight_decay < 0.0 || cfg.defense_weight_decay < 0.0) {
    throw BadParams("weight decay must be nonnegative");
  }
  if (cfg.attacker_hidden < 1 || cfg.hidden < 1) {
    throw BadParams("hidden sizes must be positive");
  }
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) {
    throw BadParams("dropout must lie in [0, 1)");
  }
}

struct StepLog {
  std::vector<LossPoint>* curve;
  const TriOptObserver* observer;
  const GnnParams* classifier;
  const SurrogateAttackerParams* attacker;
  const Tensor* theta;

  void record(int outer, TriOptStage stage, int inner, double loss) const {
    curve->push_back({outer, static_cast<int>(stage), inner, loss});
    if (*observer) {
      (*observer)({outer, stage, inner, loss, classifier, attacker, theta});
    }
  }
};

}  // namespace

TriOptResult run_tri_optimization(const AugmentedGraph& aug,
                                  const EdgeDataset& dq,
                                  const TriOptConfig& cfg,
                                  const DefenseLossWeights& weights, Rng& rng,
                                  const TriOptObserver& observer) {
  check_tri_config(cfg);
  if (dq.rows.empty()) throw EmptyDataset("tri-optimization needs a query dataset");
  if (std::none_of(dq.rows.begin(), dq.rows.end(),
                   [](const EdgeExample& r) { return r.y == 1; })) {
    throw NoPositiveEdges("query dataset has no positive rows");
  }

  TriOptResult out;
  out.learned = aug;
  AugmentedGraph& work = out.learned;
  work.theta = aug.theta.clone();
  Tensor& theta = work.theta;
  theta.set_requires_grad(true);

  const Graph& base = work.base;
  std::vector<int> node_set;
  for (int i = 0; i < base.n; ++i) {
    if (base.labels[static_cast<std::size_t>(i)] >= 0) node_set.push_back(i);
  }
  if (node_set.empty()) throw EmptyMask("no labeled original nodes");

  std::vector<int> labels_aug = base.labels;
  labels_aug.insert(labels_aug.end(), work.new_labels.begin(),
                    work.new_labels.end());

  const std::vector<Edge> edges = work.all_edges();
  const Tensor prop = propagation_matrix(cfg.kind, work.total_nodes(), edges);

  out.classifier =
      init_gnn(cfg.kind, base.d, cfg.hidden, base.c, cfg.dropout, rng);
  out.attacker = init_surrogate_attacker(base.c, cfg.attacker_hidden, rng);
  GnnParams& classifier = out.classifier;
  SurrogateAttackerParams& attacker = out.attacker;

  AdamState class_state(
      AdamConfig{.lr = cfg.class_lr, .weight_decay = cfg.class_weight_decay});
  AdamState surrogate_state(
      AdamConfig{.lr = cfg.surrogate_lr, .weight_decay = 0.0});
  AdamState defense_state(AdamConfig{.lr = cfg.defense_lr,
                                     .weight_decay = cfg.defense_weight_decay});
  const std::vector<Tensor*> theta_only = {&theta};

  const StepLog log{&out.curve, &observer, &classifier, &attacker, &theta};

  for (int t = 0; t < cfg.eta_outer; ++t) {
    if (cfg.fresh_classifier_each_round && t > 0) {
      classifier =
          init_gnn(cfg.kind, base.d, cfg.hidden, base.c, cfg.dropout, rng);
      class_state = AdamState(AdamConfig{.lr = cfg.class_lr,
                                         .weight_decay = cfg.class_weight_decay});
    }

    // Stage 1: classifier and injected features against the class loss,
    // dropout active.
    classifier.set_requires_grad(true);
    theta.set_requires_grad(true);
    attacker.m.set_requires_grad(false);
    std::vector<Tensor*> class_params = classifier.weights();
    class_params.push_back(&theta);
    for (int step = 0; step < cfg.eta_class; ++step) {
      Tape tape;
      Tensor x = materialize(tape, work);
      Tensor post = forward_gnn(tape, classifier, prop, x, true, rng);
      Tensor loss = loss_class(tape, post, labels_aug, node_set);
      const double value = loss.item();
      GradMap grads = tape.backward(loss);
      adam_step(class_params, grads, class_state);
      log.record(t, TriOptStage::kClassifier, step, value);
    }

    // Stage 2, first round only: fit the surrogate attacker on frozen
    // posteriors, one shuffled pass in contiguous batches.
    if (t == 0) {
      classifier.set_requires_grad(false);
      theta.set_requires_grad(false);
      attacker.m.set_requires_grad(true);
      Tensor chi;
      {
        Tape tape;
        Tensor x = materialize(tape, work);
        chi = forward_gnn(tape, classifier, prop, x, false, rng).detached();
      }
      std::vector<int> order(dq.rows.size());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      const int m = static_cast<int>(order.size());
      const std::vector<Tensor*> attacker_params = {&attacker.m};
      int batch_index = 0;
      for (int first = 0; first < m; first += cfg.surrogate_batch) {
        const int last = std::min(first + cfg.surrogate_batch, m);
        EdgeDataset batch;
        batch.rows.reserve(static_cast<std::size_t>(last - first));
        for (int i = first; i < last; ++i) {
          batch.rows.push_back(dq.rows[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
        }
        Tape tape;
        Tensor loss = loss_attack(tape, batch, chi, attacker);
        const double value = loss.item();
        GradMap grads = tape.backward(loss);
        adam_step(attacker_params, grads, surrogate_state);
        log.record(t, TriOptStage::kSurrogate, batch_index, value);
        ++batch_index;
      }
    }

    // Stage 3: injected features only, against the combined defense loss,
    // deterministic forward.
    classifier.set_requires_grad(false);
    theta.set_requires_grad(true);
    attacker.m.set_requires_grad(false);
    for (int step = 0; step < cfg.eta_def; ++step) {
      Tape tape;
      Tensor x = materialize(tape, work);
      Tensor post = forward_gnn(tape, classifier, prop, x, false, rng);
      Tensor loss =
          loss_defense(tape, dq, post, labels_aug, attacker, weights);
      const double value = loss.item();
      GradMap grads = tape.backward(loss);
      adam_step(theta_only, grads, defense_state);
      log.record(t, TriOptStage::kDefense, step, value);
    }
  }

  classifier.set_requires_grad(false);
  theta.set_requires_grad(false);
  attacker.m.set_requires_grad(false);
  return out;
}

void save_loss_curve(const std::vector<LossPoint>& curve,
                     const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw IoFailure("cannot open " + path);
  bool ok = std::fprintf(f, "outer_t,stage,inner_step,loss\n") >= 0;
  for (const LossPoint& p : curve) {
    ok = ok && std::fprintf(f, "%d,%d,%d,%.17g\n", p.outer, p.stage, p.inner,
                            p.loss) >= 0;
  }
  ok = std::fclose(f) == 0 && ok;
  if (!ok) throw IoFailure("failed writing " + path);
}

Tensor learn_perturbed_graph_embedding(const AugmentedGraph& aug, GnnKind kind,
                                       const TrainConfig& cfg,
                                       const std::vector<int>& train_nodes,
                                       const std::vector<int>& val_nodes,
                                       Rng& rng) {
  const Graph composed = compose_graph(aug);
  const TrainedGnn trained =
      train_node_classifier(kind, composed, train_nodes, val_nodes, cfg, rng);
  return posteriors(trained.params, composed);
}

NargisResult nargis(const Graph& g, const SplitBundle& splits,
                    const NargisConfig& cfg, Rng& rng,
                    const TriOptObserver& observer) {
  const AugmentedGraph aug = get_augmented_graph(g, cfg.n_new, rng);
  const EdgeDataset dq =
      cfg.use_gvae_provider
          ? generate_surrogate_edge_query_dataset(g, &splits, cfg.gvae, rng)
          : direct_edge_query_dataset(g, &splits, rng);
  TriOptResult tri =
      run_tri_optimization(aug, dq, cfg.tri, cfg.weights, rng, observer);

  NargisResult out;
  out.full_posteriors = learn_perturbed_graph_embedding(
      tri.learned, cfg.tri.kind, cfg.retrain, splits.train_nodes,
      splits.val_nodes, rng);
  Tape tape;
  out.posteriors = ops::row_slice(tape, out.full_posteriors, 0, g.n).detached();
  out.learned = std::move(tri.learned);
  out.curve = std::move(tri.curve);
  return out;
}

}  // namespace nargis
