#include "tabens/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <thread>

#include "tabens/mlp.hpp"
#include "tabens/modelsel.hpp"

namespace tabens {

Vector compute_weights(const std::vector<double>& validation_metric_values) {
  if (validation_metric_values.empty()) throw ConfigError("compute_weights: empty value list");
  double sum = 0.0;
  for (double v : validation_metric_values) {
    if (v <= 0.0) throw ConfigError("compute_weights: metric values must be positive");
    sum += v;
  }
  Vector w(static_cast<Eigen::Index>(validation_metric_values.size()));
  for (std::size_t i = 0; i < validation_metric_values.size(); ++i) {
    w(static_cast<Eigen::Index>(i)) = validation_metric_values[i] / sum;
  }
  return w;
}

namespace {

std::vector<int> score_vote(const std::vector<std::vector<int>>& member_predictions,
                            const Vector& weights, int class_count) {
  const std::size_t n_members = member_predictions.size();
  if (n_members == 0) throw DataError("hard vote: empty prediction matrix");
  if (static_cast<std::size_t>(weights.size()) != n_members) {
    throw ConfigError("hard vote: weight/member count mismatch");
  }
  const std::size_t n_rows = member_predictions[0].size();
  for (const auto& preds : member_predictions) {
    if (preds.size() != n_rows) throw DataError("hard vote: ragged prediction matrix");
  }

  std::vector<int> out(n_rows);
  std::vector<double> score(static_cast<std::size_t>(class_count));
  for (std::size_t r = 0; r < n_rows; ++r) {
    std::fill(score.begin(), score.end(), 0.0);
    for (std::size_t m = 0; m < n_members; ++m) {
      score[static_cast<std::size_t>(member_predictions[m][r])] +=
          weights(static_cast<Eigen::Index>(m));
    }
    double best = -1.0;
    for (double s : score) best = std::max(best, s);
    // Tied classes resolve to the one predicted by the best-ranked member
    // that voted for a tied class (members are stored in rank order).
    int winner = -1;
    for (std::size_t m = 0; m < n_members && winner < 0; ++m) {
      const int c = member_predictions[m][r];
      if (score[static_cast<std::size_t>(c)] == best) winner = c;
    }
    out[r] = winner;
  }
  return out;
}

}  // namespace

std::vector<int> majority_hard_vote(const std::vector<std::vector<int>>& member_predictions,
                                    int class_count) {
  const Vector ones = Vector::Ones(static_cast<Eigen::Index>(member_predictions.size()));
  return score_vote(member_predictions, ones, class_count);
}

std::vector<int> weighted_hard_vote(const std::vector<std::vector<int>>& member_predictions,
                                    const Vector& weights, int class_count) {
  return score_vote(member_predictions, weights, class_count);
}

std::vector<int> VotingEnsemble::predict(const Matrix& features) const {
  std::vector<std::vector<int>> preds;
  preds.reserve(members.size());
  for (const Model* m : members) preds.push_back(m->predict(features));
  return weighted_hard_vote(preds, weights, members.front()->class_count());
}

// ---------------------------------------------------------------------------
// stacking
// ---------------------------------------------------------------------------

namespace {

void fill_meta_row(Matrix& meta, Eigen::Index row, int member, int class_count,
                   const Eigen::Ref<const Eigen::RowVectorXd>& proba, MetaFeatureKind kind) {
  const Eigen::Index base = static_cast<Eigen::Index>(member) * class_count;
  if (kind == MetaFeatureKind::Probabilities) {
    meta.block(row, base, 1, class_count) = proba;
  } else {
    meta.block(row, base, 1, class_count).setZero();
    meta(row, base + argmax(proba)) = 1.0;
  }
}

}  // namespace

StackingEnsemble StackingEnsemble::fit(const std::vector<LearnerSpec>& base_specs,
                                       const DataTable& training_table,
                                       const StackingConfig& config) {
  if (base_specs.empty()) throw ConfigError("fit_stacking: no base specs");
  StackingEnsemble ens;
  ens.meta_kind_ = config.meta_features;
  ens.class_count_ = training_table.n_classes();

  const int n = training_table.n_rows();
  const int k = training_table.n_classes();
  const int members = static_cast<int>(base_specs.size());
  Matrix meta = Matrix::Zero(n, static_cast<Eigen::Index>(members) * k);

  if (config.in_sample) {
    for (int m = 0; m < members; ++m) {
      const auto model = tabens::fit(base_specs[static_cast<std::size_t>(m)],
                                     training_table.features, training_table.labels, k,
                                     config.seed);
      const Matrix proba = model->predict_proba(training_table.features);
      for (int i = 0; i < n; ++i) fill_meta_row(meta, i, m, k, proba.row(i), config.meta_features);
    }
  } else {
    // Out-of-fold discipline: each row's meta-features come from base models
    // whose training fold excluded that row. produced_by tracks it.
    const auto folds = stratified_folds(training_table.labels, config.folds, config.seed);
    std::vector<int> fold_of(static_cast<std::size_t>(n), -1);
    for (std::size_t f = 0; f < folds.size(); ++f) {
      for (int r : folds[f]) fold_of[static_cast<std::size_t>(r)] = static_cast<int>(f);
    }
    std::vector<std::vector<int>> produced_by(
        static_cast<std::size_t>(members), std::vector<int>(static_cast<std::size_t>(n), -1));

    // (fold, member) fits are independent and write disjoint meta rows, so
    // they fan out across threads with a deterministic merge.
    struct Task {
      int fold;
      int member;
    };
    std::vector<Task> tasks;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      for (int m = 0; m < members; ++m) tasks.push_back({static_cast<int>(f), m});
    }
    std::vector<DataTable> fold_train(folds.size());
    for (std::size_t f = 0; f < folds.size(); ++f) {
      std::vector<int> train_rows;
      for (std::size_t g = 0; g < folds.size(); ++g) {
        if (g == f) continue;
        train_rows.insert(train_rows.end(), folds[g].begin(), folds[g].end());
      }
      std::sort(train_rows.begin(), train_rows.end());
      fold_train[f] = training_table.select_rows(train_rows);
    }

    auto run_task = [&](const Task& task) {
      const auto model =
          tabens::fit(base_specs[static_cast<std::size_t>(task.member)],
                      fold_train[static_cast<std::size_t>(task.fold)].features,
                      fold_train[static_cast<std::size_t>(task.fold)].labels, k, config.seed);
      for (int r : folds[static_cast<std::size_t>(task.fold)]) {
        const Matrix proba = model->predict_proba(training_table.features.row(r));
        fill_meta_row(meta, r, task.member, k, proba.row(0), config.meta_features);
        produced_by[static_cast<std::size_t>(task.member)][static_cast<std::size_t>(r)] =
            task.fold;
      }
    };

    const int workers = std::max(1, config.threads);
    if (workers == 1) {
      for (const auto& task : tasks) run_task(task);
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
      for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            while (true) {
              const std::size_t t = next.fetch_add(1);
              if (t >= tasks.size()) break;
              run_task(tasks[t]);
            }
          } catch (...) {
            errors[static_cast<std::size_t>(w)] = std::current_exception();
          }
        });
      }
      for (auto& t : pool) t.join();
      for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }

    for (int m = 0; m < members; ++m) {
      for (int r = 0; r < n; ++r) {
        if (produced_by[static_cast<std::size_t>(m)][static_cast<std::size_t>(r)] !=
            fold_of[static_cast<std::size_t>(r)]) {
          throw NumericError("fit_stacking: out-of-fold bookkeeping violated");
        }
      }
    }
  }

  LearnerSpec meta_spec;
  meta_spec.id = "META_MLP";
  meta_spec.family = Family::Mlp;
  std::vector<double> hidden;
  for (int h : config.meta_hidden) hidden.push_back(static_cast<double>(h));
  meta_spec.params["hidden_layer_sizes"] = hidden;
  meta_spec.params["max_iter"] = static_cast<double>(config.meta_max_iter);
  meta_spec.params["learning_rate"] = std::string("adaptive");
  meta_spec.params["learning_rate_init"] = config.meta_learning_rate_init;
  ens.meta_model_ = tabens::fit(meta_spec, meta, training_table.labels, k, config.meta_seed);

  // Bases refit on the full training table for inference time.
  ens.base_models_.resize(base_specs.size());
  {
    std::atomic<std::size_t> next{0};
    const int workers = std::min<int>(std::max(1, config.threads),
                                      static_cast<int>(base_specs.size()));
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          while (true) {
            const std::size_t s = next.fetch_add(1);
            if (s >= base_specs.size()) break;
            ens.base_models_[s] = tabens::fit(base_specs[s], training_table.features,
                                              training_table.labels, k, config.seed);
          }
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return ens;
}

int StackingEnsemble::meta_feature_width() const {
  return static_cast<int>(base_models_.size()) * class_count_;
}

Matrix StackingEnsemble::meta_features_for(const Matrix& features) const {
  Matrix meta = Matrix::Zero(features.rows(), meta_feature_width());
  for (std::size_t m = 0; m < base_models_.size(); ++m) {
    const Matrix proba = base_models_[m]->predict_proba(features);
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
      fill_meta_row(meta, i, static_cast<int>(m), class_count_, proba.row(i), meta_kind_);
    }
  }
  return meta;
}

std::vector<int> StackingEnsemble::predict(const Matrix& features) const {
  const Matrix meta = meta_features_for(features);
  if (meta.cols() != meta_model_->feature_count()) {
    throw DataError("predict_stacking: meta-feature layout mismatch");
  }
  return meta_model_->predict(meta);
}

nlohmann::json StackingEnsemble::manifest() const {
  nlohmann::json j;
  j["kind"] = "stacking";
  nlohmann::json ids = nlohmann::json::array();
  for (const auto& m : base_models_) ids.push_back(m->spec().id);
  j["members"] = std::move(ids);
  j["meta_features"] =
      meta_kind_ == MetaFeatureKind::Probabilities ? "probabilities" : "hard_labels";
  j["meta_layout"] = "member_major";
  j["meta_width"] = meta_feature_width();
  j["class_count"] = class_count_;
  return j;
}

}  // namespace tabens
