#pragma once

// Mini-batch AMSGrad training with per-epoch dev BLEU and best-dev selection,
// shared by both models.

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "factedit/core.hpp"
#include "factedit/engine.hpp"
#include "factedit/metrics.hpp"
#include "factedit/model/config.hpp"
#include "factedit/model/enc_dec.hpp"
#include "factedit/model/fact_editor.hpp"
#include "factedit/model/stats.hpp"
#include "factedit/neural/amsgrad.hpp"
#include "factedit/oracle.hpp"
#include "factedit/parallel.hpp"

namespace factedit {

struct Example {
  Instance instance;
  ActionSequence gold;  // oracle actions (FactEditor supervision)
};

/// Derives oracle actions and checks that replaying them reproduces the
/// revised text. Throws on the first instance that cannot be trained on.
inline std::vector<Example> prepare_examples(const std::vector<Instance>& data) {
  std::vector<Example> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& inst = data[i];
    if (inst.draft.empty()) throw std::invalid_argument("instance " + std::to_string(i) + " has an empty draft");
    if (inst.triples.empty()) throw std::invalid_argument("instance " + std::to_string(i) + " has no triples");
    auto gold = derive_actions(inst.draft, inst.revised);
    if (!validate(gold, inst.draft, inst.revised))
      throw std::logic_error("oracle replay does not reproduce instance " + std::to_string(i));
    out.push_back({inst, std::move(gold)});
  }
  return out;
}

// Uniform access to the two models.

template <class S>
S example_loss(const FactEditor<S>& m, const Example& ex, typename FactEditor<S>::Params* g, TeacherStats* st) {
  return m.loss(ex.instance.draft, ex.instance.triples, ex.gold, g, st);
}

template <class S>
S example_loss(const EncDec<S>& m, const Example& ex, typename EncDec<S>::Params* g, TeacherStats* st) {
  return m.loss(ex.instance.draft, ex.instance.triples, ex.instance.revised, g, st);
}

template <class S>
TokenSeq predict(const FactEditor<S>& m, const Instance& inst, const DecodeLimits& limits) {
  return m.decode(inst.draft, inst.triples, limits).text;
}

template <class S>
TokenSeq predict(const EncDec<S>& m, const Instance& inst, const DecodeLimits& limits) {
  return m.decode(inst.draft, inst.triples, limits);
}

template <class Model>
std::vector<TokenSeq> predict_all(const Model& m, const std::vector<Instance>& data, const DecodeLimits& limits,
                                  unsigned threads = 1) {
  return parallel_map<TokenSeq>(data.size(), threads, [&](std::size_t i) { return predict(m, data[i], limits); });
}

/// Teacher-forced loss and argmax accuracy (actions for the editor, target
/// tokens for the encoder-decoder) without updating anything.
template <class Model>
TeacherStats teacher_forced_stats(const Model& m, const std::vector<Example>& data) {
  TeacherStats st;
  for (const auto& ex : data) example_loss(m, ex, nullptr, &st);
  return st;
}

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;      // mean per instance over the epoch
  double accuracy = 0.0;  // teacher-forced, measured while training
  std::optional<double> dev_bleu;
  std::optional<double> dev_em;
  bool best = false;
};

inline nlohmann::json to_json(const EpochRecord& r) {
  nlohmann::json j{{"event", "epoch"}, {"epoch", r.epoch}, {"loss", r.loss}, {"accuracy", r.accuracy}, {"best", r.best}};
  if (r.dev_bleu) j["dev_bleu"] = *r.dev_bleu;
  if (r.dev_em) j["dev_em"] = *r.dev_em;
  return j;
}

struct TrainResult {
  std::vector<EpochRecord> log;
  int best_epoch = 0;  // 0 when no dev evaluation ran
  double best_bleu = -1.0;
};

/// Returning true from the callback stops training after that epoch.
using EpochCallback = std::function<bool(const EpochRecord&)>;

/// Trains `model` in place. When dev evaluations ran, the parameters with
/// the best dev BLEU (earliest on ties) are restored at the end.
template <class Model>
TrainResult train(Model& model, const std::vector<Example>& train_set, const std::vector<Instance>& dev,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {}, unsigned threads = 1) {
  using Params = typename Model::Params;
  using Scalar = typename Model::Vec::Scalar;
  if (train_set.empty()) throw std::invalid_argument("train: empty dataset");
  if (cfg.batch_size < 1 || cfg.epochs < 1 || cfg.eval_every < 1) throw ConfigError("train: invalid schedule");
  if (!(cfg.optimizer.lr >= 0)) throw ConfigError("train: negative learning rate");

  nn::AmsGrad<Scalar> opt(cfg.optimizer);
  nn::Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  Params grads = model.zero_grads();
  std::optional<Params> best;
  TrainResult result;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<TokenSeq> dev_refs;
  for (const auto& inst : dev) dev_refs.push_back(inst.revised);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    TeacherStats st;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      grads.visit([](const std::string&, nn::Mat<Scalar>& m) { m.setZero(); });
      for (std::size_t k = start; k < end; ++k) example_loss(model, train_set[order[k]], &grads, &st);
      const auto scale = static_cast<Scalar>(1.0 / static_cast<double>(end - start));
      grads.visit([&](const std::string&, nn::Mat<Scalar>& m) { m *= scale; });
      opt.step(model.params, grads);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = st.loss / static_cast<double>(train_set.size());
    rec.accuracy = st.accuracy();
    if (!dev.empty() && (epoch % cfg.eval_every == 0 || epoch == cfg.epochs)) {
      const auto preds = predict_all(model, dev, cfg.limits, threads);
      rec.dev_bleu = metrics::bleu(preds, dev_refs);
      rec.dev_em = metrics::exact_match(preds, dev_refs);
      if (*rec.dev_bleu > result.best_bleu) {
        result.best_bleu = *rec.dev_bleu;
        result.best_epoch = epoch;
        best = model.params;
        rec.best = true;
      }
    }
    result.log.push_back(rec);
    if (on_epoch && on_epoch(rec)) break;
  }
  if (best) model.params = std::move(*best);
  return result;
}

}  // namespace factedit
