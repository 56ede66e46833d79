#pragma once

// Wall-clock greedy-decoding throughput in draft words per second, and the
// synthetic long-draft instances used to measure how it scales with N.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "factedit/core.hpp"
#include "factedit/model/config.hpp"
#include "factedit/model/enc_dec.hpp"
#include "factedit/model/fact_editor.hpp"
#include "factedit/model/trainer.hpp"
#include "factedit/model/vocab.hpp"
#include "factedit/neural/tensor.hpp"
#include "factedit/parallel.hpp"

namespace factedit {

struct ThroughputResult {
  std::size_t words = 0;
  double seconds = 0.0;
  double words_per_second() const { return seconds > 0 ? static_cast<double>(words) / seconds : 0.0; }
};

/// Decodes `data` in consecutive batches of `batch_size` instances; each
/// batch is spread over `threads` workers. Words are draft tokens.
template <class Model>
ThroughputResult throughput(const Model& model, const std::vector<Instance>& data, std::size_t batch_size,
                            const DecodeLimits& limits, unsigned threads = 1) {
  if (batch_size == 0) batch_size = 1;
  ThroughputResult r;
  for (const auto& inst : data) r.words += inst.draft.size();
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t end = std::min(data.size(), start + batch_size);
    parallel_for(end - start, threads, [&](std::size_t i) { (void)predict(model, data[start + i], limits); });
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

/// `count` instances with N-token drafts over `vocab_words` and M triples.
inline std::vector<Instance> random_instances(std::size_t count, std::size_t n, std::size_t m,
                                              const std::vector<std::string>& vocab_words, std::uint64_t seed) {
  nn::Rng rng(seed);
  std::vector<Instance> out(count);
  for (auto& inst : out) {
    for (std::size_t j = 0; j < m; ++j)
      inst.triples.push_back({"subject", "relation_" + std::to_string(j), vocab_words[rng.below(vocab_words.size())] + "_" + std::to_string(j)});
    for (std::size_t i = 0; i < n; ++i) inst.draft.push_back(vocab_words[rng.below(vocab_words.size())]);
    inst.revised = inst.draft;
  }
  return out;
}

struct BenchOptions {
  /// Small widths keep constant per-step costs low, so the length-dependent
  /// terms show at N in the low hundreds.
  ModelDims dims{16, 16, 16, 16, 32, 32, 64, 32, 32};
  std::vector<std::size_t> lengths{100, 200};
  std::vector<std::size_t> batches{128};
  std::size_t instances = 128;
  std::size_t triples = 3;
  int models = 5;  // randomly initialized models per kind, seeds seed..seed+models-1
  std::uint64_t seed = 1;
  int repeats = 3;  // the fastest repeat is kept
  unsigned threads = 1;
  int max_consecutive_gen = 10;
};

struct BenchRow {
  std::string model;
  std::size_t length = 0;
  std::size_t batch = 0;
  std::size_t words = 0;
  double seconds = 0.0;  // summed over models
  double words_per_second() const { return seconds > 0 ? static_cast<double>(words) / seconds : 0.0; }
};

/// Decode time of randomly initialized models on random N-token drafts with
/// M fixed. The encoder-decoder is forced to emit exactly N tokens, the
/// editor runs its normal greedy loop.
inline std::vector<BenchRow> run_bench(const BenchOptions& opt) {
  std::vector<std::string> words;
  for (int i = 0; i < 50; ++i) words.push_back("w" + std::to_string(i));
  std::vector<std::vector<Instance>> data;
  std::vector<Instance> all;
  for (std::size_t k = 0; k < opt.lengths.size(); ++k) {
    data.push_back(random_instances(opt.instances, opt.lengths[k], opt.triples, words, opt.seed + 1000 + k));
    all.insert(all.end(), data.back().begin(), data.back().end());
  }
  const auto fe_vocab = build_vocabulary(all);
  const auto ed_vocab = build_vocabulary(all, 1, true);

  std::vector<BenchRow> rows;
  for (const char* kind : {"facteditor", "encdec"})
    for (std::size_t k = 0; k < opt.lengths.size(); ++k)
      for (auto b : opt.batches) rows.push_back({kind, opt.lengths[k], b, 0, 0.0});

  auto time_best = [&](const auto& model, const std::vector<Instance>& d, std::size_t batch, const DecodeLimits& lim) {
    ThroughputResult best;
    for (int r = 0; r < std::max(1, opt.repeats); ++r) {
      auto t = throughput(model, d, batch, lim, opt.threads);
      if (r == 0 || t.seconds < best.seconds) best = t;
    }
    return best;
  };
  for (int m = 0; m < opt.models; ++m) {
    const std::uint64_t seed = opt.seed + static_cast<std::uint64_t>(m);
    FactEditor<float> fe(opt.dims, fe_vocab, seed);
    EncDec<float> ed(opt.dims, ed_vocab, seed);
    std::size_t row = 0;
    for (int which = 0; which < 2; ++which)
      for (std::size_t k = 0; k < opt.lengths.size(); ++k)
        for (auto b : opt.batches) {
          DecodeLimits lim;
          lim.max_consecutive_gen = opt.max_consecutive_gen;
          lim.max_length = lim.min_length = static_cast<int>(opt.lengths[k]);
          const auto t = which == 0 ? time_best(fe, data[k], b, lim) : time_best(ed, data[k], b, lim);
          rows[row].words += t.words;
          rows[row].seconds += t.seconds;
          ++row;
        }
  }
  return rows;
}

}  // namespace factedit
