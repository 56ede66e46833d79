// factedit: command-line front end for data generation, oracle supervision,
// training, editing, evaluation, gradient checking and benchmarking.
//
// Exit codes: 0 success, 1 I/O or validation failure, 2 usage error.
// Data goes to files or stdout; structured JSON log records go to stderr.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "factedit/factedit.hpp"

namespace {

using factedit::Instance;
using factedit::TokenSeq;
using json = nlohmann::json;

void log_event(const char* level, const std::string& event, json fields = json::object()) {
  fields["level"] = level;
  fields["event"] = event;
  std::cerr << fields.dump() << '\n';
}

template <class Fn>
void write_to(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  fn(out);
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

std::set<std::string> read_inventory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open inventory '" + path + "'");
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line))
    for (auto& tok : factedit::tokenize(line)) out.insert(tok);
  return out;
}

// --- make-data ---------------------------------------------------------------

struct MakeDataArgs {
  std::string corpus, out;
  bool augment_root = false;
  std::size_t synthetic = 0;
  std::size_t max_facts = 3;
  std::uint64_t seed = 1;
  std::string corpus_out;
};

int run_make_data(const MakeDataArgs& a) {
  std::vector<factedit::CorpusRecord> corpus;
  if (a.synthetic) {
    factedit::SyntheticOptions so;
    so.records = a.synthetic;
    so.max_facts = a.max_facts;
    so.seed = a.seed;
    corpus = factedit::synthetic_corpus(so);
    if (!a.corpus_out.empty()) factedit::write_corpus(a.corpus_out, corpus);
  } else {
    if (a.corpus.empty()) throw std::invalid_argument("make-data needs --corpus or --synthetic");
    corpus = factedit::read_corpus(a.corpus);
  }
  factedit::MakeDataOptions opts;
  opts.augment_root = a.augment_root;
  const auto ds = factedit::make_dataset(corpus, opts);
  write_to(a.out, [&](std::ostream& os) { factedit::write_instances(os, ds.instances); });
  const auto& r = ds.report;
  log_event("info", "make-data",
            {{"inputs", r.inputs},
             {"instances", ds.instances.size()},
             {"insertions", r.insertions},
             {"deletions", r.deletions},
             {"no_reference", r.no_reference},
             {"unchanged", r.unchanged},
             {"entity_conflicts", r.entity_conflicts}});
  if (ds.instances.empty())
    log_event("warning", "empty-dataset", {{"message", "no record had a strict subset/superset reference"}});
  return 0;
}

// --- derive-actions / apply ------------------------------------------------------

int run_derive_actions(const std::string& in_path, const std::string& out_path) {
  const auto data = factedit::read_instances(in_path);
  std::vector<factedit::ActionSequence> seqs;
  seqs.reserve(data.size());
  std::size_t invalid = 0;
  for (const auto& inst : data) {
    seqs.push_back(factedit::derive_actions(inst.draft, inst.revised));
    if (!factedit::validate(seqs.back(), inst.draft, inst.revised)) ++invalid;
  }
  write_to(out_path, [&](std::ostream& os) { factedit::write_actions(os, seqs); });
  log_event("info", "derive-actions", {{"instances", data.size()}, {"unreplayable", invalid}});
  if (invalid)
    log_event("warning", "unreplayable-pairs",
              {{"count", invalid}, {"message", "empty draft with non-empty revised text has no valid action sequence"}});
  return 0;
}

int run_apply(const std::string& in_path, const std::string& actions_path, const std::string& out_path) {
  const auto data = factedit::read_instances(in_path);
  const auto seqs = factedit::read_actions(actions_path);
  if (data.size() != seqs.size())
    throw std::invalid_argument("apply: " + std::to_string(data.size()) + " instances vs " + std::to_string(seqs.size()) +
                                " action sequences");
  std::vector<TokenSeq> preds;
  preds.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    try {
      preds.push_back(factedit::execute(data[i].draft, seqs[i], data[i].triples));
    } catch (const factedit::EngineError& e) {
      throw std::invalid_argument("record " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  write_to(out_path, [&](std::ostream& os) { factedit::write_predictions(os, preds); });
  log_event("info", "apply", {{"instances", data.size()}});
  return 0;
}

// --- train -------------------------------------------------------------------------

struct TrainArgs {
  std::string config, train, dev, out, log;
  std::uint64_t seed = 0;
  bool seed_given = false;
  unsigned threads = 1;
};

template <class Model>
int train_model(const TrainArgs& a, const factedit::TrainConfig& cfg, const std::vector<Instance>& train_data,
                const std::vector<Instance>& dev) {
  const bool encdec = cfg.model == factedit::ModelKind::EncDec;
  auto vocab = factedit::build_vocabulary(train_data, cfg.min_freq, encdec);
  Model model(cfg.dims, vocab, cfg.seed);
  const auto examples = factedit::prepare_examples(train_data);
  std::ofstream log_file;
  if (!a.log.empty()) {
    log_file.open(a.log, std::ios::binary);
    if (!log_file) throw std::runtime_error("cannot open '" + a.log + "' for writing");
  }
  auto on_epoch = [&](const factedit::EpochRecord& r) {
    const auto j = factedit::to_json(r);
    if (log_file) log_file << j.dump() << '\n';
    log_event("info", "epoch", j);
    return false;
  };
  const auto result = factedit::train(model, examples, dev, cfg, on_epoch, a.threads);
  factedit::save_checkpoint(a.out, model, cfg);
  log_event("info", "train-done", {{"best_epoch", result.best_epoch}, {"best_dev_bleu", result.best_bleu}, {"checkpoint", a.out}});
  return 0;
}

int run_train(const TrainArgs& a) {
  auto cfg = a.config.empty() ? factedit::TrainConfig{} : factedit::load_config(a.config);
  if (a.seed_given) cfg.seed = a.seed;
  cfg.validate();
  const auto train_data = factedit::read_instances(a.train);
  if (train_data.empty()) throw std::invalid_argument("train: empty training set");
  const auto dev = a.dev.empty() ? train_data : factedit::read_instances(a.dev);
  log_event("info", "train-start",
            {{"model", factedit::model_kind_name(cfg.model)}, {"train", train_data.size()}, {"dev", dev.size()}});
  const bool dbl = cfg.double_precision;
  if (cfg.model == factedit::ModelKind::FactEditor)
    return dbl ? train_model<factedit::FactEditor<double>>(a, cfg, train_data, dev)
               : train_model<factedit::FactEditor<float>>(a, cfg, train_data, dev);
  return dbl ? train_model<factedit::EncDec<double>>(a, cfg, train_data, dev)
             : train_model<factedit::EncDec<float>>(a, cfg, train_data, dev);
}

// --- edit --------------------------------------------------------------------------

struct EditArgs {
  std::string model = "facteditor", checkpoint, instances, out;
  unsigned threads = 1;
  int max_consecutive_gen = 0;
  int max_length = 0;
};

template <class Model>
std::vector<TokenSeq> edit_with(std::istream& is, const factedit::CheckpointHeader& h, const EditArgs& a,
                                const std::vector<Instance>& data) {
  const Model model = factedit::read_checkpoint_body<Model>(is, h);
  auto limits = h.config.limits;
  if (a.max_consecutive_gen > 0) limits.max_consecutive_gen = a.max_consecutive_gen;
  if (a.max_length > 0) limits.max_length = a.max_length;
  return factedit::predict_all(model, data, limits, a.threads);
}

int run_edit(const EditArgs& a) {
  const auto data = factedit::read_instances(a.instances);
  std::vector<TokenSeq> preds;
  if (a.model == "noop") {
    for (const auto& inst : data) preds.push_back(inst.draft);
  } else {
    const auto kind = factedit::parse_model_kind(a.model);
    if (a.checkpoint.empty()) throw std::invalid_argument("edit --model " + a.model + " needs --checkpoint");
    std::ifstream is(a.checkpoint, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint '" + a.checkpoint + "'");
    const auto h = factedit::read_checkpoint_header(is);
    if (h.kind != kind)
      throw std::invalid_argument("checkpoint holds a " + factedit::model_kind_name(h.kind) + " model, --model is " +
                                  a.model);
    const bool dbl = h.scalar_bytes == 8;
    if (kind == factedit::ModelKind::FactEditor)
      preds = dbl ? edit_with<factedit::FactEditor<double>>(is, h, a, data)
                  : edit_with<factedit::FactEditor<float>>(is, h, a, data);
    else
      preds = dbl ? edit_with<factedit::EncDec<double>>(is, h, a, data) : edit_with<factedit::EncDec<float>>(is, h, a, data);
  }
  write_to(a.out, [&](std::ostream& os) { factedit::write_predictions(os, preds); });
  log_event("info", "edit", {{"model", a.model}, {"instances", data.size()}});
  return 0;
}

// --- evaluate ------------------------------------------------------------------------

int run_evaluate(const std::string& pred_path, const std::string& ref_path, const std::string& inventory_path,
                 const std::string& out_path) {
  const auto preds = factedit::read_predictions(pred_path);
  const auto refs = factedit::read_instances(ref_path);
  if (preds.size() != refs.size())
    throw std::invalid_argument("evaluate: " + std::to_string(preds.size()) + " predictions vs " +
                                std::to_string(refs.size()) + " references");
  const auto rep = inventory_path.empty() ? factedit::metrics::evaluate(preds, refs)
                                          : factedit::metrics::evaluate(preds, refs, read_inventory(inventory_path));
  const json j{{"bleu", rep.bleu},
               {"sari", rep.sari.overall},
               {"sari_keep", rep.sari.keep},
               {"sari_add", rep.sari.add},
               {"sari_delete", rep.sari.del},
               {"exact_match", rep.em},
               {"precision", rep.fidelity.precision},
               {"recall", rep.fidelity.recall},
               {"f1", rep.fidelity.f1},
               {"instances", rep.instances},
               {"words", rep.words}};
  write_to(out_path, [&](std::ostream& os) { os << j.dump() << '\n'; });
  return 0;
}

// --- gradcheck -----------------------------------------------------------------------

int run_gradcheck(std::uint64_t seed, int configs, double tolerance, bool verbose) {
  factedit::nn::GradCheckOptions opt;
  opt.tolerance = tolerance;
  const auto runs = factedit::grad_check_suite(seed, configs, opt);
  bool all = true;
  std::cout << std::left << std::setw(12) << "model" << std::setw(22) << "seed" << std::setw(22) << "worst tensor"
            << std::setw(14) << "max rel err" << "result\n";
  for (const auto& r : runs) {
    const auto* w = r.report.worst();
    all = all && r.report.pass();
    std::ostringstream err;
    err << std::scientific << std::setprecision(2) << (w ? w->max_rel_error : 0.0);
    std::cout << std::left << std::setw(12) << r.model << std::setw(22) << r.seed << std::setw(22) << (w ? w->name : "-")
              << std::setw(14) << err.str() << (r.report.pass() ? "pass" : "FAIL") << '\n';
    for (const auto& p : r.report.params) {
      if (!p.pass) std::cout << "    failed: " << p.name << " (" << p.max_rel_error << ")\n";
      else if (verbose && p.unused) std::cout << "    unused: " << p.name << '\n';
    }
  }
  std::cout << (all ? "all gradients within " : "gradient check failed; tolerance ") << tolerance << '\n';
  log_event(all ? "info" : "error", "gradcheck", {{"runs", runs.size()}, {"pass", all}});
  return all ? 0 : 1;
}

// --- bench ----------------------------------------------------------------------------

int run_bench(factedit::BenchOptions opt, bool as_json) {
  const auto rows = factedit::run_bench(opt);
  if (as_json) {
    for (const auto& r : rows)
      std::cout << json{{"model", r.model}, {"N", r.length}, {"batchSize", r.batch}, {"words_per_second", r.words_per_second()}, {"seconds", r.seconds}}.dump()
                << '\n';
    return 0;
  }
  std::cout << std::left << std::setw(12) << "model" << std::setw(8) << "N" << std::setw(11) << "batchSize"
            << "words/second\n";
  for (const auto& r : rows)
    std::cout << std::left << std::setw(12) << r.model << std::setw(8) << r.length << std::setw(11) << r.batch
              << std::fixed << std::setprecision(1) << r.words_per_second() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fact-based text editing: data generation, training, editing and evaluation"};
  app.require_subcommand(1);

  MakeDataArgs md;
  auto* make_data = app.add_subcommand("make-data", "Build (triples, draft, revised) instances from a table-to-text corpus");
  make_data->add_option("--corpus", md.corpus, "Corpus file, JSON lines with \"triples\" and \"text\"");
  make_data->add_option("--out", md.out, "Output instance file (default: stdout)");
  make_data->add_flag("--augment-root", md.augment_root, "Add (ROOT, IsOf, subject) to every triple set first");
  make_data->add_option("--synthetic", md.synthetic, "Generate a synthetic corpus of this many records instead of --corpus");
  make_data->add_option("--max-facts", md.max_facts, "Facts per synthetic record, at most")->capture_default_str();
  make_data->add_option("--seed", md.seed, "Seed of the synthetic corpus")->capture_default_str();
  make_data->add_option("--corpus-out", md.corpus_out, "Also write the synthetic corpus here");

  std::string da_in, da_out;
  auto* derive = app.add_subcommand("derive-actions", "Oracle Keep/Drop/Gen sequences from draft/revised pairs");
  derive->add_option("--instances", da_in, "Instance file")->required();
  derive->add_option("--out", da_out, "Output action file (default: stdout)");

  std::string ap_in, ap_actions, ap_out;
  auto* apply = app.add_subcommand("apply", "Replay action sequences on drafts");
  apply->add_option("--instances", ap_in, "Instance file")->required();
  apply->add_option("--actions", ap_actions, "Action file, one sequence per instance")->required();
  apply->add_option("--out", ap_out, "Output predictions file (default: stdout)");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a FactEditor or EncDec model");
  train->add_option("--config", ta.config, "JSON config (dims, optimizer, batch_size, epochs, seed, limits, ...)");
  train->add_option("--train", ta.train, "Training instance file")->required();
  train->add_option("--dev", ta.dev, "Dev instance file for BLEU model selection (default: the training file)");
  train->add_option("--out", ta.out, "Checkpoint path")->required();
  train->add_option("--log", ta.log, "Per-epoch metrics, JSON lines");
  auto* train_seed = train->add_option("--seed", ta.seed, "Overrides the config seed");
  train->add_option("--threads", ta.threads, "Workers for dev decoding (0 = all cores)")->capture_default_str();

  EditArgs ea;
  auto* edit = app.add_subcommand("edit", "Revise drafts with a trained model or the no-editing baseline");
  edit->add_option("--model", ea.model, "facteditor, encdec or noop")
      ->check(CLI::IsMember({"facteditor", "encdec", "noop"}))
      ->capture_default_str();
  edit->add_option("--checkpoint", ea.checkpoint, "Checkpoint from train (not needed for noop)");
  edit->add_option("--instances", ea.instances, "Instance file")->required();
  edit->add_option("--out", ea.out, "Output predictions file (default: stdout)");
  edit->add_option("--threads", ea.threads, "Decoding workers (0 = all cores)")->capture_default_str();
  edit->add_option("--max-consecutive-gen", ea.max_consecutive_gen, "Override the checkpoint's Gen run limit");
  edit->add_option("--max-length", ea.max_length, "Override the checkpoint's encoder-decoder length cap");

  std::string ev_pred, ev_ref, ev_inv, ev_out;
  auto* evaluate = app.add_subcommand("evaluate", "BLEU, SARI, exact match and entity fidelity");
  evaluate->add_option("--predictions", ev_pred, "Predictions file")->required();
  evaluate->add_option("--references", ev_ref, "Reference instance file")->required();
  evaluate->add_option("--inventory", ev_inv, "Entity inventory, whitespace-separated tokens (default: from references)");
  evaluate->add_option("--out", ev_out, "Report file (default: stdout)");

  std::uint64_t gc_seed = 7;
  int gc_configs = 5;
  double gc_tol = 1e-4;
  bool gc_verbose = false;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of both models on random tiny configs");
  gradcheck->add_option("--seed", gc_seed, "Seed for configs, instances and weights")->capture_default_str();
  gradcheck->add_option("--configs", gc_configs, "Number of random configs")->capture_default_str();
  gradcheck->add_option("--tolerance", gc_tol, "Max relative error")->capture_default_str();
  gradcheck->add_flag("--verbose", gc_verbose, "List tensors with no gradient");

  factedit::BenchOptions bo;
  bool bench_json = false;
  auto* bench = app.add_subcommand("bench", "Greedy decoding throughput of randomly initialized models");
  bench->add_option("--lengths", bo.lengths, "Draft lengths N")->capture_default_str();
  bench->add_option("--batch", bo.batches, "Batch sizes")->capture_default_str();
  bench->add_option("--instances", bo.instances, "Instances per length")->capture_default_str();
  bench->add_option("--triples", bo.triples, "Triples per instance (M)")->capture_default_str();
  bench->add_option("--models", bo.models, "Random models per kind")->capture_default_str();
  bench->add_option("--repeats", bo.repeats, "Timing repeats; the fastest is kept")->capture_default_str();
  bench->add_option("--seed", bo.seed, "Seed for data and weights")->capture_default_str();
  bench->add_option("--threads", bo.threads, "Decoding workers per batch (0 = all cores)")->capture_default_str();
  bench->add_flag("--json", bench_json, "One JSON record per row instead of a table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*make_data) return run_make_data(md);
    if (*derive) return run_derive_actions(da_in, da_out);
    if (*apply) return run_apply(ap_in, ap_actions, ap_out);
    if (*train) {
      ta.seed_given = train_seed->count() > 0;
      return run_train(ta);
    }
    if (*edit) return run_edit(ea);
    if (*evaluate) return run_evaluate(ev_pred, ev_ref, ev_inv, ev_out);
    if (*gradcheck) return run_gradcheck(gc_seed, gc_configs, gc_tol, gc_verbose);
    if (*bench) return run_bench(bo, bench_json);
  } catch (const std::exception& e) {
    log_event("error", "failure", {{"message", e.what()}});
    return 1;
  }
  return 2;
}
