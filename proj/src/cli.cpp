//  Copyright 2026 The herbvec Authors. All Rights Reserved.
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#include "herbvec/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "herbvec/checkpoint.hpp"
#include "herbvec/corpus.hpp"
#include "herbvec/evaluation.hpp"
#include "herbvec/service.hpp"
#include "herbvec/trainer.hpp"

namespace herbvec {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fixed4(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

std::vector<RawPrescription> read_corpus(const fs::path& path, std::ostream& err) {
  auto in = open_in(path);
  auto parsed = parse_corpus(in, path.string());
  for (const auto& d : parsed.skipped) err << path.string() << ":" << d.line << ": " << d.message << "\n";
  if (parsed.prescriptions.empty()) throw DataError("'" + path.string() + "' contains no prescriptions");
  return std::move(parsed.prescriptions);
}

EmbeddingMatrix load_embeddings(const std::string& checkpoint, const std::string& embeddings) {
  if (!embeddings.empty()) {
    auto in = open_in(embeddings);
    return load_text(in);
  }
  const auto ck = load_checkpoint(checkpoint);
  auto emb = embeddings_of(ck.model);
  if (!emb) throw ConfigError("a " + kind_of(ck.model) + " model has no herb embeddings");
  return std::move(*emb);
}

void print_neighbors(std::ostream& out, const EmbeddingMatrix& emb, const std::vector<Neighbor>& ns,
                     bool as_json) {
  if (as_json) {
    json arr = json::array();
    for (const auto& n : ns) arr.push_back({{"herb", emb.vocab().token(n.id)}, {"score", n.score}});
    out << arr.dump() << "\n";
    return;
  }
  for (const auto& n : ns) out << emb.vocab().token(n.id) << "\t" << fixed4(n.score) << "\n";
}

// Accepts "name=path" or a bare path named after its stem.
std::pair<std::string, fs::path> model_spec(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) return {fs::path(spec).stem().string(), spec};
  if (eq == 0 || eq + 1 == spec.size()) throw ConfigError("bad --model value '" + spec + "'");
  return {spec.substr(0, eq), spec.substr(eq + 1)};
}

struct IngestArgs {
  std::vector<std::string> inputs;
  std::string out_dir;
  std::size_t threshold = 5;
  bool no_project = false;
  double dev = 0.05;
  double test = 0.05;
  std::uint64_t seed = 0;
};

void cmd_ingest(const IngestArgs& a, std::ostream& out, std::ostream& err) {
  const SplitRatios ratios{1.0 - a.dev - a.test, a.dev, a.test};
  std::vector<RawPrescription> corpus;
  for (const auto& path : a.inputs) {
    auto part = read_corpus(path, err);
    corpus.insert(corpus.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  if (!a.no_project) corpus = project_rare_herbs(corpus, a.threshold);
  const auto parts = split(corpus, ratios, a.seed);
  const auto full_vocab = build_vocabulary(corpus);
  const auto train_vocab = build_vocabulary(parts.train);

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  {
    auto f = open_out(dir / "train.txt");
    write_corpus(f, parts.train);
  }
  {
    auto f = open_out(dir / "dev.txt");
    write_corpus(f, parts.dev);
  }
  {
    auto f = open_out(dir / "test.txt");
    write_corpus(f, parts.test);
  }
  {
    auto f = open_out(dir / "vocab.tsv");
    for (HerbId id = 1; id < static_cast<HerbId>(full_vocab.size()); ++id)
      f << full_vocab.token(id) << "\t" << full_vocab.count(id) << "\n";
  }
  const auto testset = make_prediction_testset(encode(parts.test, train_vocab), a.seed);
  for (const auto& w : testset.warnings) err << "warning: " << w.message << "\n";
  {
    auto f = open_out(dir / "testset.txt");
    write_testset(f, testset.items, train_vocab);
  }
  const json summary = {{"seed", a.seed},
                        {"prescriptions", corpus.size()},
                        {"herbs", full_vocab.num_herbs()},
                        {"train", parts.train.size()},
                        {"dev", parts.dev.size()},
                        {"test", parts.test.size()},
                        {"testset", testset.items.size()},
                        {"projection_threshold", a.no_project ? 0 : a.threshold}};
  {
    auto f = open_out(dir / "ingest.json");
    f << summary.dump(2) << "\n";
  }
  out << "prescriptions=" << corpus.size() << " herbs=" << full_vocab.num_herbs() << " train=" << parts.train.size()
      << " dev=" << parts.dev.size() << " test=" << parts.test.size() << " seed=" << a.seed << "\n";
}

struct TrainArgs {
  std::string model;
  std::string train;
  std::string dev;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t min_count = 1;
  long dim = 100;
  long hidden = 100;
  long rank = 20;
  std::size_t window = 5;
  std::size_t negatives = 5;
  int epochs = 50;
  int patience = 3;
  std::size_t batch = 32;
  double lr = 1e-3;
  double smoothing = 1.0;
  bool unigram = false;
  bool as_json = false;
};

void cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  const bool iterative = a.model == "cbow" || a.model == "rnnlm" || a.model == "pllm";
  if (iterative && a.dev.empty()) throw ConfigError("--model " + a.model + " requires --dev for early stopping");

  const auto raw_train = read_corpus(a.train, err);
  auto vocab = std::make_shared<const Vocabulary>(build_vocabulary(raw_train, a.min_count));
  const auto train = encode(raw_train, *vocab);
  std::vector<PredictionItem> dev_items;
  if (!a.dev.empty()) {
    auto dev_set = make_prediction_testset(encode(read_corpus(a.dev, err), *vocab), a.seed);
    for (const auto& w : dev_set.warnings) err << "warning: " << w.message << "\n";
    dev_items = std::move(dev_set.items);
  }

  TrainConfig tc;
  tc.adam.lr = a.lr;
  tc.batch_size = a.batch;
  tc.max_epochs = a.epochs;
  tc.patience = a.patience;
  tc.seed = a.seed;

  json config = {{"train_corpus", a.train}, {"dev_corpus", a.dev}, {"min_count", a.min_count},
                 {"train_prescriptions", train.size()}};
  std::optional<TrainedModel> model;
  json history = json::array();
  auto record = [&](const auto& fit_result) {
    for (const auto& h : fit_result.history)
      history.push_back({{"epoch", h.epoch}, {"loss", h.loss}, {"dev_accuracy", h.dev_accuracy}});
    config["best_epoch"] = fit_result.best_epoch;
    config["dev_accuracy"] = fit_result.best_accuracy;
    config["history"] = history;
    config["adam"] = {{"lr", tc.adam.lr}, {"beta1", tc.adam.beta1}, {"beta2", tc.adam.beta2}, {"eps", tc.adam.eps}};
    config["batch_size"] = tc.batch_size;
    config["max_epochs"] = tc.max_epochs;
    config["patience"] = tc.patience;
  };

  if (a.model == "ngram") {
    NgramConfig nc{a.smoothing, a.unigram};
    model = NgramModel::fit(train, vocab, nc);
    config["smoothing"] = nc.smoothing;
    config["unigram_term"] = nc.unigram_term;
  } else if (a.model == "lsa") {
    LsaConfig lc;
    lc.rank = a.rank;
    lc.svd.seed = a.seed;
    model = LsaModel::fit(train, vocab, lc);
    config["rank"] = lc.rank;
  } else if (a.model == "cbow") {
    CbowConfig cc;
    cc.dim = a.dim;
    cc.window = a.window;
    cc.negatives = a.negatives;
    cc.init_seed = a.seed;
    auto result = fit(CbowModel::init(vocab, cc), train, dev_items, tc);
    record(result);
    config["window"] = cc.window;
    config["negatives"] = cc.negatives;
    config["noise_power"] = cc.noise_power;
    model = std::move(result.model);
  } else {
    NeuralLmConfig nc;
    nc.mode = a.model == "rnnlm" ? LmMode::kRnnlm : LmMode::kPllm;
    nc.dim = a.dim;
    nc.hidden = a.hidden;
    nc.init_seed = a.seed;
    auto result = fit(NeuralLm::init(vocab, nc), train, dev_items, tc);
    record(result);
    config["hidden"] = nc.hidden;
    config["clip_norm"] = tc.clip_norm;
    model = std::move(result.model);
  }

  if (!iterative && !dev_items.empty())
    config["dev_accuracy"] = std::visit([&](const auto& m) { return eval_prediction(m, dev_items); }, *model);
  save_checkpoint(*model, a.out, {a.seed, config});

  json summary = {{"model", a.model}, {"checkpoint", a.out}, {"seed", a.seed}, {"herbs", vocab->num_herbs()}};
  if (config.contains("dev_accuracy")) summary["dev_accuracy"] = config["dev_accuracy"];
  if (config.contains("best_epoch")) {
    summary["best_epoch"] = config["best_epoch"];
    summary["epochs"] = history.size();
  }
  if (a.as_json) {
    out << summary.dump() << "\n";
    return;
  }
  out << "model=" << a.model << " herbs=" << vocab->num_herbs();
  if (summary.contains("epochs")) out << " epochs=" << history.size() << " best_epoch=" << config["best_epoch"];
  if (summary.contains("dev_accuracy")) out << " dev_accuracy=" << fixed4(summary["dev_accuracy"].get<double>());
  out << " seed=" << a.seed << " checkpoint=" << a.out << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"herbvec: herb embeddings from prescription corpora", "herbvec"};
  app.require_subcommand(1, 1);

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Parse, project rare herbs, split and write a normalized corpus");
  c_ingest->add_option("--input", ingest.inputs, "Corpus file(s)")->required()->check(CLI::ExistingFile);
  c_ingest->add_option("--out-dir", ingest.out_dir, "Output directory")->required();
  c_ingest->add_option("--threshold", ingest.threshold, "Rare-herb projection threshold");
  c_ingest->add_flag("--no-project", ingest.no_project, "Skip rare-herb projection");
  c_ingest->add_option("--dev-ratio", ingest.dev, "Development fraction");
  c_ingest->add_option("--test-ratio", ingest.test, "Test fraction");
  c_ingest->add_option("--seed", ingest.seed, "Split and test-set seed");

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "Fit a model and write a checkpoint");
  c_train->add_option("--model", train.model, "Model type")
      ->required()
      ->check(CLI::IsMember({"ngram", "lsa", "cbow", "rnnlm", "pllm"}));
  c_train->add_option("--train", train.train, "Training corpus")->required()->check(CLI::ExistingFile);
  c_train->add_option("--dev", train.dev, "Development corpus (early stopping)")->check(CLI::ExistingFile);
  c_train->add_option("--out", train.out, "Checkpoint path")->required();
  c_train->add_option("--seed", train.seed, "Seed for initialization, shuffling and sampling");
  c_train->add_option("--min-count", train.min_count, "Minimum herb count for the vocabulary");
  c_train->add_option("--dim", train.dim, "Embedding dimension (cbow, rnnlm, pllm)");
  c_train->add_option("--hidden", train.hidden, "GRU hidden size (rnnlm, pllm)");
  c_train->add_option("--rank", train.rank, "LSA rank");
  c_train->add_option("--window", train.window, "CBOW window");
  c_train->add_option("--negatives", train.negatives, "CBOW negative samples");
  c_train->add_option("--epochs", train.epochs, "Maximum epochs");
  c_train->add_option("--patience", train.patience, "Early-stopping patience");
  c_train->add_option("--batch", train.batch, "Mini-batch size");
  c_train->add_option("--lr", train.lr, "Adam learning rate");
  c_train->add_option("--smoothing", train.smoothing, "n-gram add-k smoothing");
  c_train->add_flag("--unigram", train.unigram, "Add the unigram term to n-gram blank scores");
  c_train->add_flag("--json", train.as_json, "Machine-readable output");

  std::string sim_ck, sim_emb, sim_bench;
  bool sim_json = false;
  auto* c_sim = app.add_subcommand("eval-sim", "Spearman correlation against a similarity benchmark");
  auto* sim_ck_opt = c_sim->add_option("--checkpoint", sim_ck, "Checkpoint")->check(CLI::ExistingFile);
  auto* sim_emb_opt = c_sim->add_option("--embeddings", sim_emb, "Text embeddings")->check(CLI::ExistingFile);
  sim_ck_opt->excludes(sim_emb_opt);
  c_sim->add_option("--benchmark", sim_bench, "Benchmark TSV")->required()->check(CLI::ExistingFile);
  c_sim->add_flag("--json", sim_json, "Machine-readable output");

  std::string pred_ck, pred_ts;
  std::size_t pred_topk = 0;
  bool pred_json = false;
  auto* c_pred = app.add_subcommand("eval-pred", "Herb-prediction accuracy on a test set");
  c_pred->add_option("--checkpoint", pred_ck, "Checkpoint")->required()->check(CLI::ExistingFile);
  c_pred->add_option("--testset", pred_ts, "Test set")->required()->check(CLI::ExistingFile);
  c_pred->add_option("--topk", pred_topk, "Also report top-k accuracy");
  c_pred->add_flag("--json", pred_json, "Machine-readable output");

  std::string mt_corpus, mt_ck, mt_out;
  std::uint64_t mt_seed = 0;
  std::size_t mt_min = kMinTestsetLength;
  auto* c_mt = app.add_subcommand("make-testset", "Blank one herb per prescription");
  c_mt->add_option("--corpus", mt_corpus, "Corpus")->required()->check(CLI::ExistingFile);
  c_mt->add_option("--checkpoint", mt_ck, "Vocabulary source (defaults to the corpus itself)")
      ->check(CLI::ExistingFile);
  c_mt->add_option("--out", mt_out, "Output path")->required();
  c_mt->add_option("--seed", mt_seed, "Blank-position seed");
  c_mt->add_option("--min-length", mt_min, "Minimum prescription length");

  std::string bb_ann, bb_out;
  std::size_t bb_keep = 80;
  auto* c_bb = app.add_subcommand("build-benchmark", "Select the most consistent annotated pairs");
  c_bb->add_option("--annotations", bb_ann, "Annotation TSV")->required()->check(CLI::ExistingFile);
  c_bb->add_option("--keep", bb_keep, "Pairs to keep");
  c_bb->add_option("--out", bb_out, "Benchmark TSV")->required();

  std::string ex_ck, ex_out;
  auto* c_ex = app.add_subcommand("export-embeddings", "Write herb vectors as text");
  c_ex->add_option("--checkpoint", ex_ck, "Checkpoint")->required()->check(CLI::ExistingFile);
  c_ex->add_option("--out", ex_out, "Output path")->required();

  std::string nn_ck, nn_emb, nn_herb;
  std::size_t nn_k = 10;
  bool nn_json = false;
  auto* c_nn = app.add_subcommand("nn", "Nearest neighbours of a herb");
  auto* nn_ck_opt = c_nn->add_option("--checkpoint", nn_ck, "Checkpoint")->check(CLI::ExistingFile);
  auto* nn_emb_opt = c_nn->add_option("--embeddings", nn_emb, "Text embeddings")->check(CLI::ExistingFile);
  nn_ck_opt->excludes(nn_emb_opt);
  c_nn->add_option("--herb", nn_herb, "Query herb")->required();
  c_nn->add_option("--k", nn_k, "Number of neighbours")->check(CLI::PositiveNumber);
  c_nn->add_flag("--json", nn_json, "Machine-readable output");

  std::string an_ck, an_emb, an_a, an_b, an_c;
  std::size_t an_k = 10;
  bool an_json = false;
  auto* c_an = app.add_subcommand("analogy", "Herbs closest to b - a + c");
  auto* an_ck_opt = c_an->add_option("--checkpoint", an_ck, "Checkpoint")->check(CLI::ExistingFile);
  auto* an_emb_opt = c_an->add_option("--embeddings", an_emb, "Text embeddings")->check(CLI::ExistingFile);
  an_ck_opt->excludes(an_emb_opt);
  c_an->add_option("--a", an_a, "Herb a")->required();
  c_an->add_option("--b", an_b, "Herb b")->required();
  c_an->add_option("--c", an_c, "Herb c")->required();
  c_an->add_option("--k", an_k, "Number of results")->check(CLI::PositiveNumber);
  c_an->add_flag("--json", an_json, "Machine-readable output");

  std::vector<std::string> sv_models;
  std::string sv_host = "127.0.0.1", sv_static;
  int sv_port = 8080;
  auto* c_sv = app.add_subcommand("serve", "Run the prescription assistant over HTTP");
  c_sv->add_option("--model", sv_models, "name=checkpoint (repeatable)")
      ->required()
      ->envname("HERBVEC_MODELS")
      ->delimiter(',');
  c_sv->add_option("--host", sv_host, "Listen address")->envname("HERBVEC_HOST");
  c_sv->add_option("--port", sv_port, "Listen port")->envname("HERBVEC_PORT")->check(CLI::Range(1, 65535));
  c_sv->add_option("--static", sv_static, "Directory served at /")->envname("HERBVEC_STATIC")->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*c_ingest) {
      if (ingest.dev < 0 || ingest.test < 0 || ingest.dev + ingest.test >= 1.0)
        throw ConfigError("dev and test ratios must be non-negative and sum below 1");
      cmd_ingest(ingest, out, err);
    } else if (*c_train) {
      cmd_train(train, out, err);
    } else if (*c_sim) {
      if (sim_ck.empty() && sim_emb.empty()) throw ConfigError("one of --checkpoint or --embeddings is required");
      const auto emb = load_embeddings(sim_ck, sim_emb);
      auto in = open_in(sim_bench);
      const auto r = eval_similarity(emb, read_benchmark(in));
      EvalReport rep;
      rep.model = sim_ck.empty() ? sim_emb : sim_ck;
      rep.rho = r.rho;
      rep.coverage = r.coverage();
      rep.n = r.evaluated;
      rep.has_rho = true;
      if (sim_json)
        out << to_json(rep) << "\n";
      else
        out << "rho=" << fixed4(r.rho) << " coverage=" << fixed4(r.coverage()) << " pairs=" << r.evaluated << "/"
            << r.total << "\n";
    } else if (*c_pred) {
      const auto ck = load_checkpoint(pred_ck);
      auto in = open_in(pred_ts);
      const auto items = read_testset(in, vocab_of(ck.model));
      const double acc = std::visit([&](const auto& m) { return eval_prediction(m, items); }, ck.model);
      EvalReport rep;
      rep.model = kind_of(ck.model);
      rep.accuracy = acc;
      rep.n = items.size();
      rep.has_accuracy = true;
      std::optional<double> topk;
      if (pred_topk > 0)
        topk = std::visit([&](const auto& m) { return eval_prediction_topk(m, items, pred_topk); }, ck.model);
      if (pred_json) {
        auto j = json::parse(to_json(rep));
        if (topk) j["top" + std::to_string(pred_topk)] = *topk;
        out << j.dump() << "\n";
      } else {
        out << "accuracy=" << fixed4(acc) << " n=" << items.size();
        if (topk) out << " top" << pred_topk << "=" << fixed4(*topk);
        out << "\n";
      }
    } else if (*c_mt) {
      const auto raw = read_corpus(mt_corpus, err);
      const auto vocab = mt_ck.empty() ? build_vocabulary(raw) : vocab_of(load_checkpoint(mt_ck).model);
      const auto ts = make_prediction_testset(encode(raw, vocab), mt_seed, mt_min);
      for (const auto& w : ts.warnings) err << "warning: " << w.message << "\n";
      auto f = open_out(mt_out);
      write_testset(f, ts.items, vocab);
      out << "items=" << ts.items.size() << " seed=" << mt_seed << "\n";
    } else if (*c_bb) {
      auto in = open_in(bb_ann);
      const auto bench = build_benchmark(read_annotations(in), bb_keep);
      auto f = open_out(bb_out);
      write_benchmark(f, bench);
      out << "pairs=" << bench.size() << "\n";
    } else if (*c_ex) {
      const auto emb = load_embeddings(ex_ck, "");
      auto f = open_out(ex_out);
      save_text(emb, f);
      out << "herbs=" << emb.rows() - 1 << " dim=" << emb.dim() << "\n";
    } else if (*c_nn) {
      if (nn_ck.empty() && nn_emb.empty()) throw ConfigError("one of --checkpoint or --embeddings is required");
      const auto emb = load_embeddings(nn_ck, nn_emb);
      print_neighbors(out, emb, emb.nearest_neighbors(emb.lookup(nn_herb), nn_k), nn_json);
    } else if (*c_an) {
      if (an_ck.empty() && an_emb.empty()) throw ConfigError("one of --checkpoint or --embeddings is required");
      const auto emb = load_embeddings(an_ck, an_emb);
      print_neighbors(out, emb, emb.analogy(emb.lookup(an_a), emb.lookup(an_b), emb.lookup(an_c), an_k), an_json);
    } else if (*c_sv) {
      std::vector<std::pair<std::string, fs::path>> specs;
      for (const auto& s : sv_models) specs.push_back(model_spec(s));
      AssistantService service;
      service.load(specs);
      err << "serving " << specs.size() << " model(s) on http://" << sv_host << ":" << sv_port << "\n";
      serve(service, sv_host, sv_port, sv_static.empty() ? std::nullopt : std::optional<fs::path>(sv_static));
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const NotFoundError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const CheckpointError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const UndefinedError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace herbvec
