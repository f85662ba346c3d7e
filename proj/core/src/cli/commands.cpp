#include "kebio/cli/commands.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "kebio/annotate/annotator.hpp"
#include "kebio/cli/checkpoint.hpp"
#include "kebio/kbase/corpus.hpp"
#include "kebio/probe/queries.hpp"
#include "kebio/tasks/ner.hpp"
#include "kebio/tasks/re.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

using nlohmann::json;

namespace {

void emit(CommandContext& ctx, const json& event) { *ctx.log << event.dump() << '\n' << std::flush; }

fs::path sibling(const fs::path& out, std::string_view suffix) {
  fs::path p = out;
  p += suffix;
  return p;
}

void echo_config(const fs::path& out, const json& resolved) {
  write_file_atomic(sibling(out, ".config.json"), resolved.dump(2) + "\n");
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

// Every corpus word plus every KB surface word, so answers stay spellable.
std::vector<std::string> vocabulary_words(const std::vector<AnnotatedDocument>& docs,
                                          const KnowledgeBase& kb) {
  std::vector<std::string> words;
  for (const auto& d : docs) words.insert(words.end(), d.tokens.begin(), d.tokens.end());
  for (std::size_t e = 0; e < kb.size(); ++e) {
    for (const auto& n : kb.names(e)) {
      for (auto& w : split_text(n)) words.push_back(std::move(w));
    }
  }
  return words;
}

struct LoadedModel {
  Checkpoint ckpt;
  KebioModel model;
  Tokenizer tokenizer;
  Tensor table;
};

LoadedModel load_model(const fs::path& path) {
  require_artifact(path, "checkpoint", "kebio pretrain");
  LoadedModel m;
  m.ckpt = load_checkpoint(path);
  m.model = model_from_checkpoint(m.ckpt);
  m.tokenizer = Tokenizer(m.ckpt.vocab);
  if (const Tensor* t = m.ckpt.parameter(kEntityTableName)) m.table = t->clone();
  return m;
}

// KB for fine-tuning/probing, carrying the checkpoint's entity table.
std::optional<KnowledgeBase> task_kb(const fs::path& dir, const LoadedModel& m, bool force) {
  if (dir.empty()) return std::nullopt;
  KnowledgeBase kb = KnowledgeBase::load_dir(dir, m.model.config().entity_dim);
  check_kb_digest(m.ckpt, kb, force);
  if (m.table.defined()) {
    Tensor t = m.table.detach();
    kb.set_embeddings(t);
  }
  return kb;
}

}  // namespace

std::size_t command_annotate(const AnnotateOptions& o, CommandContext& ctx) {
  const KnowledgeBase kb = KnowledgeBase::load_dir(o.kb_dir, 1);
  const Annotator annotator(kb, o.threshold);
  std::vector<AnnotatedDocument> docs;
  std::size_t mentions = 0;
  if (o.tokens_input) {
    for (const auto& d : read_corpus(o.input)) docs.push_back(annotator.annotate(d.tokens));
  } else {
    for (const auto& line : read_lines(o.input)) {
      auto tokens = split_text(line);
      if (tokens.empty()) continue;
      docs.push_back(annotator.annotate(tokens));
    }
  }
  for (const auto& d : docs) mentions += d.mentions.size();
  write_corpus(o.output, docs);
  emit(ctx, {{"event", "annotate"}, {"documents", docs.size()}, {"mentions", mentions},
             {"threshold", o.threshold}});
  *ctx.summary << "annotate: " << docs.size() << " documents, " << mentions << " mentions -> "
               << o.output.string() << "\n";
  return mentions;
}

void command_train_transe(const TranseOptions& o, CommandContext& ctx) {
  KnowledgeBase kb = KnowledgeBase::load_dir(o.kb_dir, o.config.dim);
  TranseModel model = train_transe(kb, o.config, [&](int epoch, double loss) {
    emit(ctx, {{"event", "transe_epoch"}, {"epoch", epoch}, {"loss", loss}});
  });
  save_embeddings(o.out, kb, model.relations, kb.relations());
  const auto triplets = index_triplets(kb);
  const double hits = tail_hits_at_1(model, triplets);
  echo_config(o.out, {{"dim", o.config.dim}, {"epochs", o.config.epochs}, {"lr", o.config.lr},
                      {"batch_size", o.config.batch_size}, {"margin", o.config.margin},
                      {"seed", o.config.seed}});
  emit(ctx, {{"event", "transe_done"}, {"tail_hits_at_1", hits}, {"out", o.out.string()}});
  *ctx.summary << "train-transe: " << kb.size() << " entities, " << triplets.size()
               << " triplets, train tail hits@1 " << hits << " -> " << o.out.string() << "\n";
}

LossReport command_pretrain(const PretrainOptions& o, CommandContext& ctx) {
  RunConfig cfg = o.config;
  cfg.resolve();
  cfg.validate();
  require_artifact(o.corpus, "corpus", "kebio annotate");
  KnowledgeBase kb = KnowledgeBase::load_dir(o.kb_dir, cfg.encoder.entity_dim);
  const auto docs = read_corpus(o.corpus);
  if (docs.empty()) throw DataError(o.corpus.string() + " holds no documents");

  Vocabulary vocab;
  KebioModel model;
  Checkpoint resumed;
  const bool resume = o.resume && fs::exists(o.out);
  if (resume) {
    resumed = load_checkpoint(o.out);
    check_kb_digest(resumed, kb, o.force);
    EncoderConfig wanted = cfg.encoder;
    if (wanted.vocab_size == 0) wanted.vocab_size = resumed.encoder.vocab_size;
    if (config_digest(wanted) != config_digest(resumed.encoder) && !o.force) {
      throw DataError(o.out.string() + " was written with a different encoder configuration; "
                      "pass --force to continue with the checkpoint's configuration");
    }
    vocab = resumed.vocab;
    model = model_from_checkpoint(resumed);
    const Tensor* t = resumed.parameter(kEntityTableName);
    if (t == nullptr) throw DataError(o.out.string() + " has no entity table");
    kb.set_embeddings(t->clone());
  } else {
    vocab = Vocabulary::build(vocabulary_words(docs, kb), cfg.vocab_size);
    cfg.encoder.vocab_size = vocab.size();
    Rng rng(Rng::derive(cfg.seed, {0x30de1}));
    model = KebioModel(cfg.encoder, rng);
    if (cfg.pretrain.entity_init == EntityInit::kTranse) {
      if (o.embeddings.empty()) {
        throw UsageError("pretrain: transe initialisation needs --embeddings FILE; produce it with "
                         "`kebio train-transe --kb DIR --out FILE` or pass --init-embeddings random");
      }
      require_artifact(o.embeddings, "entity embeddings", "kebio train-transe");
      load_embeddings(o.embeddings, kb, o.force);
    } else {
      Rng erng(Rng::derive(cfg.seed, {0xe11}));
      kb.set_embeddings(random_entity_table(kb.size(), cfg.encoder.entity_dim, erng));
    }
  }

  const Tokenizer tokenizer(vocab);
  std::vector<TokenizedInput> inputs;
  for (const auto& d : docs) inputs.push_back(tokenizer.encode_document(d, &kb, model.config().max_seq_len));

  Pretrainer trainer(model, kb, std::move(inputs), cfg.pretrain);
  if (resume) {
    trainer.optimizer().load_state(resumed.optimizer_state, resumed.optimizer_steps);
    trainer.set_step(resumed.step);
  }

  json resolved = json::parse(to_json(cfg));
  resolved["encoder"]["vocab_size"] = model.config().vocab_size;
  echo_config(o.out, resolved);
  emit(ctx, {{"event", "pretrain_start"}, {"step", trainer.step()}, {"stop_step", cfg.stop_step()},
             {"vocab_size", vocab.size()}, {"entities", kb.size()},
             {"l0", model.config().l0}, {"l1", model.config().l1},
             {"entity_init", cfg.pretrain.entity_init == EntityInit::kTranse ? "transe" : "random"},
             {"freeze_entity_embeddings", cfg.pretrain.freeze_entity_embeddings},
             {"whole_entity_masking", cfg.pretrain.whole_entity_masking}});

  auto save = [&] {
    Checkpoint ck = make_checkpoint(model, vocab, kb.embeddings(), kb.order_digest());
    ck.optimizer_state = trainer.optimizer().state();
    ck.optimizer_steps = trainer.optimizer().steps();
    ck.step = trainer.step();
    ck.run_config = resolved.dump();
    save_checkpoint(o.out, ck);
  };

  LossReport last;
  last.step = -1;
  while (trainer.step() < cfg.stop_step()) {
    last = trainer.train_step();
    emit(ctx, {{"event", "step"}, {"step", last.step}, {"L", last.total}, {"L_MLM", last.mlm},
               {"L_ED", last.ed}, {"L_EL", last.el}, {"lr", last.lr}, {"grad_norm", last.grad_norm}});
    if (o.save_every > 0 && trainer.step() % o.save_every == 0) save();
  }
  save();
  *ctx.summary << "pretrain: reached step " << trainer.step();
  if (last.step >= 0) {
    *ctx.summary << " (L=" << last.total << " MLM=" << last.mlm << " ED=" << last.ed
                 << " EL=" << last.el << ")";
  }
  *ctx.summary << " -> " << o.out.string() << "\n";
  return last;
}

void command_finetune_ner(const FinetuneOptions& o, CommandContext& ctx) {
  LoadedModel m = load_model(o.checkpoint);
  const auto kb = task_kb(o.kb_dir, m, o.force);
  const auto train = read_conll(o.train);
  const auto dev = o.dev.empty() ? std::vector<NerExample>{} : read_conll(o.dev);
  FinetuneConfig fc = o.config.finetune;
  fc.seed = o.config.seed;
  NerTagger tagger(m.model, m.tokenizer, kb ? &*kb : nullptr, fc);
  const NerResult r = tagger.fit(train, dev);
  json report = {{"task", "ner"}, {"best_dev_f1", r.best_dev_f1}, {"best_epoch", r.best_epoch},
                 {"lr", r.best_lr}, {"dev_f1_per_epoch", r.dev_f1},
                 {"use_entity_memory", fc.use_entity_memory}};
  if (!o.test.empty()) report["test_f1"] = tagger.evaluate(read_conll(o.test)).f1;
  if (!o.out.empty()) write_file_atomic(o.out, report.dump(2) + "\n");
  report["event"] = "finetune_ner";
  emit(ctx, report);
  *ctx.summary << "finetune-ner: best dev F1 " << r.best_dev_f1 << " at epoch " << r.best_epoch
               << " (lr " << r.best_lr << ")\n";
}

void command_finetune_re(const FinetuneOptions& o, CommandContext& ctx) {
  LoadedModel m = load_model(o.checkpoint);
  const auto kb = task_kb(o.kb_dir, m, o.force);
  const auto train = read_re_jsonl(o.train);
  const auto dev = o.dev.empty() ? std::vector<ReExample>{} : read_re_jsonl(o.dev);
  std::vector<std::string> labels;
  for (const auto& ex : train) {
    if (std::find(labels.begin(), labels.end(), ex.label) == labels.end()) labels.push_back(ex.label);
  }
  std::sort(labels.begin(), labels.end());
  FinetuneConfig fc = o.config.finetune;
  fc.seed = o.config.seed;
  RelationClassifier clf(m.model, m.tokenizer, kb ? &*kb : nullptr, labels,
                         o.config.re_negative_label, fc);
  clf.register_indicators(train);
  clf.register_indicators(dev);
  const ReResult r = clf.fit(train, dev);
  json report = {{"task", "re"}, {"best_dev_micro_f1", r.best_dev_score},
                 {"train_accuracy", r.train_accuracy}, {"best_epoch", r.best_epoch},
                 {"lr", r.best_lr}, {"labels", labels},
                 {"negative_label", o.config.re_negative_label},
                 {"use_entity_memory", fc.use_entity_memory}};
  if (!o.test.empty()) {
    const auto test = read_re_jsonl(o.test);
    clf.register_indicators(test);
    report["test_micro_f1"] = clf.evaluate(test).f1;
  }
  if (!o.out.empty()) write_file_atomic(o.out, report.dump(2) + "\n");
  report["event"] = "finetune_re";
  emit(ctx, report);
  *ctx.summary << "finetune-re: best dev micro-F1 " << r.best_dev_score << ", train accuracy "
               << r.train_accuracy << "\n";
}

std::size_t command_probe_gen(const ProbeGenOptions& o, CommandContext& ctx) {
  const KnowledgeBase kb = KnowledgeBase::load_dir(o.kb_dir, 1);
  const auto queries = generate_queries(kb, o.seed, o.max_per_relation);
  write_queries(o.out, queries);
  std::size_t type1 = 0;
  for (const auto& q : queries) type1 += q.type == 1;
  echo_config(o.out, {{"seed", o.seed}, {"max_per_relation", o.max_per_relation},
                      {"kb", o.kb_dir.string()}});
  emit(ctx, {{"event", "probe_gen"}, {"queries", queries.size()}, {"type1", type1},
             {"relations", kb.relations().size()}});
  *ctx.summary << "probe-gen: " << queries.size() << " queries (" << type1 << " type 1) -> "
               << o.out.string() << "\n";
  return queries.size();
}

RecallReport command_probe_eval(const ProbeEvalOptions& o, CommandContext& ctx) {
  LoadedModel m = load_model(o.checkpoint);
  require_artifact(o.queries, "queries", "kebio probe-gen");
  if (o.kb_dir.empty()) throw UsageError("probe-eval: --kb is required to match answer synonyms");
  const auto kb = task_kb(o.kb_dir, m, o.force);
  const auto queries = read_queries(o.queries);
  const ModelScorer scorer(m.model, kb->embeddings());
  RecallOptions opts;
  opts.beam = o.beam;
  opts.max_len = o.max_len;
  opts.max_seq_len = m.model.config().max_seq_len;
  const RecallReport report = evaluate_recall(scorer, m.tokenizer, queries, *kb, opts);
  if (!o.report.empty()) write_file_atomic(o.report, recall_report_json(report) + "\n");
  emit(ctx, {{"event", "probe_eval"}, {"macro_recall_at_5", report.macro},
             {"macro_recall_type1", report.macro_type1}, {"macro_recall_type2", report.macro_type2},
             {"queries", report.queries}, {"beam", o.beam}, {"max_len", o.max_len}});
  *ctx.summary << "probe-eval: macro recall@5 " << report.macro << " over "
               << report.relations.size() << " relations (type1 " << report.macro_type1
               << ", type2 " << report.macro_type2 << ")\n";
  return report;
}

namespace {

fs::path lock_dir_for(const fs::path& out) {
  const fs::path parent = out.parent_path();
  return parent.empty() ? fs::path(".") : parent;
}

RunConfig base_config(const std::string& config_path) {
  RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
  cfg.resolve();
  return cfg;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"kebio: knowledge-enhanced masked language model toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "kebio 0.1.0");

  // annotate
  AnnotateOptions ann;
  std::uint64_t ann_seed = 0;
  auto* c_ann = app.add_subcommand("annotate", "Link KB mentions in text; writes corpus JSONL");
  c_ann->add_option("--kb", ann.kb_dir, "KB directory (lexicon.tsv, triplets.tsv)")->required();
  c_ann->add_option("--input", ann.input, "Raw text, one document per line")->required();
  c_ann->add_option("--out,--output", ann.output, "Corpus JSONL to write")->required();
  c_ann->add_option("--threshold", ann.threshold, "Link score threshold")->capture_default_str();
  c_ann->add_flag("--tokens", ann.tokens_input, "Input is corpus JSONL instead of raw text");
  c_ann->add_option("--seed", ann_seed, "Accepted for uniformity; annotation is deterministic");

  // train-transe
  TranseOptions tr;
  std::string tr_config;
  std::optional<std::uint64_t> tr_seed;
  std::optional<int> tr_epochs;
  std::optional<double> tr_lr;
  std::optional<std::size_t> tr_dim;
  auto* c_tr = app.add_subcommand("train-transe", "Train TransE entity embeddings from KB triplets");
  c_tr->add_option("--kb", tr.kb_dir, "KB directory")->required();
  c_tr->add_option("--out", tr.out, "Embedding container to write")->required();
  c_tr->add_option("--config", tr_config, "Run config JSON");
  c_tr->add_option("--seed", tr_seed, "Random seed");
  c_tr->add_option("--epochs", tr_epochs, "Training epochs");
  c_tr->add_option("--lr", tr_lr, "Learning rate");
  c_tr->add_option("--dim", tr_dim, "Embedding dimension");

  // pretrain
  PretrainOptions pt;
  std::string pt_config, pt_init;
  bool pt_freeze = false, pt_no_wem = false, pt_no_mem = false;
  std::optional<std::size_t> pt_l0, pt_l1, pt_batch;
  std::optional<std::uint64_t> pt_seed;
  std::optional<std::int64_t> pt_steps;
  std::optional<double> pt_lr;
  auto* c_pt = app.add_subcommand("pretrain", "Joint MLM + entity detection + linking pretraining");
  c_pt->add_option("--corpus", pt.corpus, "Annotated corpus JSONL")->required();
  c_pt->add_option("--kb", pt.kb_dir, "KB directory")->required();
  c_pt->add_option("--config", pt_config, "Run config JSON");
  c_pt->add_option("--embeddings", pt.embeddings, "TransE embedding container");
  c_pt->add_option("--init-embeddings", pt_init, "transe or random")
      ->check(CLI::IsMember({"transe", "random"}));
  c_pt->add_flag("--freeze-embeddings", pt_freeze, "Keep the entity table fixed");
  c_pt->add_flag("--no-whole-entity-masking", pt_no_wem, "Mask whole words only");
  c_pt->add_flag("--no-entity-memory", pt_no_mem, "Disable retrieval and fusion");
  c_pt->add_option("--l0", pt_l0, "Text-only layers");
  c_pt->add_option("--l1", pt_l1, "Fusion layers");
  c_pt->add_option("--seed", pt_seed, "Random seed");
  c_pt->add_option("--steps", pt_steps, "Stop after this many optimizer steps in total");
  c_pt->add_option("--lr", pt_lr, "Peak learning rate");
  c_pt->add_option("--batch-size", pt_batch, "Sequences per step");
  c_pt->add_option("--save-every", pt.save_every, "Checkpoint every N steps");
  c_pt->add_option("--out", pt.out, "Checkpoint to write")->required();
  c_pt->add_flag("--resume", pt.resume, "Continue from the checkpoint at --out");
  c_pt->add_flag("--force", pt.force, "Ignore digest mismatches");

  // finetune-ner / finetune-re
  auto add_finetune = [&](const char* name, const char* help, FinetuneOptions& f, std::string& cfg,
                          std::optional<double>& lr, std::optional<int>& epochs,
                          std::optional<std::uint64_t>& seed, bool& search, bool& no_mem) {
    auto* c = app.add_subcommand(name, help);
    c->add_option("--checkpoint", f.checkpoint, "Pretrained checkpoint")->required();
    c->add_option("--kb", f.kb_dir, "KB directory (enables entity-memory fusion)");
    c->add_option("--train", f.train, "Training data")->required();
    c->add_option("--dev", f.dev, "Development data (model selection)");
    c->add_option("--test", f.test, "Test data");
    c->add_option("--config", cfg, "Run config JSON");
    c->add_option("--lr", lr, "Learning rate");
    c->add_option("--epochs", epochs, "Epochs");
    c->add_flag("--search", search, "Sweep learning rates 1e-5, 3e-5, 5e-5");
    c->add_flag("--no-entity-memory", no_mem, "Bypass the entity memory");
    c->add_option("--seed", seed, "Random seed");
    c->add_option("--out", f.out, "Report JSON");
    c->add_flag("--force", f.force, "Ignore KB digest mismatch");
    return c;
  };
  FinetuneOptions ner, re;
  std::string ner_cfg, re_cfg;
  std::optional<double> ner_lr, re_lr;
  std::optional<int> ner_epochs, re_epochs;
  std::optional<std::uint64_t> ner_seed, re_seed;
  bool ner_search = false, re_search = false, ner_no_mem = false, re_no_mem = false;
  std::string re_negative;
  auto* c_ner = add_finetune("finetune-ner", "Fine-tune a BIO tagger (CoNLL two-column input)", ner,
                             ner_cfg, ner_lr, ner_epochs, ner_seed, ner_search, ner_no_mem);
  auto* c_re = add_finetune("finetune-re", "Fine-tune a relation classifier (JSONL input)", re,
                            re_cfg, re_lr, re_epochs, re_seed, re_search, re_no_mem);
  c_re->add_option("--negative-label", re_negative, "Label excluded from micro-F1");

  // probe-gen / probe-eval
  ProbeGenOptions pg;
  auto* c_pg = app.add_subcommand("probe-gen", "Generate cloze probing queries from KB triplets");
  c_pg->add_option("--kb", pg.kb_dir, "KB directory")->required();
  c_pg->add_option("--seed", pg.seed, "Sampling seed");
  c_pg->add_option("--max-per-relation", pg.max_per_relation, "Query cap per relation")
      ->capture_default_str();
  c_pg->add_option("--out", pg.out, "Queries JSONL")->required();

  ProbeEvalOptions pe;
  std::uint64_t pe_seed = 0;
  auto* c_pe = app.add_subcommand("probe-eval", "Decode probing queries and report macro recall@5");
  c_pe->add_option("--checkpoint", pe.checkpoint, "Model checkpoint")->required();
  c_pe->add_option("--queries", pe.queries, "Queries JSONL")->required();
  c_pe->add_option("--kb", pe.kb_dir, "KB directory (answer synonyms)")->required();
  c_pe->add_option("--beam", pe.beam, "Beam width")->capture_default_str();
  c_pe->add_option("--max-len", pe.max_len, "Largest mask count")->capture_default_str()
      ->check(CLI::Range(1, 10));
  c_pe->add_option("--report", pe.report, "Report JSON");
  c_pe->add_option("--seed", pe_seed, "Accepted for uniformity; decoding is deterministic");
  c_pe->add_flag("--force", pe.force, "Ignore KB digest mismatch");

  // pipeline
  PipelineOptions pl;
  std::string pl_config;
  std::optional<std::uint64_t> pl_seed;
  std::optional<std::size_t> pl_l0, pl_l1;
  auto* c_pl = app.add_subcommand("pipeline", "Run every stage from raw text to a probe report");
  c_pl->add_option("--config", pl_config, "Run config JSON")->required();
  c_pl->add_option("--out", pl.out_dir, "Output directory")->required();
  c_pl->add_option("--seed", pl_seed, "Random seed");
  c_pl->add_option("--l0", pl_l0, "Text-only layers");
  c_pl->add_option("--l1", pl_l1, "Fusion layers");
  c_pl->add_flag("--resume", pl.resume, "Skip stages whose artifact already exists");
  c_pl->add_flag("--force", pl.force, "Ignore digest mismatches");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  CommandContext ctx = default_context();
  try {
    if (c_ann->parsed()) {
      DirLock lock(lock_dir_for(ann.output));
      command_annotate(ann, ctx);
    } else if (c_tr->parsed()) {
      RunConfig cfg = base_config(tr_config);
      if (tr_seed) cfg.seed = *tr_seed;
      if (tr_dim) cfg.encoder.entity_dim = *tr_dim;
      cfg.resolve();
      tr.config = cfg.transe;
      if (tr_epochs) tr.config.epochs = *tr_epochs;
      if (tr_lr) tr.config.lr = *tr_lr;
      DirLock lock(lock_dir_for(tr.out));
      command_train_transe(tr, ctx);
    } else if (c_pt->parsed()) {
      RunConfig cfg = base_config(pt_config);
      if (!pt_init.empty()) cfg.pretrain.entity_init = pt_init == "transe" ? EntityInit::kTranse : EntityInit::kRandom;
      if (pt_freeze) cfg.pretrain.freeze_entity_embeddings = true;
      if (pt_no_wem) cfg.pretrain.whole_entity_masking = false;
      if (pt_no_mem) cfg.encoder.use_entity_memory = false;
      if (pt_l0) cfg.encoder.l0 = *pt_l0;
      if (pt_l1) cfg.encoder.l1 = *pt_l1;
      if (pt_seed) cfg.seed = *pt_seed;
      if (pt_steps) cfg.steps = *pt_steps;
      if (pt_lr) cfg.pretrain.lr = *pt_lr;
      if (pt_batch) cfg.pretrain.batch_size = *pt_batch;
      cfg.resolve();
      pt.config = cfg;
      DirLock lock(lock_dir_for(pt.out));
      command_pretrain(pt, ctx);
    } else if (c_ner->parsed() || c_re->parsed()) {
      const bool is_ner = c_ner->parsed();
      FinetuneOptions& f = is_ner ? ner : re;
      RunConfig cfg = base_config(is_ner ? ner_cfg : re_cfg);
      const auto& lr = is_ner ? ner_lr : re_lr;
      const auto& epochs = is_ner ? ner_epochs : re_epochs;
      const auto& seed = is_ner ? ner_seed : re_seed;
      if (lr) cfg.finetune.lr = *lr;
      if (epochs) cfg.finetune.epochs = *epochs;
      if (seed) cfg.seed = *seed;
      if (is_ner ? ner_search : re_search) cfg.finetune.search = true;
      if (is_ner ? ner_no_mem : re_no_mem) cfg.finetune.use_entity_memory = false;
      if (!is_ner && !re_negative.empty()) cfg.re_negative_label = re_negative;
      cfg.resolve();
      cfg.finetune.validate();
      f.config = cfg;
      std::optional<DirLock> lock;
      if (!f.out.empty()) lock.emplace(lock_dir_for(f.out));
      emit(ctx, {{"event", "finetune_start"}, {"task", is_ner ? "ner" : "re"},
                 {"use_entity_memory", cfg.finetune.use_entity_memory},
                 {"search", cfg.finetune.search}, {"lr", cfg.finetune.lr}});
      is_ner ? command_finetune_ner(f, ctx) : command_finetune_re(f, ctx);
    } else if (c_pg->parsed()) {
      DirLock lock(lock_dir_for(pg.out));
      command_probe_gen(pg, ctx);
    } else if (c_pe->parsed()) {
      std::optional<DirLock> lock;
      if (!pe.report.empty()) lock.emplace(lock_dir_for(pe.report));
      command_probe_eval(pe, ctx);
    } else if (c_pl->parsed()) {
      RunConfig cfg = base_config(pl_config);
      if (pl_seed) cfg.seed = *pl_seed;
      if (pl_l0) cfg.encoder.l0 = *pl_l0;
      if (pl_l1) cfg.encoder.l1 = *pl_l1;
      cfg.resolve();
      pl.config = cfg;
      DirLock lock(pl.out_dir);
      run_pipeline(pl, ctx);
    }
  } catch (const ValidationError& e) {
    *ctx.summary << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    *ctx.summary << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace kebio::inline KEBIO_PRECISION_NS
