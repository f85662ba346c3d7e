#include <cerrno>
#include <cstdio>
#include <cstring>
#include <iostream>

#include "kebio/cli/commands.hpp"
#include "kebio/cli/container.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

CommandContext default_context() { return {&std::cout, &std::cerr}; }

DirLock::DirLock(const fs::path& dir) {
  fs::create_directories(dir);
  file_ = dir / ".kebio.lock";
  // "x" makes fopen fail if the file exists: creation is the atomic claim.
  std::FILE* f = std::fopen(file_.c_str(), "wx");
  if (f == nullptr) {
    const int err = errno;
    file_.clear();
    if (err == EEXIST) {
      throw UsageError("another kebio command is using " + dir.string() + " (lock file " +
                       (dir / ".kebio.lock").string() + "); remove it if that run is gone");
    }
    throw IoError("cannot create lock in " + dir.string() + ": " + std::strerror(err));
  }
  std::fclose(f);
}

DirLock::~DirLock() {
  if (!file_.empty()) {
    std::error_code ec;
    fs::remove(file_, ec);
  }
}

void require_artifact(const fs::path& path, std::string_view what, std::string_view producer) {
  if (!fs::exists(path)) {
    throw DataError("missing " + std::string(what) + " " + path.string() + "; produce it with `" +
                    std::string(producer) + "`");
  }
}

void run_pipeline(const PipelineOptions& o, CommandContext& ctx) {
  RunConfig cfg = o.config;
  cfg.resolve();
  cfg.validate();
  if (cfg.paths.kb_dir.empty()) throw ConfigError("pipeline: paths.kb_dir is required");
  if (cfg.paths.raw_text.empty()) throw ConfigError("pipeline: paths.raw_text is required");
  const fs::path out = o.out_dir;
  fs::create_directories(out);
  const fs::path corpus = out / "corpus.jsonl";
  const fs::path embeddings = out / "entity_embeddings.bin";
  const fs::path model = out / "model.ckpt";
  const fs::path queries = out / "queries.jsonl";
  const fs::path report = out / "probe_report.json";
  write_file_atomic(out / "resolved_config.json", to_json(cfg) + "\n");

  auto stage = [&](const char* name, const fs::path& artifact, auto&& body) {
    if (o.resume && fs::exists(artifact)) {
      *ctx.log << R"({"event":"stage_skipped","stage":")" << name << R"(","artifact":")"
               << artifact.string() << "\"}\n";
      return;
    }
    *ctx.log << R"({"event":"stage_start","stage":")" << name << "\"}\n";
    body();
    *ctx.log << R"({"event":"stage_done","stage":")" << name << "\"}\n";
  };

  stage("annotate", corpus, [&] {
    command_annotate({cfg.paths.kb_dir, cfg.paths.raw_text, corpus, cfg.annotate_threshold, false}, ctx);
  });
  const bool transe = cfg.pretrain.entity_init == EntityInit::kTranse;
  if (transe) {
    stage("train-transe", embeddings, [&] {
      command_train_transe({cfg.paths.kb_dir, embeddings, cfg.transe}, ctx);
    });
  }
  stage("pretrain", model, [&] {
    PretrainOptions p;
    p.config = cfg;
    p.corpus = corpus;
    p.kb_dir = cfg.paths.kb_dir;
    if (transe) p.embeddings = embeddings;
    p.out = model;
    p.force = o.force;
    command_pretrain(p, ctx);
  });
  if (!cfg.paths.ner_train.empty()) {
    stage("finetune-ner", out / "ner_report.json", [&] {
      command_finetune_ner({cfg, model, cfg.paths.kb_dir, cfg.paths.ner_train, cfg.paths.ner_dev,
                            cfg.paths.ner_test, out / "ner_report.json", o.force},
                           ctx);
    });
  }
  if (!cfg.paths.re_train.empty()) {
    stage("finetune-re", out / "re_report.json", [&] {
      command_finetune_re({cfg, model, cfg.paths.kb_dir, cfg.paths.re_train, cfg.paths.re_dev,
                           cfg.paths.re_test, out / "re_report.json", o.force},
                          ctx);
    });
  }
  stage("probe-gen", queries, [&] {
    command_probe_gen({cfg.paths.kb_dir, queries, cfg.seed, cfg.probe.max_per_relation}, ctx);
  });
  stage("probe-eval", report, [&] {
    command_probe_eval({model, queries, cfg.paths.kb_dir, report, cfg.probe.beam, cfg.probe.max_len,
                        o.force},
                       ctx);
  });
}

}  // namespace kebio::inline KEBIO_PRECISION_NS
