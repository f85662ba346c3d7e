#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "kebio/cli/run_config.hpp"
#include "kebio/pretrain/trainer.hpp"
#include "kebio/probe/recall.hpp"

namespace kebio::inline KEBIO_PRECISION_NS {

namespace fs = std::filesystem;

/// Where commands report: JSON lines to `log`, a human summary to `summary`.
struct CommandContext {
  std::ostream* log;
  std::ostream* summary;
};
CommandContext default_context();

/// Exclusive claim on a directory for one command process. The lock file is
/// created atomically and removed on destruction.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir);
  ~DirLock();
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path file_;
};

/// DataError naming the command that produces a missing input.
void require_artifact(const fs::path& path, std::string_view what, std::string_view producer);

struct AnnotateOptions {
  fs::path kb_dir, input, output;
  double threshold = 0.85;
  bool tokens_input = false;  // input is corpus JSONL; existing mentions are replaced
};
std::size_t command_annotate(const AnnotateOptions& o, CommandContext& ctx);

struct TranseOptions {
  fs::path kb_dir, out;
  TranseConfig config;
};
void command_train_transe(const TranseOptions& o, CommandContext& ctx);

struct PretrainOptions {
  RunConfig config;
  fs::path corpus, kb_dir, embeddings, out;
  bool resume = false;
  bool force = false;
  std::int64_t save_every = 0;  // 0 = only at the end
};
/// Returns the report of the last step taken (step = -1 when none).
LossReport command_pretrain(const PretrainOptions& o, CommandContext& ctx);

struct FinetuneOptions {
  RunConfig config;
  fs::path checkpoint, kb_dir, train, dev, test, out;
  bool force = false;
};
void command_finetune_ner(const FinetuneOptions& o, CommandContext& ctx);
void command_finetune_re(const FinetuneOptions& o, CommandContext& ctx);

struct ProbeGenOptions {
  fs::path kb_dir, out;
  std::uint64_t seed = 0;
  std::size_t max_per_relation = 200;
};
std::size_t command_probe_gen(const ProbeGenOptions& o, CommandContext& ctx);

struct ProbeEvalOptions {
  fs::path checkpoint, queries, kb_dir, report;
  std::size_t beam = 5;
  std::size_t max_len = 10;
  bool force = false;
};
RecallReport command_probe_eval(const ProbeEvalOptions& o, CommandContext& ctx);

struct PipelineOptions {
  RunConfig config;
  fs::path out_dir;
  bool resume = false;  // keep artifacts already present in out_dir
  bool force = false;
};
/// annotate -> train-transe -> pretrain -> [finetune-ner] -> [finetune-re] ->
/// probe-gen -> probe-eval, all inside out_dir.
void run_pipeline(const PipelineOptions& o, CommandContext& ctx);

/// Entry point of the `kebio` binary; returns the process exit code
/// (0 ok, 1 validation error, 2 runtime failure).
int run_cli(int argc, char** argv);

}  // namespace kebio::inline KEBIO_PRECISION_NS
