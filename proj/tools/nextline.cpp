// nextline: train, query, serve and evaluate next-line suggestion bundles.

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "nextline/error.hpp"
#include "nextline/evalbench.hpp"
#include "nextline/http.hpp"
#include "nextline/pipeline.hpp"
#include "nextline/rss.hpp"
#include "nextline/service.hpp"

extern char** environ;

namespace fs = std::filesystem;
using namespace nextline;

namespace {

struct TrainFlags {
  std::string separator = "blank_line";
  std::string comment_marker = "#";
  std::vector<std::string> extensions = {".py"};
};

void add_pipeline_flags(CLI::App* cmd, PipelineConfig& cfg, TrainFlags& flags) {
  cmd->add_option("--p", cfg.walk.p, "Return parameter")->capture_default_str();
  cmd->add_option("--q", cfg.walk.q, "In-out parameter")->capture_default_str();
  cmd->add_option("--num-walks", cfg.walk.num_walks, "Walks per node")->capture_default_str();
  cmd->add_option("--walk-length", cfg.walk.walk_length, "Nodes per walk")->capture_default_str();
  cmd->add_option("--dim", cfg.train.vector_size, "Embedding dimension")->capture_default_str();
  cmd->add_option("--window", cfg.train.window, "Skip-gram window")->capture_default_str();
  cmd->add_option("--min-count", cfg.train.min_count, "Minimum line count (1 keeps every line)")->capture_default_str();
  cmd->add_option("--epochs", cfg.train.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--workers", cfg.train.workers, "Training threads (1 = reproducible)")->capture_default_str();
  cmd->add_option("--lr", cfg.train.initial_lr, "Initial learning rate")->capture_default_str();
  cmd->add_option("--top-n", cfg.top_n, "Most frequent lines to index")->capture_default_str();
  cmd->add_option("--shard-size", cfg.max_edges_per_shard, "Maximum edges per shard")->capture_default_str();
  cmd->add_option("--pca-fit-cap", cfg.pca_fit_cap, "Maximum lines used to fit the PCA")->capture_default_str();
  cmd->add_option("--separator", flags.separator, "Block separator: blank_line or none")->capture_default_str();
  cmd->add_option("--comment-marker", flags.comment_marker, "Line comment marker")->capture_default_str();
  cmd->add_option("--ext", flags.extensions, "Source file extensions")->capture_default_str();
  cmd->add_option_function<std::uint64_t>(
         "--seed", [&cfg](std::uint64_t s) { cfg.walk.seed = cfg.train.seed = s; }, "Seed for walks and training");
}

void apply_flags(PipelineConfig& cfg, const TrainFlags& flags) {
  cfg.separator = parse_separator(flags.separator);
  cfg.profile.line_comment_marker = flags.comment_marker;
  cfg.profile.file_extensions = flags.extensions;
}

int exit_code(ErrorKind kind) { return 2 + static_cast<int>(kind); }

// Runs `query-session` in a child process and samples its resident memory
// from here, so the numbers exclude the training that happened in this one.
QuerySessionResult query_session_subprocess(const fs::path& dir, std::size_t queries, std::uint64_t seed) {
  int out_pipe[2];
  if (::pipe(out_pipe) != 0) fail(ErrorKind::Io, "pipe failed");
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
  posix_spawn_file_actions_addclose(&actions, out_pipe[0]);

  const std::string self = fs::read_symlink("/proc/self/exe").string();
  std::vector<std::string> args = {self, "query-session", "--artifacts", dir.string(),
                                   "--queries", std::to_string(queries), "--seed", std::to_string(seed)};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);

  pid_t pid = 0;
  const int rc = ::posix_spawn(&pid, self.c_str(), &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(out_pipe[0]);
    fail(ErrorKind::Io, "cannot spawn query session");
  }

  RssSampler sampler(pid, std::chrono::milliseconds(20));
  std::string output;
  char buf[4096];
  ssize_t n;
  while ((n = ::read(out_pipe[0], buf, sizeof(buf))) > 0) output.append(buf, static_cast<std::size_t>(n));
  ::close(out_pipe[0]);
  int status = 0;
  ::waitpid(pid, &status, 0);
  const std::size_t peak = sampler.stop();
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) fail(ErrorKind::Internal, "query session failed for " + dir.string());

  const auto j = nlohmann::json::parse(output);
  QuerySessionResult r;
  r.queries = j.at("queries").get<std::size_t>();
  r.mean_seconds = j.at("mean_seconds").get<double>();
  r.peak_resident_bytes = std::max(peak, j.at("peak_resident_bytes").get<std::size_t>());
  return r;
}

ReportFormat parse_format(const std::string& s) {
  if (s == "json") return ReportFormat::Json;
  if (s == "csv") return ReportFormat::Csv;
  fail(ErrorKind::Config, "unknown report format '" + s + "'");
}

template <class Emit>
void write_report(const std::string& output, Emit&& emit) {
  if (output.empty() || output == "-") {
    emit(std::cout);
    return;
  }
  std::ofstream out(output, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + output);
  emit(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Next-line code suggestions from line-transition graph embeddings"};
  app.require_subcommand(1);

  // train
  PipelineConfig train_cfg;
  TrainFlags train_flags;
  std::string corpus, out_dir, text_embeddings, work_dir;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "Build an artifact bundle from a corpus directory");
  train->add_option("--corpus", corpus, "Corpus directory")->required();
  train->add_option("--out", out_dir, "Artifact directory to write")->required();
  train->add_option("--text-embeddings", text_embeddings, "Precomputed text embeddings (NLTE file)");
  train->add_option("--work-dir", work_dir, "Keep edge shards and vocabulary here");
  train->add_flag("--holdout", train_cfg.holdout, "Leave every tenth file out for evaluation");
  train->add_flag("--quiet", quiet, "No progress output");
  add_pipeline_flags(train, train_cfg, train_flags);

  // suggest
  std::string artifacts, line;
  std::size_t k = 10;
  auto* sug = app.add_subcommand("suggest", "Print next-line suggestions for one line");
  sug->add_option("--artifacts", artifacts, "Artifact directory")->required();
  sug->add_option("--line", line, "Current code line")->required();
  sug->add_option("--k", k, "Number of suggestions")->capture_default_str();

  // serve
  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve suggestions over HTTP/JSON under /v1");
  serve->add_option("--artifacts", artifacts, "Artifact directory")->required();
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--port", port, "Port (0 picks a free one)")->capture_default_str();

  // eval
  std::string format = "json", output, eval_separator = "blank_line";
  bool eval_holdout = false;
  auto* eval = app.add_subcommand("eval", "Top-1/3/10 accuracy over a corpus's transitions");
  eval->add_option("--artifacts", artifacts, "Artifact directory")->required();
  eval->add_option("--corpus", corpus, "Corpus directory")->required();
  eval->add_flag("--holdout", eval_holdout, "Evaluate only the held-out tenth of the files");
  eval->add_option("--separator", eval_separator, "Block separator: blank_line or none")->capture_default_str();
  eval->add_option("--format", format, "json or csv")->capture_default_str();
  eval->add_option("--output", output, "Report file (default stdout)");

  // bench
  BenchConfig bench_cfg;
  bench_cfg.vocab_sizes = {25'000, 50'000, 100'000, 200'000};
  bench_cfg.pipeline.train.epochs = 1;
  bench_cfg.pipeline.walk.num_walks = 1;
  TrainFlags bench_flags;
  std::string bench_dir;
  bool in_process = false;
  auto* bench = app.add_subcommand("bench", "Artifact size, memory and latency against vocabulary size");
  bench->add_option("--sizes", bench_cfg.vocab_sizes, "Vocabulary sizes, ascending")->capture_default_str();
  bench->add_option("--queries", bench_cfg.queries, "Timed queries per size")->capture_default_str();
  bench->add_option("--chain-length", bench_cfg.generator.chain_length, "Synthetic chain length")->capture_default_str();
  bench->add_option("--chains-per-file", bench_cfg.generator.chains_per_file, "Synthetic chains per file")->capture_default_str();
  bench->add_option("--repeats", bench_cfg.generator.repeats, "Times each chain repeats")->capture_default_str();
  bench->add_option("--work-dir", bench_dir, "Where bundles are built (default: temp dir)");
  bench->add_flag("--keep", bench_cfg.keep_bundles, "Keep the bundles");
  bench->add_flag("--in-process", in_process, "Measure queries in this process instead of a child");
  bench->add_option("--format", format, "json or csv")->capture_default_str();
  bench->add_option("--output", output, "Report file (default stdout)");
  add_pipeline_flags(bench, bench_cfg.pipeline, bench_flags);

  // query-session: child side of `bench`
  std::size_t queries = 1000;
  std::uint64_t seed = 7;
  auto* session = app.add_subcommand("query-session", "Time suggest calls on a bundle (used by bench)");
  session->group("");
  session->add_option("--artifacts", artifacts)->required();
  session->add_option("--queries", queries);
  session->add_option("--seed", seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      apply_flags(train_cfg, train_flags);
      if (!text_embeddings.empty()) train_cfg.text_embeddings = text_embeddings;
      if (!work_dir.empty()) train_cfg.work_dir = work_dir;
      train_cfg.verbose = !quiet;
      const TrainSummary s = train_bundle(corpus, out_dir, train_cfg);
      std::cout << "trained " << s.vocab_size << " lines (" << s.indexed << " indexed) from " << s.files
                << " files; " << s.edges << " edges, " << s.walks << " walks; " << s.artifact_bytes
                << " artifact bytes in " << out_dir << "\n";
    } else if (*sug) {
      const ArtifactBundle bundle = ArtifactBundle::load(artifacts);
      const SuggestResult r = suggest(bundle, line, k);
      if (r.oov) std::cerr << "out of vocabulary; using closest known line: " << r.anchor_line << "\n";
      for (const auto& s : r.suggestions) std::cout << s.rank << '\t' << s.distance << '\t' << s.line << '\n';
    } else if (*serve) {
      const ArtifactBundle bundle = ArtifactBundle::load(artifacts);
      serve_http(bundle, host, port);
    } else if (*eval) {
      const ArtifactBundle bundle = ArtifactBundle::load(artifacts);
      auto files = scan_corpus(corpus, bundle.profile());
      if (eval_holdout) files = split_holdout(files).test;
      const auto sequences = read_corpus(files, bundle.profile(), parse_separator(eval_separator));
      const EvalReport report = evaluate_topk(bundle, sequences);
      const ReportFormat fmt = parse_format(format);
      write_report(output, [&](std::ostream& o) { emit_report(report, fmt, o); });
    } else if (*bench) {
      apply_flags(bench_cfg.pipeline, bench_flags);
      const ReportFormat fmt = parse_format(format);
      bench_cfg.work_root = bench_dir.empty() ? fs::temp_directory_path() / ("nextline-bench-" + std::to_string(::getpid()))
                                              : fs::path(bench_dir);
      if (!in_process) {
        const std::uint64_t s = bench_cfg.generator.seed;
        bench_cfg.runner = [s](const fs::path& dir, std::size_t q) { return query_session_subprocess(dir, q, s); };
      }
      const auto rows = bench_scaling(bench_cfg);
      if (bench_dir.empty() && !bench_cfg.keep_bundles) fs::remove_all(bench_cfg.work_root);
      write_report(output, [&](std::ostream& o) { emit_report(rows, bench_cfg.generator, fmt, o); });
    } else if (*session) {
      const QuerySessionResult r = run_query_session(artifacts, queries, seed);
      std::cout << nlohmann::json{{"queries", r.queries},
                                  {"mean_seconds", r.mean_seconds},
                                  {"peak_resident_bytes", r.peak_resident_bytes}}
                       .dump()
                << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "nextline: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "nextline: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
