#include "nextline/evalbench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <random>
#include <unordered_map>

#include "nextline/error.hpp"
#include "nextline/rss.hpp"
#include "nextline/walker.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace nextline {

namespace {

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc{} ? std::string(buf, end) : std::to_string(v);
}

}  // namespace

double EvalReport::at(std::size_t k) const {
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] == k) return accuracy[i];
  }
  fail(ErrorKind::Query, "no accuracy recorded for k=" + std::to_string(k));
}

EvalReport evaluate_topk(const ArtifactBundle& bundle, std::span<const LineSequence> sequences,
                         std::vector<std::size_t> ks) {
  if (ks.empty()) fail(ErrorKind::Config, "at least one k is required");
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  if (ks.front() < 1) fail(ErrorKind::Config, "k must be >= 1");
  const std::size_t kmax = ks.back();

  EvalReport report;
  report.ks = ks;
  std::vector<std::size_t> hits(ks.size(), 0);
  // Suggestions for an id do not depend on the pair, so compute each once.
  std::unordered_map<NodeId, std::vector<std::string>> cache;

  for (const auto& seq : sequences) {
    for (const auto& block : seq.blocks) {
      for (std::size_t i = 0; i + 1 < block.size(); ++i) {
        const std::string& a = block[i];
        const std::string& b = block[i + 1];
        if (a == b) {
          ++report.self_transitions_skipped;
          continue;
        }
        const auto ida = bundle.store().get_id(a);
        if (!ida || !bundle.store().get_id(b)) {
          ++report.oov_transitions_skipped;
          continue;
        }
        auto it = cache.find(*ida);
        if (it == cache.end()) {
          std::vector<std::string> lines;
          for (auto& s : suggest_for_id(bundle, *ida, kmax)) lines.push_back(std::move(s.line));
          it = cache.emplace(*ida, std::move(lines)).first;
        }
        const auto& top = it->second;
        const auto pos = static_cast<std::size_t>(std::find(top.begin(), top.end(), b) - top.begin());
        for (std::size_t j = 0; j < ks.size(); ++j) {
          if (pos < ks[j]) ++hits[j];
        }
        ++report.transitions_evaluated;
      }
    }
  }
  if (report.transitions_evaluated == 0) fail(ErrorKind::Input, "no evaluable transitions (all pairs out of vocabulary?)");
  for (std::size_t h : hits) report.accuracy.push_back(static_cast<double>(h) / static_cast<double>(report.transitions_evaluated));
  return report;
}

std::string synthetic_line(std::size_t id, std::uint64_t seed) {
  const std::uint64_t h = mix_seed(seed, id, 0x11e);
  static constexpr const char* kVerbs[] = {"load", "parse", "merge", "scale", "emit", "fetch", "sort", "push"};
  static constexpr const char* kNouns[] = {"node", "row", "item", "key", "batch", "token", "edge", "frame"};
  return "v" + std::to_string(id) + " = " + kVerbs[h % 8] + "_" + kNouns[(h >> 3) % 8] + "(a" +
         std::to_string((h >> 6) % 31) + ", " + std::to_string((h >> 11) % 1000) + ")";
}

std::vector<LineSequence> generate_synthetic_corpus(const SyntheticCorpusSpec& spec) {
  if (spec.vocab_size < 2 || spec.chain_length < 2 || spec.chains_per_file < 1 || spec.repeats < 1) {
    fail(ErrorKind::Config, "synthetic corpus needs vocab_size >= 2, chain_length >= 2, chains_per_file >= 1, repeats >= 1");
  }
  std::vector<std::size_t> order(spec.vocab_size);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(mix_seed(spec.seed, 0xc4a1));
  for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);

  std::vector<LineSequence> files;
  std::size_t chain_index = 0;
  for (std::size_t begin = 0; begin < order.size(); begin += spec.chain_length, ++chain_index) {
    if (chain_index % spec.chains_per_file == 0) {
      char name[48];
      std::snprintf(name, sizeof(name), "synthetic_%05zu.py", files.size());
      files.push_back({name, {}});
    }
    Block chain;
    for (std::size_t i = begin; i < std::min(order.size(), begin + spec.chain_length); ++i) {
      chain.push_back(synthetic_line(order[i], spec.seed));
    }
    for (std::size_t r = 0; r < spec.repeats; ++r) files.back().blocks.push_back(chain);
  }
  return files;
}

void write_corpus(std::span<const LineSequence> corpus, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
  for (std::size_t f = 0; f < corpus.size(); ++f) {
    std::string name = fs::path(corpus[f].source_path).filename().string();
    if (name.empty()) name = "file_" + std::to_string(f) + ".py";
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + (dir / name).string());
    for (std::size_t b = 0; b < corpus[f].blocks.size(); ++b) {
      if (b) out << '\n';
      for (const auto& line : corpus[f].blocks[b]) out << line << '\n';
    }
  }
}

QuerySessionResult run_query_session(const fs::path& bundle_dir, std::size_t queries, std::uint64_t seed,
                                     std::size_t k) {
  RssSampler sampler;
  const ArtifactBundle bundle = ArtifactBundle::load(bundle_dir);
  if (bundle.vocab_size() == 0) fail(ErrorKind::Input, "bundle is empty");

  std::mt19937_64 rng(mix_seed(seed, 0x9e7));
  std::vector<std::string> lines;
  lines.reserve(queries);
  for (std::size_t i = 0; i < queries; ++i) {
    const auto id = static_cast<NodeId>(rng() % bundle.vocab_size());
    auto line = bundle.store().get_line(id);
    if (!line) fail(ErrorKind::Integrity, "id-to-line store is missing id " + std::to_string(id));
    lines.push_back(std::move(*line));
  }

  QuerySessionResult result;
  result.queries = queries;
  const auto start = std::chrono::steady_clock::now();
  std::size_t sink = 0;
  for (const auto& line : lines) sink += suggest(bundle, line, k).suggestions.size();
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.mean_seconds = queries ? total / static_cast<double>(queries) : 0.0;
  result.peak_resident_bytes = sampler.stop();
  if (queries && sink == 0) fail(ErrorKind::Internal, "query session produced no suggestions");
  return result;
}

std::vector<ScalingRow> bench_scaling(const BenchConfig& cfg) {
  if (cfg.vocab_sizes.empty()) fail(ErrorKind::Config, "no vocabulary sizes given");
  if (!std::is_sorted(cfg.vocab_sizes.begin(), cfg.vocab_sizes.end())) fail(ErrorKind::Config, "vocabulary sizes must be ascending");
  const QuerySessionRunner runner = cfg.runner ? cfg.runner : [&](const fs::path& dir, std::size_t q) {
    return run_query_session(dir, q, cfg.generator.seed);
  };

  std::vector<ScalingRow> rows;
  for (std::size_t size : cfg.vocab_sizes) {
    const fs::path dir = cfg.work_root / ("bundle-" + std::to_string(size));
    try {
      SyntheticCorpusSpec gen = cfg.generator;
      gen.vocab_size = size;
      const auto corpus = generate_synthetic_corpus(gen);
      PipelineConfig pipeline = cfg.pipeline;
      pipeline.top_n = std::max(pipeline.top_n, size);
      const TrainSummary summary = train_bundle(corpus, dir, pipeline);

      ScalingRow row;
      row.vocab_size = summary.vocab_size;
      row.artifact_bytes = summary.artifact_bytes;
      row.train_seconds = summary.seconds;
      const QuerySessionResult session = runner(dir, cfg.queries);
      row.queries = session.queries;
      row.mean_query_seconds = session.mean_seconds;
      row.peak_resident_bytes = session.peak_resident_bytes;
      rows.push_back(row);
    } catch (const Error& e) {
      throw Error(e.kind(), "bench failed at vocabulary size " + std::to_string(size) + ": " + e.what());
    }
    if (!cfg.keep_bundles) {
      std::error_code ec;
      fs::remove_all(dir, ec);
    }
  }
  return rows;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) fail(ErrorKind::Input, "linear fit needs at least two (x, y) points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) fail(ErrorKind::Input, "linear fit needs distinct x values");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy == 0 ? 1.0 : 1.0 - ss_res / syy;
  return fit;
}

void emit_report(const EvalReport& report, ReportFormat format, std::ostream& out) {
  if (format == ReportFormat::Json) {
    json j;
    j["transitions_evaluated"] = report.transitions_evaluated;
    j["oov_transitions_skipped"] = report.oov_transitions_skipped;
    j["self_transitions_skipped"] = report.self_transitions_skipped;
    j["accuracy"] = json::array();
    for (std::size_t i = 0; i < report.ks.size(); ++i) j["accuracy"].push_back({{"k", report.ks[i]}, {"accuracy", report.accuracy[i]}});
    out << j.dump(2) << '\n';
    return;
  }
  out << "k,accuracy,transitions_evaluated,oov_transitions_skipped,self_transitions_skipped\n";
  for (std::size_t i = 0; i < report.ks.size(); ++i) {
    out << report.ks[i] << ',' << format_number(report.accuracy[i]) << ',' << report.transitions_evaluated << ','
        << report.oov_transitions_skipped << ',' << report.self_transitions_skipped << '\n';
  }
}

void emit_report(std::span<const ScalingRow> rows, const SyntheticCorpusSpec& generator, ReportFormat format,
                 std::ostream& out) {
  if (format == ReportFormat::Json) {
    json j;
    j["generator"] = {{"kind", "random-chains"},
                      {"chain_length", generator.chain_length},
                      {"chains_per_file", generator.chains_per_file},
                      {"repeats", generator.repeats},
                      {"seed", generator.seed}};
    j["rows"] = json::array();
    for (const auto& r : rows) {
      j["rows"].push_back({{"vocab_size", r.vocab_size},
                           {"artifact_bytes", r.artifact_bytes},
                           {"peak_resident_bytes", r.peak_resident_bytes},
                           {"mean_query_seconds", r.mean_query_seconds},
                           {"queries", r.queries},
                           {"train_seconds", r.train_seconds}});
    }
    out << j.dump(2) << '\n';
    return;
  }
  out << "vocab_size,artifact_bytes,peak_resident_bytes,mean_query_seconds,queries,train_seconds\n";
  for (const auto& r : rows) {
    out << r.vocab_size << ',' << r.artifact_bytes << ',' << r.peak_resident_bytes << ','
        << format_number(r.mean_query_seconds) << ',' << r.queries << ',' << format_number(r.train_seconds) << '\n';
  }
}

}  // namespace nextline
