#include "nextline/service.hpp"

#include <fstream>
#include <json.hpp>

#include "nextline/error.hpp"
#include "nextline/pipeline.hpp"

namespace fs = std::filesystem;

namespace nextline {

namespace {

fs::path require(const fs::path& dir, const char* name, const char* what) {
  const fs::path p = dir / name;
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) fail(ErrorKind::Input, std::string(what) + " missing: " + p.string());
  return p;
}

void integrity(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::Integrity, what);
}

}  // namespace

ArtifactBundle ArtifactBundle::load(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(ErrorKind::Input, "artifact directory not found: " + dir.string());
  const auto manifest_path = require(dir, bundle_files::kManifest, "manifest");
  const auto main_path = require(dir, bundle_files::kMainIndex, "main index");
  const auto text_path = require(dir, bundle_files::kTextIndex, "text index");
  const auto pca_path = require(dir, bundle_files::kPca, "pca model");
  const auto l2i_path = require(dir, bundle_files::kLineToId, "line-to-id store");
  const auto i2l_path = require(dir, bundle_files::kIdToLine, "id-to-line store");

  nlohmann::json manifest;
  try {
    std::ifstream in(manifest_path);
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, manifest_path.string() + ": " + e.what());
  }
  integrity(manifest.value("format", "") == "nextline-bundle", "manifest is not a nextline bundle manifest");
  const int version = manifest.value("version", 0);
  integrity(version == bundle_files::kBundleVersion,
            "bundle version " + std::to_string(version) + " is not supported (expected " +
                std::to_string(bundle_files::kBundleVersion) + ")");

  ArtifactBundle b(VectorIndex::load(main_path), VectorIndex::load(text_path), PcaModel::load(pca_path),
                   MapStore::open(l2i_path, i2l_path));

  try {
    const auto& prof = manifest.at("profile");
    b.profile_.line_comment_marker = prof.at("line_comment_marker").get<std::string>();
    b.profile_.string_delimiters = prof.at("string_delimiters").get<std::vector<std::string>>();
    b.profile_.file_extensions = prof.at("file_extensions").get<std::vector<std::string>>();
    const auto& enc = manifest.at("text_encoder");
    b.lexical_fallback_ = enc.at("kind").get<std::string>() == "lexical-ngram";
    b.lexical_.text_dim = enc.at("text_dim").get<std::size_t>();
    b.lexical_.ngram_min = enc.at("ngram_min").get<std::size_t>();
    b.lexical_.ngram_max = enc.at("ngram_max").get<std::size_t>();
    b.lexical_.hash_seed = enc.at("hash_seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, manifest_path.string() + ": " + e.what());
  }
  b.profile_.validate();

  const std::size_t n = b.main_index_.count();
  integrity(b.text_index_.count() == n, "text index holds " + std::to_string(b.text_index_.count()) +
                                            " rows but the main index holds " + std::to_string(n));
  integrity(b.store_.size() == n, "map stores hold " + std::to_string(b.store_.size()) +
                                      " entries but the main index holds " + std::to_string(n));
  integrity(b.text_index_.dim() == b.main_index_.dim(), "text index and main index dimensions differ");
  integrity(b.pca_.out_dim == b.main_index_.dim(), "PCA output dimension does not match the index dimension");
  integrity(b.pca_.in_dim == b.lexical_.text_dim, "PCA input dimension does not match the text encoder");

  for (const auto& [key, name] : {std::pair{"main_index", bundle_files::kMainIndex},
                                  {"text_index", bundle_files::kTextIndex}, {"pca", bundle_files::kPca},
                                  {"line_to_id", bundle_files::kLineToId}, {"id_to_line", bundle_files::kIdToLine},
                                  {"manifest", bundle_files::kManifest}}) {
    b.artifact_bytes_[key] = fs::file_size(dir / name);
  }
  return b;
}

std::uint64_t ArtifactBundle::total_bytes() const {
  std::uint64_t total = 0;
  for (const auto& [k, v] : artifact_bytes_) total += v;
  return total;
}

std::vector<Suggestion> suggest_for_id(const ArtifactBundle& bundle, NodeId id, std::size_t k) {
  if (k < 1) fail(ErrorKind::Query, "k must be >= 1");
  const auto query = bundle.main_index().row_as_float(id);
  auto hits = bundle.main_index().search(query, k + 1);
  std::vector<Suggestion> out;
  out.reserve(k);
  for (const auto& h : hits) {
    if (h.id == id) continue;
    if (out.size() == k) break;
    auto line = bundle.store().get_line(h.id);
    if (!line) fail(ErrorKind::Integrity, "id " + std::to_string(h.id) + " missing from the id-to-line store");
    out.push_back({std::move(*line), h.distance, out.size() + 1});
  }
  return out;
}

namespace {

SuggestResult suggest_impl(const ArtifactBundle& bundle, std::string_view raw_line,
                           std::optional<std::span<const float>> text_embedding, std::size_t k) {
  if (k < 1) fail(ErrorKind::Query, "k must be >= 1");
  const auto line = normalize_line(raw_line, bundle.profile());
  if (!line) fail(ErrorKind::Input, "nothing to suggest from: the line is blank or a comment");

  SuggestResult result;
  if (auto id = bundle.store().get_id(*line)) {
    result.anchor = *id;
    result.anchor_line = *line;
  } else {
    result.oov = true;
    if (text_embedding) {
      result.anchor = resolve_oov(*text_embedding, bundle.text_index(), bundle.pca());
    } else {
      if (!bundle.lexical_fallback()) {
        fail(ErrorKind::Input, "this bundle uses external text embeddings; supply one for out-of-vocabulary lines");
      }
      result.anchor = resolve_oov(*line, bundle.text_index(), bundle.pca(), bundle.lexical());
    }
    auto proxy = bundle.store().get_line(result.anchor);
    if (!proxy) fail(ErrorKind::Integrity, "proxy id missing from the id-to-line store");
    result.anchor_line = std::move(*proxy);
  }
  result.suggestions = suggest_for_id(bundle, result.anchor, k);
  return result;
}

}  // namespace

SuggestResult suggest(const ArtifactBundle& bundle, std::string_view raw_line, std::size_t k) {
  return suggest_impl(bundle, raw_line, std::nullopt, k);
}

SuggestResult suggest(const ArtifactBundle& bundle, std::string_view raw_line, std::span<const float> text_embedding,
                      std::size_t k) {
  return suggest_impl(bundle, raw_line, text_embedding, k);
}

}  // namespace nextline
