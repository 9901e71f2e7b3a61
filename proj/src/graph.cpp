#include "nextline/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>

#include "nextline/error.hpp"

namespace fs = std::filesystem;

namespace nextline {

Vocabulary::Vocabulary(std::vector<std::string> lines, std::vector<std::uint64_t> freq)
    : lines_(std::move(lines)), freq_(std::move(freq)) {
  if (lines_.size() != freq_.size()) fail(ErrorKind::Internal, "vocabulary lines/freq size mismatch");
  index();
}

Vocabulary& Vocabulary::operator=(const Vocabulary& other) {
  if (this != &other) *this = Vocabulary(other);
  return *this;
}

void Vocabulary::index() {
  ids_.clear();
  ids_.reserve(lines_.size());
  for (std::size_t i = 0; i < lines_.size(); ++i) {
    if (!ids_.emplace(lines_[i], static_cast<NodeId>(i)).second) {
      fail(ErrorKind::Internal, "duplicate vocabulary line: " + lines_[i]);
    }
  }
}

std::optional<NodeId> Vocabulary::id_of(std::string_view line) const {
  auto it = ids_.find(line);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

void Vocabulary::save(const fs::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write vocabulary " + path.string());
  for (std::size_t i = 0; i < lines_.size(); ++i) out << i << '\t' << freq_[i] << '\t' << lines_[i] << '\n';
  if (!out) fail(ErrorKind::Io, "write failed for vocabulary " + path.string());
}

Vocabulary Vocabulary::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open vocabulary " + path.string());
  std::vector<std::string> lines;
  std::vector<std::uint64_t> freq;
  std::string text;
  std::size_t lineno = 0;
  while (std::getline(in, text)) {
    ++lineno;
    const auto t1 = text.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : text.find('\t', t1 + 1);
    std::uint64_t id = 0, f = 0;
    if (t2 == std::string::npos ||
        std::from_chars(text.data(), text.data() + t1, id).ec != std::errc{} ||
        std::from_chars(text.data() + t1 + 1, text.data() + t2, f).ec != std::errc{} ||
        id != lines.size()) {
      fail(ErrorKind::Parse, path.string() + ":" + std::to_string(lineno) + ": malformed vocabulary record");
    }
    freq.push_back(f);
    lines.push_back(text.substr(t2 + 1));
  }
  return Vocabulary(std::move(lines), std::move(freq));
}

Vocabulary build_vocabulary(std::span<const LineSequence> sequences) {
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& seq : sequences) {
    for (const auto& block : seq.blocks) {
      for (const auto& line : block) ++counts[line];
    }
  }
  if (counts.empty()) fail(ErrorKind::Input, "empty corpus: no code lines retained");

  std::vector<std::pair<std::string, std::uint64_t>> entries(counts.begin(), counts.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> lines;
  std::vector<std::uint64_t> freq;
  lines.reserve(entries.size());
  freq.reserve(entries.size());
  for (auto& [line, count] : entries) {
    lines.push_back(std::move(line));
    freq.push_back(count);
  }
  return Vocabulary(std::move(lines), std::move(freq));
}

std::uint64_t EdgeAccumulator::key(NodeId a, NodeId b) {
  const NodeId u = std::min(a, b), v = std::max(a, b);
  return (static_cast<std::uint64_t>(u) << 32) | v;
}

void EdgeAccumulator::add(NodeId a, NodeId b, std::uint64_t weight) {
  if (a == b) return;
  weights_[key(a, b)] += weight;
}

std::uint64_t EdgeAccumulator::weight(NodeId a, NodeId b) const {
  if (a == b) return 0;
  auto it = weights_.find(key(a, b));
  return it == weights_.end() ? 0 : it->second;
}

std::uint64_t EdgeAccumulator::total_weight() const {
  std::uint64_t total = 0;
  for (const auto& [k, w] : weights_) total += w;
  return total;
}

std::vector<Edge> EdgeAccumulator::sorted_edges() const {
  std::vector<Edge> edges;
  edges.reserve(weights_.size());
  for (const auto& [k, w] : weights_) {
    edges.push_back({static_cast<NodeId>(k >> 32), static_cast<NodeId>(k & 0xffffffffu), w});
  }
  std::sort(edges.begin(), edges.end(),
            [](const Edge& a, const Edge& b) { return a.u != b.u ? a.u < b.u : a.v < b.v; });
  return edges;
}

EdgeAccumulator accumulate_edges(std::span<const LineSequence> sequences, const Vocabulary& vocab) {
  EdgeAccumulator acc;
  auto lookup = [&](const std::string& line) {
    auto id = vocab.id_of(line);
    if (!id) fail(ErrorKind::Internal, "line missing from vocabulary: " + line);
    return *id;
  };
  for (const auto& seq : sequences) {
    for (const auto& block : seq.blocks) {
      for (std::size_t i = 0; i + 1 < block.size(); ++i) acc.add(lookup(block[i]), lookup(block[i + 1]));
      if (block.size() == 1) lookup(block[0]);
    }
  }
  return acc;
}

std::vector<EdgeShard> write_edge_shards(const EdgeAccumulator& acc, const fs::path& dir,
                                         std::size_t max_edges_per_shard) {
  if (max_edges_per_shard < 1) fail(ErrorKind::Config, "max_edges_per_shard must be >= 1");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create shard directory " + dir.string() + ": " + ec.message());

  const std::vector<Edge> edges = acc.sorted_edges();
  std::vector<EdgeShard> shards;
  for (std::size_t begin = 0; begin < edges.size(); begin += max_edges_per_shard) {
    const std::size_t end = std::min(edges.size(), begin + max_edges_per_shard);
    char name[32];
    std::snprintf(name, sizeof(name), "edges-%05zu.edg", shards.size());
    EdgeShard shard{dir / name, end - begin};

    std::ofstream out(shard.path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write shard " + shard.path.string());
    for (std::size_t i = begin; i < end; ++i) {
      out << edges[i].u << '\t' << edges[i].v << '\t' << edges[i].weight << '\n';
    }
    if (!out.flush()) fail(ErrorKind::Io, "write failed for shard " + shard.path.string());
    shards.push_back(std::move(shard));
  }
  return shards;
}

std::vector<Edge> read_edge_shard(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open shard " + path.string());
  std::vector<Edge> edges;
  std::string text;
  std::size_t lineno = 0;
  while (std::getline(in, text)) {
    ++lineno;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    auto bad = [&](const char* why) {
      fail(ErrorKind::Parse, path.string() + ":" + std::to_string(lineno) + ": " + why);
    };
    const char* p = text.data();
    const char* end = p + text.size();
    std::uint64_t fields[3];
    for (int f = 0; f < 3; ++f) {
      auto [next, errc] = std::from_chars(p, end, fields[f]);
      if (errc != std::errc{} || next == p) bad("expected 3 tab-separated integers \"u<TAB>v<TAB>w\"");
      p = next;
      if (f < 2) {
        if (p == end || *p != '\t') bad("expected 3 tab-separated integers \"u<TAB>v<TAB>w\"");
        ++p;
      }
    }
    if (p != end) bad("trailing characters after weight");
    if (fields[0] > 0xffffffffu || fields[1] > 0xffffffffu) bad("node id out of range");
    if (fields[0] == fields[1]) bad("self-loop");
    if (fields[2] == 0) bad("weight must be >= 1");
    edges.push_back({static_cast<NodeId>(fields[0]), static_cast<NodeId>(fields[1]), fields[2]});
  }
  return edges;
}

}  // namespace nextline
