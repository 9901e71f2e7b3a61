#include "nextline/mapstore.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <cstring>

#include "binio.hpp"
#include "nextline/error.hpp"

namespace nextline {

namespace {

constexpr char kTableMagic[5] = "NLKV";
constexpr std::size_t kHeaderBytes = 4 + 4 + 4 + 4 + 8 + 8 + 8;

std::uint32_t crc_of(const char* data, std::size_t n) {
  return static_cast<std::uint32_t>(::crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

template <class T>
T load_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

std::string encode_id_key(NodeId id) {
  // Big-endian so byte order equals numeric order.
  std::string key(8, '\0');
  const std::uint64_t v = id;
  for (int i = 0; i < 8; ++i) key[i] = static_cast<char>((v >> (56 - 8 * i)) & 0xff);
  return key;
}

std::string encode_id_value(NodeId id) {
  std::string value(8, '\0');
  const std::uint64_t v = id;
  std::memcpy(value.data(), &v, 8);
  return value;
}

}  // namespace

void SortedTable::write(const std::filesystem::path& path, std::uint32_t kind,
                        const std::vector<std::pair<std::string, std::string>>& entries) {
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (!(entries[i - 1].first < entries[i].first)) {
      fail(ErrorKind::Build, path.string() + ": keys must be unique and sorted");
    }
  }

  std::vector<char> blocks;
  std::vector<BlockRef> index;
  std::vector<char> current;
  std::string first_key;
  auto flush = [&] {
    if (current.empty()) return;
    index.push_back({kHeaderBytes + blocks.size(), static_cast<std::uint32_t>(current.size()),
                     crc_of(current.data(), current.size()), first_key});
    blocks.insert(blocks.end(), current.begin(), current.end());
    current.clear();
  };
  for (const auto& [key, value] : entries) {
    if (current.empty()) first_key = key;
    const auto klen = static_cast<std::uint32_t>(key.size());
    const auto vlen = static_cast<std::uint32_t>(value.size());
    const char* kp = reinterpret_cast<const char*>(&klen);
    const char* vp = reinterpret_cast<const char*>(&vlen);
    current.insert(current.end(), kp, kp + 4);
    current.insert(current.end(), vp, vp + 4);
    current.insert(current.end(), key.begin(), key.end());
    current.insert(current.end(), value.begin(), value.end());
    if (current.size() >= kTargetBlockBytes) flush();
  }
  flush();

  binio::Writer w(path);
  w.bytes(kTableMagic, 4);
  w.pod(kFormatVersion);
  w.pod(kind);
  w.pod(std::uint32_t{0});
  w.pod(static_cast<std::uint64_t>(entries.size()));
  w.pod(static_cast<std::uint64_t>(index.size()));
  w.pod(static_cast<std::uint64_t>(kHeaderBytes + blocks.size()));
  w.array(blocks);
  for (const auto& b : index) {
    w.pod(b.offset);
    w.pod(b.size);
    w.pod(b.crc);
    w.pod(static_cast<std::uint32_t>(b.first_key.size()));
    w.bytes(b.first_key.data(), b.first_key.size());
  }
  w.finish();
}

SortedTable SortedTable::open(const std::filesystem::path& path, std::uint32_t expected_kind) {
  SortedTable t;
  t.path_ = path;
  t.fd_ = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
  if (t.fd_ < 0) fail(ErrorKind::Io, "cannot open map store " + path.string() + ": " + std::strerror(errno));
  struct stat st {};
  if (::fstat(t.fd_, &st) != 0) fail(ErrorKind::Io, "cannot stat map store " + path.string());
  t.file_bytes_ = static_cast<std::uint64_t>(st.st_size);

  auto corrupt = [&](const std::string& why) { fail(ErrorKind::Store, path.string() + ": " + why); };
  auto read_at = [&](std::uint64_t offset, std::size_t n) {
    std::vector<char> buf(n);
    if (offset > t.file_bytes_ || n > t.file_bytes_ - offset) corrupt("truncated store file");
    if (n && ::pread(t.fd_, buf.data(), n, static_cast<off_t>(offset)) != static_cast<ssize_t>(n)) {
      corrupt("short read");
    }
    return buf;
  };

  const auto header = read_at(0, kHeaderBytes);
  if (std::memcmp(header.data(), kTableMagic, 4) != 0) fail(ErrorKind::Format, path.string() + ": not a map store (bad magic)");
  const auto version = load_le<std::uint32_t>(header.data() + 4);
  if (version != kFormatVersion) {
    fail(ErrorKind::Format, path.string() + ": map store format version " + std::to_string(version) +
                                " is not supported (expected version " + std::to_string(kFormatVersion) + ")");
  }
  const auto kind = load_le<std::uint32_t>(header.data() + 8);
  if (kind != expected_kind) corrupt("unexpected store kind " + std::to_string(kind));
  t.entries_ = load_le<std::uint64_t>(header.data() + 16);
  const auto block_count = load_le<std::uint64_t>(header.data() + 24);
  const auto index_offset = load_le<std::uint64_t>(header.data() + 32);
  if (index_offset < kHeaderBytes || index_offset > t.file_bytes_) corrupt("index offset out of range");

  const auto index = read_at(index_offset, t.file_bytes_ - index_offset);
  std::size_t pos = 0;
  auto need = [&](std::size_t n) {
    if (n > index.size() - pos) corrupt("truncated block index");
  };
  t.blocks_.reserve(block_count);
  for (std::uint64_t b = 0; b < block_count; ++b) {
    need(20);
    BlockRef ref;
    ref.offset = load_le<std::uint64_t>(index.data() + pos);
    ref.size = load_le<std::uint32_t>(index.data() + pos + 8);
    ref.crc = load_le<std::uint32_t>(index.data() + pos + 12);
    const auto klen = load_le<std::uint32_t>(index.data() + pos + 16);
    pos += 20;
    need(klen);
    ref.first_key.assign(index.data() + pos, klen);
    pos += klen;
    if (ref.offset < kHeaderBytes || ref.offset + ref.size > index_offset) corrupt("block extends past data region");
    t.blocks_.push_back(std::move(ref));
  }
  if (pos != index.size()) corrupt("trailing bytes after block index");
  if (t.entries_ > 0 && t.blocks_.empty()) corrupt("entries without blocks");
  return t;
}

SortedTable::SortedTable(SortedTable&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)),
      path_(std::move(other.path_)),
      entries_(other.entries_),
      file_bytes_(other.file_bytes_),
      blocks_(std::move(other.blocks_)) {}

SortedTable& SortedTable::operator=(SortedTable&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(other.fd_, -1);
    path_ = std::move(other.path_);
    entries_ = other.entries_;
    file_bytes_ = other.file_bytes_;
    blocks_ = std::move(other.blocks_);
  }
  return *this;
}

SortedTable::~SortedTable() {
  if (fd_ >= 0) ::close(fd_);
}

std::vector<char> SortedTable::read_block(std::size_t b) const {
  const BlockRef& ref = blocks_[b];
  std::vector<char> buf(ref.size);
  if (::pread(fd_, buf.data(), ref.size, static_cast<off_t>(ref.offset)) != static_cast<ssize_t>(ref.size)) {
    fail(ErrorKind::Store, path_.string() + ": short read in block " + std::to_string(b));
  }
  if (crc_of(buf.data(), buf.size()) != ref.crc) {
    fail(ErrorKind::Store, path_.string() + ": checksum mismatch in block " + std::to_string(b));
  }
  return buf;
}

namespace {

// Calls visit(key, value) for each record; stops early when visit returns true.
template <class Visit>
void scan_records(const std::vector<char>& block, const std::filesystem::path& path, Visit&& visit) {
  std::size_t pos = 0;
  while (pos < block.size()) {
    if (block.size() - pos < 8) fail(ErrorKind::Store, path.string() + ": truncated record header");
    const auto klen = load_le<std::uint32_t>(block.data() + pos);
    const auto vlen = load_le<std::uint32_t>(block.data() + pos + 4);
    pos += 8;
    if (std::uint64_t{klen} + vlen > block.size() - pos) fail(ErrorKind::Store, path.string() + ": record overruns block");
    const std::string_view key(block.data() + pos, klen);
    const std::string_view value(block.data() + pos + klen, vlen);
    pos += std::size_t{klen} + vlen;
    if (visit(key, value)) return;
  }
}

}  // namespace

std::optional<std::string> SortedTable::get(std::string_view key) const {
  if (blocks_.empty()) return std::nullopt;
  auto it = std::upper_bound(blocks_.begin(), blocks_.end(), key,
                             [](std::string_view k, const BlockRef& b) { return k < std::string_view(b.first_key); });
  if (it == blocks_.begin()) return std::nullopt;
  const auto block = read_block(static_cast<std::size_t>(it - blocks_.begin()) - 1);
  std::optional<std::string> found;
  scan_records(block, path_, [&](std::string_view k, std::string_view v) {
    if (k == key) found.emplace(v);
    return k >= key;
  });
  return found;
}

void SortedTable::for_each(const std::function<void(std::string_view, std::string_view)>& visit) const {
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    scan_records(read_block(b), path_, [&](std::string_view k, std::string_view v) {
      visit(k, v);
      return false;
    });
  }
}

MapStore MapStore::put_all(const std::filesystem::path& line_to_id_path,
                           const std::filesystem::path& id_to_line_path,
                           std::vector<std::pair<std::string, NodeId>> pairs) {
  std::vector<std::pair<std::string, std::string>> by_line;
  by_line.reserve(pairs.size());
  std::sort(pairs.begin(), pairs.end());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (i > 0 && pairs[i].first == pairs[i - 1].first) {
      fail(ErrorKind::Build, "duplicate line key in map store: " + pairs[i].first);
    }
    by_line.emplace_back(pairs[i].first, encode_id_value(pairs[i].second));
  }
  SortedTable::write(line_to_id_path, kLineToIdKind, by_line);
  by_line.clear();
  by_line.shrink_to_fit();

  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  std::vector<std::pair<std::string, std::string>> by_id;
  by_id.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (i > 0 && pairs[i].second == pairs[i - 1].second) {
      fail(ErrorKind::Build, "duplicate id in map store: " + std::to_string(pairs[i].second));
    }
    by_id.emplace_back(encode_id_key(pairs[i].second), std::move(pairs[i].first));
  }
  SortedTable::write(id_to_line_path, kIdToLineKind, by_id);
  return open(line_to_id_path, id_to_line_path);
}

MapStore MapStore::open(const std::filesystem::path& line_to_id_path, const std::filesystem::path& id_to_line_path) {
  MapStore store(SortedTable::open(line_to_id_path, kLineToIdKind), SortedTable::open(id_to_line_path, kIdToLineKind));
  if (store.line_to_id_.size() != store.id_to_line_.size()) {
    fail(ErrorKind::Store, "line->id and id->line stores hold different entry counts");
  }
  return store;
}

std::optional<NodeId> MapStore::get_id(std::string_view line) const {
  auto value = line_to_id_.get(line);
  if (!value) return std::nullopt;
  if (value->size() != 8) fail(ErrorKind::Store, "malformed id value in line->id store");
  return static_cast<NodeId>(load_le<std::uint64_t>(value->data()));
}

std::optional<std::string> MapStore::get_line(NodeId id) const { return id_to_line_.get(encode_id_key(id)); }

}  // namespace nextline
