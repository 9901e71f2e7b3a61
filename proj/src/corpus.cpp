#include "nextline/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nextline/error.hpp"

namespace fs = std::filesystem;

namespace nextline {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Length of a well-formed UTF-8 sequence starting at s[i], or 0.
std::size_t utf8_sequence_length(std::string_view s, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) return 1;
  std::size_t len = 0;
  unsigned char lo = 0x80, hi = 0xbf;
  if (b0 >= 0xc2 && b0 <= 0xdf) {
    len = 2;
  } else if (b0 >= 0xe0 && b0 <= 0xef) {
    len = 3;
    if (b0 == 0xe0) lo = 0xa0;
    if (b0 == 0xed) hi = 0x9f;
  } else if (b0 >= 0xf0 && b0 <= 0xf4) {
    len = 4;
    if (b0 == 0xf0) lo = 0x90;
    if (b0 == 0xf4) hi = 0x8f;
  } else {
    return 0;
  }
  if (i + len > s.size()) return 0;
  const auto b1 = static_cast<unsigned char>(s[i + 1]);
  if (b1 < lo || b1 > hi) return 0;
  for (std::size_t k = 2; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if (b < 0x80 || b > 0xbf) return 0;
  }
  return len;
}

}  // namespace

void LanguageProfile::validate() const {
  if (line_comment_marker.empty()) fail(ErrorKind::Config, "line comment marker must be non-empty");
  if (file_extensions.empty()) fail(ErrorKind::Config, "at least one file extension is required");
  for (const auto& d : string_delimiters) {
    if (d.empty()) fail(ErrorKind::Config, "string delimiters must be non-empty");
  }
}

std::size_t LineSequence::line_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks) n += b.size();
  return n;
}

std::vector<fs::path> scan_corpus(const fs::path& root, const LanguageProfile& profile) {
  profile.validate();
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    fail(ErrorKind::Input, "corpus directory not found or not a directory: " + root.string());
  }
  std::vector<fs::path> files;
  fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
  if (ec) fail(ErrorKind::Input, "cannot read corpus directory " + root.string() + ": " + ec.message());
  for (const auto& entry : it) {
    if (!entry.is_regular_file(ec)) continue;
    const std::string ext = entry.path().extension().string();
    if (std::find(profile.file_extensions.begin(), profile.file_extensions.end(), ext) !=
        profile.file_extensions.end()) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.string() < b.string(); });
  return files;
}

std::optional<Line> normalize_line(std::string_view raw, const LanguageProfile& profile) {
  const std::string_view marker = profile.line_comment_marker;
  std::string_view open;  // delimiter of the literal we are inside, if any
  std::size_t cut = raw.size();

  for (std::size_t i = 0; i < raw.size();) {
    if (!open.empty()) {
      if (raw[i] == '\\') {
        i += 2;
        continue;
      }
      if (raw.substr(i, open.size()) == open) {
        i += open.size();
        open = {};
        continue;
      }
      ++i;
      continue;
    }
    if (raw.substr(i, marker.size()) == marker) {
      cut = i;
      break;
    }
    bool opened = false;
    for (const auto& d : profile.string_delimiters) {
      if (raw.substr(i, d.size()) == d) {
        open = d;
        i += d.size();
        opened = true;
        break;
      }
    }
    if (!opened) ++i;
  }

  const std::string_view kept = trim(raw.substr(0, cut));
  if (kept.empty()) return std::nullopt;
  return Line(kept);
}

LineSequence segment_blocks(const std::vector<std::string>& file_lines,
                            const LanguageProfile& profile, BlockSeparator separator,
                            std::string source_path) {
  LineSequence seq;
  seq.source_path = std::move(source_path);
  Block current;
  for (const auto& raw : file_lines) {
    auto line = normalize_line(raw, profile);
    if (!line) {
      if (separator == BlockSeparator::BlankLine && !current.empty()) {
        seq.blocks.push_back(std::move(current));
        current.clear();
      }
      continue;
    }
    current.push_back(std::move(*line));
  }
  if (!current.empty()) seq.blocks.push_back(std::move(current));
  return seq;
}

std::size_t sanitize_utf8(std::string& text) {
  std::size_t bad = 0;
  std::string out;
  for (std::size_t i = 0; i < text.size();) {
    const std::size_t len = utf8_sequence_length(text, i);
    if (len == 0) {
      if (bad == 0) out.assign(text, 0, i);
      out += "\xEF\xBF\xBD";
      ++bad;
      ++i;
      continue;
    }
    if (bad != 0) out.append(text, i, len);
    i += len;
  }
  if (bad != 0) text = std::move(out);
  return bad;
}

LineSequence read_source_file(const fs::path& path, const LanguageProfile& profile,
                              BlockSeparator separator) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open source file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  if (const std::size_t bad = sanitize_utf8(text); bad != 0) {
    std::cerr << "warning: " << path.string() << ": replaced " << bad << " invalid UTF-8 byte(s)\n";
  }

  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    lines.emplace_back(text, start, end - start);
    start = end + 1;
  }
  return segment_blocks(lines, profile, separator, path.string());
}

std::vector<LineSequence> read_corpus(const std::vector<fs::path>& files,
                                      const LanguageProfile& profile, BlockSeparator separator) {
  std::vector<LineSequence> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(read_source_file(f, profile, separator));
  return out;
}

BlockSeparator parse_separator(std::string_view name) {
  if (name == "blank_line") return BlockSeparator::BlankLine;
  if (name == "none") return BlockSeparator::None;
  fail(ErrorKind::Config, "unknown block separator '" + std::string(name) + "'");
}

std::string_view to_string(BlockSeparator separator) {
  return separator == BlockSeparator::BlankLine ? "blank_line" : "none";
}

}  // namespace nextline
