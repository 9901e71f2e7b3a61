#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nextline {

/// What counts as a comment, a string literal and a source file.
struct LanguageProfile {
  std::string line_comment_marker = "#";
  /// Checked in order at each position, so longer delimiters come first.
  std::vector<std::string> string_delimiters = {"'''", "\"\"\"", "'", "\""};
  std::vector<std::string> file_extensions = {".py"};

  /// Throws a Config error if the marker or the extension list is empty.
  void validate() const;
};

enum class BlockSeparator { BlankLine, None };

/// A whitespace-trimmed, comment-free source line. Never empty.
using Line = std::string;
using Block = std::vector<Line>;

struct LineSequence {
  std::string source_path;
  std::vector<Block> blocks;

  std::size_t line_count() const;
};

/// All files under `root` (recursive) whose extension is in the profile,
/// sorted lexicographically by path.
std::vector<std::filesystem::path> scan_corpus(const std::filesystem::path& root,
                                               const LanguageProfile& profile);

/// Strips the first comment marker outside a string literal, trims
/// whitespace, and returns nullopt if nothing is left. String state does not
/// carry across lines; an unterminated literal swallows the rest of the line.
std::optional<Line> normalize_line(std::string_view raw, const LanguageProfile& profile);

/// Under BlankLine, every run of blank or comment-only lines closes the
/// current block. Under None, the file is one block.
LineSequence segment_blocks(const std::vector<std::string>& file_lines,
                            const LanguageProfile& profile, BlockSeparator separator,
                            std::string source_path = {});

/// Reads a UTF-8 file, replacing invalid byte sequences with U+FFFD (a
/// warning is logged once per file), and segments it.
LineSequence read_source_file(const std::filesystem::path& path, const LanguageProfile& profile,
                              BlockSeparator separator);

std::vector<LineSequence> read_corpus(const std::vector<std::filesystem::path>& files,
                                      const LanguageProfile& profile, BlockSeparator separator);

/// Returns the number of invalid sequences that were replaced.
std::size_t sanitize_utf8(std::string& text);

BlockSeparator parse_separator(std::string_view name);
std::string_view to_string(BlockSeparator separator);

}  // namespace nextline
