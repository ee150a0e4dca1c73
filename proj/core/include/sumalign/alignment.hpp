#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sumalign {

enum class Label { Sure, Possible };

// Token ranges are 0-based and inclusive over the concatenated side. A span
// with no doc range is null-generated.
struct AlignmentSpan {
  std::optional<std::pair<int, int>> doc;
  std::pair<int, int> sum{0, 0};
  Label label = Label::Sure;

  bool is_null() const { return !doc.has_value(); }
  bool operator==(const AlignmentSpan&) const = default;
};

struct AlignmentSet {
  std::string pair_id;
  std::vector<AlignmentSpan> spans;
};

// Alignments for a whole corpus keyed by pair id, plus ids the decoder could
// not align.
struct AlignmentCorpus {
  std::map<std::string, AlignmentSet> pairs;
  std::vector<std::string> unalignable;
};

// `pair_id<TAB>i:i'|NULL<TAB>t:t'<TAB>S|P`; '#' lines are comments, and
// `# unalignable <id>` records a pair the decoder skipped.
AlignmentCorpus parse_alignments(const std::string& text, const std::string& source = "<memory>");
AlignmentCorpus load_alignments(const std::filesystem::path& path);
void write_alignments(std::ostream& out, const AlignmentCorpus& corpus);
std::string format_span(const std::string& pair_id, const AlignmentSpan& span);

}  // namespace sumalign
