#include "sumalign/alignment.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include "sumalign/error.hpp"

namespace sumalign {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

int parse_index(const std::string& s, const std::string& where) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || v < 0)
    throw DataError(where + ": bad token index '" + s + "'");
  return v;
}

std::pair<int, int> parse_range(const std::string& s, const std::string& where) {
  const std::size_t colon = s.find(':');
  if (colon == std::string::npos) throw DataError(where + ": expected 'first:last', got '" + s + "'");
  const int a = parse_index(s.substr(0, colon), where);
  const int b = parse_index(s.substr(colon + 1), where);
  if (b < a) throw DataError(where + ": range '" + s + "' is reversed");
  return {a, b};
}

}  // namespace

AlignmentCorpus parse_alignments(const std::string& text, const std::string& source) {
  AlignmentCorpus out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    if (line.front() == '#') {
      const std::string tag = "# unalignable ";
      if (line.rfind(tag, 0) == 0) {
        const std::string id = line.substr(tag.size());
        out.unalignable.push_back(id);
        out.pairs[id].pair_id = id;
      }
      continue;
    }
    const auto f = split_tabs(line);
    if (f.size() != 4) throw DataError(where + ": expected 4 tab-separated fields, got " + std::to_string(f.size()));
    if (f[0].empty()) throw DataError(where + ": empty pair id");
    AlignmentSpan span;
    if (f[1] != "NULL") span.doc = parse_range(f[1], where);
    span.sum = parse_range(f[2], where);
    if (f[3] == "S") {
      span.label = Label::Sure;
    } else if (f[3] == "P") {
      span.label = Label::Possible;
    } else {
      throw DataError(where + ": label must be S or P, got '" + f[3] + "'");
    }
    auto& set = out.pairs[f[0]];
    set.pair_id = f[0];
    set.spans.push_back(span);
  }
  return out;
}

AlignmentCorpus load_alignments(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open alignment file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_alignments(ss.str(), path.string());
}

std::string format_span(const std::string& pair_id, const AlignmentSpan& span) {
  std::string out = pair_id + "\t";
  if (span.doc) {
    out += std::to_string(span.doc->first) + ":" + std::to_string(span.doc->second);
  } else {
    out += "NULL";
  }
  out += "\t" + std::to_string(span.sum.first) + ":" + std::to_string(span.sum.second) + "\t";
  out += span.label == Label::Sure ? "S" : "P";
  return out;
}

void write_alignments(std::ostream& out, const AlignmentCorpus& corpus) {
  for (const auto& id : corpus.unalignable) out << "# unalignable " << id << "\n";
  for (const auto& [id, set] : corpus.pairs) {
    for (const auto& span : set.spans) out << format_span(id, span) << "\n";
  }
}

}  // namespace sumalign
