#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tutoreval/types.hpp"

namespace tutoreval {

// Size bounds used by the preprocessing filter, in binary KB.
inline constexpr std::uint64_t kDefaultMinBytes = 2 * 1024;
inline constexpr std::uint64_t kDefaultMaxBytes = 11 * 1024;

struct Transcript {
  std::string id;           // file stem, unique within a corpus
  std::string text;         // raw dialogue text, no speaker markup assumed
  std::uint64_t size_bytes = 0;  // byte length of the source file
};

struct Corpus {
  std::vector<Transcript> transcripts;

  const Transcript* find(std::string_view id) const {
    for (const auto& t : transcripts)
      if (t.id == id) return &t;
    return nullptr;
  }
  bool contains(std::string_view id) const { return find(id) != nullptr; }
  size_t size() const { return transcripts.size(); }
};

struct LoadError {
  std::string path;
  std::string message;
};

struct LoadResult {
  Corpus corpus;
  std::vector<LoadError> errors;  // per-file problems; loading continues past them
};

inline bool is_valid_utf8(std::string_view s) {
  size_t i = 0;
  while (i < s.size()) {
    unsigned char c = s[i];
    size_t len;
    if (c < 0x80) {
      len = 1;
    } else if ((c & 0xe0) == 0xc0) {
      len = 2;
      if (c < 0xc2) return false;  // overlong
    } else if ((c & 0xf0) == 0xe0) {
      len = 3;
    } else if ((c & 0xf8) == 0xf0) {
      len = 4;
      if (c > 0xf4) return false;  // beyond U+10FFFF
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (size_t k = 1; k < len; ++k)
      if ((static_cast<unsigned char>(s[i + k]) & 0xc0) != 0x80) return false;
    if (len == 3) {
      unsigned char c1 = s[i + 1];
      if (c == 0xe0 && c1 < 0xa0) return false;                 // overlong
      if (c == 0xed && c1 > 0x9f) return false;                 // surrogate
    } else if (len == 4) {
      unsigned char c1 = s[i + 1];
      if (c == 0xf0 && c1 < 0x90) return false;                 // overlong
      if (c == 0xf4 && c1 > 0x8f) return false;                 // beyond U+10FFFF
    }
    i += len;
  }
  return true;
}

// Loads every regular file in the directory as one transcript. The id is the
// file stem; size_bytes is the file's byte length. Unreadable or non-UTF-8
// files become LoadErrors and the load continues.
inline LoadResult load_corpus(const std::filesystem::path& directory) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(directory, ec))
    throw Error(Errc::config, "corpus directory not readable: " + directory.string());

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory, ec)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  if (ec) throw Error(Errc::config, "cannot list corpus directory: " + directory.string());
  std::sort(files.begin(), files.end());

  LoadResult result;
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      result.errors.push_back({path.string(), "unreadable file"});
      continue;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) {
      result.errors.push_back({path.string(), "read failure"});
      continue;
    }
    std::string text = std::move(buf).str();
    if (!is_valid_utf8(text)) {
      result.errors.push_back({path.string(), "not valid UTF-8"});
      continue;
    }
    Transcript t;
    t.id = path.stem().string();
    t.size_bytes = text.size();
    t.text = std::move(text);
    if (result.corpus.contains(t.id)) {
      result.errors.push_back({path.string(), "duplicate transcript id '" + t.id + "'"});
      continue;
    }
    result.corpus.transcripts.push_back(std::move(t));
  }
  return result;
}

// Keeps transcripts with min_bytes <= size_bytes <= max_bytes, order preserved.
inline Corpus filter_by_size(const Corpus& corpus, std::uint64_t min_bytes = kDefaultMinBytes,
                             std::uint64_t max_bytes = kDefaultMaxBytes) {
  if (min_bytes > max_bytes)
    throw Error(Errc::contract, "filter_by_size: min_bytes exceeds max_bytes");
  Corpus out;
  for (const auto& t : corpus.transcripts)
    if (t.size_bytes >= min_bytes && t.size_bytes <= max_bytes) out.transcripts.push_back(t);
  return out;
}

struct SkillLabel {
  std::string skill_id;
  Trilabel filter = Trilabel::no;        // yes/no only
  Trilabel evaluation = Trilabel::not_applicable;
};

// Invariant: evaluation is NA exactly when filter is no.
inline SkillLabel make_skill_label(std::string skill_id, Trilabel filter, Trilabel evaluation) {
  if (filter == Trilabel::not_applicable)
    throw Error(Errc::contract, "filter label must be yes or no");
  if ((filter == Trilabel::no) != (evaluation == Trilabel::not_applicable))
    throw Error(Errc::contract,
                "evaluation must be NA exactly when filter is no (skill '" + skill_id + "')");
  return SkillLabel{std::move(skill_id), filter, evaluation};
}

struct LabelSet {
  std::string rater_id;
  std::map<std::string, std::vector<SkillLabel>> entries;  // transcript id -> labels

  const SkillLabel* find(std::string_view transcript_id, std::string_view skill_id) const {
    auto it = entries.find(std::string(transcript_id));
    if (it == entries.end()) return nullptr;
    for (const auto& l : it->second)
      if (l.skill_id == skill_id) return &l;
    return nullptr;
  }

  std::vector<std::string> transcript_ids() const {
    std::vector<std::string> ids;
    ids.reserve(entries.size());
    for (const auto& [id, _] : entries) ids.push_back(id);
    return ids;
  }

  std::vector<std::string> skills() const {
    std::vector<std::string> out;
    for (const auto& [_, labels] : entries)
      for (const auto& l : labels)
        if (std::find(out.begin(), out.end(), l.skill_id) == out.end()) out.push_back(l.skill_id);
    std::sort(out.begin(), out.end());
    return out;
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  size_t start = 0;
  for (size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      fields.emplace_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return fields;
}

}  // namespace detail

inline constexpr std::string_view kLabelCsvHeader = "transcript_id,skill_id,filter,evaluation";

// Parses the label CSV against a loaded corpus. All rows are validated before
// anything is accepted; any bad row rejects the file with its row number.
inline LabelSet import_labels(const std::filesystem::path& csv_path, const Corpus& corpus) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw Error(Errc::config, "cannot open label file: " + csv_path.string());

  LabelSet labels;
  labels.rater_id = csv_path.stem().string();

  std::vector<std::string> problems;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const int row = line_no - 1;  // data rows are numbered from 1, header excluded
    if (!line.empty() && line.back() == '\r') line.pop_back();  // CRLF
    if (line_no == 1) {
      if (trim(line) != kLabelCsvHeader)
        throw Error(Errc::contract, "label CSV header must be '" + std::string(kLabelCsvHeader) +
                                        "', got '" + line + "'");
      header_seen = true;
      continue;
    }
    if (trim(line).empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != 4) {
      problems.push_back("expected 4 fields, got " + std::to_string(fields.size()) + ", row " +
                         std::to_string(row));
      continue;
    }
    std::string tid(trim(fields[0]));
    std::string skill(trim(fields[1]));
    std::string filter_tok(trim(fields[2]));
    std::string eval_tok(trim(fields[3]));

    if (!corpus.contains(tid)) {
      problems.push_back("unknown transcript id '" + tid + "', row " + std::to_string(row));
      continue;
    }
    Trilabel filter, evaluation;
    try {
      filter = label_from_string(filter_tok);
      evaluation = label_from_string(eval_tok);
    } catch (const Error& e) {
      problems.push_back(std::string(e.what()) + ", row " + std::to_string(row));
      continue;
    }
    if (filter == Trilabel::not_applicable) {
      problems.push_back("filter must be yes or no, row " + std::to_string(row));
      continue;
    }
    if (filter == Trilabel::no && evaluation != Trilabel::not_applicable) {
      problems.push_back("evaluation present but filter is no, row " + std::to_string(row));
      continue;
    }
    if (filter == Trilabel::yes && evaluation == Trilabel::not_applicable) {
      problems.push_back("evaluation missing but filter is yes, row " + std::to_string(row));
      continue;
    }
    if (labels.find(tid, skill) != nullptr) {
      problems.push_back("duplicate (transcript, skill) pair (" + tid + ", " + skill + "), row " +
                         std::to_string(row));
      continue;
    }
    labels.entries[tid].push_back(SkillLabel{skill, filter, evaluation});
  }
  if (!header_seen) throw Error(Errc::contract, "label CSV is empty: " + csv_path.string());
  if (!problems.empty()) {
    std::string msg = "label CSV rejected (" + csv_path.string() + "):";
    for (const auto& p : problems) msg += "\n  " + p;
    throw Error(Errc::contract, msg);
  }
  return labels;
}

inline std::string export_labels(const LabelSet& labels) {
  std::string out(kLabelCsvHeader);
  out += '\n';
  for (const auto& [tid, skill_labels] : labels.entries) {
    std::vector<SkillLabel> sorted = skill_labels;
    std::sort(sorted.begin(), sorted.end(),
              [](const SkillLabel& a, const SkillLabel& b) { return a.skill_id < b.skill_id; });
    for (const auto& l : sorted) {
      out += tid;
      out += ',';
      out += l.skill_id;
      out += ',';
      out += label_to_string(l.filter);
      out += ',';
      out += label_to_string(l.evaluation);
      out += '\n';
    }
  }
  return out;
}

}  // namespace tutoreval
