#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "raschkit/error.hpp"
#include "raschkit/response_matrix.hpp"

namespace raschkit {

enum class MatrixFormat { dense_csv, sparse_jsonl };

inline MatrixFormat matrix_format_from_name(const std::string& name) {
  if (name == "dense-csv") return MatrixFormat::dense_csv;
  if (name == "sparse-jsonl") return MatrixFormat::sparse_jsonl;
  throw DomainError("unknown matrix format '" + name +
                    "' (expected dense-csv or sparse-jsonl)");
}

inline const char* matrix_format_name(MatrixFormat f) {
  return f == MatrixFormat::dense_csv ? "dense-csv" : "sparse-jsonl";
}

namespace detail {

/// Shortest decimal representation that round-trips the double exactly.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& path,
                           std::size_t line) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  const auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc{} || res.ptr != e)
    throw ParseError(path, line, "expected a number, got '" + s + "'");
  return v;
}

/// Writes content to <path>.tmp then renames over path.
inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("cannot rename '" + tmp.string() + "' to '" + path.string() +
                      "': " + ec.message());
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

inline void check_id_writable(const std::string& id, const char* what) {
  if (id.empty()) throw DomainError(std::string("empty ") + what + " id");
  if (id.find(',') != std::string::npos || id.find('\n') != std::string::npos ||
      id.find('\r') != std::string::npos || id.front() == '#')
    throw DomainError(std::string(what) + " id '" + id +
                      "' cannot be serialized (contains ',' or newline, or starts with '#')");
}

/// Reads all lines, stripping a trailing '\r'. Lines beginning with '#' are
/// comments; they are returned too so callers can keep line numbers right.
inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline bool skip_line(const std::string& line) {
  return line.empty() || line.front() == '#';
}

inline std::string comment_block(const std::vector<std::string>& comments) {
  std::string out;
  for (const auto& c : comments) out += "# " + c + "\n";
  return out;
}

}  // namespace detail

/// Loads a response matrix. dense-csv: header `subject_id,<item ids...>`,
/// rows of {0,1,NA}. sparse-jsonl: one {"subject","item","correct"} object
/// per line; subjects/items ordered by first appearance. Lines starting with
/// '#' are ignored in both formats.
inline ResponseMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format) {
  const auto lines = detail::read_lines(path);
  const std::string p = path.string();

  if (format == MatrixFormat::dense_csv) {
    std::size_t ln = 0;
    std::size_t header_line = 0;
    std::vector<std::string> item_ids;
    for (; ln < lines.size(); ++ln) {
      if (detail::skip_line(lines[ln])) continue;
      auto fields = detail::split_csv(lines[ln]);
      if (fields.size() < 2) throw ParseError(p, ln + 1, "header has no items");
      item_ids.assign(fields.begin() + 1, fields.end());
      header_line = ln + 1;
      ++ln;
      break;
    }
    if (header_line == 0) throw ParseError(p, lines.size(), "no subjects (empty file)");

    std::vector<std::string> subject_ids;
    std::vector<Cell> cells;
    for (; ln < lines.size(); ++ln) {
      if (detail::skip_line(lines[ln])) continue;
      auto fields = detail::split_csv(lines[ln]);
      if (fields.size() != item_ids.size() + 1)
        throw ParseError(p, ln + 1,
                         "row has " + std::to_string(fields.size() - 1) +
                             " cells, expected " + std::to_string(item_ids.size()));
      subject_ids.push_back(fields[0]);
      for (std::size_t i = 1; i < fields.size(); ++i) {
        const std::string& tok = fields[i];
        if (tok == "1") cells.push_back(Cell::correct);
        else if (tok == "0") cells.push_back(Cell::incorrect);
        else if (tok == "NA") cells.push_back(Cell::missing);
        else throw ParseError(p, ln + 1, "invalid cell token '" + tok + "' (expected 0, 1 or NA)");
      }
    }
    if (subject_ids.empty()) throw ParseError(p, lines.size(), "no subjects");
    try {
      return ResponseMatrix(std::move(subject_ids), std::move(item_ids), std::move(cells));
    } catch (const DomainError& e) {
      throw ParseError(p, header_line, e.what());
    }
  }

  // sparse-jsonl
  std::vector<std::string> subject_ids, item_ids;
  std::unordered_map<std::string, std::size_t> subject_index, item_index;
  struct Rec { std::size_t j, i; bool correct; std::size_t line; };
  std::vector<Rec> recs;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    if (detail::skip_line(lines[ln])) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(lines[ln]);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(p, ln + 1, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object() || !obj.contains("subject") || !obj.contains("item") ||
        !obj.contains("correct") || !obj["subject"].is_string() ||
        !obj["item"].is_string() || !obj["correct"].is_boolean())
      throw ParseError(p, ln + 1,
                       "expected {\"subject\": <string>, \"item\": <string>, \"correct\": <bool>}");
    const std::string s = obj["subject"], i = obj["item"];
    if (subject_index.emplace(s, subject_ids.size()).second) subject_ids.push_back(s);
    if (item_index.emplace(i, item_ids.size()).second) item_ids.push_back(i);
    recs.push_back({subject_index.at(s), item_index.at(i), obj["correct"].get<bool>(), ln + 1});
  }
  if (subject_ids.empty()) throw ParseError(p, lines.size(), "no subjects");
  std::vector<Cell> cells(subject_ids.size() * item_ids.size(), Cell::missing);
  for (const auto& r : recs) {
    Cell& c = cells[r.j * item_ids.size() + r.i];
    if (c != Cell::missing)
      throw ParseError(p, r.line, "duplicate record for subject '" + subject_ids[r.j] +
                                      "', item '" + item_ids[r.i] + "'");
    c = r.correct ? Cell::correct : Cell::incorrect;
  }
  return ResponseMatrix(std::move(subject_ids), std::move(item_ids), std::move(cells));
}

/// Saves a matrix. Comment lines are embedded verbatim (prefixed "# ").
/// sparse-jsonl stores only non-missing cells, so matrices with an
/// all-missing subject or item cannot round-trip through it and are rejected.
inline void save_matrix(const ResponseMatrix& m, const std::filesystem::path& path,
                        MatrixFormat format,
                        const std::vector<std::string>& comments = {}) {
  for (const auto& id : m.subject_ids()) detail::check_id_writable(id, "subject");
  for (const auto& id : m.item_ids()) detail::check_id_writable(id, "item");

  std::string out = detail::comment_block(comments);
  if (format == MatrixFormat::dense_csv) {
    out += "subject_id";
    for (const auto& id : m.item_ids()) out += "," + id;
    out += "\n";
    for (std::size_t j = 0; j < m.n_subjects(); ++j) {
      out += m.subject_ids()[j];
      for (std::size_t i = 0; i < m.n_items(); ++i) {
        switch (m.cell(j, i)) {
          case Cell::correct: out += ",1"; break;
          case Cell::incorrect: out += ",0"; break;
          default: out += ",NA";
        }
      }
      out += "\n";
    }
  } else {
    for (std::size_t n : m.subject_response_counts())
      if (n == 0)
        throw DomainError("save_matrix: sparse-jsonl cannot represent a subject "
                          "with no responses; prune first");
    for (std::size_t n : m.item_response_counts())
      if (n == 0)
        throw DomainError("save_matrix: sparse-jsonl cannot represent an item "
                          "with no responses; prune first");
    for (std::size_t j = 0; j < m.n_subjects(); ++j)
      for (std::size_t i = 0; i < m.n_items(); ++i) {
        if (m.missing(j, i)) continue;
        nlohmann::json obj;
        obj["subject"] = m.subject_ids()[j];
        obj["item"] = m.item_ids()[i];
        obj["correct"] = m.correct(j, i);
        out += obj.dump() + "\n";
      }
  }
  detail::write_file_atomic(path, out);
}

/// Loads predictions (`{"subject","item","label"}` per line) and gold labels
/// (`{"item","gold"}` per line) into a LabeledOutputs ready for grading.
inline LabeledOutputs load_labeled_outputs(const std::filesystem::path& predictions_path,
                                           const std::filesystem::path& gold_path) {
  LabeledOutputs out;
  {
    const auto lines = detail::read_lines(gold_path);
    const std::string p = gold_path.string();
    std::unordered_set<std::string> seen;
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
      if (detail::skip_line(lines[ln])) continue;
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(lines[ln]);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(p, ln + 1, std::string("invalid JSON: ") + e.what());
      }
      if (!obj.is_object() || !obj.contains("item") || !obj.contains("gold") ||
          !obj["item"].is_string() || !obj["gold"].is_string())
        throw ParseError(p, ln + 1, "expected {\"item\": <string>, \"gold\": <string>}");
      const std::string item = obj["item"];
      if (!seen.insert(item).second)
        throw ParseError(p, ln + 1, "duplicate gold label for item '" + item + "'");
      out.item_ids.push_back(item);
      out.gold_labels.push_back(obj["gold"]);
    }
  }
  {
    const auto lines = detail::read_lines(predictions_path);
    const std::string p = predictions_path.string();
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
      if (detail::skip_line(lines[ln])) continue;
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(lines[ln]);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(p, ln + 1, std::string("invalid JSON: ") + e.what());
      }
      if (!obj.is_object() || !obj.contains("subject") || !obj.contains("item") ||
          !obj.contains("label") || !obj["subject"].is_string() ||
          !obj["item"].is_string() || !obj["label"].is_string())
        throw ParseError(p, ln + 1,
                         "expected {\"subject\": <string>, \"item\": <string>, \"label\": <string>}");
      out.predictions.push_back({obj["subject"], obj["item"], obj["label"]});
    }
  }
  return out;
}

/// A parameter table: one id column followed by numeric columns.
struct ParamTable {
  std::vector<std::string> column_names;  // including the id column
  std::vector<std::string> ids;
  std::vector<std::vector<double>> columns;  // one vector per numeric column

  const std::vector<double>& column(const std::string& name) const {
    for (std::size_t k = 1; k < column_names.size(); ++k)
      if (column_names[k] == name) return columns[k - 1];
    throw DomainError("no column named '" + name + "'");
  }
};

inline ParamTable load_params_csv(const std::filesystem::path& path) {
  const auto lines = detail::read_lines(path);
  const std::string p = path.string();
  ParamTable t;
  std::size_t ln = 0;
  for (; ln < lines.size(); ++ln) {
    if (detail::skip_line(lines[ln])) continue;
    t.column_names = detail::split_csv(lines[ln]);
    if (t.column_names.size() < 2)
      throw ParseError(p, ln + 1, "need an id column and at least one value column");
    ++ln;
    break;
  }
  if (t.column_names.empty()) throw ParseError(p, lines.size(), "empty parameter file");
  t.columns.assign(t.column_names.size() - 1, {});
  std::unordered_set<std::string> seen;
  for (; ln < lines.size(); ++ln) {
    if (detail::skip_line(lines[ln])) continue;
    auto fields = detail::split_csv(lines[ln]);
    if (fields.size() != t.column_names.size())
      throw ParseError(p, ln + 1, "row has " + std::to_string(fields.size()) +
                                      " fields, expected " +
                                      std::to_string(t.column_names.size()));
    if (!seen.insert(fields[0]).second)
      throw ParseError(p, ln + 1, "duplicate id '" + fields[0] + "'");
    t.ids.push_back(fields[0]);
    for (std::size_t k = 1; k < fields.size(); ++k)
      t.columns[k - 1].push_back(detail::parse_double(fields[k], p, ln + 1));
  }
  if (t.ids.empty()) throw ParseError(p, lines.size(), "no rows in parameter file");
  return t;
}

inline void save_params_csv(const std::filesystem::path& path,
                            const std::vector<std::string>& column_names,
                            const std::vector<std::string>& ids,
                            const std::vector<std::vector<double>>& columns,
                            const std::vector<std::string>& comments = {}) {
  if (column_names.size() != columns.size() + 1)
    throw DomainError("save_params_csv: column name count mismatch");
  for (const auto& col : columns)
    if (col.size() != ids.size())
      throw DomainError("save_params_csv: column length mismatch");
  for (const auto& id : ids) detail::check_id_writable(id, "row");

  std::string out = detail::comment_block(comments);
  for (std::size_t k = 0; k < column_names.size(); ++k)
    out += (k ? "," : "") + column_names[k];
  out += "\n";
  for (std::size_t r = 0; r < ids.size(); ++r) {
    out += ids[r];
    for (const auto& col : columns) out += "," + detail::format_double(col[r]);
    out += "\n";
  }
  detail::write_file_atomic(path, out);
}

/// Trace CSV: one integer index column plus one value column.
inline void save_trace_csv(const std::filesystem::path& path,
                           const std::string& index_name, const std::string& value_name,
                           const std::vector<double>& values,
                           const std::vector<std::string>& comments = {}) {
  std::string out = detail::comment_block(comments);
  out += index_name + "," + value_name + "\n";
  for (std::size_t k = 0; k < values.size(); ++k)
    out += std::to_string(k) + "," + detail::format_double(values[k]) + "\n";
  detail::write_file_atomic(path, out);
}

}  // namespace raschkit
