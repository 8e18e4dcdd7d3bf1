#pragma once

// Flat-file ingestion and emission. Every loader rejects gaps, duplicates and
// malformed values with the offending file and line; every writer goes
// through a temp file and a rename.

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "searchsurv/errors.hpp"
#include "searchsurv/timeseries.hpp"
#include "searchsurv/unsupervised.hpp"

namespace searchsurv::io {

namespace fs = std::filesystem;

// Shortest text that parses back to exactly the same double.
inline std::string format_number(double v) {
  if (v == 0.0) return "0";
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
inline std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

// Reads a CSV file whose header must equal `header`. Blank lines are skipped.
inline std::vector<CsvRow> read_csv(const fs::path& path, const std::vector<std::string>& header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open '" + path.string() + "'");
  const std::string file = path.string();
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    auto fields = split_csv(line);
    if (!have_header) {
      if (fields != header) {
        std::string want;
        for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
        throw IngestionError(file, lineno, "expected header '" + want + "'");
      }
      have_header = true;
      continue;
    }
    if (fields.size() != header.size())
      throw IngestionError(file, lineno, "expected " + std::to_string(header.size()) + " fields, found " +
                                             std::to_string(fields.size()));
    rows.push_back({lineno, std::move(fields)});
  }
  if (!have_header) throw IngestionError(file, lineno, "missing header");
  return rows;
}

inline double parse_real(const std::string& s, const std::string& file, std::size_t line, const char* what) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v))
    throw IngestionError(file, line, std::string("malformed ") + what + " '" + s + "'");
  return v;
}

inline long long parse_count(const std::string& s, const std::string& file, std::size_t line, const char* what) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw IngestionError(file, line, std::string(what) + " must be an integer, got '" + s + "'");
  if (v < 0) throw IngestionError(file, line, std::string(what) + " must be non-negative");
  return v;
}

inline Date parse_row_date(const std::string& s, const std::string& file, std::size_t line) {
  try {
    return parse_date(s);
  } catch (const InvalidArgument& e) {
    throw IngestionError(file, line, e.what());
  }
}

// Dated values keyed by date, with the line each came from.
struct DatedColumn {
  std::map<Date, std::pair<double, std::size_t>> values;

  void add(Date d, double v, const std::string& file, std::size_t line, const std::string& label) {
    if (!values.emplace(d, std::make_pair(v, line)).second)
      throw IngestionError(file, line, "duplicate row for " + label + " on " + format_date(d) + " (first at line " +
                                           std::to_string(values.at(d).second) + ")");
  }

  TimeSeries to_series(const std::string& file, const std::string& label) const {
    if (values.empty()) throw IngestionError(file + ": no rows for " + label);
    std::vector<double> v;
    Date expect = values.begin()->first;
    for (const auto& [d, entry] : values) {
      if (d != expect)
        throw IngestionError(file, entry.second, "gap in " + label + ": missing " + format_date(expect));
      v.push_back(entry.first);
      expect = d + std::chrono::days{1};
    }
    return TimeSeries(values.begin()->first, std::move(v));
  }
};

// date,query,frequency
inline std::map<std::string, TimeSeries> load_query_frequencies(const fs::path& path) {
  const std::string file = path.string();
  std::map<std::string, DatedColumn> cols;
  for (const auto& row : read_csv(path, {"date", "query", "frequency"})) {
    const Date d = parse_row_date(row.fields[0], file, row.line);
    const std::string& q = row.fields[1];
    if (q.empty()) throw IngestionError(file, row.line, "empty query id");
    const double f = parse_real(row.fields[2], file, row.line, "frequency");
    if (f < 0.0) throw IngestionError(file, row.line, "frequency must be non-negative");
    cols[q].add(d, f, file, row.line, "query '" + q + "'");
  }
  if (cols.empty()) throw IngestionError(file + ": no data rows");
  std::map<std::string, TimeSeries> out;
  for (const auto& [q, c] : cols) out.emplace(q, c.to_series(file, "query '" + q + "'"));
  return out;
}

struct ClinicalSeries {
  TimeSeries cases;
  TimeSeries deaths;
};

// date,country,cases,deaths; all countries in the file.
inline std::map<std::string, ClinicalSeries> load_clinical(const fs::path& path) {
  const std::string file = path.string();
  std::map<std::string, std::pair<DatedColumn, DatedColumn>> cols;
  for (const auto& row : read_csv(path, {"date", "country", "cases", "deaths"})) {
    const Date d = parse_row_date(row.fields[0], file, row.line);
    const std::string& cc = row.fields[1];
    if (cc.empty()) throw IngestionError(file, row.line, "empty country code");
    const auto cases = parse_count(row.fields[2], file, row.line, "cases");
    const auto deaths = parse_count(row.fields[3], file, row.line, "deaths");
    auto& [c, m] = cols[cc];
    c.add(d, static_cast<double>(cases), file, row.line, "country '" + cc + "'");
    m.add(d, static_cast<double>(deaths), file, row.line, "country '" + cc + "'");
  }
  if (cols.empty()) throw IngestionError(file + ": no data rows");
  std::map<std::string, ClinicalSeries> out;
  for (const auto& [cc, pair] : cols)
    out.emplace(cc, ClinicalSeries{pair.first.to_series(file, "country '" + cc + "'"),
                                   pair.second.to_series(file, "country '" + cc + "'")});
  return out;
}

inline ClinicalSeries load_clinical(const fs::path& path, const std::string& country) {
  auto all = load_clinical(path);
  const auto it = all.find(country);
  if (it == all.end()) throw IngestionError(path.string() + ": no rows for country '" + country + "'");
  return it->second;
}

// date,matched,total, kept as counts so files round-trip exactly.
struct NewsCounts {
  TimeSeries matched;
  TimeSeries total;

  TimeSeries ratio() const {
    std::vector<double> r(matched.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = matched[i] / total[i];
    return TimeSeries(matched.start(), std::move(r));
  }
};

inline NewsCounts load_news_counts(const fs::path& path) {
  const std::string file = path.string();
  DatedColumn matched_col, total_col;
  for (const auto& row : read_csv(path, {"date", "matched", "total"})) {
    const Date d = parse_row_date(row.fields[0], file, row.line);
    const auto matched = parse_count(row.fields[1], file, row.line, "matched");
    const auto total = parse_count(row.fields[2], file, row.line, "total");
    if (total == 0) throw IngestionError(file, row.line, "total must be positive");
    if (matched > total) throw IngestionError(file, row.line, "matched exceeds total");
    matched_col.add(d, static_cast<double>(matched), file, row.line, "news counts");
    total_col.add(d, static_cast<double>(total), file, row.line, "news counts");
  }
  return {matched_col.to_series(file, "news counts"), total_col.to_series(file, "news counts")};
}

inline TimeSeries load_news_ratio(const fs::path& path) { return load_news_counts(path).ratio(); }

// category,weight,query; one row per member query, categories in first-seen order.
inline std::vector<unsupervised::SymptomCategory> load_categories(const fs::path& path) {
  const std::string file = path.string();
  std::vector<unsupervised::SymptomCategory> out;
  std::map<std::string, std::size_t> index;
  for (const auto& row : read_csv(path, {"category", "weight", "query"})) {
    const std::string& name = row.fields[0];
    const double w = parse_real(row.fields[1], file, row.line, "weight");
    if (name.empty() || row.fields[2].empty()) throw IngestionError(file, row.line, "empty category or query");
    auto it = index.find(name);
    if (it == index.end()) {
      it = index.emplace(name, out.size()).first;
      out.push_back({name, w, {}, name == unsupervised::kCovidTermsCategory});
    } else if (out[it->second].weight != w) {
      throw IngestionError(file, row.line, "category '" + name + "' has conflicting weights");
    }
    auto& members = out[it->second].member_queries;
    if (std::find(members.begin(), members.end(), row.fields[2]) != members.end())
      throw IngestionError(file, row.line, "query '" + row.fields[2] + "' listed twice in '" + name + "'");
    members.push_back(row.fields[2]);
  }
  for (const auto& c : out) {
    try {
      c.validate();
    } catch (const InvalidArgument& e) {
      throw IngestionError(file + ": " + e.what());
    }
  }
  return out;
}

// ---- emission ----

// Writes `content` to `path` via a sibling temp file and rename.
inline void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IngestionError("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IngestionError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IngestionError("cannot rename '" + tmp.string() + "': " + ec.message());
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Builds CSV text row by row.
class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) { row(header); }

  CsvWriter& row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) text_ += (i ? "," : "") + csv_field(fields[i]);
    text_ += '\n';
    return *this;
  }

  const std::string& str() const noexcept { return text_; }
  void save(const fs::path& path) const { write_file_atomic(path, text_); }

 private:
  std::string text_;
};

inline std::string count_text(double v) { return std::to_string(static_cast<long long>(std::llround(v))); }

inline std::string query_frequencies_csv(const std::map<std::string, TimeSeries>& queries) {
  CsvWriter w({"date", "query", "frequency"});
  for (const auto& [q, s] : queries)
    for (std::size_t i = 0; i < s.size(); ++i) w.row({format_date(s.date_at(i)), q, format_number(s[i])});
  return w.str();
}

inline std::string clinical_csv(const std::map<std::string, ClinicalSeries>& countries) {
  CsvWriter w({"date", "country", "cases", "deaths"});
  for (const auto& [cc, c] : countries) {
    if (!c.cases.same_span(c.deaths)) throw AlignmentError("cases and deaths spans differ for '" + cc + "'");
    for (std::size_t i = 0; i < c.cases.size(); ++i)
      w.row({format_date(c.cases.date_at(i)), cc, count_text(c.cases[i]), count_text(c.deaths[i])});
  }
  return w.str();
}

inline std::string news_counts_csv(const NewsCounts& news) {
  if (!news.matched.same_span(news.total)) throw AlignmentError("matched and total spans differ");
  CsvWriter w({"date", "matched", "total"});
  for (std::size_t i = 0; i < news.matched.size(); ++i)
    w.row({format_date(news.matched.date_at(i)), count_text(news.matched[i]), count_text(news.total[i])});
  return w.str();
}

// Counts for a ratio series over a fixed daily total.
inline NewsCounts news_counts_from_ratio(const TimeSeries& ratio, long long total = 1000000) {
  std::vector<double> m(ratio.size()), t(ratio.size(), static_cast<double>(total));
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = static_cast<double>(std::llround(ratio[i] * static_cast<double>(total)));
  return {TimeSeries(ratio.start(), std::move(m)), TimeSeries(ratio.start(), std::move(t))};
}

inline std::string categories_csv(const std::vector<unsupervised::SymptomCategory>& cats) {
  CsvWriter w({"category", "weight", "query"});
  for (const auto& c : cats)
    for (const auto& q : c.member_queries) w.row({c.name, format_number(c.weight), q});
  return w.str();
}

// date,<name>... for series sharing one span.
inline std::string series_csv(const std::vector<std::string>& names, const std::vector<TimeSeries>& series) {
  if (names.size() != series.size() || series.empty()) throw InvalidArgument("one name per series is required");
  for (const auto& s : series)
    if (!s.same_span(series.front())) throw AlignmentError("series written side by side must share a span");
  std::vector<std::string> header{"date"};
  header.insert(header.end(), names.begin(), names.end());
  CsvWriter w(header);
  for (std::size_t i = 0; i < series.front().size(); ++i) {
    std::vector<std::string> row{format_date(series.front().date_at(i))};
    for (const auto& s : series) row.push_back(format_number(s[i]));
    w.row(row);
  }
  return w.str();
}

// ---- hashing ----

inline std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw NumericalError("SHA-256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xF];
  }
  return out;
}

inline std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

}  // namespace searchsurv::io
