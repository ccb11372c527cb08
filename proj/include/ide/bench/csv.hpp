#pragma once

#include "ide/metrics.hpp"

#include <fmt/format.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ide::bench {

/// One line of results.csv.
struct ResultRow {
  std::string experiment;
  std::string algorithm;
  int trial = 0;
  Index m = 0;
  Index n = 0;
  std::string parameter;
  std::optional<SnrMeasurement> snr;  ///< absent when no ground truth
  Index k_alpha_final = 0;
  double residual_rel = 0.0;
  double elapsed_seconds = 0.0;
  std::string status = "ok";
};

inline const std::vector<std::string>& result_header() {
  static const std::vector<std::string> header = {
      "experiment", "algorithm", "trial",        "m",      "n", "parameter", "snr_db",
      "k_alpha_final", "residual_rel", "elapsed_seconds", "status"};
  return header;
}

/// Fixed-format number; infinities print as "inf", NaN as "nan".
inline std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return fmt::format("{:.10g}", v);
}

inline std::string snr_field(const std::optional<SnrMeasurement>& snr) {
  if (!snr) return "n/a";
  if (snr->infinite) return "inf";
  return num(snr->db());
}

/// RFC 4180 style quoting for fields containing a delimiter, quote or newline.
inline std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : out_(path) {
    if (!out_) throw std::ios_base::failure("cannot open " + path.string());
    path_ = path.string();
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << csv_escape(fields[i]);
    }
    out_ << '\n';
    if (!out_) throw std::ios_base::failure("write failed for " + path_);
  }

 private:
  std::ofstream out_;
  std::string path_;
};

inline std::vector<std::string> to_fields(const ResultRow& r) {
  return {r.experiment,          r.algorithm,          std::to_string(r.trial),
          std::to_string(r.m),   std::to_string(r.n),  r.parameter,
          snr_field(r.snr),      std::to_string(r.k_alpha_final),
          num(r.residual_rel),   num(r.elapsed_seconds), r.status};
}

inline void write_results(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
  CsvWriter csv(path);
  csv.row(result_header());
  for (const auto& r : rows) csv.row(to_fields(r));
}

/// Whitespace-separated columns for plotting, one point per line.
inline void write_dat(const std::filesystem::path& path,
                      const std::vector<std::vector<double>>& points,
                      std::string_view comment = {}) {
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot open " + path.string());
  if (!comment.empty()) out << "# " << comment << '\n';
  for (const auto& p : points) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (i) out << ' ';
      out << num(p[i]);
    }
    out << '\n';
  }
  if (!out) throw std::ios_base::failure("write failed for " + path.string());
}

/// Minimal reader for files produced by CsvWriter (handles quoted fields).
inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
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
        fields.push_back(std::move(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    fields.push_back(std::move(cur));
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace ide::bench
