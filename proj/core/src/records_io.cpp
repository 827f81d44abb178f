#include "atomicinv/csv.hpp"
#include "atomicinv/experiment.hpp"
#include "atomicinv/serialization.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

namespace atomicinv {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value, std::chars_format::general, 17);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buffer, end);
}

std::string csv_field(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out += ',';
    out += csv_field(fields[i]);
  }
  out += "\r\n";
  return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool row_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        row_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        row_started = true;
        break;
      case '\r':
        break;
      case '\n':
        row.push_back(std::move(field));
        field.clear();
        rows.push_back(std::move(row));
        row.clear();
        row_started = false;
        break;
      default:
        field += c;
        row_started = true;
    }
  }
  if (quoted) throw std::invalid_argument("parse_csv: unterminated quoted field");
  if (row_started || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "'");
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("read from '" + path.string() + "' failed");
  return buffer.str();
}

namespace {

const std::vector<std::string> kRecordColumns = {
    "preset",         "n",          "p",           "complexity",       "grid_index",       "replicate",
    "seed",           "l2_error",   "atomic_error", "prediction_error", "lambda",           "eta",
    "converged",      "iterations", "image_width", "contrast_ids",     "contrast_roles",   "covered",
    "ci_widths",      "points",     "truths",      "p_values",         "remainder_realized", "remainder_bound",
    "runtime_ms"};

template <typename T, typename F>
std::string join(const std::vector<T>& items, F format) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += '|';
    out += format(items[i]);
  }
  return out;
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  if (text.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t bar = text.find('|', start);
    out.push_back(text.substr(start, bar - start));
    if (bar == std::string::npos) break;
    start = bar + 1;
  }
  return out;
}

double parse_double(const std::string& text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw std::invalid_argument("records csv: bad number '" + text + "'");
  }
  return value;
}

template <typename Int>
Int parse_int(const std::string& text) {
  Int value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw std::invalid_argument("records csv: bad integer '" + text + "'");
  }
  return value;
}

std::string optional_double(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

std::string records_csv(const std::vector<ExperimentRecord>& records, bool include_runtime) {
  std::vector<std::string> header = kRecordColumns;
  if (!include_runtime) header.pop_back();
  std::string out = csv_row(header);
  for (const ExperimentRecord& r : records) {
    const auto& c = r.contrasts;
    std::vector<std::string> row = {
        r.preset,
        std::to_string(r.n),
        std::to_string(r.p),
        std::to_string(r.complexity),
        std::to_string(r.grid_index),
        std::to_string(r.replicate),
        std::to_string(r.seed),
        format_double(r.l2_error),
        format_double(r.atomic_error),
        format_double(r.prediction_error),
        format_double(r.lambda),
        format_double(r.eta),
        r.converged ? "1" : "0",
        std::to_string(r.iterations),
        format_double(r.image_width),
        join(c, [](const ContrastOutcome& o) { return o.id; }),
        join(c, [](const ContrastOutcome& o) { return o.role; }),
        join(c, [](const ContrastOutcome& o) { return std::string(o.covered ? "1" : "0"); }),
        join(c, [](const ContrastOutcome& o) { return format_double(o.ci_width); }),
        join(c, [](const ContrastOutcome& o) { return format_double(o.point); }),
        join(c, [](const ContrastOutcome& o) { return format_double(o.truth); }),
        join(c, [](const ContrastOutcome& o) { return format_double(o.p_value); }),
        optional_double(r.remainder_realized),
        optional_double(r.remainder_bound),
    };
    if (include_runtime) row.push_back(format_double(r.runtime_ms));
    out += csv_row(row);
  }
  return out;
}

std::vector<ExperimentRecord> parse_records_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  if (rows.empty() || rows.front() != kRecordColumns) {
    throw std::invalid_argument("records csv: unexpected header");
  }
  std::vector<ExperimentRecord> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != kRecordColumns.size()) {
      throw std::invalid_argument("records csv: row " + std::to_string(i) + " has " + std::to_string(f.size()) +
                                  " fields");
    }
    ExperimentRecord r;
    r.preset = f[0];
    r.n = parse_int<Index>(f[1]);
    r.p = parse_int<Index>(f[2]);
    r.complexity = parse_int<Index>(f[3]);
    r.grid_index = parse_int<Index>(f[4]);
    r.replicate = parse_int<Index>(f[5]);
    r.seed = parse_int<std::uint64_t>(f[6]);
    r.l2_error = parse_double(f[7]);
    r.atomic_error = parse_double(f[8]);
    r.prediction_error = parse_double(f[9]);
    r.lambda = parse_double(f[10]);
    r.eta = parse_double(f[11]);
    r.converged = f[12] == "1";
    r.iterations = parse_int<int>(f[13]);
    r.image_width = parse_double(f[14]);
    const auto ids = split(f[15]);
    const auto roles = split(f[16]);
    const auto covered = split(f[17]);
    const auto widths = split(f[18]);
    const auto points = split(f[19]);
    const auto truths = split(f[20]);
    const auto pvalues = split(f[21]);
    for (const auto* list : {&roles, &covered, &widths, &points, &truths, &pvalues}) {
      if (list->size() != ids.size()) throw std::invalid_argument("records csv: ragged contrast lists");
    }
    for (std::size_t k = 0; k < ids.size(); ++k) {
      r.contrasts.push_back({ids[k], roles[k], covered[k] == "1", parse_double(widths[k]), parse_double(points[k]),
                             parse_double(truths[k]), parse_double(pvalues[k])});
    }
    if (!f[22].empty()) r.remainder_realized = parse_double(f[22]);
    if (!f[23].empty()) r.remainder_bound = parse_double(f[23]);
    r.runtime_ms = parse_double(f[24]);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ExperimentRecord> read_records_csv(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return parse_records_csv(text);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

std::string summaries_csv(const std::vector<GridSummary>& summaries) {
  std::string out = csv_row({"preset", "grid_index", "n", "p", "complexity", "replicates", "nonconverged",
                             "median_l2_error", "median_atomic_error", "median_prediction_error", "median_lambda",
                             "median_image_width"});
  for (const GridSummary& s : summaries) {
    out += csv_row({s.preset, std::to_string(s.grid_index), std::to_string(s.n), std::to_string(s.p),
                    std::to_string(s.complexity), std::to_string(s.replicates), std::to_string(s.nonconverged),
                    format_double(s.median_l2_error), format_double(s.median_atomic_error),
                    format_double(s.median_prediction_error), format_double(s.median_lambda),
                    format_double(s.median_image_width)});
  }
  return out;
}

std::string error_vs_n_csv(const std::vector<GridSummary>& summaries) {
  std::string out = csv_row({"preset", "n", "statistic", "value"});
  for (const GridSummary& s : summaries) {
    const std::string n = std::to_string(s.n);
    out += csv_row({s.preset, n, "median_l2_error", format_double(s.median_l2_error)});
    out += csv_row({s.preset, n, "median_atomic_error", format_double(s.median_atomic_error)});
    out += csv_row({s.preset, n, "median_prediction_error", format_double(s.median_prediction_error)});
  }
  return out;
}

std::string coverage_vs_n_csv(const std::vector<GridSummary>& summaries) {
  std::string out = csv_row({"preset", "n", "contrast_role", "coverage", "mean_ci_width"});
  for (const GridSummary& s : summaries) {
    for (const auto& [role, rate] : s.coverage) {
      out += csv_row({s.preset, std::to_string(s.n), role, format_double(rate), format_double(s.mean_ci_width.at(role))});
    }
  }
  return out;
}

std::string width_vs_dimension_csv(const std::vector<GridSummary>& summaries) {
  std::string out = csv_row({"preset", "p", "complexity", "n", "median_image_width", "median_lambda"});
  for (const GridSummary& s : summaries) {
    out += csv_row({s.preset, std::to_string(s.p), std::to_string(s.complexity), std::to_string(s.n),
                    format_double(s.median_image_width), format_double(s.median_lambda)});
  }
  return out;
}

std::string determinism_hash(const std::vector<ExperimentRecord>& records) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : records_csv(records, false)) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

ExportFormat parse_export_format(std::string_view name) {
  if (name == "csv") return ExportFormat::kCsv;
  if (name == "json") return ExportFormat::kJson;
  throw std::invalid_argument("unknown format '" + std::string(name) + "' (expected csv or json)");
}

std::vector<std::filesystem::path> export_results(const std::vector<ExperimentRecord>& records,
                                                  const std::filesystem::path& dir, ExportFormat format,
                                                  bool plotdata) {
  if (records.empty()) throw std::invalid_argument("export_results: empty record set");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());

  std::vector<std::filesystem::path> written;
  const auto emit = [&](const std::string& name, const std::string& content) {
    const std::filesystem::path path = dir / name;
    write_file_atomic(path, content);
    written.push_back(path);
  };
  if (format == ExportFormat::kCsv) {
    emit("records.csv", records_csv(records));
  } else {
    Json array = Json::array();
    for (const ExperimentRecord& r : records) array.push_back(to_json(r));
    emit("records.json", array.dump(2) + "\n");
  }
  const std::vector<GridSummary> summaries = summarize(records);
  emit("summary.csv", summaries_csv(summaries));

  Json manifest;
  manifest["records"] = records.size();
  manifest["determinism_hash"] = determinism_hash(records);
  manifest["nonconverged_fraction"] = nonconverged_fraction(records);
  manifest["summaries"] = Json::array();
  for (const GridSummary& s : summaries) manifest["summaries"].push_back(to_json(s));
  if (summaries.size() >= 3) {
    try {
      manifest["rate_fit"] = to_json(fit_rate_slope(summaries));
    } catch (const std::invalid_argument&) {
      manifest["rate_fit"] = nullptr;
    }
  }
  emit("manifest.json", manifest.dump(2) + "\n");

  if (plotdata) {
    emit("plot_error_vs_n.csv", error_vs_n_csv(summaries));
    emit("plot_coverage_vs_n.csv", coverage_vs_n_csv(summaries));
    emit("plot_width_vs_dimension.csv", width_vs_dimension_csv(summaries));
  }
  return written;
}

}  // namespace atomicinv
