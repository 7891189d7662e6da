#include "liquid/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include "liquid/errors.hpp"
#include "liquid/scorecard_model.hpp"

namespace liquid {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

double parse_number(std::string_view field, std::size_t line_no, std::string_view column) {
  const std::string buf(field);
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (buf.empty() || end != buf.c_str() + buf.size()) {
    throw Error(ErrorCode::SchemaViolation, "line " + std::to_string(line_no) + ": column '" +
                                                std::string(column) + "' is not numeric: '" +
                                                buf + "'");
  }
  return v;
}

}  // namespace

std::size_t Dataset::column_index(std::string_view name) const {
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c] == name) return c;
  }
  throw Error(ErrorCode::SchemaViolation, "missing column '" + std::string(name) + "'", std::string(name));
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.columns = columns;
  out.values.resize(columns.size());
  for (auto& col : out.values) col.reserve(rows.size());
  out.outcome.reserve(rows.size());
  out.weight.reserve(rows.size());
  for (const std::size_t r : rows) {
    for (std::size_t c = 0; c < columns.size(); ++c) out.values[c].push_back(values[c][r]);
    out.outcome.push_back(outcome[r]);
    out.weight.push_back(weight[r]);
  }
  return out;
}

Dataset parse_csv(std::string_view text) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto next_line = [&](std::string_view& line) {
    while (pos < text.size()) {
      const std::size_t nl = text.find('\n', pos);
      const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
      line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (!trim(line).empty()) return true;
    }
    return false;
  };

  std::string_view line;
  if (!next_line(line)) throw Error(ErrorCode::SchemaViolation, "empty CSV input");
  const auto header = split_fields(line);

  std::ptrdiff_t outcome_col = -1;
  std::ptrdiff_t weight_col = -1;
  Dataset data;
  std::vector<std::size_t> char_fields;
  for (std::size_t f = 0; f < header.size(); ++f) {
    if (header[f] == "outcome") {
      outcome_col = static_cast<std::ptrdiff_t>(f);
    } else if (header[f] == "weight") {
      weight_col = static_cast<std::ptrdiff_t>(f);
    } else {
      if (header[f].empty()) throw Error(ErrorCode::SchemaViolation, "empty column name in header");
      data.columns.emplace_back(header[f]);
      char_fields.push_back(f);
    }
  }
  if (outcome_col < 0) throw Error(ErrorCode::SchemaViolation, "missing column 'outcome'", "outcome");
  data.values.resize(data.columns.size());

  while (next_line(line)) {
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::SchemaViolation, "line " + std::to_string(line_no) + ": expected " +
                                                  std::to_string(header.size()) + " fields, got " +
                                                  std::to_string(fields.size()));
    }
    const double y = parse_number(fields[static_cast<std::size_t>(outcome_col)], line_no, "outcome");
    if (y != 0.0 && y != 1.0) {
      throw Error(ErrorCode::SchemaViolation,
                  "line " + std::to_string(line_no) + ": outcome must be 0 or 1");
    }
    double w = 1.0;
    if (weight_col >= 0) {
      w = parse_number(fields[static_cast<std::size_t>(weight_col)], line_no, "weight");
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw Error(ErrorCode::SchemaViolation,
                    "line " + std::to_string(line_no) + ": weight must be finite and >= 0");
      }
    }
    data.outcome.push_back(static_cast<int>(y));
    data.weight.push_back(w);
    for (std::size_t c = 0; c < char_fields.size(); ++c) {
      data.values[c].push_back(parse_number(fields[char_fields[c]], line_no, data.columns[c]));
    }
  }
  return data;
}

Dataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open data file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_csv(const Dataset& data, std::ostream& out) {
  out << "outcome,weight";
  for (const auto& c : data.columns) out << ',' << c;
  out << '\n';
  for (std::size_t r = 0; r < data.rows(); ++r) {
    out << data.outcome[r] << ',' << format_double(data.weight[r]);
    for (const auto& col : data.values) out << ',' << format_double(col[r]);
    out << '\n';
  }
}

DataSplit split_dataset(const Dataset& data, double val_fraction, std::uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw Error(ErrorCode::ConfigError, "val_fraction must lie in (0, 1)");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> dev_rows;
  std::vector<std::size_t> val_rows;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    (u < val_fraction ? val_rows : dev_rows).push_back(r);
  }
  return {data.subset(dev_rows), data.subset(val_rows)};
}

std::vector<std::size_t> bind_columns(const ModelSpec& spec, const Dataset& data) {
  std::vector<std::size_t> cols;
  cols.reserve(spec.characteristics.size());
  for (const auto& c : spec.characteristics) cols.push_back(data.column_index(c.column));
  return cols;
}

}  // namespace liquid
