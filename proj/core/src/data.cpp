#include <lrlasso/data.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace lrlasso {

std::string_view to_string(Family family) {
  return family == Family::gaussian ? "gaussian" : "binomial";
}

Family parse_family(std::string_view name) {
  if (name == "gaussian") return Family::gaussian;
  if (name == "binomial") return Family::binomial;
  throw DomainError("unknown family '" + std::string(name) + "' (expected gaussian or binomial)");
}

void Dataset::validate() const {
  if (x.rows() < 2 || x.cols() < 2) {
    throw DimensionError("dataset needs n >= 2 and p >= 2 (got n=" + std::to_string(x.rows()) +
                         ", p=" + std::to_string(x.cols()) + ")");
  }
  if (y.size() != x.rows()) throw DimensionError("response length does not match row count");
  if (static_cast<Index>(feature_names.size()) != x.cols()) {
    throw DimensionError("feature_names length does not match column count");
  }
  if (group_ids && static_cast<Index>(group_ids->size()) != x.rows()) {
    throw DimensionError("group_ids length does not match row count");
  }
  std::set<std::string_view> seen;
  for (const auto& name : feature_names) {
    if (!seen.insert(name).second) throw DomainError("duplicate feature name '" + name + "'");
  }
  for (Index j = 0; j < x.cols(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      if (!(x(i, j) > 0.0) || !std::isfinite(x(i, j))) {
        throw DomainError("feature '" + feature_names[static_cast<std::size_t>(j)] + "' row " +
                          std::to_string(i + 1) + " is not strictly positive (" +
                          std::to_string(x(i, j)) + ")");
      }
    }
  }
  for (Index i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i])) throw DomainError("response row " + std::to_string(i + 1) + " is not finite");
    if (family == Family::binomial && y[i] != 0.0 && y[i] != 1.0) {
      throw DomainError("binomial response must be 0 or 1 (row " + std::to_string(i + 1) + ")");
    }
  }
}

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        current.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  for (auto& f : fields) {
    auto first = f.find_first_not_of(" \t");
    auto last = f.find_last_not_of(" \t");
    f = first == std::string::npos ? std::string() : f.substr(first, last - first + 1);
  }
  return fields;
}

double parse_number(const std::string& cell, std::size_t line, const std::string& column) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (!cell.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ParseError("line " + std::to_string(line) + ", column '" + column +
                     "': expected a number, got '" + cell + "'");
  }
  return value;
}

std::string quote_if_needed(std::string_view s) {
  if (s.find_first_of(",\"") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

Dataset parse_csv(std::string_view text, const CsvOptions& options) {
  if (options.pseudocount < 0.0 || !std::isfinite(options.pseudocount)) {
    throw DomainError("pseudocount must be a nonnegative finite number");
  }
  std::vector<std::string> lines;
  {
    std::size_t start = 0;
    while (start <= text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      std::string line(text.substr(start, end - start));
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(std::move(line));
      start = end + 1;
    }
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw ParseError("empty CSV: header row required");

  const auto header = split_csv_line(lines[0]);
  std::optional<std::size_t> response_col;
  std::optional<std::size_t> group_col;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == options.response_column) {
      response_col = c;
    } else if (options.group_column && header[c] == *options.group_column) {
      group_col = c;
    } else {
      feature_cols.push_back(c);
    }
  }
  if (!response_col) throw ParseError("response column '" + options.response_column + "' not found in header");
  if (options.group_column && !group_col) {
    throw ParseError("group column '" + *options.group_column + "' not found in header");
  }

  const auto n = static_cast<Index>(lines.size() - 1);
  Dataset data;
  data.family = options.family;
  data.x.resize(n, static_cast<Index>(feature_cols.size()));
  data.y.resize(n);
  for (auto c : feature_cols) data.feature_names.push_back(header[c]);
  if (group_col) data.group_ids.emplace();

  for (Index i = 0; i < n; ++i) {
    const std::size_t line_no = static_cast<std::size_t>(i) + 2;
    const auto fields = split_csv_line(lines[static_cast<std::size_t>(i) + 1]);
    if (fields.size() != header.size()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    data.y[i] = parse_number(fields[*response_col], line_no, header[*response_col]);
    if (group_col) data.group_ids->push_back(fields[*group_col]);
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      const auto c = feature_cols[f];
      const double raw = parse_number(fields[c], line_no, header[c]);
      if (raw < 0.0) {
        throw ParseError("line " + std::to_string(line_no) + ", column '" + header[c] +
                         "': negative intensity " + fields[c]);
      }
      const double value = raw + options.pseudocount;
      if (!(value > 0.0)) {
        throw DomainError("line " + std::to_string(line_no) + ", column '" + header[c] +
                          "': value " + fields[c] +
                          " is not positive after pseudocount; log is undefined (use --pseudocount)");
      }
      data.x(i, static_cast<Index>(f)) = value;
    }
  }
  data.validate();
  return data;
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), options);
}

std::string format_csv(const Dataset& data, std::string_view response_name,
                       std::string_view group_name) {
  std::string out;
  for (std::size_t j = 0; j < data.feature_names.size(); ++j) {
    out += quote_if_needed(data.feature_names[j]);
    out += ',';
  }
  out += quote_if_needed(response_name);
  if (data.group_ids) {
    out += ',';
    out += quote_if_needed(group_name);
  }
  out += '\n';
  for (Index i = 0; i < data.n(); ++i) {
    for (Index j = 0; j < data.p(); ++j) {
      out += format_double(data.x(i, j));
      out += ',';
    }
    out += format_double(data.y[i]);
    if (data.group_ids) {
      out += ',';
      out += quote_if_needed((*data.group_ids)[static_cast<std::size_t>(i)]);
    }
    out += '\n';
  }
  return out;
}

void write_csv(const Dataset& data, const std::filesystem::path& path,
               std::string_view response_name, std::string_view group_name) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << format_csv(data, response_name, group_name);
}

LogDesign log_design(const Dataset& data, bool center, bool scale) {
  data.validate();
  LogDesign design;
  design.w = data.x.array().log().matrix();
  const auto n = static_cast<double>(data.n());
  design.column_means = design.w.colwise().mean().transpose();
  design.column_sds.resize(data.p());
  for (Index j = 0; j < data.p(); ++j) {
    const double ss = (design.w.col(j).array() - design.column_means[j]).square().sum();
    design.column_sds[j] = std::sqrt(ss / (n - 1.0));
  }
  if (center) {
    design.w.rowwise() -= design.column_means.transpose();
    design.centered = true;
  }
  if (scale) {
    for (Index j = 0; j < data.p(); ++j) {
      if (!(design.column_sds[j] > 1e-12 * (1.0 + std::abs(design.column_means[j])))) {
        throw DomainError("feature '" + data.feature_names[static_cast<std::size_t>(j)] +
                          "' is constant on the log scale; cannot scale a degenerate column");
      }
      design.w.col(j) /= design.column_sds[j];
    }
    design.scaled = true;
  }
  return design;
}

LogDesign standardize(const Eigen::Ref<const Matrix>& w) {
  LogDesign design;
  const double n = static_cast<double>(w.rows());
  design.column_means = w.colwise().mean().transpose();
  design.w = w.rowwise() - design.column_means.transpose();
  design.column_sds.resize(w.cols());
  for (Index j = 0; j < w.cols(); ++j) {
    const double sd = std::sqrt(design.w.col(j).squaredNorm() / (n - 1.0));
    if (!(sd > 1e-12 * (1.0 + std::abs(design.column_means[j])))) {
      throw DomainError("column " + std::to_string(j + 1) + " is constant; cannot standardize");
    }
    design.column_sds[j] = sd;
    design.w.col(j) /= sd;
  }
  design.centered = true;
  design.scaled = true;
  return design;
}

std::vector<FeaturePair> all_pairs(std::span<const Index> features) {
  std::vector<Index> sorted(features.begin(), features.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<FeaturePair> pairs;
  pairs.reserve(sorted.size() * (sorted.size() - (sorted.empty() ? 0 : 1)) / 2);
  for (std::size_t a = 0; a < sorted.size(); ++a) {
    for (std::size_t b = a + 1; b < sorted.size(); ++b) pairs.push_back({sorted[a], sorted[b]});
  }
  return pairs;
}

RatioExpansion expand_ratios(const Eigen::Ref<const Matrix>& w,
                             std::optional<std::span<const Index>> support) {
  std::vector<Index> features;
  if (support) {
    std::set<Index> unique;
    for (Index j : *support) {
      if (j < 0 || j >= w.cols()) {
        throw DimensionError("support index " + std::to_string(j) + " outside [0, " +
                             std::to_string(w.cols()) + ")");
      }
      unique.insert(j);
    }
    features.assign(unique.begin(), unique.end());
  } else {
    features.resize(static_cast<std::size_t>(w.cols()));
    for (Index j = 0; j < w.cols(); ++j) features[static_cast<std::size_t>(j)] = j;
  }
  RatioExpansion out;
  out.pairs = all_pairs(features);
  out.z.resize(w.rows(), static_cast<Index>(out.pairs.size()));
  for (std::size_t c = 0; c < out.pairs.size(); ++c) {
    out.z.col(static_cast<Index>(c)) = w.col(out.pairs[c].first) - w.col(out.pairs[c].second);
  }
  return out;
}

Dataset augment_ones(const Dataset& data) {
  for (const auto& name : data.feature_names) {
    if (name == kOnesFeature) {
      throw DomainError("dataset already has a feature named '" + std::string(kOnesFeature) + "'");
    }
  }
  Dataset out = data;
  out.x.conservativeResize(Eigen::NoChange, data.p() + 1);
  out.x.col(data.p()).setOnes();
  out.feature_names.emplace_back(kOnesFeature);
  return out;
}

Matrix select_rows(const Eigen::Ref<const Matrix>& m, std::span<const Index> rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = m.row(rows[r]);
  return out;
}

Matrix select_rows(const Matrix& m, std::span<const Index> rows) {
  return select_rows(Eigen::Ref<const Matrix>(m), rows);
}

Vector select_rows(const Vector& v, std::span<const Index> rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out[static_cast<Index>(r)] = v[rows[r]];
  return out;
}

}  // namespace lrlasso
