#pragma once

#include <lrlasso/common.hpp>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lrlasso {

// Name of the constant feature appended by augment_ones().
inline constexpr std::string_view kOnesFeature = "_one";

struct Dataset {
  Matrix x;  // n x p, strictly positive
  Vector y;
  std::vector<std::string> feature_names;
  std::optional<std::vector<std::string>> group_ids;
  Family family = Family::gaussian;

  Index n() const { return x.rows(); }
  Index p() const { return x.cols(); }

  // Throws DomainError / DimensionError when an invariant does not hold.
  void validate() const;
};

struct CsvOptions {
  std::string response_column;
  std::optional<std::string> group_column;
  double pseudocount = 0.0;
  Family family = Family::gaussian;
};

// Reads a header-row CSV. Every column other than the response and the group
// column is a feature; feature order follows the file.
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options);
Dataset parse_csv(std::string_view text, const CsvOptions& options);

// Writes the features, then the response (named `response_name`), then the
// group column if present. Values are printed with round-trip precision.
void write_csv(const Dataset& data, const std::filesystem::path& path,
               std::string_view response_name = "y",
               std::string_view group_name = "group");
std::string format_csv(const Dataset& data, std::string_view response_name = "y",
                       std::string_view group_name = "group");

struct LogDesign {
  Matrix w;
  Vector column_means;  // means of log(x) before centering
  Vector column_sds;    // sample sds of log(x) (n - 1 denominator)
  bool centered = false;
  bool scaled = false;
};

LogDesign log_design(const Dataset& data, bool center, bool scale);

// Mean-0 / variance-1 version of an arbitrary matrix; constant columns throw.
LogDesign standardize(const Eigen::Ref<const Matrix>& w);

struct RatioExpansion {
  Matrix z;                        // column c = w[:, pairs[c].first] - w[:, pairs[c].second]
  std::vector<FeaturePair> pairs;  // lexicographic
};

// All C(q, 2) log-ratio columns among `support` (or all p features).
RatioExpansion expand_ratios(const Eigen::Ref<const Matrix>& w,
                             std::optional<std::span<const Index>> support = std::nullopt);

std::vector<FeaturePair> all_pairs(std::span<const Index> features);

// Appends the constant feature "_one"; log-ratios against it are plain logs.
Dataset augment_ones(const Dataset& data);

// Row subset helpers used by cross-validation.
Matrix select_rows(const Eigen::Ref<const Matrix>& m, std::span<const Index> rows);
Matrix select_rows(const Matrix& m, std::span<const Index> rows);
Vector select_rows(const Vector& v, std::span<const Index> rows);

}  // namespace lrlasso
