#pragma once

#include <lrlasso/logratio.hpp>

#include <string>
#include <vector>

namespace lrlasso {

struct ModelFile {
  PairCoefficients theta;
  std::vector<std::string> feature_names;
  Family family = Family::gaussian;
  double lambda = 0.0;
  double gamma = 0.0;
  std::optional<Index> k;
  std::string method;
};

// {p, feature_names, intercept, family, pairs: [{j, k, name_j, name_k, theta}],
//  fit_meta: {lambda, k, gamma, method}}. j and k are 1-based.
std::string model_to_json(const ModelFile& model, int indent = 2);
ModelFile model_from_json(std::string_view text);

// "log(a / b)  ->  coefficient" lines, largest |theta| first.
std::string ratio_table(const PairCoefficients& theta, const std::vector<std::string>& names);

}  // namespace lrlasso
