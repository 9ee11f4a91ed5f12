#include <lrlasso/model_io.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace lrlasso {

using Json = nlohmann::ordered_json;

std::string model_to_json(const ModelFile& model, int indent) {
  model.theta.validate();
  if (static_cast<Index>(model.feature_names.size()) != model.theta.p) {
    throw DimensionError("model has " + std::to_string(model.theta.p) + " features but " +
                         std::to_string(model.feature_names.size()) + " names");
  }
  Json doc;
  doc["p"] = model.theta.p;
  doc["feature_names"] = model.feature_names;
  doc["intercept"] = model.theta.intercept;
  doc["family"] = std::string(to_string(model.family));
  Json pairs = Json::array();
  for (const auto& [pair, value] : model.theta.pairs) {
    pairs.push_back({{"j", pair.first + 1},
                     {"k", pair.second + 1},
                     {"name_j", model.feature_names[static_cast<std::size_t>(pair.first)]},
                     {"name_k", model.feature_names[static_cast<std::size_t>(pair.second)]},
                     {"theta", value}});
  }
  doc["pairs"] = std::move(pairs);
  Json meta;
  meta["lambda"] = model.lambda;
  meta["k"] = model.k ? Json(*model.k) : Json(nullptr);
  meta["gamma"] = model.gamma;
  meta["method"] = model.method;
  doc["fit_meta"] = std::move(meta);
  return doc.dump(indent);
}

ModelFile model_from_json(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("model JSON: ") + e.what());
  }
  try {
    ModelFile model;
    model.theta.p = doc.at("p").get<Index>();
    model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    model.theta.intercept = doc.at("intercept").get<double>();
    model.family = parse_family(doc.at("family").get<std::string>());
    if (static_cast<Index>(model.feature_names.size()) != model.theta.p) {
      throw DimensionError("model JSON: p does not match the number of feature names");
    }
    for (const auto& entry : doc.at("pairs")) {
      const Index j = entry.at("j").get<Index>() - 1;
      const Index k = entry.at("k").get<Index>() - 1;
      const double value = entry.at("theta").get<double>();
      if (j < 0 || k < 0 || j >= model.theta.p || k >= model.theta.p) {
        throw DomainError("model JSON: pair index out of range");
      }
      model.theta.set({j, k}, value);
    }
    model.theta.validate();
    if (doc.contains("fit_meta")) {
      const Json& meta = doc.at("fit_meta");
      model.lambda = meta.value("lambda", 0.0);
      model.gamma = meta.value("gamma", 0.0);
      model.method = meta.value("method", std::string());
      if (meta.contains("k") && !meta.at("k").is_null()) model.k = meta.at("k").get<Index>();
    }
    return model;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("model JSON: ") + e.what());
  }
}

std::string ratio_table(const PairCoefficients& theta, const std::vector<std::string>& names) {
  std::vector<std::pair<FeaturePair, double>> rows(theta.pairs.begin(), theta.pairs.end());
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return std::abs(a.second) > std::abs(b.second); });
  std::ostringstream out;
  for (const auto& [pair, value] : rows) {
    // Print each ratio with a positive coefficient when possible, as in
    // "log(X_a / X_b) -> 0.8", flipping the orientation for negative values.
    FeaturePair shown = pair;
    double coef = value;
    if (coef < 0.0) {
      std::swap(shown.first, shown.second);
      coef = -coef;
    }
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.6g", coef);
    out << "log(" << names.at(static_cast<std::size_t>(shown.first)) << " / "
        << names.at(static_cast<std::size_t>(shown.second)) << ")  ->  " << buffer << '\n';
  }
  if (rows.empty()) out << "(no log-ratios selected; intercept-only model)\n";
  return out.str();
}

}  // namespace lrlasso
