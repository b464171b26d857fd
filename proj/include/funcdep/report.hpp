#pragma once

// Result records emitted by the command-line tool, with JSON serialization.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace funcdep {

struct MethodOutcome {
  double statistic = 0.0;
  double p_value = 1.0;

  bool operator==(const MethodOutcome&) const = default;
};

struct TestReport {
  std::vector<std::string> methods;
  std::map<std::string, MethodOutcome> results;
  double beta_x = 0.0;
  double beta_y = 0.0;
  bool beta_x_fixed = false;
  bool beta_y_fixed = false;
  std::uint64_t n = 0;
  std::uint64_t m = 0;
  int coarse_scale = 0;
  std::string filter;
  std::uint64_t permutations = 0;
  std::uint64_t seed = 0;
  std::string tie_rule;
  std::optional<std::uint64_t> resampled_from;
  std::optional<double> wall_time_s;

  bool operator==(const TestReport&) const = default;
};

inline void to_json(nlohmann::ordered_json& j, const MethodOutcome& o) {
  j = nlohmann::ordered_json{{"statistic", o.statistic}, {"p_value", o.p_value}};
}

inline void from_json(const nlohmann::ordered_json& j, MethodOutcome& o) {
  j.at("statistic").get_to(o.statistic);
  j.at("p_value").get_to(o.p_value);
}

inline void to_json(nlohmann::ordered_json& j, const TestReport& r) {
  j = nlohmann::ordered_json::object();
  j["methods"] = r.methods;
  nlohmann::ordered_json res = nlohmann::ordered_json::object();
  for (const auto& name : r.methods)
    if (auto it = r.results.find(name); it != r.results.end()) res[name] = it->second;
  j["results"] = res;
  j["beta_x"] = r.beta_x;
  j["beta_y"] = r.beta_y;
  j["beta_x_fixed"] = r.beta_x_fixed;
  j["beta_y_fixed"] = r.beta_y_fixed;
  j["n"] = r.n;
  j["m"] = r.m;
  j["coarse_scale"] = r.coarse_scale;
  j["filter"] = r.filter;
  j["permutations"] = r.permutations;
  j["seed"] = r.seed;
  j["tie_rule"] = r.tie_rule;
  if (r.resampled_from) j["resampled_from"] = *r.resampled_from;
  if (r.wall_time_s) j["wall_time_s"] = *r.wall_time_s;
}

inline void from_json(const nlohmann::ordered_json& j, TestReport& r) {
  j.at("methods").get_to(r.methods);
  r.results.clear();
  for (const auto& [name, v] : j.at("results").items()) r.results[name] = v.get<MethodOutcome>();
  j.at("beta_x").get_to(r.beta_x);
  j.at("beta_y").get_to(r.beta_y);
  j.at("beta_x_fixed").get_to(r.beta_x_fixed);
  j.at("beta_y_fixed").get_to(r.beta_y_fixed);
  j.at("n").get_to(r.n);
  j.at("m").get_to(r.m);
  j.at("coarse_scale").get_to(r.coarse_scale);
  j.at("filter").get_to(r.filter);
  j.at("permutations").get_to(r.permutations);
  j.at("seed").get_to(r.seed);
  j.at("tie_rule").get_to(r.tie_rule);
  r.resampled_from = j.contains("resampled_from") ? std::optional(j["resampled_from"].get<std::uint64_t>())
                                                  : std::nullopt;
  r.wall_time_s = j.contains("wall_time_s") ? std::optional(j["wall_time_s"].get<double>()) : std::nullopt;
}

}  // namespace funcdep
