#pragma once
// Report serialization: lossless JSON round-trips for moment and distribution
// reports, CSV tables for distribution grids and central-value lists, and the
// 12-significant-digit text formatting shared by the CLI.
//
// JSON carries doubles at full precision (shortest round-trip form), so
// parse(dump(r)) reproduces every field bit for bit; the 12-digit convention
// applies to the human-facing CSV and console lines. A NaN relative error
// (zero oracle) serializes as null.

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "twistlab/lvalue.hpp"
#include "twistlab/moments.hpp"

namespace twistlab {

inline std::string format_sig(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline nlohmann::json to_json(const MomentReport& r) {
  nlohmann::json j;
  j["label"] = r.label;
  j["X"] = r.X;
  j["k"] = r.k;
  j["empirical"] = r.empirical;
  j["oracle"] = r.oracle;
  j["rel_err"] = std::isnan(r.rel_err) ? nlohmann::json() : nlohmann::json(r.rel_err);
  j["runtime_s"] = r.runtime_s;
  // First-moment oracles contain L(1, sym^2 E), whose bad primes use the
  // degree-1 local factor; those reports carry the convention flag.
  if (r.label.rfind("first_moment", 0) == 0) j["sym2_bad_primes"] = "degree-1";
  return j;
}

inline MomentReport moment_report_from_json(const nlohmann::json& j) {
  MomentReport r;
  r.label = j.at("label").get<std::string>();
  r.X = j.at("X").get<double>();
  r.k = j.at("k").get<double>();
  r.empirical = j.at("empirical").get<double>();
  r.oracle = j.at("oracle").get<double>();
  r.rel_err = j.at("rel_err").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                        : j.at("rel_err").get<double>();
  r.runtime_s = j.at("runtime_s").get<double>();
  return r;
}

inline nlohmann::json to_json(const DistributionReport& r) {
  nlohmann::json j;
  j["label"] = r.label;
  j["X"] = r.X;
  j["V"] = r.V;
  j["tail_freq"] = r.tail_freq;
  j["gauss_tail"] = r.gauss_tail;
  j["sample_size"] = r.sample_size;
  j["vanishing"] = r.vanishing;
  j["runtime_s"] = r.runtime_s;
  return j;
}

inline DistributionReport distribution_report_from_json(const nlohmann::json& j) {
  DistributionReport r;
  r.label = j.at("label").get<std::string>();
  r.X = j.at("X").get<double>();
  r.V = j.at("V").get<std::vector<double>>();
  r.tail_freq = j.at("tail_freq").get<std::vector<double>>();
  r.gauss_tail = j.at("gauss_tail").get<std::vector<double>>();
  r.sample_size = j.at("sample_size").get<u64>();
  r.vanishing = j.at("vanishing").get<u64>();
  r.runtime_s = j.at("runtime_s").get<double>();
  return r;
}

// One row per threshold: V, empirical tail frequency, Gaussian tail.
inline std::string distribution_csv(const DistributionReport& r) {
  std::string out = "V,tail_freq,gauss_tail\n";
  for (size_t i = 0; i < r.V.size(); ++i)
    out += format_sig(r.V[i]) + "," + format_sig(r.tail_freq[i]) + "," +
           format_sig(r.gauss_tail[i]) + "\n";
  return out;
}

// One row per class member: d, central value, smooth weight, AFE truncation.
inline std::string lvalues_csv(const LValueEngine& engine,
                               const std::vector<BatchEntry>& entries) {
  std::string out = "d,L_half,phi_weight,n_max_used\n";
  for (const BatchEntry& e : entries)
    out += std::to_string(e.d) + "," + format_sig(e.L) + "," + format_sig(e.weight) +
           "," + std::to_string(engine.truncation_length(e.d)) + "\n";
  return out;
}

}  // namespace twistlab
