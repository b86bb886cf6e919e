#include "feedloc/evaluation.hpp"

#include <cstdio>
#include <nlohmann/json.hpp>
#include <sstream>

#include "feedloc/error.hpp"
#include "feedloc/stats.hpp"

namespace feedloc {

std::vector<RecallThreshold> default_thresholds() { return {{5.0, 5.0}, {1.0, 1.0}}; }

std::vector<RecallThreshold> parse_thresholds(const std::string& text) {
  std::vector<RecallThreshold> out;
  std::stringstream groups(text);
  std::string group;
  while (std::getline(groups, group, ';')) {
    if (group.empty()) continue;
    RecallThreshold t;
    char comma = 0;
    std::istringstream in(group);
    if (!(in >> t.translation_cm >> comma >> t.rotation_deg) || comma != ',' || !(in >> std::ws).eof()) {
      throw Error(ErrorCode::InvalidSpec, "threshold '" + group + "' is not of the form cm,deg");
    }
    if (!(t.translation_cm > 0.0 && t.rotation_deg > 0.0)) {
      throw Error(ErrorCode::InvalidSpec, "thresholds must be positive");
    }
    out.push_back(t);
  }
  if (out.empty()) throw Error(ErrorCode::InvalidSpec, "no thresholds given");
  return out;
}

PoseError pose_error(const RigidPose& estimate, const RigidPose& gt) {
  return {100.0 * (estimate.center - gt.center).norm(), rotation_angle(estimate.rotation, gt.rotation)};
}

EvaluationReport summarize(std::span<const PoseError> errors, std::span<const RecallThreshold> thresholds) {
  if (errors.empty()) throw Error(ErrorCode::EmptyInput, "no pose errors to summarize");
  EvaluationReport r;
  r.count = errors.size();
  std::vector<double> t;
  std::vector<double> q;
  for (const PoseError& e : errors) {
    t.push_back(e.translation_cm);
    q.push_back(e.rotation_deg);
  }
  r.median_translation_cm = median(std::move(t));
  r.median_rotation_deg = median(std::move(q));
  for (const RecallThreshold& th : thresholds) {
    std::size_t hits = 0;
    for (const PoseError& e : errors) {
      if (e.translation_cm <= th.translation_cm && e.rotation_deg <= th.rotation_deg) ++hits;
    }
    r.recall.push_back({th, static_cast<double>(hits) / static_cast<double>(errors.size())});
  }
  return r;
}

std::string format_report_text(const EvaluationReport& r) {
  std::ostringstream out;
  char line[128];
  out << "queries\t" << r.count << '\n';
  std::snprintf(line, sizeof line, "median\t%.4f cm\t%.4f deg\n", r.median_translation_cm, r.median_rotation_deg);
  out << line;
  for (const RecallEntry& e : r.recall) {
    std::snprintf(line, sizeof line, "recall@(%g cm, %g deg)\t%.2f%%\n", e.threshold.translation_cm,
                  e.threshold.rotation_deg, 100.0 * e.recall);
    out << line;
  }
  return out.str();
}

std::string format_report_json(const EvaluationReport& r) {
  nlohmann::ordered_json j;
  j["queries"] = r.count;
  j["median_translation_cm"] = r.median_translation_cm;
  j["median_rotation_deg"] = r.median_rotation_deg;
  auto recall = nlohmann::ordered_json::array();
  for (const RecallEntry& e : r.recall) {
    recall.push_back({{"translation_cm", e.threshold.translation_cm},
                      {"rotation_deg", e.threshold.rotation_deg},
                      {"recall", e.recall}});
  }
  j["recall"] = std::move(recall);
  return j.dump(2) + "\n";
}

}  // namespace feedloc
