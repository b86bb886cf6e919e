#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "feedloc/geometry.hpp"

namespace feedloc {

struct PoseError {
  double translation_cm = 0.0;
  double rotation_deg = 0.0;
};

struct RecallThreshold {
  double translation_cm = 5.0;
  double rotation_deg = 5.0;
};

std::vector<RecallThreshold> default_thresholds();

/// Parses "5,5;1,1" (cm,deg pairs separated by ';'). Throws InvalidSpec.
std::vector<RecallThreshold> parse_thresholds(const std::string& text);

PoseError pose_error(const RigidPose& estimate, const RigidPose& gt);

struct RecallEntry {
  RecallThreshold threshold;
  double recall = 0.0;  // fraction in [0, 1]
};

struct EvaluationReport {
  std::size_t count = 0;
  double median_translation_cm = 0.0;
  double median_rotation_deg = 0.0;
  std::vector<RecallEntry> recall;
};

/// Medians per axis, recall = fraction within both components. Throws EmptyInput.
EvaluationReport summarize(std::span<const PoseError> errors, std::span<const RecallThreshold> thresholds);

std::string format_report_text(const EvaluationReport& report);
std::string format_report_json(const EvaluationReport& report);

}  // namespace feedloc
