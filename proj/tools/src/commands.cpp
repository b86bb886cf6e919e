#include "feedloc_tools/commands.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>
#include <vector>

#include "feedloc/error.hpp"
#include "feedloc/evaluation.hpp"
#include "feedloc/simulator.hpp"

namespace feedloc::tools {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "short write to " + path.string());
}

void ensure_directory(const fs::path& path) {
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + path.string() + ": " + ec.message());
}

bool is_input_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoFailure:
    case ErrorCode::InvariantViolation:
    case ErrorCode::BadMagic:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::MissingBlob:
    case ErrorCode::InvalidSpec:
    case ErrorCode::InvisibleScene:
    case ErrorCode::EmptyInput:
      return true;
    default:
      return false;
  }
}

int exit_code_for(const Error& e) { return is_input_error(e.code()) ? kExitInput : kExitPipeline; }

std::string file_stem_for(const std::string& id) {
  std::string stem = id;
  for (char& c : stem) {
    if (c == '/' || c == '\\' || c == ':') c = '_';
  }
  return stem.empty() ? "query" : stem;
}

std::vector<fs::path> bundle_directories(const fs::path& root) {
  if (fs::exists(root / "manifest.json")) return {root};
  std::vector<fs::path> dirs;
  if (fs::is_directory(root)) {
    for (const auto& entry : fs::directory_iterator(root)) {
      if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

void collect_gt(const fs::path& path, std::map<std::string, RigidPose>& gt) {
  if (fs::is_regular_file(path)) {
    const json j = json::parse(read_text(path));
    if (j.contains("gt_query_pose")) {
      gt[j.at("query_id").get<std::string>()] = pose_from_row_major(j.at("gt_query_pose").get<std::vector<double>>());
    } else if (j.contains("views")) {
      const json& q = j.at("views").at(0);
      if (!q.at("gt_pose").is_null()) {
        gt[q.at("image_id").get<std::string>()] = pose_from_row_major(q.at("gt_pose").get<std::vector<double>>());
      }
    }
    return;
  }
  if (!fs::is_directory(path)) throw Error(ErrorCode::IoFailure, "no ground truth at " + path.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(path)) {
    const auto name = entry.path().filename();
    if (entry.is_regular_file() && (name == "oracle.json" || name == "manifest.json")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& f : files) collect_gt(f, gt);
}

}  // namespace

ScaleMode parse_scale_mode(const std::string& text) {
  if (text == "auto") return ScaleMode::Auto;
  if (text == "tri_only") return ScaleMode::TriOnly;
  if (text == "traj_only") return ScaleMode::TrajOnly;
  throw Error(ErrorCode::InvalidSpec, "unknown scale mode '" + text + "'");
}

int cmd_simulate(const SimulateOptions& o, std::ostream& err) {
  try {
    const sim::SceneSpec spec = o.spec ? sim::scene_spec_from_json_text(read_text(*o.spec)) : sim::SceneSpec{};
    const sim::CorruptionSpec corruption =
        o.corruption ? sim::corruption_from_json_text(read_text(*o.corruption)) : sim::CorruptionSpec{};
    corruption.validate();
    const sim::SimulatedScene scene = sim::simulate(spec, corruption, o.seed);
    ensure_directory(o.out);
    write_bundle(scene.bundle, o.out);
    sim::write_oracle(scene.oracle, o.out / "oracle.json");
    return kExitOk;
  } catch (const Error& e) {
    err << "simulate: " << e.what() << '\n';
    return kExitInput;
  }
}

int cmd_localize(const LocalizeOptions& o, std::ostream& out, std::ostream& err) {
  std::vector<RecallThreshold> thresholds;
  try {
    o.config.validate();
    thresholds = parse_thresholds(o.thresholds);
  } catch (const Error& e) {
    err << "localize: " << e.what() << '\n';
    return kExitInput;
  }
  const std::vector<fs::path> bundles = bundle_directories(o.bundle);
  if (bundles.empty()) {
    err << "localize: no bundle found at " << o.bundle.string() << '\n';
    return kExitInput;
  }

  int status = kExitOk;
  std::vector<PoseError> errors;
  try {
    ensure_directory(o.out);
  } catch (const Error& e) {
    err << "localize: " << e.what() << '\n';
    return kExitInput;
  }
  for (const fs::path& dir : bundles) {
    try {
      const SceneBundle bundle = read_bundle(dir);
      const LocalizationResult result = localize(bundle, o.config);
      write_text(o.out / (file_stem_for(result.query_id) + ".json"), result_to_json(result));
      out << result.query_id << ": stage " << to_string(result.scale.stage_used) << ", scale " << result.scale.scale
          << ", correspondences " << result.correspondences << ", fallback " << (result.fallback ? "yes" : "no")
          << '\n';
      if (bundle.views.front().gt_pose) errors.push_back(pose_error(result.pose, *bundle.views.front().gt_pose));
    } catch (const Error& e) {
      err << "localize: " << dir.string() << ": " << e.what() << '\n';
      status = std::max(status, exit_code_for(e));
    }
  }
  if (!errors.empty()) {
    const EvaluationReport report = summarize(errors, thresholds);
    try {
      write_text(o.out / "summary.txt", format_report_text(report));
      write_text(o.out / "summary.json", format_report_json(report));
    } catch (const Error& e) {
      err << "localize: " << e.what() << '\n';
      status = std::max(status, static_cast<int>(kExitInput));
    }
  }
  return status;
}

int cmd_evaluate(const EvaluateOptions& o, std::ostream& out, std::ostream& err) {
  try {
    const std::vector<RecallThreshold> thresholds = parse_thresholds(o.thresholds);
    std::map<std::string, RigidPose> gt;
    collect_gt(o.gt, gt);

    if (!fs::is_directory(o.results)) throw Error(ErrorCode::IoFailure, "no results directory " + o.results.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(o.results)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::vector<PoseError> errors;
    for (const fs::path& f : files) {
      const json j = json::parse(read_text(f));
      if (!j.is_object() || !j.contains("query_id") || !j.contains("pose")) continue;
      const std::string id = j.at("query_id").get<std::string>();
      const auto it = gt.find(id);
      if (it == gt.end()) throw Error(ErrorCode::InvariantViolation, "no ground truth for query '" + id + "'");
      errors.push_back(pose_error(pose_from_row_major(j.at("pose").get<std::vector<double>>()), it->second));
    }
    if (errors.empty()) throw Error(ErrorCode::EmptyInput, "no results in " + o.results.string());

    const EvaluationReport report = summarize(errors, thresholds);
    out << format_report_text(report);
    if (o.out) {
      ensure_directory(*o.out);
      write_text(*o.out / "report.txt", format_report_text(report));
      write_text(*o.out / "report.json", format_report_json(report));
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "evaluate: " << e.what() << '\n';
    return kExitInput;
  } catch (const json::exception& e) {
    err << "evaluate: malformed JSON: " << e.what() << '\n';
    return kExitInput;
  }
}

int cmd_validate(const fs::path& bundle, std::ostream& out, std::ostream& err) {
  try {
    const SceneBundle b = read_bundle(bundle);
    out << bundle.string() << ": ok (" << b.num_references() << " references)\n";
    return kExitOk;
  } catch (const Error& e) {
    err << "validate: " << e.what() << '\n';
    return kExitInput;
  }
}

}  // namespace feedloc::tools
