#include "feedloc/bundle.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

#include "feedloc/error.hpp"

namespace feedloc {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr std::array<char, 4> kMagic{'L', '3', 'B', 'L'};
constexpr int kFormatVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> bytes{static_cast<char>(v & 0xFFu), static_cast<char>((v >> 8) & 0xFFu),
                                  static_cast<char>((v >> 16) & 0xFFu), static_cast<char>((v >> 24) & 0xFFu)};
  out.write(bytes.data(), bytes.size());
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

[[noreturn]] void violation(const std::string& what) { throw Error(ErrorCode::InvariantViolation, what); }

bool is_rotation(const Mat3& r) {
  return ((r.transpose() * r) - Mat3::Identity()).cwiseAbs().maxCoeff() <= 1e-9 &&
         std::abs(r.determinant() - 1.0) <= 1e-9;
}

json intrinsics_to_json(const Intrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

Intrinsics intrinsics_from_json(const json& j) {
  Intrinsics k;
  k.fx = j.at("fx").get<double>();
  k.fy = j.at("fy").get<double>();
  k.cx = j.at("cx").get<double>();
  k.cy = j.at("cy").get<double>();
  k.width = j.at("width").get<int>();
  k.height = j.at("height").get<int>();
  return k;
}

std::string match_stem(int a, int b) { return std::to_string(a) + "_" + std::to_string(b); }

std::vector<float> to_float(const std::vector<double>& values) {
  std::vector<float> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), [](double v) { return static_cast<float>(v); });
  return out;
}

void expect_dims(const Blob& blob, std::initializer_list<std::uint32_t> expected, const fs::path& path) {
  if (!std::equal(blob.dims.begin(), blob.dims.end(), expected.begin(), expected.end())) {
    std::ostringstream msg;
    msg << path.string() << " has dims (";
    for (std::size_t i = 0; i < blob.dims.size(); ++i) msg << (i ? "," : "") << blob.dims[i];
    msg << "), manifest implies (";
    std::size_t i = 0;
    for (auto d : expected) msg << (i++ ? "," : "") << d;
    msg << ")";
    throw Error(ErrorCode::ShapeMismatch, msg.str());
  }
}

}  // namespace

MatchSet MatchSet::swapped() const {
  MatchSet out;
  out.pairs.reserve(pairs.size());
  for (const auto& [a, b] : pairs) out.pairs.emplace_back(b, a);
  out.scores = scores;
  return out;
}

MatchSet SceneBundle::matches_between(int a, int b) const {
  if (a < b) {
    const auto it = matches.find({a, b});
    return it == matches.end() ? MatchSet{} : it->second;
  }
  const auto it = matches.find({b, a});
  return it == matches.end() ? MatchSet{} : it->second.swapped();
}

void validate_bundle(const SceneBundle& bundle) {
  const int b = bundle.num_views();
  if (b < 2) violation("bundle needs a query and at least one reference, got " + std::to_string(b) + " views");

  for (int i = 0; i < b; ++i) {
    const ViewRecord& view = bundle.views[i];
    if (!view.intrinsics.valid()) violation("view " + std::to_string(i) + " has invalid intrinsics");
    if (i > 0 && !view.gt_pose) violation("reference view " + std::to_string(i) + " lacks a ground-truth pose");
    if (view.gt_pose && !is_rotation(view.gt_pose->rotation)) {
      violation("view " + std::to_string(i) + " ground-truth rotation is not orthonormal");
    }
  }

  std::vector<int> sorted = bundle.retrieval;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> expected(b - 1);
  std::iota(expected.begin(), expected.end(), 1);
  if (sorted != expected) violation("retrieval ranking is not a permutation of the reference indices");

  const PredictionSet& pred = bundle.predictions;
  if (pred.point_maps.size() != static_cast<std::size_t>(b) ||
      pred.confidence_maps.size() != static_cast<std::size_t>(b) ||
      pred.local_poses.size() != static_cast<std::size_t>(b)) {
    violation("prediction set does not cover every view");
  }
  if (bundle.features.size() != static_cast<std::size_t>(b)) violation("feature set does not cover every view");

  std::optional<Eigen::Index> descriptor_dim;
  for (int i = 0; i < b; ++i) {
    const Intrinsics& k = bundle.views[i].intrinsics;
    const PointMap& pm = pred.point_maps[i];
    const ConfidenceMap& cm = pred.confidence_maps[i];
    if (pm.width() != k.width || pm.height() != k.height || cm.width() != k.width || cm.height() != k.height) {
      throw Error(ErrorCode::ShapeMismatch, "view " + std::to_string(i) + " prediction shape differs from " +
                                                std::to_string(k.width) + "x" + std::to_string(k.height));
    }
    for (double c : cm.data()) {
      if (!(c >= 0.0) || !std::isfinite(c)) violation("view " + std::to_string(i) + " has negative confidence");
    }
    if (!is_rotation(pred.local_poses[i].rotation)) {
      violation("view " + std::to_string(i) + " local rotation is not orthonormal");
    }

    const FeatureSet& f = bundle.features[i];
    if (static_cast<std::size_t>(f.descriptors.rows()) != f.keypoints.size()) {
      throw Error(ErrorCode::ShapeMismatch, "view " + std::to_string(i) + " descriptor count != keypoint count");
    }
    if (!f.keypoints.empty()) {
      if (descriptor_dim && *descriptor_dim != f.descriptors.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "descriptor dimension differs across views");
      }
      descriptor_dim = f.descriptors.cols();
    }
    for (std::size_t n = 0; n < f.keypoints.size(); ++n) {
      if (!k.contains(f.keypoints[n])) {
        violation("view " + std::to_string(i) + " keypoint " + std::to_string(n) + " lies outside the image");
      }
      if (std::abs(f.descriptors.row(static_cast<Eigen::Index>(n)).norm() - 1.0) > 1e-6) {
        violation("view " + std::to_string(i) + " descriptor " + std::to_string(n) + " is not unit norm");
      }
    }
  }

  for (const auto& [key, set] : bundle.matches) {
    const auto [a, bb] = key;
    if (a < 0 || bb >= b || a >= bb) violation("match key " + match_stem(a, bb) + " is not an ordered view pair");
    const int na = static_cast<int>(bundle.features[a].size());
    const int nb = static_cast<int>(bundle.features[bb].size());
    for (const auto& [ia, ib] : set.pairs) {
      if (ia < 0 || ia >= na || ib < 0 || ib >= nb) violation("match " + match_stem(a, bb) + " index out of range");
    }
    if (set.has_scores() && set.scores.size() != set.pairs.size()) {
      throw Error(ErrorCode::ShapeMismatch, "match " + match_stem(a, bb) + " score count differs from pair count");
    }
  }
}

void write_blob(const fs::path& path, std::span<const std::uint32_t> dims, std::span<const float> values) {
  const std::size_t expected =
      std::accumulate(dims.begin(), dims.end(), std::size_t{1}, [](std::size_t acc, std::uint32_t d) { return acc * d; });
  if (expected != values.size()) {
    throw Error(ErrorCode::ShapeMismatch, path.string() + ": dims do not match value count");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) put_u32(out, d);
  for (float v : values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  if (!out) throw Error(ErrorCode::IoFailure, "short write to " + path.string());
}

Blob read_blob(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::MissingBlob, path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 8 || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin(),
                                      [](char m, unsigned char c) { return static_cast<unsigned char>(m) == c; })) {
    throw Error(ErrorCode::BadMagic, path.string());
  }
  Blob blob;
  const std::uint32_t rank = get_u32(bytes.data() + 4);
  std::size_t offset = 8;
  if (bytes.size() < offset + 4ull * rank) throw Error(ErrorCode::IoFailure, "truncated header in " + path.string());
  std::size_t count = 1;
  for (std::uint32_t r = 0; r < rank; ++r) {
    blob.dims.push_back(get_u32(bytes.data() + offset));
    count *= blob.dims.back();
    offset += 4;
  }
  if (bytes.size() != offset + 4 * count) {
    throw Error(ErrorCode::ShapeMismatch, path.string() + ": payload size disagrees with header dims");
  }
  blob.values.resize(count);
  for (std::size_t n = 0; n < count; ++n) {
    blob.values[n] = std::bit_cast<float>(get_u32(bytes.data() + offset + 4 * n));
  }
  return blob;
}

std::vector<double> pose_to_row_major(const RigidPose& pose) {
  std::vector<double> v;
  v.reserve(12);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) v.push_back(pose.rotation(r, c));
    v.push_back(pose.center(r));
  }
  return v;
}

RigidPose pose_from_row_major(std::span<const double> values) {
  if (values.size() != 12) violation("pose must have 12 numbers, got " + std::to_string(values.size()));
  RigidPose pose;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) pose.rotation(r, c) = values[4 * r + c];
    pose.center(r) = values[4 * r + 3];
  }
  if (!pose.rotation.allFinite() || !pose.center.allFinite()) violation("pose contains non-finite values");
  pose.rotation = orthonormalize(pose.rotation);
  return pose;
}

void write_bundle(const SceneBundle& bundle, const fs::path& directory) {
  validate_bundle(bundle);
  std::error_code ec;
  for (const char* sub : {"pred", "feat", "match"}) {
    fs::create_directories(directory / sub, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + (directory / sub).string() + ": " + ec.message());
  }

  json manifest;
  manifest["format"] = "feedloc-scene-bundle";
  manifest["version"] = kFormatVersion;
  const Eigen::Index dim = [&] {
    for (const auto& f : bundle.features) {
      if (!f.keypoints.empty()) return f.descriptors.cols();
    }
    return Eigen::Index{0};
  }();
  manifest["descriptor_dim"] = dim;
  manifest["retrieval"] = bundle.retrieval;

  json views = json::array();
  for (int i = 0; i < bundle.num_views(); ++i) {
    const ViewRecord& view = bundle.views[i];
    json v;
    v["image_id"] = view.image_id;
    v["intrinsics"] = intrinsics_to_json(view.intrinsics);
    v["gt_pose"] = view.gt_pose ? json(pose_to_row_major(*view.gt_pose)) : json(nullptr);
    v["local_pose"] = pose_to_row_major(bundle.predictions.local_poses[i]);
    v["num_keypoints"] = bundle.features[i].size();
    views.push_back(std::move(v));

    const auto w = static_cast<std::uint32_t>(view.intrinsics.width);
    const auto h = static_cast<std::uint32_t>(view.intrinsics.height);
    const std::string idx = std::to_string(i);
    write_blob(directory / "pred" / ("pointmap_" + idx + ".f32"), std::array{h, w, 3u},
               to_float(bundle.predictions.point_maps[i].data()));
    write_blob(directory / "pred" / ("conf_" + idx + ".f32"), std::array{h, w},
               to_float(bundle.predictions.confidence_maps[i].data()));

    const FeatureSet& f = bundle.features[i];
    const auto n = static_cast<std::uint32_t>(f.size());
    std::vector<float> kp;
    kp.reserve(2 * n);
    for (const Vec2& p : f.keypoints) {
      kp.push_back(static_cast<float>(p.x()));
      kp.push_back(static_cast<float>(p.y()));
    }
    write_blob(directory / "feat" / ("kp_" + idx + ".f32"), std::array{n, 2u}, kp);
    std::vector<float> desc(f.descriptors.data(), f.descriptors.data() + f.descriptors.size());
    write_blob(directory / "feat" / ("desc_" + idx + ".f32"),
               std::array{n, static_cast<std::uint32_t>(n == 0 ? dim : f.descriptors.cols())}, desc);
  }
  manifest["views"] = std::move(views);

  json matches = json::array();
  for (const auto& [key, set] : bundle.matches) {
    const std::string stem = match_stem(key.first, key.second);
    matches.push_back({{"a", key.first}, {"b", key.second}, {"count", set.size()}, {"scores", set.has_scores()}});
    std::vector<float> idx;
    idx.reserve(2 * set.size());
    for (const auto& [ia, ib] : set.pairs) {
      idx.push_back(static_cast<float>(ia));
      idx.push_back(static_cast<float>(ib));
    }
    write_blob(directory / "match" / (stem + ".f32"), std::array{static_cast<std::uint32_t>(set.size()), 2u}, idx);
    if (set.has_scores()) {
      write_blob(directory / "match" / (stem + "_scores.f32"), std::array{static_cast<std::uint32_t>(set.size())},
                 to_float(set.scores));
    }
  }
  manifest["matches"] = std::move(matches);

  std::ofstream out(directory / "manifest.json", std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write manifest in " + directory.string());
  out << manifest.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "short write to manifest in " + directory.string());
}

SceneBundle read_bundle(const fs::path& directory) {
  const fs::path manifest_path = directory / "manifest.json";
  if (!fs::exists(manifest_path)) throw Error(ErrorCode::MissingBlob, manifest_path.string());
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + manifest_path.string());

  SceneBundle bundle;
  try {
    const json manifest = json::parse(in);
    const auto dim = manifest.at("descriptor_dim").get<std::uint32_t>();
    bundle.retrieval = manifest.at("retrieval").get<std::vector<int>>();
    const json& views = manifest.at("views");
    if (!views.is_array()) violation("manifest views must be an array");
    for (std::size_t i = 0; i < views.size(); ++i) {
      const json& v = views[i];
      ViewRecord view;
      view.image_id = v.at("image_id").get<std::string>();
      view.intrinsics = intrinsics_from_json(v.at("intrinsics"));
      if (!view.intrinsics.valid()) violation("view " + std::to_string(i) + " has invalid intrinsics");
      if (!v.at("gt_pose").is_null()) {
        view.gt_pose = pose_from_row_major(v.at("gt_pose").get<std::vector<double>>());
      }
      bundle.predictions.local_poses.push_back(pose_from_row_major(v.at("local_pose").get<std::vector<double>>()));

      const auto w = static_cast<std::uint32_t>(view.intrinsics.width);
      const auto h = static_cast<std::uint32_t>(view.intrinsics.height);
      const std::string idx = std::to_string(i);

      const fs::path pm_path = directory / "pred" / ("pointmap_" + idx + ".f32");
      const Blob pm_blob = read_blob(pm_path);
      expect_dims(pm_blob, {h, w, 3u}, pm_path);
      PointMap pm(view.intrinsics.width, view.intrinsics.height);
      std::copy(pm_blob.values.begin(), pm_blob.values.end(), pm.data().begin());
      bundle.predictions.point_maps.push_back(std::move(pm));

      const fs::path conf_path = directory / "pred" / ("conf_" + idx + ".f32");
      const Blob conf_blob = read_blob(conf_path);
      expect_dims(conf_blob, {h, w}, conf_path);
      ConfidenceMap cm(view.intrinsics.width, view.intrinsics.height);
      std::copy(conf_blob.values.begin(), conf_blob.values.end(), cm.data().begin());
      bundle.predictions.confidence_maps.push_back(std::move(cm));

      const auto n = v.at("num_keypoints").get<std::uint32_t>();
      const fs::path kp_path = directory / "feat" / ("kp_" + idx + ".f32");
      const Blob kp_blob = read_blob(kp_path);
      expect_dims(kp_blob, {n, 2u}, kp_path);
      const fs::path desc_path = directory / "feat" / ("desc_" + idx + ".f32");
      const Blob desc_blob = read_blob(desc_path);
      expect_dims(desc_blob, {n, dim}, desc_path);
      FeatureSet f;
      f.keypoints.reserve(n);
      for (std::uint32_t k = 0; k < n; ++k) f.keypoints.emplace_back(kp_blob.values[2 * k], kp_blob.values[2 * k + 1]);
      f.descriptors.resize(n, dim);
      std::copy(desc_blob.values.begin(), desc_blob.values.end(), f.descriptors.data());
      bundle.features.push_back(std::move(f));

      bundle.views.push_back(std::move(view));
    }

    for (const json& m : manifest.at("matches")) {
      const int a = m.at("a").get<int>();
      const int b = m.at("b").get<int>();
      const auto count = m.at("count").get<std::uint32_t>();
      const std::string stem = match_stem(a, b);
      const fs::path path = directory / "match" / (stem + ".f32");
      const Blob blob = read_blob(path);
      expect_dims(blob, {count, 2u}, path);
      MatchSet set;
      set.pairs.reserve(count);
      for (std::uint32_t k = 0; k < count; ++k) {
        const float ia = blob.values[2 * k];
        const float ib = blob.values[2 * k + 1];
        if (ia != std::floor(ia) || ib != std::floor(ib)) violation("match " + stem + " has non-integer indices");
        set.pairs.emplace_back(static_cast<int>(ia), static_cast<int>(ib));
      }
      if (m.value("scores", false)) {
        const fs::path score_path = directory / "match" / (stem + "_scores.f32");
        const Blob scores = read_blob(score_path);
        expect_dims(scores, {count}, score_path);
        set.scores.assign(scores.values.begin(), scores.values.end());
      }
      if (!bundle.matches.emplace(std::make_pair(a, b), std::move(set)).second) {
        violation("duplicate match entry " + stem);
      }
    }
  } catch (const json::exception& e) {
    violation(std::string("malformed manifest: ") + e.what());
  }

  validate_bundle(bundle);
  return bundle;
}

std::vector<int> filter_references(const SceneBundle& bundle, int k_max, double min_baseline) {
  std::vector<int> kept;
  std::vector<Vec3> kept_centers;
  for (int ref : bundle.retrieval) {
    if (static_cast<int>(kept.size()) >= k_max) break;
    const Vec3 c = bundle.views.at(ref).gt_pose.value().center;
    const bool far_enough = std::all_of(kept_centers.begin(), kept_centers.end(),
                                        [&](const Vec3& other) { return (c - other).norm() >= min_baseline; });
    if (far_enough) {
      kept.push_back(ref);
      kept_centers.push_back(c);
    }
  }
  if (kept.empty()) throw Error(ErrorCode::NoReferencesSurvive, "reference filter removed every reference");
  return kept;
}

}  // namespace feedloc
