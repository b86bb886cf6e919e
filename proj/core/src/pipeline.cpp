#include "feedloc/pipeline.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>

#include "feedloc/error.hpp"
#include "feedloc/refine.hpp"

namespace feedloc {
namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidSpec, what); }

std::optional<double> triangulation_scale(const SceneBundle& bundle, std::span<const int> refs,
                                          const RunConfig& cfg, std::size_t& sample_count) {
  std::vector<RigidPose> gt;
  for (int r : refs) gt.push_back(*bundle.views[r].gt_pose);
  try {
    const auto pairs = sample_baseline_pairs(gt, cfg.baseline_min, cfg.baseline_max);
    const auto samples = collect_depth_samples(bundle, refs, pairs, cfg.confidence_floor);
    sample_count = samples.size();
    return stage1_scale(samples);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NoValidPairs || e.code() == ErrorCode::EmptySamples) return std::nullopt;
    throw;
  }
}

nlohmann::ordered_json pose_json(const RigidPose& p) { return pose_to_row_major(p); }

template <typename T>
nlohmann::ordered_json optional_json(const std::optional<T>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

void RunConfig::validate() const {
  if (k_max < 1) invalid("k-max must be >= 1");
  if (min_baseline < 0.0) invalid("min-baseline must be nonnegative");
  if (!(baseline_min >= 0.0 && baseline_max > baseline_min)) invalid("baseline range must be increasing");
  if (!(stage1_threshold > 0.0)) invalid("stage1-threshold must be positive");
  if (ransac_iterations < 1) invalid("ransac-iters must be >= 1");
  if (!(inlier_radius > 0.0)) invalid("inlier-radius must be positive");
  if (!(search_radius > 0.0)) invalid("search-radius must be positive");
  if (!(pnp_inlier_px > 0.0)) invalid("pnp-inlier-px must be positive");
  if (pnp_iterations < 1) invalid("pnp iterations must be >= 1");
  if (!(max_descriptor_distance > 0.0)) invalid("max descriptor distance must be positive");
  if (confidence_floor < 0.0) invalid("confidence floor must be nonnegative");
}

LocalizationResult localize(const SceneBundle& bundle, const RunConfig& cfg) {
  cfg.validate();
  LocalizationResult out;
  out.query_id = bundle.views.front().image_id;

  // Coarse localization.
  out.references = filter_references(bundle, cfg.k_max, cfg.min_baseline);
  const std::vector<int>& refs = out.references;
  const PredictionSet& pred = bundle.predictions;
  const int anchor = select_confidence_anchor(pred, refs);
  out.confidence_anchor = anchor;

  const std::optional<double> s_tri = triangulation_scale(bundle, refs, cfg, out.depth_samples);
  const RigidPose& anchor_gt = *bundle.views[anchor].gt_pose;
  const Mat3 r_align = rotation_align(pred.local_poses[anchor].rotation, anchor_gt.rotation);

  std::vector<Vec3> local_centers;
  std::vector<Vec3> gt_centers;
  for (int r : refs) {
    local_centers.push_back(pred.local_poses[r].center);
    gt_centers.push_back(bundle.views[r].gt_pose->center);
  }
  const Stage2Producer stage2 = [&]() -> std::optional<Stage2Result> {
    try {
      return stage2_ransac_scale(local_centers, gt_centers, r_align,
                                 {cfg.ransac_iterations, cfg.inlier_radius, cfg.seed});
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  out.scale = choose_scale(s_tri, stage2, local_centers, gt_centers, r_align, cfg.stage1_threshold, cfg.scale_mode);
  out.coarse_pose = init_query_pose(out.scale, pred.local_poses[anchor], anchor_gt, pred.local_poses[0]);
  out.ransac_pose = out.coarse_pose;

  // Structure refinement around the top-ranked surviving reference.
  const int ref_anchor = refs.front();
  out.refinement_anchor = ref_anchor;
  std::vector<std::pair<int, MatchSet>> anchor_matches;
  for (std::size_t i = 1; i < refs.size(); ++i) anchor_matches.emplace_back(refs[i], bundle.matches_between(ref_anchor, refs[i]));
  std::vector<Track> built = build_tracks(ref_anchor, anchor_matches, bundle.features);
  out.tracks_built = built.size();

  std::vector<Track> tracks;
  tracks.reserve(built.size());
  const RigidPose& ref_anchor_gt = *bundle.views[ref_anchor].gt_pose;
  for (Track& t : built) {
    try {
      t.point = init_track_point(t, bundle.views[ref_anchor].intrinsics, pred.point_maps[ref_anchor],
                                 pred.confidence_maps[ref_anchor], out.scale.scale, ref_anchor_gt);
      tracks.push_back(std::move(t));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InvalidDepth) throw;
      ++out.tracks_dropped;
    }
  }

  std::vector<RigidPose> poses(bundle.views.size());
  std::vector<Intrinsics> intrinsics(bundle.views.size());
  for (std::size_t v = 0; v < bundle.views.size(); ++v) {
    intrinsics[v] = bundle.views[v].intrinsics;
    if (bundle.views[v].gt_pose && v != 0) poses[v] = *bundle.views[v].gt_pose;
  }
  structure_only_ba(tracks, poses, intrinsics, BaConfig{});
  out.tracks_usable = static_cast<std::size_t>(std::count_if(tracks.begin(), tracks.end(), [](const Track& t) { return t.usable(); }));

  // Pose refinement.
  const Intrinsics& kq = bundle.views.front().intrinsics;
  const std::vector<Correspondence2D3D> corr =
      guided_match(tracks, out.coarse_pose, bundle.features.front(), kq, cfg.search_radius, cfg.max_descriptor_distance);
  out.correspondences = corr.size();

  std::optional<PnpResult> refined;
  try {
    refined = pnp_refine(corr, out.coarse_pose, kq, {cfg.pnp_iterations, cfg.pnp_inlier_px, 100, cfg.seed});
    out.ransac_pose = refined->ransac_pose;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TooFewCorrespondences && e.code() != ErrorCode::SolverDegenerate) throw;
    out.fallback_reason = std::string(to_string(e.code()));
  }
  const PnpResult final_result = select_final(refined, out.coarse_pose, kq, corr, cfg.pnp_inlier_px);
  const auto init_mask = inlier_mask(out.coarse_pose, kq, corr, cfg.pnp_inlier_px);
  out.init_inliers = static_cast<int>(std::count(init_mask.begin(), init_mask.end(), true));
  out.refined_inliers = -1;
  if (refined) {
    const auto mask = inlier_mask(refined->pose, kq, corr, cfg.pnp_inlier_px);
    out.refined_inliers = static_cast<int>(std::count(mask.begin(), mask.end(), true));
  }
  out.pose = final_result.pose;
  out.fallback = !final_result.refined;
  if (out.fallback && out.fallback_reason.empty()) out.fallback_reason = "fewer refined inliers than initial";
  return out;
}

std::string result_to_json(const LocalizationResult& r) {
  nlohmann::ordered_json j;
  j["query_id"] = r.query_id;
  j["pose"] = pose_json(r.pose);
  j["coarse_pose"] = pose_json(r.coarse_pose);
  j["ransac_pose"] = pose_json(r.ransac_pose);
  j["scale_stage"] = std::string(to_string(r.scale.stage_used));
  j["scale"] = r.scale.scale;
  j["s_tri"] = optional_json(r.scale.s_tri);
  j["s_traj"] = optional_json(r.scale.s_traj);
  j["d_tri"] = optional_json(r.scale.d_tri);
  j["d_traj"] = optional_json(r.scale.d_traj);
  j["stage2_ran"] = r.scale.stage2_ran;
  j["stage2_inliers"] = r.scale.stage2_inliers;
  auto r_align = nlohmann::ordered_json::array();
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) r_align.push_back(r.scale.r_align(row, col));
  }
  j["r_align"] = std::move(r_align);
  j["confidence_anchor"] = r.confidence_anchor;
  j["refinement_anchor"] = r.refinement_anchor;
  j["references"] = r.references;
  j["depth_samples"] = r.depth_samples;
  j["tracks_built"] = r.tracks_built;
  j["tracks_dropped"] = r.tracks_dropped;
  j["tracks_usable"] = r.tracks_usable;
  j["correspondences"] = r.correspondences;
  j["init_inliers"] = r.init_inliers;
  j["refined_inliers"] = r.refined_inliers;
  j["fallback"] = r.fallback;
  j["fallback_reason"] = r.fallback_reason;
  return j.dump(2) + "\n";
}

}  // namespace feedloc
