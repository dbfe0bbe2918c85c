#ifndef GR3DKIT_EVAL_H_
#define GR3DKIT_EVAL_H_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gr3dkit/geom2d.h"
#include "gr3dkit/geom3d.h"

namespace gr3dkit {

template <class BoxT>
struct Detection {
  std::string image_id;
  std::string category;
  BoxT box;
  double score = 1.0;
};

template <class BoxT>
struct GroundTruth {
  std::string image_id;
  std::string category;
  BoxT box;
  // Matchable but never counted: a prediction that only matches an ignored
  // GT is neither a true nor a false positive.
  bool ignore = false;
};

using Detection2D = Detection<Box2D>;
using Detection3D = Detection<Box3D>;
using GroundTruth2D = GroundTruth<Box2D>;
using GroundTruth3D = GroundTruth<Box3D>;

enum class MatchStatus { kTruePositive, kFalsePositive, kIgnored };

struct Match {
  std::size_t pred_index = 0;
  std::optional<std::size_t> gt_index;
  MatchStatus status = MatchStatus::kFalsePositive;

  friend bool operator==(const Match&, const Match&) = default;
};

// Row-major predictions x ground truths.
struct IouMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

// Greedy matching for one image and category. Predictions are visited by
// descending score (ties by input order); each takes the unmatched
// non-ignored GT of largest IoU (ties to the lowest index) if that IoU is
// >= threshold. Otherwise an ignored GT with IoU >= threshold absorbs it.
// Result is indexed by prediction.
std::vector<Match> match_greedy(std::span<const double> scores, const IouMatrix& iou,
                                const std::vector<bool>& gt_ignore, double threshold);

std::vector<Match> match_greedy(std::span<const Detection3D> preds,
                                std::span<const GroundTruth3D> gts, double threshold);
std::vector<Match> match_greedy(std::span<const Detection2D> preds,
                                std::span<const GroundTruth2D> gts, double threshold);

struct ScoredLabel {
  double score = 0;
  bool true_positive = false;
};

enum class Interpolation {
  k101Point,  // mean interpolated precision at recall 0, 0.01, ..., 1
  kAllPoints,  // area under the precision envelope
};

// AP of labels pooled over a dataset. Labels are stably sorted by
// descending score, so callers fix tie order by the order they pass.
// Undefined (nullopt) when num_gt == 0 and there are no labels; 0 when
// num_gt == 0 and every label is a false positive.
std::optional<double> average_precision(std::span<const ScoredLabel> labels,
                                        std::size_t num_gt,
                                        Interpolation interp = Interpolation::k101Point);

// {0.05, 0.10, ..., 0.50}.
std::vector<double> default_thresholds();

struct EvalOptions {
  std::vector<double> thresholds = default_thresholds();
  Interpolation interpolation = Interpolation::k101Point;
  unsigned jobs = 1;
};

struct ThresholdCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  friend bool operator==(const ThresholdCounts&, const ThresholdCounts&) = default;
};

struct EvalReport {
  std::vector<double> thresholds;
  // Category -> AP at each threshold (nullopt when undefined).
  std::map<std::string, std::vector<std::optional<double>>> per_category_ap;
  std::map<std::string, std::size_t> num_gt;
  // Mean over categories with a defined AP, per threshold.
  std::vector<std::optional<double>> ap_per_threshold;
  // Mean of ap_per_threshold.
  std::optional<double> map;
  // ap_per_threshold at 0.15, when 0.15 is one of the thresholds.
  std::optional<double> ap15;
  std::vector<ThresholdCounts> counts;
  // Categories that have predictions but no counted ground truth.
  std::vector<std::string> categories_without_gt;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Matching runs per (image, category) group, in parallel when
// options.jobs > 1; results are merged in (category, image_id) order so the
// report does not depend on jobs or on the order of images in the input.
EvalReport evaluate_3d(std::span<const Detection3D> preds,
                       std::span<const GroundTruth3D> gts, const EvalOptions& options = {});
EvalReport evaluate_2d(std::span<const Detection2D> preds,
                       std::span<const GroundTruth2D> gts, const EvalOptions& options = {});

struct GCoTRecord {
  bool answer_correct = false;
  std::optional<Box2D> predicted_box;
  Box2D gt_box;
};

struct GCoTMetrics {
  double answer_accuracy = 0;
  double grounding_accuracy = 0;
  double consistency = 0;
  std::size_t count = 0;
};

// Grounding is correct when IoU > 0.5 (strict). A missing box, or one whose
// IoU is undefined, counts as incorrect. Throws EmptyEvaluation when empty.
GCoTMetrics evaluate_gcot(std::span<const GCoTRecord> records);

}  // namespace gr3dkit

#endif  // GR3DKIT_EVAL_H_
