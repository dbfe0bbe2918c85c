#include "gr3dkit/eval.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>
#include <utility>

#include "gr3dkit/error.h"

namespace gr3dkit {

std::vector<Match> match_greedy(std::span<const double> scores, const IouMatrix& iou,
                                const std::vector<bool>& gt_ignore, double threshold) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<bool> used(iou.cols, false);
  std::vector<Match> out(n);
  for (std::size_t p : order) {
    std::optional<std::size_t> best;
    double best_iou = threshold;
    for (std::size_t g = 0; g < iou.cols; ++g) {
      if (gt_ignore[g] || used[g]) continue;
      const double v = iou(p, g);
      if (v >= best_iou && (!best || v > best_iou)) {
        best = g;
        best_iou = v;
      }
    }
    Match& m = out[p];
    m.pred_index = p;
    if (best) {
      used[*best] = true;
      m.gt_index = best;
      m.status = MatchStatus::kTruePositive;
      continue;
    }
    best_iou = threshold;
    for (std::size_t g = 0; g < iou.cols; ++g) {
      if (!gt_ignore[g]) continue;
      const double v = iou(p, g);
      if (v >= best_iou && (!best || v > best_iou)) {
        best = g;
        best_iou = v;
      }
    }
    m.gt_index = best;
    m.status = best ? MatchStatus::kIgnored : MatchStatus::kFalsePositive;
  }
  return out;
}

namespace {

double iou_of(const Box2D& a, const Box2D& b) {
  try {
    return iou2d(a, b);
  } catch (const Error&) {
    return 0.0;
  }
}

double iou_of(const Box3D& a, const Box3D& b) { return iou3d(a, b); }

void check_entry(const Box2D& b) { check_box(b); }
void check_entry(const Box3D& b) { check_box(b); }

template <class BoxT>
IouMatrix iou_matrix(std::span<const Detection<BoxT>* const> preds,
                     std::span<const GroundTruth<BoxT>* const> gts) {
  IouMatrix m{preds.size(), gts.size(), std::vector<double>(preds.size() * gts.size())};
  for (std::size_t r = 0; r < preds.size(); ++r) {
    for (std::size_t c = 0; c < gts.size(); ++c) {
      m.values[r * m.cols + c] = iou_of(preds[r]->box, gts[c]->box);
    }
  }
  return m;
}

template <class BoxT>
std::vector<Match> match_direct(std::span<const Detection<BoxT>> preds,
                                std::span<const GroundTruth<BoxT>> gts, double threshold) {
  std::vector<const Detection<BoxT>*> p;
  std::vector<const GroundTruth<BoxT>*> g;
  std::vector<double> scores;
  std::vector<bool> ignore;
  for (const auto& d : preds) {
    p.push_back(&d);
    scores.push_back(d.score);
  }
  for (const auto& t : gts) {
    g.push_back(&t);
    ignore.push_back(t.ignore);
  }
  return match_greedy(scores, iou_matrix<BoxT>(p, g), ignore, threshold);
}

}  // namespace

std::vector<Match> match_greedy(std::span<const Detection3D> preds,
                                std::span<const GroundTruth3D> gts, double threshold) {
  return match_direct<Box3D>(preds, gts, threshold);
}

std::vector<Match> match_greedy(std::span<const Detection2D> preds,
                                std::span<const GroundTruth2D> gts, double threshold) {
  return match_direct<Box2D>(preds, gts, threshold);
}

std::optional<double> average_precision(std::span<const ScoredLabel> labels,
                                        std::size_t num_gt, Interpolation interp) {
  if (num_gt == 0) {
    if (labels.empty()) return std::nullopt;
    return 0.0;
  }
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return labels[a].score > labels[b].score;
  });

  const std::size_t n = labels.size();
  std::vector<double> recall(n), precision(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[order[i]].true_positive) ++tp;
    recall[i] = static_cast<double>(tp) / static_cast<double>(num_gt);
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  for (std::size_t i = n; i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }

  if (interp == Interpolation::kAllPoints) {
    double ap = 0;
    double prev_recall = 0;
    for (std::size_t i = 0; i < n; ++i) {
      ap += (recall[i] - prev_recall) * precision[i];
      prev_recall = recall[i];
    }
    return ap;
  }

  double sum = 0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[it - recall.begin()];
  }
  return sum / 101.0;
}

std::vector<double> default_thresholds() {
  std::vector<double> t;
  for (int k = 1; k <= 10; ++k) t.push_back(k / 20.0);
  return t;
}

namespace {

template <class BoxT>
struct Group {
  std::string category;
  std::vector<const Detection<BoxT>*> preds;
  std::vector<const GroundTruth<BoxT>*> gts;
  // statuses[t][i] for prediction i at threshold t.
  std::vector<std::vector<MatchStatus>> statuses;
};

template <class BoxT>
void match_group(Group<BoxT>& g, std::span<const double> thresholds) {
  const IouMatrix m = iou_matrix<BoxT>(g.preds, g.gts);
  std::vector<double> scores;
  scores.reserve(g.preds.size());
  for (const auto* d : g.preds) scores.push_back(d->score);
  std::vector<bool> ignore(g.gts.size());
  for (std::size_t i = 0; i < g.gts.size(); ++i) ignore[i] = g.gts[i]->ignore;
  g.statuses.resize(thresholds.size());
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    const auto matches = match_greedy(scores, m, ignore, thresholds[t]);
    auto& s = g.statuses[t];
    s.resize(matches.size());
    for (std::size_t i = 0; i < matches.size(); ++i) s[i] = matches[i].status;
  }
}

std::optional<double> mean_defined(std::span<const std::optional<double>> xs) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& x : xs) {
    if (x) {
      sum += *x;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

template <class BoxT>
EvalReport evaluate(std::span<const Detection<BoxT>> preds,
                    std::span<const GroundTruth<BoxT>> gts, const EvalOptions& options) {
  for (double t : options.thresholds) {
    if (!(t >= 0 && t <= 1)) {
      throw Error(ErrorCode::kInvalidArgument, "IoU thresholds must lie in [0, 1]");
    }
  }
  for (const auto& d : preds) {
    check_entry(d.box);
    if (!std::isfinite(d.score)) {
      throw Error(ErrorCode::kInvalidArgument, "prediction score must be finite");
    }
  }
  for (const auto& g : gts) check_entry(g.box);

  // (category, image_id) -> group; std::map fixes the merge order.
  std::map<std::pair<std::string, std::string>, Group<BoxT>> by_key;
  for (const auto& d : preds) {
    auto& g = by_key[{d.category, d.image_id}];
    g.category = d.category;
    g.preds.push_back(&d);
  }
  for (const auto& t : gts) {
    auto& g = by_key[{t.category, t.image_id}];
    g.category = t.category;
    g.gts.push_back(&t);
  }
  std::vector<Group<BoxT>*> groups;
  groups.reserve(by_key.size());
  for (auto& [key, g] : by_key) groups.push_back(&g);

  const unsigned jobs =
      std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(groups.size())));
  if (jobs <= 1) {
    for (auto* g : groups) match_group(*g, options.thresholds);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    workers.reserve(jobs);
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < groups.size(); i = next++) {
          match_group(*groups[i], options.thresholds);
        }
      });
    }
  }

  EvalReport report;
  report.thresholds = options.thresholds;
  const std::size_t nt = options.thresholds.size();
  report.counts.assign(nt, {});

  std::size_t begin = 0;
  while (begin < groups.size()) {
    const std::string& category = groups[begin]->category;
    std::size_t end = begin;
    std::size_t num_gt = 0;
    std::size_t num_pred = 0;
    while (end < groups.size() && groups[end]->category == category) {
      for (const auto* g : groups[end]->gts) num_gt += g->ignore ? 0 : 1;
      num_pred += groups[end]->preds.size();
      ++end;
    }
    report.num_gt[category] = num_gt;
    auto& aps = report.per_category_ap[category];
    aps.resize(nt);
    for (std::size_t t = 0; t < nt; ++t) {
      std::vector<ScoredLabel> labels;
      labels.reserve(num_pred);
      for (std::size_t i = begin; i < end; ++i) {
        const auto& g = *groups[i];
        for (std::size_t p = 0; p < g.preds.size(); ++p) {
          const MatchStatus s = g.statuses[t][p];
          if (s == MatchStatus::kIgnored) continue;
          const bool tp = s == MatchStatus::kTruePositive;
          labels.push_back({g.preds[p]->score, tp});
          (tp ? report.counts[t].tp : report.counts[t].fp) += 1;
        }
      }
      aps[t] = average_precision(labels, num_gt, options.interpolation);
      report.counts[t].fn += num_gt - std::count_if(labels.begin(), labels.end(),
                                                    [](const auto& l) { return l.true_positive; });
    }
    if (num_gt == 0 && num_pred > 0) report.categories_without_gt.push_back(category);
    begin = end;
  }

  report.ap_per_threshold.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    std::vector<std::optional<double>> column;
    for (const auto& [category, aps] : report.per_category_ap) column.push_back(aps[t]);
    report.ap_per_threshold[t] = mean_defined(column);
    if (std::abs(options.thresholds[t] - 0.15) < 1e-12) report.ap15 = report.ap_per_threshold[t];
  }
  report.map = mean_defined(report.ap_per_threshold);
  return report;
}

}  // namespace

EvalReport evaluate_3d(std::span<const Detection3D> preds,
                       std::span<const GroundTruth3D> gts, const EvalOptions& options) {
  return evaluate<Box3D>(preds, gts, options);
}

EvalReport evaluate_2d(std::span<const Detection2D> preds,
                       std::span<const GroundTruth2D> gts, const EvalOptions& options) {
  return evaluate<Box2D>(preds, gts, options);
}

GCoTMetrics evaluate_gcot(std::span<const GCoTRecord> records) {
  if (records.empty()) {
    throw Error(ErrorCode::kEmptyEvaluation, "no GCoT records");
  }
  std::size_t answered = 0, grounded = 0, both = 0;
  for (const auto& r : records) {
    bool ok = false;
    if (r.predicted_box && r.predicted_box->valid() && r.gt_box.valid()) {
      try {
        ok = iou2d(*r.predicted_box, r.gt_box) > 0.5;
      } catch (const Error&) {
        ok = false;
      }
    }
    answered += r.answer_correct;
    grounded += ok;
    both += r.answer_correct && ok;
  }
  const auto n = static_cast<double>(records.size());
  return {answered / n, grounded / n, both / n, records.size()};
}

}  // namespace gr3dkit
