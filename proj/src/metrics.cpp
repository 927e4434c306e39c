#include "dfta/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace dfta::metrics {

namespace {

void validate(const std::vector<LabeledScore>& scores) {
  int n_real = 0, n_fake = 0;
  for (const auto& s : scores) {
    if (!std::isfinite(s.score)) throw std::invalid_argument("metrics: non-finite score");
    if (s.label == 0)
      n_real++;
    else if (s.label == 1)
      n_fake++;
    else
      throw std::invalid_argument("metrics: label must be 0 or 1");
  }
  if (n_real == 0 || n_fake == 0)
    throw std::invalid_argument("metrics: both classes must be present");
}

std::vector<LabeledScore> sorted_asc(const std::vector<LabeledScore>& scores) {
  std::vector<LabeledScore> s = scores;
  std::sort(s.begin(), s.end(),
            [](const LabeledScore& a, const LabeledScore& b) { return a.score < b.score; });
  return s;
}

}  // namespace

double auc(const std::vector<LabeledScore>& scores) {
  validate(scores);
  auto s = sorted_asc(scores);
  double rank_sum_fake = 0.0;
  long n_fake = 0, n_real = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t j = i;
    while (j < s.size() && s[j].score == s[i].score) ++j;
    // average 1-based rank across the tied block [i, j)
    double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (s[k].label == 1) {
        rank_sum_fake += avg_rank;
        n_fake++;
      } else {
        n_real++;
      }
    }
    i = j;
  }
  double u = rank_sum_fake - static_cast<double>(n_fake) * (n_fake + 1) / 2.0;
  return u / (static_cast<double>(n_fake) * static_cast<double>(n_real));
}

double pauc_at_fpr(const std::vector<LabeledScore>& scores, double fpr_ceiling) {
  validate(scores);
  if (!(fpr_ceiling > 0.0 && fpr_ceiling <= 1.0))
    throw std::invalid_argument("metrics: fpr ceiling must be in (0,1]");
  long n_real = 0, n_fake = 0;
  for (const auto& s : scores) (s.label == 1 ? n_fake : n_real)++;

  // walk thresholds from high to low, accumulating ROC points
  auto s = sorted_asc(scores);
  double area = 0.0;
  double f0 = 0.0, t0 = 0.0;
  long tp = 0, fp = 0;
  std::size_t i = s.size();
  while (i > 0) {
    std::size_t j = i;
    while (j > 0 && s[j - 1].score == s[i - 1].score) {
      (s[j - 1].label == 1 ? tp : fp)++;
      --j;
    }
    double f1 = static_cast<double>(fp) / n_real;
    double t1 = static_cast<double>(tp) / n_fake;
    if (f1 <= fpr_ceiling) {
      area += (f1 - f0) * (t0 + t1) / 2.0;
    } else {
      if (f0 < fpr_ceiling) {
        double tc = t0 + (t1 - t0) * (fpr_ceiling - f0) / (f1 - f0);
        area += (fpr_ceiling - f0) * (t0 + tc) / 2.0;
      }
      return area / fpr_ceiling;
    }
    f0 = f1;
    t0 = t1;
    i = j;
  }
  return area / fpr_ceiling;
}

EerResult eer(const std::vector<LabeledScore>& scores) {
  validate(scores);
  long n_real = 0, n_fake = 0;
  for (const auto& s : scores) (s.label == 1 ? n_fake : n_real)++;

  // thresholds ascending through the distinct scores, then one final
  // candidate above every score (FPR 0, FNR 1)
  auto s = sorted_asc(scores);
  EerResult best;
  double best_diff = 3.0;
  long real_below = 0, fake_below = 0;
  auto consider = [&](double th, long rb, long fb) {
    double fpr = static_cast<double>(n_real - rb) / n_real;
    double fnr = static_cast<double>(fb) / n_fake;
    double diff = std::abs(fpr - fnr);
    if (diff < best_diff) {
      best_diff = diff;
      best.eer = (fpr + fnr) / 2.0;
      best.threshold = th;
    }
  };
  std::size_t i = 0;
  while (i < s.size()) {
    consider(s[i].score, real_below, fake_below);
    std::size_t j = i;
    while (j < s.size() && s[j].score == s[i].score) {
      (s[j].label == 1 ? fake_below : real_below)++;
      ++j;
    }
    i = j;
  }
  consider(s.back().score + 1.0, real_below, fake_below);
  return best;
}

MetricReport evaluate(const std::vector<LabeledScore>& scores, double fpr_ceiling) {
  MetricReport r;
  r.auc = auc(scores);
  r.pauc = pauc_at_fpr(scores, fpr_ceiling);
  auto e = eer(scores);
  r.eer = e.eer;
  r.eer_threshold = e.threshold;
  for (const auto& s : scores) (s.label == 1 ? r.n_fake : r.n_real)++;
  return r;
}

std::string MetricReport::csv_header() { return "auc,pauc,eer,eer_threshold,n_real,n_fake"; }

std::string MetricReport::csv_row() const {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%.9f,%.9f,%.9f,%.9f,%d,%d", auc, pauc, eer, eer_threshold,
                n_real, n_fake);
  return buf;
}

std::string MetricReport::to_json() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "{\"auc\":%.9f,\"pauc\":%.9f,\"eer\":%.9f,\"eer_threshold\":%.9f,"
                "\"n_real\":%d,\"n_fake\":%d}",
                auc, pauc, eer, eer_threshold, n_real, n_fake);
  return buf;
}

}  // namespace dfta::metrics
