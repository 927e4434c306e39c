#pragma once

#include <string>
#include <vector>

namespace dfta::metrics {

// higher score = more fake; label: real = 0, fake = 1
struct LabeledScore {
  double score = 0.0;
  int label = 0;
};

struct MetricReport {
  double auc = 0.0;
  double pauc = 0.0;  // normalized to [0,1] by the FPR ceiling
  double eer = 0.0;
  double eer_threshold = 0.0;
  int n_real = 0;
  int n_fake = 0;

  std::string csv_row() const;         // auc,pauc,eer,eer_threshold,n_real,n_fake
  static std::string csv_header();
  std::string to_json() const;
};

// Wilcoxon-Mann-Whitney statistic: P(fake > real) + 0.5 P(tie), exact
double auc(const std::vector<LabeledScore>& scores);

// area under the ROC restricted to FPR in [0, ceiling], divided by the
// ceiling; linear interpolation at the cut
double pauc_at_fpr(const std::vector<LabeledScore>& scores, double fpr_ceiling = 0.1);

// threshold sweep over distinct scores; reports (FPR+FNR)/2 at the threshold
// minimizing |FPR-FNR|, ties broken by the lower threshold
struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};
EerResult eer(const std::vector<LabeledScore>& scores);

MetricReport evaluate(const std::vector<LabeledScore>& scores, double fpr_ceiling = 0.1);

}  // namespace dfta::metrics
