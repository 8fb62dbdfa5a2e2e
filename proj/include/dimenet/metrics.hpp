#ifndef DIMENET_METRICS_HPP
#define DIMENET_METRICS_HPP

#include <vector>

namespace dimenet {

/// Mean absolute error. Throws on empty or mismatched inputs.
double mae(const std::vector<double>& preds, const std::vector<double>& targets);

/// Mean standardized MAE: (1/M) sum_m MAE_m / sigma_m.
double std_mae(const std::vector<double>& per_target_mae, const std::vector<double>& sigma);

/// Mean standardized logMAE (natural log). Throws if any MAE is zero.
double log_mae(const std::vector<double>& per_target_mae, const std::vector<double>& sigma);

}  // namespace dimenet

#endif
