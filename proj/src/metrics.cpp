#include "dimenet/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "dimenet/tensor.hpp"

namespace dimenet {

double mae(const std::vector<double>& preds, const std::vector<double>& targets) {
    check(!preds.empty(), "mae: empty input");
    check(preds.size() == targets.size(), "mae: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) s += std::abs(preds[i] - targets[i]);
    return s / static_cast<double>(preds.size());
}

double std_mae(const std::vector<double>& per_target_mae, const std::vector<double>& sigma) {
    check(!per_target_mae.empty(), "std_mae: empty input");
    check(per_target_mae.size() == sigma.size(), "std_mae: length mismatch");
    double s = 0.0;
    for (std::size_t m = 0; m < sigma.size(); ++m) {
        check(sigma[m] > 0.0, "std_mae: sigma must be positive");
        s += per_target_mae[m] / sigma[m];
    }
    return s / static_cast<double>(sigma.size());
}

double log_mae(const std::vector<double>& per_target_mae, const std::vector<double>& sigma) {
    check(!per_target_mae.empty(), "log_mae: empty input");
    check(per_target_mae.size() == sigma.size(), "log_mae: length mismatch");
    double s = 0.0;
    for (std::size_t m = 0; m < sigma.size(); ++m) {
        check(sigma[m] > 0.0, "log_mae: sigma must be positive");
        if (per_target_mae[m] <= 0.0)
            throw std::domain_error("log_mae: undefined for zero MAE");
        s += std::log(per_target_mae[m] / sigma[m]);
    }
    return s / static_cast<double>(sigma.size());
}

}  // namespace dimenet
