#pragma once

#include <cstdint>

namespace tarslab {

struct GradCheckReport {
    double max_rel_err = 0.0;
    int trials = 0;
    int params_checked = 0;
};

// Random micro-models and 2-example batches: reverse-mode gradients of the
// full combined loss against central finite differences.
GradCheckReport run_gradcheck(int trials, std::uint64_t seed);

}  // namespace tarslab
