#pragma once

#include <string>
#include <vector>

#include "nbdiff/controller.hpp"
#include "nbdiff/metrics.hpp"

namespace nbdiff {

/// One ablation result: a full training run at the given bank size under the
/// shared budget/seeds, scored on the held-out validation slice.
struct AblationRow {
  std::uint32_t nb_size = 0;
  std::uint64_t seed = 0;
  double final_proxy = 0.0;
  std::int64_t steps_run = 0;
};

/// Trains one model per bank size under identical budget and seeds and
/// reports the final validation proxy. Findings are reported, not asserted.
std::vector<AblationRow> nb_size_ablation(const std::vector<std::uint32_t>& sizes,
                                          const TrainingConfig& base_config,
                                          const std::vector<Scene>& dataset);

void write_ablation_csv(const std::string& path, const std::vector<AblationRow>& rows);
void write_ablation_svg(const std::string& path, const std::vector<AblationRow>& rows);

}  // namespace nbdiff
