#include "nbdiff/experiments.hpp"

#include <cmath>
#include <fstream>

#include "nbdiff/io.hpp"

namespace nbdiff {

std::vector<AblationRow> nb_size_ablation(const std::vector<std::uint32_t>& sizes,
                                          const TrainingConfig& base_config,
                                          const std::vector<Scene>& dataset) {
  if (sizes.empty()) throw ConfigError("nb_size_ablation: no sizes given");
  std::vector<AblationRow> rows;
  rows.reserve(sizes.size());
  for (std::uint32_t n : sizes) {
    TrainingConfig config = base_config;
    config.bank_size = n;
    TrainingOutputs out = run_training(dataset, config);

    AblationRow row;
    row.nb_size = n;
    row.seed = config.seed;
    row.steps_run = out.log.stop_step;
    if (!out.log.checks.empty()) {
      row.final_proxy = out.log.checks.back().score;
    } else {
      // Budget shorter than one check interval; score the final model.
      NoiseSchedule schedule = build_schedule(config.schedule_steps,
                                              ScheduleKind::Linear, config.beta_start,
                                              config.beta_end);
      std::vector<Scene> validation(dataset.end() - config.validation_size,
                                    dataset.end());
      row.final_proxy = evaluate_checkpoint(
          out.model, out.bank, schedule, validation,
          derive_seed(config.seed, streams::kValidation, out.log.stop_step),
          config.label_classes, config.threads);
    }
    rows.push_back(row);
  }
  return rows;
}

void write_ablation_csv(const std::string& path, const std::vector<AblationRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  out << "nb_size,seed,final_proxy,steps_run\n";
  for (const auto& r : rows)
    out << r.nb_size << "," << r.seed << "," << io::fmt_double(r.final_proxy) << ","
        << r.steps_run << "\n";
}

void write_ablation_svg(const std::string& path, const std::vector<AblationRow>& rows) {
  std::vector<double> x;
  io::SvgSeries proxy{"final_proxy", {}};
  for (const auto& r : rows) {
    x.push_back(std::log10(static_cast<double>(r.nb_size)));
    proxy.y.push_back(r.final_proxy);
  }
  io::write_line_svg(path, x, {proxy}, "log10(NB size)", "final proxy");
}

}  // namespace nbdiff
