#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nbdiff/denoiser.hpp"
#include "nbdiff/noise_bank.hpp"
#include "nbdiff/schedule.hpp"
#include "nbdiff/semantics.hpp"

namespace nbdiff {

/// Training-loop parameters. The run seed pins every stochastic choice; all
/// per-step draws derive from (seed, step), so a run resumed from step k
/// replays the uninterrupted trajectory bit for bit (with the stateless
/// default optimizer).
struct TrainingConfig {
  double target_score = 0.25;   // stop once the validation score drops here
  int check_interval = 1000;    // steps between validation checks
  int validation_size = 16;     // held out from the end of the dataset
  std::int64_t max_steps = 20000;
  std::int64_t start_step = 0;  // resume point
  std::uint64_t seed = 0;
  std::uint64_t bank_seed = 1;
  std::uint32_t bank_size = 1000;
  int schedule_steps = 100;
  double beta_start = 1e-4;
  double beta_end = 0.2;
  std::string optimizer = "adam";  // "sgd" or "adam"
  double learning_rate = 1e-3;
  int batch_size = 4;
  int label_classes = kSceneClasses;
  int base_channels = 16;
  int levels = 3;
  int time_channels = 8;
  int threads = 1;

  void validate() const {
    if (check_interval < 1) throw ConfigError("training: check_interval must be >= 1");
    if (validation_size < 1) throw ConfigError("training: validation_size must be >= 1");
    if (!(target_score >= 0)) throw ConfigError("training: target_score must be >= 0");
    if (max_steps < 0) throw ConfigError("training: max_steps must be >= 0");
    if (batch_size < 1) throw ConfigError("training: batch_size must be >= 1");
    if (!(learning_rate >= 0)) throw ConfigError("training: learning_rate must be >= 0");
    if (optimizer != "sgd" && optimizer != "adam")
      throw ConfigError("training: optimizer must be sgd or adam");
    if (start_step < 0 || start_step > max_steps)
      throw ConfigError("training: start_step outside [0, max_steps]");
  }

  ArchConfig arch_for(int image_channels) const {
    ArchConfig a;
    a.image_channels = image_channels;
    a.cond_channels = label_classes + 1;
    a.time_channels = time_channels;
    a.base_channels = base_channels;
    a.levels = levels;
    return a;
  }
};

struct TrainingCheck {
  std::int64_t step = 0;
  double score = 0.0;
  bool stopped = false;
};

enum class StopReason { EarlyStop, MaxSteps };

struct TrainingLog {
  std::int64_t first_step = 0;       // 1-based step of losses[0]
  std::vector<double> losses;        // one entry per executed step
  std::vector<TrainingCheck> checks;
  StopReason reason = StopReason::MaxSteps;
  std::int64_t stop_step = 0;
};

const char* stop_reason_name(StopReason reason);

/// Mean perceptual proxy between regenerated and source validation images;
/// regeneration runs the full transmit-side selection path (GO noise
/// selection, receiver-style latent, conditional reverse diffusion).
double evaluate_checkpoint(const Model& model, const NoiseBank& bank,
                           const NoiseSchedule& schedule,
                           const std::vector<Scene>& validation, std::uint64_t seed,
                           int label_classes = kSceneClasses, int threads = 1);

/// Early-stopping predicate: score <= threshold.
inline bool should_stop(double score, double threshold) {
  return score <= threshold;
}

using ScoreFn = std::function<double(const Model&, const NoiseBank&,
                                     const NoiseSchedule&, const std::vector<Scene>&,
                                     std::uint64_t seed)>;
using CheckpointHook =
    std::function<void(std::int64_t step, double score, bool is_best, const Model&)>;

struct TrainingOutputs {
  Model model;
  NoiseBank bank;
  TrainingLog log;
  OptState opt;
};

/// Full training loop: builds the bank, iterates train_step over the dataset
/// in epoch order (random step / bank index per example), scores a held-out
/// validation slice every check_interval steps and stops early once the
/// score reaches the target. `score_fn` defaults to evaluate_checkpoint;
/// tests may stub it. Pass `resume` to continue from config.start_step.
TrainingOutputs run_training(const std::vector<Scene>& dataset,
                             const TrainingConfig& config,
                             const ScoreFn& score_fn = nullptr,
                             const CheckpointHook& checkpoint_hook = nullptr,
                             const TrainingOutputs* resume = nullptr);

void write_training_csv(const TrainingLog& log, const std::string& loss_path,
                        const std::string& score_path);

}  // namespace nbdiff
