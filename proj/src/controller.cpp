#include "nbdiff/controller.hpp"

#include <cmath>
#include <fstream>

#include "nbdiff/io.hpp"
#include "nbdiff/metrics.hpp"
#include "nbdiff/parallel.hpp"

namespace nbdiff {

const char* stop_reason_name(StopReason reason) {
  return reason == StopReason::EarlyStop ? "early-stop" : "max-steps";
}

double evaluate_checkpoint(const Model& model, const NoiseBank& bank,
                           const NoiseSchedule& schedule,
                           const std::vector<Scene>& validation, std::uint64_t seed,
                           int label_classes, int threads) {
  if (validation.empty()) throw ConfigError("evaluate_checkpoint: empty validation set");
  const int s = static_cast<int>(validation.size());
  std::vector<double> scores(s, 0.0);
  const float latent_scale =
      static_cast<float>(schedule.sqrt_one_minus_alpha_bar(schedule.steps));
  parallel_for(s, threads, [&](int j) {
    const Scene& scene = validation[j];
    SemanticCondition cond = extract_conditions(scene.image, scene.labels);
    Image cond_t = condition_tensor<float>(cond, label_classes);
    RadiusReport report = select_noise(bank, scene.image, schedule);
    const Image& eps = bank.vector(report.best_index);
    Image x_t(eps.shape, latent_scale * eps.data);
    // Per-image seed from the scene identity, not the list position, so the
    // score of a set is the mean of individually computed scores.
    Image regen = sample(model, cond_t, std::move(x_t), schedule,
                         derive_seed(seed, streams::kSample, scene.seed));
    scores[j] = perceptual_proxy(regen, scene.image);
  });
  double mean = 0.0;
  for (double v : scores) mean += v;
  return mean / s;
}

TrainingOutputs run_training(const std::vector<Scene>& dataset,
                             const TrainingConfig& config, const ScoreFn& score_fn,
                             const CheckpointHook& checkpoint_hook,
                             const TrainingOutputs* resume) {
  config.validate();
  if (dataset.empty()) throw ConfigError("run_training: empty dataset");
  if (static_cast<int>(dataset.size()) <= config.validation_size)
    throw ConfigError("run_training: dataset smaller than the validation hold-out");

  const TensorShape shape = dataset[0].image.shape;
  const std::size_t train_n = dataset.size() - config.validation_size;
  std::vector<Scene> validation(dataset.end() - config.validation_size, dataset.end());

  NoiseSchedule schedule = build_schedule(config.schedule_steps, ScheduleKind::Linear,
                                          config.beta_start, config.beta_end);
  TrainingOutputs out;
  out.bank = build_bank(config.bank_seed, config.bank_size, shape);
  if (resume) {
    out.model = resume->model;
    out.opt = resume->opt;
  } else {
    out.model = build_model<float>(config.arch_for(shape.c),
                                   derive_seed(config.seed, streams::kModelInit));
    out.opt = config.optimizer == "adam" ? OptState::adam() : OptState::sgd();
  }
  out.log.first_step = config.start_step + 1;
  out.log.stop_step = config.start_step;

  // Conditions are fixed per scene; tensorize once.
  std::vector<Image> cond_cache(train_n);
  for (std::size_t i = 0; i < train_n; ++i) {
    SemanticCondition cond = extract_conditions(dataset[i].image, dataset[i].labels);
    cond_cache[i] = condition_tensor<float>(cond, config.label_classes);
  }

  ScoreFn scorer = score_fn;
  if (!scorer)
    scorer = [&config](const Model& m, const NoiseBank& b, const NoiseSchedule& s,
                       const std::vector<Scene>& v, std::uint64_t seed) {
      return evaluate_checkpoint(m, b, s, v, seed, config.label_classes,
                                 config.threads);
    };

  double best_score = std::numeric_limits<double>::infinity();
  for (std::int64_t step = config.start_step; step < config.max_steps; ++step) {
    TrainBatch batch;
    Rng rng(derive_seed(config.seed, streams::kTrainDraw, step));
    for (int j = 0; j < config.batch_size; ++j) {
      std::size_t idx =
          (static_cast<std::size_t>(step) * config.batch_size + j) % train_n;
      batch.x0.push_back(dataset[idx].image);
      batch.cond.push_back(cond_cache[idx]);
      batch.t.push_back(1 + static_cast<int>(rng.next_below(schedule.steps)));
      batch.bank_index.push_back(
          static_cast<std::uint32_t>(rng.next_below(config.bank_size)));
    }
    double loss;
    try {
      loss = train_step(out.model, batch, out.bank, schedule, out.opt,
                        config.learning_rate, config.threads);
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string(e.what()) + " (training step " +
                            std::to_string(step + 1) + ")");
    }
    out.log.losses.push_back(loss);
    const std::int64_t completed = step + 1;
    out.log.stop_step = completed;

    if (completed % config.check_interval == 0) {
      double score =
          scorer(out.model, out.bank, schedule, validation,
                 derive_seed(config.seed, streams::kValidation, completed));
      bool stop = should_stop(score, config.target_score);
      out.log.checks.push_back({completed, score, stop});
      if (checkpoint_hook) {
        bool is_best = score < best_score;
        if (is_best) best_score = score;
        checkpoint_hook(completed, score, is_best, out.model);
      }
      if (stop) {
        out.log.reason = StopReason::EarlyStop;
        return out;
      }
    }
  }
  out.log.reason = StopReason::MaxSteps;
  out.log.stop_step = config.max_steps;
  return out;
}

void write_training_csv(const TrainingLog& log, const std::string& loss_path,
                        const std::string& score_path) {
  std::ofstream loss(loss_path, std::ios::trunc);
  if (!loss) throw FormatError("cannot write " + loss_path);
  loss << "step,loss\n";
  for (std::size_t i = 0; i < log.losses.size(); ++i)
    loss << log.first_step + static_cast<std::int64_t>(i) << ","
         << io::fmt_double(log.losses[i]) << "\n";

  std::ofstream score(score_path, std::ios::trunc);
  if (!score) throw FormatError("cannot write " + score_path);
  score << "step,score,stopped\n";
  for (const auto& c : log.checks)
    score << c.step << "," << io::fmt_double(c.score) << "," << (c.stopped ? 1 : 0)
          << "\n";
}

}  // namespace nbdiff
