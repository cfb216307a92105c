#include "nbdiff/cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <iostream>

#include "nbdiff/channel.hpp"
#include "nbdiff/controller.hpp"
#include "nbdiff/experiments.hpp"
#include "nbdiff/metrics.hpp"
#include "nbdiff/pipeline.hpp"

namespace nbdiff {

namespace {

// ---------------------------------------------------------------- parsing

std::int64_t parse_i64(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("config key " + key + ": expected an integer, got '" + v + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("config key " + key + ": expected an unsigned integer, got '" +
                      v + "'");
  return out;
}

double parse_f64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": expected a number, got '" + v + "'");
  }
}

#define INT_KEY(field, help)                                                     \
  {                                                                              \
    #field, help, [](const RunConfig& c) { return std::to_string(c.field); },    \
        [](RunConfig& c, const std::string& v) {                                 \
          c.field = static_cast<decltype(c.field)>(parse_i64(#field, v));        \
        }                                                                        \
  }
#define U64_KEY(field, help)                                                     \
  {                                                                              \
    #field, help, [](const RunConfig& c) { return std::to_string(c.field); },    \
        [](RunConfig& c, const std::string& v) { c.field = parse_u64(#field, v); } \
  }
#define F64_KEY(field, help)                                                     \
  {                                                                              \
    #field, help, [](const RunConfig& c) { return io::fmt_double(c.field); },    \
        [](RunConfig& c, const std::string& v) { c.field = parse_f64(#field, v); } \
  }
#define STR_KEY(field, help)                                                     \
  {                                                                              \
    #field, help, [](const RunConfig& c) { return c.field; },                    \
        [](RunConfig& c, const std::string& v) { c.field = v; }                  \
  }

}  // namespace

const std::vector<ConfigKeyDef>& config_keys() {
  static const std::vector<ConfigKeyDef> keys = {
      U64_KEY(seed, "master run seed; all per-stage seeds derive from it"),
      INT_KEY(threads, "worker thread cap for batch/validation parallelism"),
      INT_KEY(image_h, "scene height"),
      INT_KEY(image_w, "scene width"),
      INT_KEY(image_c, "scene channels (1 or 3)"),
      INT_KEY(classes, "semantic label classes"),
      INT_KEY(objects_min, "minimum objects per scene"),
      INT_KEY(objects_max, "maximum objects per scene"),
      F64_KEY(edge_tau, "edge-extraction gradient threshold"),
      U64_KEY(bank_n, "noise bank size N"),
      U64_KEY(bank_seed, "noise bank seed"),
      INT_KEY(t_steps, "diffusion steps T"),
      F64_KEY(beta_start, "linear schedule start variance"),
      F64_KEY(beta_end, "linear schedule end variance"),
      INT_KEY(base_channels, "denoiser base channel width"),
      INT_KEY(levels, "denoiser resolution levels (1-3)"),
      INT_KEY(time_channels, "sinusoidal time-embedding channels"),
      STR_KEY(optimizer, "sgd or adam"),
      F64_KEY(learning_rate, "optimizer step size"),
      INT_KEY(batch_size, "training batch size"),
      INT_KEY(max_steps, "training step budget"),
      INT_KEY(check_interval, "steps between validation checks (kappa)"),
      F64_KEY(target_score, "early-stop threshold on the validation proxy"),
      INT_KEY(validation_size, "validation hold-out size S"),
      INT_KEY(dataset_count, "scenes to generate when --generate is used"),
      F64_KEY(channel_p, "binary symmetric channel crossover probability"),
      U64_KEY(channel_seed, "channel noise seed"),
      INT_KEY(strong_rep, "repetition factor protecting header+condition (odd)"),
      INT_KEY(weak_rep, "repetition factor protecting the index (odd)"),
      STR_KEY(cond_coding, "condition serialization: auto, raw or rle"),
      U64_KEY(rx_seed, "receiver sampling seed"),
      STR_KEY(rx_init, "receiver latent init: dropped or oracle"),
      INT_KEY(fd_stride, "step stride for fd-compare"),
      INT_KEY(fd_images, "image count for fd-compare"),
  };
  return keys;
}

#undef INT_KEY
#undef U64_KEY
#undef F64_KEY
#undef STR_KEY

void apply_config_key(RunConfig& cfg, const std::string& key,
                      const std::string& value) {
  for (const auto& def : config_keys())
    if (def.name == key) {
      def.set(cfg, value);
      return;
    }
  throw ConfigError("unknown config key '" + key + "'");
}

io::KvPairs dump_config(const RunConfig& cfg) {
  io::KvPairs out;
  for (const auto& def : config_keys()) out.emplace_back(def.name, def.get(cfg));
  return out;
}

namespace {

// ---------------------------------------------------------------- plumbing

SceneParams scene_params(const RunConfig& cfg) {
  SceneParams p;
  p.height = cfg.image_h;
  p.width = cfg.image_w;
  p.channels = cfg.image_c;
  p.min_objects = cfg.objects_min;
  p.max_objects = cfg.objects_max;
  return p;
}

TrainingConfig training_config(const RunConfig& cfg) {
  TrainingConfig t;
  t.target_score = cfg.target_score;
  t.check_interval = cfg.check_interval;
  t.validation_size = cfg.validation_size;
  t.max_steps = cfg.max_steps;
  t.seed = cfg.seed;
  t.bank_seed = cfg.bank_seed;
  t.bank_size = cfg.bank_n;
  t.schedule_steps = cfg.t_steps;
  t.beta_start = cfg.beta_start;
  t.beta_end = cfg.beta_end;
  t.optimizer = cfg.optimizer;
  t.learning_rate = cfg.learning_rate;
  t.batch_size = cfg.batch_size;
  t.label_classes = cfg.classes;
  t.base_channels = cfg.base_channels;
  t.levels = cfg.levels;
  t.time_channels = cfg.time_channels;
  t.threads = cfg.threads;
  return t;
}

CodecConfig codec_config(const RunConfig& cfg) {
  CodecConfig c;
  c.strong_rep = cfg.strong_rep;
  c.weak_rep = cfg.weak_rep;
  c.label_classes = cfg.classes;
  if (cfg.cond_coding == "auto")
    c.cond_coding = CondCoding::Auto;
  else if (cfg.cond_coding == "raw")
    c.cond_coding = CondCoding::Raw;
  else if (cfg.cond_coding == "rle")
    c.cond_coding = CondCoding::Rle;
  else
    throw ConfigError("cond_coding must be auto, raw or rle");
  c.validate();
  return c;
}

PipelineConfig pipeline_config(const RunConfig& cfg) {
  PipelineConfig p;
  p.codec = codec_config(cfg);
  p.edge_tau = cfg.edge_tau;
  p.rx_seed = cfg.rx_seed;
  if (cfg.rx_init == "dropped")
    p.rx_init = RxInit::DroppedTerm;
  else if (cfg.rx_init == "oracle")
    p.rx_init = RxInit::OracleLatent;
  else
    throw ConfigError("rx_init must be dropped or oracle");
  return p;
}

NoiseSchedule schedule_of(const RunConfig& cfg) {
  return build_schedule(cfg.t_steps, ScheduleKind::Linear, cfg.beta_start,
                        cfg.beta_end);
}

void write_resolved_config(const RunConfig& cfg, const std::string& out_dir) {
  io::write_kv(out_dir + "/config.resolved.txt", dump_config(cfg));
}

void load_config_file(RunConfig& cfg, const std::string& path) {
  for (const auto& [k, v] : io::read_kv(path)) apply_config_key(cfg, k, v);
}

std::string path_stem(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

std::vector<Scene> obtain_dataset(const RunConfig& cfg, const std::string& data_dir,
                                  bool generate) {
  if (!data_dir.empty()) return load_dataset(data_dir);
  if (!generate)
    throw ConfigError("no dataset: pass --data DIR or --generate");
  return generate_dataset(cfg.seed, cfg.dataset_count, scene_params(cfg));
}

std::int64_t read_meta_i64(const std::string& path, const std::string& key,
                           std::int64_t fallback) {
  if (path.empty()) return fallback;
  for (const auto& [k, v] : io::read_kv(path))
    if (k == key) return parse_i64(key, v);
  return fallback;
}

// ---------------------------------------------------------------- commands

int cmd_gen_data(const RunConfig& cfg, const std::string& out_dir) {
  std::vector<Scene> scenes = generate_dataset(cfg.seed, cfg.dataset_count,
                                               scene_params(cfg));
  save_dataset(scenes, out_dir);
  write_resolved_config(cfg, out_dir);
  std::cout << "wrote " << scenes.size() << " scenes to " << out_dir << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& data_dir, bool generate,
              const std::string& out_dir) {
  std::vector<Scene> dataset = obtain_dataset(cfg, data_dir, generate);
  TrainingConfig tc = training_config(cfg);

  std::filesystem::create_directories(out_dir);
  CheckpointHook hook = [&](std::int64_t step, double score, bool is_best,
                            const Model& model) {
    save_model(model, out_dir + "/model_latest.dgn");
    if (is_best) save_model(model, out_dir + "/model_best.dgn");
    std::cout << "check step " << step << ": score " << io::fmt_double(score) << "\n";
  };
  TrainingOutputs outputs = run_training(dataset, tc, nullptr, hook);

  save_model(outputs.model, out_dir + "/model_latest.dgn");
  if (outputs.log.checks.empty())
    save_model(outputs.model, out_dir + "/model_best.dgn");
  save_bank(outputs.bank, out_dir + "/bank.nbk");
  write_training_csv(outputs.log, out_dir + "/loss.csv", out_dir + "/score.csv");

  io::KvPairs meta;
  meta.emplace_back("stop_step", std::to_string(outputs.log.stop_step));
  meta.emplace_back("stop_reason", stop_reason_name(outputs.log.reason));
  meta.emplace_back("checks", std::to_string(outputs.log.checks.size()));
  meta.emplace_back("final_score",
                    io::fmt_double(outputs.log.checks.empty()
                                       ? std::numeric_limits<double>::quiet_NaN()
                                       : outputs.log.checks.back().score));
  io::write_kv(out_dir + "/model_meta.txt", meta);
  write_resolved_config(cfg, out_dir);

  std::cout << "training stopped at step " << outputs.log.stop_step << " ("
            << stop_reason_name(outputs.log.reason) << ")\n";
  return 0;
}

int cmd_tx(const RunConfig& cfg, const std::string& scene_path,
           const std::string& bank_path, const std::string& out_dir) {
  Scene scene = load_scene(scene_path);
  NoiseBank bank = load_bank(bank_path);
  NoiseSchedule schedule = schedule_of(cfg);
  PipelineConfig pipe = pipeline_config(cfg);

  TxArtifacts art = tx(scene.image, scene.labels, bank, schedule, pipe);

  std::filesystem::create_directories(out_dir);
  io::write_file_bytes(out_dir + "/packet.bits", bits_to_bytes(art.bits));
  io::KvPairs meta;
  meta.emplace_back("index_tx", std::to_string(art.index));
  meta.emplace_back("bank_n", std::to_string(bank.n));
  meta.emplace_back("radius_theoretical", io::fmt_double(art.radius_report.theoretical));
  meta.emplace_back(
      "radius_selected",
      io::fmt_double(art.radius_report.per_index_radius[art.radius_report.best_index]));
  meta.emplace_back("payload_bits_condition", std::to_string(art.payload.condition_bits));
  meta.emplace_back("payload_bits_index", std::to_string(art.payload.index_bits));
  meta.emplace_back("payload_bits_coded_total",
                    std::to_string(art.payload.coded_total_bits));
  meta.emplace_back("raw_latent_bits", std::to_string(art.payload.raw_latent_bits));
  io::write_kv(out_dir + "/packet_meta.txt", meta);
  write_resolved_config(cfg, out_dir);
  std::cout << "packet: index " << art.index << ", "
            << art.payload.coded_total_bits << " coded bits\n";
  return 0;
}

int cmd_rx(const RunConfig& cfg, const std::string& packet_path,
           const std::string& bank_path, const std::string& model_path,
           const std::string& out_dir, const std::string& tx_meta_path,
           const std::string& source_path) {
  NoiseBank bank = load_bank(bank_path);
  Model model = load_model(model_path);
  NoiseSchedule schedule = schedule_of(cfg);
  PipelineConfig pipe = pipeline_config(cfg);
  if (pipe.rx_init == RxInit::OracleLatent)
    throw ConfigError("rx: oracle latent init is only available through 'run'");
  Bits bits = bytes_to_bits(io::read_file_bytes(packet_path));

  RxResult result = rx(bits, bank, model, schedule, pipe);
  if (result.packet_lost) throw PacketLostError("rx: " + result.failure);

  std::filesystem::create_directories(out_dir);
  io::write_farbfeld(out_dir + "/regen.ff", result.image);
  Scene regen;
  regen.seed = cfg.seed;
  regen.image = result.image;
  regen.labels = result.condition.segmentation;
  save_scene(regen, out_dir + "/regen.scn");

  RunRecord record;
  record.scene_id = path_stem(packet_path);
  record.seed = cfg.seed;
  record.bank_size = bank.n;
  record.channel_p = 0.0;  // rx does not apply a channel
  record.index_tx = read_meta_i64(tx_meta_path, "index_tx", -1);
  record.index_rx = result.index;
  record.payload_bits_condition =
      payload_report(result.condition, bank.n, result.image.shape.c, pipe.codec)
          .condition_bits;
  record.payload_bits_index = index_bit_width(bank.n);
  if (!source_path.empty()) {
    Scene source = load_scene(source_path);
    record.proxy = perceptual_proxy(result.image, source.image);
    record.psnr = psnr(result.image, source.image, 2.0);
  } else {
    record.proxy = std::numeric_limits<double>::quiet_NaN();
    record.psnr = std::numeric_limits<double>::quiet_NaN();
  }
  write_run_csv(out_dir + "/metrics.csv", {record});
  write_resolved_config(cfg, out_dir);
  std::cout << "regenerated with index " << result.index << "\n";
  return 0;
}

int cmd_run(const RunConfig& cfg, const std::string& scene_path,
            const std::string& bank_path, const std::string& model_path,
            const std::string& out_dir, const std::string& train_meta_path) {
  Scene scene = load_scene(scene_path);
  NoiseBank bank = load_bank(bank_path);
  Model model = load_model(model_path);
  NoiseSchedule schedule = schedule_of(cfg);
  PipelineConfig pipe = pipeline_config(cfg);
  ChannelModel channel{cfg.channel_p, cfg.channel_seed};
  std::int64_t stop_step = read_meta_i64(train_meta_path, "stop_step", -1);

  EndToEndResult result = end_to_end(scene, bank, model, schedule, channel, pipe,
                                     stop_step, path_stem(scene_path));

  std::filesystem::create_directories(out_dir);
  io::write_file_bytes(out_dir + "/packet.bits", bits_to_bytes(result.tx.bits));
  if (!result.rx.packet_lost) {
    io::write_farbfeld(out_dir + "/regen.ff", result.rx.image);
    Scene regen;
    regen.seed = cfg.seed;
    regen.image = result.rx.image;
    regen.labels = result.rx.condition.segmentation;
    save_scene(regen, out_dir + "/regen.scn");
  }
  write_run_csv(out_dir + "/metrics.csv", {result.record});

  io::KvPairs meta;
  meta.emplace_back("rx_init",
                    pipe.rx_init == RxInit::DroppedTerm ? "dropped_term" : "oracle");
  meta.emplace_back("packet_lost", result.rx.packet_lost ? "1" : "0");
  meta.emplace_back("index_tx", std::to_string(result.record.index_tx));
  meta.emplace_back("index_rx", std::to_string(result.record.index_rx));
  meta.emplace_back("strong_groups_corrected",
                    std::to_string(result.rx.diagnostics.strong_groups_corrected));
  io::write_kv(out_dir + "/run_meta.txt", meta);
  write_resolved_config(cfg, out_dir);

  if (result.rx.packet_lost)
    std::cout << "packet lost: " << result.rx.failure << "\n";
  else
    std::cout << "proxy " << io::fmt_double(result.record.proxy) << ", psnr "
              << io::fmt_double(result.record.psnr) << " dB\n";
  return 0;
}

int cmd_ablate(const RunConfig& cfg, const std::string& data_dir, bool generate,
               const std::string& sizes_str, const std::string& out_dir) {
  std::vector<std::uint32_t> sizes;
  std::size_t pos = 0;
  while (pos < sizes_str.size()) {
    auto comma = sizes_str.find(',', pos);
    if (comma == std::string::npos) comma = sizes_str.size();
    sizes.push_back(
        static_cast<std::uint32_t>(parse_u64("sizes", sizes_str.substr(pos, comma - pos))));
    pos = comma + 1;
  }
  if (sizes.empty()) throw ConfigError("ablate-nb: --sizes must list bank sizes");

  std::vector<Scene> dataset = obtain_dataset(cfg, data_dir, generate);
  std::vector<AblationRow> rows = nb_size_ablation(sizes, training_config(cfg), dataset);

  std::filesystem::create_directories(out_dir);
  write_ablation_csv(out_dir + "/ablation.csv", rows);
  write_ablation_svg(out_dir + "/ablation.svg", rows);
  write_resolved_config(cfg, out_dir);
  for (const auto& r : rows)
    std::cout << "N=" << r.nb_size << ": final proxy " << io::fmt_double(r.final_proxy)
              << " after " << r.steps_run << " steps\n";
  return 0;
}

int cmd_fd_compare(const RunConfig& cfg, const std::string& data_dir, bool generate,
                   const std::string& out_dir) {
  std::vector<Scene> dataset = obtain_dataset(cfg, data_dir, generate);
  if (static_cast<int>(dataset.size()) < cfg.fd_images)
    throw ConfigError("fd-compare: dataset has fewer than fd_images scenes");
  std::vector<Image> images;
  images.reserve(cfg.fd_images);
  for (int i = 0; i < cfg.fd_images; ++i) images.push_back(dataset[i].image);

  NoiseBank bank = build_bank(cfg.bank_seed, cfg.bank_n, images[0].shape);
  NoiseSchedule schedule = schedule_of(cfg);
  std::vector<FdComparisonRow> rows =
      fd_comparison(images, bank, schedule, cfg.fd_stride, cfg.seed);

  std::filesystem::create_directories(out_dir);
  write_fd_csv(out_dir + "/fd_comparison.csv", rows);
  write_fd_svg(out_dir + "/fd_psnr.svg", out_dir + "/fd_nmi.svg", rows);
  write_resolved_config(cfg, out_dir);
  std::cout << "fd-compare: " << rows.size() << " sampled steps\n";
  return 0;
}

int cmd_verify(const RunConfig& cfg) {
  int failures = 0;
  auto report = [&failures](bool ok, const std::string& what) {
    std::cout << (ok ? "ok:   " : "FAIL: ") << what << "\n";
    if (!ok) ++failures;
  };

  // Gradient check on a small double-precision model.
  {
    ArchConfig arch;
    arch.image_channels = 3;
    arch.cond_channels = 4;
    arch.time_channels = 4;
    arch.base_channels = 6;
    arch.levels = 2;
    ModelT<double> model = build_model<double>(arch, 11);
    Rng rng(12);
    for (auto& v : model.convs.back().weight.reshaped()) v = rng.next_normal() * 0.05;
    TensorShape shape{3, 8, 8};
    NoiseBank bank = build_bank(13, 8, shape);
    NoiseSchedule schedule = build_schedule(10, ScheduleKind::Linear, 1e-3, 0.1);
    TrainBatchT<double> batch;
    for (int j = 0; j < 2; ++j) {
      batch.x0.push_back(rng.normal_image<double>(shape));
      batch.cond.push_back(rng.normal_image<double>(TensorShape{4, 8, 8}));
      batch.t.push_back(j + 3);
      batch.bank_index.push_back(j);
    }
    double err = gradient_check(model, batch, bank, schedule);
    report(err < 1e-4, "gradient check: max relative error " + io::fmt_double(err));
    GradientCheckOptions corrupt;
    corrupt.corrupt_tensor = 0;
    double mutated = gradient_check(model, batch, bank, schedule, corrupt);
    report(mutated > 0.1,
           "gradient mutation detected: error " + io::fmt_double(mutated));
  }

  // Bank statistics.
  {
    NoiseBank bank = build_bank(cfg.bank_seed, 200, TensorShape{3, 16, 16});
    double sum = 0, sq = 0;
    std::int64_t count = 0;
    for (const auto& v : bank.vectors) {
      sum += v.data.cast<double>().sum();
      sq += v.data.cast<double>().square().sum();
      count += v.data.size();
    }
    double mean = sum / count;
    double var = sq / count - mean * mean;
    double mean_bound = 4.0 / std::sqrt(static_cast<double>(count));
    report(std::abs(mean) < mean_bound,
           "bank mean " + io::fmt_double(mean) + " within " +
               io::fmt_double(mean_bound));
    report(std::abs(var - 1.0) < 0.05, "bank variance " + io::fmt_double(var));
  }

  // Codec: exhaustive <=2-bit errors per strong group, round trips, index
  // validity under a noisy channel.
  {
    CodecConfig codec;
    codec.label_classes = cfg.classes;
    Rng rng(99);
    SemanticCondition m;
    m.segmentation = LabelMap(8, 8);
    m.edges = BitMap(8, 8);
    for (auto& l : m.segmentation.v)
      l = static_cast<std::uint8_t>(rng.next_below(cfg.classes));
    for (auto& e : m.edges.v) e = static_cast<std::uint8_t>(rng.next_below(2));
    Bits coded = encode_packet(m, 700, 1000, codec);

    bool exhaustive_ok = true;
    const std::size_t strong_groups = (coded.size() - index_bit_width(1000)) / 5;
    for (std::size_t g = 0; g < strong_groups && exhaustive_ok; ++g)
      for (int a = 0; a < 5 && exhaustive_ok; ++a)
        for (int b = a; b < 5 && exhaustive_ok; ++b) {
          Bits damaged = coded;
          damaged[g * 5 + a] ^= 1;
          damaged[g * 5 + b] ^= 1;  // a == b injects a single flip
          DecodedPacket packet = decode_packet(damaged, codec);
          exhaustive_ok = packet.condition.segmentation == m.segmentation &&
                          packet.condition.edges == m.edges;
        }
    report(exhaustive_ok, "codec corrects every <=2-bit error per strong group");

    bool trips_ok = true;
    for (int trial = 0; trial < 200 && trips_ok; ++trial) {
      for (auto& l : m.segmentation.v)
        l = static_cast<std::uint8_t>(rng.next_below(cfg.classes));
      for (auto& e : m.edges.v) e = static_cast<std::uint8_t>(rng.next_below(2));
      auto index = static_cast<std::uint32_t>(rng.next_below(1000));
      DecodedPacket packet = decode_packet(encode_packet(m, index, 1000, codec), codec);
      trips_ok = packet.index == index && packet.condition.segmentation == m.segmentation &&
                 packet.condition.edges == m.edges;
    }
    report(trips_ok, "codec noiseless round trips");

    bool index_ok = true;
    for (int trial = 0; trial < 200 && index_ok; ++trial) {
      Bits noisy = transmit(coded, ChannelModel{0.3, static_cast<std::uint64_t>(trial)});
      try {
        DecodedPacket packet = decode_packet(noisy, codec);
        index_ok = packet.index < 1000;
      } catch (const PacketLostError&) {
        // acceptable outcome under heavy noise
      }
    }
    report(index_ok, "decoded index stays in range under p=0.3");
  }

  std::cout << (failures == 0 ? "verify passed\n" : "verify FAILED\n");
  return failures == 0 ? 0 : 1;
}

std::string config_key_footer() {
  std::string footer = "Configuration keys (defaults in parentheses):\n";
  RunConfig defaults;
  for (const auto& def : config_keys())
    footer += "  " + def.name + " (" + def.get(defaults) + "): " + def.help + "\n";
  return footer;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"noise-bank diffusion communication simulator", "nbdiff"};
  app.fallthrough();
  app.footer(config_key_footer());
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_file;
  std::vector<std::pair<std::string, std::string>> overrides;

  app.add_option("--config", config_file, "key=value config file");
  for (const auto& def : config_keys()) {
    app.add_option_function<std::string>(
        "--" + def.name,
        [&overrides, name = def.name](const std::string& v) {
          overrides.emplace_back(name, v);
        },
        def.help);
  }

  std::string data_dir, out_dir, scene_path, bank_path, model_path, packet_path;
  std::string tx_meta_path, source_path, train_meta_path, sizes_str;
  bool generate = false;

  CLI::App* gen_data = app.add_subcommand("gen-data", "generate a scene dataset");
  gen_data->add_option("--out", out_dir, "output directory")->required();

  CLI::App* train = app.add_subcommand("train", "train the conditional denoiser");
  train->add_option("--data", data_dir, "dataset directory");
  train->add_flag("--generate", generate, "generate the dataset on the fly");
  train->add_option("--out", out_dir, "output directory")->required();

  CLI::App* tx_cmd = app.add_subcommand("tx", "encode a scene into a packet");
  tx_cmd->add_option("--scene", scene_path, "scene record")->required();
  tx_cmd->add_option("--bank", bank_path, "noise bank file")->required();
  tx_cmd->add_option("--out", out_dir, "output directory")->required();

  CLI::App* rx_cmd = app.add_subcommand("rx", "regenerate an image from a packet");
  rx_cmd->add_option("--packet", packet_path, "packet file")->required();
  rx_cmd->add_option("--bank", bank_path, "noise bank file")->required();
  rx_cmd->add_option("--model", model_path, "denoiser checkpoint")->required();
  rx_cmd->add_option("--out", out_dir, "output directory")->required();
  rx_cmd->add_option("--tx-meta", tx_meta_path, "transmit-side packet_meta.txt");
  rx_cmd->add_option("--source", source_path, "source scene for quality metrics");

  CLI::App* run_cmd = app.add_subcommand("run", "end-to-end tx -> channel -> rx");
  run_cmd->add_option("--scene", scene_path, "scene record")->required();
  run_cmd->add_option("--bank", bank_path, "noise bank file")->required();
  run_cmd->add_option("--model", model_path, "denoiser checkpoint")->required();
  run_cmd->add_option("--out", out_dir, "output directory")->required();
  run_cmd->add_option("--train-meta", train_meta_path, "training model_meta.txt");

  CLI::App* ablate = app.add_subcommand("ablate-nb", "train across bank sizes");
  ablate->add_option("--data", data_dir, "dataset directory");
  ablate->add_flag("--generate", generate, "generate the dataset on the fly");
  ablate->add_option("--sizes", sizes_str, "comma-separated bank sizes")->required();
  ablate->add_option("--out", out_dir, "output directory")->required();

  CLI::App* fd = app.add_subcommand("fd-compare",
                                    "forward-diffusion equivalence curves");
  fd->add_option("--data", data_dir, "dataset directory");
  fd->add_flag("--generate", generate, "generate the dataset on the fly");
  fd->add_option("--out", out_dir, "output directory")->required();

  CLI::App* verify = app.add_subcommand("verify", "run built-in health checks");

  try {
    app.parse(argc, const_cast<char**>(argv));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (!config_file.empty()) load_config_file(cfg, config_file);
    for (const auto& [k, v] : overrides) apply_config_key(cfg, k, v);

    if (gen_data->parsed()) return cmd_gen_data(cfg, out_dir);
    if (train->parsed()) return cmd_train(cfg, data_dir, generate, out_dir);
    if (tx_cmd->parsed()) return cmd_tx(cfg, scene_path, bank_path, out_dir);
    if (rx_cmd->parsed())
      return cmd_rx(cfg, packet_path, bank_path, model_path, out_dir, tx_meta_path,
                    source_path);
    if (run_cmd->parsed())
      return cmd_run(cfg, scene_path, bank_path, model_path, out_dir, train_meta_path);
    if (ablate->parsed())
      return cmd_ablate(cfg, data_dir, generate, sizes_str, out_dir);
    if (fd->parsed()) return cmd_fd_compare(cfg, data_dir, generate, out_dir);
    if (verify->parsed()) return cmd_verify(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "artifact error: " << e.what() << "\n";
    return 3;
  } catch (const DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace nbdiff
