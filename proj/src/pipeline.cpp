#include "nbdiff/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "nbdiff/io.hpp"
#include "nbdiff/metrics.hpp"

namespace nbdiff {

namespace {

double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                   start)
      .count();
}

}  // namespace

TxArtifacts tx(const Image& image, const LabelMap& labels, const NoiseBank& bank,
               const NoiseSchedule& schedule, const PipelineConfig& config) {
  TxArtifacts out;
  auto t0 = std::chrono::steady_clock::now();
  out.condition = extract_conditions(image, labels, config.edge_tau);
  out.timings.extract_ms = ms_since(t0);

  t0 = std::chrono::steady_clock::now();
  out.radius_report = select_noise(bank, image, schedule);
  out.index = out.radius_report.best_index;
  out.timings.select_ms = ms_since(t0);

  t0 = std::chrono::steady_clock::now();
  out.bits = encode_packet(out.condition, out.index, bank.n, config.codec);
  out.payload = payload_report(out.condition, bank.n, image.shape.c, config.codec);
  out.timings.encode_ms = ms_since(t0);
  return out;
}

RxResult rx(const Bits& bits, const NoiseBank& bank, const Model& model,
            const NoiseSchedule& schedule, const PipelineConfig& config,
            const Image* oracle_latent) {
  RxResult out;
  auto t0 = std::chrono::steady_clock::now();
  DecodedPacket packet;
  try {
    packet = decode_packet(bits, config.codec);
  } catch (const PacketLostError& e) {
    out.packet_lost = true;
    out.failure = e.what();
    return out;
  }
  out.timings.decode_ms = ms_since(t0);
  out.condition = packet.condition;
  out.index = packet.index;
  out.diagnostics = packet.diagnostics;

  if (packet.index >= bank.n)
    throw Error("rx: decoded index " + std::to_string(packet.index) +
                " exceeds the shared bank size " + std::to_string(bank.n));
  const Image& eps = bank.vector(packet.index);

  Image x_t;
  if (config.rx_init == RxInit::OracleLatent) {
    if (!oracle_latent)
      throw ConfigError("rx: OracleLatent mode needs the debug latent");
    x_t = *oracle_latent;
  } else {
    const float scale =
        static_cast<float>(schedule.sqrt_one_minus_alpha_bar(schedule.steps));
    x_t = Image(eps.shape, scale * eps.data);
  }

  Image cond_t = condition_tensor<float>(out.condition, config.codec.label_classes);
  t0 = std::chrono::steady_clock::now();
  out.image = sample(model, cond_t, std::move(x_t), schedule, config.rx_seed);
  out.timings.sample_ms = ms_since(t0);
  return out;
}

EndToEndResult end_to_end(const Scene& scene, const NoiseBank& bank, const Model& model,
                          const NoiseSchedule& schedule, const ChannelModel& channel,
                          const PipelineConfig& config, std::int64_t stop_step,
                          const std::string& scene_id) {
  EndToEndResult out;
  try {
    out.tx = tx(scene.image, scene.labels, bank, schedule, config);
  } catch (const Error& e) {
    throw Error("end_to_end [tx]: " + std::string(e.what()));
  }

  Bits received;
  try {
    received = transmit(out.tx.bits, channel);
  } catch (const Error& e) {
    throw Error("end_to_end [channel]: " + std::string(e.what()));
  }

  Image oracle;
  const Image* oracle_ptr = nullptr;
  if (config.rx_init == RxInit::OracleLatent) {
    oracle = forward_diffuse(scene.image, schedule.steps, bank.vector(out.tx.index),
                             schedule);
    oracle_ptr = &oracle;
  }
  try {
    out.rx = rx(received, bank, model, schedule, config, oracle_ptr);
  } catch (const Error& e) {
    throw Error("end_to_end [rx]: " + std::string(e.what()));
  }

  out.record.scene_id = scene_id;
  out.record.seed = scene.seed;
  out.record.bank_size = bank.n;
  out.record.channel_p = channel.crossover_p;
  out.record.index_tx = out.tx.index;
  out.record.stop_step = stop_step;
  out.record.payload_bits_condition = out.tx.payload.condition_bits;
  out.record.payload_bits_index = out.tx.payload.index_bits;
  if (out.rx.packet_lost) {
    out.record.index_rx = -1;
    out.record.proxy = std::numeric_limits<double>::quiet_NaN();
    out.record.psnr = std::numeric_limits<double>::quiet_NaN();
  } else {
    out.record.index_rx = out.rx.index;
    out.record.proxy = perceptual_proxy(out.rx.image, scene.image);
    out.record.psnr = psnr(out.rx.image, scene.image, 2.0);
  }
  return out;
}

void write_run_csv(const std::string& path, const std::vector<RunRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  out << "scene_id,seed,N,p,index_tx,index_rx,proxy,psnr,payload_bits_condition,"
         "payload_bits_index,stop_step\n";
  for (const auto& r : records)
    out << r.scene_id << "," << r.seed << "," << r.bank_size << ","
        << io::fmt_double(r.channel_p) << "," << r.index_tx << "," << r.index_rx << ","
        << io::fmt_double(r.proxy) << "," << io::fmt_double(r.psnr) << ","
        << r.payload_bits_condition << "," << r.payload_bits_index << ","
        << r.stop_step << "\n";
}

}  // namespace nbdiff
