#pragma once

#include <string>
#include <vector>

#include "nbdiff/channel.hpp"
#include "nbdiff/denoiser.hpp"
#include "nbdiff/noise_bank.hpp"
#include "nbdiff/semantics.hpp"

namespace nbdiff {

enum class RxInit {
  DroppedTerm,   // x_T = sqrt(1 - abar_T) * eps(i); the source term is dropped
  OracleLatent,  // debug: the receiver is handed the true x_T
};

struct PipelineConfig {
  CodecConfig codec;
  double edge_tau = 0.25;
  std::uint64_t rx_seed = 0;
  RxInit rx_init = RxInit::DroppedTerm;
};

struct TxTimings {
  double extract_ms = 0, select_ms = 0, encode_ms = 0;
};

struct TxArtifacts {
  std::uint32_t index = 0;  // the selected bank index, matches radius_report
  SemanticCondition condition;
  RadiusReport radius_report;
  Bits bits;
  PayloadReport payload;
  TxTimings timings;
};

/// Transmit side: extract conditions, select the bank noise whose step-T
/// latent radius best matches the theoretical radius, encode the packet.
TxArtifacts tx(const Image& image, const LabelMap& labels, const NoiseBank& bank,
               const NoiseSchedule& schedule, const PipelineConfig& config);

struct RxTimings {
  double decode_ms = 0, sample_ms = 0;
};

/// Receive side output. packet_lost reports an unrecoverable header; all
/// other channel damage still yields a valid image.
struct RxResult {
  bool packet_lost = false;
  std::string failure;
  Image image;
  SemanticCondition condition;
  std::uint32_t index = 0;
  PacketDiagnostics diagnostics;
  RxTimings timings;
};

/// Receive side: decode the packet, fetch the bank vector, build the initial
/// latent and run conditional reverse diffusion. The receiver sees only the
/// bit stream and the shared artifacts (bank, model, schedule, config); in
/// OracleLatent mode the caller must supply the debug latent.
RxResult rx(const Bits& bits, const NoiseBank& bank, const Model& model,
            const NoiseSchedule& schedule, const PipelineConfig& config,
            const Image* oracle_latent = nullptr);

/// One row of the run metrics CSV:
/// scene_id,seed,N,p,index_tx,index_rx,proxy,psnr,payload_bits_condition,
/// payload_bits_index,stop_step
struct RunRecord {
  std::string scene_id;
  std::uint64_t seed = 0;
  std::uint32_t bank_size = 0;
  double channel_p = 0.0;
  std::int64_t index_tx = -1;
  std::int64_t index_rx = -1;
  double proxy = 0.0;
  double psnr = 0.0;
  std::int64_t payload_bits_condition = 0;
  std::int64_t payload_bits_index = 0;
  std::int64_t stop_step = -1;
};

struct EndToEndResult {
  TxArtifacts tx;
  RxResult rx;
  RunRecord record;
};

/// tx -> channel -> rx -> metrics, deterministic from the seeds in
/// channel/config. stop_step is carried into the record when known.
EndToEndResult end_to_end(const Scene& scene, const NoiseBank& bank, const Model& model,
                          const NoiseSchedule& schedule, const ChannelModel& channel,
                          const PipelineConfig& config, std::int64_t stop_step = -1,
                          const std::string& scene_id = "scene");

void write_run_csv(const std::string& path, const std::vector<RunRecord>& records);

}  // namespace nbdiff
