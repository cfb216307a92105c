#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nbdiff/semantics.hpp"
#include "nbdiff/tensor.hpp"

namespace nbdiff {

/// Unpacked bit sequence, one 0/1 value per element.
using Bits = std::vector<std::uint8_t>;

enum class CondCoding { Raw, Rle, Auto };

/// Dual-rate code configuration: a strong repetition code protects the header
/// and condition payload, a weaker (default: none) code covers the bank
/// index. Repetition factors must be odd so majority voting is total.
struct CodecConfig {
  int strong_rep = 5;
  int weak_rep = 1;
  CondCoding cond_coding = CondCoding::Auto;
  int label_classes = kSceneClasses;  // K, <= 16 (labels ride in 4-bit fields)

  void validate() const {
    if (strong_rep < 1 || strong_rep % 2 == 0)
      throw ConfigError("codec: strong_rep must be odd and >= 1");
    if (weak_rep < 1 || weak_rep % 2 == 0)
      throw ConfigError("codec: weak_rep must be odd and >= 1");
    if (label_classes < 1 || label_classes > 16)
      throw ConfigError("codec: label classes must be in [1, 16]");
  }
};

// Header layout (before coding), MSB-first fields:
//   version:4  K:4  H:16  W:16  N:32  cond_payload_bits:32  rle_mode:1
constexpr std::uint32_t kPacketVersion = 1;
constexpr int kHeaderBits = 105;

/// ceil(log2(n)); 0 when n == 1 (a single-vector bank needs no index bits).
int index_bit_width(std::uint32_t n);

struct PacketDiagnostics {
  int strong_groups_corrected = 0;  // non-unanimous majority groups
  int weak_groups_corrected = 0;
  bool index_wrapped = false;  // decoded index was reduced modulo N
  bool rle_mode = false;
};

struct DecodedPacket {
  SemanticCondition condition;
  std::uint32_t index = 0;
  std::uint32_t bank_size = 0;
  PacketDiagnostics diagnostics;
};

/// Serializes and codes {condition, index}. The index must be in [0, N).
Bits encode_packet(const SemanticCondition& m, std::uint32_t index,
                   std::uint32_t bank_size, const CodecConfig& config);

/// Inverse of encode_packet. Throws PacketLostError when the header does not
/// validate; bit errors elsewhere degrade the payload but always produce a
/// structurally valid result (labels reduced mod K, index reduced mod N).
/// Trailing bits beyond the coded payload (byte padding) are ignored.
DecodedPacket decode_packet(const Bits& bits, const CodecConfig& config);

/// Binary symmetric channel.
struct ChannelModel {
  double crossover_p = 0.0;
  std::uint64_t seed = 0;
};

/// Flips each bit independently with probability crossover_p. Deterministic
/// from the channel seed; never drops or inserts bits.
Bits transmit(const Bits& bits, const ChannelModel& channel);

struct PayloadReport {
  std::int64_t raw_latent_bits = 0;  // d * 32: uncoded f32 latent baseline
  std::int64_t condition_bits = 0;   // serialized condition payload, uncoded
  std::int64_t index_bits = 0;       // ceil(log2 N)
  std::int64_t header_bits = kHeaderBits;
  std::int64_t coded_condition_bits = 0;  // strong-coded header + condition
  std::int64_t coded_index_bits = 0;
  std::int64_t coded_total_bits = 0;
  double raw_to_index_ratio = 0.0;
};

PayloadReport payload_report(const SemanticCondition& m, std::uint32_t bank_size,
                             int image_channels, const CodecConfig& config);

// Wire packing: MSB-first within bytes, zero-padded to a byte boundary.
std::vector<std::uint8_t> bits_to_bytes(const Bits& bits);
Bits bytes_to_bits(const std::vector<std::uint8_t>& bytes);

}  // namespace nbdiff
