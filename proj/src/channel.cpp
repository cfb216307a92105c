#include "nbdiff/channel.hpp"

#include <algorithm>

#include "nbdiff/rng.hpp"

namespace nbdiff {

namespace {

struct BitWriter {
  Bits bits;

  void push(std::uint64_t value, int width) {
    for (int i = width - 1; i >= 0; --i)
      bits.push_back(static_cast<std::uint8_t>((value >> i) & 1));
  }
};

struct BitReader {
  const Bits& bits;
  std::size_t pos = 0;

  bool exhausted(std::size_t need) const { return pos + need > bits.size(); }

  std::uint64_t pull(int width) {
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v = v << 1 | bits[pos++];
    return v;
  }
};

Bits repeat_code(const Bits& payload, int rep) {
  Bits out;
  out.reserve(payload.size() * rep);
  for (std::uint8_t b : payload)
    for (int i = 0; i < rep; ++i) out.push_back(b);
  return out;
}

/// Majority vote per rep-sized group; counts non-unanimous groups.
Bits majority_decode(const Bits& coded, std::size_t offset, std::size_t payload_bits,
                     int rep, int* groups_corrected) {
  Bits out;
  out.reserve(payload_bits);
  for (std::size_t i = 0; i < payload_bits; ++i) {
    int ones = 0;
    for (int r = 0; r < rep; ++r) ones += coded[offset + i * rep + r];
    std::uint8_t bit = ones * 2 > rep ? 1 : 0;
    if (ones != 0 && ones != rep) ++(*groups_corrected);
    out.push_back(bit);
  }
  return out;
}

int run_length_field_bits(int width) {
  int bits = 1;
  while ((1 << bits) - 1 < width) ++bits;  // run lengths are 1..width
  return bits;
}

Bits serialize_condition_raw(const SemanticCondition& m) {
  BitWriter w;
  for (std::uint8_t label : m.segmentation.v) w.push(label, 4);
  for (std::uint8_t e : m.edges.v) w.push(e ? 1 : 0, 1);
  return std::move(w.bits);
}

Bits serialize_condition_rle(const SemanticCondition& m) {
  const int width = m.segmentation.w;
  const int len_bits = run_length_field_bits(width);
  BitWriter w;
  for (int y = 0; y < m.segmentation.h; ++y) {
    int x = 0;
    while (x < width) {
      std::uint8_t label = m.segmentation.at(y, x);
      int run = 1;
      while (x + run < width && m.segmentation.at(y, x + run) == label) ++run;
      w.push(label, 4);
      w.push(static_cast<std::uint64_t>(run), len_bits);
      x += run;
    }
  }
  for (std::uint8_t e : m.edges.v) w.push(e ? 1 : 0, 1);
  return std::move(w.bits);
}

}  // namespace

int index_bit_width(std::uint32_t n) {
  int bits = 0;
  while ((std::uint64_t{1} << bits) < n) ++bits;
  return bits;
}

Bits encode_packet(const SemanticCondition& m, std::uint32_t index,
                   std::uint32_t bank_size, const CodecConfig& config) {
  config.validate();
  if (bank_size == 0) throw ConfigError("encode_packet: bank size must be >= 1");
  if (index >= bank_size)
    throw Error("encode_packet: index " + std::to_string(index) + " out of range [0, " +
                std::to_string(bank_size) + ")");
  const int h = m.segmentation.h, w = m.segmentation.w;
  if (h < 1 || w < 1 || h > 0xffff || w > 0xffff)
    throw Error("encode_packet: condition dims must fit 16 bits");
  if (m.edges.h != h || m.edges.w != w)
    throw Error("encode_packet: edge bitmap dims do not match segmentation");
  for (std::uint8_t label : m.segmentation.v)
    if (label >= config.label_classes)
      throw Error("encode_packet: label " + std::to_string(label) + " outside [0, " +
                  std::to_string(config.label_classes) + ")");

  bool rle = false;
  Bits cond;
  switch (config.cond_coding) {
    case CondCoding::Raw:
      cond = serialize_condition_raw(m);
      break;
    case CondCoding::Rle:
      cond = serialize_condition_rle(m);
      rle = true;
      break;
    case CondCoding::Auto: {
      Bits raw = serialize_condition_raw(m);
      Bits packed = serialize_condition_rle(m);
      rle = packed.size() < raw.size();
      cond = rle ? std::move(packed) : std::move(raw);
      break;
    }
  }

  BitWriter header;
  header.push(kPacketVersion, 4);
  header.push(static_cast<std::uint64_t>(config.label_classes - 1), 4);  // K-1: 1..16
  header.push(static_cast<std::uint64_t>(h), 16);
  header.push(static_cast<std::uint64_t>(w), 16);
  header.push(bank_size, 32);
  header.push(cond.size(), 32);
  header.push(rle ? 1 : 0, 1);

  Bits strong = std::move(header.bits);
  strong.insert(strong.end(), cond.begin(), cond.end());
  Bits out = repeat_code(strong, config.strong_rep);

  BitWriter idx;
  idx.push(index, index_bit_width(bank_size));
  Bits weak = repeat_code(idx.bits, config.weak_rep);
  out.insert(out.end(), weak.begin(), weak.end());
  return out;
}

DecodedPacket decode_packet(const Bits& bits, const CodecConfig& config) {
  config.validate();
  const std::size_t coded_header = static_cast<std::size_t>(kHeaderBits) *
                                   config.strong_rep;
  if (bits.size() < coded_header)
    throw PacketLostError("decode_packet: too short for the coded header");

  DecodedPacket out;
  Bits header_bits = majority_decode(bits, 0, kHeaderBits, config.strong_rep,
                                     &out.diagnostics.strong_groups_corrected);
  BitReader hr{header_bits};
  const auto version = static_cast<std::uint32_t>(hr.pull(4));
  const int classes = static_cast<int>(hr.pull(4)) + 1;
  const int h = static_cast<int>(hr.pull(16));
  const int w = static_cast<int>(hr.pull(16));
  const auto bank_size = static_cast<std::uint32_t>(hr.pull(32));
  const auto cond_bits = static_cast<std::uint64_t>(hr.pull(32));
  const bool rle = hr.pull(1) != 0;
  out.diagnostics.rle_mode = rle;
  out.bank_size = bank_size;

  if (version != kPacketVersion)
    throw PacketLostError("decode_packet: unrecoverable header (version " +
                          std::to_string(version) + ")");
  if (classes != config.label_classes)
    throw PacketLostError("decode_packet: unrecoverable header (class count " +
                          std::to_string(classes) + ")");
  if (h < 1 || w < 1)
    throw PacketLostError("decode_packet: unrecoverable header (degenerate dims)");
  if (bank_size == 0)
    throw PacketLostError("decode_packet: unrecoverable header (bank size 0)");
  const std::uint64_t plane = static_cast<std::uint64_t>(h) * w;
  const std::uint64_t rle_cap =
      plane * (4 + run_length_field_bits(w)) + plane;  // all runs of length 1
  const std::uint64_t expected_raw = plane * 5;
  if (rle ? cond_bits > rle_cap : cond_bits != expected_raw)
    throw PacketLostError("decode_packet: unrecoverable header (payload length)");

  const int idx_bits = index_bit_width(bank_size);
  const std::uint64_t need = static_cast<std::uint64_t>(config.strong_rep) *
                                 (kHeaderBits + cond_bits) +
                             static_cast<std::uint64_t>(config.weak_rep) * idx_bits;
  if (bits.size() < need)
    throw PacketLostError("decode_packet: bit stream shorter than the coded payload");

  Bits cond = majority_decode(bits, coded_header, cond_bits, config.strong_rep,
                              &out.diagnostics.strong_groups_corrected);
  BitReader cr{cond};
  out.condition.segmentation = LabelMap(h, w);
  if (rle) {
    for (int y = 0; y < h; ++y) {
      int x = 0;
      while (x < w) {
        if (cr.exhausted(4u + run_length_field_bits(w)))
          throw PacketLostError("decode_packet: run-length stream truncated");
        auto label = static_cast<std::uint8_t>(cr.pull(4));
        int run = static_cast<int>(cr.pull(run_length_field_bits(w)));
        if (run < 1 || x + run > w)
          throw PacketLostError("decode_packet: run-length stream invalid");
        for (int i = 0; i < run; ++i)
          out.condition.segmentation.at(y, x + i) =
              static_cast<std::uint8_t>(label % config.label_classes);
        x += run;
      }
    }
  } else {
    for (std::uint64_t i = 0; i < plane; ++i)
      out.condition.segmentation.v[i] =
          static_cast<std::uint8_t>(cr.pull(4) % config.label_classes);
  }
  if (cr.exhausted(plane))
    throw PacketLostError("decode_packet: edge bitmap truncated");
  out.condition.edges = BitMap(h, w);
  for (std::uint64_t i = 0; i < plane; ++i)
    out.condition.edges.v[i] = static_cast<std::uint8_t>(cr.pull(1));

  const std::size_t idx_offset =
      coded_header + static_cast<std::size_t>(cond_bits) * config.strong_rep;
  Bits idx = majority_decode(bits, idx_offset, idx_bits, config.weak_rep,
                             &out.diagnostics.weak_groups_corrected);
  BitReader ir{idx};
  auto raw_index = static_cast<std::uint32_t>(ir.pull(idx_bits));
  out.diagnostics.index_wrapped = raw_index >= bank_size;
  out.index = raw_index % bank_size;
  return out;
}

Bits transmit(const Bits& bits, const ChannelModel& channel) {
  if (channel.crossover_p < 0.0 || channel.crossover_p > 0.5)
    throw ConfigError("transmit: crossover probability must be in [0, 0.5]");
  Bits out = bits;
  if (channel.crossover_p == 0.0) return out;
  Rng rng(channel.seed);
  for (auto& b : out)
    if (rng.next_bernoulli(channel.crossover_p)) b ^= 1;
  return out;
}

PayloadReport payload_report(const SemanticCondition& m, std::uint32_t bank_size,
                             int image_channels, const CodecConfig& config) {
  config.validate();
  if (bank_size == 0) throw ConfigError("payload_report: bank size must be >= 1");
  PayloadReport r;
  const std::int64_t d =
      static_cast<std::int64_t>(image_channels) * m.segmentation.h * m.segmentation.w;
  r.raw_latent_bits = d * 32;
  switch (config.cond_coding) {
    case CondCoding::Raw:
      r.condition_bits = static_cast<std::int64_t>(serialize_condition_raw(m).size());
      break;
    case CondCoding::Rle:
      r.condition_bits = static_cast<std::int64_t>(serialize_condition_rle(m).size());
      break;
    case CondCoding::Auto:
      r.condition_bits = static_cast<std::int64_t>(
          std::min(serialize_condition_raw(m).size(), serialize_condition_rle(m).size()));
      break;
  }
  r.index_bits = index_bit_width(bank_size);
  r.coded_condition_bits = static_cast<std::int64_t>(config.strong_rep) *
                           (kHeaderBits + r.condition_bits);
  r.coded_index_bits = static_cast<std::int64_t>(config.weak_rep) * r.index_bits;
  r.coded_total_bits = r.coded_condition_bits + r.coded_index_bits;
  r.raw_to_index_ratio = r.index_bits > 0
                             ? static_cast<double>(r.raw_latent_bits) / r.index_bits
                             : static_cast<double>(r.raw_latent_bits);
  return r;
}

std::vector<std::uint8_t> bits_to_bytes(const Bits& bits) {
  std::vector<std::uint8_t> bytes((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) bytes[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  return bytes;
}

Bits bytes_to_bits(const std::vector<std::uint8_t>& bytes) {
  Bits bits(bytes.size() * 8);
  for (std::size_t i = 0; i < bits.size(); ++i)
    bits[i] = (bytes[i / 8] >> (7 - i % 8)) & 1;
  return bits;
}

}  // namespace nbdiff
