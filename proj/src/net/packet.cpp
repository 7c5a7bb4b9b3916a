#include "hfl/net/packet.hpp"

#include "hfl/bytes.hpp"
#include "hfl/errors.hpp"

namespace hfl::net {

std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> data) {
  std::uint16_t crc = 0xFFFF;
  for (std::uint8_t byte : data) {
    crc ^= static_cast<std::uint16_t>(byte << 8);
    for (int bit = 0; bit < 8; ++bit) {
      crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021)
                           : static_cast<std::uint16_t>(crc << 1);
    }
  }
  return crc;
}

std::vector<std::uint8_t> encode_packet(const StatePacket& packet) {
  if (packet.joints.size() > kMaxJointsPerFrame) {
    throw std::invalid_argument("encode_packet: too many joints for one frame");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kFrameOverhead + kBytesPerJoint * packet.joints.size());
  bytes::put_u8(out, kFrameHeader);
  bytes::put_u8(out, packet.board_id);
  bytes::put_u32(out, packet.cycle);
  bytes::put_u8(out, static_cast<std::uint8_t>(packet.joints.size()));
  for (const auto& j : packet.joints) {
    bytes::put_u8(out, j.id);
    bytes::put_f32(out, j.q);
    bytes::put_f32(out, j.v);
  }
  bytes::put_u16(out, crc16_ccitt_false(out));
  return out;
}

std::optional<std::size_t> expected_frame_length(std::span<const std::uint8_t> prefix) {
  if (prefix.size() < 7) return std::nullopt;
  return kFrameOverhead + kBytesPerJoint * prefix[6];
}

StatePacket decode_packet(std::span<const std::uint8_t> frame) {
  using Kind = CodecError::Kind;
  if (frame.size() < kFrameOverhead) {
    throw CodecError(Kind::kTruncated, "frame shorter than the 9-byte minimum");
  }
  const auto body = frame.first(frame.size() - 2);
  const std::uint16_t stored = bytes::get_le<std::uint16_t>(frame, frame.size() - 2);
  if (crc16_ccitt_false(body) != stored) throw CodecError(Kind::kBadCrc, "CRC mismatch");
  if (frame[0] != kFrameHeader) throw CodecError(Kind::kBadHeader, "bad frame header");

  const std::size_t expected = *expected_frame_length(frame);
  if (frame.size() < expected) {
    throw CodecError(Kind::kTruncated, "frame shorter than its declared joint count");
  }
  if (frame.size() > expected) {
    throw CodecError(Kind::kLengthMismatch, "frame longer than its declared joint count");
  }

  bytes::Reader rd(body);
  StatePacket p;
  rd.u8();
  p.board_id = rd.u8();
  p.cycle = rd.u32();
  const std::uint8_t count = rd.u8();
  p.joints.resize(count);
  for (auto& j : p.joints) {
    j.id = rd.u8();
    j.q = rd.f32();
    j.v = rd.f32();
  }
  return p;
}

std::vector<std::uint8_t> encode_law_record(const LinearFeedbackLaw& law) {
  std::vector<std::uint8_t> out;
  out.reserve(4 + 4 * static_cast<std::size_t>(law.gain.size() + law.offset.size()));
  bytes::put_u32(out, law.sequence);
  for (Eigen::Index r = 0; r < law.gain.rows(); ++r) {
    for (Eigen::Index c = 0; c < law.gain.cols(); ++c) {
      bytes::put_f32(out, static_cast<float>(law.gain(r, c)));
    }
  }
  for (Eigen::Index r = 0; r < law.offset.size(); ++r) {
    bytes::put_f32(out, static_cast<float>(law.offset(r)));
  }
  return out;
}

LinearFeedbackLaw decode_law_record(std::span<const std::uint8_t> record, int dof) {
  const std::size_t expected = 4 + 4 * static_cast<std::size_t>(2 * dof * dof + dof);
  if (record.size() != expected) {
    throw DimensionError("law record: expected " + std::to_string(expected) + " bytes for " +
                         std::to_string(dof) + " joints, got " + std::to_string(record.size()));
  }
  bytes::Reader rd(record);
  LinearFeedbackLaw law;
  law.sequence = rd.u32();
  law.gain.resize(dof, 2 * dof);
  law.offset.resize(dof);
  for (int r = 0; r < dof; ++r) {
    for (int c = 0; c < 2 * dof; ++c) law.gain(r, c) = rd.f32();
  }
  for (int r = 0; r < dof; ++r) law.offset(r) = rd.f32();
  return law;
}

LinearFeedbackLaw quantize_law(const LinearFeedbackLaw& law) {
  LinearFeedbackLaw out = decode_law_record(encode_law_record(law), law.dof());
  out.anchor = law.anchor;
  out.time = law.time;
  return out;
}

}  // namespace hfl::net
