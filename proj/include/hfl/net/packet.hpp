#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hfl/control/linearize.hpp"

namespace hfl::net {

// State frame layout (little-endian):
//
//   offset  size  field
//   0       1     header, always 0xA5
//   1       1     board id
//   2       4     cycle counter (u32)
//   6       1     joint count k
//   7       9k    per joint: id (u8), q (f32), v (f32)
//   7+9k    2     CRC-16/CCITT-FALSE over bytes [0, 7+9k)
inline constexpr std::uint8_t kFrameHeader = 0xA5;
inline constexpr std::size_t kFrameOverhead = 9;
inline constexpr std::size_t kBytesPerJoint = 9;
inline constexpr std::size_t kMaxJointsPerFrame = 255;
inline constexpr std::size_t kMaxFrameLength = kFrameOverhead + kBytesPerJoint * kMaxJointsPerFrame;

/// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor.
std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> data);

struct JointSample {
  std::uint8_t id = 0;
  float q = 0.0f;  // rad
  float v = 0.0f;  // rad/s
  friend bool operator==(const JointSample&, const JointSample&) = default;
};

struct StatePacket {
  std::uint8_t board_id = 0;
  std::uint32_t cycle = 0;
  std::vector<JointSample> joints;
  friend bool operator==(const StatePacket&, const StatePacket&) = default;
};

class CodecError : public std::runtime_error {
 public:
  enum class Kind { kTruncated, kBadCrc, kBadHeader, kLengthMismatch };

  CodecError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Throws std::invalid_argument for more than 255 joints.
std::vector<std::uint8_t> encode_packet(const StatePacket& packet);

/// Decodes one complete frame. Checks run in this order: minimum length
/// (kTruncated), CRC over all but the last two bytes (kBadCrc), header
/// (kBadHeader), declared joint count against the frame size (kTruncated when
/// short, kLengthMismatch when long). Never reads out of bounds.
StatePacket decode_packet(std::span<const std::uint8_t> frame);

/// Frame length announced by a partial buffer, once the joint count byte has
/// arrived. For stream receivers.
std::optional<std::size_t> expected_frame_length(std::span<const std::uint8_t> prefix);

// Law-update record: sequence (u32), then A row-major and b, all f32, LE.
std::vector<std::uint8_t> encode_law_record(const LinearFeedbackLaw& law);
/// The anchor and time are not transmitted; the decoded law leaves them empty.
LinearFeedbackLaw decode_law_record(std::span<const std::uint8_t> record, int dof);

/// Law as it arrives after one trip through the f32 record.
LinearFeedbackLaw quantize_law(const LinearFeedbackLaw& law);

}  // namespace hfl::net
