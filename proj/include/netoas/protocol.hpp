#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "netoas/activity_fsm.hpp"
#include "netoas/assessment.hpp"
#include "netoas/imaging.hpp"
#include "netoas/scenegen.hpp"

namespace netoas {

struct FeedbackMessage;

// Binary FRAME message: magic u16 | seq u32 | width u16 | height u16 | format u8 | payload, little-endian.
inline constexpr std::uint16_t kFrameMagic = 0x4E45;
inline constexpr std::size_t kFrameHeaderSize = 11;
inline constexpr std::uint8_t kFormatRgb8 = 1;

std::vector<std::uint8_t> encode_frame(const Frame& frame);
// The magic is accepted in either byte order ("EN" or "NE" on the wire); everything else is little-endian.
Frame decode_frame(std::span<const std::uint8_t> message);

struct ClientCommand {
    enum class Type { Start, End };
    Type type = Type::Start;
    std::string user;
    Level level;
};

ClientCommand parse_client_text(const std::string& text);

std::string state_message(std::uint64_t seq, const ActivityState& s);
std::string warning_message(const FeedbackMessage& m);
std::string target_message(int led_id);
std::string synopsis_message(const SessionSynopsis& s);
std::string error_message(const std::string& what);

}  // namespace netoas
