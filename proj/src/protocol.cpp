#include "netoas/protocol.hpp"

#include "netoas/session.hpp"

namespace netoas {

namespace {

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t at, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(in[at + i]) << (8 * i);
    return v;
}

}  // namespace

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
    if (frame.width() > 0xFFFF || frame.height() > 0xFFFF || frame.seq() > 0xFFFFFFFFull)
        throw ContractViolation("frame does not fit the wire header");
    std::vector<std::uint8_t> out;
    out.reserve(kFrameHeaderSize + frame.pixels().size());
    put_le(out, kFrameMagic, 2);
    put_le(out, frame.seq(), 4);
    put_le(out, static_cast<std::uint64_t>(frame.width()), 2);
    put_le(out, static_cast<std::uint64_t>(frame.height()), 2);
    out.push_back(kFormatRgb8);
    out.insert(out.end(), frame.pixels().begin(), frame.pixels().end());
    return out;
}

Frame decode_frame(std::span<const std::uint8_t> message) {
    if (message.size() < kFrameHeaderSize) throw FormatError("frame message shorter than its header");
    const auto magic = static_cast<std::uint16_t>(get_le(message, 0, 2));
    if (magic != kFrameMagic && magic != 0x454E) throw FormatError("bad frame magic");
    const auto seq = get_le(message, 2, 4);
    const int w = static_cast<int>(get_le(message, 6, 2));
    const int h = static_cast<int>(get_le(message, 8, 2));
    if (message[10] != kFormatRgb8) throw FormatError("unsupported pixel format " + std::to_string(message[10]));
    if (w < Frame::kMinSide || h < Frame::kMinSide) throw FormatError("frame smaller than 16x16");
    const std::size_t need = static_cast<std::size_t>(w) * h * 3;
    if (message.size() - kFrameHeaderSize != need)
        throw FormatError("payload is " + std::to_string(message.size() - kFrameHeaderSize) + " bytes, expected " +
                          std::to_string(need));
    std::vector<std::uint8_t> px(message.begin() + kFrameHeaderSize, message.end());
    return Frame(w, h, std::move(px), seq, 0);
}

ClientCommand parse_client_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("client message is not JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) throw FormatError("client message lacks a type");
    ClientCommand c;
    const std::string type = j["type"];
    if (type == "start") {
        c.type = ClientCommand::Type::Start;
        c.user = j.value("user", "");
        if (j.contains("level")) {
            const auto& lv = j["level"];
            try {
                c.level = Level::parse(lv.is_string() ? lv.get<std::string>() : std::to_string(lv.get<int>()));
            } catch (const ContractViolation& e) {
                throw FormatError(e.what());
            }
        }
    } else if (type == "end") {
        c.type = ClientCommand::Type::End;
    } else {
        throw FormatError("unknown client message type '" + type + "'");
    }
    return c;
}

std::string state_message(std::uint64_t seq, const ActivityState& s) {
    nlohmann::json j{{"type", "state"}, {"seq", seq}, {"status", to_string(s.status)}};
    j["ring_id"] = s.ring_id ? nlohmann::json(*s.ring_id) : nlohmann::json(nullptr);
    j["led_id"] = s.led_id ? nlohmann::json(*s.led_id) : nlohmann::json(nullptr);
    return j.dump();
}

std::string warning_message(const FeedbackMessage& m) {
    return nlohmann::json{{"type", "warning"},
                          {"kind", to_string(m.kind)},
                          {"intensity", m.intensity},
                          {"seq", m.frame_seq},
                          {"event_seq", m.event_seq},
                          {"text", m.text}}
        .dump();
}

std::string target_message(int led_id) { return nlohmann::json{{"type", "target"}, {"led_id", led_id}}.dump(); }

std::string synopsis_message(const SessionSynopsis& s) {
    nlohmann::json j = s.report;
    j["type"] = "synopsis";
    j["text"] = s.text;
    return j.dump();
}

std::string error_message(const std::string& what) { return nlohmann::json{{"type", "error"}, {"message", what}}.dump(); }

}  // namespace netoas
