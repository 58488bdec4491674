#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "netoas/imaging.hpp"

namespace netoas {

Frame read_ppm(const std::filesystem::path& path);
void write_ppm(const Frame& frame, const std::filesystem::path& path);

// Pull-style stream of frames. next() returns nullopt at end of stream.
class FrameSource {
public:
    virtual ~FrameSource() = default;
    virtual std::optional<Frame> next() = 0;
};

// Directory of zero-padded numbered PPM files, played in lexical order.
class PpmDirectorySource : public FrameSource {
public:
    PpmDirectorySource(const std::filesystem::path& dir, int fps);
    std::optional<Frame> next() override;
    std::size_t size() const { return files_.size(); }

private:
    std::vector<std::filesystem::path> files_;
    std::size_t index_ = 0;
    int fps_;
};

// YUV4MPEG2 stream, 4:2:0 only, converted to RGB with BT.601 (studio swing).
class Y4mSource : public FrameSource {
public:
    explicit Y4mSource(const std::filesystem::path& path);
    std::optional<Frame> next() override;
    int width() const { return width_; }
    int height() const { return height_; }
    double fps() const { return fps_; }

private:
    std::ifstream in_;
    int width_ = 0;
    int height_ = 0;
    double fps_ = 25.0;
    std::uint64_t seq_ = 0;
};

void write_y4m(const std::vector<Frame>& frames, int fps, const std::filesystem::path& path);

// Opens a directory of PPMs or a .y4m file.
std::unique_ptr<FrameSource> open_frame_source(const std::filesystem::path& input, int fps);

}  // namespace netoas
