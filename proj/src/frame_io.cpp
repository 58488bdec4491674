#include "netoas/frame_io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace netoas {

namespace {

void skip_ws_and_comments(std::istream& in) {
    while (true) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}

int read_header_int(std::istream& in) {
    skip_ws_and_comments(in);
    int v = -1;
    if (!(in >> v)) throw FormatError("malformed PPM header");
    return v;
}

std::uint8_t clamp_u8(int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); }

}  // namespace

Frame read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (magic[0] != 'P' || magic[1] != '6') throw FormatError(path.string() + " is not a binary PPM (P6)");
    const int w = read_header_int(in);
    const int h = read_header_int(in);
    const int maxval = read_header_int(in);
    if (maxval != 255) throw FormatError("only maxval 255 PPM files are supported");
    in.get();  // single whitespace before raster
    std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * 3);
    in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
    if (in.gcount() != static_cast<std::streamsize>(px.size())) throw FormatError("truncated PPM " + path.string());
    return Frame(w, h, std::move(px));
}

void write_ppm(const Frame& frame, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    out << "P6\n" << frame.width() << " " << frame.height() << "\n255\n";
    const auto px = frame.pixels();
    out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

PpmDirectorySource::PpmDirectorySource(const std::filesystem::path& dir, int fps) : fps_(fps) {
    if (!std::filesystem::is_directory(dir)) throw FormatError(dir.string() + " is not a directory");
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".ppm" &&
            std::isdigit(static_cast<unsigned char>(entry.path().filename().string().front())))
            files_.push_back(entry.path());
    }
    std::sort(files_.begin(), files_.end());
}

std::optional<Frame> PpmDirectorySource::next() {
    if (index_ >= files_.size()) return std::nullopt;
    Frame f = read_ppm(files_[index_]);
    const std::uint64_t seq = index_ + 1;
    f.set_seq(seq);
    f.set_timestamp_ms(static_cast<std::int64_t>((seq - 1) * 1000 / fps_));
    ++index_;
    return f;
}

Y4mSource::Y4mSource(const std::filesystem::path& path) : in_(path, std::ios::binary) {
    if (!in_) throw FormatError("cannot open " + path.string());
    std::string header;
    std::getline(in_, header);
    std::istringstream hs(header);
    std::string tok;
    hs >> tok;
    if (tok != "YUV4MPEG2") throw FormatError(path.string() + " is not a YUV4MPEG2 stream");
    while (hs >> tok) {
        switch (tok[0]) {
            case 'W': width_ = std::stoi(tok.substr(1)); break;
            case 'H': height_ = std::stoi(tok.substr(1)); break;
            case 'F': {
                const auto colon = tok.find(':');
                if (colon != std::string::npos) {
                    const double num = std::stod(tok.substr(1, colon - 1));
                    const double den = std::stod(tok.substr(colon + 1));
                    if (den > 0) fps_ = num / den;
                }
                break;
            }
            case 'C':
                if (tok.rfind("C420", 0) != 0) throw FormatError("only 4:2:0 Y4M is supported, got " + tok);
                break;
            case 'I':
                if (tok != "Ip" && tok != "I?") throw FormatError("interlaced Y4M is not supported");
                break;
            default: break;
        }
    }
    if (width_ < Frame::kMinSide || height_ < Frame::kMinSide) throw FormatError("bad Y4M dimensions");
}

std::optional<Frame> Y4mSource::next() {
    std::string line;
    if (!std::getline(in_, line)) return std::nullopt;
    if (line.rfind("FRAME", 0) != 0) throw FormatError("expected FRAME marker in Y4M stream");
    const int cw = (width_ + 1) / 2, ch = (height_ + 1) / 2;
    std::vector<std::uint8_t> y(static_cast<std::size_t>(width_) * height_);
    std::vector<std::uint8_t> u(static_cast<std::size_t>(cw) * ch), v(u.size());
    in_.read(reinterpret_cast<char*>(y.data()), static_cast<std::streamsize>(y.size()));
    in_.read(reinterpret_cast<char*>(u.data()), static_cast<std::streamsize>(u.size()));
    in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size()));
    if (!in_) throw FormatError("truncated Y4M frame");
    ++seq_;
    Frame f(width_, height_, seq_, static_cast<std::int64_t>(std::llround((seq_ - 1) * 1000.0 / fps_)));
    for (int yy = 0; yy < height_; ++yy) {
        for (int xx = 0; xx < width_; ++xx) {
            const int c = 298 * (y[static_cast<std::size_t>(yy) * width_ + xx] - 16);
            const std::size_t ci = static_cast<std::size_t>(yy / 2) * cw + xx / 2;
            const int d = u[ci] - 128;
            const int e = v[ci] - 128;
            std::uint8_t* p = f.at(xx, yy);
            p[0] = clamp_u8((c + 409 * e + 128) >> 8);
            p[1] = clamp_u8((c - 100 * d - 208 * e + 128) >> 8);
            p[2] = clamp_u8((c + 516 * d + 128) >> 8);
        }
    }
    return f;
}

void write_y4m(const std::vector<Frame>& frames, int fps, const std::filesystem::path& path) {
    if (frames.empty()) throw ContractViolation("write_y4m needs at least one frame");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path.string());
    const int w = frames.front().width(), h = frames.front().height();
    out << "YUV4MPEG2 W" << w << " H" << h << " F" << fps << ":1 Ip A1:1 C420jpeg\n";
    const int cw = (w + 1) / 2, ch = (h + 1) / 2;
    for (const auto& f : frames) {
        std::vector<std::uint8_t> y(static_cast<std::size_t>(w) * h), u(static_cast<std::size_t>(cw) * ch),
            v(u.size());
        std::vector<int> us(u.size(), 0), vs(u.size(), 0), cnt(u.size(), 0);
        for (int yy = 0; yy < h; ++yy) {
            for (int xx = 0; xx < w; ++xx) {
                const std::uint8_t* p = f.at(xx, yy);
                const int r = p[0], g = p[1], b = p[2];
                y[static_cast<std::size_t>(yy) * w + xx] = clamp_u8(((66 * r + 129 * g + 25 * b + 128) >> 8) + 16);
                const std::size_t ci = static_cast<std::size_t>(yy / 2) * cw + xx / 2;
                us[ci] += ((-38 * r - 74 * g + 112 * b + 128) >> 8) + 128;
                vs[ci] += ((112 * r - 94 * g - 18 * b + 128) >> 8) + 128;
                ++cnt[ci];
            }
        }
        for (std::size_t i = 0; i < u.size(); ++i) {
            u[i] = clamp_u8((us[i] + cnt[i] / 2) / cnt[i]);
            v[i] = clamp_u8((vs[i] + cnt[i] / 2) / cnt[i]);
        }
        out << "FRAME\n";
        out.write(reinterpret_cast<const char*>(y.data()), static_cast<std::streamsize>(y.size()));
        out.write(reinterpret_cast<const char*>(u.data()), static_cast<std::streamsize>(u.size()));
        out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size()));
    }
}

std::unique_ptr<FrameSource> open_frame_source(const std::filesystem::path& input, int fps) {
    if (std::filesystem::is_directory(input)) return std::make_unique<PpmDirectorySource>(input, fps);
    if (input.extension() == ".y4m") return std::make_unique<Y4mSource>(input);
    throw FormatError("unsupported input " + input.string() + " (expected a PPM directory or .y4m file)");
}

}  // namespace netoas
