#include "biphoton/io/stack_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "biphoton/core/errors.hpp"

namespace biphoton::io {

using core::IoError;
using core::Plane;
using core::Stack;
using core::ValidationError;

namespace {

constexpr char kMagic[4] = {'B', 'P', 'H', 'S'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderSize = 36;

struct Header {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint32_t n_frames = 0;
    StackDtype dtype = StackDtype::U16;
    std::uint8_t plane = 0;
    double pixel_pitch = 0.0;
};

void put_u32(char* dst, std::uint32_t v) { std::memcpy(dst, &v, 4); }

std::size_t sample_size(StackDtype dtype) { return dtype == StackDtype::U16 ? 2 : 4; }

} // namespace

void write_stack(const Stack& stack, const std::filesystem::path& path, StackDtype dtype,
                 const nlohmann::json* sidecar) {
    stack.validate();
    if (stack.frames.empty()) throw ValidationError("write_stack: empty stack");
    if (dtype != StackDtype::U16 && dtype != StackDtype::F32)
        throw ValidationError("write_stack: unsupported dtype");

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("write_stack: cannot create " + path.string());

    char header[kHeaderSize] = {};
    std::memcpy(header, kMagic, 4);
    put_u32(header + 4, kVersion);
    put_u32(header + 8, static_cast<std::uint32_t>(stack.width()));
    put_u32(header + 12, static_cast<std::uint32_t>(stack.height()));
    put_u32(header + 16, static_cast<std::uint32_t>(stack.size()));
    header[20] = static_cast<char>(dtype);
    header[21] = static_cast<char>(stack.plane());
    // bytes 22..27 stay zero (pad)
    std::memcpy(header + 28, &stack.pixel_pitch, 8);
    out.write(header, kHeaderSize);

    const std::size_t n = stack.frames.front().values.size();
    if (dtype == StackDtype::U16) {
        std::vector<std::uint16_t> buf(n);
        for (const core::Frame& f : stack.frames) {
            for (std::size_t i = 0; i < n; ++i) {
                const double v = std::clamp(std::round(f.values[i]), 0.0, 65535.0);
                buf[i] = static_cast<std::uint16_t>(v);
            }
            out.write(reinterpret_cast<const char*>(buf.data()),
                      static_cast<std::streamsize>(n * 2));
        }
    } else {
        std::vector<float> buf(n);
        for (const core::Frame& f : stack.frames) {
            for (std::size_t i = 0; i < n; ++i) buf[i] = static_cast<float>(f.values[i]);
            out.write(reinterpret_cast<const char*>(buf.data()),
                      static_cast<std::streamsize>(n * 4));
        }
    }
    if (!out) throw IoError("write_stack: write failed for " + path.string());
    out.close();

    if (sidecar) {
        const std::filesystem::path meta = path.string() + ".meta.json";
        std::ofstream ms(meta);
        if (!ms) throw IoError("write_stack: cannot create " + meta.string());
        ms << sidecar->dump(2) << "\n";
        if (!ms) throw IoError("write_stack: write failed for " + meta.string());
    }
}

namespace {

Header read_header(std::ifstream& in, const std::filesystem::path& path) {
    char header[kHeaderSize];
    in.read(header, kHeaderSize);
    if (in.gcount() != static_cast<std::streamsize>(kHeaderSize))
        throw IoError("read_stack: truncated header in " + path.string());
    if (std::memcmp(header, kMagic, 4) != 0)
        throw IoError("read_stack: bad magic in " + path.string());
    std::uint32_t version;
    std::memcpy(&version, header + 4, 4);
    if (version != kVersion)
        throw IoError("read_stack: unsupported version " + std::to_string(version) + " in " +
                      path.string());
    Header h;
    std::memcpy(&h.width, header + 8, 4);
    std::memcpy(&h.height, header + 12, 4);
    std::memcpy(&h.n_frames, header + 16, 4);
    const auto dtype_raw = static_cast<std::uint8_t>(header[20]);
    if (dtype_raw > 1)
        throw IoError("read_stack: dtype out of range (" + std::to_string(dtype_raw) + ") in " +
                      path.string());
    h.dtype = static_cast<StackDtype>(dtype_raw);
    const auto plane_raw = static_cast<std::uint8_t>(header[21]);
    if (plane_raw > 1)
        throw IoError("read_stack: plane out of range (" + std::to_string(plane_raw) + ") in " +
                      path.string());
    h.plane = plane_raw;
    std::memcpy(&h.pixel_pitch, header + 28, 8);
    if (h.width < 2 || h.height < 2 || h.n_frames < 1)
        throw IoError("read_stack: invalid geometry in " + path.string());
    return h;
}

void decode_frame(std::ifstream& in, const Header& h, std::vector<double>& values,
                  const std::filesystem::path& path) {
    const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
    const std::size_t bytes = n * sample_size(h.dtype);
    std::vector<char> buf(bytes);
    in.read(buf.data(), static_cast<std::streamsize>(bytes));
    if (in.gcount() != static_cast<std::streamsize>(bytes))
        throw IoError("read_stack: truncated payload in " + path.string());
    values.resize(n);
    if (h.dtype == StackDtype::U16) {
        const auto* p = reinterpret_cast<const std::uint16_t*>(buf.data());
        for (std::size_t i = 0; i < n; ++i) values[i] = static_cast<double>(p[i]);
    } else {
        const auto* p = reinterpret_cast<const float*>(buf.data());
        for (std::size_t i = 0; i < n; ++i) values[i] = static_cast<double>(p[i]);
    }
}

} // namespace

ReadStackResult read_stack(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_stack: cannot open " + path.string());
    const Header h = read_header(in, path);

    ReadStackResult result;
    result.dtype = h.dtype;
    result.stack.pixel_pitch = h.pixel_pitch;
    result.stack.frames.resize(h.n_frames);
    for (std::uint32_t f = 0; f < h.n_frames; ++f) {
        core::Frame& frame = result.stack.frames[f];
        frame.width = static_cast<int>(h.width);
        frame.height = static_cast<int>(h.height);
        frame.plane = static_cast<Plane>(h.plane);
        decode_frame(in, h, frame.values, path);
    }

    const std::filesystem::path meta = path.string() + ".meta.json";
    if (std::filesystem::exists(meta)) {
        std::ifstream ms(meta);
        if (!ms) throw IoError("read_stack: cannot open sidecar " + meta.string());
        try {
            result.sidecar = nlohmann::json::parse(ms);
        } catch (const nlohmann::json::exception& e) {
            throw IoError("read_stack: bad sidecar " + meta.string() + ": " + e.what());
        }
    }
    return result;
}

StackFileSource::StackFileSource(const std::filesystem::path& path) : path_(path) {
    file_.open(path, std::ios::binary);
    if (!file_) throw IoError("StackFileSource: cannot open " + path.string());
    const Header h = read_header(file_, path);
    width_ = static_cast<int>(h.width);
    height_ = static_cast<int>(h.height);
    n_frames_ = h.n_frames;
    plane_ = static_cast<Plane>(h.plane);
    dtype_ = h.dtype;
    pixel_pitch_ = h.pixel_pitch;
    payload_offset_ = static_cast<std::streamoff>(kHeaderSize);
}

void StackFileSource::reset() {
    file_.clear();
    file_.seekg(payload_offset_);
    next_frame_ = 0;
}

bool StackFileSource::next(core::Frame& out) {
    if (next_frame_ >= n_frames_) return false;
    Header h;
    h.width = static_cast<std::uint32_t>(width_);
    h.height = static_cast<std::uint32_t>(height_);
    h.dtype = dtype_;
    out.width = width_;
    out.height = height_;
    out.plane = plane_;
    decode_frame(file_, h, out.values, path_);
    ++next_frame_;
    return true;
}

} // namespace biphoton::io
