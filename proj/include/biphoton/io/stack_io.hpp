#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "biphoton/corr/correlator.hpp"
#include "biphoton/core/types.hpp"

namespace biphoton::io {

/// On-disk pixel encodings of the "BPHS" stack container.
enum class StackDtype : std::uint8_t { U16 = 0, F32 = 1 };

/// Write a stack in the BPHS v1 layout (little-endian): magic "BPHS",
/// u32 version, u32 width, u32 height, u32 n_frames, u8 dtype, u8 plane,
/// 6 pad bytes, f64 pixel_pitch_m, then frames row-major, frame-major.
/// U16 values are clamped to [0, 65535] and rounded. When `sidecar` is given
/// it is written to <path>.meta.json alongside.
void write_stack(const core::Stack& stack, const std::filesystem::path& path, StackDtype dtype,
                 const nlohmann::json* sidecar = nullptr);

struct ReadStackResult {
    core::Stack stack;  // calibration left at defaults; callers override from config
    StackDtype dtype = StackDtype::U16;
    std::optional<nlohmann::json> sidecar;  // contents of <path>.meta.json if present
};

ReadStackResult read_stack(const std::filesystem::path& path);

/// Streaming frame source over a BPHS file; frames are decoded one at a time
/// so stacks larger than memory can be correlated.
class StackFileSource final : public corr::FrameSource {
public:
    explicit StackFileSource(const std::filesystem::path& path);

    std::size_t frame_count() const override { return n_frames_; }
    int width() const override { return width_; }
    int height() const override { return height_; }
    core::Plane plane() const override { return plane_; }
    void reset() override;
    bool next(core::Frame& out) override;

    double pixel_pitch() const { return pixel_pitch_; }

private:
    std::filesystem::path path_;
    std::ifstream file_;
    std::size_t n_frames_ = 0;
    int width_ = 0;
    int height_ = 0;
    core::Plane plane_ = core::Plane::Image;
    StackDtype dtype_ = StackDtype::U16;
    double pixel_pitch_ = 0.0;
    std::size_t next_frame_ = 0;
    std::streamoff payload_offset_ = 0;
};

} // namespace biphoton::io
