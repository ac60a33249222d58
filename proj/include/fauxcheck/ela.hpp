#pragma once

// JPEG error level analysis: re-save at a fixed quality and measure how far
// each pixel moves.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace fauxcheck::evidence {

inline constexpr int kDefaultElaQuality = 95;

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // interleaved RGB, row-major

    [[nodiscard]] std::size_t index(int x, int y) const {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
    }
};

// Grayscale and YCbCr/RGB sources decode to RGB; CMYK and other color spaces
// are rejected with DataError.
[[nodiscard]] RgbImage decode_jpeg(std::span<const std::uint8_t> bytes);

// Codec settings are pinned: libjpeg defaults, islow DCT, no optimized
// Huffman tables, 4:2:0 chroma subsampling.
[[nodiscard]] std::vector<std::uint8_t> encode_jpeg(const RgbImage& image, int quality);

struct ElaResult {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> difference;  // |decoded - resaved| per channel, RGB interleaved
    double mean = 0.0;
    std::uint8_t max = 0;

    // Mean difference over the pixel rectangle [x0, x1) x [y0, y1).
    [[nodiscard]] double region_mean(int x0, int y0, int x1, int y1) const;
};

[[nodiscard]] ElaResult compute_ela(std::span<const std::uint8_t> jpeg_bytes, int quality = kDefaultElaQuality);

// Writes the difference map as an 8-bit RGB PNG, multiplying by `scale`
// (saturating). scale <= 0 stretches the maximum difference to 255.
void write_ela_png(const ElaResult& result, const std::filesystem::path& path, double scale = 0.0);

[[nodiscard]] std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);

}  // namespace fauxcheck::evidence
