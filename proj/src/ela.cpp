#include "fauxcheck/ela.hpp"

#include <algorithm>
#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <string>

// jpeglib.h expects FILE and size_t to be declared first.
#include <jpeglib.h>
#include <png.h>

#include "fauxcheck/error.hpp"

namespace fauxcheck::evidence {

namespace {

struct JpegErrorManager {
    jpeg_error_mgr pub{};
    std::jmp_buf jump{};
    char message[JMSG_LENGTH_MAX] = {};
};

void on_jpeg_error(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

void silence_jpeg_output(j_common_ptr) {}

}  // namespace

// libjpeg reports errors through longjmp, so these two functions keep every
// non-trivial object out of the frames that setjmp covers.
RgbImage decode_jpeg(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || bytes[0] != 0xFF || bytes[1] != 0xD8) {
        throw DataError("input is not a JPEG stream");
    }
    RgbImage image;
    jpeg_decompress_struct cinfo{};
    JpegErrorManager err;
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = on_jpeg_error;
    err.pub.output_message = silence_jpeg_output;
    bool unsupported = false;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw DataError(std::string("cannot decode JPEG: ") + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    switch (cinfo.jpeg_color_space) {
        case JCS_GRAYSCALE:
        case JCS_YCbCr:
        case JCS_RGB:
            break;
        default:
            unsupported = true;
    }
    if (unsupported) {
        jpeg_destroy_decompress(&cinfo);
        throw DataError("unsupported JPEG color space");
    }
    cinfo.out_color_space = JCS_RGB;
    cinfo.dct_method = JDCT_ISLOW;
    jpeg_start_decompress(&cinfo);
    image.width = static_cast<int>(cinfo.output_width);
    image.height = static_cast<int>(cinfo.output_height);
    image.pixels.resize(static_cast<std::size_t>(image.width) * image.height * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = image.pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * image.width * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return image;
}

std::vector<std::uint8_t> encode_jpeg(const RgbImage& image, int quality) {
    if (quality < 1 || quality > 100) throw DataError("JPEG quality must be in [1, 100]");
    if (image.width <= 0 || image.height <= 0 ||
        image.pixels.size() != static_cast<std::size_t>(image.width) * image.height * 3) {
        throw DataError("image buffer does not match its dimensions");
    }
    jpeg_compress_struct cinfo{};
    JpegErrorManager err;
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = on_jpeg_error;
    err.pub.output_message = silence_jpeg_output;
    unsigned char* buffer = nullptr;
    unsigned long size = 0;
    if (setjmp(err.jump)) {
        jpeg_destroy_compress(&cinfo);
        std::free(buffer);
        throw DataError(std::string("cannot encode JPEG: ") + err.message);
    }
    jpeg_create_compress(&cinfo);
    jpeg_mem_dest(&cinfo, &buffer, &size);
    cinfo.image_width = static_cast<JDIMENSION>(image.width);
    cinfo.image_height = static_cast<JDIMENSION>(image.height);
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    cinfo.dct_method = JDCT_ISLOW;
    cinfo.optimize_coding = FALSE;
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    while (cinfo.next_scanline < cinfo.image_height) {
        auto* row = const_cast<JSAMPLE*>(image.pixels.data() +
                                         static_cast<std::size_t>(cinfo.next_scanline) * image.width * 3);
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
    std::vector<std::uint8_t> out(buffer, buffer + size);
    std::free(buffer);
    return out;
}

double ElaResult::region_mean(int x0, int y0, int x1, int y1) const {
    x0 = std::clamp(x0, 0, width);
    x1 = std::clamp(x1, 0, width);
    y0 = std::clamp(y0, 0, height);
    y1 = std::clamp(y1, 0, height);
    if (x1 <= x0 || y1 <= y0) return 0.0;
    double sum = 0.0;
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            const auto i = (static_cast<std::size_t>(y) * width + x) * 3;
            sum += difference[i] + difference[i + 1] + difference[i + 2];
        }
    }
    return sum / (3.0 * (x1 - x0) * (y1 - y0));
}

ElaResult compute_ela(std::span<const std::uint8_t> jpeg_bytes, int quality) {
    if (quality < 1 || quality > 100) throw DataError("ELA quality must be in [1, 100]");
    const auto original = decode_jpeg(jpeg_bytes);
    const auto resaved = decode_jpeg(encode_jpeg(original, quality));
    ElaResult r;
    r.width = original.width;
    r.height = original.height;
    r.difference.resize(original.pixels.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < original.pixels.size(); ++i) {
        const int d = std::abs(static_cast<int>(original.pixels[i]) - static_cast<int>(resaved.pixels[i]));
        r.difference[i] = static_cast<std::uint8_t>(d);
        r.max = std::max(r.max, r.difference[i]);
        sum += d;
    }
    r.mean = r.difference.empty() ? 0.0 : sum / static_cast<double>(r.difference.size());
    return r;
}

void write_ela_png(const ElaResult& result, const std::filesystem::path& path, double scale) {
    if (scale <= 0.0) scale = result.max > 0 ? 255.0 / result.max : 1.0;
    std::vector<std::uint8_t> scaled(result.difference.size());
    std::transform(result.difference.begin(), result.difference.end(), scaled.begin(), [&](std::uint8_t d) {
        return static_cast<std::uint8_t>(std::min(255.0, d * scale + 0.5));
    });

    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(result.width);
    image.height = static_cast<png_uint_32>(result.height);
    image.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.c_str(), 0, scaled.data(), 0, nullptr)) {
        throw DataError("cannot write PNG " + path.string() + ": " + image.message);
    }
}

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace fauxcheck::evidence
