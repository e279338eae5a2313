#include "aenet/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace aenet {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::string& path, const char* what) {
  throw std::runtime_error(path + ": " + what);
}

ImageU8 read_png_rgb8(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) fail(path, "cannot open");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info) fail(path, "libpng init failed");
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "png decode error");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  ImageU8 img(static_cast<int>(png_get_image_height(png, info)),
              static_cast<int>(png_get_image_width(png, info)), 3);
  if (png_get_rowbytes(png, info) != static_cast<std::size_t>(img.w) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "unexpected png row size");
  }
  std::vector<png_bytep> rows(img.h);
  for (int y = 0; y < img.h; ++y)
    rows[y] = img.data.data() + static_cast<std::size_t>(y) * img.w * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const std::string& path, const void* pixels, int h, int w, int color_type,
               int bit_depth, int channels) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) fail(path, "cannot open for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info) fail(path, "libpng init failed");
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(path, "png encode error");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), bit_depth,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);  // in-memory values are host-endian

  const std::size_t row_bytes = static_cast<std::size_t>(w) * channels * (bit_depth / 8);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y)
    rows[y] = const_cast<png_bytep>(static_cast<const png_byte*>(pixels) + y * row_bytes);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Minimal baseline TIFF: uncompressed 8-bit RGB/RGBA/gray strips, either
// byte order. Enough for the common pathology export; anything else is
// rejected with a clear message.
class TiffReader {
 public:
  explicit TiffReader(std::vector<std::uint8_t> bytes, std::string path)
      : b_(std::move(bytes)), path_(std::move(path)) {
    if (b_.size() < 8) fail(path_, "truncated tiff");
    if (b_[0] == 'I' && b_[1] == 'I')
      little_ = true;
    else if (b_[0] == 'M' && b_[1] == 'M')
      little_ = false;
    else
      fail(path_, "bad tiff byte-order mark");
    if (u16(2) != 42) fail(path_, "bad tiff magic");
  }

  ImageU8 decode() {
    const std::uint32_t ifd = u32(4);
    std::uint32_t width = 0, height = 0, bits = 8, compression = 1, spp = 0;
    std::vector<std::uint32_t> strip_offsets, strip_counts;
    std::uint32_t rows_per_strip = 0xffffffffu;

    const std::uint16_t entries = u16(ifd);
    for (std::uint16_t i = 0; i < entries; ++i) {
      const std::size_t e = ifd + 2 + static_cast<std::size_t>(i) * 12;
      const std::uint16_t tag = u16(e);
      switch (tag) {
        case 256: width = value_at(e); break;
        case 257: height = value_at(e); break;
        case 258: bits = value_at(e); break;
        case 259: compression = value_at(e); break;
        case 277: spp = value_at(e); break;
        case 278: rows_per_strip = value_at(e); break;
        case 273: strip_offsets = values_at(e); break;
        case 279: strip_counts = values_at(e); break;
        default: break;  // unknown tags ignored
      }
    }
    if (compression != 1) fail(path_, "only uncompressed tiff supported");
    if (bits != 8) fail(path_, "only 8-bit tiff supported");
    if (width == 0 || height == 0 || strip_offsets.empty()) fail(path_, "incomplete tiff");
    if (spp == 0) spp = 1;
    if (spp != 1 && spp != 3 && spp != 4) fail(path_, "unsupported tiff sample count");

    ImageU8 img(static_cast<int>(height), static_cast<int>(width), 3);
    const std::size_t row_bytes = static_cast<std::size_t>(width) * spp;
    std::size_t row = 0;
    for (std::size_t s = 0; s < strip_offsets.size() && row < height; ++s) {
      const std::size_t off = strip_offsets[s];
      const std::size_t rows_here =
          std::min<std::size_t>(rows_per_strip, height - row);
      if (off + rows_here * row_bytes > b_.size()) fail(path_, "tiff strip out of range");
      for (std::size_t r = 0; r < rows_here; ++r, ++row) {
        const std::uint8_t* src = b_.data() + off + r * row_bytes;
        std::uint8_t* dst = img.data.data() + row * width * 3;
        for (std::size_t x = 0; x < width; ++x) {
          if (spp == 1) {
            dst[x * 3] = dst[x * 3 + 1] = dst[x * 3 + 2] = src[x];
          } else {
            dst[x * 3] = src[x * spp];
            dst[x * 3 + 1] = src[x * spp + 1];
            dst[x * 3 + 2] = src[x * spp + 2];
          }
        }
      }
    }
    return img;
  }

 private:
  std::uint16_t u16(std::size_t off) const {
    if (off + 2 > b_.size()) fail(path_, "truncated tiff");
    return little_ ? static_cast<std::uint16_t>(b_[off] | (b_[off + 1] << 8))
                   : static_cast<std::uint16_t>((b_[off] << 8) | b_[off + 1]);
  }
  std::uint32_t u32(std::size_t off) const {
    if (off + 4 > b_.size()) fail(path_, "truncated tiff");
    return little_ ? (b_[off] | (b_[off + 1] << 8) | (b_[off + 2] << 16) |
                      (static_cast<std::uint32_t>(b_[off + 3]) << 24))
                   : ((static_cast<std::uint32_t>(b_[off]) << 24) | (b_[off + 1] << 16) |
                      (b_[off + 2] << 8) | b_[off + 3]);
  }
  std::uint32_t type_size(std::uint16_t type) const {
    switch (type) {
      case 1: case 2: return 1;  // BYTE, ASCII
      case 3: return 2;          // SHORT
      case 4: return 4;          // LONG
      default: return 0;
    }
  }
  std::uint32_t value_at(std::size_t entry) const {
    const std::uint16_t type = u16(entry + 2);
    return type == 3 ? u16(entry + 8) : u32(entry + 8);
  }
  std::vector<std::uint32_t> values_at(std::size_t entry) const {
    const std::uint16_t type = u16(entry + 2);
    const std::uint32_t count = u32(entry + 4);
    const std::uint32_t ts = type_size(type);
    if (ts == 0) fail(path_, "unsupported tiff field type");
    std::size_t off = entry + 8;
    if (static_cast<std::size_t>(ts) * count > 4) off = u32(entry + 8);
    std::vector<std::uint32_t> out(count);
    for (std::uint32_t i = 0; i < count; ++i)
      out[i] = type == 3 ? u16(off + i * 2) : u32(off + i * 4);
    return out;
  }

  std::vector<std::uint8_t> b_;
  std::string path_;
  bool little_ = true;
};

}  // namespace

ImageU8 read_image(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(path, "cannot open");
  std::uint8_t sig[8] = {0};
  is.read(reinterpret_cast<char*>(sig), 8);
  const std::uint8_t png_sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  ImageU8 img;
  if (std::memcmp(sig, png_sig, 8) == 0) {
    is.close();
    img = read_png_rgb8(path);
  } else if ((sig[0] == 'I' && sig[1] == 'I') || (sig[0] == 'M' && sig[1] == 'M')) {
    is.seekg(0);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                    std::istreambuf_iterator<char>());
    img = TiffReader(std::move(bytes), path).decode();
  } else {
    fail(path, "unrecognised image signature (png or tiff expected)");
  }
  img.id = path;
  return img;
}

void write_png_rgb8(const std::string& path, const ImageU8& image) {
  if (image.channels != 3) fail(path, "rgb8 writer expects 3 channels");
  write_png(path, image.data.data(), image.h, image.w, PNG_COLOR_TYPE_RGB, 8, 3);
}

void write_png_gray8(const std::string& path, const std::vector<std::uint8_t>& pixels, int h,
                     int w) {
  if (pixels.size() != static_cast<std::size_t>(h) * w) fail(path, "gray8 size mismatch");
  write_png(path, pixels.data(), h, w, PNG_COLOR_TYPE_GRAY, 8, 1);
}

void write_png_gray16(const std::string& path, const std::vector<std::uint16_t>& pixels, int h,
                      int w) {
  if (pixels.size() != static_cast<std::size_t>(h) * w) fail(path, "gray16 size mismatch");
  write_png(path, pixels.data(), h, w, PNG_COLOR_TYPE_GRAY, 16, 1);
}

std::vector<std::uint16_t> read_png_gray16(const std::string& path, int& h, int& w) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) fail(path, "cannot open");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info) fail(path, "libpng init failed");
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "png decode error");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY ||
      png_get_bit_depth(png, info) != 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "expected 16-bit grayscale png");
  }
  png_set_swap(png);
  png_read_update_info(png, info);
  h = static_cast<int>(png_get_image_height(png, info));
  w = static_cast<int>(png_get_image_width(png, info));
  std::vector<std::uint16_t> pixels(static_cast<std::size_t>(h) * w);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y)
    rows[y] = reinterpret_cast<png_bytep>(pixels.data() + static_cast<std::size_t>(y) * w);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return pixels;
}

void write_mask_png(const std::string& path, const Mask& mask) {
  std::vector<std::uint8_t> px(mask.size());
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = mask.labels[i] == 0 ? 255 : 0;
  write_png_gray8(path, px, mask.h, mask.w);
}

Mask read_mask_png(const std::string& path) {
  ImageU8 img = read_png_rgb8(path);
  Mask m(img.h, img.w);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) m.at(y, x) = img.at(y, x, 0) >= 128 ? 0 : 1;
  return m;
}

}  // namespace aenet
