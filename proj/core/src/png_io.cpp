#include "rvn/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <stdexcept>
#include <vector>

namespace rvn {
namespace {

void write_png_bytes(const std::string& path,
                     const std::vector<std::uint8_t>& pixels,
                     std::int64_t height, std::int64_t width) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("png: cannot open " + path);
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    std::fclose(fp);
    throw std::runtime_error("png: write failed for " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width),
               static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (std::int64_t i = 0; i < height; ++i)
    rows[static_cast<std::size_t>(i)] =
        const_cast<png_bytep>(pixels.data() + i * width);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

std::uint8_t quantize(float v, float lo, float hi) {
  const float t = (v - lo) / (hi - lo);
  const float c = t < 0.0f ? 0.0f : (t > 1.0f ? 1.0f : t);
  return static_cast<std::uint8_t>(c * 255.0f + 0.5f);
}

}  // namespace

void write_grayscale_png(const std::string& path, const Tensor<float>& image,
                         float lo, float hi) {
  if (image.rank() != 2)
    throw std::invalid_argument("write_grayscale_png: expected [H, W]");
  if (!(hi > lo))
    throw std::invalid_argument("write_grayscale_png: need hi > lo");
  const std::int64_t h = image.dim(0), w = image.dim(1);
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(h * w));
  for (std::int64_t i = 0; i < h * w; ++i)
    pixels[static_cast<std::size_t>(i)] = quantize(image[i], lo, hi);
  write_png_bytes(path, pixels, h, w);
}

void write_panel_png(const std::string& path,
                     const std::vector<Tensor<float>>& images) {
  if (images.empty())
    throw std::invalid_argument("write_panel_png: no images");
  const std::int64_t h = images[0].dim(0), w = images[0].dim(1);
  for (const auto& img : images)
    if (img.rank() != 2 || img.dim(0) != h || img.dim(1) != w)
      throw std::invalid_argument("write_panel_png: mismatched image sizes");

  const float hi = std::max(1e-12f, static_cast<float>(max_abs(images[0])));
  const int zoom = 3;
  const std::int64_t ch = h / 3, cw = w / 3;          // center crop
  const std::int64_t zh = ch * zoom, zw = cw * zoom;  // zoomed size
  const std::int64_t gap = 2;
  const std::int64_t cols = static_cast<std::int64_t>(images.size());
  const std::int64_t panel_w = cols * std::max(w, zw) + (cols - 1) * gap;
  const std::int64_t panel_h = h + gap + zh;
  std::vector<std::uint8_t> pixels(
      static_cast<std::size_t>(panel_w * panel_h), 255);

  const std::int64_t cell_w = std::max(w, zw);
  for (std::int64_t c = 0; c < cols; ++c) {
    const auto& img = images[static_cast<std::size_t>(c)];
    const std::int64_t x0 = c * (cell_w + gap);
    for (std::int64_t i = 0; i < h; ++i)
      for (std::int64_t j = 0; j < w; ++j)
        pixels[static_cast<std::size_t>(i * panel_w + x0 + j)] =
            quantize(img(i, j), 0.0f, hi);
    // zoomed center crop below
    const std::int64_t cy = (h - ch) / 2, cx = (w - cw) / 2;
    for (std::int64_t i = 0; i < zh; ++i)
      for (std::int64_t j = 0; j < zw; ++j)
        pixels[static_cast<std::size_t>((h + gap + i) * panel_w + x0 + j)] =
            quantize(img(cy + i / zoom, cx + j / zoom), 0.0f, hi);
  }
  write_png_bytes(path, pixels, panel_h, panel_w);
}

}  // namespace rvn
