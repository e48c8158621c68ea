#pragma once

// Deterministic software rasterizer and image comparisons. Integer coverage,
// no anti-aliasing, straight-alpha source-over onto opaque white.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <zlib.h>

#include "mtvlint/scene.hpp"

namespace mtv {

class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height, Rgba fill = {255, 255, 255, 255}) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw Error("zero-area canvas");
    pixels_.resize(static_cast<std::size_t>(width) * height * 4);
    for (std::size_t i = 0; i < pixels_.size(); i += 4) {
      pixels_[i] = fill.r;
      pixels_[i + 1] = fill.g;
      pixels_[i + 2] = fill.b;
      pixels_[i + 3] = fill.a;
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::span<const std::uint8_t> bytes() const { return pixels_; }

  Rgba at(int x, int y) const {
    const std::size_t i = offset(x, y);
    return {pixels_[i], pixels_[i + 1], pixels_[i + 2], pixels_[i + 3]};
  }
  void set(int x, int y, Rgba c) {
    const std::size_t i = offset(x, y);
    pixels_[i] = c.r;
    pixels_[i + 1] = c.g;
    pixels_[i + 2] = c.b;
    pixels_[i + 3] = c.a;
  }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  std::size_t offset(int x, int y) const { return (static_cast<std::size_t>(y) * width_ + x) * 4; }

  int width_ = 0, height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

namespace detail {

/// Rounds half up to an 8-bit channel.
inline std::uint8_t round_channel(double v) {
  const double r = std::floor(v + 0.5);
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

inline Rgba composite(Rgba dst, Rgba src, double alpha) {
  auto mix = [alpha](std::uint8_t s, std::uint8_t d) { return round_channel(alpha * s + (1.0 - alpha) * d); };
  // The destination stays opaque: the canvas starts opaque white.
  return {mix(src.r, dst.r), mix(src.g, dst.g), mix(src.b, dst.b), 255};
}

template <typename Plot>
void for_each_pixel(const Mark& mark, int width, int height, Plot&& plot) {
  auto inside = [&](int x, int y) { return x >= 0 && y >= 0 && x < width && y < height; };
  std::visit(
      [&](const auto& g) {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, RectGeom>) {
          for (int y = std::max(g.y0, 0); y < std::min(g.y1, height); ++y)
            for (int x = std::max(g.x0, 0); x < std::min(g.x1, width); ++x) plot(x, y);
        } else if constexpr (std::is_same_v<T, CircleGeom>) {
          for (int y = g.cy - g.r; y <= g.cy + g.r; ++y)
            for (int x = g.cx - g.r; x <= g.cx + g.r; ++x) {
              const int dx = x - g.cx, dy = y - g.cy;
              if (dx * dx + dy * dy <= g.r * g.r && inside(x, y)) plot(x, y);
            }
        } else {
          // Bresenham; each pixel visited once.
          int x = g.x0, y = g.y0;
          const int dx = std::abs(g.x1 - g.x0), sx = g.x0 < g.x1 ? 1 : -1;
          const int dy = -std::abs(g.y1 - g.y0), sy = g.y0 < g.y1 ? 1 : -1;
          int err = dx + dy;
          while (true) {
            const bool at_end = x == g.x1 && y == g.y1;
            if (at_end && !g.include_end) break;
            if (inside(x, y)) plot(x, y);
            if (at_end) break;
            const int e2 = 2 * err;
            if (e2 >= dy) err += dy, x += sx;
            if (e2 <= dx) err += dx, y += sy;
          }
        }
      },
      mark.geometry);
}

inline void paint(RasterImage& img, const Mark& mark, double opacity_scale) {
  const double alpha = std::clamp(mark.opacity * opacity_scale * (mark.color.a / 255.0), 0.0, 1.0);
  for_each_pixel(mark, img.width(), img.height(),
                 [&](int x, int y) { img.set(x, y, composite(img.at(x, y), mark.color, alpha)); });
}

}  // namespace detail

/// Draws marks in draw order onto white.
inline RasterImage rasterize(const SceneGraph& scene) {
  RasterImage img(scene.width, scene.height);
  // marks are stored in draw order
  for (const auto& m : scene.marks) detail::paint(img, m, 1.0);
  return img;
}

/// Several scenes on one canvas, each mark's opacity multiplied by
/// `layer_opacity`, composited in list order.
inline RasterImage render_overlay(std::span<const SceneGraph> scenes, double layer_opacity) {
  if (scenes.empty()) throw Error("render_overlay needs at least one scene");
  if (!(layer_opacity > 0.0 && layer_opacity <= 1.0)) throw Error("layer opacity must lie in (0, 1]");
  RasterImage img(scenes.front().width, scenes.front().height);
  for (const auto& s : scenes) {
    if (s.width != img.width() || s.height != img.height()) throw Error("overlay scenes differ in canvas size");
    for (const auto& m : s.marks) detail::paint(img, m, layer_opacity);
  }
  return img;
}

// Comparisons ----------------------------------------------------------------------

namespace detail {
inline void require_same_size(const RasterImage& a, const RasterImage& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error("image dimensions differ: " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()));
  }
}
}  // namespace detail

/// Pixels where some channel differs by more than `channel_tolerance`.
inline std::size_t pixel_diff(const RasterImage& a, const RasterImage& b, int channel_tolerance = 0) {
  detail::require_same_size(a, b);
  const auto pa = a.bytes(), pb = b.bytes();
  std::size_t count = 0;
  for (std::size_t i = 0; i < pa.size(); i += 4) {
    for (std::size_t c = 0; c < 4; ++c) {
      if (std::abs(int(pa[i + c]) - int(pb[i + c])) > channel_tolerance) {
        ++count;
        break;
      }
    }
  }
  return count;
}

/// Sum over the four channels of chi-square distance between 256-bin
/// histograms; empty-empty bins contribute nothing.
inline double chi2_histogram_distance(const RasterImage& a, const RasterImage& b) {
  detail::require_same_size(a, b);
  std::array<std::array<std::uint64_t, 256>, 4> ha{}, hb{};
  const auto pa = a.bytes(), pb = b.bytes();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    ++ha[i % 4][pa[i]];
    ++hb[i % 4][pb[i]];
  }
  double total = 0.0;
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t bin = 0; bin < 256; ++bin) {
      const double x = static_cast<double>(ha[c][bin]), y = static_cast<double>(hb[c][bin]);
      if (x + y > 0.0) total += (x - y) * (x - y) / (x + y);
    }
  }
  return total;
}

/// Every pixel moved toward white: f*p + (1-f)*255, rounded half up. For a
/// scene without overlapping marks this equals re-rendering with mark opacity
/// scaled by f (to within one unit per channel).
inline RasterImage blend_toward_background(const RasterImage& img, double f) {
  if (!(f > 0.0 && f <= 1.0)) throw Error("blend fraction must lie in (0, 1], got " + format_number(f));
  RasterImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const Rgba p = img.at(x, y);
      out.set(x, y, detail::composite({255, 255, 255, 255}, p, f));
    }
  }
  return out;
}

// Encoders ----------------------------------------------------------------------------

/// Binary PPM (P6), alpha dropped. Bit-exact output contract.
inline std::string encode_ppm(const RasterImage& img) {
  std::string out = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(img.width()) * img.height() * 3);
  const auto px = img.bytes();
  for (std::size_t i = 0; i < px.size(); i += 4) {
    out.push_back(static_cast<char>(px[i]));
    out.push_back(static_cast<char>(px[i + 1]));
    out.push_back(static_cast<char>(px[i + 2]));
  }
  return out;
}

inline RasterImage decode_ppm(std::string_view data) {
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < data.size()) {
      if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    return std::string(data.substr(start, pos - start));
  };
  if (token() != "P6") throw Error("not a binary PPM");
  const int w = std::stoi(token()), h = std::stoi(token());
  if (token() != "255") throw Error("unsupported PPM max value");
  ++pos;
  if (data.size() - pos < static_cast<std::size_t>(w) * h * 3) throw Error("truncated PPM");
  RasterImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x, pos += 3) {
      img.set(x, y, {static_cast<std::uint8_t>(data[pos]), static_cast<std::uint8_t>(data[pos + 1]),
                     static_cast<std::uint8_t>(data[pos + 2]), 255});
    }
  return img;
}

/// RGBA PNG for humans; not part of the bit-exact contract.
inline std::string encode_png(const RasterImage& img) {
  auto be32 = [](std::string& s, std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) s.push_back(static_cast<char>((v >> shift) & 0xff));
  };
  auto chunk = [&](std::string& out, const char* type, const std::string& body) {
    be32(out, static_cast<std::uint32_t>(body.size()));
    std::string tagged = std::string(type, 4) + body;
    out += tagged;
    be32(out, static_cast<std::uint32_t>(
                  crc32(0L, reinterpret_cast<const Bytef*>(tagged.data()), static_cast<uInt>(tagged.size()))));
  };

  std::string raw;
  const std::size_t stride = static_cast<std::size_t>(img.width()) * 4;
  raw.reserve((stride + 1) * img.height());
  const auto px = img.bytes();
  for (int y = 0; y < img.height(); ++y) {
    raw.push_back('\0');  // filter: none
    raw.append(reinterpret_cast<const char*>(px.data()) + y * stride, stride);
  }
  uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
  std::string z(zlen, '\0');
  if (compress2(reinterpret_cast<Bytef*>(z.data()), &zlen, reinterpret_cast<const Bytef*>(raw.data()),
                static_cast<uLong>(raw.size()), 9) != Z_OK) {
    throw Error("PNG compression failed");
  }
  z.resize(zlen);

  std::string out = "\x89PNG\r\n\x1a\n";
  std::string ihdr;
  be32(ihdr, static_cast<std::uint32_t>(img.width()));
  be32(ihdr, static_cast<std::uint32_t>(img.height()));
  ihdr += std::string("\x08\x06\x00\x00\x00", 5);  // 8-bit RGBA, no interlace
  chunk(out, "IHDR", ihdr);
  chunk(out, "IDAT", z);
  chunk(out, "IEND", "");
  return out;
}

/// Writes PPM or PNG depending on the file extension (default PPM).
inline void write_image(const RasterImage& img, const std::string& path) {
  const bool png = path.size() >= 4 && path.substr(path.size() - 4) == ".png";
  const std::string bytes = png ? encode_png(img) : encode_ppm(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace mtv
