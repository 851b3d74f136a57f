#pragma once

#include <zlib.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "clutter/perception.hpp"

namespace clutter {

// Flat shading: hue fixed per class, brightness rising with surface height.
inline void class_color(int class_id, double level, unsigned char* rgb) {
  double hue = std::fmod(class_id * 0.61803398875, 1.0) * 6.0;
  double c = 0.35 + 0.6 * level;
  int k = static_cast<int>(hue);
  double f = hue - k;
  double p = c * 0.25, q = c * (1.0 - 0.75 * f), t = c * (0.25 + 0.75 * f);
  double r, g, b;
  switch (k % 6) {
    case 0: r = c, g = t, b = p; break;
    case 1: r = q, g = c, b = p; break;
    case 2: r = p, g = c, b = t; break;
    case 3: r = p, g = q, b = c; break;
    case 4: r = t, g = p, b = c; break;
    default: r = c, g = p, b = q; break;
  }
  rgb[0] = static_cast<unsigned char>(255.0 * r);
  rgb[1] = static_cast<unsigned char>(255.0 * g);
  rgb[2] = static_cast<unsigned char>(255.0 * b);
}

// Image rows run top to bottom, so the raster's y axis is flipped.
inline std::vector<unsigned char> raster_to_rgb(const RasterMap& m,
                                                const RealizedScene& s,
                                                const Catalog& cat) {
  double zmax = 0.0;
  for (double z : m.top) zmax = std::max(zmax, z);
  if (zmax <= 0.0) zmax = 1.0;
  std::vector<unsigned char> img(
      static_cast<std::size_t>(m.width) * m.height * 3, 0);
  for (int iy = 0; iy < m.height; ++iy)
    for (int ix = 0; ix < m.width; ++ix) {
      int src = m.index(ix, iy);
      std::size_t dst =
          (static_cast<std::size_t>(m.height - 1 - iy) * m.width + ix) * 3;
      int id = m.owner[src];
      if (id < 0) {
        img[dst] = img[dst + 1] = img[dst + 2] = 40;
        continue;
      }
      const Body* b = s.body(id);
      class_color(b->class_id, m.top[src] / zmax, &img[dst]);
    }
  return img;
}

inline void write_ppm(const std::string& path, int width, int height,
                      const std::vector<unsigned char>& rgb) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << "P6\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(rgb.data()),
            static_cast<std::streamsize>(rgb.size()));
}

namespace detail {

inline void png_u32(std::vector<unsigned char>& v, std::uint32_t x) {
  v.push_back((x >> 24) & 0xff);
  v.push_back((x >> 16) & 0xff);
  v.push_back((x >> 8) & 0xff);
  v.push_back(x & 0xff);
}

inline void png_chunk(std::ofstream& out, const char* type,
                      const std::vector<unsigned char>& data) {
  std::vector<unsigned char> buf;
  png_u32(buf, static_cast<std::uint32_t>(data.size()));
  buf.insert(buf.end(), type, type + 4);
  buf.insert(buf.end(), data.begin(), data.end());
  std::uint32_t crc = static_cast<std::uint32_t>(
      crc32(0L, buf.data() + 4, static_cast<uInt>(buf.size() - 4)));
  png_u32(buf, crc);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
}

}  // namespace detail

inline void write_png(const std::string& path, int width, int height,
                      const std::vector<unsigned char>& rgb) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n',
                                       0x1a, '\n'};
  out.write(reinterpret_cast<const char*>(sig), 8);

  std::vector<unsigned char> ihdr;
  detail::png_u32(ihdr, static_cast<std::uint32_t>(width));
  detail::png_u32(ihdr, static_cast<std::uint32_t>(height));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // truecolor
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  detail::png_chunk(out, "IHDR", ihdr);

  // filter byte 0 in front of every scanline
  std::vector<unsigned char> raw;
  raw.reserve(rgb.size() + height);
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);
    raw.insert(raw.end(), rgb.begin() + static_cast<std::size_t>(y) * width * 3,
               rgb.begin() + static_cast<std::size_t>(y + 1) * width * 3);
  }
  uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> zbuf(zlen);
  if (compress2(zbuf.data(), &zlen, raw.data(), static_cast<uLong>(raw.size()),
                9) != Z_OK)
    throw ConfigError("png compression failed");
  zbuf.resize(zlen);
  detail::png_chunk(out, "IDAT", zbuf);
  detail::png_chunk(out, "IEND", {});
}

inline void write_image(const std::string& path, int width, int height,
                        const std::vector<unsigned char>& rgb) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".ppm") == 0)
    write_ppm(path, width, height, rgb);
  else
    write_png(path, width, height, rgb);
}

}  // namespace clutter
