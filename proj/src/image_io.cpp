#include "rmgd/image_io.hpp"

#include <cctype>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace rmgd {

namespace {

[[noreturn]] void bad(const std::filesystem::path& p, const std::string& why) {
  throw DataError("corrupt image " + p.string() + ": " + why);
}

int pgm_token(std::istream& in) {
  // Skips whitespace and '#' comment lines, then reads one decimal token.
  for (;;) {
    int c = in.peek();
    if (c == EOF) return -1;
    if (std::isspace(c)) {
      in.get();
      continue;
    }
    if (c == '#') {
      std::string line;
      std::getline(in, line);
      continue;
    }
    break;
  }
  int v = 0;
  if (!(in >> v)) return -1;
  return v;
}

Grid2D<std::uint8_t> read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path.string());
  char magic[2] = {0, 0};
  in.read(magic, 2);
  const bool binary = magic[1] == '5';
  if (magic[0] != 'P' || (magic[1] != '5' && magic[1] != '2')) bad(path, "not a P2/P5 PGM");
  const int w = pgm_token(in);
  const int h = pgm_token(in);
  const int maxval = pgm_token(in);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) bad(path, "bad PGM header");
  Grid2D<std::uint8_t> img(h, w);
  if (binary) {
    in.get();  // single whitespace after maxval
    in.read(reinterpret_cast<char*>(img.data()), static_cast<std::streamsize>(img.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.size())) bad(path, "truncated pixel data");
  } else {
    for (std::size_t i = 0; i < img.size(); ++i) {
      const int v = pgm_token(in);
      if (v < 0 || v > maxval) bad(path, "truncated pixel data");
      img.data()[i] = static_cast<std::uint8_t>(v);
    }
  }
  return img;
}

std::uint32_t le32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t le16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

Grid2D<std::uint8_t> read_bmp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 54 || buf[0] != 'B' || buf[1] != 'M') bad(path, "not a BMP");
  const std::uint32_t data_off = le32(&buf[10]);
  const std::uint32_t hdr_size = le32(&buf[14]);
  if (hdr_size < 40) bad(path, "unsupported BMP header");
  const std::int32_t w = static_cast<std::int32_t>(le32(&buf[18]));
  std::int32_t h = static_cast<std::int32_t>(le32(&buf[22]));
  const bool top_down = h < 0;
  if (top_down) h = -h;
  const std::uint16_t bpp = le16(&buf[28]);
  const std::uint32_t compression = le32(&buf[30]);
  if (compression != 0) bad(path, "compressed BMP not supported");
  if (w <= 0 || h <= 0) bad(path, "bad dimensions");
  if (bpp != 8 && bpp != 24 && bpp != 32) bad(path, "unsupported bit depth");

  const unsigned char* palette = nullptr;
  if (bpp == 8) {
    std::uint32_t colors = le32(&buf[46]);
    if (colors == 0) colors = 256;
    if (14 + hdr_size + colors * 4 > buf.size()) bad(path, "truncated palette");
    palette = &buf[14 + hdr_size];
  }
  const std::size_t row_stride = ((static_cast<std::size_t>(w) * bpp + 31) / 32) * 4;
  if (data_off + row_stride * h > buf.size()) bad(path, "truncated pixel data");

  Grid2D<std::uint8_t> img(h, w);
  for (int row = 0; row < h; ++row) {
    const int src_row = top_down ? row : h - 1 - row;
    const unsigned char* src = &buf[data_off + row_stride * src_row];
    for (int col = 0; col < w; ++col) {
      unsigned r, g, b;
      if (bpp == 8) {
        const unsigned char* e = palette + 4 * src[col];
        b = e[0], g = e[1], r = e[2];
      } else {
        const unsigned char* px = src + col * (bpp / 8);
        b = px[0], g = px[1], r = px[2];
      }
      img(row, col) = static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
    }
  }
  return img;
}

}  // namespace

Grid2D<std::uint8_t> read_gray_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path.string());
  char magic[2] = {0, 0};
  in.read(magic, 2);
  in.close();
  if (magic[0] == 'P' && (magic[1] == '5' || magic[1] == '2')) return read_pgm(path);
  if (magic[0] == 'B' && magic[1] == 'M') return read_bmp(path);
  throw DataError("unsupported image format: " + path.string());
}

void write_pgm(const std::filesystem::path& path, const Grid2D<std::uint8_t>& img) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << "P5\n" << img.cols() << ' ' << img.rows() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace rmgd
