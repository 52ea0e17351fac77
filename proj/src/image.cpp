#include "osfr/image.hpp"

#include <png.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "osfr/errors.hpp"

namespace osfr {

namespace fs = std::filesystem;

RasterImage::RasterImage(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw UsageError("image dimensions must be positive");
  data_.assign(pixel_count() * kChannels, fill);
}

RasterImage::RasterImage(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width <= 0 || height <= 0) throw UsageError("image dimensions must be positive");
  if (data_.size() != pixel_count() * kChannels) {
    throw UsageError("image buffer size does not match dimensions");
  }
}

namespace {

std::string lower_ext(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RasterImage decode_png(const std::vector<std::uint8_t>& bytes, const fs::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw DataError("cannot decode PNG '" + path.string() + "': " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> data(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, data.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw DataError("cannot decode PNG '" + path.string() + "': " + msg);
  }
  return RasterImage(static_cast<int>(image.width), static_cast<int>(image.height),
                     std::move(data));
}

RasterImage decode_ppm(const std::vector<std::uint8_t>& bytes, const fs::path& path) {
  const auto fail = [&](const char* why) -> DataError {
    return DataError("cannot decode PPM '" + path.string() + "': " + why);
  };
  std::size_t pos = 0;
  const auto next_token = [&]() -> std::string {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    std::string tok;
    while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') {
      tok.push_back(static_cast<char>(bytes[pos++]));
    }
    return tok;
  };
  if (next_token() != "P6") throw fail("missing P6 magic");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token());
    h = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw fail("malformed header");
  }
  if (w <= 0 || h <= 0 || maxval != 255) throw fail("unsupported header");
  ++pos;  // single whitespace before raster
  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
  if (pos + need > bytes.size()) throw fail("truncated raster");
  return RasterImage(w, h, std::vector<std::uint8_t>(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                                     bytes.begin() + static_cast<std::ptrdiff_t>(pos + need)));
}

}  // namespace

bool is_image_path(const fs::path& path) {
  const auto ext = lower_ext(path);
  return ext == ".png" || ext == ".ppm";
}

RasterImage read_image(const fs::path& path) {
  const auto bytes = read_bytes(path);
  const auto ext = lower_ext(path);
  if (ext == ".png") return decode_png(bytes, path);
  if (ext == ".ppm") return decode_ppm(bytes, path);
  throw DataError("unsupported image format '" + path.string() + "'");
}

void write_image(const RasterImage& img, const fs::path& path) {
  const auto ext = lower_ext(path);
  if (ext == ".ppm") {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write image '" + path.string() + "'");
    out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data().data()),
              static_cast<std::streamsize>(img.data().size()));
    if (!out) throw DataError("failed writing image '" + path.string() + "'");
  } else if (ext == ".png") {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.c_str(), 0, img.data().data(), 0, nullptr)) {
      throw DataError("cannot write PNG '" + path.string() + "': " + image.message);
    }
  } else {
    throw DataError("unsupported image format '" + path.string() + "'");
  }
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: '" + dir.string() + "'");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && is_image_path(e.path())) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  return out;
}

}  // namespace osfr
