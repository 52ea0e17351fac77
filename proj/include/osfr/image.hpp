#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace osfr {

// 8-bit interleaved RGB, row-major.
class RasterImage {
 public:
  static constexpr int kChannels = 3;

  RasterImage(int width, int height, std::uint8_t fill = 0);
  // Throws UsageError when data.size() != width * height * 3.
  RasterImage(int width, int height, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  std::uint8_t& at(int x, int y, int c) noexcept { return data_[index(x, y, c)]; }
  std::uint8_t at(int x, int y, int c) const noexcept { return data_[index(x, y, c)]; }

  std::span<std::uint8_t> data() noexcept { return data_; }
  std::span<const std::uint8_t> data() const noexcept { return data_; }

  bool same_size(const RasterImage& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_;
  }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) * kChannels + static_cast<std::size_t>(c);
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> data_;
};

// PNG (".png") or binary PPM (".ppm"), chosen by extension. Throws DataError
// on unreadable or undecodable files.
RasterImage read_image(const std::filesystem::path& path);
void write_image(const RasterImage& img, const std::filesystem::path& path);

bool is_image_path(const std::filesystem::path& path);

// Image files directly inside `dir`, sorted by file name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

}  // namespace osfr
