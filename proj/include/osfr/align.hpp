#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "osfr/image.hpp"

namespace osfr {

struct Point2 {
  double x = 0.0, y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

using LandmarkSet = std::vector<Point2>;

// x' = a*x + b*y + tx,  y' = c*x + d*y + ty
struct AffineTransform {
  double a = 1.0, b = 0.0, tx = 0.0;
  double c = 0.0, d = 1.0, ty = 0.0;

  Point2 apply(Point2 p) const noexcept {
    return {a * p.x + b * p.y + tx, c * p.x + d * p.y + ty};
  }
  double determinant() const noexcept { return a * d - b * c; }
  // Throws DataError when the linear part is singular.
  AffineTransform inverse() const;
};

// Least-squares affine from src to dst via the normal equations (on centered
// source points). With exactly two points a similarity transform is fitted.
// Throws UsageError on mismatched or too few points, DataError on collinear
// (k >= 3) or coincident (k == 2) source points.
AffineTransform fit_affine(std::span<const Point2> src, std::span<const Point2> dst);

// Output pixel p samples the input at inverse(src_to_dst)(p), bilinearly.
// Samples outside the input are black.
RasterImage warp_affine(const RasterImage& img, const AffineTransform& src_to_dst, int out_width,
                        int out_height);

// Warps `img` so that `src` landmarks land on `tmpl`. Output has the input's
// size unless given.
RasterImage align_affine(const RasterImage& img, const LandmarkSet& src, const LandmarkSet& tmpl,
                         int out_width = 0, int out_height = 0);

// One line per image: `image_id x1 y1 ... xk yk`. All lines share k.
std::map<std::string, LandmarkSet> parse_landmarks(std::istream& in, const std::string& source);
std::map<std::string, LandmarkSet> load_landmarks(const std::filesystem::path& path);

}  // namespace osfr
