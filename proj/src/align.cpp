#include "osfr/align.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "osfr/errors.hpp"

namespace osfr {

AffineTransform AffineTransform::inverse() const {
  const double det = determinant();
  const double scale = std::abs(a) + std::abs(b) + std::abs(c) + std::abs(d);
  if (!std::isfinite(det) || std::abs(det) <= 1e-12 * scale * scale) {
    throw DataError("affine transform is singular");
  }
  AffineTransform inv;
  inv.a = d / det;
  inv.b = -b / det;
  inv.c = -c / det;
  inv.d = a / det;
  inv.tx = -(inv.a * tx + inv.b * ty);
  inv.ty = -(inv.c * tx + inv.d * ty);
  return inv;
}

namespace {

Point2 centroid(std::span<const Point2> pts) {
  Point2 m;
  for (const auto& p : pts) {
    m.x += p.x;
    m.y += p.y;
  }
  m.x /= static_cast<double>(pts.size());
  m.y /= static_cast<double>(pts.size());
  return m;
}

AffineTransform fit_similarity(std::span<const Point2> src, std::span<const Point2> dst) {
  const Point2 ms = centroid(src), md = centroid(dst);
  double sxx = 0.0, num_a = 0.0, num_b = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double px = src[i].x - ms.x, py = src[i].y - ms.y;
    const double qx = dst[i].x - md.x, qy = dst[i].y - md.y;
    sxx += px * px + py * py;
    num_a += px * qx + py * qy;
    num_b += px * qy - py * qx;
  }
  if (sxx <= 1e-12) throw DataError("landmarks are coincident");
  AffineTransform t;
  t.a = num_a / sxx;
  t.b = -num_b / sxx;
  t.c = num_b / sxx;
  t.d = num_a / sxx;
  t.tx = md.x - t.a * ms.x - t.b * ms.y;
  t.ty = md.y - t.c * ms.x - t.d * ms.y;
  return t;
}

}  // namespace

AffineTransform fit_affine(std::span<const Point2> src, std::span<const Point2> dst) {
  if (src.size() != dst.size()) throw UsageError("landmark sets differ in size");
  if (src.size() < 2) throw UsageError("need at least two landmarks");
  if (src.size() == 2) return fit_similarity(src, dst);

  // Centered design: the translation column decouples, leaving a 2x2 system
  // M [a b]^T = r_x and M [c d]^T = r_y with M = sum p p^T.
  const Point2 ms = centroid(src), md = centroid(dst);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  double rxx = 0.0, rxy = 0.0, ryx = 0.0, ryy = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double px = src[i].x - ms.x, py = src[i].y - ms.y;
    const double qx = dst[i].x - md.x, qy = dst[i].y - md.y;
    sxx += px * px;
    sxy += px * py;
    syy += py * py;
    rxx += px * qx;
    rxy += py * qx;
    ryx += px * qy;
    ryy += py * qy;
  }
  const double det = sxx * syy - sxy * sxy;
  const double trace = sxx + syy;
  if (trace <= 0.0 || det <= 1e-10 * trace * trace) {
    throw DataError("landmarks are collinear; affine fit is degenerate");
  }
  AffineTransform t;
  t.a = (syy * rxx - sxy * rxy) / det;
  t.b = (sxx * rxy - sxy * rxx) / det;
  t.c = (syy * ryx - sxy * ryy) / det;
  t.d = (sxx * ryy - sxy * ryx) / det;
  t.tx = md.x - t.a * ms.x - t.b * ms.y;
  t.ty = md.y - t.c * ms.x - t.d * ms.y;
  return t;
}

RasterImage warp_affine(const RasterImage& img, const AffineTransform& src_to_dst, int out_width,
                        int out_height) {
  const AffineTransform back = src_to_dst.inverse();
  const int w = img.width(), h = img.height();
  RasterImage out(out_width, out_height);
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      const Point2 s = back.apply({static_cast<double>(x), static_cast<double>(y)});
      // Tolerate rounding noise right at the border.
      constexpr double kEps = 1e-9;
      if (s.x < -kEps || s.y < -kEps || s.x > w - 1 + kEps || s.y > h - 1 + kEps) continue;
      const double sx = std::clamp(s.x, 0.0, static_cast<double>(w - 1));
      const double sy = std::clamp(s.y, 0.0, static_cast<double>(h - 1));
      const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
      const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
      const double ax = sx - x0, ay = sy - y0;
      for (int c = 0; c < 3; ++c) {
        const double v = (img.at(x0, y0, c) * (1 - ax) + img.at(x1, y0, c) * ax) * (1 - ay) +
                         (img.at(x0, y1, c) * (1 - ax) + img.at(x1, y1, c) * ax) * ay;
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
    }
  }
  return out;
}

RasterImage align_affine(const RasterImage& img, const LandmarkSet& src, const LandmarkSet& tmpl,
                         int out_width, int out_height) {
  const AffineTransform t = fit_affine(src, tmpl);
  return warp_affine(img, t, out_width > 0 ? out_width : img.width(),
                     out_height > 0 ? out_height : img.height());
}

std::map<std::string, LandmarkSet> parse_landmarks(std::istream& in, const std::string& source) {
  std::map<std::string, LandmarkSet> out;
  std::string line;
  std::size_t lineno = 0;
  std::size_t k = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::string id;
    if (!(fields >> id)) continue;
    std::vector<double> coords;
    double v;
    while (fields >> v) coords.push_back(v);
    if (!fields.eof()) throw ParseError(source, lineno, "non-numeric coordinate");
    if (coords.size() < 4 || coords.size() % 2 != 0) {
      throw ParseError(source, lineno, "expected 'image_id x1 y1 ... xk yk' with k >= 2");
    }
    LandmarkSet pts;
    for (std::size_t i = 0; i < coords.size(); i += 2) {
      if (!std::isfinite(coords[i]) || !std::isfinite(coords[i + 1])) {
        throw ParseError(source, lineno, "non-finite coordinate");
      }
      pts.push_back({coords[i], coords[i + 1]});
    }
    if (k == 0) k = pts.size();
    if (pts.size() != k) {
      throw ParseError(source, lineno, "expected " + std::to_string(k) + " landmarks");
    }
    if (!out.emplace(id, std::move(pts)).second) {
      throw ParseError(source, lineno, "duplicate image id '" + id + "'");
    }
  }
  if (out.empty()) throw DataError(source + ": no landmarks");
  return out;
}

std::map<std::string, LandmarkSet> load_landmarks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open landmarks '" + path.string() + "'");
  return parse_landmarks(in, path.string());
}

}  // namespace osfr
