#include "osfr/transforms.hpp"

#include <algorithm>
#include <cmath>

#include "osfr/errors.hpp"

namespace osfr {

using nlohmann::json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

std::uint8_t to_byte(double v) noexcept {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

int reflect101(int i, int n) noexcept {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

// Bilinear sample with edge replication.
double sample_replicate(const RasterImage& img, double x, double y, int c) noexcept {
  const int w = img.width(), h = img.height();
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double ax = x - x0, ay = y - y0;
  const double top = img.at(x0, y0, c) * (1.0 - ax) + img.at(x1, y0, c) * ax;
  const double bottom = img.at(x0, y1, c) * (1.0 - ax) + img.at(x1, y1, c) * ax;
  return top * (1.0 - ay) + bottom * ay;
}

template <typename SourceFn>
RasterImage remap(const RasterImage& img, SourceFn&& source_of) {
  RasterImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const auto [sx, sy] = source_of(x, y);
      for (int c = 0; c < RasterImage::kChannels; ++c) {
        out.at(x, y, c) = to_byte(sample_replicate(img, sx, sy, c));
      }
    }
  }
  return out;
}

RasterImage apply_hflip(const RasterImage& img) {
  RasterImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) out.at(img.width() - 1 - x, y, c) = img.at(x, y, c);
    }
  }
  return out;
}

RasterImage apply_occlusion(const RasterImage& img, const Occlusion& o) {
  RasterImage out = img;
  const int x0 = std::max(o.x, 0), y0 = std::max(o.y, 0);
  const int x1 = std::min(o.x + o.w, img.width()), y1 = std::min(o.y + o.h, img.height());
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = 0;
    }
  }
  return out;
}

RasterImage apply_color_jitter(const RasterImage& img, const ColorJitter& j) {
  std::vector<double> v(img.data().begin(), img.data().end());
  const auto clamp255 = [](double x) { return std::clamp(x, 0.0, 255.0); };
  for (double& x : v) x = clamp255(x * j.brightness);

  std::array<double, 3> mean{};
  for (std::size_t i = 0; i < v.size(); ++i) mean[i % 3] += v[i];
  for (double& m : mean) m /= static_cast<double>(img.pixel_count());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = clamp255(mean[i % 3] + j.contrast * (v[i] - mean[i % 3]));
  }

  for (std::size_t p = 0; p < v.size(); p += 3) {
    const double l = luma(v[p], v[p + 1], v[p + 2]);
    for (std::size_t c = 0; c < 3; ++c) v[p + c] = clamp255(l + j.saturation * (v[p + c] - l));
  }

  RasterImage out(img.width(), img.height());
  std::transform(v.begin(), v.end(), out.data().begin(), to_byte);
  return out;
}

// Equal-size tiles over the image padded (reflect-101) up to a multiple of
// the tile count, so every tile histogram has the same area.
struct TileGrid {
  int nx, ny;
  int tw, th;
  TileGrid(int tiles_x, int tiles_y, int width, int height) noexcept
      : nx(tiles_x), ny(tiles_y), tw((width + tiles_x - 1) / tiles_x),
        th((height + tiles_y - 1) / tiles_y) {}
};

// Tile index and weight of the next tile for a pixel coordinate, with tile
// centers as interpolation nodes.
std::pair<int, double> tile_coord(int p, int tile_size, int tiles) noexcept {
  const double t = (p + 0.5) / tile_size - 0.5;
  if (t <= 0.0) return {0, 0.0};
  if (t >= tiles - 1) return {tiles - 1, 0.0};
  const int i = static_cast<int>(std::floor(t));
  return {i, t - i};
}

RasterImage apply_clahe(const RasterImage& img, const Clahe& cl) {
  const int w = img.width(), h = img.height();
  const TileGrid grid{std::min(cl.tiles, w), std::min(cl.tiles, h), w, h};

  std::vector<std::uint8_t> y_q(img.pixel_count());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      y_q[static_cast<std::size_t>(y) * w + x] =
          to_byte(luma(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2)));
    }
  }

  std::vector<std::array<std::uint8_t, 256>> luts(static_cast<std::size_t>(grid.nx * grid.ny));
  for (int ty = 0; ty < grid.ny; ++ty) {
    for (int tx = 0; tx < grid.nx; ++tx) {
      std::array<std::uint32_t, 256> hist{};
      for (int py = ty * grid.th; py < (ty + 1) * grid.th; ++py) {
        const int y = reflect101(py, h);
        for (int px = tx * grid.tw; px < (tx + 1) * grid.tw; ++px) {
          ++hist[y_q[static_cast<std::size_t>(y) * w + reflect101(px, w)]];
        }
      }
      const auto area = static_cast<std::uint32_t>(grid.tw * grid.th);
      const auto limit = std::max<std::uint32_t>(
          1, static_cast<std::uint32_t>(cl.clip_limit * area / 256.0));
      clip_histogram(hist, limit);
      auto& lut = luts[static_cast<std::size_t>(ty * grid.nx + tx)];
      std::uint64_t cdf = 0;
      for (int v = 0; v < 256; ++v) {
        cdf += hist[v];
        lut[v] = to_byte(static_cast<double>(cdf) * 255.0 / area);
      }
    }
  }

  RasterImage out(w, h);
  for (int y = 0; y < h; ++y) {
    const auto [ty0, ay] = tile_coord(y, grid.th, grid.ny);
    const int ty1 = std::min(ty0 + 1, grid.ny - 1);
    for (int x = 0; x < w; ++x) {
      const auto [tx0, ax] = tile_coord(x, grid.tw, grid.nx);
      const int tx1 = std::min(tx0 + 1, grid.nx - 1);
      const std::uint8_t v = y_q[static_cast<std::size_t>(y) * w + x];
      const auto lut = [&](int tx, int ty) -> double {
        return luts[static_cast<std::size_t>(ty * grid.nx + tx)][v];
      };
      const double mapped = (lut(tx0, ty0) * (1.0 - ax) + lut(tx1, ty0) * ax) * (1.0 - ay) +
                            (lut(tx0, ty1) * (1.0 - ax) + lut(tx1, ty1) * ax) * ay;
      const double delta = mapped - v;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = to_byte(img.at(x, y, c) + delta);
    }
  }
  return out;
}

RasterImage apply_blur(const RasterImage& img, const GaussianBlur& b) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * b.sigma)));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double k = std::exp(-0.5 * i * i / (b.sigma * b.sigma));
    kernel[static_cast<std::size_t>(i + radius)] = k;
    sum += k;
  }
  for (double& k : kernel) k /= sum;

  const int w = img.width(), h = img.height();
  std::vector<double> tmp(img.data().size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          acc += kernel[static_cast<std::size_t>(i + radius)] * img.at(reflect101(x + i, w), y, c);
        }
        tmp[(static_cast<std::size_t>(y) * w + x) * 3 + c] = acc;
      }
    }
  }
  RasterImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int yy = reflect101(y + i, h);
          acc += kernel[static_cast<std::size_t>(i + radius)] *
                 tmp[(static_cast<std::size_t>(yy) * w + x) * 3 + c];
        }
        out.at(x, y, c) = to_byte(acc);
      }
    }
  }
  return out;
}

// Area-weighted 1-D resampling weights from `n` source cells to `m` cells.
std::vector<std::vector<std::pair<int, double>>> area_weights(int n, int m) {
  std::vector<std::vector<std::pair<int, double>>> out(static_cast<std::size_t>(m));
  const double scale = static_cast<double>(n) / m;
  for (int i = 0; i < m; ++i) {
    const double lo = i * scale, hi = (i + 1) * scale;
    for (int s = static_cast<int>(std::floor(lo)); s < n && s < hi; ++s) {
      const double overlap = std::min(hi, s + 1.0) - std::max(lo, static_cast<double>(s));
      if (overlap > 0.0) out[static_cast<std::size_t>(i)].emplace_back(s, overlap / scale);
    }
  }
  return out;
}

RasterImage apply_downscale(const RasterImage& img, const Downscale& d) {
  const int w = img.width(), h = img.height();
  const int dw = std::max(1, static_cast<int>(std::floor(w * d.factor + 0.5)));
  const int dh = std::max(1, static_cast<int>(std::floor(h * d.factor + 0.5)));
  const auto wx = area_weights(w, dw);
  const auto wy = area_weights(h, dh);

  std::vector<double> rows(static_cast<std::size_t>(dw) * h * 3, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < dw; ++x) {
      for (const auto& [s, wt] : wx[static_cast<std::size_t>(x)]) {
        for (int c = 0; c < 3; ++c) {
          rows[(static_cast<std::size_t>(y) * dw + x) * 3 + c] += wt * img.at(s, y, c);
        }
      }
    }
  }
  RasterImage small(dw, dh);
  for (int y = 0; y < dh; ++y) {
    for (int x = 0; x < dw; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (const auto& [s, wt] : wy[static_cast<std::size_t>(y)]) {
          acc += wt * rows[(static_cast<std::size_t>(s) * dw + x) * 3 + c];
        }
        small.at(x, y, c) = to_byte(acc);
      }
    }
  }

  const double sx = static_cast<double>(dw) / w, sy = static_cast<double>(dh) / h;
  RasterImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double fx = (x + 0.5) * sx - 0.5, fy = (y + 0.5) * sy - 0.5;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = to_byte(sample_replicate(small, fx, fy, c));
    }
  }
  return out;
}

RasterImage apply_noise(const RasterImage& img, const GaussNoise& n, CounterRng& rng) {
  RasterImage out(img.width(), img.height());
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = to_byte(src[i] + n.std * rng.normal());
  return out;
}

RasterImage apply_optical(const RasterImage& img, const OpticalDistortion& o) {
  const double cx = (img.width() - 1) / 2.0, cy = (img.height() - 1) / 2.0;
  double norm2 = cx * cx + cy * cy;
  if (norm2 == 0.0) norm2 = 1.0;
  return remap(img, [&](int x, int y) {
    const double dx = x - cx, dy = y - cy;
    const double scale = o.k * (dx * dx + dy * dy) / norm2;
    return std::pair{x + dx * scale, y + dy * scale};
  });
}

RasterImage apply_grid(const RasterImage& img, const GridDistortion& g, CounterRng& rng) {
  const int nodes = g.cells + 1;
  const double cell_w = static_cast<double>(img.width()) / g.cells;
  const double cell_h = static_cast<double>(img.height()) / g.cells;
  std::vector<std::pair<double, double>> disp(static_cast<std::size_t>(nodes * nodes), {0.0, 0.0});
  for (int j = 1; j < g.cells; ++j) {
    for (int i = 1; i < g.cells; ++i) {
      auto& d = disp[static_cast<std::size_t>(j * nodes + i)];
      d.first = rng.uniform(-g.limit * cell_w, g.limit * cell_w);
      d.second = rng.uniform(-g.limit * cell_h, g.limit * cell_h);
    }
  }
  return remap(img, [&](int x, int y) {
    const double gx = x / cell_w, gy = y / cell_h;
    const int i = std::min(static_cast<int>(gx), g.cells - 1);
    const int j = std::min(static_cast<int>(gy), g.cells - 1);
    const double a = gx - i, b = gy - j;
    const auto node = [&](int ii, int jj) { return disp[static_cast<std::size_t>(jj * nodes + ii)]; };
    const auto [d00x, d00y] = node(i, j);
    const auto [d10x, d10y] = node(i + 1, j);
    const auto [d01x, d01y] = node(i, j + 1);
    const auto [d11x, d11y] = node(i + 1, j + 1);
    const double ddx = (d00x * (1 - a) + d10x * a) * (1 - b) + (d01x * (1 - a) + d11x * a) * b;
    const double ddy = (d00y * (1 - a) + d10y * a) * (1 - b) + (d01y * (1 - a) + d11y * a) * b;
    return std::pair{x + ddx, y + ddy};
  });
}

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void clip_histogram(std::array<std::uint32_t, 256>& hist, std::uint32_t limit) {
  std::uint64_t excess = 0;
  for (auto& h : hist) {
    if (h > limit) {
      excess += h - limit;
      h = limit;
    }
  }
  const auto per_bin = static_cast<std::uint32_t>(excess / 256);
  std::uint32_t residual = static_cast<std::uint32_t>(excess % 256);
  for (auto& h : hist) h += per_bin;
  if (residual > 0) {
    const std::uint32_t step = std::max<std::uint32_t>(256 / residual, 1);
    for (std::uint32_t i = 0; i < 256 && residual > 0; i += step, --residual) ++hist[i];
  }
}

std::string_view transform_name(const TransformSpec& t) noexcept {
  return std::visit(Overloaded{
                        [](const HFlip&) { return std::string_view("hflip"); },
                        [](const Occlusion&) { return std::string_view("occlusion"); },
                        [](const ColorJitter&) { return std::string_view("color_jitter"); },
                        [](const Clahe&) { return std::string_view("clahe"); },
                        [](const GaussianBlur&) { return std::string_view("gaussian_blur"); },
                        [](const Downscale&) { return std::string_view("downscale"); },
                        [](const GaussNoise&) { return std::string_view("gauss_noise"); },
                        [](const OpticalDistortion&) { return std::string_view("optical_distortion"); },
                        [](const GridDistortion&) { return std::string_view("grid_distortion"); },
                    },
                    t);
}

void validate(const TransformSpec& t) {
  const auto require = [&](bool ok, const char* what) {
    if (!ok) throw UsageError(std::string(transform_name(t)) + ": " + what);
  };
  std::visit(Overloaded{
                 [](const HFlip&) {},
                 [&](const Occlusion& o) { require(o.w > 0 && o.h > 0, "rectangle must be non-empty"); },
                 [&](const ColorJitter& j) {
                   require(positive_finite(j.brightness) && positive_finite(j.contrast) &&
                               positive_finite(j.saturation),
                           "factors must be positive");
                 },
                 [&](const Clahe& c) {
                   require(positive_finite(c.clip_limit), "clip limit must be positive");
                   require(c.tiles >= 1, "tiles must be at least 1");
                 },
                 [&](const GaussianBlur& b) { require(positive_finite(b.sigma), "sigma must be positive"); },
                 [&](const Downscale& d) {
                   require(d.factor > 0.0 && d.factor < 1.0, "factor must lie in (0, 1)");
                 },
                 [&](const GaussNoise& n) {
                   require(std::isfinite(n.std) && n.std >= 0.0, "std must be non-negative");
                 },
                 [&](const OpticalDistortion& o) { require(std::isfinite(o.k), "k must be finite"); },
                 [&](const GridDistortion& g) {
                   require(g.cells >= 2, "cells must be at least 2");
                   require(g.limit >= 0.0 && g.limit < 1.0, "limit must lie in [0, 1)");
                 },
             },
             t);
}

json to_json(const TransformSpec& t) {
  json j = std::visit(Overloaded{
                          [](const HFlip&) { return json::object(); },
                          [](const Occlusion& o) {
                            return json{{"x", o.x}, {"y", o.y}, {"w", o.w}, {"h", o.h}};
                          },
                          [](const ColorJitter& c) {
                            return json{{"brightness", c.brightness},
                                        {"contrast", c.contrast},
                                        {"saturation", c.saturation}};
                          },
                          [](const Clahe& c) {
                            return json{{"clip_limit", c.clip_limit}, {"tiles", c.tiles}};
                          },
                          [](const GaussianBlur& b) { return json{{"sigma", b.sigma}}; },
                          [](const Downscale& d) { return json{{"factor", d.factor}}; },
                          [](const GaussNoise& n) { return json{{"std", n.std}}; },
                          [](const OpticalDistortion& o) { return json{{"k", o.k}}; },
                          [](const GridDistortion& g) {
                            return json{{"cells", g.cells}, {"limit", g.limit}};
                          },
                      },
                      t);
  j["op"] = transform_name(t);
  return j;
}

TransformSpec transform_from_json(const json& j) {
  TransformSpec t;
  try {
    const auto op = j.at("op").get<std::string>();
    if (op == "hflip") {
      t = HFlip{};
    } else if (op == "occlusion") {
      t = Occlusion{j.at("x").get<int>(), j.at("y").get<int>(), j.at("w").get<int>(),
                    j.at("h").get<int>()};
    } else if (op == "color_jitter") {
      t = ColorJitter{j.at("brightness").get<double>(), j.at("contrast").get<double>(),
                      j.at("saturation").get<double>()};
    } else if (op == "clahe") {
      t = Clahe{j.at("clip_limit").get<double>(), j.at("tiles").get<int>()};
    } else if (op == "gaussian_blur") {
      t = GaussianBlur{j.at("sigma").get<double>()};
    } else if (op == "downscale") {
      t = Downscale{j.at("factor").get<double>()};
    } else if (op == "gauss_noise") {
      t = GaussNoise{j.at("std").get<double>()};
    } else if (op == "optical_distortion") {
      t = OpticalDistortion{j.at("k").get<double>()};
    } else if (op == "grid_distortion") {
      t = GridDistortion{j.at("cells").get<int>(), j.at("limit").get<double>()};
    } else {
      throw DataError("unknown transform '" + op + "'");
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed transform: ") + e.what());
  }
  try {
    validate(t);
  } catch (const UsageError& e) {
    throw DataError(e.what());
  }
  return t;
}

RasterImage apply(const RasterImage& img, const TransformSpec& t, CounterRng& rng) {
  validate(t);
  return std::visit(Overloaded{
                        [&](const HFlip&) { return apply_hflip(img); },
                        [&](const Occlusion& o) { return apply_occlusion(img, o); },
                        [&](const ColorJitter& c) { return apply_color_jitter(img, c); },
                        [&](const Clahe& c) { return apply_clahe(img, c); },
                        [&](const GaussianBlur& b) { return apply_blur(img, b); },
                        [&](const Downscale& d) { return apply_downscale(img, d); },
                        [&](const GaussNoise& n) { return apply_noise(img, n, rng); },
                        [&](const OpticalDistortion& o) { return apply_optical(img, o); },
                        [&](const GridDistortion& g) { return apply_grid(img, g, rng); },
                    },
                    t);
}

json to_json(const Chain& c) {
  json ops = json::array();
  for (const auto& t : c.ops) ops.push_back(to_json(t));
  return json{{"seed", c.seed}, {"ops", std::move(ops)}};
}

Chain chain_from_json(const json& j) {
  Chain c;
  try {
    c.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& t : j.at("ops")) c.ops.push_back(transform_from_json(t));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed chain: ") + e.what());
  }
  return c;
}

RasterImage apply_chain(const RasterImage& img, const Chain& chain) {
  CounterRng rng(chain.seed);
  RasterImage out = img;
  for (const auto& t : chain.ops) out = apply(out, t, rng);
  return out;
}

}  // namespace osfr
