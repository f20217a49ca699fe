#include "ipm/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace ipm {

namespace {

constexpr int kLegendHeight = 14;
constexpr int kLegendGrayWidth = 24;
constexpr Rgb kOutOfVisible{128, 128, 128};

double ramp(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

Rgb wavelength_to_rgb(double lambda_nm) {
  if (lambda_nm < 380.0 || lambda_nm > 780.0) return kOutOfVisible;
  double r = 0, g = 0, b = 0;
  if (lambda_nm < 440.0) {
    r = (440.0 - lambda_nm) / 60.0;
    b = 1.0;
  } else if (lambda_nm < 490.0) {
    g = (lambda_nm - 440.0) / 50.0;
    b = 1.0;
  } else if (lambda_nm < 510.0) {
    g = 1.0;
    b = (510.0 - lambda_nm) / 20.0;
  } else if (lambda_nm < 580.0) {
    r = (lambda_nm - 510.0) / 70.0;
    g = 1.0;
  } else if (lambda_nm < 645.0) {
    r = 1.0;
    g = (645.0 - lambda_nm) / 65.0;
  } else {
    r = 1.0;
  }
  // fade at the ends of the visible range
  double s = 1.0;
  if (lambda_nm < 420.0)
    s = 0.3 + 0.7 * (lambda_nm - 380.0) / 40.0;
  else if (lambda_nm > 700.0)
    s = 0.3 + 0.7 * (780.0 - lambda_nm) / 80.0;
  auto q = [s](double v) {
    return static_cast<std::uint8_t>(std::lround(255.0 * std::pow(ramp(v * s), 0.8)));
  };
  return {q(r), q(g), q(b)};
}

void Image::fill(Rgb c) {
  for (std::size_t i = 0; i + 2 < rgb.size(); i += 3) {
    rgb[i] = c.r;
    rgb[i + 1] = c.g;
    rgb[i + 2] = c.b;
  }
}

void Image::set(int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const std::size_t i = 3 * (static_cast<std::size_t>(y) * width + x);
  rgb[i] = c.r;
  rgb[i + 1] = c.g;
  rgb[i + 2] = c.b;
}

std::string Image::ppm_bytes() const {
  std::string out = "P6\n" + std::to_string(width) + " " + std::to_string(height) +
                    "\n255\n";
  out.append(reinterpret_cast<const char*>(rgb.data()), rgb.size());
  return out;
}

void Image::write_ppm(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write image " + path);
  const std::string bytes = ppm_bytes();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

RenderStats render_map(std::span<const ScreenSpot> spots, const CanvasSpec& canvas,
                       Image& out) {
  out.width = canvas.width;
  out.height = canvas.height;
  out.rgb.assign(static_cast<std::size_t>(canvas.width) * canvas.height * 3, 0);

  RenderStats stats;
  const int drawable_h = canvas.height - kLegendHeight;
  const double cx = canvas.width / 2.0;
  const double cy = drawable_h / 2.0;
  const int r = canvas.spot_radius_px;

  for (const auto& s : spots) {
    const int px = static_cast<int>(std::lround(cx + s.x_mm / canvas.mm_per_px));
    const int py = static_cast<int>(std::lround(cy - s.y_mm / canvas.mm_per_px));
    if (px < 0 || px >= canvas.width || py < 0 || py >= drawable_h) {
      ++stats.clipped;
      continue;
    }
    const Rgb c = wavelength_to_rgb(s.lambda_nm);
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx)
        if (dx * dx + dy * dy <= r * r) {
          const int x = px + dx, y = py + dy;
          if (y < drawable_h) out.set(x, y, c);
        }
    ++stats.drawn;
  }

  // legend: separator line, spectrum ramp, gray out-of-visible marker
  for (int x = 0; x < canvas.width; ++x) out.set(x, drawable_h, Rgb{64, 64, 64});
  const int ramp_w = std::max(1, canvas.width - kLegendGrayWidth - 2);
  for (int y = drawable_h + 1; y < canvas.height; ++y)
    for (int x = 0; x < canvas.width; ++x) {
      if (x < ramp_w) {
        const double lam = 380.0 + (780.0 - 380.0) * x / (ramp_w - 1);
        out.set(x, y, wavelength_to_rgb(lam));
      } else if (x >= ramp_w + 2) {
        out.set(x, y, kOutOfVisible);
      }
    }
  return stats;
}

}  // namespace ipm
