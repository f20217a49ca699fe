#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ipm/geometry.hpp"

namespace ipm {

struct Rgb {
  std::uint8_t r{}, g{}, b{};
};

struct CanvasSpec {
  int width = 480;
  int height = 360;
  double mm_per_px = 0.25;
  int spot_radius_px = 3;
};

/// Piecewise-linear visible-spectrum approximation (380-780 nm);
/// wavelengths outside the visible ramp render gray.
Rgb wavelength_to_rgb(double lambda_nm);

struct Image {
  int width{}, height{};
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  void fill(Rgb c);
  void set(int x, int y, Rgb c);
  std::string ppm_bytes() const;  // binary PPM (P6)
  void write_ppm(const std::string& path) const;
};

struct RenderStats {
  int drawn = 0;
  int clipped = 0;
};

/// Plot spots as filled discs colored by wavelength on a black canvas with
/// the origin at the canvas center (+x right, +y up) and a spectrum legend
/// strip along the bottom; the strip ends in a gray block marking
/// out-of-visible wavelengths. Spots whose center leaves the drawable area
/// are not drawn and count as clipped. Byte-deterministic.
RenderStats render_map(std::span<const ScreenSpot> spots, const CanvasSpec& canvas,
                       Image& out);

}  // namespace ipm
