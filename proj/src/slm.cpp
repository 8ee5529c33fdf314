#include "oam3/slm.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace oam3 {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double mod_2pi(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

Eigen::ArrayXXcd lg_complex(int ell, double waist_m, const PixelGrid& grid) {
  Eigen::ArrayXXcd f(grid.height, grid.width);
  const int al = std::abs(ell);
  for (int j = 0; j < grid.height; ++j) {
    for (int i = 0; i < grid.width; ++i) {
      const double x = grid.x(i), y = grid.y(j);
      const double r = std::hypot(x, y);
      const double az = std::atan2(y, x);
      const double radial =
          std::pow(r * std::sqrt(2.0) / waist_m, al) *
          std::exp(-(r * r) / (waist_m * waist_m));
      f(j, i) = std::polar(radial, ell * az);
    }
  }
  return f;
}

FieldSample field_from_complex(const Eigen::ArrayXXcd& f,
                               const PixelGrid& grid) {
  FieldSample out;
  out.grid = grid;
  out.amplitude = f.abs();
  const double peak = out.amplitude.maxCoeff();
  if (peak > 0) out.amplitude /= peak;
  out.phase.resize(grid.height, grid.width);
  for (int j = 0; j < grid.height; ++j)
    for (int i = 0; i < grid.width; ++i)
      out.phase(j, i) = std::arg(f(j, i));
  return out;
}

}  // namespace

FieldSample lg_field(int ell, int p, double waist_m, const PixelGrid& grid) {
  if (p != 0)
    throw std::invalid_argument("lg_field: only the p = 0 radial order is supported");
  if (waist_m <= 0)
    throw std::invalid_argument("lg_field: waist must be positive");
  return field_from_complex(lg_complex(ell, waist_m, grid), grid);
}

FieldSample superpose_fields(const std::vector<OamComponent>& components,
                             double waist_m, const PixelGrid& grid) {
  if (components.empty())
    throw std::invalid_argument("superpose_fields: no components");
  if (waist_m <= 0)
    throw std::invalid_argument("superpose_fields: waist must be positive");
  Eigen::ArrayXXcd sum = Eigen::ArrayXXcd::Zero(grid.height, grid.width);
  for (const auto& c : components)
    sum += c.weight * lg_complex(c.ell, waist_m, grid);
  return field_from_complex(sum, grid);
}

double sinc_inverse(double a) {
  if (a < 0.0 || a > 1.0)
    throw std::invalid_argument("sinc_inverse: amplitude outside [0, 1]");
  if (a == 1.0) return 0.0;
  if (a == 0.0) return -kPi;
  auto sinc = [](double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; };
  // sinc rises monotonically from 0 to 1 on [-pi, 0]
  double lo = -kPi, hi = 0.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sinc(mid) < a) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

Hologram build_hologram(const FieldSample& field, double grating_period_px,
                        HologramFormula formula) {
  if (grating_period_px < 2.0)
    throw std::invalid_argument("build_hologram: grating period below 2 px");
  if ((field.amplitude < 0.0).any() || (field.amplitude > 1.0).any())
    throw std::invalid_argument("build_hologram: amplitude outside [0, 1]");

  Hologram holo;
  holo.grid = field.grid;
  holo.grating_period_px = grating_period_px;
  holo.phase.resize(field.grid.height, field.grid.width);

  for (int j = 0; j < field.grid.height; ++j) {
    for (int i = 0; i < field.grid.width; ++i) {
      const double l = 1.0 + sinc_inverse(field.amplitude(j, i)) / kPi;
      const double f = (formula == HologramFormula::kProductPhase)
                           ? field.phase(j, i) * kPi * l
                           : field.phase(j, i) - kPi * l;
      double psi = l * mod_2pi(f + kTwoPi * i / grating_period_px);
      if (psi >= kTwoPi) psi = 0.0;
      holo.phase(j, i) = psi;
    }
  }
  return holo;
}

Hologram phase_flatten_mask(int ell, const PixelGrid& grid,
                            double grating_period_px, HologramFormula formula) {
  if (std::abs(ell) > 2)
    throw std::invalid_argument("phase_flatten_mask: |l| <= 2 supported");
  FieldSample f;
  f.grid = grid;
  f.amplitude = Eigen::ArrayXXd::Ones(grid.height, grid.width);
  f.phase.resize(grid.height, grid.width);
  for (int j = 0; j < grid.height; ++j)
    for (int i = 0; i < grid.width; ++i)
      f.phase(j, i) = -ell * std::atan2(grid.y(j), grid.x(i));
  return build_hologram(f, grating_period_px, formula);
}

double winding_number(const FieldSample& field, double radius_px) {
  const int cx = field.grid.width / 2;
  const int cy = field.grid.height / 2;
  const int steps = 720;
  double total = 0.0;
  double prev = 0.0;
  for (int s = 0; s <= steps; ++s) {
    const double ang = kTwoPi * s / steps;
    const int i = cx + static_cast<int>(std::lround(radius_px * std::cos(ang)));
    const int j = cy + static_cast<int>(std::lround(radius_px * std::sin(ang)));
    const double ph = field.phase(j, i);
    if (s > 0) {
      double d = ph - prev;
      while (d > kPi) d -= kTwoPi;
      while (d < -kPi) d += kTwoPi;
      total += d;
    }
    prev = ph;
  }
  return total / kTwoPi;
}

void write_pgm(const Hologram& holo, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "P5\n" << holo.grid.width << ' ' << holo.grid.height << "\n255\n";
  for (int j = 0; j < holo.grid.height; ++j)
    for (int i = 0; i < holo.grid.width; ++i) {
      const double v = std::floor(holo.phase(j, i) / kTwoPi * 255.0 + 0.5);
      out.put(static_cast<char>(
          static_cast<unsigned char>(std::clamp(v, 0.0, 255.0))));
    }
}

void write_phase_csv(const Hologram& holo, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "# hologram phase values in radians, " << holo.grid.height
      << " rows x " << holo.grid.width << " columns\n";
  out.precision(17);
  for (int j = 0; j < holo.grid.height; ++j) {
    for (int i = 0; i < holo.grid.width; ++i) {
      if (i) out << ',';
      out << holo.phase(j, i);
    }
    out << '\n';
  }
}

}  // namespace oam3
