#pragma once
/*
 * Amplitude-and-phase SLM holograms for OAM superpositions: Laguerre-Gauss
 * fields at the waist plane, the blazed-grating encoding
 *   Psi = L * Mod(F + 2 pi x / Lambda, 2 pi)
 * with L = 1 + sinc^{-1}(A)/pi (inverse on [-pi, 0], so 0 <= L <= 1), and
 * the conjugate phase-flattening analysis masks.
 */

#include <Eigen/Dense>

#include <complex>
#include <filesystem>
#include <vector>

namespace oam3 {

struct PixelGrid {
  int width = 512;
  int height = 512;
  double pitch_m = 8e-6;

  // pixel (i, j) sits at ((i - width/2) * pitch, (j - height/2) * pitch);
  // even sizes put a pixel exactly on the optical axis
  double x(int i) const { return (i - width / 2) * pitch_m; }
  double y(int j) const { return (j - height / 2) * pitch_m; }
};

/// Real amplitude in [0, 1] plus phase per pixel.
struct FieldSample {
  PixelGrid grid;
  Eigen::ArrayXXd amplitude;  // (height, width)
  Eigen::ArrayXXd phase;
};

/// One OAM component of a target superposition.
struct OamComponent {
  int ell = 0;
  std::complex<double> weight{1.0, 0.0};
};

/// Laguerre-Gauss mode (p = 0 only) at the waist; amplitude normalized to
/// max 1 on the grid.  Throws for p != 0 or non-positive waist.
FieldSample lg_field(int ell, int p, double waist_m, const PixelGrid& grid);

/// Pointwise complex sum of LG fields, renormalized to max amplitude 1.
FieldSample superpose_fields(const std::vector<OamComponent>& components,
                             double waist_m, const PixelGrid& grid);

struct Hologram {
  PixelGrid grid;
  Eigen::ArrayXXd phase;  // values in [0, 2pi)
  double grating_period_px = 8.0;
};

/// Which phase-modulation function to encode.  kProductPhase is
/// F = phi * pi * L; kOffsetPhase is the F = phi - pi * L variant.
enum class HologramFormula { kProductPhase, kOffsetPhase };

/// sin(x)/x inverse on the branch [-pi, 0]; bisection to 1e-12.
/// Throws outside [0, 1].
double sinc_inverse(double a);

/// Throws if the grating period is below 2 px or amplitudes leave [0, 1].
Hologram build_hologram(const FieldSample& field, double grating_period_px,
                        HologramFormula formula = HologramFormula::kProductPhase);

/// Analysis mask: unit amplitude, phase -ell * azimuth (conjugate vortex).
/// Supported for |ell| <= 2.
Hologram phase_flatten_mask(int ell, const PixelGrid& grid,
                            double grating_period_px = 8.0,
                            HologramFormula formula = HologramFormula::kProductPhase);

/// Sum of wrapped phase steps around a centered circle, divided by 2 pi.
double winding_number(const FieldSample& field, double radius_px);

/// 8-bit binary PGM (P5), value = round-half-up of phase / 2pi * 255.
void write_pgm(const Hologram& holo, const std::filesystem::path& file);
/// Raw radian values, one CSV row per pixel row.
void write_phase_csv(const Hologram& holo, const std::filesystem::path& file);

}  // namespace oam3
