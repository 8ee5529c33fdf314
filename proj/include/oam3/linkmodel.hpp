#pragma once
/*
 * Parametric model of the fiber distribution link: SPDC source state,
 * parity dephasing from intermodal dispersion (with precompensation),
 * uniform mode crosstalk, the OAM <-> fiber-vector-mode basis map, and
 * Gaussian peak fitting of delay scans.
 */

#include "oam3/qstate.hpp"
#include "oam3/witness.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace oam3 {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kChannelTpTol = 1e-9;

/// Complex weights of the three anticorrelated SPDC terms; normalized on
/// construction.
struct SpiralCoefficients {
  cxd c00, c1m1, cm11;

  SpiralCoefficients(cxd c00_, cxd c1m1_, cxd cm11_);
  static SpiralCoefficients balanced();
};

struct LinkParameters {
  double tau_disp_s = 2.4e-9;     // even/odd-parity group delay in the fiber
  double tau_comp_s = 0.0;        // precompensation delay
  double filter_bandwidth_m = 0.5e-9;
  double center_wavelength_m = 1550e-9;
  double crosstalk = 0.0;         // in [0, 1]

  void validate() const;
  double tau_effective_s() const { return tau_disp_s - tau_comp_s; }
};

/// Trace-preserving qutrit channel given by Kraus operators.
struct QuantumChannel {
  std::vector<Mat3c> kraus;
  std::string label;

  /// Validates sum K^dag K = I to kChannelTpTol.
  static QuantumChannel make(std::vector<Mat3c> kraus, std::string label);
  static QuantumChannel identity();

  /// Apply to a single-qutrit state.
  DensityMatrix apply(const DensityMatrix& rho) const;
};

/// C_00 |0,0> + C_1,-1 |1,-1> + C_-1,1 |-1,1>
BipartiteKet spdc_state(const SpiralCoefficients& c);

/// t_c = lambda0^2 / (c * dlambda)
double coherence_time(double filter_bandwidth_m, double center_wavelength_m);

/// exp(-(tau_eff / t_c)^2); underflows to 0 for strongly uncompensated links.
double dephasing_gamma(const LinkParameters& p);

/// Parity dephasing: coherences between {|0>} and {|+-1>} scale by gamma,
/// everything else untouched.  Kraus set
/// { sqrt((1+g)/2) I, sqrt((1-g)/2) (P_even - P_odd) }.
QuantumChannel dephasing_channel(const LinkParameters& p);

/// rho -> (1-eps) rho + eps * mean over the 6 OAM-label permutations.
QuantumChannel crosstalk_channel(double eps);

/// Apply a qutrit channel to one side of a two-qutrit state.
DensityMatrix apply_channel(const DensityMatrix& rho, const QuantumChannel& ch,
                            Side which);

/// Unitary map between the four OAM/polarization states of the |l|=1 group
/// and the LP11 vector modes.  Basis orders:
///   OAM:   (+1,+), (+1,-), (-1,+), (-1,-)    [pol = circular +/-]
///   fiber: HE21_even, HE21_odd, TM01, TE01
class FiberModeMap {
 public:
  FiberModeMap();
  /// Column r = fiber-mode amplitudes of OAM state r.
  const Eigen::Matrix4cd& matrix() const { return c_; }

 private:
  Eigen::Matrix4cd c_;
};

/// Fiber-mode amplitudes of an OAM state; ell in {-1, +1}, pol in {-1, +1}.
Eigen::Vector4cd oam_to_fiber(int ell, int pol);
/// OAM-basis amplitudes of a fiber-mode vector (inverse map).
Eigen::Vector4cd fiber_to_oam(const Eigen::Vector4cd& fiber_amplitudes);

struct DelayScanPoint {
  double delay_s = 0.0;
  double rate_00 = 0.0;
  double rate_m11 = 0.0;
};

struct GaussianPeakFit {
  double amplitude = 0.0;
  double center = 0.0;
  double width = 0.0;  // Gaussian sigma
  double offset = 0.0;
  double rms_residual = 0.0;
  bool converged = false;
};

struct DispersionFit {
  double delta_t_s = 0.0;  // center(rate_m11) - center(rate_00)
  GaussianPeakFit fit_00;
  GaussianPeakFit fit_m11;
};

/// Least-squares Gaussian fit to both normalized coincidence curves; throws
/// on fewer than 5 points or flat (degenerate) data.
DispersionFit fit_dispersion(const std::vector<DelayScanPoint>& scan);

/// CSV columns delay_s, rate_00, rate_m11; '#' comments; optional header.
std::vector<DelayScanPoint> load_delay_scan_csv(
    const std::filesystem::path& file);

struct LinkSimulation {
  DensityMatrix rho_out = DensityMatrix::maximally_mixed(9);
  WitnessReport report;
};

/// Source -> Bob-side dephasing -> Bob-side crosstalk -> witness evaluation.
LinkSimulation simulate_link(const SpiralCoefficients& source,
                             const LinkParameters& p,
                             const WitnessOptions& wopts = {});

}  // namespace oam3
