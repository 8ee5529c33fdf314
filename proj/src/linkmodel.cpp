#include "oam3/linkmodel.hpp"

#include "oam3/optim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace oam3 {

SpiralCoefficients::SpiralCoefficients(cxd c00_, cxd c1m1_, cxd cm11_)
    : c00(c00_), c1m1(c1m1_), cm11(cm11_) {
  const double n = std::sqrt(std::norm(c00) + std::norm(c1m1) + std::norm(cm11));
  if (n < 1e-300)
    throw std::invalid_argument("SpiralCoefficients: all-zero coefficients");
  c00 /= n;
  c1m1 /= n;
  cm11 /= n;
}

SpiralCoefficients SpiralCoefficients::balanced() {
  return SpiralCoefficients(1.0, 1.0, 1.0);
}

void LinkParameters::validate() const {
  if (filter_bandwidth_m <= 0)
    throw std::invalid_argument("LinkParameters: bandwidth must be positive");
  if (center_wavelength_m <= 0)
    throw std::invalid_argument("LinkParameters: wavelength must be positive");
  if (crosstalk < 0 || crosstalk > 1)
    throw std::invalid_argument("LinkParameters: crosstalk outside [0,1]");
  if (!std::isfinite(tau_disp_s) || !std::isfinite(tau_comp_s))
    throw std::invalid_argument("LinkParameters: non-finite delay");
}

QuantumChannel QuantumChannel::make(std::vector<Mat3c> kraus,
                                    std::string label) {
  Mat3c s = Mat3c::Zero();
  for (const auto& k : kraus) s += k.adjoint() * k;
  if ((s - Mat3c::Identity()).cwiseAbs().maxCoeff() > kChannelTpTol)
    throw std::invalid_argument("QuantumChannel: Kraus set not trace preserving");
  return QuantumChannel{std::move(kraus), std::move(label)};
}

QuantumChannel QuantumChannel::identity() {
  return QuantumChannel{{Mat3c::Identity()}, "identity"};
}

DensityMatrix QuantumChannel::apply(const DensityMatrix& rho) const {
  if (rho.dim() != 3)
    throw std::invalid_argument("QuantumChannel::apply: expected 3x3 state");
  Mat3c out = Mat3c::Zero();
  for (const auto& k : kraus) out += k * rho.matrix() * k.adjoint();
  out = 0.5 * (out + out.adjoint().eval());
  return DensityMatrix::make(out);
}

BipartiteKet spdc_state(const SpiralCoefficients& c) {
  Vec9c amp = Vec9c::Zero();
  amp(pair_index(oam_index(0), oam_index(0))) = c.c00;
  amp(pair_index(oam_index(+1), oam_index(-1))) = c.c1m1;
  amp(pair_index(oam_index(-1), oam_index(+1))) = c.cm11;
  return BipartiteKet::from(amp);
}

double coherence_time(double filter_bandwidth_m, double center_wavelength_m) {
  if (filter_bandwidth_m <= 0 || center_wavelength_m <= 0)
    throw std::invalid_argument("coherence_time: inputs must be positive");
  return center_wavelength_m * center_wavelength_m /
         (kSpeedOfLight * filter_bandwidth_m);
}

double dephasing_gamma(const LinkParameters& p) {
  p.validate();
  const double tc = coherence_time(p.filter_bandwidth_m, p.center_wavelength_m);
  const double x = p.tau_effective_s() / tc;
  return std::exp(-x * x);
}

QuantumChannel dephasing_channel(const LinkParameters& p) {
  const double g = dephasing_gamma(p);
  Mat3c parity = Mat3c::Zero();  // P_even - P_odd on (-1, 0, +1)
  parity(0, 0) = -1.0;
  parity(1, 1) = 1.0;
  parity(2, 2) = -1.0;
  std::vector<Mat3c> kraus;
  kraus.push_back(std::sqrt(0.5 * (1.0 + g)) * Mat3c::Identity());
  kraus.push_back(std::sqrt(0.5 * (1.0 - g)) * parity);
  return QuantumChannel::make(std::move(kraus), "parity-dephasing");
}

QuantumChannel crosstalk_channel(double eps) {
  if (eps < 0.0 || eps > 1.0)
    throw std::invalid_argument("crosstalk_channel: eps outside [0,1]");
  std::vector<Mat3c> kraus;
  kraus.push_back(std::sqrt(1.0 - eps) * Mat3c::Identity());
  static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                  {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  for (const auto& perm : perms) {
    Mat3c p = Mat3c::Zero();
    for (int i = 0; i < 3; ++i) p(perm[i], i) = 1.0;
    kraus.push_back(std::sqrt(eps / 6.0) * p);
  }
  return QuantumChannel::make(std::move(kraus), "uniform-crosstalk");
}

DensityMatrix apply_channel(const DensityMatrix& rho, const QuantumChannel& ch,
                            Side which) {
  if (rho.dim() != 9)
    throw std::invalid_argument("apply_channel: expected 9x9 state");
  Mat9c out = Mat9c::Zero();
  for (const auto& k : ch.kraus) {
    const Mat9c kk = (which == Side::A) ? kron(k, Mat3c::Identity())
                                        : kron(Mat3c::Identity(), k);
    out += kk * rho.matrix() * kk.adjoint();
  }
  out = 0.5 * (out + out.adjoint().eval());
  return DensityMatrix::make(out);
}

FiberModeMap::FiberModeMap() {
  const cxd I(0.0, 1.0);
  const double s = 1.0 / std::sqrt(2.0);
  c_.setZero();
  // OAM_{+1}^{+} = (HE_even + i HE_odd)/sqrt2
  c_(0, 0) = s;  c_(1, 0) = I * s;
  // OAM_{+1}^{-} = (TM + i TE)/sqrt2
  c_(2, 1) = s;  c_(3, 1) = I * s;
  // OAM_{-1}^{+} = (TM - i TE)/sqrt2
  c_(2, 2) = s;  c_(3, 2) = -I * s;
  // OAM_{-1}^{-} = (HE_even - i HE_odd)/sqrt2
  c_(0, 3) = s;  c_(1, 3) = -I * s;
  if ((c_.adjoint() * c_ - Eigen::Matrix4cd::Identity()).cwiseAbs().maxCoeff() >
      1e-12)
    throw std::logic_error("FiberModeMap: basis map not unitary");
}

namespace {

int oam_pol_index(int ell, int pol) {
  if ((ell != 1 && ell != -1) || (pol != 1 && pol != -1))
    throw std::invalid_argument(
        "oam_to_fiber: only |l| = 1 lives in the LP11 group; pol is +-1");
  if (ell == 1) return pol == 1 ? 0 : 1;
  return pol == 1 ? 2 : 3;
}

const FiberModeMap& mode_map() {
  static const FiberModeMap m;
  return m;
}

}  // namespace

Eigen::Vector4cd oam_to_fiber(int ell, int pol) {
  return mode_map().matrix().col(oam_pol_index(ell, pol));
}

Eigen::Vector4cd fiber_to_oam(const Eigen::Vector4cd& fiber_amplitudes) {
  return mode_map().matrix().adjoint() * fiber_amplitudes;
}

namespace {

GaussianPeakFit fit_gaussian(const std::vector<double>& t,
                             const std::vector<double>& y) {
  const auto n = t.size();
  const auto [min_it, max_it] = std::minmax_element(y.begin(), y.end());
  const double ymin = *min_it, ymax = *max_it;
  if (ymax - ymin <= 1e-12 * (std::abs(ymax) + 1e-300))
    throw std::invalid_argument("fit_dispersion: flat scan data");

  // initial guesses: center at argmax, width from FWHM, amplitude max-min
  const auto argmax =
      static_cast<size_t>(std::distance(y.begin(),
                                        std::max_element(y.begin(), y.end())));
  const double half = ymin + 0.5 * (ymax - ymin);
  double left = t.front(), right = t.back();
  for (size_t i = argmax; i-- > 0;)
    if (y[i] < half) { left = t[i]; break; }
  for (size_t i = argmax; i < n; ++i)
    if (y[i] < half) { right = t[i]; break; }
  double width0 = (right - left) / 2.355;
  if (width0 <= 0) width0 = (t.back() - t.front()) / 10.0;

  Eigen::VectorXd p0(4);
  p0 << ymax - ymin, t[argmax], width0, ymin;

  auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(n);
    for (size_t i = 0; i < n; ++i) {
      const double z = (t[i] - p(1)) / p(2);
      r(static_cast<Eigen::Index>(i)) =
          p(0) * std::exp(-0.5 * z * z) + p(3) - y[i];
    }
    return r;
  };
  auto jacobian = [&](const Eigen::VectorXd& p) {
    Eigen::MatrixXd j(n, 4);
    for (size_t i = 0; i < n; ++i) {
      const double z = (t[i] - p(1)) / p(2);
      const double e = std::exp(-0.5 * z * z);
      const auto r = static_cast<Eigen::Index>(i);
      j(r, 0) = e;
      j(r, 1) = p(0) * e * z / p(2);
      j(r, 2) = p(0) * e * z * z / p(2);
      j(r, 3) = 1.0;
    }
    return j;
  };

  const auto res = optim::levenberg_marquardt(residuals, jacobian, p0);
  if (!res.converged)
    throw std::runtime_error("fit_dispersion: Gaussian fit did not converge");

  GaussianPeakFit fit;
  fit.amplitude = res.p(0);
  fit.center = res.p(1);
  fit.width = std::abs(res.p(2));
  fit.offset = res.p(3);
  fit.rms_residual = std::sqrt(2.0 * res.cost / static_cast<double>(n));
  fit.converged = res.converged;
  return fit;
}

}  // namespace

DispersionFit fit_dispersion(const std::vector<DelayScanPoint>& scan) {
  if (scan.size() < 5)
    throw std::invalid_argument("fit_dispersion: need at least 5 scan points");
  std::vector<double> t, y00, ym11;
  t.reserve(scan.size());
  for (const auto& p : scan) {
    t.push_back(p.delay_s);
    y00.push_back(p.rate_00);
    ym11.push_back(p.rate_m11);
  }
  DispersionFit out;
  out.fit_00 = fit_gaussian(t, y00);
  out.fit_m11 = fit_gaussian(t, ym11);
  out.delta_t_s = out.fit_m11.center - out.fit_00.center;
  return out;
}

std::vector<DelayScanPoint> load_delay_scan_csv(
    const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  std::vector<DelayScanPoint> scan;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 3)
      throw std::runtime_error(file.string() + ":" + std::to_string(line_no) +
                               ": expected 3 columns");
    DelayScanPoint p;
    try {
      p.delay_s = std::stod(fields[0]);
      p.rate_00 = std::stod(fields[1]);
      p.rate_m11 = std::stod(fields[2]);
    } catch (...) {
      if (scan.empty()) continue;  // header row
      throw std::runtime_error(file.string() + ":" + std::to_string(line_no) +
                               ": bad number");
    }
    scan.push_back(p);
  }
  return scan;
}

LinkSimulation simulate_link(const SpiralCoefficients& source,
                             const LinkParameters& p,
                             const WitnessOptions& wopts) {
  p.validate();
  const DensityMatrix rho0 = DensityMatrix::pure(spdc_state(source));
  const DensityMatrix dephased =
      apply_channel(rho0, dephasing_channel(p), Side::B);
  const DensityMatrix out =
      apply_channel(dephased, crosstalk_channel(p.crosstalk), Side::B);
  LinkSimulation sim;
  sim.rho_out = out;
  sim.report = witness_report(out, wopts);
  return sim;
}

}  // namespace oam3
