#include "oam3/witness.hpp"

#include "oam3/optim.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace oam3 {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_2pi(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

// MES overlap needs only three coherences and three populations of rho.
struct MesOverlap {
  double diag;
  cxd r_tm, r_tp, r_mp;  // (2,4), (2,6), (4,6) composite entries

  explicit MesOverlap(const DensityMatrix& rho)
      : diag(rho(2, 2).real() + rho(4, 4).real() + rho(6, 6).real()),
        r_tm(rho(2, 4)),
        r_tp(rho(2, 6)),
        r_mp(rho(4, 6)) {}

  double value(double theta, double phi) const {
    const cxd et = std::polar(1.0, -theta);
    const cxd ep = std::polar(1.0, phi);
    return (diag + 2.0 * (et * r_tm).real() + 2.0 * (et * ep * r_tp).real() +
            2.0 * (ep * r_mp).real()) / 3.0;
  }
};

Vec3c fourier_ket(int outcome, double param, bool bob) {
  const double p = bob ? -param : param;
  Vec3c v;
  for (int m = 0; m < 3; ++m)
    v(m) = std::polar(1.0 / std::sqrt(3.0),
                      kTwoPi * m * (outcome + p) / 3.0);
  return v;
}

Mat3c fourier_basis(double param, bool bob) {
  Mat3c b;
  for (int out = 0; out < 3; ++out)
    b.row(out) = fourier_ket(out, param, bob).transpose();
  return b;
}

// exp(i H) for the traceless Hermitian combination of the 8 non-identity
// basis operators with the given coordinates.
Mat3c su3_element(const Eigen::Matrix<double, 8, 1>& x) {
  const auto& basis = GellMannBasis::instance();
  Mat3c h = Mat3c::Zero();
  for (int i = 0; i < 8; ++i) h += x(i) * basis.op(i + 1);
  Eigen::SelfAdjointEigenSolver<Mat3c> es(h);
  Vec3c phases;
  for (int i = 0; i < 3; ++i)
    phases(i) = std::polar(1.0, es.eigenvalues()(i));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

// All 36 joint probabilities for the four setting pairs.
struct JointProbs {
  // p[a][b](j, k) with a, b in {0, 1} for settings 1, 2
  Eigen::Matrix3d p[2][2];
};

JointProbs joint_probs(const DensityMatrix& rho, const CglmpBases& bases) {
  JointProbs jp;
  const Mat3c* alice[2] = {&bases.a1, &bases.a2};
  const Mat3c* bob[2] = {&bases.b1, &bases.b2};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          const Vec9c ket = kron(Vec3c(alice[a]->row(j).transpose()),
                                 Vec3c(bob[b]->row(k).transpose()));
          const double p = (ket.adjoint() * rho.matrix() * ket)(0).real();
          jp.p[a][b](j, k) = std::max(0.0, p);
        }
  return jp;
}

// P(A_a = B_b + k): outcome_A = outcome_B + k (mod 3).
double p_a_eq_b_plus(const Eigen::Matrix3d& p, int k) {
  double s = 0.0;
  for (int j = 0; j < 3; ++j) s += p(((j + k) % 3 + 3) % 3, j);
  return s;
}

// P(B_b = A_a + k): outcome_B = outcome_A + k (mod 3).
double p_b_eq_a_plus(const Eigen::Matrix3d& p, int k) {
  double s = 0.0;
  for (int j = 0; j < 3; ++j) s += p(j, ((j + k) % 3 + 3) % 3);
  return s;
}

double i3_of_probs(const JointProbs& jp) {
  const double plus = p_a_eq_b_plus(jp.p[0][0], 0) +
                      p_b_eq_a_plus(jp.p[1][0], 1) +
                      p_a_eq_b_plus(jp.p[1][1], 0) +
                      p_b_eq_a_plus(jp.p[0][1], 0);
  const double minus = p_a_eq_b_plus(jp.p[0][0], -1) +
                       p_b_eq_a_plus(jp.p[1][0], 0) +
                       p_a_eq_b_plus(jp.p[1][1], -1) +
                       p_b_eq_a_plus(jp.p[0][1], -1);
  return plus - minus;
}

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return std::mt19937_64(z ^ (z >> 31));
}

}  // namespace

MesFit best_mes_fidelity(const DensityMatrix& rho, int grid) {
  if (rho.dim() != 9)
    throw std::invalid_argument("best_mes_fidelity: expected 9x9 state");
  const MesOverlap ov(rho);

  MesFit best;
  best.fidelity = -1.0;
  for (int i = 0; i < grid; ++i) {
    const double th = kTwoPi * i / grid;
    for (int j = 0; j < grid; ++j) {
      const double ph = kTwoPi * j / grid;
      const double f = ov.value(th, ph);
      if (f > best.fidelity) best = {f, th, ph};
    }
  }

  optim::SimplexOptions sopts;
  sopts.initial_step = kTwoPi / grid;
  sopts.x_tol = 1e-12;
  sopts.f_tol = 1e-15;
  Eigen::VectorXd x0(2);
  x0 << best.theta, best.phi;
  const auto r = optim::nelder_mead_minimize(
      [&](const Eigen::VectorXd& x) { return -ov.value(x(0), x(1)); }, x0,
      sopts);

  best.fidelity = std::clamp(-r.f, 0.0, 1.0);
  best.theta = wrap_2pi(r.x(0));
  best.phi = wrap_2pi(r.x(1));
  return best;
}

double schmidt_rank_bound(const BipartiteKet& target, int d) {
  if (d < 1 || d > 3)
    throw std::invalid_argument("schmidt_rank_bound: d must be in 1..3");
  const auto dec = schmidt_decompose(target);
  double s = 0.0;
  for (int i = 0; i < d; ++i)
    s += dec.coefficients(i) * dec.coefficients(i);
  return std::min(s, 1.0);
}

int certify_dimension(const DensityMatrix& rho, const BipartiteKet& target) {
  const double f = fidelity_pure(rho, target);
  for (int d = 1; d <= 3; ++d)
    if (f <= schmidt_rank_bound(target, d)) return d;
  return 3;
}

CglmpBases CglmpBases::from_settings(const CglmpSettings& s) {
  CglmpBases b;
  b.a1 = fourier_basis(s.alpha1, false);
  b.a2 = fourier_basis(s.alpha2, false);
  b.b1 = fourier_basis(s.beta1, true);
  b.b2 = fourier_basis(s.beta2, true);
  return b;
}

bool CglmpBases::orthonormal() const {
  for (const Mat3c* m : {&a1, &a2, &b1, &b2})
    if ((*m * m->adjoint() - Mat3c::Identity()).cwiseAbs().maxCoeff() > 1e-10)
      return false;
  return true;
}

double cglmp_probability(const DensityMatrix& rho, const CglmpSettings& s,
                         int a, int b, int j, int k) {
  if (rho.dim() != 9)
    throw std::invalid_argument("cglmp_probability: expected 9x9 state");
  if (a < 1 || a > 2 || b < 1 || b > 2 || j < 0 || j > 2 || k < 0 || k > 2)
    throw std::invalid_argument("cglmp_probability: index out of range");
  const Vec3c va = fourier_ket(j, a == 1 ? s.alpha1 : s.alpha2, false);
  const Vec3c vb = fourier_ket(k, b == 1 ? s.beta1 : s.beta2, true);
  const Vec9c ket = kron(va, vb);
  return std::max(0.0, (ket.adjoint() * rho.matrix() * ket)(0).real());
}

double cglmp_value(const DensityMatrix& rho, const CglmpSettings& s) {
  return cglmp_value(rho, CglmpBases::from_settings(s));
}

double cglmp_value(const DensityMatrix& rho, const CglmpBases& bases) {
  if (rho.dim() != 9)
    throw std::invalid_argument("cglmp_value: expected 9x9 state");
  return i3_of_probs(joint_probs(rho, bases));
}

CglmpOptimum cglmp_optimize(const DensityMatrix& rho,
                            const CglmpOptimizeOptions& opts) {
  if (rho.dim() != 9)
    throw std::invalid_argument("cglmp_optimize: expected 9x9 state");

  CglmpOptimum best;
  best.value = -std::numeric_limits<double>::infinity();
  best.family = opts.family;

  optim::SimplexOptions sopts;
  sopts.max_evaluations = opts.max_evaluations;
  sopts.x_tol = 1e-10;
  sopts.f_tol = 1e-12;

  if (opts.family == CglmpFamily::kPhaseOnly) {
    auto objective = [&](const Eigen::VectorXd& x) {
      return -cglmp_value(rho, CglmpSettings{x(0), x(1), x(2), x(3)});
    };
    std::vector<Eigen::VectorXd> starts;
    {
      Eigen::VectorXd s0(4);
      const CglmpSettings std_s = CglmpSettings::standard();
      s0 << std_s.alpha1, std_s.alpha2, std_s.beta1, std_s.beta2;
      starts.push_back(s0);
    }
    for (int s = 0; s < opts.starts; ++s) {
      auto eng = seeded_engine(opts.seed, static_cast<std::uint64_t>(s));
      std::uniform_real_distribution<double> uni(-1.0, 1.0);
      Eigen::VectorXd x0(4);
      for (int i = 0; i < 4; ++i) x0(i) = uni(eng);
      starts.push_back(x0);
    }
    sopts.initial_step = 0.2;
    for (const auto& x0 : starts) {
      const auto r = optim::nelder_mead_minimize(objective, x0, sopts);
      if (-r.f > best.value) {
        best.value = -r.f;
        best.settings = CglmpSettings{r.x(0), r.x(1), r.x(2), r.x(3)};
        best.bases = CglmpBases::from_settings(*best.settings);
      }
    }
    return best;
  }

  // General family: each of the four readout bases rotated by exp(iH),
  // 8 coordinates per setting, 32 in total.
  const CglmpBases f0 = CglmpBases::from_settings(
      CglmpSettings{0.0, 0.0, 0.0, 0.0});
  auto bases_of = [&](const Eigen::VectorXd& z) {
    CglmpBases b;
    b.a1 = f0.a1 * su3_element(z.segment<8>(0)).transpose();
    b.a2 = f0.a2 * su3_element(z.segment<8>(8)).transpose();
    b.b1 = f0.b1 * su3_element(z.segment<8>(16)).transpose();
    b.b2 = f0.b2 * su3_element(z.segment<8>(24)).transpose();
    return b;
  };
  auto objective = [&](const Eigen::VectorXd& z) {
    return -cglmp_value(rho, bases_of(z));
  };

  std::vector<Eigen::VectorXd> starts;
  starts.push_back(Eigen::VectorXd::Zero(32));
  {
    // standard settings expressed as diagonal rotations (alpha shifts live
    // in the span of the two diagonal basis operators)
    Eigen::VectorXd z0 = Eigen::VectorXd::Zero(32);
    auto set_diag = [&](int off, double param, bool bob) {
      const double p = bob ? -param : param;
      // diag(0, 2pi p/3, 4pi p/3) decomposed over diag(1,-1,0) and
      // diag(1,1,-2)/sqrt3 after dropping the global phase
      const double d0 = 0.0, d1 = kTwoPi * p / 3.0, d2 = 2.0 * kTwoPi * p / 3.0;
      const double g = (d0 + d1 + d2) / 3.0;
      z0(off + 2) = (d0 - d1) / 2.0;                      // coordinate of op 3
      z0(off + 7) = -std::sqrt(3.0) * (d2 - g) / 2.0;     // coordinate of op 8
    };
    const CglmpSettings s = CglmpSettings::standard();
    set_diag(0, s.alpha1, false);
    set_diag(8, s.alpha2, false);
    set_diag(16, s.beta1, true);
    set_diag(24, s.beta2, true);
    starts.push_back(z0);
  }
  for (int s = 0; s < opts.starts; ++s) {
    auto eng = seeded_engine(opts.seed, 100 + static_cast<std::uint64_t>(s));
    std::normal_distribution<double> gauss(0.0, 0.8);
    Eigen::VectorXd z0(32);
    for (int i = 0; i < 32; ++i) z0(i) = gauss(eng);
    starts.push_back(z0);
  }

  sopts.initial_step = 0.35;
  Eigen::VectorXd best_z;
  for (const auto& z0 : starts) {
    const auto r = optim::nelder_mead_minimize(objective, z0, sopts);
    if (-r.f > best.value) {
      best.value = -r.f;
      best_z = r.x;
    }
  }
  // polish the winner with a tighter simplex
  optim::SimplexOptions popts = sopts;
  popts.initial_step = 0.02;
  popts.max_evaluations = 2 * opts.max_evaluations;
  const auto r = optim::nelder_mead_minimize(objective, best_z, popts);
  if (-r.f > best.value) {
    best.value = -r.f;
    best_z = r.x;
  }
  best.bases = bases_of(best_z);
  return best;
}

WitnessReport witness_report(const DensityMatrix& rho,
                             const WitnessOptions& opts) {
  WitnessReport rep;
  const MesFit fit = best_mes_fidelity(rho, opts.mes_grid);
  rep.fidelity = fit.fidelity;
  rep.theta = fit.theta;
  rep.phi = fit.phi;
  rep.purity = purity(rho);

  const BipartiteKet target = mes_state(fit.theta, fit.phi);
  rep.f1_bound = schmidt_rank_bound(target, 1);
  rep.f2_bound = schmidt_rank_bound(target, 2);
  rep.certified_dimension = certify_dimension(rho, target);

  if (opts.compute_cglmp) {
    rep.i3_settings = cglmp_optimize(rho, opts.cglmp);
    rep.i3 = rep.i3_settings.value;
  }
  return rep;
}

}  // namespace oam3
