#include "oam3/tomography.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace oam3 {

namespace {

constexpr double kS2 = 0.70710678118654752440;  // 1/sqrt(2)

// Parameter layout for lower-triangular T (row-major walk): diagonal entries
// are one real parameter, off-diagonal entries are (re, im).
constexpr int kParamCount = 81;

Eigen::Matrix<cxd, 9, 9> t_from_params(const Eigen::VectorXd& x) {
  Eigen::Matrix<cxd, 9, 9> t = Eigen::Matrix<cxd, 9, 9>::Zero();
  int k = 0;
  for (int r = 0; r < 9; ++r) {
    for (int c = 0; c <= r; ++c) {
      if (r == c) {
        t(r, c) = x(k++);
      } else {
        t(r, c) = cxd(x(k), x(k + 1));
        k += 2;
      }
    }
  }
  return t;
}

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t stream) {
  // splitmix-style mixing so (seed, stream) pairs give independent engines
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return std::mt19937_64(z ^ (z >> 31));
}

}  // namespace

Eigen::Matrix<double, 9, 9> ProjectorSet::operator_gram() const {
  Eigen::Matrix<double, 9, 9> g;
  for (int k = 0; k < 9; ++k)
    for (int l = 0; l < 9; ++l)
      g(k, l) = std::norm(
          states[static_cast<size_t>(k)].amplitudes().dot(
              states[static_cast<size_t>(l)].amplitudes()));
  return g;
}

ProjectorSet build_projector_set(ProjectorConvention convention) {
  const cxd I(0.0, 1.0);
  auto ket = [](cxd m1, cxd z, cxd p1) {
    return QutritKet::from(Vec3c(m1, z, p1));
  };
  ProjectorSet set{{
      ket(1, 0, 0),             // |-1>
      ket(0, 1, 0),             // |0>
      ket(0, 0, 1),             // |1>
      ket(kS2, kS2, 0),         // (|0> + |-1>)/sqrt2
      ket(0, kS2, kS2),         // (|0> + |1>)/sqrt2
      ket(I * kS2, kS2, 0),     // (|0> + i|-1>)/sqrt2
      ket(0, kS2, -I * kS2),    // (|0> - i|1>)/sqrt2
      ket(kS2, 0, kS2),         // (|-1> + |1>)/sqrt2
      ket(kS2, 0, I * kS2),     // (|-1> + i|1>)/sqrt2
  }};
  if (convention == ProjectorConvention::kTableHeaders) {
    set.states[6] = ket(-I * kS2, kS2, 0);  // (|0> - i|-1>)/sqrt2
    set.states[8] = ket(-I * kS2, 0, kS2);  // (|1> - i|-1>)/sqrt2
  }
  return set;
}

CoincidenceTable CoincidenceTable::load_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());

  CoincidenceTable table;
  int row = 0;
  int line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;

    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    while (!fields.empty() && fields.back().find_first_not_of(" \t\r") ==
                                  std::string::npos)
      fields.pop_back();

    auto parse_long = [&](const std::string& s, long& out) {
      try {
        size_t pos = 0;
        out = std::stol(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
          ++pos;
        return pos == s.size();
      } catch (...) {
        return false;
      }
    };

    // Optional header row: empty/non-numeric first field followed by the
    // canonical indices 0..8, or entirely non-numeric fields.
    if (row == 0) {
      long probe;
      bool any_numeric = false;
      for (const auto& f : fields)
        if (parse_long(f, probe)) { any_numeric = true; break; }
      if (!any_numeric) continue;
      if ((fields.size() == 9 || fields.size() == 10) &&
          !parse_long(fields[0], probe)) {
        bool canonical = fields.size() == 10;
        for (size_t c = 1; canonical && c < fields.size(); ++c)
          canonical = parse_long(fields[c], probe) &&
                      probe == static_cast<long>(c - 1);
        if (canonical) continue;
      }
    }
    if (fields.size() == 10) fields.erase(fields.begin());
    if (fields.size() != 9)
      throw std::runtime_error(file.string() + ":" + std::to_string(line_no) +
                               ": expected 9 count columns, got " +
                               std::to_string(fields.size()));
    if (row >= 9)
      throw std::runtime_error(file.string() + ":" + std::to_string(line_no) +
                               ": more than 9 data rows");
    for (int c = 0; c < 9; ++c) {
      long v;
      if (!parse_long(fields[static_cast<size_t>(c)], v))
        throw std::runtime_error(file.string() + ":" + std::to_string(line_no) +
                                 ": bad integer '" + fields[static_cast<size_t>(c)] + "'");
      if (v < 0)
        throw std::runtime_error(file.string() + ":" + std::to_string(line_no) +
                                 ": negative count");
      table.counts(row, c) = v;
    }
    ++row;
  }
  if (row != 9)
    throw std::runtime_error(file.string() + ": expected 9 data rows, got " +
                             std::to_string(row));
  return table;
}

void CoincidenceTable::save_csv(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "# 9x9 coincidence counts; row = Alice setting, column = Bob setting\n";
  out << ",0,1,2,3,4,5,6,7,8\n";
  for (int r = 0; r < 9; ++r) {
    out << r;
    for (int c = 0; c < 9; ++c) out << ',' << counts(r, c);
    out << '\n';
  }
}

double predicted_probability(const DensityMatrix& rho, const ProjectorSet& set,
                             int i, int j) {
  if (rho.dim() != 9)
    throw std::invalid_argument("predicted_probability: expected 9x9 state");
  const Vec9c phi = kron(set[i].amplitudes(), set[j].amplitudes());
  return std::max(0.0, (phi.adjoint() * rho.matrix() * phi)(0).real());
}

MeasurementModel::MeasurementModel(ProjectorConvention convention,
                                   LabelFrame alice_frame, LabelFrame bob_frame,
                                   const std::array<double, 3>& efficiency_a,
                                   const std::array<double, 3>& efficiency_b) {
  const ProjectorSet base = build_projector_set(convention);
  for (double e : efficiency_a)
    if (e < 0) throw std::invalid_argument("MeasurementModel: negative efficiency");
  for (double e : efficiency_b)
    if (e < 0) throw std::invalid_argument("MeasurementModel: negative efficiency");

  Vec3c da(std::sqrt(efficiency_a[0]), std::sqrt(efficiency_a[1]),
           std::sqrt(efficiency_a[2]));
  Vec3c db(std::sqrt(efficiency_b[0]), std::sqrt(efficiency_b[1]),
           std::sqrt(efficiency_b[2]));

  std::array<Vec3c, 9> alice, bob;
  for (int k = 0; k < 9; ++k) {
    QutritKet a = base[k], b = base[k];
    if (alice_frame == LabelFrame::kOamFlipped) a = a.oam_flipped();
    if (bob_frame == LabelFrame::kOamFlipped) b = b.oam_flipped();
    alice[static_cast<size_t>(k)] = da.cwiseProduct(a.amplitudes());
    bob[static_cast<size_t>(k)] = db.cwiseProduct(b.amplitudes());
  }
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j)
      kets_[static_cast<size_t>(9 * i + j)] =
          kron(alice[static_cast<size_t>(i)], bob[static_cast<size_t>(j)]);
}

double MeasurementModel::probability(const DensityMatrix& rho, int i,
                                     int j) const {
  const Vec9c& phi = joint_ket(i, j);
  return std::max(0.0, (phi.adjoint() * rho.matrix() * phi)(0).real());
}

MleResult mle_reconstruct(const CoincidenceTable& table,
                          const MeasurementModel& model,
                          const MleOptions& opts) {
  if (table.counts.minCoeff() < 0)
    throw std::invalid_argument("mle_reconstruct: negative counts");
  const double n_total = static_cast<double>(table.total());
  if (n_total <= 0)
    throw std::invalid_argument("mle_reconstruct: all-zero count table");

  Eigen::Matrix<double, 81, 1> n;
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j)
      n(9 * i + j) = static_cast<double>(table.counts(i, j));

  // Profile log-likelihood and gradient in the T parameterization,
  // normalized by the total count so tolerances are scale-free.
  auto negll = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    const Eigen::Matrix<cxd, 9, 9> t = t_from_params(x);
    std::array<Vec9c, 81> u;
    Eigen::Matrix<double, 81, 1> v;
    for (int k = 0; k < 81; ++k) {
      u[static_cast<size_t>(k)] = t * model.joint_ket(k / 9, k % 9);
      v(k) = std::max(u[static_cast<size_t>(k)].squaredNorm(), 1e-300);
    }
    const double vsum = v.sum();
    double ll = -n_total * std::log(vsum);
    for (int k = 0; k < 81; ++k)
      if (n(k) > 0) ll += n(k) * std::log(v(k));

    Eigen::Matrix<cxd, 9, 9> g = Eigen::Matrix<cxd, 9, 9>::Zero();
    for (int k = 0; k < 81; ++k) {
      const double w = (n(k) / v(k) - n_total / vsum) / n_total;
      g.noalias() +=
          w * u[static_cast<size_t>(k)] * model.joint_ket(k / 9, k % 9).adjoint();
    }
    grad.resize(kParamCount);
    int p = 0;
    for (int r = 0; r < 9; ++r) {
      for (int c = 0; c <= r; ++c) {
        if (r == c) {
          grad(p++) = -2.0 * g(r, c).real();
        } else {
          grad(p) = -2.0 * g(r, c).real();
          grad(p + 1) = -2.0 * g(r, c).imag();
          p += 2;
        }
      }
    }
    return -ll / n_total;
  };

  optim::LbfgsOptions lopts;
  lopts.max_iterations = opts.max_iterations;
  lopts.grad_tol = opts.grad_tol;
  lopts.f_rel_tol = 1e-14;

  std::vector<Eigen::VectorXd> starts;
  if (opts.warm_start && opts.warm_start->size() == kParamCount)
    starts.push_back(*opts.warm_start);
  {
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(kParamCount);
    int p = 0;
    for (int r = 0; r < 9; ++r)
      for (int c = 0; c <= r; ++c) {
        if (r == c) x0(p++) = 1.0;
        else p += 2;
      }
    starts.push_back(std::move(x0));  // maximally mixed start
  }
  for (int s = 0; s < opts.restarts; ++s) {
    auto eng = seeded_engine(opts.seed, static_cast<std::uint64_t>(s));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd x0(kParamCount);
    for (int i = 0; i < kParamCount; ++i) x0(i) = gauss(eng);
    starts.push_back(std::move(x0));
  }

  optim::LbfgsResult best;
  best.f = std::numeric_limits<double>::infinity();
  for (const auto& x0 : starts) {
    const auto r = optim::lbfgs_minimize(negll, x0, lopts);
    if (r.f < best.f) best = r;
  }

  const Eigen::Matrix<cxd, 9, 9> t = t_from_params(best.x);
  Mat9c raw = t.adjoint() * t;
  raw /= raw.trace().real();
  raw = 0.5 * (raw + raw.adjoint().eval());

  MleResult result;
  result.rho = DensityMatrix::make(raw);
  result.log_likelihood = -best.f * n_total;
  result.converged = best.converged;
  result.iterations = best.iterations;
  result.parameters = best.x;

  double psum = 0.0;
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j) psum += model.probability(result.rho, i, j);
  result.flux_scale = n_total / psum;
  return result;
}

CoincidenceTable synthesize_counts(const DensityMatrix& rho,
                                   const MeasurementModel& model, double flux) {
  CoincidenceTable t;
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j)
      t.counts(i, j) =
          std::lround(flux * model.probability(rho, i, j));
  return t;
}

BootstrapResult bootstrap_uncertainty(const CoincidenceTable& table,
                                      const MeasurementModel& model,
                                      const Statistic& statistic,
                                      const BootstrapOptions& opts) {
  if (opts.resamples < 2)
    throw std::invalid_argument("bootstrap_uncertainty: need >= 2 resamples");

  Resampler resample = opts.resampler;
  if (!resample) {
    resample = [](const Eigen::Matrix<long, 9, 9>& counts,
                  std::mt19937_64& eng) {
      Eigen::Matrix<long, 9, 9> out;
      for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) {
          const long n = counts(i, j);
          if (n == 0) {
            out(i, j) = 0;
          } else {
            std::poisson_distribution<long> pois(static_cast<double>(n));
            out(i, j) = pois(eng);
          }
        }
      return out;
    };
  }

  MleOptions base = opts.mle;
  if (opts.warm_start && !base.warm_start) {
    MleOptions full;
    full.seed = opts.seed;
    base.warm_start = mle_reconstruct(table, model, full).parameters;
  }

  BootstrapResult res;
  res.samples.reserve(static_cast<size_t>(opts.resamples));
  for (int b = 0; b < opts.resamples; ++b) {
    auto eng = seeded_engine(opts.seed, 1000 + static_cast<std::uint64_t>(b));
    CoincidenceTable rt;
    rt.counts = resample(table.counts, eng);
    try {
      MleOptions mo = base;
      mo.seed = opts.seed ^ (0x5bd1e995ULL * static_cast<std::uint64_t>(b + 1));
      const MleResult r = mle_reconstruct(rt, model, mo);
      if (!r.converged) ++res.failures;
      res.samples.push_back(statistic(r.rho));
    } catch (const std::exception&) {
      ++res.failures;
    }
  }
  if (res.samples.size() < 2)
    throw std::runtime_error("bootstrap_uncertainty: too few successful resamples");

  double mean = 0.0;
  for (double s : res.samples) mean += s;
  mean /= static_cast<double>(res.samples.size());
  double var = 0.0;
  for (double s : res.samples) var += (s - mean) * (s - mean);
  var /= static_cast<double>(res.samples.size() - 1);

  res.mean = mean;
  res.stddev = std::sqrt(var);
  return res;
}

ProcessMatrix ProcessMatrix::identity() {
  ProcessMatrix p;
  p.chi(0, 0) = 1.0;
  return p;
}

namespace {

// Hermitian parameterization of chi: 9 diagonal + 36 (re, im) pairs.
Mat9c chi_from_real_params(const Eigen::VectorXd& c) {
  Mat9c chi = Mat9c::Zero();
  int k = 0;
  for (int m = 0; m < 9; ++m) chi(m, m) = c(k++);
  for (int m = 0; m < 9; ++m)
    for (int n = m + 1; n < 9; ++n) {
      chi(m, n) = cxd(c(k), c(k + 1));
      chi(n, m) = std::conj(chi(m, n));
      k += 2;
    }
  return chi;
}

Mat3c tp_operator(const Mat9c& chi) {
  const auto& basis = GellMannBasis::instance();
  Mat3c s = Mat3c::Zero();
  for (int m = 0; m < 9; ++m)
    for (int n = 0; n < 9; ++n)
      s += chi(m, n) * basis.op(n).adjoint() * basis.op(m);
  return s;
}

}  // namespace

ProcessMatrix process_reconstruct(const std::vector<DensityMatrix>& inputs,
                                  const std::vector<DensityMatrix>& outputs) {
  if (inputs.size() != outputs.size() || inputs.size() < 9)
    throw std::invalid_argument(
        "process_reconstruct: need >= 9 matched input/output pairs");
  for (const auto& r : inputs)
    if (r.dim() != 3)
      throw std::invalid_argument("process_reconstruct: inputs must be 3x3");

  const auto& basis = GellMannBasis::instance();
  const int pairs = static_cast<int>(inputs.size());

  // Real least-squares system over the 81 Hermitian parameters of chi.
  const int rows = pairs * 18;  // 9 complex entries per pair
  Eigen::MatrixXd A(rows, 81);
  Eigen::VectorXd y(rows);

  for (int p = 0; p < 81; ++p) {
    Eigen::VectorXd unit = Eigen::VectorXd::Zero(81);
    unit(p) = 1.0;
    const Mat9c chi_p = chi_from_real_params(unit);
    for (int k = 0; k < pairs; ++k) {
      Mat3c img = Mat3c::Zero();
      for (int m = 0; m < 9; ++m)
        for (int n = 0; n < 9; ++n) {
          if (chi_p(m, n) == cxd(0, 0)) continue;
          img += chi_p(m, n) * basis.op(m) *
                 inputs[static_cast<size_t>(k)].matrix() *
                 basis.op(n).adjoint();
        }
      for (int e = 0; e < 9; ++e) {
        A(18 * k + 2 * e, p) = img(e / 3, e % 3).real();
        A(18 * k + 2 * e + 1, p) = img(e / 3, e % 3).imag();
      }
    }
  }
  for (int k = 0; k < pairs; ++k)
    for (int e = 0; e < 9; ++e) {
      y(18 * k + 2 * e) = outputs[static_cast<size_t>(k)](e / 3, e % 3).real();
      y(18 * k + 2 * e + 1) = outputs[static_cast<size_t>(k)](e / 3, e % 3).imag();
    }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.singularValues()(80) < 1e-9 * svd.singularValues()(0))
    throw std::invalid_argument(
        "process_reconstruct: input states do not span the operator space");
  const Eigen::VectorXd c = svd.solve(y);
  Mat9c chi = chi_from_real_params(c);

  // CP projection (clamp negative eigenvalues), then alternate with the
  // trace-preservation affine constraint until both hold.
  const auto project_cp = [](const Mat9c& x) {
    Eigen::SelfAdjointEigenSolver<Mat9c> es(x);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    return Mat9c(es.eigenvectors() * ev.asDiagonal() *
                 es.eigenvectors().adjoint());
  };
  // Linear map from chi parameters to the trace-preservation operator,
  // used to project onto the affine constraint sum chi_mn L_n^dag L_m = I.
  Eigen::MatrixXd tp_map(18, 81);
  for (int p = 0; p < 81; ++p) {
    Eigen::VectorXd unit = Eigen::VectorXd::Zero(81);
    unit(p) = 1.0;
    const Mat3c s = tp_operator(chi_from_real_params(unit));
    for (int e = 0; e < 9; ++e) {
      tp_map(2 * e, p) = s(e / 3, e % 3).real();
      tp_map(2 * e + 1, p) = s(e / 3, e % 3).imag();
    }
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> tp_svd(
      tp_map, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto project_tp = [&](const Mat9c& x) {
    const Mat3c defect = tp_operator(x) - Mat3c::Identity();
    Eigen::VectorXd d(18);
    for (int e = 0; e < 9; ++e) {
      d(2 * e) = defect(e / 3, e % 3).real();
      d(2 * e + 1) = defect(e / 3, e % 3).imag();
    }
    const Eigen::VectorXd corr = tp_svd.solve(d);
    return Mat9c(x - chi_from_real_params(corr));
  };

  ProcessMatrix out;
  Mat9c x = 0.5 * (chi + chi.adjoint().eval());
  for (int it = 0; it < 200; ++it) {
    const Eigen::SelfAdjointEigenSolver<Mat9c> es(x);
    const double neg = es.eigenvalues().minCoeff();
    const double tp = (tp_operator(x) - Mat3c::Identity()).norm();
    if (neg > -1e-12 && tp < 1e-9) break;
    x = project_cp(x);
    x = project_tp(x);
    x = 0.5 * (x + x.adjoint().eval());
  }
  x = project_cp(x);
  out.chi = 0.5 * (x + x.adjoint().eval());
  out.tp_residual = (tp_operator(out.chi) - Mat3c::Identity()).norm();
  return out;
}

DensityMatrix apply_process(const ProcessMatrix& p, const DensityMatrix& rho) {
  if (rho.dim() != 3)
    throw std::invalid_argument("apply_process: expected a 3x3 state");
  const auto& basis = GellMannBasis::instance();
  Mat3c out = Mat3c::Zero();
  for (int m = 0; m < 9; ++m)
    for (int n = 0; n < 9; ++n) {
      if (p.chi(m, n) == cxd(0, 0)) continue;
      out += p.chi(m, n) * basis.op(m) * rho.matrix() * basis.op(n).adjoint();
    }
  out = 0.5 * (out + out.adjoint().eval());
  out /= out.trace().real();
  return DensityMatrix::make(out);
}

ProcessMatrix chi_from_kraus(const std::vector<Mat3c>& kraus) {
  const auto& basis = GellMannBasis::instance();
  const auto& norms = GellMannBasis::norms();
  ProcessMatrix out;
  out.chi.setZero();
  for (const auto& k : kraus) {
    Eigen::Matrix<cxd, 9, 1> c;
    for (int m = 0; m < 9; ++m)
      c(m) = (basis.op(m).adjoint() * k).trace() / norms[static_cast<size_t>(m)];
    out.chi += c * c.adjoint();
  }
  out.tp_residual = (tp_operator(out.chi) - Mat3c::Identity()).norm();
  return out;
}

double process_fidelity(const ProcessMatrix& a, const ProcessMatrix& b) {
  const auto& norms = GellMannBasis::norms();
  auto rescaled = [&](const Mat9c& chi) {
    Mat9c s;
    for (int m = 0; m < 9; ++m)
      for (int n = 0; n < 9; ++n)
        s(m, n) = chi(m, n) * std::sqrt(norms[static_cast<size_t>(m)] *
                                        norms[static_cast<size_t>(n)]);
    const double tr = s.trace().real();
    if (tr <= 0) throw std::invalid_argument("process_fidelity: non-positive trace");
    return Mat9c(s / tr);
  };
  auto psd_sqrt = [](const Mat9c& m) {
    Eigen::SelfAdjointEigenSolver<Mat9c> es(m);
    if (es.eigenvalues().minCoeff() < kPsdFloor)
      throw std::invalid_argument("process_fidelity: input not PSD");
    const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return Mat9c(es.eigenvectors() * ev.asDiagonal() *
                 es.eigenvectors().adjoint());
  };
  const Mat9c sa = psd_sqrt(rescaled(a.chi));
  const Mat9c inner = sa * rescaled(b.chi) * sa;
  Eigen::SelfAdjointEigenSolver<Mat9c> es(0.5 * (inner + inner.adjoint().eval()));
  double tr_sqrt = 0.0;
  for (int i = 0; i < 9; ++i)
    tr_sqrt += std::sqrt(std::max(0.0, es.eigenvalues()(i)));
  return std::clamp(tr_sqrt * tr_sqrt, 0.0, 1.0);
}

}  // namespace oam3
