#include "doctest.h"

#include "oam3/linkmodel.hpp"
#include "oam3/tomography.hpp"
#include "oam3/witness.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

using namespace oam3;

namespace {

const std::filesystem::path kDataDir = OAM3_DATA_DIR;

std::mt19937_64 eng(99ULL);

DensityMatrix random_pure_state() {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec9c v;
  for (int i = 0; i < 9; ++i) v(i) = cxd(g(eng), g(eng));
  return DensityMatrix::pure(BipartiteKet::normalized(v));
}

}  // namespace

TEST_CASE("projector set entries and Gram rank") {
  const auto set = build_projector_set();
  CHECK(set[0].amplitudes().isApprox(Vec3c(1, 0, 0)));
  const double s2 = 1.0 / std::sqrt(2.0);
  CHECK(set[3].amplitudes().isApprox(Vec3c(s2, s2, 0)));
  CHECK(std::abs(set[6].amplitudes()(2) - cxd(0, -s2)) < 1e-15);

  const auto gram = set.operator_gram();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 9, 9>> es(gram);
  CHECK(es.eigenvalues().minCoeff() > 0.1);  // rank 9 with a solid margin

  // the table-header variant double-covers Im(|-1><0|) and misses
  // Im(|0><1|), so its operator Gram is singular: those captions cannot be
  // the settings an informationally complete tomography used
  const auto alt = build_projector_set(ProjectorConvention::kTableHeaders);
  CHECK(std::abs(alt[6].amplitudes()(0) - cxd(0, -s2)) < 1e-15);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 9, 9>> es2(
      alt.operator_gram());
  CHECK(es2.eigenvalues().minCoeff() < 1e-12);
}

TEST_CASE("predicted_probability on named states") {
  const auto set = build_projector_set();
  const auto mes = DensityMatrix::pure(mes_state(0.0, 0.0));
  CHECK(predicted_probability(mes, set, 1, 1) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(predicted_probability(mes, set, 0, 0) ==
        doctest::Approx(0.0).epsilon(1e-12));
  const auto mixed = DensityMatrix::maximally_mixed(9);
  for (int i : {0, 4, 8})
    for (int j : {2, 5, 7})
      CHECK(predicted_probability(mixed, set, i, j) ==
            doctest::Approx(1.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("coincidence table CSV round trip and validation") {
  const auto table = CoincidenceTable::load_csv(kDataDir / "paper_table_s1.csv");
  CHECK(table.counts(0, 0) == 196);
  CHECK(table.counts(1, 1) == 261);
  CHECK(table.counts(8, 8) == 23);

  const auto tmp = std::filesystem::temp_directory_path() / "oam3_table.csv";
  table.save_csv(tmp);
  const auto back = CoincidenceTable::load_csv(tmp);
  CHECK((back.counts - table.counts).cwiseAbs().maxCoeff() == 0);
  std::filesystem::remove(tmp);

  const auto bad = std::filesystem::temp_directory_path() / "oam3_bad.csv";
  {
    std::ofstream out(bad);
    out << "1,2,3\n";
  }
  CHECK_THROWS_AS(CoincidenceTable::load_csv(bad), std::runtime_error);
  std::filesystem::remove(bad);
}

TEST_CASE("mle rejects degenerate tables") {
  const auto model = MeasurementModel::literal();
  CoincidenceTable zeros;
  CHECK_THROWS_AS(mle_reconstruct(zeros, model), std::invalid_argument);
}

TEST_CASE("mle round trip on noiseless synthetic counts") {
  const auto model = MeasurementModel::literal();
  MleOptions opts;
  opts.restarts = 2;
  for (int trial = 0; trial < 3; ++trial) {
    const DensityMatrix truth = random_pure_state();
    const auto counts = synthesize_counts(truth, model, 1e6);
    const auto rec = mle_reconstruct(counts, model, opts);
    CHECK(rec.converged);
    const double f = (truth.matrix() * rec.rho.matrix()).trace().real();
    CHECK(f >= 0.999);
    CHECK(rec.flux_scale == doctest::Approx(1e6).epsilon(1e-2));
  }
}

TEST_CASE("mle reproduces the bundled dataset regression values") {
  const auto table = CoincidenceTable::load_csv(kDataDir / "paper_table_s1.csv");
  const auto model = MeasurementModel::bob_flipped();
  const auto rec = mle_reconstruct(table, model);
  CHECK(rec.converged);
  // regression anchors from an independent reimplementation of the same
  // estimator (profile Poisson likelihood, multi-start quasi-Newton)
  CHECK(rec.log_likelihood == doctest::Approx(-26196.665).epsilon(2e-4));
  CHECK(purity(rec.rho) == doctest::Approx(0.5724).epsilon(0.02));
  const auto fit = best_mes_fidelity(rec.rho);
  CHECK(fit.fidelity == doctest::Approx(0.7153).epsilon(0.02));
  CHECK(fit.theta / (2 * std::numbers::pi) ==
        doctest::Approx(0.977).epsilon(0.05));

  // the literal frame reads the same counts as an OAM-correlated state
  const auto literal = mle_reconstruct(table, MeasurementModel::literal());
  CHECK(best_mes_fidelity(literal.rho).fidelity < 0.3);
}

TEST_CASE("mle with counts in a single cell") {
  // counts only at (|0>, |0>): the estimate concentrates on |0,0>, but the
  // 80 zero-count settings pull the optimum away from a clean projector;
  // the closed-form oracle S9^{-1}|Phi_11> gives overlap 0.72677
  CoincidenceTable t;
  t.counts(1, 1) = 1000;
  const auto model = MeasurementModel::literal();
  const auto rec = mle_reconstruct(t, model);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rec.rho.matrix());
  Eigen::VectorXcd dominant = es.eigenvectors().col(8);
  Vec9c phi11 = Vec9c::Zero();
  phi11(pair_index(1, 1)) = 1.0;
  const double overlap = std::norm(dominant.dot(phi11));

  const auto set = build_projector_set();
  Mat3c s3 = Mat3c::Zero();
  for (int k = 0; k < 9; ++k)
    s3 += set[k].amplitudes() * set[k].amplitudes().adjoint();
  const Mat9c s9 = kron(s3, s3);
  Vec9c oracle = s9.fullPivLu().solve(phi11);
  oracle.normalize();
  const double oracle_overlap = std::norm(oracle.dot(phi11));
  CHECK(oracle_overlap == doctest::Approx(0.72677).epsilon(1e-4));
  CHECK(overlap == doctest::Approx(oracle_overlap).epsilon(1e-3));

  // |0,0> is still the dominant computational component
  int argmax = 0;
  double best = 0.0;
  for (int i = 0; i < 9; ++i)
    if (rec.rho(i, i).real() > best) {
      best = rec.rho(i, i).real();
      argmax = i;
    }
  CHECK(argmax == pair_index(1, 1));
}

TEST_CASE("bootstrap: invariant statistic and identity resampler") {
  const auto table = CoincidenceTable::load_csv(kDataDir / "paper_table_s1.csv");
  const auto model = MeasurementModel::bob_flipped();

  BootstrapOptions fast;
  fast.resamples = 8;
  fast.mle.restarts = 1;

  auto trace_stat = [](const DensityMatrix& r) {
    return r.matrix().trace().real();
  };
  const auto trace_res = bootstrap_uncertainty(table, model, trace_stat, fast);
  CHECK(trace_res.mean == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(trace_res.stddev == doctest::Approx(0.0).epsilon(1e-12));

  BootstrapOptions ident = fast;
  ident.resamples = 3;
  ident.resampler = [](const Eigen::Matrix<long, 9, 9>& c, std::mt19937_64&) {
    return c;
  };
  const auto ident_res = bootstrap_uncertainty(
      table, model, [](const DensityMatrix& r) { return purity(r); }, ident);
  CHECK(ident_res.stddev == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(ident_res.failures == 0);

  BootstrapOptions one;
  one.resamples = 1;
  CHECK_THROWS_AS(bootstrap_uncertainty(table, model, trace_stat, one),
                  std::invalid_argument);
}

TEST_CASE("process tomography: identity channel") {
  const auto set = build_projector_set();
  std::vector<DensityMatrix> inputs, outputs;
  for (int k = 0; k < 9; ++k) {
    inputs.push_back(DensityMatrix::pure(set[k]));
    outputs.push_back(DensityMatrix::pure(set[k]));
  }
  const auto chi = process_reconstruct(inputs, outputs);
  CHECK(std::abs(chi.chi(0, 0) - cxd(1, 0)) < 1e-9);
  Mat9c rest = chi.chi;
  rest(0, 0) = 0;
  CHECK(rest.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(chi.tp_residual < 1e-6);
}

TEST_CASE("process tomography: diagonal phase unitary") {
  const auto set = build_projector_set();
  Mat3c u = Mat3c::Zero();
  u(0, 0) = std::polar(1.0, 0.31);
  u(1, 1) = std::polar(1.0, -1.24);
  u(2, 2) = std::polar(1.0, 0.77);

  std::vector<DensityMatrix> inputs, outputs;
  for (int k = 0; k < 9; ++k) {
    inputs.push_back(DensityMatrix::pure(set[k]));
    const Mat3c out = u * inputs.back().matrix() * u.adjoint();
    outputs.push_back(DensityMatrix::make(out));
  }
  const auto chi = process_reconstruct(inputs, outputs);

  Eigen::SelfAdjointEigenSolver<Mat9c> es(chi.chi);
  CHECK(es.eigenvalues()(8) > 1e-6);
  CHECK(es.eigenvalues()(7) < 1e-8);

  // process fidelity to the identity channel equals |Tr U|^2 / 9
  const double expected = std::norm(u.trace()) / 9.0;
  CHECK(process_fidelity(chi, ProcessMatrix::identity()) ==
        doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("process tomography: crosstalk channel round trip") {
  const auto channel = crosstalk_channel(0.128);
  const auto set = build_projector_set();
  std::vector<DensityMatrix> inputs, outputs;
  for (int k = 0; k < 9; ++k) {
    inputs.push_back(DensityMatrix::pure(set[k]));
    outputs.push_back(channel.apply(inputs.back()));
  }
  const auto chi = process_reconstruct(inputs, outputs);
  const auto expected = chi_from_kraus(channel.kraus);
  CHECK((chi.chi - expected.chi).norm() < 1e-6);
  CHECK(chi.tp_residual < 1e-6);

  // applying the reconstructed process matches the channel on a fresh state
  Mat3c probe_m;
  probe_m << 0.5, cxd(0.1, 0.05), 0.0,
             cxd(0.1, -0.05), 0.3, 0.0,
             0.0, 0.0, 0.2;
  const auto probe = DensityMatrix::make(probe_m);
  const auto via_chi = apply_process(chi, probe);
  const auto via_kraus = channel.apply(probe);
  CHECK((via_chi.matrix() - via_kraus.matrix()).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("process_reconstruct rejects a rank-deficient input set") {
  std::vector<DensityMatrix> inputs(9, DensityMatrix::maximally_mixed(3));
  std::vector<DensityMatrix> outputs(9, DensityMatrix::maximally_mixed(3));
  CHECK_THROWS_AS(process_reconstruct(inputs, outputs), std::invalid_argument);
}

TEST_CASE("process_fidelity properties") {
  const auto id = ProcessMatrix::identity();
  CHECK(process_fidelity(id, id) == doctest::Approx(1.0).epsilon(1e-12));

  ProcessMatrix a, b;
  a.chi.setZero();
  b.chi.setZero();
  a.chi(1, 1) = 1.0;
  b.chi(2, 2) = 1.0;
  CHECK(process_fidelity(a, b) == doctest::Approx(0.0).epsilon(1e-12));

  const auto x = chi_from_kraus(crosstalk_channel(0.3).kraus);
  LinkParameters lp;
  lp.tau_disp_s = 1e-11;
  lp.tau_comp_s = 0.0;
  const auto y = chi_from_kraus(dephasing_channel(lp).kraus);
  CHECK(process_fidelity(x, y) ==
        doctest::Approx(process_fidelity(y, x)).epsilon(1e-8));
  CHECK(process_fidelity(x, x) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("efficiency weights enter the measurement model") {
  // synthetic data generated with unbalanced mode efficiencies reconstructs
  // correctly only when the model knows the weights
  const std::array<double, 3> eff_a{1.0, 0.8, 0.9};
  const std::array<double, 3> eff_b{0.7, 1.0, 0.85};
  const MeasurementModel weighted(ProjectorConvention::kMainText,
                                  LabelFrame::kLiteral, LabelFrame::kLiteral,
                                  eff_a, eff_b);
  const MeasurementModel plain = MeasurementModel::literal();

  const DensityMatrix truth = DensityMatrix::pure(mes_state(0.3, 1.9));
  const auto counts = synthesize_counts(truth, weighted, 5e5);

  MleOptions opts;
  opts.restarts = 2;
  const auto good = mle_reconstruct(counts, weighted, opts);
  const double f_good = (truth.matrix() * good.rho.matrix()).trace().real();
  CHECK(f_good >= 0.999);

  const auto off = mle_reconstruct(counts, plain, opts);
  const double f_off = (truth.matrix() * off.rho.matrix()).trace().real();
  CHECK(f_off < f_good);
}
