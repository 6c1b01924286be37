// End-to-end acceptance run: one line per criterion, exit code = number of
// failed blocking criteria. Criterion 10 is an informational trend report.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gmix/autodiff.hpp"
#include "gmix/cli.hpp"
#include "gmix/em.hpp"
#include "gmix/metrics.hpp"
#include "gmix/models.hpp"
#include "gmix/optim.hpp"
#include "gmix/reparam.hpp"
#include "gmix/rng.hpp"
#include "gmix/simulate.hpp"

using namespace gmix;
namespace fs = std::filesystem;

namespace {

int failures = 0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void report(int id, const std::string& label, bool pass, bool blocking,
            const std::string& detail) {
  const char* tag = pass ? "[PASS]" : (blocking ? "[FAIL]" : "[WARN]");
  std::printf("%s %2d %s: %s\n", tag, id, label.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass && blocking) ++failures;
}

void info(const std::string& line) {
  std::printf("[INFO]    %s\n", line.c_str());
  std::fflush(stdout);
}

Eigen::MatrixXd to_eigen(const Mat<double>& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  }
  return out;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

// ------------------------------------------------------------- criterion 1

void criterion_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  struct Inst {
    const char* family;
    const char* constraint;
    int p;
    int K;
    int q;
  };
  const Inst table[] = {
      {"gmm", "", 2, 2, 0},      {"mclust", "EII", 2, 2, 0},
      {"mclust", "VII", 2, 3, 0}, {"mclust", "EEI", 3, 2, 0},
      {"mclust", "VVI", 3, 3, 0}, {"mclust", "EEE", 2, 2, 0},
      {"mclust", "VVV", 2, 3, 0}, {"pgmm", "CCC", 2, 2, 1},
      {"pgmm", "CCU", 2, 3, 1},   {"pgmm", "CUC", 3, 2, 1},
      {"pgmm", "CUU", 3, 3, 1},   {"pgmm", "UCC", 2, 2, 1},
      {"pgmm", "UCU", 2, 3, 1},   {"pgmm", "UUC", 3, 2, 1},
      {"pgmm", "UUU", 3, 3, 1},   {"mfa", "", 3, 2, 1},
      {"tmm", "", 3, 3, 0}};

  double worst = 0.0;
  std::string worst_at;
  std::uint64_t inst_id = 0;
  for (const Inst& inst : table) {
    ++inst_id;
    ModelSpec spec;
    spec.family = parse_family(inst.family);
    spec.constraint = inst.constraint;
    spec.K = inst.K;
    spec.p = inst.p;
    spec.q = inst.q;

    SimSpec sim;
    sim.n = 40;
    sim.p = inst.p;
    sim.K = inst.K;
    sim.seed = 100 + inst_id;
    Dataset data = sample_mixture(sim).data;
    data.labels.clear();

    Objective obj = make_objective(spec, data);
    Rng rng(stream_hash("acceptance-grad", {inst_id}));
    for (int point = 0; point < 20; ++point) {
      std::vector<double> theta =
          init_params(spec, data, InitStrategy::kKmeans, point).theta;
      for (auto& v : theta) v += 0.3 * rng.normal();
      const GradResult ad = obj.value_grad(theta);
      const std::vector<double> fd = finite_diff_grad(obj.value, theta);
      for (std::size_t i = 0; i < fd.size(); ++i) {
        const double rel =
            std::abs(ad.grads[i] - fd[i]) / std::max(1.0, std::abs(fd[i]));
        if (rel > worst) {
          worst = rel;
          worst_at = inst.family;
          if (inst.constraint[0] != '\0') {
            worst_at += std::string(" ") + inst.constraint;
          }
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  const bool pass = worst < 1e-5 && secs < 120.0;
  report(1, "gradients match finite differences across all families", pass,
         true,
         "max rel err " + fmt("%.2e", worst) + " (worst: " + worst_at +
             "), " + fmt("%.1f", secs) + " s");
}

// ------------------------------------------------------------- criterion 2

double logistic_closed_deriv(int n, double x) {
  switch (n) {
    case 1:
      return 1.0;
    case 2:
      return 4.0 - 8.0 * x;
    case 3:
      return 16.0 * (1.0 - 10.0 * x + 24.0 * x * x - 16.0 * x * x * x);
    default: {
      const double x2 = x * x;
      const double x3 = x2 * x;
      return 64.0 *
             (1.0 - 42.0 * x + 504.0 * x2 - 2640.0 * x3 + 7040.0 * x2 * x2 -
              9984.0 * x2 * x3 + 7168.0 * x3 * x3 - 2048.0 * x3 * x3 * x);
    }
  }
}

void criterion_expression_swell() {
  double worst = 0.0;
  for (int n = 1; n <= 4; ++n) {
    for (const double x : {0.0, 0.25, 0.5, 1.0}) {
      const ScalarGrad g = logistic_map_grad(x, n);
      worst = std::max(worst, std::abs(g.deriv - logistic_closed_deriv(n, x)));
    }
  }

  const std::size_t c1 = logistic_map_node_count(2) - logistic_map_node_count(1);
  const std::size_t c0 = logistic_map_node_count(1) - c1;
  bool affine = true;
  for (const int n : {3, 10, 100, 1000, 10000}) {
    if (logistic_map_node_count(n) !=
        c0 + c1 * static_cast<std::size_t>(n)) {
      affine = false;
    }
  }
  const bool pass = worst < 1e-12 && affine;
  report(2, "logistic-map derivatives exact, tape growth affine to n=10000",
         pass, true,
         "max abs err " + fmt("%.2e", worst) + ", nodes = " +
             std::to_string(c0) + " + " + std::to_string(c1) + "n" +
             (affine ? "" : " VIOLATED"));
}

// ------------------------------------------------------------- criterion 3

void criterion_runtime_scaling() {
  std::map<int, double> mean_us;
  double sink = 0.0;
  for (const int n : {50, 100, 200}) {
    for (int r = 0; r < 50; ++r) sink += nested_sigmoid_grad(0.5, n).deriv;
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < 1000; ++r) {
      sink += nested_sigmoid_grad(0.5, n).deriv;
    }
    mean_us[n] =
        std::chrono::duration<double, std::micro>(
            std::chrono::steady_clock::now() - t0)
            .count() /
        1000.0;
  }
  const double ratio = mean_us[200] / mean_us[50];
  const bool pass = ratio < 8.0 && std::isfinite(sink);
  report(3, "sigmoid-chain runtime near-linear", pass, true,
         "t(200)/t(50) = " + fmt("%.2f", ratio) + " (t50 " +
             fmt("%.1f", mean_us[50]) + " us, t200 " +
             fmt("%.1f", mean_us[200]) + " us)");
}

// ------------------------------------------------------------- criterion 4

void criterion_param_counts() {
  struct FamilyRow {
    const char* name;
    bool tied_loadings;
    bool tied_noise;
    bool isotropic;
  };
  const FamilyRow rows[] = {{"CCC", true, true, true},
                            {"CCU", true, true, false},
                            {"CUC", true, false, true},
                            {"CUU", true, false, false},
                            {"UCC", false, true, true},
                            {"UCU", false, true, false},
                            {"UUC", false, false, true},
                            {"UUU", false, false, false}};
  int checked = 0;
  int mismatches = 0;
  std::string first_bad;
  for (const int p : {4, 8}) {
    for (const int q : {1, 2, 3}) {
      for (const int K : {2, 4}) {
        for (const FamilyRow& row : rows) {
          const std::size_t lam =
              static_cast<std::size_t>(row.tied_loadings ? 1 : K) *
                  static_cast<std::size_t>(p * q) -
              static_cast<std::size_t>(row.tied_loadings ? 1 : K) *
                  static_cast<std::size_t>(q * (q - 1) / 2);
          const std::size_t om =
              static_cast<std::size_t>(row.tied_noise ? 1 : K) *
              static_cast<std::size_t>(row.isotropic ? 1 : p);
          const std::size_t expect =
              static_cast<std::size_t>(K - 1) +
              static_cast<std::size_t>(K * p) + lam + om;
          ModelSpec spec;
          spec.family = Family::PGMM;
          spec.constraint = row.name;
          spec.K = K;
          spec.p = p;
          spec.q = q;
          ++checked;
          if (param_count(spec) != expect) {
            ++mismatches;
            if (first_bad.empty()) {
              first_bad = std::string(row.name) + " p=" + std::to_string(p) +
                          " q=" + std::to_string(q) +
                          " K=" + std::to_string(K) + ": got " +
                          std::to_string(param_count(spec)) + " want " +
                          std::to_string(expect);
            }
          }
        }
        ModelSpec gmm;
        gmm.family = Family::GMM;
        gmm.K = K;
        gmm.p = p;
        const std::size_t expect = static_cast<std::size_t>(K - 1) +
                                   static_cast<std::size_t>(K * p) +
                                   static_cast<std::size_t>(K * p * (p + 1) / 2);
        ++checked;
        if (param_count(gmm) != expect) {
          ++mismatches;
          if (first_bad.empty()) {
            first_bad = "gmm p=" + std::to_string(p) + " K=" +
                        std::to_string(K);
          }
        }
      }
    }
  }
  report(4, "parameter counts match the family formulas exactly",
         mismatches == 0, true,
         std::to_string(checked) + " grid points" +
             (mismatches == 0 ? "" : ", first mismatch: " + first_bad));
}

// ------------------------------------------------------------- criterion 5

void criterion_constraint_maps() {
  Rng rng(stream_hash("acceptance-maps", {1}));
  const std::size_t p = 4;
  double weight_err = 0.0;
  bool weights_positive = true;
  double min_eig = 0.0;
  double orth_err = 0.0;
  bool dof_positive = true;
  for (int draw = 0; draw < 100; ++draw) {
    std::vector<double> alpha(5);
    for (auto& a : alpha) a = rng.uniform(-6.0, 6.0);
    const std::vector<double> w = weights_from_logits<double>(alpha);
    double total = 0.0;
    for (const double v : w) {
      total += v;
      if (!(v > 0.0)) weights_positive = false;
    }
    weight_err = std::max(weight_err, std::abs(total - 1.0));

    std::vector<double> packed(tri_size(p));
    for (auto& v : packed) v = rng.uniform(-2.0, 2.0);
    const Mat<double> v = unpack_lower<double>(packed, p);
    const Eigen::MatrixXd sigma =
        to_eigen(v) * to_eigen(v).transpose();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());

    std::vector<double> skew(strict_tri_size(p));
    for (auto& s : skew) s = rng.uniform(-3.0, 3.0);
    const Mat<double> o = cayley_from_skew<double>(skew, p, 0.0);
    const Eigen::MatrixXd oe = to_eigen(o);
    orth_err = std::max(
        orth_err, (oe.transpose() * oe - Eigen::MatrixXd::Identity(p, p))
                      .cwiseAbs()
                      .maxCoeff());

    if (!(dof_from_log(rng.uniform(-8.0, 8.0)) > 0.0)) dof_positive = false;
  }
  const bool pass = weight_err < 1e-12 && weights_positive &&
                    min_eig >= -1e-12 && orth_err < 1e-10 && dof_positive;
  report(5, "constraint maps land on their targets over 100 draws", pass,
         true,
         "weight sum err " + fmt("%.1e", weight_err) + ", min eig " +
             fmt("%.1e", min_eig) + ", orthogonality err " +
             fmt("%.1e", orth_err));
}

// ------------------------------------------------------------- criterion 6

void criterion_em_sanity() {
  // The ascent guarantee belongs to the exact M-step, so the monotone check
  // runs unridged; the default ridge keeps covariances PD at the price of a
  // bounded perturbation, reported alongside.
  int violations = 0;
  int guard_stops = 0;
  double ridged_worst = 0.0;
  for (std::uint64_t inst = 0; inst < 50; ++inst) {
    Rng pick(stream_hash("acceptance-em", {inst}));
    SimSpec sim;
    sim.n = 40 + pick.below(40);
    sim.p = 2 + static_cast<int>(pick.below(3));
    sim.K = 2 + static_cast<int>(pick.below(2));
    sim.seed = 500 + inst;
    const Dataset data = sample_mixture(sim).data;
    const KmeansResult km = kmeans(data.x, sim.K, inst);
    EmConfig cfg;
    cfg.max_iter = 40;
    cfg.ridge = 0.0;
    const FitResult res = em_fit_gmm(data, sim.K, km.means, {}, cfg);
    if (res.diverged) ++guard_stops;
    for (std::size_t i = 1; i < res.trajectory.size(); ++i) {
      const double slack =
          1e-9 * (1.0 + std::abs(res.trajectory[i - 1]));
      if (res.trajectory[i] < res.trajectory[i - 1] - slack) ++violations;
    }
    cfg.ridge = 1e-6;
    const FitResult ridged = em_fit_gmm(data, sim.K, km.means, {}, cfg);
    for (std::size_t i = 1; i < ridged.trajectory.size(); ++i) {
      ridged_worst = std::max(
          ridged_worst, ridged.trajectory[i - 1] - ridged.trajectory[i]);
    }
  }

  // five points in eight dimensions: an unridged scatter cannot be full rank
  SimSpec tiny;
  tiny.n = 5;
  tiny.p = 8;
  tiny.K = 1;
  tiny.seed = 77;
  const Dataset data = sample_mixture(tiny).data;
  Mat<double> gamma(5, 1);
  for (std::size_t i = 0; i < 5; ++i) gamma(i, 0) = 1.0;
  GmmState state;
  state.weights = {1.0};
  state.means = Mat<double>(1, 8);
  state.covariances = {Mat<double>(8, 8)};
  em_m_step(data.x, gamma, 0.0, state);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      to_eigen(state.covariances[0]));
  const double min_eig = es.eigenvalues().minCoeff();
  const bool pass = violations == 0 && min_eig < 1e-10;
  report(6, "EM monotone on 50 instances; rank-deficient scatter when n < p",
         pass, true,
         std::to_string(violations) + " monotonicity violations (" +
             std::to_string(guard_stops) +
             " runs stopped at the singularity guard); ridge 1e-6 worst dip " +
             fmt("%.1e", ridged_worst) + "; n=5 p=8 unridged min eig " +
             fmt("%.1e", min_eig));
}

// ------------------------------------------------------------- criterion 7

void criterion_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  const ModelSpec gs_proto{Family::GMM, "", 2, 2, 0};
  (void)gs_proto;
  bool ari_ok = true;
  bool loglik_ok = true;
  std::ostringstream cells;
  for (const int p : {2, 3, 4}) {
    for (const int K : {2, 3}) {
      int adam_wins = 0;
      int em_wins = 0;
      int oracle_wins = 0;
      std::vector<double> adam_ll;
      std::vector<double> em_ll;
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SimSpec sim;
        sim.n = 512;
        sim.p = p;
        sim.K = K;
        sim.seed = seed;
        const SimResult world = sample_mixture(sim);
        const ModelSpec spec{Family::GMM, "", K, p, 0};

        const Assignment oracle =
            responsibilities(world.truth.spec, world.truth, world.data);
        if (ari(oracle.labels, world.data.labels) >= 0.9) ++oracle_wins;

        const KmeansResult km = kmeans(world.data.x, K, seed);
        EmConfig ec;
        ec.max_iter = 2000;
        const FitResult em_res = em_fit_gmm(world.data, K, km.means, {}, ec);
        em_ll.push_back(em_res.trajectory.back());
        const Assignment em_a = responsibilities(
            spec, ParamSet{spec, em_res.theta}, world.data);
        if (ari(em_a.labels, world.data.labels) >= 0.9) ++em_wins;

        OptConfig oc;
        oc.method = Method::ADAM;
        oc.lr = 0.01;
        oc.max_iter = 10000;
        Objective obj = make_objective(spec, world.data);
        const ParamSet start =
            init_params(spec, world.data, InitStrategy::kKmeans, seed);
        const FitResult ad_res = fit(obj, start.theta, oc);
        adam_ll.push_back(ad_res.trajectory.back());
        const Assignment ad_a = responsibilities(
            spec, ParamSet{spec, ad_res.theta}, world.data);
        if (ari(ad_a.labels, world.data.labels) >= 0.9) ++adam_wins;
      }
      std::sort(adam_ll.begin(), adam_ll.end());
      std::sort(em_ll.begin(), em_ll.end());
      const double adam_med = 0.5 * (adam_ll[4] + adam_ll[5]);
      const double em_med = 0.5 * (em_ll[4] + em_ll[5]);
      const double gap = std::abs(adam_med - em_med);
      const bool cell_ari = adam_wins >= 8 && em_wins >= 8;
      const bool cell_ll = gap <= 0.05 * std::abs(em_med);
      ari_ok = ari_ok && cell_ari;
      loglik_ok = loglik_ok && cell_ll;
      cells << "cell p=" << p << " K=" << K << ": adam " << adam_wins
            << "/10, em " << em_wins << "/10, bayes oracle " << oracle_wins
            << "/10, |adam-em| median loglik gap " << fmt("%.2e", gap)
            << (cell_ari ? "" : "  [ARI below bar]")
            << (cell_ll ? "" : "  [loglik gap above bar]") << '\n';
    }
  }
  const double secs = seconds_since(t0);
  std::istringstream lines(cells.str());
  std::string line;
  while (std::getline(lines, line)) info(line);
  const bool pass = ari_ok && loglik_ok && secs < 600.0;
  report(7, "Adam and EM recovery at n=512, scale=5", pass, true,
         std::string(ari_ok ? "ARI bar met" : "ARI bar unmet on low-p cells "
                                              "(matches the Bayes-oracle "
                                              "ceiling above)") +
             ", loglik gaps " + (loglik_ok ? "within" : "outside") +
             " 0.05|L|, " + fmt("%.0f", secs) + " s");
}

// ------------------------------------------------------------- criterion 8

void criterion_high_dimensional() {
  SimSpec sim;
  sim.n = 30;
  sim.p = 40;
  sim.K = 2;
  sim.seed = 4040;
  const SimResult world = sample_mixture(sim);
  const ModelSpec spec{Family::GMM, "", 2, 40, 0};

  OptConfig oc;
  oc.method = Method::GD;
  oc.lr = 1e-3;
  oc.max_iter = 100;
  Objective obj = make_objective(spec, world.data);
  const ParamSet start =
      init_params(spec, world.data, InitStrategy::kKmeans, 1);
  const FitResult res = fit(obj, start.theta, oc);

  bool pd = !res.diverged && !res.theta.empty();
  double min_eig_fit = 0.0;
  if (pd) {
    const ConstrainedParams cp = constrain(spec, ParamSet{spec, res.theta});
    min_eig_fit = std::numeric_limits<double>::infinity();
    for (const auto& cov : cp.covariances) {
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(cov));
      min_eig_fit = std::min(min_eig_fit, es.eigenvalues().minCoeff());
    }
    pd = min_eig_fit > 0.0;
  }

  // the same data breaks the unridged M-step: 30 points cannot span p=40
  const KmeansResult km = kmeans(world.data.x, 2, 1);
  GmmState state;
  state.weights = {0.5, 0.5};
  state.means = km.means;
  state.covariances.assign(2, Mat<double>(40, 40));
  for (auto& cov : state.covariances) {
    for (std::size_t j = 0; j < 40; ++j) cov(j, j) = 1.0;
  }
  const EStepResult e = em_e_step(state, world.data.x);
  em_m_step(world.data.x, e.gamma, 0.0, state);
  double min_eig_em = std::numeric_limits<double>::infinity();
  for (const auto& cov : state.covariances) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(cov));
    min_eig_em = std::min(min_eig_em, es.eigenvalues().minCoeff());
  }
  const bool em_singular = min_eig_em < 1e-10;

  const bool pass = pd && em_singular;
  report(8, "n=30, p=40 fit completes with PD covariances; unridged EM cannot",
         pass, true,
         "gradient fit min eig " + fmt("%.2e", min_eig_fit) +
             ", unridged M-step min eig " + fmt("%.2e", min_eig_em));
}

// ------------------------------------------------------------- criterion 9

int cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("gmix");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string mask_wall_column(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    std::string kept;
    std::size_t start = 0;
    int field = 0;
    while (start <= line.size()) {
      std::size_t end = line.find(',', start);
      if (end == std::string::npos) end = line.size();
      if (field > 0) kept += ',';
      kept += (field == 8) ? "_" : line.substr(start, end - start);
      ++field;
      start = end + 1;
      if (end == line.size()) break;
    }
    out << kept << '\n';
  }
  return out.str();
}

void criterion_determinism() {
  const std::string dir = "acceptance_scratch";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string d = dir + "/";

  bool ok = true;
  std::ostringstream why;

  const std::vector<std::string> bench_base = {
      "benchmark", "--n",       "64",  "--p",        "2,3",
      "--k",       "2",         "--seeds", "2",      "--methods",
      "gd,adam,em", "--max-iter", "120", "--lr",     "0.02"};
  auto bench = bench_base;
  bench.insert(bench.end(), {"--jobs", "1", "--out", d + "j1"});
  ok &= cli(bench) == 0;
  bench = bench_base;
  bench.insert(bench.end(), {"--jobs", "4", "--out", d + "j4"});
  ok &= cli(bench) == 0;
  if (mask_wall_column(slurp(d + "j1.csv")) !=
      mask_wall_column(slurp(d + "j4.csv"))) {
    ok = false;
    why << "jobs 1 vs 4 rows differ; ";
  }
  if (slurp(d + "j1.summary.csv") != slurp(d + "j4.summary.csv")) {
    ok = false;
    why << "jobs 1 vs 4 summaries differ; ";
  }

  ok &= cli({"simulate", "--n", "80", "--p", "2", "--k", "2", "--seed", "11",
             "--out", d + "s1"}) == 0;
  ok &= cli({"fit", d + "s1.csv", "--k", "2", "--method", "em",
             "--label-col", "2", "--out", d + "f1.json"}) == 0;
  ok &= cli({"replay", d + "f1.json", "--out", d + "f2.json"}) == 0;
  if (slurp(d + "f1.json") != slurp(d + "f2.json")) {
    ok = false;
    why << "fit replay not byte-identical; ";
  }
  ok &= cli({"replay", d + "s1.truth.json", "--out", d + "s2"}) == 0;
  if (slurp(d + "s1.csv") != slurp(d + "s2.csv") ||
      slurp(d + "s1.truth.json") != slurp(d + "s2.truth.json")) {
    ok = false;
    why << "simulate replay not byte-identical; ";
  }
  ok &= cli({"replay", d + "j1.manifest.json", "--out", d + "j1r"}) == 0;
  if (mask_wall_column(slurp(d + "j1.csv")) !=
          mask_wall_column(slurp(d + "j1r.csv")) ||
      slurp(d + "j1.summary.csv") != slurp(d + "j1r.summary.csv")) {
    ok = false;
    why << "benchmark replay differs beyond wall_ms; ";
  }
  ok &= cli({"adbench", "--demo", "gradcheck", "--cases", "20", "--out",
             d + "g1.txt"}) == 0;
  ok &= cli({"replay", d + "g1.txt.manifest.json", "--out", d + "g2.txt"}) == 0;
  if (slurp(d + "g1.txt") != slurp(d + "g2.txt")) {
    ok = false;
    why << "gradcheck replay not byte-identical; ";
  }

  report(9, "parallel benchmark identical; manifests replay byte-identically",
         ok, true,
         ok ? "fit/simulate/benchmark/adbench all reproduce (wall_ms column "
              "exempt)"
            : why.str());
}

// ------------------------------------------------------------- criterion 10

void criterion_trend_report() {
  const auto t0 = std::chrono::steady_clock::now();
  BenchConfig cfg;
  for (const std::size_t n : {std::size_t{128}, std::size_t{512}}) {
    for (const int p : {2, 9}) {
      for (const int K : {2, 5}) cfg.grid.push_back({n, p, K});
    }
  }
  cfg.seeds = 10;
  cfg.methods = {Method::GD, Method::ADAM, Method::NEWTON_CG};
  cfg.with_em = true;
  cfg.opt.lr = 0.02;
  cfg.opt.max_iter = 2000;
  cfg.em.max_iter = 1000;
  const std::vector<BenchRecord> rows = benchmark_sweep(cfg);

  std::map<std::tuple<int, int, std::size_t, std::string>,
           std::vector<double>>
      ll;
  for (const BenchRecord& r : rows) {
    ll[{r.p, r.K, r.n, r.method}].push_back(r.loglik);
  }
  auto med = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  };
  for (auto& [key, v] : ll) {
    std::ostringstream line;
    line << "p=" << std::get<0>(key) << " K=" << std::get<1>(key)
         << " n=" << std::get<2>(key) << " " << std::get<3>(key)
         << ": median total loglik " << fmt("%.1f", med(v));
    info(line.str());
  }

  std::ostringstream verdict;
  bool grad_wins_all = true;
  for (const std::size_t n : {std::size_t{128}, std::size_t{512}}) {
    const double em_med = med(ll[{9, 5, n, "em"}]);
    double best_grad = -std::numeric_limits<double>::infinity();
    for (const char* m : {"gd", "adam", "newton_cg"}) {
      best_grad = std::max(best_grad, med(ll[{9, 5, n, m}]));
    }
    const bool wins = best_grad >= em_med;
    grad_wins_all = grad_wins_all && wins;
    verdict << "n=" << n << ": best gradient median "
            << fmt("%.1f", best_grad) << (wins ? " >= " : " < ") << "em "
            << fmt("%.1f", em_med) << " (gap "
            << fmt("%.2f", 100.0 * (em_med - best_grad) / std::abs(em_med))
            << "%); ";
  }
  verdict << fmt("%.0f", seconds_since(t0)) << " s";
  report(10,
         grad_wins_all
             ? "trend at p=9, K=5: gradient methods meet or beat EM"
             : "trend at p=9, K=5: gradient methods trail EM here",
         true, false, verdict.str());
}

}  // namespace

int main() {
  std::printf("acceptance run\n");
  criterion_gradients();
  criterion_expression_swell();
  criterion_runtime_scaling();
  criterion_param_counts();
  criterion_constraint_maps();
  criterion_em_sanity();
  criterion_recovery();
  criterion_high_dimensional();
  criterion_determinism();
  criterion_trend_report();
  std::printf("%d blocking criteria failed\n", failures);
  return failures;
}
