#include "gmix/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gmix/autodiff.hpp"
#include "gmix/em.hpp"
#include "gmix/gradcheck.hpp"
#include "gmix/metrics.hpp"
#include "gmix/optim.hpp"
#include "gmix/simulate.hpp"
#include "json.hpp"

namespace gmix {

namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_ms(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw ConfigError("failed writing " + path);
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
  } else {
    write_text(out_path, content);
  }
}

// ---------------------------------------------------------------- csv input

struct Field {
  double value = 0.0;
  std::size_t column = 0;  // 1-based
};

std::vector<Field> split_row(const std::string& line, std::size_t lineno) {
  std::vector<Field> fields;
  std::size_t start = 0;
  std::size_t col = 0;
  while (start <= line.size()) {
    std::size_t end = line.find(',', start);
    if (end == std::string::npos) end = line.size();
    ++col;
    std::size_t lo = start;
    std::size_t hi = end;
    while (lo < hi && (line[lo] == ' ' || line[lo] == '\t')) ++lo;
    while (hi > lo && (line[hi - 1] == ' ' || line[hi - 1] == '\t')) --hi;
    double value = 0.0;
    const auto res = std::from_chars(line.data() + lo, line.data() + hi, value);
    if (res.ec != std::errc{} || res.ptr != line.data() + hi || lo == hi) {
      throw ConfigError("parse error at line " + std::to_string(lineno) +
                        ", column " + std::to_string(col) +
                        ": expected a number, got \"" +
                        line.substr(start, end - start) + "\"");
    }
    fields.push_back({value, col});
    start = end + 1;
    if (end == line.size()) break;
  }
  return fields;
}

}  // namespace

Dataset load_csv(const std::string& path, bool header, int label_col) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);

  std::vector<std::vector<Field>> rows;
  std::string line;
  std::size_t lineno = 0;
  bool dropped_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (header && !dropped_header) {
      dropped_header = true;
      continue;
    }
    if (line.empty()) continue;
    std::vector<Field> fields = split_row(line, lineno);
    if (!rows.empty() && fields.size() != rows.front().size()) {
      throw ConfigError("parse error at line " + std::to_string(lineno) +
                        ": expected " + std::to_string(rows.front().size()) +
                        " fields, got " + std::to_string(fields.size()));
    }
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw ConfigError(path + ": no data rows");

  const std::size_t width = rows.front().size();
  if (label_col >= 0 && static_cast<std::size_t>(label_col) >= width) {
    throw ConfigError("--label-col " + std::to_string(label_col) +
                      " out of range for " + std::to_string(width) +
                      " columns");
  }
  const bool with_labels = label_col >= 0;
  if (with_labels && width == 1) {
    throw ConfigError("--label-col leaves no feature columns");
  }

  Dataset data;
  data.x = Mat<double>(rows.size(), with_labels ? width - 1 : width);
  if (with_labels) data.labels.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::size_t j = 0;
    for (std::size_t c = 0; c < width; ++c) {
      const Field& f = rows[i][c];
      if (with_labels && c == static_cast<std::size_t>(label_col)) {
        const double r = std::nearbyint(f.value);
        if (std::abs(f.value - r) > 1e-9 || r < 0.0) {
          throw ConfigError("parse error at line " + std::to_string(i + 1) +
                            ", column " + std::to_string(f.column) +
                            ": labels must be nonnegative integers");
        }
        data.labels[i] = static_cast<int>(r);
      } else {
        data.x(i, j++) = f.value;
      }
    }
  }
  validate_dataset(data);
  return data;
}

namespace {

// ------------------------------------------------------------------ fit

struct FitOptions {
  std::string data;
  std::string model = "gmm";
  std::string constraint;
  int k = 1;
  int q = 0;
  std::string method = "adam";
  double lr = 3e-4;
  int max_iter = 1000;
  double tol = 1e-6;
  std::string init = "kmeans";
  std::uint64_t seed = 0;
  bool header = false;
  int label_col = -1;
  std::string out;
};

Json fit_manifest(const FitOptions& o) {
  Json m;
  m["command"] = "fit";
  m["version"] = kVersion;
  m["data"] = o.data;
  m["model"] = o.model;
  m["constraint"] = o.constraint;
  m["k"] = o.k;
  m["q"] = o.q;
  m["method"] = o.method;
  m["lr"] = o.lr;
  m["max_iter"] = o.max_iter;
  m["tol"] = o.tol;
  m["init"] = o.init;
  m["seed"] = o.seed;
  m["header"] = o.header;
  m["label_col"] = o.label_col;
  m["out"] = o.out;
  return m;
}

FitOptions fit_from_manifest(const Json& m) {
  FitOptions o;
  o.data = m.at("data").get<std::string>();
  o.model = m.at("model").get<std::string>();
  o.constraint = m.at("constraint").get<std::string>();
  o.k = m.at("k").get<int>();
  o.q = m.at("q").get<int>();
  o.method = m.at("method").get<std::string>();
  o.lr = m.at("lr").get<double>();
  o.max_iter = m.at("max_iter").get<int>();
  o.tol = m.at("tol").get<double>();
  o.init = m.at("init").get<std::string>();
  o.seed = m.at("seed").get<std::uint64_t>();
  o.header = m.at("header").get<bool>();
  o.label_col = m.at("label_col").get<int>();
  o.out = m.at("out").get<std::string>();
  return o;
}

Json to_json(const Mat<double>& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

int run_fit(const FitOptions& o, const std::string& out_override = "") {
  const Dataset data = load_csv(o.data, o.header, o.label_col);
  ModelSpec spec;
  spec.family = parse_family(o.model);
  spec.constraint = o.constraint;
  spec.K = o.k;
  spec.p = static_cast<int>(data.dim());
  spec.q = o.q;
  validate_spec(spec);

  const bool use_em = o.method == "em";
  if (use_em && spec.family != Family::GMM) {
    throw ConfigError("--method em supports only --model gmm");
  }

  const ParamSet start =
      init_params(spec, data, parse_init_strategy(o.init), o.seed);
  FitResult res;
  if (use_em) {
    const ParamLayout lay = make_layout(spec);
    Mat<double> means(static_cast<std::size_t>(spec.K), data.dim());
    for (std::size_t k = 0; k < means.rows(); ++k) {
      for (std::size_t j = 0; j < means.cols(); ++j) {
        means(k, j) = start.theta[lay.mu.offset + k * data.dim() + j];
      }
    }
    EmConfig ec;
    ec.max_iter = o.max_iter;
    ec.tol = o.tol;
    ec.seed = o.seed;
    res = em_fit_gmm(data, spec.K, means, {}, ec);
  } else {
    OptConfig oc;
    oc.method = parse_method(o.method);
    oc.lr = o.lr;
    oc.max_iter = o.max_iter;
    oc.tol = o.tol;
    oc.seed = o.seed;
    Objective obj = make_objective(spec, data);
    res = fit(obj, start.theta, oc);
  }

  Json doc;
  doc["model"] = {{"family", o.model},
                  {"constraint", o.constraint},
                  {"k", spec.K},
                  {"p", spec.p},
                  {"q", spec.q}};
  doc["fit"] = {{"method", o.method},
                {"iters", res.iters},
                {"converged", res.converged},
                {"diverged", res.diverged}};

  bool have_assignment = false;
  Assignment assign;
  if (!res.theta.empty()) {
    const ParamSet fitted{spec, res.theta};
    try {
      const ConstrainedParams cp = constrain(spec, fitted);
      Json params;
      params["weights"] = cp.weights;
      params["means"] = to_json(cp.means);
      Json covs = Json::array();
      for (const auto& c : cp.covariances) covs.push_back(to_json(c));
      params["covariances"] = std::move(covs);
      if (!cp.dof.empty()) params["dof"] = cp.dof;
      doc["params"] = std::move(params);
      doc["near_singular"] = cp.near_singular;
    } catch (const NumericError& e) {
      doc["params_error"] = e.what();
    }
    try {
      assign = responsibilities(spec, fitted, data);
      have_assignment = true;
    } catch (const NumericError& e) {
      doc["labels_error"] = e.what();
    }
  }

  doc["trajectory"] = res.trajectory;
  if (!res.trajectory.empty()) {
    const double total =
        res.trajectory.back() * static_cast<double>(data.n());
    const std::size_t d = param_count(spec);
    Json metrics;
    metrics["mean_loglik"] = res.trajectory.back();
    metrics["total_loglik"] = total;
    metrics["aic"] = aic(total, d);
    metrics["bic"] = bic(total, d, data.n());
    if (have_assignment && data.has_labels()) {
      metrics["ari"] = ari(assign.labels, data.labels);
    }
    doc["metrics"] = std::move(metrics);
  }
  if (have_assignment) {
    doc["labels"] = assign.labels;
    doc["responsibilities"] = to_json(assign.gamma);
  }
  doc["manifest"] = fit_manifest(o);

  emit(out_override.empty() ? o.out : out_override, doc.dump(2) + "\n");
  return res.diverged ? 3 : 0;
}

// ------------------------------------------------------------------ simulate

struct SimOptions {
  std::size_t n = 100;
  int p = 2;
  int k = 1;
  double scale = 5.0;
  std::uint64_t seed = 0;
  std::string cov = "full";
  bool imbalance = false;
  int noise_features = 0;
  std::string out = "sim";
};

Json sim_manifest(const SimOptions& o) {
  Json m;
  m["command"] = "simulate";
  m["version"] = kVersion;
  m["n"] = o.n;
  m["p"] = o.p;
  m["k"] = o.k;
  m["scale"] = o.scale;
  m["seed"] = o.seed;
  m["cov"] = o.cov;
  m["imbalance"] = o.imbalance;
  m["noise_features"] = o.noise_features;
  m["out"] = o.out;
  return m;
}

SimOptions sim_from_manifest(const Json& m) {
  SimOptions o;
  o.n = m.at("n").get<std::size_t>();
  o.p = m.at("p").get<int>();
  o.k = m.at("k").get<int>();
  o.scale = m.at("scale").get<double>();
  o.seed = m.at("seed").get<std::uint64_t>();
  o.cov = m.at("cov").get<std::string>();
  o.imbalance = m.at("imbalance").get<bool>();
  o.noise_features = m.at("noise_features").get<int>();
  o.out = m.at("out").get<std::string>();
  return o;
}

int run_simulate(const SimOptions& o, const std::string& out_override = "") {
  const std::string& prefix = out_override.empty() ? o.out : out_override;
  SimSpec spec;
  spec.n = o.n;
  spec.p = o.p;
  spec.K = o.k;
  spec.scale = o.scale;
  spec.seed = o.seed;
  spec.covariance_mode = parse_cov_mode(o.cov);
  spec.imbalance = o.imbalance;
  spec.noise_features = o.noise_features;
  const SimResult sim = sample_mixture(spec);

  std::ostringstream csv;
  for (std::size_t i = 0; i < sim.data.n(); ++i) {
    for (std::size_t j = 0; j < sim.data.dim(); ++j) {
      csv << fmt(sim.data.x(i, j)) << ',';
    }
    csv << sim.data.labels[i] << '\n';
  }
  write_text(prefix + ".csv", csv.str());

  Json truth;
  truth["weights"] = sim.weights;
  truth["means"] = to_json(sim.means);
  Json covs = Json::array();
  for (const auto& c : sim.covariances) covs.push_back(to_json(c));
  truth["covariances"] = std::move(covs);
  truth["manifest"] = sim_manifest(o);
  write_text(prefix + ".truth.json", truth.dump(2) + "\n");
  return 0;
}

// ------------------------------------------------------------------ benchmark

struct BenchOptions {
  std::vector<std::size_t> n = {128};
  std::vector<int> p = {2};
  std::vector<int> k = {2};
  int seeds = 10;
  std::vector<std::string> methods = {"adam", "em"};
  double scale = 5.0;
  double lr = 3e-4;
  int max_iter = 1000;
  double tol = 1e-6;
  int jobs = 1;
  std::string out = "bench";
};

Json bench_manifest(const BenchOptions& o) {
  Json m;
  m["command"] = "benchmark";
  m["version"] = kVersion;
  m["n"] = o.n;
  m["p"] = o.p;
  m["k"] = o.k;
  m["seeds"] = o.seeds;
  m["methods"] = o.methods;
  m["scale"] = o.scale;
  m["lr"] = o.lr;
  m["max_iter"] = o.max_iter;
  m["tol"] = o.tol;
  m["jobs"] = o.jobs;
  m["out"] = o.out;
  return m;
}

BenchOptions bench_from_manifest(const Json& m) {
  BenchOptions o;
  o.n = m.at("n").get<std::vector<std::size_t>>();
  o.p = m.at("p").get<std::vector<int>>();
  o.k = m.at("k").get<std::vector<int>>();
  o.seeds = m.at("seeds").get<int>();
  o.methods = m.at("methods").get<std::vector<std::string>>();
  o.scale = m.at("scale").get<double>();
  o.lr = m.at("lr").get<double>();
  o.max_iter = m.at("max_iter").get<int>();
  o.tol = m.at("tol").get<double>();
  o.jobs = m.at("jobs").get<int>();
  o.out = m.at("out").get<std::string>();
  return o;
}

// Tukey-style quartiles: the median, then the medians of the lower and
// upper halves (middle element excluded from both when the count is odd).
struct Quartiles {
  double q1 = std::numeric_limits<double>::quiet_NaN();
  double med = std::numeric_limits<double>::quiet_NaN();
  double q3 = std::numeric_limits<double>::quiet_NaN();
};

double median_sorted(const std::vector<double>& v, std::size_t lo,
                     std::size_t hi) {
  const std::size_t s = hi - lo;
  const std::size_t mid = lo + s / 2;
  if (s % 2 == 1) return v[mid];
  return 0.5 * (v[mid - 1] + v[mid]);
}

Quartiles quartiles(std::vector<double> v) {
  std::erase_if(v, [](double x) { return std::isnan(x); });
  Quartiles q;
  if (v.empty()) return q;
  std::sort(v.begin(), v.end());
  const std::size_t s = v.size();
  q.med = median_sorted(v, 0, s);
  if (s == 1) {
    q.q1 = q.q3 = v[0];
    return q;
  }
  q.q1 = median_sorted(v, 0, s / 2);
  q.q3 = median_sorted(v, (s + 1) / 2, s);
  return q;
}

int run_benchmark(const BenchOptions& o, const std::string& out_override = "") {
  const std::string& prefix = out_override.empty() ? o.out : out_override;
  BenchConfig cfg;
  for (const std::size_t n : o.n) {
    for (const int p : o.p) {
      for (const int k : o.k) cfg.grid.push_back({n, p, k});
    }
  }
  cfg.seeds = o.seeds;
  for (const std::string& m : o.methods) {
    if (m == "em") {
      cfg.with_em = true;
    } else {
      cfg.methods.push_back(parse_method(m));
    }
  }
  cfg.scale = o.scale;
  cfg.opt.lr = o.lr;
  cfg.opt.max_iter = o.max_iter;
  cfg.opt.tol = o.tol;
  cfg.em.max_iter = o.max_iter;
  cfg.em.tol = o.tol;
  cfg.jobs = o.jobs;

  const std::vector<BenchRecord> rows = benchmark_sweep(cfg);

  std::ostringstream csv;
  csv << "n,p,K,seed,method,loglik,ari,iters,wall_ms,converged\n";
  for (const BenchRecord& r : rows) {
    csv << r.n << ',' << r.p << ',' << r.K << ',' << r.seed << ','
        << r.method << ',' << fmt(r.loglik) << ',' << fmt(r.ari) << ','
        << r.iters << ',' << fmt_ms(r.wall_ms) << ','
        << (r.converged ? 1 : 0) << '\n';
  }
  write_text(prefix + ".csv", csv.str());

  // one summary row per (p, K, n, method): boxplot statistics for plotting
  std::map<std::tuple<int, int, std::size_t, std::string>,
           std::pair<std::vector<double>, std::vector<double>>>
      groups;
  for (const BenchRecord& r : rows) {
    auto& cell = groups[{r.p, r.K, r.n, r.method}];
    cell.first.push_back(r.loglik);
    cell.second.push_back(r.ari);
  }
  std::ostringstream sum;
  sum << "p,K,n,method,loglik_q1,loglik_med,loglik_q3,ari_q1,ari_med,ari_q3,"
         "runs\n";
  for (const auto& [key, cell] : groups) {
    const Quartiles ql = quartiles(cell.first);
    const Quartiles qa = quartiles(cell.second);
    sum << std::get<0>(key) << ',' << std::get<1>(key) << ','
        << std::get<2>(key) << ',' << std::get<3>(key) << ',' << fmt(ql.q1)
        << ',' << fmt(ql.med) << ',' << fmt(ql.q3) << ',' << fmt(qa.q1)
        << ',' << fmt(qa.med) << ',' << fmt(qa.q3) << ','
        << cell.first.size() << '\n';
  }
  write_text(prefix + ".summary.csv", sum.str());
  write_text(prefix + ".manifest.json", bench_manifest(o).dump(2) + "\n");
  return 0;
}

// ------------------------------------------------------------------ adbench

struct AdbenchOptions {
  std::string demo = "gradcheck";
  int n_max = 200;
  int reps = 1000;
  int cases = 50;
  std::uint64_t seed = 0;
  std::string out;
};

Json adbench_manifest(const AdbenchOptions& o) {
  Json m;
  m["command"] = "adbench";
  m["version"] = kVersion;
  m["demo"] = o.demo;
  m["n_max"] = o.n_max;
  m["reps"] = o.reps;
  m["cases"] = o.cases;
  m["seed"] = o.seed;
  m["out"] = o.out;
  return m;
}

AdbenchOptions adbench_from_manifest(const Json& m) {
  AdbenchOptions o;
  o.demo = m.at("demo").get<std::string>();
  o.n_max = m.at("n_max").get<int>();
  o.reps = m.at("reps").get<int>();
  o.cases = m.at("cases").get<int>();
  o.seed = m.at("seed").get<std::uint64_t>();
  o.out = m.at("out").get<std::string>();
  return o;
}

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

int run_adbench(const AdbenchOptions& o, const std::string& out_override = "") {
  const std::string& target = out_override.empty() ? o.out : out_override;
  std::ostringstream report;
  int code = 0;
  if (o.demo == "logistic") {
    report << "n,x,ad_deriv,closed_deriv,abs_err\n";
    double worst = 0.0;
    const double points[] = {0.0, 0.25, 0.5, 1.0};
    for (int n = 1; n <= std::min(4, o.n_max); ++n) {
      for (const double x : points) {
        const ScalarGrad g = logistic_map_grad(x, n);
        const double closed = logistic_closed_deriv(n, x);
        const double err = std::abs(g.deriv - closed);
        worst = std::max(worst, err);
        report << n << ',' << fmt(x) << ',' << fmt(g.deriv) << ','
               << fmt(closed) << ',' << fmt(err) << '\n';
      }
    }
    report << "max_abs_err," << fmt(worst) << '\n';
    code = worst < 1e-12 ? 0 : 3;
  } else if (o.demo == "sigmoid-chain") {
    report << "n,mean_us,nodes\n";
    double t50 = 0.0;
    double t200 = 0.0;
    for (const int n : {1, 5, 10, 50, 100, 200}) {
      if (n > o.n_max) continue;
      double sink = 0.0;
      for (int r = 0; r < 10; ++r) sink += nested_sigmoid_grad(0.5, n).deriv;
      const auto t0 = std::chrono::steady_clock::now();
      for (int r = 0; r < o.reps; ++r) {
        sink += nested_sigmoid_grad(0.5, n).deriv;
      }
      const auto t1 = std::chrono::steady_clock::now();
      const double mean_us =
          std::chrono::duration<double, std::micro>(t1 - t0).count() /
          std::max(1, o.reps);
      if (n == 50) t50 = mean_us;
      if (n == 200) t200 = mean_us;
      report << n << ',' << fmt_ms(mean_us) << ','
             << nested_sigmoid_node_count(n) << '\n';
      if (!std::isfinite(sink)) report << "# unexpected non-finite value\n";
    }
    if (t50 > 0.0 && t200 > 0.0) {
      report << "ratio_t200_t50," << fmt_ms(t200 / t50) << '\n';
    }
  } else if (o.demo == "gradcheck") {
    const GradCheckReport r = run_gradcheck(o.cases, o.seed);
    report << "cases," << r.cases << '\n';
    report << "max_rel_err," << fmt(r.max_rel_err) << '\n';
    report << "worst_case," << r.worst_case << '\n';
    code = r.max_rel_err < 1e-5 ? 0 : 3;
  } else {
    throw ConfigError("unknown adbench demo \"" + o.demo + "\"");
  }
  if (target.empty()) {
    std::cout << report.str();
  } else {
    write_text(target, report.str());
    write_text(target + ".manifest.json", adbench_manifest(o).dump(2) + "\n");
  }
  return code;
}

// ------------------------------------------------------------------ replay

int dispatch_manifest(const Json& manifest, const std::string& out_override);

int run_replay(const std::string& path, const std::string& out_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  // accept either a bare manifest or a result document embedding one
  const Json& manifest =
      doc.contains("manifest") ? doc.at("manifest") : doc;
  try {
    return dispatch_manifest(manifest, out_override);
  } catch (const Json::exception& e) {
    throw ConfigError(path + ": not a usable manifest: " + e.what());
  }
}

int dispatch_manifest(const Json& manifest, const std::string& out_override) {
  const std::string command = manifest.at("command").get<std::string>();
  if (command == "fit") {
    return run_fit(fit_from_manifest(manifest), out_override);
  }
  if (command == "simulate") {
    return run_simulate(sim_from_manifest(manifest), out_override);
  }
  if (command == "benchmark") {
    return run_benchmark(bench_from_manifest(manifest), out_override);
  }
  if (command == "adbench") {
    return run_adbench(adbench_from_manifest(manifest), out_override);
  }
  throw ConfigError("manifest names unknown command \"" + command + "\"");
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"gradient-based mixture model fitting"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  FitOptions fo;
  CLI::App* fit_cmd = app.add_subcommand("fit", "fit a mixture to a dataset");
  fit_cmd->add_option("data", fo.data, "input data file")->required();
  fit_cmd->add_option("--model", fo.model, "gmm | mclust | pgmm | mfa | tmm");
  fit_cmd->add_option("--constraint", fo.constraint,
                      "covariance constraint for mclust/pgmm");
  fit_cmd->add_option("--k", fo.k, "number of components");
  fit_cmd->add_option("--q", fo.q, "latent factor dimension for pgmm/mfa");
  fit_cmd->add_option("--method", fo.method, "gd | adam | newton_cg | em");
  fit_cmd->add_option("--lr", fo.lr, "learning rate");
  fit_cmd->add_option("--max-iter", fo.max_iter, "iteration cap");
  fit_cmd->add_option("--tol", fo.tol, "loglik change tolerance");
  fit_cmd->add_option("--init", fo.init, "kmeans | random");
  fit_cmd->add_option("--seed", fo.seed, "rng seed");
  fit_cmd->add_flag("--header", fo.header, "skip the first input line");
  fit_cmd->add_option("--label-col", fo.label_col,
                      "zero-based label column, enables ARI");
  fit_cmd->add_option("--out", fo.out, "result file (stdout when omitted)");

  SimOptions so;
  CLI::App* sim_cmd =
      app.add_subcommand("simulate", "draw a dataset from a random mixture");
  sim_cmd->add_option("--n", so.n, "points");
  sim_cmd->add_option("--p", so.p, "dimensions");
  sim_cmd->add_option("--k", so.k, "components");
  sim_cmd->add_option("--scale", so.scale, "mean spread");
  sim_cmd->add_option("--seed", so.seed, "rng seed");
  sim_cmd->add_option("--cov", so.cov, "full | eei | vvi");
  sim_cmd->add_flag("--imbalance", so.imbalance,
                    "draw uneven mixture weights");
  sim_cmd->add_option("--noise-features", so.noise_features,
                      "extra unit-variance columns");
  sim_cmd->add_option("--out", so.out, "output prefix");

  BenchOptions bo;
  CLI::App* bench_cmd =
      app.add_subcommand("benchmark", "sweep methods over simulated grids");
  bench_cmd->add_option("--n", bo.n, "sample sizes")->delimiter(',');
  bench_cmd->add_option("--p", bo.p, "dimensions")->delimiter(',');
  bench_cmd->add_option("--k", bo.k, "component counts")->delimiter(',');
  bench_cmd->add_option("--seeds", bo.seeds, "seeds per cell");
  bench_cmd->add_option("--methods", bo.methods,
                        "subset of gd,adam,newton_cg,em")
      ->delimiter(',');
  bench_cmd->add_option("--scale", bo.scale, "mean spread");
  bench_cmd->add_option("--lr", bo.lr, "learning rate");
  bench_cmd->add_option("--max-iter", bo.max_iter, "iteration cap");
  bench_cmd->add_option("--tol", bo.tol, "loglik change tolerance");
  bench_cmd->add_option("--jobs", bo.jobs, "parallel cells");
  bench_cmd->add_option("--out", bo.out, "output prefix");

  AdbenchOptions ao;
  CLI::App* ad_cmd =
      app.add_subcommand("adbench", "differentiation demos and checks");
  ad_cmd->add_option("--demo", ao.demo,
                     "logistic | sigmoid-chain | gradcheck");
  ad_cmd->add_option("--n-max", ao.n_max, "largest chain length");
  ad_cmd->add_option("--reps", ao.reps, "timing repetitions");
  ad_cmd->add_option("--cases", ao.cases, "gradcheck cases");
  ad_cmd->add_option("--seed", ao.seed, "rng seed");
  ad_cmd->add_option("--out", ao.out, "also write the report here");

  std::string replay_path;
  std::string replay_out;
  CLI::App* replay_cmd =
      app.add_subcommand("replay", "re-run a recorded manifest");
  replay_cmd->add_option("manifest", replay_path, "manifest or result file")
      ->required();
  replay_cmd->add_option("--out", replay_out, "override the recorded output");

  try {
    app.parse(argc, argv);
    if (fit_cmd->parsed()) return run_fit(fo);
    if (sim_cmd->parsed()) return run_simulate(so);
    if (bench_cmd->parsed()) return run_benchmark(bo);
    if (ad_cmd->parsed()) return run_adbench(ao);
    if (replay_cmd->parsed()) return run_replay(replay_path, replay_out);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace gmix
