#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gmix/autodiff.hpp"
#include "gmix/em.hpp"
#include "gmix/gradcheck.hpp"
#include "gmix/metrics.hpp"
#include "gmix/models.hpp"
#include "gmix/optim.hpp"
#include "gmix/simulate.hpp"

namespace py = pybind11;
using namespace gmix;

namespace {

using Rows = std::vector<std::vector<double>>;

Mat<double> to_mat(const Rows& rows) {
  if (rows.empty()) throw InvalidInput("empty data");
  Mat<double> m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols()) {
      throw InvalidInput("rows must have equal length");
    }
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

Rows from_mat(const Mat<double>& m) {
  Rows rows(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) rows[i][j] = m(i, j);
  }
  return rows;
}

ModelSpec build_spec(const std::string& model, const std::string& constraint,
                     int k, int p, int q) {
  ModelSpec spec;
  spec.family = parse_family(model);
  spec.constraint = constraint;
  spec.K = k;
  spec.p = p;
  spec.q = q;
  validate_spec(spec);
  return spec;
}

Dataset build_dataset(const Rows& rows, const std::vector<int>& labels) {
  Dataset data;
  data.x = to_mat(rows);
  data.labels = labels;
  validate_dataset(data);
  return data;
}

py::dict fit_to_dict(const FitResult& res) {
  py::dict out;
  out["theta"] = res.theta;
  out["trajectory"] = res.trajectory;
  out["iters"] = res.iters;
  out["converged"] = res.converged;
  out["diverged"] = res.diverged;
  return out;
}

py::dict constrained_to_dict(const ConstrainedParams& cp) {
  py::dict out;
  out["weights"] = cp.weights;
  out["means"] = from_mat(cp.means);
  std::vector<Rows> covs;
  for (const auto& c : cp.covariances) covs.push_back(from_mat(c));
  out["covariances"] = covs;
  if (!cp.dof.empty()) out["dof"] = cp.dof;
  out["near_singular"] = cp.near_singular;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "gradient-based mixture model fitting";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def(
      "param_count",
      [](const std::string& model, const std::string& constraint, int k, int p,
         int q) {
        return param_count(build_spec(model, constraint, k, p, q));
      },
      py::arg("model"), py::arg("constraint"), py::arg("k"), py::arg("p"),
      py::arg("q") = 0,
      "free parameter count of the family");

  m.def(
      "simulate",
      [](std::size_t n, int p, int k, double scale, std::uint64_t seed,
         const std::string& cov, bool imbalance, int noise_features) {
        SimSpec spec;
        spec.n = n;
        spec.p = p;
        spec.K = k;
        spec.scale = scale;
        spec.seed = seed;
        spec.covariance_mode = parse_cov_mode(cov);
        spec.imbalance = imbalance;
        spec.noise_features = noise_features;
        const SimResult sim = sample_mixture(spec);
        py::dict out;
        out["x"] = from_mat(sim.data.x);
        out["labels"] = sim.data.labels;
        out["weights"] = sim.weights;
        out["means"] = from_mat(sim.means);
        std::vector<Rows> covs;
        for (const auto& c : sim.covariances) covs.push_back(from_mat(c));
        out["covariances"] = covs;
        out["truth_theta"] = sim.truth.theta;
        return out;
      },
      py::arg("n"), py::arg("p"), py::arg("k"), py::arg("scale") = 5.0,
      py::arg("seed") = 0, py::arg("cov") = "full",
      py::arg("imbalance") = false, py::arg("noise_features") = 0,
      "draw a labelled dataset from a random mixture");

  m.def(
      "init_params",
      [](const std::string& model, const std::string& constraint, int k, int q,
         const Rows& x, const std::string& init, std::uint64_t seed) {
        const Mat<double> data = to_mat(x);
        const ModelSpec spec = build_spec(model, constraint, k,
                                          static_cast<int>(data.cols()), q);
        Dataset ds;
        ds.x = data;
        return init_params(spec, ds, parse_init_strategy(init), seed).theta;
      },
      py::arg("model"), py::arg("constraint"), py::arg("k"), py::arg("q"),
      py::arg("x"), py::arg("init") = "kmeans", py::arg("seed") = 0,
      "starting point in the unconstrained coordinates");

  m.def(
      "loglik_grad",
      [](const std::string& model, const std::string& constraint, int k, int q,
         const Rows& x, const std::vector<double>& theta) {
        const Mat<double> data = to_mat(x);
        const ModelSpec spec = build_spec(model, constraint, k,
                                          static_cast<int>(data.cols()), q);
        Dataset ds;
        ds.x = data;
        Objective obj = make_objective(spec, ds);
        const auto [value, grads] = obj.value_grad(theta);
        return py::make_tuple(value, grads);
      },
      py::arg("model"), py::arg("constraint"), py::arg("k"), py::arg("q"),
      py::arg("x"), py::arg("theta"),
      "mean log-likelihood and its gradient via reverse-mode AD");

  m.def(
      "fit",
      [](const std::string& model, const std::string& constraint, int k, int q,
         const Rows& x, const std::string& method, double lr, int max_iter,
         double tol, const std::string& init, std::uint64_t seed) {
        const Mat<double> data = to_mat(x);
        const ModelSpec spec = build_spec(model, constraint, k,
                                          static_cast<int>(data.cols()), q);
        Dataset ds;
        ds.x = data;
        const ParamSet start =
            init_params(spec, ds, parse_init_strategy(init), seed);
        OptConfig cfg;
        cfg.method = parse_method(method);
        cfg.lr = lr;
        cfg.max_iter = max_iter;
        cfg.tol = tol;
        cfg.seed = seed;
        Objective obj = make_objective(spec, ds);
        return fit_to_dict(fit(obj, start.theta, cfg));
      },
      py::arg("model"), py::arg("constraint"), py::arg("k"), py::arg("q"),
      py::arg("x"), py::arg("method") = "adam", py::arg("lr") = 3e-4,
      py::arg("max_iter") = 1000, py::arg("tol") = 1e-6,
      py::arg("init") = "kmeans", py::arg("seed") = 0,
      "maximize the mean log-likelihood from a fresh initialization");

  m.def(
      "em_fit",
      [](int k, const Rows& x, int max_iter, double tol, double ridge,
         std::uint64_t seed) {
        Dataset ds;
        ds.x = to_mat(x);
        const KmeansResult km =
            kmeans(ds.x, k, seed);
        EmConfig cfg;
        cfg.max_iter = max_iter;
        cfg.tol = tol;
        cfg.ridge = ridge;
        cfg.seed = seed;
        return fit_to_dict(em_fit_gmm(ds, k, km.means, {}, cfg));
      },
      py::arg("k"), py::arg("x"), py::arg("max_iter") = 1000,
      py::arg("tol") = 1e-6, py::arg("ridge") = 1e-6, py::arg("seed") = 0,
      "full-covariance baseline fit by expectation maximization");

  m.def(
      "constrain",
      [](const std::string& model, const std::string& constraint, int k, int p,
         int q, const std::vector<double>& theta) {
        const ModelSpec spec = build_spec(model, constraint, k, p, q);
        return constrained_to_dict(constrain(spec, ParamSet{spec, theta}));
      },
      py::arg("model"), py::arg("constraint"), py::arg("k"), py::arg("p"),
      py::arg("q"), py::arg("theta"),
      "natural weights, means, covariances for a flat parameter vector");

  m.def(
      "responsibilities",
      [](const std::string& model, const std::string& constraint, int k, int q,
         const Rows& x, const std::vector<double>& theta) {
        const Mat<double> data = to_mat(x);
        const ModelSpec spec = build_spec(model, constraint, k,
                                          static_cast<int>(data.cols()), q);
        Dataset ds;
        ds.x = data;
        const Assignment a = responsibilities(spec, ParamSet{spec, theta}, ds);
        return py::make_tuple(from_mat(a.gamma), a.labels);
      },
      py::arg("model"), py::arg("constraint"), py::arg("k"), py::arg("q"),
      py::arg("x"), py::arg("theta"),
      "posterior component probabilities and hard labels");

  m.def("ari", [](const std::vector<int>& a, const std::vector<int>& b) {
    return ari(a, b);
  });
  m.def("aic", &aic, py::arg("total_loglik"), py::arg("d"));
  m.def("bic", &bic, py::arg("total_loglik"), py::arg("d"), py::arg("n"));

  m.def(
      "logistic_map_grad",
      [](double x, int n) {
        const ScalarGrad g = logistic_map_grad(x, n);
        return py::make_tuple(g.value, g.deriv);
      },
      py::arg("x"), py::arg("n"));
  m.def(
      "nested_sigmoid_grad",
      [](double x, int n) {
        const ScalarGrad g = nested_sigmoid_grad(x, n);
        return py::make_tuple(g.value, g.deriv);
      },
      py::arg("x"), py::arg("n"));
  m.def(
      "gradcheck",
      [](int cases, std::uint64_t seed) {
        const GradCheckReport r = run_gradcheck(cases, seed);
        py::dict out;
        out["max_rel_err"] = r.max_rel_err;
        out["cases"] = r.cases;
        out["worst_case"] = r.worst_case;
        return out;
      },
      py::arg("cases") = 50, py::arg("seed") = 0);
}
