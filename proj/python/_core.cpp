#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hsicgsa/bench.hpp"
#include "hsicgsa/distributions.hpp"
#include "hsicgsa/errors.hpp"
#include "hsicgsa/gsa2.hpp"
#include "hsicgsa/hsic.hpp"
#include "hsicgsa/metalaw.hpp"
#include "hsicgsa/weighted.hpp"

namespace py = pybind11;
using namespace hsicgsa;

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

ProductDist product(const std::vector<UnivariateDist>& laws) { return ProductDist(laws); }

SampleSet make_sample(const Matrix& x, const Eigen::VectorXd& y, const std::vector<UnivariateDist>& laws) {
  require(static_cast<std::size_t>(x.cols()) == laws.size(), ErrorCode::SizeMismatch,
          "one sampling law per input column required");
  require(x.rows() == y.size(), ErrorCode::SizeMismatch, "x and y need the same number of rows");
  return SampleSet(Eigen::MatrixXd(x), y, product(laws));
}

// Box laws on the observed range, for samples whose law does not matter.
std::vector<UnivariateDist> bounding_laws(const Matrix& x) {
  std::vector<UnivariateDist> laws;
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    const double lo = x.col(k).minCoeff();
    double hi = x.col(k).maxCoeff();
    if (!(hi > lo)) hi = lo + 1.0;
    laws.push_back(UnivariateDist::uniform(lo, hi));
  }
  return laws;
}

ReferenceMethod reference_method(const std::string& name) {
  if (name == "mixture") return ReferenceMethod::Mixture;
  if (name == "kl") return ReferenceMethod::KLBarycenter;
  if (name == "wasserstein") return ReferenceMethod::WassersteinBarycenter;
  throw Error(ErrorCode::InvalidParameter, "unknown reference '" + name + "' (mixture, kl, wasserstein)");
}

Family family(const std::string& name) {
  if (name == "uniform") return Family::Uniform;
  if (name == "triangular") return Family::Triangular;
  if (name == "trunc_normal") return Family::TruncNormal;
  throw Error(ErrorCode::InvalidParameter, "unknown family '" + name + "'");
}

Model as_model(py::object f) {
  if (py::isinstance<py::str>(f)) {
    const std::string name = f.cast<std::string>();
    if (name == "ishigami-coef18") return ishigami_model(ModelVariant::Coef18);
    if (name == "ishigami-coef15") return ishigami_model(ModelVariant::Coef15);
    throw Error(ErrorCode::InvalidParameter, "unknown builtin model '" + name + "'");
  }
  return [f](std::span<const double> x) {
    py::gil_scoped_acquire gil;
    return f(std::vector<double>(x.begin(), x.end())).cast<double>();
  };
}

py::dict gsa2_dict(const Gsa2Result& r) {
  py::dict out;
  out["hsic2"] = r.hsic2;
  out["r2"] = r.r2;
  out["law_bandwidths"] = r.law_bandwidths;
  out["base_bandwidths"] = r.base_bandwidths;
  out["qoi_bandwidth"] = r.qoi_bandwidth;
  out["ranking"] = r.ranking();
  out["model_evaluations"] = r.model_evaluations;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "HSIC sensitivity indices, weighted estimators and second-level analysis";

  static py::exception<Error> error(m, "HsicgsaError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::handle(error)(std::string("[") + to_string(e.code()) + "] " + e.what());
      exc.attr("code") = to_string(e.code());
      PyErr_SetObject(error.ptr(), exc.ptr());
    }
  });

  py::class_<UnivariateDist>(m, "Law")
      .def_static("uniform", &UnivariateDist::uniform, py::arg("a"), py::arg("b"))
      .def_static("triangular", &UnivariateDist::triangular, py::arg("a"), py::arg("b"), py::arg("mode"))
      .def_static("trunc_normal", &UnivariateDist::trunc_normal, py::arg("a"), py::arg("b"),
                  py::arg("mean"), py::arg("sd"))
      .def_static(
          "mixture",
          [](const std::vector<std::pair<UnivariateDist, double>>& parts) {
            std::vector<WeightedLaw> c;
            for (const auto& [law, w] : parts) c.push_back({law, w});
            return UnivariateDist::mixture(std::move(c));
          },
          py::arg("components"))
      .def_property_readonly("lower", &UnivariateDist::lower)
      .def_property_readonly("upper", &UnivariateDist::upper)
      .def("pdf", py::vectorize(&UnivariateDist::pdf))
      .def("cdf", py::vectorize(&UnivariateDist::cdf))
      .def("quantile", py::vectorize(&UnivariateDist::quantile))
      .def("mean", &UnivariateDist::mean)
      .def("variance", &UnivariateDist::variance)
      .def(
          "sample",
          [](const UnivariateDist& d, std::size_t n, std::uint64_t seed) {
            RngStream rng(seed);
            return d.sample(n, rng);
          },
          py::arg("n"), py::arg("seed") = 1)
      .def("__eq__", [](const UnivariateDist& a, const UnivariateDist& b) { return a == b; })
      .def("__repr__", [](const UnivariateDist& d) { return "Law(" + d.describe() + ")"; });

  py::class_<DistPrior>(m, "Prior")
      .def_static(
          "finite",
          [](const std::vector<std::pair<UnivariateDist, double>>& atoms) {
            std::vector<WeightedLaw> a;
            for (const auto& [law, w] : atoms) a.push_back({law, w});
            return DistPrior::finite(std::move(a));
          },
          py::arg("atoms"))
      .def_static("fixed", &DistPrior::fixed, py::arg("law"))
      .def_static(
          "parametric",
          [](const std::string& fam, std::vector<double> params, std::size_t uncertain,
             const UnivariateDist& over) {
            return DistPrior::parametric(ParamFamily{family(fam), std::move(params), uncertain, over});
          },
          py::arg("family"), py::arg("params"), py::arg("uncertain"), py::arg("over"));

  m.def(
      "ishigami",
      [](const Matrix& x, bool coef15) {
        const Model f = ishigami_model(coef15 ? ModelVariant::Coef15 : ModelVariant::Coef18);
        return evaluate_model(f, Eigen::MatrixXd(x));
      },
      py::arg("x"), py::arg("coef15") = false);

  m.def("analytical_priors", &analytical_priors);

  m.def(
      "hsic",
      [](const Matrix& x, const Eigen::VectorXd& y, std::size_t permutations, std::uint64_t seed) {
        const SampleSet s = make_sample(x, y, bounding_laws(x));
        py::dict out;
        std::vector<double> h, r2, pa, pp;
        const RngStream rng(seed);
        for (std::size_t k = 0; k < s.dimension(); ++k) {
          h.push_back(hsic_v(s, k).value);
          r2.push_back(r2_hsic(s, k));
          pa.push_back(asymp_pvalue(s, k));
          if (permutations > 0) pp.push_back(perm_pvalue(s, k, permutations, rng.derive(k)));
        }
        out["hsic"] = h;
        out["r2"] = r2;
        out["asymp_pvalue"] = pa;
        if (permutations > 0) out["perm_pvalue"] = pp;
        return out;
      },
      py::arg("x"), py::arg("y"), py::arg("permutations") = 0, py::arg("seed") = 1);

  m.def(
      "weighted_hsic",
      [](const Matrix& x, const Eigen::VectorXd& y, const std::vector<UnivariateDist>& sampling,
         const std::vector<UnivariateDist>& target, std::size_t permutations, std::uint64_t seed,
         const std::string& epsilon) {
        const SampleSet s = make_sample(x, y, sampling);
        require(target.size() == sampling.size(), ErrorCode::SizeMismatch,
                "one target law per input required");
        require(epsilon == "bias" || epsilon == "observed", ErrorCode::InvalidParameter,
                "epsilon must be 'bias' or 'observed'");
        const EpsilonMode eps = epsilon == "bias" ? EpsilonMode::BiasPlugIn : EpsilonMode::Observed;
        const WeightSet w = make_weights(product(target), product(sampling), s.inputs());
        py::dict out;
        std::vector<double> h, r2, pa, pp;
        const RngStream rng(seed);
        for (std::size_t k = 0; k < s.dimension(); ++k) {
          h.push_back(whsic(s, w, k).value);
          r2.push_back(wr2_hsic(s, w, k));
          pa.push_back(wgamma_pvalue(s, w, k, eps));
          if (permutations > 0) pp.push_back(wperm_pvalue(s, w, k, permutations, rng.derive(k)));
        }
        out["hsic"] = h;
        out["r2"] = r2;
        out["asymp_pvalue"] = pa;
        if (permutations > 0) out["perm_pvalue"] = pp;
        out["weights"] = w.full;
        return out;
      },
      py::arg("x"), py::arg("y"), py::arg("sampling"), py::arg("target"),
      py::arg("permutations") = 0, py::arg("seed") = 1, py::arg("epsilon") = "bias");

  m.def(
      "single_loop",
      [](const std::vector<DistPrior>& priors, py::object model, std::size_t n1, std::size_t n2,
         const std::string& reference, bool exhaustive, std::uint64_t seed) {
        SingleLoopOptions o;
        o.references = {ReferenceLawSpec{reference_method(reference)}};
        o.exhaustive = exhaustive;
        return gsa2_dict(single_loop(priors, n1, n2, as_model(model), o, RngStream(seed)));
      },
      py::arg("priors"), py::arg("model"), py::arg("n1") = 50, py::arg("n2") = 1000,
      py::arg("reference") = "mixture", py::arg("exhaustive") = false, py::arg("seed") = 1);

  m.def(
      "double_loop",
      [](const std::vector<DistPrior>& priors, py::object model, std::size_t n1, std::size_t n2,
         bool exhaustive, std::uint64_t seed) {
        DoubleLoopOptions o;
        o.exhaustive = exhaustive;
        return gsa2_dict(double_loop(priors, n1, n2, as_model(model), o, RngStream(seed)));
      },
      py::arg("priors"), py::arg("model"), py::arg("n1") = 50, py::arg("n2") = 1000,
      py::arg("exhaustive") = false, py::arg("seed") = 1);
}
