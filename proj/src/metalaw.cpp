#include "hsicgsa/metalaw.hpp"

#include <algorithm>
#include <cmath>

#include "hsicgsa/errors.hpp"
#include "hsicgsa/numerics.hpp"

namespace hsicgsa {

const char* to_string(ReferenceMethod method) {
  switch (method) {
    case ReferenceMethod::Mixture: return "mixture";
    case ReferenceMethod::KLBarycenter: return "kl";
    case ReferenceMethod::WassersteinBarycenter: return "wasserstein";
  }
  return "unknown";
}

namespace {

// cdf tables are built on this many cells per quantile cell.
constexpr std::size_t kRefine = 8;

void check_grid(std::size_t grid_size) {
  require(grid_size >= 64, ErrorCode::InvalidParameter, "reference law: grid size must be >= 64");
}

std::vector<double> linspace(double a, double b, std::size_t count) {
  std::vector<double> xs(count);
  const double h = (b - a) / static_cast<double>(count - 1);
  for (std::size_t j = 0; j < count; ++j) xs[j] = a + h * static_cast<double>(j);
  xs.back() = b;
  return xs;
}

// Endpoints stay fixed; ties are split by single ulps from both ends.
void make_strict(std::vector<double>& q) {
  const double hi = q.back();
  for (std::size_t i = 1; i + 1 < q.size(); ++i) {
    if (!(q[i] > q[i - 1])) q[i] = std::nextafter(q[i - 1], hi);
  }
  for (std::size_t i = q.size() - 1; i-- > 1;) {
    if (!(q[i] < q[i + 1])) q[i] = std::nextafter(q[i + 1], q.front());
  }
}

// Quantile grid from a nondecreasing cdf tabulated at xs.
UnivariateDist grid_from_cdf(const std::vector<double>& xs, std::vector<double> cdf,
                             std::size_t grid_size) {
  const double lo = cdf.front();
  const double span = cdf.back() - lo;
  require(span > 0.0, ErrorCode::Degenerate, "reference law: density integrates to zero");
  for (double& f : cdf) f = std::clamp((f - lo) / span, 0.0, 1.0);
  for (std::size_t j = 1; j < cdf.size(); ++j) cdf[j] = std::max(cdf[j], cdf[j - 1]);
  std::vector<double> q(grid_size);
  q.front() = xs.front();
  q.back() = xs.back();
  for (std::size_t i = 1; i + 1 < grid_size; ++i) {
    const double p = static_cast<double>(i) / static_cast<double>(grid_size - 1);
    auto it = std::upper_bound(cdf.begin(), cdf.end(), p);
    std::size_t j = it == cdf.begin() ? 0 : static_cast<std::size_t>(it - cdf.begin()) - 1;
    j = std::min(j, cdf.size() - 2);
    const double df = cdf[j + 1] - cdf[j];
    const double t = df > 0.0 ? (p - cdf[j]) / df : 0.0;
    q[i] = xs[j] + t * (xs[j + 1] - xs[j]);
  }
  make_strict(q);
  return UnivariateDist::quantile_grid(std::move(q));
}

double mixture_cdf(std::span<const WeightedLaw> atoms, double x) {
  double s = 0.0;
  for (const auto& a : atoms) s += a.weight * a.law.cdf(x);
  return s;
}

}  // namespace

std::vector<WeightedLaw> prior_atoms(const DistPrior& prior) {
  if (prior.is_finite()) return prior.atoms();
  const auto& family = prior.param_family();
  const auto& pl = family.parameter_law;
  const auto rule = numerics::gauss_legendre(kParamNodes, pl.lower(), pl.upper());
  std::vector<WeightedLaw> atoms;
  double total = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double w = rule.weights[i] * pl.pdf(rule.nodes[i]);
    if (w <= 0.0) continue;
    atoms.push_back({family.make(rule.nodes[i]), w});
    total += w;
  }
  require(total > 0.0, ErrorCode::Degenerate, "parametric prior: parameter law has no mass");
  for (auto& a : atoms) a.weight /= total;
  return atoms;
}

UnivariateDist mixture_reference(const DistPrior& prior, std::size_t grid_size) {
  check_grid(grid_size);
  if (prior.is_finite()) {
    const auto& atoms = prior.atoms();
    if (atoms.size() == 1) return atoms.front().law;
    return UnivariateDist::mixture(atoms);
  }
  const auto atoms = prior_atoms(prior);
  const auto xs = linspace(prior.lower(), prior.upper(), kRefine * (grid_size - 1) + 1);
  std::vector<double> cdf(xs.size());
  for (std::size_t j = 0; j < xs.size(); ++j) cdf[j] = mixture_cdf(atoms, xs[j]);
  return grid_from_cdf(xs, std::move(cdf), grid_size);
}

UnivariateDist kl_barycenter(const DistPrior& prior, std::size_t grid_size) {
  check_grid(grid_size);
  if (prior.is_finite() && prior.atoms().size() == 1) return prior.atoms().front().law;
  const auto atoms = prior_atoms(prior);
  const auto xs = linspace(prior.lower(), prior.upper(), kRefine * (grid_size - 1) + 1);
  std::vector<double> geo(xs.size());
  for (std::size_t j = 0; j < xs.size(); ++j) {
    double log_sum = 0.0;
    bool vanishes = false;
    for (const auto& a : atoms) {
      const double f = a.law.pdf(xs[j]);
      if (f < 1e-300) {
        vanishes = true;
        break;
      }
      log_sum += a.weight * std::log(f);
    }
    geo[j] = vanishes ? 0.0 : std::exp(log_sum);
  }
  std::vector<double> geo_cdf(xs.size(), 0.0);
  for (std::size_t j = 1; j < xs.size(); ++j) {
    geo_cdf[j] = geo_cdf[j - 1] + 0.5 * (geo[j] + geo[j - 1]) * (xs[j] - xs[j - 1]);
  }
  const double z = geo_cdf.back();
  std::vector<double> cdf(xs.size());
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const double arith = mixture_cdf(atoms, xs[j]);
    // With no common positive region the geometric half has no mass; the
    // arithmetic half then carries the whole law.
    cdf[j] = z > 0.0 ? 0.5 * arith + 0.5 * geo_cdf[j] / z : arith;
  }
  return grid_from_cdf(xs, std::move(cdf), grid_size);
}

UnivariateDist wasserstein_barycenter(std::span<const WeightedLaw> laws, std::size_t grid_size) {
  check_grid(grid_size);
  require(!laws.empty(), ErrorCode::InvalidParameter, "barycenter: no laws given");
  if (laws.size() == 1) return laws.front().law;
  double total = 0.0;
  for (const auto& a : laws) total += a.weight;
  require(total > 0.0, ErrorCode::InvalidParameter, "barycenter: weights sum to zero");
  std::vector<double> q(grid_size, 0.0);
  for (const auto& a : laws) {
    const double w = a.weight / total;
    q.front() += w * a.law.lower();
    q.back() += w * a.law.upper();
    for (std::size_t i = 1; i + 1 < grid_size; ++i) {
      const double p = static_cast<double>(i) / static_cast<double>(grid_size - 1);
      q[i] += w * a.law.quantile(p);
    }
  }
  // Shared bounds stay exact instead of picking up rounding from the weights.
  const auto shared = [&](auto bound) {
    return std::all_of(laws.begin(), laws.end(),
                       [&](const WeightedLaw& a) { return bound(a.law) == bound(laws.front().law); });
  };
  if (shared([](const UnivariateDist& d) { return d.lower(); })) q.front() = laws.front().law.lower();
  if (shared([](const UnivariateDist& d) { return d.upper(); })) q.back() = laws.front().law.upper();
  make_strict(q);
  return UnivariateDist::quantile_grid(std::move(q));
}

UnivariateDist wasserstein_barycenter(const DistPrior& prior, std::size_t grid_size) {
  const auto atoms = prior_atoms(prior);
  return wasserstein_barycenter(std::span<const WeightedLaw>(atoms), grid_size);
}

UnivariateDist reference_law(const DistPrior& prior, const ReferenceLawSpec& spec) {
  switch (spec.method) {
    case ReferenceMethod::Mixture: return mixture_reference(prior, spec.grid_size);
    case ReferenceMethod::KLBarycenter: return kl_barycenter(prior, spec.grid_size);
    case ReferenceMethod::WassersteinBarycenter: return wasserstein_barycenter(prior, spec.grid_size);
  }
  fail(ErrorCode::InvalidParameter, "reference law: unknown method");
}

ProductDist reference_law(std::span<const DistPrior> priors,
                          std::span<const ReferenceLawSpec> specs) {
  require(specs.size() == priors.size() || specs.size() == 1, ErrorCode::SizeMismatch,
          "reference law: one spec per input (or a single shared spec) required");
  std::vector<UnivariateDist> marginals;
  for (std::size_t k = 0; k < priors.size(); ++k) {
    marginals.push_back(reference_law(priors[k], specs.size() == 1 ? specs[0] : specs[k]));
  }
  return ProductDist(std::move(marginals));
}

}  // namespace hsicgsa
