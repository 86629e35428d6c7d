#include "hsicgsa/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "hsicgsa/errors.hpp"
#include "hsicgsa/numerics.hpp"

namespace hsicgsa {

const char* to_string(Family family) {
  switch (family) {
    case Family::Uniform: return "uniform";
    case Family::Triangular: return "triangular";
    case Family::TruncNormal: return "trunc_normal";
    case Family::FiniteMixture: return "mixture";
    case Family::QuantileGrid: return "quantile_grid";
  }
  return "unknown";
}

namespace detail {

struct DistImpl {
  Family family;
  double lower;
  double upper;
  std::vector<double> params;
  std::vector<WeightedLaw> components;
  std::vector<double> quantiles;
  // Truncated normal: standardized bounds and normalizer.
  double alpha = 0.0;
  double beta = 0.0;
  double mass = 1.0;
  double mean = 0.0;
  double variance = 0.0;
};

}  // namespace detail

namespace {

using detail::DistImpl;

// Upper normal tail 1 - Phi(x), accurate for large positive x.
double normal_tail(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

// Phi(hi) - Phi(lo) without cancellation when both are in the upper tail.
double normal_mass(double lo, double hi) {
  if (lo >= 0.0) return normal_tail(lo) - normal_tail(hi);
  return numerics::normal_cdf(hi) - numerics::normal_cdf(lo);
}

void check_finite(std::initializer_list<double> values, const char* what) {
  for (double v : values) {
    require(std::isfinite(v), ErrorCode::InvalidParameter,
            std::string(what) + ": parameters must be finite");
  }
}

void check_support(double a, double b, const char* what) {
  require(a < b, ErrorCode::InvalidParameter,
          std::string(what) + ": support requires a < b");
}

double grid_pdf(const DistImpl& d, double x) {
  const auto& q = d.quantiles;
  if (x < q.front() || x > q.back()) return 0.0;
  const double dp = 1.0 / static_cast<double>(q.size() - 1);
  auto it = std::upper_bound(q.begin(), q.end(), x);
  std::size_t i = it == q.end() ? q.size() - 2 : static_cast<std::size_t>(it - q.begin()) - 1;
  return dp / (q[i + 1] - q[i]);
}

double grid_cdf(const DistImpl& d, double x) {
  const auto& q = d.quantiles;
  if (x <= q.front()) return 0.0;
  if (x >= q.back()) return 1.0;
  const double dp = 1.0 / static_cast<double>(q.size() - 1);
  auto it = std::upper_bound(q.begin(), q.end(), x);
  const auto i = static_cast<std::size_t>(it - q.begin()) - 1;
  return (static_cast<double>(i) + (x - q[i]) / (q[i + 1] - q[i])) * dp;
}

double grid_quantile(const DistImpl& d, double p) {
  const auto& q = d.quantiles;
  const double pos = p * static_cast<double>(q.size() - 1);
  auto i = static_cast<std::size_t>(pos);
  if (i >= q.size() - 1) i = q.size() - 2;
  const double t = pos - static_cast<double>(i);
  return q[i] + t * (q[i + 1] - q[i]);
}

double impl_pdf(const DistImpl& d, double x);
double impl_cdf(const DistImpl& d, double x);

double impl_pdf(const DistImpl& d, double x) {
  if (!(x >= d.lower && x <= d.upper)) return 0.0;
  switch (d.family) {
    case Family::Uniform:
      return 1.0 / (d.upper - d.lower);
    case Family::Triangular: {
      const double a = d.lower, b = d.upper, c = d.params[2];
      if (x < c) return 2.0 * (x - a) / ((b - a) * (c - a));
      if (x > c) return 2.0 * (b - x) / ((b - a) * (b - c));
      return 2.0 / (b - a);
    }
    case Family::TruncNormal: {
      const double sd = d.params[3];
      const double z = (x - d.params[2]) / sd;
      return numerics::normal_pdf(z) / (sd * d.mass);
    }
    case Family::FiniteMixture: {
      double sum = 0.0;
      for (const auto& c : d.components) sum += c.weight * c.law.pdf(x);
      return sum;
    }
    case Family::QuantileGrid:
      return grid_pdf(d, x);
  }
  return 0.0;
}

double impl_cdf(const DistImpl& d, double x) {
  if (x <= d.lower) return 0.0;
  if (x >= d.upper) return 1.0;
  switch (d.family) {
    case Family::Uniform:
      return (x - d.lower) / (d.upper - d.lower);
    case Family::Triangular: {
      const double a = d.lower, b = d.upper, c = d.params[2];
      if (x <= c) return (x - a) * (x - a) / ((b - a) * (c - a));
      return 1.0 - (b - x) * (b - x) / ((b - a) * (b - c));
    }
    case Family::TruncNormal: {
      const double z = (x - d.params[2]) / d.params[3];
      return std::clamp(normal_mass(d.alpha, z) / d.mass, 0.0, 1.0);
    }
    case Family::FiniteMixture: {
      double sum = 0.0;
      for (const auto& c : d.components) sum += c.weight * c.law.cdf(x);
      return std::clamp(sum, 0.0, 1.0);
    }
    case Family::QuantileGrid:
      return grid_cdf(d, x);
  }
  return 0.0;
}

double impl_quantile(const DistImpl& d, double p) {
  switch (d.family) {
    case Family::Uniform:
      return d.lower + p * (d.upper - d.lower);
    case Family::Triangular: {
      const double a = d.lower, b = d.upper, c = d.params[2];
      const double split = (c - a) / (b - a);
      if (p <= split) return a + std::sqrt(p * (b - a) * (c - a));
      return b - std::sqrt((1.0 - p) * (b - a) * (b - c));
    }
    case Family::QuantileGrid:
      return grid_quantile(d, p);
    case Family::TruncNormal:
    case Family::FiniteMixture:
      return numerics::invert_cdf([&](double x) { return impl_cdf(d, x); },
                                  [&](double x) { return impl_pdf(d, x); }, p, d.lower,
                                  d.upper);
  }
  return 0.0;
}

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

UnivariateDist UnivariateDist::uniform(double a, double b) {
  check_finite({a, b}, "uniform");
  check_support(a, b, "uniform");
  auto impl = std::make_shared<DistImpl>();
  impl->family = Family::Uniform;
  impl->lower = a;
  impl->upper = b;
  impl->params = {a, b};
  impl->mean = 0.5 * (a + b);
  impl->variance = (b - a) * (b - a) / 12.0;
  return UnivariateDist(std::move(impl));
}

UnivariateDist UnivariateDist::triangular(double a, double b, double mode) {
  check_finite({a, b, mode}, "triangular");
  check_support(a, b, "triangular");
  require(a <= mode && mode <= b, ErrorCode::InvalidParameter,
          "triangular: mode must lie in [a, b]");
  auto impl = std::make_shared<DistImpl>();
  impl->family = Family::Triangular;
  impl->lower = a;
  impl->upper = b;
  impl->params = {a, b, mode};
  impl->mean = (a + b + mode) / 3.0;
  impl->variance = (a * a + b * b + mode * mode - a * b - a * mode - b * mode) / 18.0;
  return UnivariateDist(std::move(impl));
}

UnivariateDist UnivariateDist::trunc_normal(double a, double b, double mean, double sd) {
  check_finite({a, b, mean, sd}, "trunc_normal");
  check_support(a, b, "trunc_normal");
  require(sd > 0.0, ErrorCode::InvalidParameter, "trunc_normal: sd must be positive");
  auto impl = std::make_shared<DistImpl>();
  impl->family = Family::TruncNormal;
  impl->lower = a;
  impl->upper = b;
  impl->params = {a, b, mean, sd};
  impl->alpha = (a - mean) / sd;
  impl->beta = (b - mean) / sd;
  impl->mass = normal_mass(impl->alpha, impl->beta);
  require(impl->mass > 1e-300, ErrorCode::InvalidParameter,
          "trunc_normal: support carries no normal mass");
  const double pa = numerics::normal_pdf(impl->alpha);
  const double pb = numerics::normal_pdf(impl->beta);
  const double shift = (pa - pb) / impl->mass;
  impl->mean = mean + sd * shift;
  impl->variance =
      sd * sd * (1.0 + (impl->alpha * pa - impl->beta * pb) / impl->mass - shift * shift);
  return UnivariateDist(std::move(impl));
}

UnivariateDist UnivariateDist::mixture(std::vector<WeightedLaw> components) {
  require(!components.empty(), ErrorCode::InvalidParameter, "mixture: no components");
  double total = 0.0;
  for (const auto& c : components) {
    require(std::isfinite(c.weight) && c.weight >= 0.0, ErrorCode::InvalidParameter,
            "mixture: weights must be finite and nonnegative");
    total += c.weight;
  }
  require(std::abs(total - 1.0) <= 1e-12, ErrorCode::InvalidParameter,
          "mixture: weights must sum to 1");
  auto impl = std::make_shared<DistImpl>();
  impl->family = Family::FiniteMixture;
  impl->lower = components.front().law.lower();
  impl->upper = components.front().law.upper();
  double m = 0.0;
  double second = 0.0;
  for (auto& c : components) {
    c.weight /= total;
    impl->lower = std::min(impl->lower, c.law.lower());
    impl->upper = std::max(impl->upper, c.law.upper());
    m += c.weight * c.law.mean();
    second += c.weight * (c.law.variance() + c.law.mean() * c.law.mean());
  }
  impl->mean = m;
  impl->variance = second - m * m;
  impl->components = std::move(components);
  return UnivariateDist(std::move(impl));
}

UnivariateDist UnivariateDist::quantile_grid(std::vector<double> quantiles) {
  require(quantiles.size() >= 2, ErrorCode::InvalidParameter,
          "quantile_grid: at least two nodes required");
  for (std::size_t i = 0; i < quantiles.size(); ++i) {
    require(std::isfinite(quantiles[i]), ErrorCode::InvalidParameter,
            "quantile_grid: nodes must be finite");
    if (i > 0) {
      require(quantiles[i] > quantiles[i - 1], ErrorCode::InvalidParameter,
              "quantile_grid: quantile table must increase strictly");
    }
  }
  auto impl = std::make_shared<DistImpl>();
  impl->family = Family::QuantileGrid;
  impl->lower = quantiles.front();
  impl->upper = quantiles.back();
  // Each segment is a uniform piece of mass dp.
  const double dp = 1.0 / static_cast<double>(quantiles.size() - 1);
  double m = 0.0;
  double second = 0.0;
  for (std::size_t i = 0; i + 1 < quantiles.size(); ++i) {
    const double lo = quantiles[i], hi = quantiles[i + 1];
    m += dp * 0.5 * (lo + hi);
    second += dp * (lo * lo + lo * hi + hi * hi) / 3.0;
  }
  impl->mean = m;
  impl->variance = std::max(0.0, second - m * m);
  impl->quantiles = std::move(quantiles);
  return UnivariateDist(std::move(impl));
}

Family UnivariateDist::family() const { return impl_->family; }
double UnivariateDist::lower() const { return impl_->lower; }
double UnivariateDist::upper() const { return impl_->upper; }
double UnivariateDist::pdf(double x) const { return impl_pdf(*impl_, x); }
double UnivariateDist::cdf(double x) const { return impl_cdf(*impl_, x); }

double UnivariateDist::quantile(double p) const {
  require(p > 0.0 && p < 1.0, ErrorCode::Domain, "quantile: probability must lie in (0, 1)");
  return impl_quantile(*impl_, p);
}

double UnivariateDist::evaluate(double x, Functional what) const {
  switch (what) {
    case Functional::Pdf: return pdf(x);
    case Functional::Cdf: return cdf(x);
    case Functional::Quantile: return quantile(x);
  }
  return 0.0;
}

double UnivariateDist::mean() const { return impl_->mean; }
double UnivariateDist::variance() const { return impl_->variance; }

std::vector<double> UnivariateDist::sample(std::size_t n, RngStream& rng) const {
  std::vector<double> out(n);
  sample_into(out, rng);
  return out;
}

void UnivariateDist::sample_into(std::span<double> out, RngStream& rng) const {
  for (double& x : out) x = impl_quantile(*impl_, rng.uniform());
}

const std::vector<double>& UnivariateDist::parameters() const { return impl_->params; }
const std::vector<WeightedLaw>& UnivariateDist::components() const { return impl_->components; }
const std::vector<double>& UnivariateDist::quantile_table() const { return impl_->quantiles; }

std::string UnivariateDist::describe() const {
  std::ostringstream os;
  os << to_string(impl_->family);
  switch (impl_->family) {
    case Family::Uniform:
    case Family::Triangular:
    case Family::TruncNormal: {
      os << '(';
      for (std::size_t i = 0; i < impl_->params.size(); ++i) {
        if (i) os << ',';
        os << format_number(impl_->params[i]);
      }
      os << ')';
      break;
    }
    case Family::FiniteMixture: {
      os << '[';
      for (std::size_t i = 0; i < impl_->components.size(); ++i) {
        if (i) os << ';';
        os << format_number(impl_->components[i].weight) << '*'
           << impl_->components[i].law.describe();
      }
      os << ']';
      break;
    }
    case Family::QuantileGrid:
      os << '(' << format_number(impl_->lower) << ',' << format_number(impl_->upper) << ','
         << impl_->quantiles.size() << " nodes)";
      break;
  }
  return os.str();
}

bool operator==(const UnivariateDist& lhs, const UnivariateDist& rhs) {
  if (lhs.impl_ == rhs.impl_) return true;
  const auto& a = *lhs.impl_;
  const auto& b = *rhs.impl_;
  if (a.family != b.family || a.params != b.params || a.quantiles != b.quantiles) return false;
  if (a.components.size() != b.components.size()) return false;
  for (std::size_t i = 0; i < a.components.size(); ++i) {
    if (a.components[i].weight != b.components[i].weight ||
        !(a.components[i].law == b.components[i].law)) {
      return false;
    }
  }
  return true;
}

ProductDist::ProductDist(std::vector<UnivariateDist> marginals) : marginals_(std::move(marginals)) {
  require(!marginals_.empty(), ErrorCode::InvalidParameter, "product law needs at least one marginal");
}

double ProductDist::pdf(std::span<const double> x) const {
  require(x.size() == marginals_.size(), ErrorCode::SizeMismatch,
          "product pdf: point dimension does not match the law");
  double value = 1.0;
  for (std::size_t k = 0; k < x.size(); ++k) value *= marginals_[k].pdf(x[k]);
  return value;
}

Eigen::MatrixXd ProductDist::sample(std::size_t n, RngStream& rng) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dimension()));
  for (std::size_t k = 0; k < dimension(); ++k) {
    marginals_[k].sample_into(std::span<double>(out.col(static_cast<Eigen::Index>(k)).data(), n), rng);
  }
  return out;
}

UnivariateDist ParamFamily::make(double value) const {
  std::vector<double> p = parameters;
  require(uncertain_index < p.size(), ErrorCode::InvalidParameter,
          "parametric prior: uncertain parameter index out of range");
  p[uncertain_index] = value;
  switch (family) {
    case Family::Uniform:
      require(p.size() == 2, ErrorCode::InvalidParameter, "uniform takes 2 parameters");
      return UnivariateDist::uniform(p[0], p[1]);
    case Family::Triangular:
      require(p.size() == 3, ErrorCode::InvalidParameter, "triangular takes 3 parameters");
      return UnivariateDist::triangular(p[0], p[1], p[2]);
    case Family::TruncNormal:
      require(p.size() == 4, ErrorCode::InvalidParameter, "trunc_normal takes 4 parameters");
      return UnivariateDist::trunc_normal(p[0], p[1], p[2], p[3]);
    default:
      fail(ErrorCode::Unsupported, "parametric prior: family cannot be parameterized");
  }
}

namespace {

bool same_support(double a0, double b0, double a1, double b1) {
  const double scale = std::max({1.0, std::abs(a0), std::abs(b0)});
  return std::abs(a0 - a1) <= 1e-12 * scale && std::abs(b0 - b1) <= 1e-12 * scale;
}

}  // namespace

DistPrior DistPrior::finite(std::vector<WeightedLaw> atoms) {
  require(!atoms.empty(), ErrorCode::InvalidParameter, "finite prior: no candidate laws");
  double total = 0.0;
  std::vector<WeightedLaw> merged;
  for (const auto& atom : atoms) {
    require(std::isfinite(atom.weight) && atom.weight >= 0.0, ErrorCode::InvalidParameter,
            "finite prior: probabilities must be finite and nonnegative");
    total += atom.weight;
    auto it = std::find_if(merged.begin(), merged.end(),
                           [&](const WeightedLaw& m) { return m.law == atom.law; });
    if (it != merged.end()) it->weight += atom.weight;
    else if (atom.weight > 0.0) merged.push_back(atom);
  }
  require(std::abs(total - 1.0) <= 1e-12, ErrorCode::InvalidParameter,
          "finite prior: probabilities must sum to 1");
  DistPrior prior;
  prior.lower_ = merged.front().law.lower();
  prior.upper_ = merged.front().law.upper();
  for (auto& atom : merged) {
    require(same_support(prior.lower_, prior.upper_, atom.law.lower(), atom.law.upper()),
            ErrorCode::SupportViolation, "finite prior: candidate laws must share one support");
    atom.weight /= total;
  }
  prior.atoms_ = std::move(merged);
  return prior;
}

DistPrior DistPrior::fixed(UnivariateDist law) { return finite({{std::move(law), 1.0}}); }

DistPrior DistPrior::parametric(ParamFamily family) {
  require(family.uncertain_index >= 2, ErrorCode::InvalidParameter,
          "parametric prior: support bounds cannot be uncertain");
  // Both ends of the parameter range must give valid laws; the families are
  // monotone in their shape parameters so interior values are valid too.
  const UnivariateDist at_low = family.make(family.parameter_law.lower());
  family.make(family.parameter_law.upper());
  DistPrior prior;
  prior.lower_ = at_low.lower();
  prior.upper_ = at_low.upper();
  prior.family_ = std::make_shared<const ParamFamily>(std::move(family));
  return prior;
}

const ParamFamily& DistPrior::param_family() const {
  require(static_cast<bool>(family_), ErrorCode::Unsupported, "prior is not parametric");
  return *family_;
}

UnivariateDist draw_law(const DistPrior& prior, RngStream& rng) {
  if (!prior.is_finite()) {
    const auto& family = prior.param_family();
    return family.make(family.parameter_law.quantile(rng.uniform()));
  }
  const auto& atoms = prior.atoms();
  if (atoms.size() == 1) return atoms.front().law;
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (const auto& atom : atoms) {
    cumulative += atom.weight;
    if (u < cumulative) return atom.law;
  }
  return atoms.back().law;
}

std::vector<WeightedProduct> enumerate_prior(std::span<const DistPrior> priors) {
  require(!priors.empty(), ErrorCode::InvalidParameter, "enumeration needs at least one prior");
  for (const auto& prior : priors) {
    require(prior.is_finite(), ErrorCode::Unsupported,
            "enumeration requires finite priors on every input");
  }
  std::vector<std::size_t> index(priors.size(), 0);
  std::vector<WeightedProduct> out;
  for (;;) {
    std::vector<UnivariateDist> marginals;
    double probability = 1.0;
    for (std::size_t k = 0; k < priors.size(); ++k) {
      const auto& atom = priors[k].atoms()[index[k]];
      marginals.push_back(atom.law);
      probability *= atom.weight;
    }
    out.push_back({ProductDist(std::move(marginals)), probability, index});
    // Odometer increment, last input fastest.
    std::size_t k = priors.size();
    while (k > 0) {
      --k;
      if (++index[k] < priors[k].atoms().size()) break;
      index[k] = 0;
      if (k == 0) return out;
    }
  }
}

}  // namespace hsicgsa
