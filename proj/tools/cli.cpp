#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hsicgsa/weighted.hpp"

namespace hsicgsa::cli {

namespace fs = std::filesystem;

const char* version() { return HSICGSA_VERSION; }

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return 3;
    case ErrorCode::Schema: return 4;
    case ErrorCode::Parse: return 5;
    case ErrorCode::Degenerate: return 6;
    case ErrorCode::SupportViolation:
    case ErrorCode::HeavyTail: return 7;
    case ErrorCode::ModelFailure: return 8;
    case ErrorCode::InvalidParameter:
    case ErrorCode::Domain:
    case ErrorCode::SizeMismatch:
    case ErrorCode::Unsupported: return 9;
  }
  return 1;
}

namespace {

std::string at(const std::string& path, const std::string& key) { return path + "/" + key; }
std::string at(const std::string& path, std::size_t i) { return path + "/" + std::to_string(i); }

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  fail(ErrorCode::Schema, "config " + (path.empty() ? std::string("/") : path) + ": " + what);
}

void only_keys(const Json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) schema_error(path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return it.key() == k; });
    if (!known) schema_error(at(path, it.key()), "unknown key");
  }
}

const Json& member(const Json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) schema_error(at(path, key), "required key missing");
  return j.at(key);
}

double number(const Json& j, const std::string& path) {
  if (!j.is_number()) schema_error(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) schema_error(path, "expected a finite number");
  return v;
}

std::uint64_t integer(const Json& j, const std::string& path, std::uint64_t min = 0) {
  if (j.is_number_unsigned()) {
    const auto v = j.get<std::uint64_t>();
    if (v < min) schema_error(path, "must be >= " + std::to_string(min));
    return v;
  }
  if (j.is_number_integer()) {
    const auto v = j.get<std::int64_t>();
    if (v < 0 || static_cast<std::uint64_t>(v) < min) {
      schema_error(path, "must be >= " + std::to_string(min));
    }
    return static_cast<std::uint64_t>(v);
  }
  schema_error(path, "expected a nonnegative integer");
}

bool boolean(const Json& j, const std::string& path) {
  if (!j.is_boolean()) schema_error(path, "expected true or false");
  return j.get<bool>();
}

std::string string(const Json& j, const std::string& path) {
  if (!j.is_string()) schema_error(path, "expected a string");
  return j.get<std::string>();
}

const Json& array(const Json& j, const std::string& path) {
  if (!j.is_array()) schema_error(path, "expected an array");
  return j;
}

template <class T>
T choice(const Json& j, const std::string& path,
         std::initializer_list<std::pair<const char*, T>> options) {
  const std::string s = string(j, path);
  for (const auto& [name, value] : options) {
    if (s == name) return value;
  }
  std::string known;
  for (const auto& [name, value] : options) known += (known.empty() ? "" : ", ") + std::string(name);
  schema_error(path, "unknown value '" + s + "' (expected one of " + known + ")");
}

// Library validation failures while building an object become schema errors
// at the key that described it.
template <class F>
auto build(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Schema) throw;
    schema_error(path, e.what());
  }
}

ReferenceMethod parse_method(const Json& j, const std::string& path) {
  return choice<ReferenceMethod>(j, path,
                                 {{"mixture", ReferenceMethod::Mixture},
                                  {"kl", ReferenceMethod::KLBarycenter},
                                  {"wasserstein", ReferenceMethod::WassersteinBarycenter}});
}

ReferenceLawSpec parse_reference(const Json& j, const std::string& path) {
  only_keys(j, path, {"method", "grid_size"});
  ReferenceLawSpec spec;
  if (j.contains("method")) spec.method = parse_method(j.at("method"), at(path, "method"));
  if (j.contains("grid_size")) spec.grid_size = integer(j.at("grid_size"), at(path, "grid_size"), 64);
  return spec;
}

std::vector<ReferenceLawSpec> parse_references(const Json& j, const std::string& path) {
  std::vector<ReferenceLawSpec> out;
  if (j.is_array()) {
    if (j.empty()) schema_error(path, "expected at least one reference law");
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(parse_reference(j[i], at(path, i)));
  } else {
    out.push_back(parse_reference(j, path));
  }
  return out;
}

Json reference_json(const ReferenceLawSpec& r) {
  return Json{{"method", to_string(r.method)}, {"grid_size", r.grid_size}};
}

ModelVariant parse_variant(const Json& j, const std::string& path) {
  return choice<ModelVariant>(j, path,
                              {{"ishigami-coef18", ModelVariant::Coef18},
                               {"ishigami-coef15", ModelVariant::Coef15}});
}

const char* variant_name(ModelVariant v) {
  return v == ModelVariant::Coef18 ? "ishigami-coef18" : "ishigami-coef15";
}

ExperimentSpec apply_bench(ExperimentSpec spec, const Json& j, const std::string& path) {
  if (j.is_null()) return spec;
  only_keys(j, path, {"sizes", "reps", "references", "n1", "exhaustive", "variant",
                      "triangular_mode"});
  if (j.contains("sizes")) {
    const Json& s = array(j.at("sizes"), at(path, "sizes"));
    spec.sizes.clear();
    for (std::size_t i = 0; i < s.size(); ++i) spec.sizes.push_back(integer(s[i], at(at(path, "sizes"), i)));
  }
  if (j.contains("reps")) spec.reps = integer(j.at("reps"), at(path, "reps"), 1);
  if (j.contains("references")) {
    const std::string p = at(path, "references");
    const Json& refs = array(j.at("references"), p);
    spec.references.clear();
    for (std::size_t i = 0; i < refs.size(); ++i) spec.references.push_back(parse_reference(refs[i], at(p, i)));
  }
  if (j.contains("n1")) spec.n1 = integer(j.at("n1"), at(path, "n1"));
  if (j.contains("exhaustive")) spec.exhaustive_laws = boolean(j.at("exhaustive"), at(path, "exhaustive"));
  if (j.contains("variant")) spec.variant = parse_variant(j.at("variant"), at(path, "variant"));
  if (j.contains("triangular_mode")) {
    spec.triangular_mode = number(j.at("triangular_mode"), at(path, "triangular_mode"));
  }
  return spec;
}

Json spec_json(const ExperimentSpec& s) {
  Json refs = Json::array();
  for (const auto& r : s.references) refs.push_back(reference_json(r));
  return Json{{"scenario", to_string(s.scenario)},
              {"sizes", s.sizes},
              {"reps", s.reps},
              {"references", refs},
              {"seed", s.seed},
              {"variant", variant_name(s.variant)},
              {"triangular_mode", s.triangular_mode},
              {"n1", s.n1},
              {"exhaustive", s.exhaustive_laws},
              {"threads", s.threads}};
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    const auto b = field.find_first_not_of(" \t");
    const auto e = field.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

fs::path output_dir(const RunConfig& c, const Overrides& o) { return o.out_dir ? *o.out_dir : c.out_dir; }

RngStream run_stream(const RunConfig& c, const Overrides& o) { return RngStream(o.seed ? *o.seed : c.seed); }

Json artifact_head(const char* command, const RunConfig& c, const Overrides& o) {
  Json resolved = c.resolved;
  resolved["seed"] = o.seed ? *o.seed : c.seed;
  if (o.threads) resolved["threads"] = *o.threads;
  if (o.out_dir) resolved["output"]["dir"] = o.out_dir->string();
  return Json{{"tool", "hsicgsa"},
              {"version", version()},
              {"command", command},
              {"seed", resolved["seed"]},
              {"config", resolved}};
}

std::vector<std::string> input_names(const RunConfig& c) {
  std::vector<std::string> names;
  for (const auto& in : c.inputs) names.push_back(in.name);
  return names;
}

void need_inputs(const RunConfig& c, const char* command) {
  if (c.inputs.empty()) schema_error("/inputs", std::string("required for ") + command);
}

}  // namespace

UnivariateDist parse_law(const Json& j, const std::string& path) {
  if (j.is_object() && j.contains("mixture")) {
    only_keys(j, path, {"mixture"});
    const std::string p = at(path, "mixture");
    const Json& comps = array(j.at("mixture"), p);
    std::vector<WeightedLaw> parts;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      const std::string q = at(p, i);
      only_keys(comps[i], q, {"law", "weight"});
      parts.push_back({parse_law(member(comps[i], q, "law"), at(q, "law")),
                       number(member(comps[i], q, "weight"), at(q, "weight"))});
    }
    return build(path, [&] { return UnivariateDist::mixture(std::move(parts)); });
  }
  only_keys(j, path, {"family", "params"});
  const Json& params = array(member(j, path, "params"), at(path, "params"));
  std::vector<double> p;
  for (std::size_t i = 0; i < params.size(); ++i) p.push_back(number(params[i], at(at(path, "params"), i)));
  const std::string family = string(member(j, path, "family"), at(path, "family"));
  const auto arity = [&](std::size_t n) {
    if (p.size() != n) schema_error(at(path, "params"), family + " takes " + std::to_string(n) + " parameters");
  };
  return build(path, [&] {
    if (family == "uniform") {
      arity(2);
      return UnivariateDist::uniform(p[0], p[1]);
    }
    if (family == "triangular") {
      arity(3);
      return UnivariateDist::triangular(p[0], p[1], p[2]);
    }
    if (family == "trunc_normal") {
      arity(4);
      return UnivariateDist::trunc_normal(p[0], p[1], p[2], p[3]);
    }
    schema_error(at(path, "family"),
                 "unknown family '" + family + "' (expected uniform, triangular, trunc_normal)");
  });
}

DistPrior parse_prior(const Json& j, const std::string& path) {
  if (j.is_object() && j.contains("atoms")) {
    only_keys(j, path, {"atoms"});
    const std::string p = at(path, "atoms");
    const Json& atoms = array(j.at("atoms"), p);
    std::vector<WeightedLaw> parts;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const std::string q = at(p, i);
      only_keys(atoms[i], q, {"law", "weight"});
      parts.push_back({parse_law(member(atoms[i], q, "law"), at(q, "law")),
                       number(member(atoms[i], q, "weight"), at(q, "weight"))});
    }
    return build(path, [&] { return DistPrior::finite(std::move(parts)); });
  }
  only_keys(j, path, {"family", "params", "uncertain", "over"});
  const Json& params = array(member(j, path, "params"), at(path, "params"));
  ParamFamily fam{Family::Uniform, {}, 0, UnivariateDist::uniform(0, 1)};
  for (std::size_t i = 0; i < params.size(); ++i) {
    fam.parameters.push_back(number(params[i], at(at(path, "params"), i)));
  }
  fam.family = choice<Family>(member(j, path, "family"), at(path, "family"),
                              {{"uniform", Family::Uniform},
                               {"triangular", Family::Triangular},
                               {"trunc_normal", Family::TruncNormal}});
  fam.uncertain_index = integer(member(j, path, "uncertain"), at(path, "uncertain"));
  fam.parameter_law = parse_law(member(j, path, "over"), at(path, "over"));
  return build(path, [&] { return DistPrior::parametric(std::move(fam)); });
}

RunConfig parse_config(const Json& doc, const fs::path& base) {
  only_keys(doc, "", {"inputs", "reference", "qoi", "second_level", "n1", "n2", "B", "seed",
                      "exhaustive", "threads", "model", "output", "bench"});
  RunConfig c;
  Json resolved = Json::object();
  if (doc.contains("inputs")) {
    const Json& inputs = array(doc.at("inputs"), "/inputs");
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const std::string p = at("/inputs", i);
      const Json& j = inputs[i];
      only_keys(j, p, {"name", "law", "prior", "target"});
      const std::string name = string(member(j, p, "name"), at(p, "name"));
      if (name.empty() || name.find_first_of(",\"\n\r") != std::string::npos) {
        schema_error(at(p, "name"), "names must be nonempty without commas, quotes or newlines");
      }
      for (const auto& other : c.inputs) {
        if (other.name == name) schema_error(at(p, "name"), "duplicate input name '" + name + "'");
      }
      if (j.contains("law") == j.contains("prior")) schema_error(p, "give exactly one of 'law' or 'prior'");
      InputConfig in{name, DistPrior::fixed(UnivariateDist::uniform(0, 1)), std::nullopt, std::nullopt};
      if (j.contains("law")) {
        in.law = parse_law(j.at("law"), at(p, "law"));
        in.prior = DistPrior::fixed(*in.law);
      } else {
        in.prior = parse_prior(j.at("prior"), at(p, "prior"));
      }
      if (j.contains("target")) {
        in.target = parse_law(j.at("target"), at(p, "target"));
        if (in.law) {
          const auto& law = *in.law;
          const auto& target = *in.target;
          if (law.lower() != target.lower() || law.upper() != target.upper()) {
            schema_error(at(p, "target"), "target support must equal the sampling law's support");
          }
        }
      }
      c.inputs.push_back(std::move(in));
    }
    resolved["inputs"] = inputs;
  } else {
    resolved["inputs"] = Json::array();
  }
  if (doc.contains("reference")) c.references = parse_references(doc.at("reference"), "/reference");
  if (c.references.size() != 1 && c.references.size() != c.inputs.size()) {
    schema_error("/reference", "give one reference law or one per input");
  }
  if (c.references.size() == 1) {
    resolved["reference"] = reference_json(c.references[0]);
  } else {
    resolved["reference"] = Json::array();
    for (const auto& r : c.references) resolved["reference"].push_back(reference_json(r));
  }
  if (doc.contains("qoi")) {
    const Json& q = doc.at("qoi");
    only_keys(q, "/qoi", {"kind", "epsilon"});
    if (q.contains("kind")) {
      c.qoi.kind = choice<QoiKind>(q.at("kind"), "/qoi/kind",
                                   {{"r2", QoiKind::R2Vector},
                                    {"ranking", QoiKind::Ranking},
                                    {"asymp_pvalue", QoiKind::AsympPvalVector},
                                    {"perm_pvalue", QoiKind::PermPvalVector}});
    }
    if (q.contains("epsilon")) {
      c.qoi.epsilon = choice<EpsilonMode>(q.at("epsilon"), "/qoi/epsilon",
                                          {{"bias", EpsilonMode::BiasPlugIn},
                                           {"observed", EpsilonMode::Observed}});
    }
  }
  const char* kinds[] = {"r2", "ranking", "asymp_pvalue", "perm_pvalue"};
  resolved["qoi"] = Json{{"kind", kinds[static_cast<int>(c.qoi.kind)]},
                         {"epsilon", c.qoi.epsilon == EpsilonMode::BiasPlugIn ? "bias" : "observed"}};
  if (doc.contains("second_level")) {
    const Json& s = doc.at("second_level");
    only_keys(s, "/second_level", {"law_bandwidth", "qoi_bandwidth"});
    if (s.contains("law_bandwidth")) {
      const int rule = choice<int>(s.at("law_bandwidth"), "/second_level/law_bandwidth",
                                   {{"mean_pairwise", 0}, {"spread_per_law", 1}, {"spread_squared", 2}});
      c.second_level.law_bandwidth.rule =
          rule == 0 ? LawBandwidthRule::MeanPairwise : LawBandwidthRule::MixtureSpread;
      c.second_level.law_bandwidth.normalization =
          rule == 2 ? SpreadNormalization::Squared : SpreadNormalization::PerLaw;
    }
    if (s.contains("qoi_bandwidth")) {
      c.second_level.qoi_bandwidth =
          choice<QoiBandwidthRule>(s.at("qoi_bandwidth"), "/second_level/qoi_bandwidth",
                                   {{"mean_pairwise", QoiBandwidthRule::MeanPairwise},
                                    {"coordinate_variance", QoiBandwidthRule::CoordinateVariance}});
    }
  }
  const auto& lb = c.second_level.law_bandwidth;
  resolved["second_level"] = Json{
      {"law_bandwidth", lb.rule == LawBandwidthRule::MeanPairwise ? "mean_pairwise"
                        : lb.normalization == SpreadNormalization::PerLaw ? "spread_per_law"
                                                                           : "spread_squared"},
      {"qoi_bandwidth", c.second_level.qoi_bandwidth == QoiBandwidthRule::MeanPairwise
                            ? "mean_pairwise"
                            : "coordinate_variance"}};
  if (doc.contains("n1")) c.n1 = integer(doc.at("n1"), "/n1", 2);
  if (doc.contains("n2")) c.n2 = integer(doc.at("n2"), "/n2", 6);
  if (doc.contains("B")) c.permutations = integer(doc.at("B"), "/B");
  if (c.qoi.kind == QoiKind::PermPvalVector && c.permutations == 0) {
    schema_error("/B", "permutation p-value results need B >= 1");
  }
  c.qoi.permutations = c.permutations;
  if (doc.contains("seed")) {
    c.seed = integer(doc.at("seed"), "/seed");
    c.seed_given = true;
  }
  if (doc.contains("exhaustive")) c.exhaustive = boolean(doc.at("exhaustive"), "/exhaustive");
  if (doc.contains("threads")) c.threads = integer(doc.at("threads"), "/threads", 1);
  resolved["n1"] = c.n1;
  resolved["n2"] = c.n2;
  resolved["B"] = c.permutations;
  resolved["seed"] = c.seed;
  resolved["exhaustive"] = c.exhaustive;
  resolved["threads"] = c.threads;
  if (c.exhaustive) {
    for (std::size_t i = 0; i < c.inputs.size(); ++i) {
      if (!c.inputs[i].prior.is_finite()) {
        schema_error(at(at("/inputs", i), "prior"), "exhaustive designs need finite priors");
      }
    }
  }
  if (doc.contains("model")) {
    const Json& m = doc.at("model");
    only_keys(m, "/model", {"builtin", "sample"});
    if (m.contains("builtin") == m.contains("sample")) schema_error("/model", "give exactly one of 'builtin' or 'sample'");
    if (m.contains("builtin")) {
      c.model.builtin = parse_variant(m.at("builtin"), "/model/builtin");
      if (!c.inputs.empty() && c.inputs.size() != 3) {
        schema_error("/model/builtin", "the builtin model takes 3 inputs");
      }
      for (std::size_t i = 0; i < c.inputs.size(); ++i) {
        const auto& pr = c.inputs[i].prior;
        if (pr.lower() < 0.0 || pr.upper() > 1.0) {
          schema_error(at("/inputs", i), "the builtin model is defined on [0, 1]");
        }
      }
      resolved["model"] = Json{{"builtin", variant_name(*c.model.builtin)}};
    } else {
      const std::string s = string(m.at("sample"), "/model/sample");
      c.model.sample = fs::path(s).is_absolute() ? fs::path(s) : base / s;
      resolved["model"] = Json{{"sample", s}};
    }
  } else {
    resolved["model"] = nullptr;
  }
  if (doc.contains("output")) {
    const Json& o = doc.at("output");
    only_keys(o, "/output", {"dir", "write_sample"});
    if (o.contains("dir")) c.out_dir = string(o.at("dir"), "/output/dir");
    if (o.contains("write_sample")) c.write_sample = boolean(o.at("write_sample"), "/output/write_sample");
  }
  resolved["output"] = Json{{"dir", c.out_dir.string()}, {"write_sample", c.write_sample}};
  if (doc.contains("bench")) {
    c.bench = doc.at("bench");
    // Checked against every scenario's defaults so `validate` reports it.
    for (Scenario sc : {Scenario::Gsa1Convergence, Scenario::Gsa2Convergence,
                        Scenario::BudgetComparison, Scenario::Bootstrap}) {
      const ExperimentSpec spec = apply_bench(default_spec(sc), c.bench, "/bench");
      build("/bench", [&] { validate(spec); return 0; });
    }
    resolved["bench"] = c.bench;
  }
  c.resolved = std::move(resolved);
  return c;
}

RunConfig load_config(const fs::path& path) {
  const std::string text = read_file(path);
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::Parse, "config '" + path.string() + "': " + e.what());
  }
  RunConfig c = parse_config(doc, path.parent_path());
  c.resolved["source"] = path.filename().string();
  return c;
}

SampleSet parse_sample(const std::string& text, const std::string& source,
                       const std::vector<std::string>& names, const ProductDist& law) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    header = split_fields(line);
    break;
  }
  require(!header.empty() && !(header.size() == 1 && header[0].empty()), ErrorCode::Parse,
          source + ": missing header row");
  const std::size_t d = names.size();
  require(header.size() == d + 1, ErrorCode::Parse,
          source + ": header has " + std::to_string(header.size()) + " columns, expected " +
              std::to_string(d) + " inputs plus one output");
  for (std::size_t k = 0; k < d; ++k) {
    require(header[k] == names[k], ErrorCode::Parse,
            source + ": header column " + std::to_string(k + 1) + " is '" + header[k] +
                "', expected '" + names[k] + "'");
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto fields = split_fields(line);
    const std::string where = source + ": row " + std::to_string(rows.size() + 1) + " (line " +
                              std::to_string(line_no) + ")";
    require(fields.size() == d + 1, ErrorCode::Parse,
            where + ": " + std::to_string(fields.size()) + " fields, expected " + std::to_string(d + 1));
    std::vector<double> row(d + 1);
    for (std::size_t k = 0; k <= d; ++k) {
      const std::string& f = fields[k];
      char* end = nullptr;
      const double v = f.empty() ? 0.0 : std::strtod(f.c_str(), &end);
      require(!f.empty() && end == f.c_str() + f.size() && std::isfinite(v), ErrorCode::Parse,
              where + ", column '" + header[k] + "': not a finite number '" + f + "'");
      if (k < d) {
        const auto& m = law.marginal(k);
        if (v < m.lower() || v > m.upper()) {
          std::ostringstream os;
          os.precision(17);
          os << where << ", column '" << header[k] << "': " << v << " outside support ["
             << m.lower() << ", " << m.upper() << "]";
          fail(ErrorCode::SupportViolation, os.str());
        }
      }
      row[k] = v;
    }
    rows.push_back(std::move(row));
  }
  require(rows.size() >= 2, ErrorCode::Parse, source + ": need at least 2 data rows");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    y(static_cast<Eigen::Index>(i)) = rows[i][d];
  }
  return SampleSet(std::move(x), std::move(y), law);
}

SampleSet ingest_sample(const fs::path& csv, const std::vector<std::string>& names,
                        const ProductDist& law) {
  return parse_sample(read_file(csv), csv.filename().string(), names, law);
}

std::string sample_csv(const SampleSet& sample, const std::vector<std::string>& names) {
  std::ostringstream os;
  for (const auto& n : names) os << n << ',';
  os << "y\n";
  const auto& x = sample.inputs();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index k = 0; k < x.cols(); ++k) os << format_double(x(i, k)) << ',';
    os << format_double(sample.outputs()(i)) << '\n';
  }
  return os.str();
}

void write_atomic(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  require(!ec, ErrorCode::Io, "cannot create directory '" + path.parent_path().string() + "'");
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot write '" + tmp.string() + "'");
    out << content;
    out.close();
    require(!out.fail(), ErrorCode::Io, "write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorCode::Io, "cannot move output into '" + path.string() + "'");
  }
}

ExperimentSpec bench_spec(Scenario scenario, const RunConfig* config, const Overrides& o) {
  ExperimentSpec spec = default_spec(scenario, o.full);
  if (config) {
    spec = apply_bench(spec, config->bench, "/bench");
    if (config->seed_given) spec.seed = config->seed;
    spec.threads = config->threads;
  }
  if (o.seed) spec.seed = *o.seed;
  if (o.reps) spec.reps = *o.reps;
  if (o.threads) spec.threads = *o.threads;
  validate(spec);
  return spec;
}

std::vector<fs::path> run_gsa1(RunConfig c, const Overrides& o) {
  need_inputs(c, "gsa1");
  std::vector<UnivariateDist> laws;
  std::vector<UnivariateDist> targets;
  bool weighted = false;
  for (std::size_t i = 0; i < c.inputs.size(); ++i) {
    const auto& in = c.inputs[i];
    if (!in.law) schema_error(at("/inputs", i), "gsa1 needs a fixed 'law' per input");
    laws.push_back(*in.law);
    targets.push_back(in.target ? *in.target : *in.law);
    weighted = weighted || in.target.has_value();
  }
  if (!c.model.builtin && c.model.sample.empty()) schema_error("/model", "required for gsa1");
  const std::size_t threads = o.threads ? *o.threads : c.threads;
  const ProductDist sampling(laws);
  const ProductDist target(targets);
  const RngStream rng = run_stream(c, o);
  const auto names = input_names(c);
  std::optional<SampleSet> sample;
  if (c.model.builtin) {
    RngStream stream = rng.derive(0);
    Eigen::MatrixXd x = sampling.sample(c.n2, stream);
    Eigen::VectorXd y = evaluate_model(ishigami_model(*c.model.builtin), x);
    sample.emplace(std::move(x), std::move(y), sampling);
  } else {
    sample.emplace(ingest_sample(c.model.sample, names, sampling));
  }
  const SampleSet& s = *sample;
  const WeightSet w = weighted ? make_weights(target, sampling, s.inputs()) : unit_weights(s.size(), s.dimension());

  std::ostringstream csv;
  csv << "input,estimator,hsic,r2,asymp_pvalue,perm_pvalue\n";
  Json results = Json::array();
  for (std::size_t k = 0; k < s.dimension(); ++k) {
    const RngStream perm_rng = rng.derive(1).derive(k);
    double h, r2, pa, pp = std::nan("");
    if (weighted) {
      h = whsic(s, w, k).value;
      r2 = wr2_hsic(s, w, k);
      pa = wgamma_pvalue(s, w, k, c.qoi.epsilon);
      if (c.permutations > 0) pp = wperm_pvalue(s, w, k, c.permutations, perm_rng, threads);
    } else {
      h = hsic_v(s, k).value;
      r2 = r2_hsic(s, k);
      pa = asymp_pvalue(s, k);
      if (c.permutations > 0) pp = perm_pvalue(s, k, c.permutations, perm_rng, threads);
    }
    const char* est = weighted ? "weighted" : "classical";
    csv << names[k] << ',' << est << ',' << format_double(h) << ',' << format_double(r2) << ','
        << format_double(pa) << ',' << (c.permutations > 0 ? format_double(pp) : "") << '\n';
    Json row{{"input", names[k]}, {"estimator", est}, {"hsic", h}, {"r2", r2}, {"asymp_pvalue", pa}};
    row["perm_pvalue"] = c.permutations > 0 ? Json(pp) : Json(nullptr);
    results.push_back(row);
  }
  Json art = artifact_head("gsa1", c, o);
  art["sample"] = Json{{"source", c.model.builtin ? "generated" : c.model.sample.filename().string()},
                       {"n", s.size()}};
  art["results"] = results;
  const fs::path dir = output_dir(c, o);
  std::vector<fs::path> written{dir / "gsa1.csv", dir / "gsa1_run.json"};
  write_atomic(written[0], csv.str());
  write_atomic(written[1], art.dump(2) + "\n");
  if (c.write_sample) {
    written.push_back(dir / "sample.csv");
    write_atomic(written.back(), sample_csv(s, names));
  }
  return written;
}

std::vector<fs::path> run_gsa2(RunConfig c, const Overrides& o) {
  need_inputs(c, "gsa2");
  if (!c.model.builtin && c.model.sample.empty()) schema_error("/model", "required for gsa2");
  std::vector<DistPrior> priors;
  for (const auto& in : c.inputs) priors.push_back(in.prior);
  SingleLoopOptions options;
  options.references = c.references;
  options.qoi = c.qoi;
  options.exhaustive = c.exhaustive;
  options.second_level = c.second_level;
  options.threads = o.threads ? *o.threads : c.threads;
  const RngStream rng = run_stream(c, o);
  const auto names = input_names(c);
  std::optional<SampleSet> sample;
  if (c.model.builtin) {
    sample.emplace(reference_sample(priors, options, c.n2, ishigami_model(*c.model.builtin), rng));
  } else {
    sample.emplace(ingest_sample(c.model.sample, names, reference_law(priors, c.references)));
  }
  const Gsa2Result r = single_loop_on_sample(*sample, priors, c.n1, options, rng);

  std::ostringstream csv;
  csv << "input,hsic2,r2,law_bandwidth,base_bandwidth\n";
  Json indices = Json::array();
  for (std::size_t k = 0; k < r.r2.size(); ++k) {
    csv << names[k] << ',' << format_double(r.hsic2[k]) << ',' << format_double(r.r2[k]) << ','
        << format_double(r.law_bandwidths[k]) << ',' << format_double(r.base_bandwidths[k]) << '\n';
    indices.push_back(Json{{"input", names[k]},
                           {"hsic2", r.hsic2[k]},
                           {"r2", r.r2[k]},
                           {"law_bandwidth", r.law_bandwidths[k]},
                           {"base_bandwidth", r.base_bandwidths[k]}});
  }
  Json ranking = Json::array();
  for (std::size_t k : r.ranking()) ranking.push_back(names[k]);
  Json laws = Json::array();
  for (std::size_t i = 0; i < r.laws.size(); ++i) {
    Json row{{"probability", r.probabilities[i]}};
    Json marg = Json::array();
    for (std::size_t k = 0; k < r.laws[i].dimension(); ++k) marg.push_back(r.laws[i].marginal(k).describe());
    row["laws"] = marg;
    const auto& q = r.qois[i];
    if (q.is_ranking()) {
      Json order = Json::array();
      for (std::size_t k : q.order()) order.push_back(names[k]);
      row["result"] = order;
    } else {
      row["result"] = q.values();
    }
    laws.push_back(row);
  }
  Json refs = Json::array();
  for (std::size_t k = 0; k < sample->dimension(); ++k) refs.push_back(sample->generating_law().marginal(k).describe());
  Json art = artifact_head("gsa2", c, o);
  art["sample"] = Json{{"source", c.model.builtin ? "generated" : c.model.sample.filename().string()},
                       {"n", sample->size()},
                       {"reference_laws", refs}};
  art["model_evaluations"] = c.model.builtin ? sample->size() : 0;
  art["qoi_bandwidth"] = r.qoi_bandwidth;
  art["indices"] = indices;
  art["ranking"] = ranking;
  art["law_sample"] = laws;
  const fs::path dir = output_dir(c, o);
  std::vector<fs::path> written{dir / "gsa2.csv", dir / "gsa2_run.json"};
  write_atomic(written[0], csv.str());
  write_atomic(written[1], art.dump(2) + "\n");
  if (c.write_sample) {
    written.push_back(dir / "sample.csv");
    write_atomic(written.back(), sample_csv(*sample, names));
  }
  return written;
}

std::vector<fs::path> run_bench(Scenario scenario, const RunConfig* config, const Overrides& o) {
  const ExperimentSpec spec = bench_spec(scenario, config, o);
  const ExperimentTable table = run_experiment(spec);
  std::ostringstream summary;
  std::ostringstream values;
  write_summary_csv(summary, table);
  write_long_csv(values, table);
  Json art{{"tool", "hsicgsa"}, {"version", version()}, {"command", "bench"}, {"seed", spec.seed}};
  art["config"] = spec_json(spec);
  Json rows = Json::array();
  for (const auto& r : table.summary) {
    rows.push_back(Json{{"option", r.option},
                        {"n", r.n},
                        {"reps", r.reps},
                        {"good", r.good},
                        {"rate", r.rate},
                        {"rate_lo95", r.lower},
                        {"rate_hi95", r.upper}});
  }
  art["summary"] = rows;
  const fs::path dir = o.out_dir ? *o.out_dir : (config ? config->out_dir : fs::path("out"));
  const std::string stem = to_string(scenario);
  std::vector<fs::path> written{dir / (stem + "_summary.csv"), dir / (stem + "_long.csv"),
                                dir / (stem + "_run.json")};
  write_atomic(written[0], summary.str());
  write_atomic(written[1], values.str());
  write_atomic(written[2], art.dump(2) + "\n");
  return written;
}

}  // namespace hsicgsa::cli
