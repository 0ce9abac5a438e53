#include "cbench/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace cbench {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const Json& require_key(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end())
    throw std::invalid_argument(std::string("missing required key \"") + key + "\"");
  return *it;
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->get<T>();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

Json array_json(const Eigen::ArrayXd& a) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < a.size(); ++i) arr.push_back(a[i]);
  return arr;
}

Eigen::ArrayXd array_from_json(const Json& j) {
  Eigen::ArrayXd a(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto& v : j) a[i++] = v.get<double>();
  return a;
}

std::string basis_tag_name(BasisTag t) {
  return t == BasisTag::svd ? "svd" : "wavelet";
}

BasisTag basis_tag_from_name(const std::string& s) {
  if (s == "svd") return BasisTag::svd;
  if (s == "wavelet") return BasisTag::wavelet;
  throw std::invalid_argument("unknown basis tag: " + s);
}

std::string decay_name(IllPosedness::Type t) {
  switch (t) {
    case IllPosedness::Type::mild: return "mild";
    case IllPosedness::Type::severe: return "severe";
    default: return "custom";
  }
}

IllPosedness::Type decay_from_name(const std::string& s) {
  if (s == "mild") return IllPosedness::Type::mild;
  if (s == "severe") return IllPosedness::Type::severe;
  if (s == "custom") return IllPosedness::Type::custom;
  throw std::invalid_argument("unknown decay class: " + s);
}

Json measure_json(const SignedMeasure& mu) {
  Json atoms = Json::array();
  for (const PointAtom& a : mu.atoms) atoms.push_back({{"x", a.x}, {"mass", a.mass}});
  return {{"atoms", atoms}, {"density", mu.density}};
}

SignedMeasure measure_from_json(const Json& j) {
  SignedMeasure mu;
  for (const auto& a : get_or(j, "atoms", Json::array()))
    mu.atoms.push_back({require_key(a, "x").get<double>(),
                        require_key(a, "mass").get<double>()});
  mu.density = get_or(j, "density", std::vector<double>{});
  return mu;
}

Json operator_config_json(OperatorKind kind, const OperatorParams& p,
                          Eigen::Index K_max) {
  Json j;
  j["kind"] = to_string(kind);
  j["K_max"] = K_max;
  j["alpha"] = p.alpha;
  j["beta"] = p.beta;
  j["c0"] = p.c0;
  j["poly"] = p.poly;
  j["T"] = p.T;
  j["paired"] = p.paired;
  if (!p.measure.empty()) j["measure"] = measure_json(p.measure);
  if (p.declared.type != IllPosedness::Type::custom)
    j["declared"] = to_json(p.declared);
  return j;
}

void operator_config_from_json(const Json& j, OperatorKind& kind,
                               OperatorParams& p, Eigen::Index& K_max) {
  kind = operator_kind_from_string(require_key(j, "kind").get<std::string>());
  K_max = require_key(j, "K_max").get<Eigen::Index>();
  const OperatorParams defaults;
  p.alpha = get_or(j, "alpha", defaults.alpha);
  p.beta = get_or(j, "beta", defaults.beta);
  p.c0 = get_or(j, "c0", defaults.c0);
  p.poly = get_or(j, "poly", defaults.poly);
  p.T = get_or(j, "T", defaults.T);
  p.paired = get_or(j, "paired", defaults.paired);
  if (j.contains("measure")) p.measure = measure_from_json(j["measure"]);
  if (j.contains("declared")) p.declared = ill_posedness_from_json(j["declared"]);
}

std::string density_family_name(CoefficientDensity::Family f) {
  switch (f) {
    case CoefficientDensity::Family::gaussian: return "gaussian";
    case CoefficientDensity::Family::laplace: return "laplace";
    case CoefficientDensity::Family::cauchy: return "cauchy";
    default: return "custom";
  }
}

std::string truncation_kind_name(TruncationPmf::Kind k) {
  switch (k) {
    case TruncationPmf::Kind::exponential: return "exponential";
    case TruncationPmf::Kind::stretched: return "stretched";
    default: return "table";
  }
}

std::string radius_kind_name(RadiusDistribution::Kind k) {
  switch (k) {
    case RadiusDistribution::Kind::stretched: return "stretched";
    case RadiusDistribution::Kind::double_exponential: return "double_exponential";
    default: return "point_mass";
  }
}

std::string truth_kind_name(TruthSpec::Kind k) {
  switch (k) {
    case TruthSpec::Kind::finite_series: return "finite_series";
    case TruthSpec::Kind::sobolev: return "sobolev";
    default: return "holder";
  }
}

}  // namespace

Json to_json(const SequenceVector& f) {
  return {{"basis", basis_tag_name(f.basis_tag)}, {"coeffs", array_json(f.coeffs)}};
}

SequenceVector sequence_from_json(const Json& j) {
  return SequenceVector(
      array_from_json(require_key(j, "coeffs")),
      basis_tag_from_name(require_key(j, "basis").get<std::string>()));
}

Json to_json(const IllPosedness& cls) {
  return {{"type", decay_name(cls.type)}, {"alpha", cls.alpha},
          {"beta", cls.beta},             {"c0", cls.c0},
          {"alpha0", cls.alpha0},         {"alpha1", cls.alpha1}};
}

IllPosedness ill_posedness_from_json(const Json& j) {
  IllPosedness cls;
  cls.type = decay_from_name(require_key(j, "type").get<std::string>());
  cls.alpha = get_or(j, "alpha", 0.0);
  cls.beta = get_or(j, "beta", 0.0);
  cls.c0 = get_or(j, "c0", 0.0);
  cls.alpha0 = get_or(j, "alpha0", 0.0);
  cls.alpha1 = get_or(j, "alpha1", 0.0);
  return cls;
}

Json to_json(const SpectralOperator& op) {
  Json j = operator_config_json(op.kind(), op.params(), op.K_max());
  j["rho"] = array_json(op.rho());
  return j;
}

SpectralOperator operator_from_json(const Json& j) {
  OperatorKind kind;
  OperatorParams p;
  Eigen::Index K_max;
  operator_config_from_json(j, kind, p, K_max);
  SpectralOperator op = make_operator(kind, p, K_max);
  if (j.contains("rho")) {
    const Eigen::ArrayXd snapshot = array_from_json(j["rho"]);
    if (snapshot.size() != op.rho().size() ||
        ((snapshot - op.rho()).abs() > 1e-12 * op.rho().abs().maxCoeff()).any())
      throw std::invalid_argument(
          "operator_from_json: stored singular values disagree with rebuild");
  }
  return op;
}

Json to_json(const Observation& obs) {
  return {{"y", array_json(obs.y)}, {"n", obs.n}, {"seed", obs.seed}};
}

Observation observation_from_json(const Json& j) {
  Observation obs;
  obs.y = array_from_json(require_key(j, "y"));
  obs.n = require_key(j, "n").get<double>();
  obs.seed = get_or(j, "seed", std::uint64_t{0});
  return obs;
}

Json to_json(const AnyPrior& prior) {
  if (std::holds_alternative<SievePriorSpec>(prior)) {
    const auto& s = std::get<SievePriorSpec>(prior);
    Json j;
    j["family"] = "sieve";
    j["truncation"] = {{"kind", truncation_kind_name(s.h.kind)},
                       {"b", s.h.b},
                       {"power", s.h.power},
                       {"table", s.h.table}};
    j["density"] = {{"family", density_family_name(s.q.family)},
                    {"D", s.q.D},
                    {"d", s.q.d},
                    {"w", s.q.w},
                    {"table", s.q.table},
                    {"x_max", s.q.x_max}};
    j["tau"] = {{"scale", s.tau.scale},
                {"exponent", s.tau.exponent},
                {"log_exponent", s.tau.log_exponent}};
    j["K_max"] = s.K_max;
    return j;
  }
  if (std::holds_alternative<GaussianPriorSpec>(prior)) {
    const auto& g = std::get<GaussianPriorSpec>(prior);
    return {{"family", "gaussian"}, {"delta", g.delta}, {"K_max", g.K_max}};
  }
  const auto& w = std::get<WaveletPriorSpec>(prior);
  return {{"family", "wavelet"},
          {"radius_law",
           {{"kind", radius_kind_name(w.H.kind)},
            {"D", w.H.D},
            {"nu", w.H.nu},
            {"B0", w.H.B0},
            {"r_max", w.H.r_max}}},
          {"delta", w.delta},
          {"J_max", w.J_max}};
}

AnyPrior prior_from_json(const Json& j) {
  const std::string family = require_key(j, "family").get<std::string>();
  if (family == "sieve") {
    SievePriorSpec s;
    const Json& h = require_key(j, "truncation");
    const std::string hk = require_key(h, "kind").get<std::string>();
    if (hk == "exponential") {
      s.h = TruncationPmf::exponential(require_key(h, "b").get<double>());
    } else if (hk == "stretched") {
      s.h = TruncationPmf::stretched(require_key(h, "b").get<double>(),
                                     require_key(h, "power").get<double>());
    } else if (hk == "table") {
      s.h = TruncationPmf::from_table(
          require_key(h, "table").get<std::vector<double>>());
    } else {
      throw std::invalid_argument("unknown truncation kind: " + hk);
    }
    const Json& q = require_key(j, "density");
    const std::string qf = require_key(q, "family").get<std::string>();
    if (qf == "gaussian") {
      s.q = CoefficientDensity::gaussian();
    } else if (qf == "laplace") {
      s.q = CoefficientDensity::laplace();
    } else if (qf == "cauchy") {
      s.q = CoefficientDensity::cauchy();
    } else if (qf == "custom") {
      s.q = CoefficientDensity::custom(
          require_key(q, "table").get<std::vector<double>>(),
          require_key(q, "x_max").get<double>(), require_key(q, "D").get<double>(),
          require_key(q, "d").get<double>(), require_key(q, "w").get<double>());
    } else {
      throw std::invalid_argument("unknown density family: " + qf);
    }
    const Json& t = require_key(j, "tau");
    s.tau.scale = get_or(t, "scale", 1.0);
    s.tau.exponent = get_or(t, "exponent", 0.0);
    s.tau.log_exponent = get_or(t, "log_exponent", 0.0);
    s.K_max = require_key(j, "K_max").get<Eigen::Index>();
    s.validate();
    return s;
  }
  if (family == "gaussian") {
    GaussianPriorSpec g;
    g.delta = require_key(j, "delta").get<double>();
    g.K_max = require_key(j, "K_max").get<Eigen::Index>();
    g.validate();
    return g;
  }
  if (family == "wavelet") {
    WaveletPriorSpec w;
    const Json& r = require_key(j, "radius_law");
    const std::string rk = require_key(r, "kind").get<std::string>();
    if (rk == "point_mass") {
      w.H = RadiusDistribution::point_mass(require_key(r, "B0").get<double>());
    } else if (rk == "stretched") {
      w.H = RadiusDistribution::stretched(require_key(r, "D").get<double>(),
                                          require_key(r, "nu").get<double>(),
                                          get_or(r, "r_max", Eigen::Index{64}));
    } else if (rk == "double_exponential") {
      w.H = RadiusDistribution::double_exponential(
          require_key(r, "D").get<double>(), require_key(r, "nu").get<double>(),
          get_or(r, "r_max", Eigen::Index{64}));
    } else {
      throw std::invalid_argument("unknown radius law kind: " + rk);
    }
    w.delta = require_key(j, "delta").get<double>();
    w.J_max = require_key(j, "J_max").get<Eigen::Index>();
    w.validate();
    return w;
  }
  throw std::invalid_argument("unknown prior family: " + family);
}

Json to_json(const TruthSpec& truth) {
  return {{"kind", truth_kind_name(truth.kind)},
          {"gamma", truth.gamma},
          {"scale", truth.scale},
          {"coeffs", truth.coeffs}};
}

TruthSpec truth_from_json(const Json& j) {
  TruthSpec t;
  const std::string k = require_key(j, "kind").get<std::string>();
  if (k == "finite_series")
    t.kind = TruthSpec::Kind::finite_series;
  else if (k == "sobolev")
    t.kind = TruthSpec::Kind::sobolev;
  else if (k == "holder")
    t.kind = TruthSpec::Kind::holder;
  else
    throw std::invalid_argument("unknown truth kind: " + k);
  t.gamma = get_or(j, "gamma", 1.0);
  t.scale = get_or(j, "scale", 1.0);
  t.coeffs = get_or(j, "coeffs", std::vector<double>{});
  return t;
}

Json to_json(const McmcConfig& cfg) {
  return {{"iterations", cfg.iterations},
          {"burn_in", cfg.burn_in},
          {"thin", cfg.thin},
          {"birth_death_prob", cfg.birth_death_prob},
          {"radius_move_prob", cfg.radius_move_prob},
          {"target_accept", cfg.target_accept},
          {"seed", cfg.seed}};
}

McmcConfig mcmc_from_json(const Json& j) {
  McmcConfig cfg;
  cfg.iterations = get_or(j, "iterations", cfg.iterations);
  cfg.burn_in = get_or(j, "burn_in", cfg.burn_in);
  cfg.thin = get_or(j, "thin", cfg.thin);
  cfg.birth_death_prob = get_or(j, "birth_death_prob", cfg.birth_death_prob);
  cfg.radius_move_prob = get_or(j, "radius_move_prob", cfg.radius_move_prob);
  cfg.target_accept = get_or(j, "target_accept", cfg.target_accept);
  cfg.seed = get_or(j, "seed", cfg.seed);
  cfg.validate();
  return cfg;
}

Json to_json(const RateScenario& sc) {
  Json j;
  j["operator"] = operator_config_json(sc.op_kind, sc.op_params, sc.K_max);
  j["prior"] = to_json(sc.prior);
  j["truth"] = to_json(sc.truth);
  j["n_grid"] = sc.n_grid;
  j["replicates"] = sc.replicates;
  j["credibility_tail"] = sc.credibility_tail;
  j["mass_radius_multiplier"] = sc.mass_radius_multiplier;
  j["mcmc"] = to_json(sc.mcmc);
  j["seed"] = sc.seed;
  j["threads"] = sc.threads;
  return j;
}

RateScenario scenario_from_json(const Json& j) {
  RateScenario sc;
  operator_config_from_json(require_key(j, "operator"), sc.op_kind, sc.op_params,
                            sc.K_max);
  sc.prior = prior_from_json(require_key(j, "prior"));
  sc.truth = truth_from_json(require_key(j, "truth"));
  sc.n_grid = require_key(j, "n_grid").get<std::vector<double>>();
  sc.replicates = get_or(j, "replicates", sc.replicates);
  sc.credibility_tail = get_or(j, "credibility_tail", sc.credibility_tail);
  sc.mass_radius_multiplier =
      get_or(j, "mass_radius_multiplier", sc.mass_radius_multiplier);
  if (j.contains("mcmc")) sc.mcmc = mcmc_from_json(j["mcmc"]);
  sc.seed = get_or(j, "seed", sc.seed);
  sc.threads = get_or(j, "threads", sc.threads);
  sc.validate();
  return sc;
}

Json to_json(const BasisMap& bm) {
  Json rows = Json::array();
  for (const BasisMap::Row& row : bm.rows) {
    Json r = Json::array();
    for (const auto& [i, c] : row) r.push_back({i, c});
    rows.push_back(std::move(r));
  }
  return {{"rows", rows}};
}

BasisMap basis_map_from_json(const Json& j) {
  BasisMap bm;
  for (const auto& row : require_key(j, "rows")) {
    BasisMap::Row r;
    for (const auto& entry : row) {
      if (entry.size() != 2)
        throw std::invalid_argument("basis map entries must be [index, coeff]");
      r.emplace_back(entry[0].get<Eigen::Index>(), entry[1].get<double>());
    }
    bm.rows.push_back(std::move(r));
  }
  return bm;
}

void write_rate_table_csv(const RateTable& table, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "n,replicate,radius,mass_outside,mass_se,runtime_sec\n";
  for (const RateRow& r : table.rows)
    out << fmt_double(r.n) << ',' << r.replicate << ',' << fmt_double(r.radius)
        << ',' << fmt_double(r.mass_outside) << ',' << fmt_double(r.mass_se) << ','
        << fmt_double(r.runtime_sec) << '\n';
}

void write_chain_csv(const PosteriorChain& chain, const std::string& path) {
  std::ofstream out = open_out(path);
  const Eigen::Index K = chain.coords.empty() ? 0 : chain.coords.front().size();
  out << "sample,model_index,log_likelihood";
  for (Eigen::Index i = 0; i < K; ++i) out << ",coord_" << i;
  out << '\n';
  for (std::size_t s = 0; s < chain.coords.size(); ++s) {
    out << s << ',' << chain.model_index[s] << ','
        << fmt_double(chain.log_likelihoods[s]);
    for (Eigen::Index i = 0; i < K; ++i) out << ',' << fmt_double(chain.coords[s][i]);
    out << '\n';
  }

  Json meta;
  meta["samples"] = chain.coords.size();
  meta["iterations"] = chain.iterations;
  meta["burn_in"] = chain.burn_in;
  meta["thin"] = chain.thin;
  meta["seed"] = chain.seed;
  meta["accept_within"] = chain.accept_within;
  meta["accept_birth"] = chain.accept_birth;
  meta["accept_death"] = chain.accept_death;
  meta["accept_radius"] = chain.accept_radius;
  meta["warnings"] = chain.warnings;
  std::ofstream mo = open_out(path + ".meta.json");
  mo << meta.dump(2) << '\n';
}

void write_smallball_csv(const std::vector<SmallBallEstimate>& rows,
                         const std::string& path) {
  std::ofstream out = open_out(path);
  out << "epsilon,estimate,std_error,cp_upper,zero_hits,weak_estimate,draws\n";
  for (const SmallBallEstimate& r : rows)
    out << fmt_double(r.epsilon) << ',' << fmt_double(r.estimate) << ','
        << fmt_double(r.std_error) << ',' << fmt_double(r.cp_upper) << ','
        << (r.zero_hits ? 1 : 0) << ',' << fmt_double(r.weak_estimate) << ','
        << r.draws << '\n';
}

void write_entropy_csv(const std::vector<EntropyRow>& rows,
                       const std::string& path) {
  std::ofstream out = open_out(path);
  out << "epsilon,J,log_count,spacing\n";
  for (const EntropyRow& r : rows)
    out << fmt_double(r.epsilon) << ',' << r.cover.J << ','
        << fmt_double(r.cover.log_count) << ',' << fmt_double(r.cover.spacing)
        << '\n';
}

void write_power_csv(const PowerEstimate& power, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "error_kind,alternative,estimate,std_error\n";
  out << "type1,-1," << fmt_double(power.type1) << ',' << fmt_double(power.type1_se)
      << '\n';
  for (std::size_t a = 0; a < power.type2.size(); ++a)
    out << "type2," << a << ',' << fmt_double(power.type2[a]) << ','
        << fmt_double(power.type2_se[a]) << '\n';
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_digest(const Json& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config.dump())));
  return buf;
}

void write_run_metadata(const std::string& dir, const Json& config,
                        std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  Json meta;
  meta["config"] = config;
  meta["config_digest"] = config_digest(config);
  meta["seed"] = seed;
  std::ofstream out = open_out(dir + "/metadata.json");
  out << meta.dump(2) << '\n';
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  Json j;
  in >> j;
  return j;
}

}  // namespace cbench
