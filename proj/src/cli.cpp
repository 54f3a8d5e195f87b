#include "rnmax/cli.hpp"

#include "rnmax/harness.hpp"
#include "rnmax/io.hpp"
#include "rnmax/specfun.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#ifndef RNMAX_GIT_DESCRIBE
#define RNMAX_GIT_DESCRIBE "unknown"
#endif

namespace rnmax {

namespace fs = std::filesystem;
using nlohmann::json;

const char* build_describe() { return RNMAX_GIT_DESCRIBE; }

namespace {

// --- schema reader ---------------------------------------------------------------

class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(label(), "must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  double number(const std::string& key, std::optional<double> def = std::nullopt) {
    const json* v = get(key, def.has_value());
    if (!v) return *def;
    return as_number(*v, field(key));
  }

  int integer(const std::string& key, std::optional<int> def = std::nullopt) {
    const json* v = get(key, def.has_value());
    if (!v) return *def;
    return as_int(*v, field(key));
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t def) {
    const json* v = get(key, true);
    if (!v) return def;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0))
      throw ConfigError(field(key), "must be a non-negative integer");
    return v->get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool def) {
    const json* v = get(key, true);
    if (!v) return def;
    if (!v->is_boolean()) throw ConfigError(field(key), "must be true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, std::optional<std::string> def = std::nullopt) {
    const json* v = get(key, def.has_value());
    if (!v) return *def;
    if (!v->is_string()) throw ConfigError(field(key), "must be a string");
    return v->get<std::string>();
  }

  // accepts a scalar as a one-element list
  std::vector<double> numbers(const std::string& key,
                              std::optional<std::vector<double>> def = std::nullopt) {
    const json* v = get(key, def.has_value());
    if (!v) return *def;
    std::vector<double> out;
    if (!v->is_array()) {
      out.push_back(as_number(*v, field(key)));
      return out;
    }
    if (v->empty()) throw ConfigError(field(key), "must be a nonempty list");
    for (std::size_t i = 0; i < v->size(); ++i)
      out.push_back(as_number((*v)[i], field(key) + "[" + std::to_string(i) + "]"));
    return out;
  }

  std::vector<int> integers(const std::string& key, std::optional<std::vector<int>> def = std::nullopt) {
    const json* v = get(key, def.has_value());
    if (!v) return *def;
    std::vector<int> out;
    if (!v->is_array()) {
      out.push_back(as_int(*v, field(key)));
      return out;
    }
    if (v->empty()) throw ConfigError(field(key), "must be a nonempty list");
    for (std::size_t i = 0; i < v->size(); ++i)
      out.push_back(as_int((*v)[i], field(key) + "[" + std::to_string(i) + "]"));
    return out;
  }

  std::vector<std::string> strings(const std::string& key,
                                   std::optional<std::vector<std::string>> def = std::nullopt) {
    const json* v = get(key, def.has_value());
    if (!v) return *def;
    std::vector<std::string> out;
    if (v->is_string()) return {v->get<std::string>()};
    if (!v->is_array() || v->empty()) throw ConfigError(field(key), "must be a nonempty list of strings");
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_string())
        throw ConfigError(field(key) + "[" + std::to_string(i) + "]", "must be a string");
      out.push_back((*v)[i].get<std::string>());
    }
    return out;
  }

  const json& raw(const std::string& key) {
    const json* v = get(key, false);
    return *v;
  }

  Node object(const std::string& key) { return Node(raw(key), field(key)); }

  /// Rejects keys that were never read.
  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown key");
  }

 private:
  std::string label() const { return path_.empty() ? "<config>" : path_; }

  const json* get(const std::string& key, bool optional) {
    seen_.insert(key);
    if (!j_.contains(key)) {
      if (optional) return nullptr;
      throw ConfigError(field(key), "required field is missing");
    }
    return &j_.at(key);
  }

  static double as_number(const json& v, const std::string& f) {
    if (!v.is_number()) throw ConfigError(f, "must be a number");
    return v.get<double>();
  }
  static int as_int(const json& v, const std::string& f) {
    if (!v.is_number_integer()) throw ConfigError(f, "must be an integer");
    return v.get<int>();
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& why) {
  if (!ok) throw ConfigError(field, why);
}

// --- config blocks ----------------------------------------------------------------

struct SampleSpec {
  int experiment = 1;
  int n = 100;
  int d = 2;
  double psi = 0.5;
  double alpha = 0.5;
  double rho = 0.5;
  double nu = 1.0;
  int n_prime = 500;
  std::uint64_t block_cap = kBlockSizeCap;
};

struct EstimateSpec {
  fs::path input;
  std::vector<EstimatorPair> pairs;
  int k = 5;
  int grid_m = 201;
  bool correct = true;
  MdNormalizer md = MdNormalizer::Mean;
  MlScale ml_scale = MlScale::Profile;
};

struct EvalSpec {
  std::string family = "logistic";
  double psi = 0.5;
  double rho = 0.5;
  double nu = 1.0;
  std::vector<double> alphas{0.5};
  int grid_m = 11;
  std::vector<double> q_alphas{0.5, 1.0, 1.5};
  TailOfN tail = TailOfN::Frechet;
  std::optional<LimitLawQ::Branch> branch;
  std::vector<double> lambda_mn;
  std::vector<std::vector<double>> tail_z;
  long tail_n = 1000;
};

struct FiguresSpec {
  std::optional<fs::path> results;
};

struct Config {
  fs::path path;
  std::uint64_t seed = 1;
  int jobs = 1;
  std::optional<SampleSpec> sample;
  std::optional<EstimateSpec> estimate;
  std::optional<EvalSpec> eval;
  std::optional<ExperimentConfig> experiment;
  FiguresSpec figures;
};

EstimatorPair parse_pair(const std::string& s, const std::string& field) {
  const auto plus = s.find('+');
  require(plus != std::string::npos, field, "expected '<P|CFG|MD>+<GPWM|ML>', got '" + s + "'");
  try {
    return {parse_pickands_method(s.substr(0, plus)), parse_alpha_method(s.substr(plus + 1))};
  } catch (const std::invalid_argument& e) {
    throw ConfigError(field, e.what());
  }
}

std::vector<EstimatorPair> parse_pairs(Node& node, const std::string& key, bool required) {
  std::vector<std::string> raw;
  if (required) {
    raw = node.strings(key);
  } else {
    std::vector<std::string> all;
    for (const auto& p : all_estimator_pairs()) all.push_back(pair_label(p.first, p.second));
    raw = node.strings(key, all);
  }
  std::vector<EstimatorPair> out;
  for (std::size_t i = 0; i < raw.size(); ++i)
    out.push_back(parse_pair(raw[i], node.field(key) + "[" + std::to_string(i) + "]"));
  return out;
}

MdNormalizer parse_md(Node& node) {
  const std::string s = node.string("md_normalizer", "mean");
  if (s == "mean") return MdNormalizer::Mean;
  if (s == "sum") return MdNormalizer::Sum;
  throw ConfigError(node.field("md_normalizer"), "must be \"mean\" or \"sum\"");
}

MlScale parse_ml_scale(Node& node) {
  const std::string s = node.string("ml_scale", "profile");
  if (s == "profile") return MlScale::Profile;
  if (s == "unit") return MlScale::Unit;
  throw ConfigError(node.field("ml_scale"), "must be \"profile\" or \"unit\"");
}

SampleSpec parse_sample(Node node) {
  SampleSpec s;
  s.experiment = node.integer("experiment", 1);
  require(s.experiment == 1 || s.experiment == 2, node.field("experiment"), "must be 1 or 2");
  s.n = node.integer("n", 100);
  require(s.n >= 2, node.field("n"), "must be >= 2");
  s.alpha = node.number("alpha", 0.5);
  require(s.alpha > 0.0 && s.alpha < 1.0, node.field("alpha"), "must lie in (0, 1)");
  if (s.experiment == 1) {
    s.psi = node.number("psi", 0.5);
    require(s.psi > 0.0 && s.psi <= 1.0, node.field("psi"), "must lie in (0, 1]");
    s.d = node.integer("d", 2);
    require(s.d >= 2, node.field("d"), "must be >= 2");
  } else {
    s.rho = node.number("rho", 0.5);
    require(s.rho > -1.0 && s.rho < 1.0, node.field("rho"), "must lie in (-1, 1)");
    s.nu = node.number("upsilon", 1.0);
    require(s.nu > 0.0, node.field("upsilon"), "must be positive");
    s.n_prime = node.integer("n_prime", 500);
    require(s.n_prime >= 1, node.field("n_prime"), "must be >= 1");
    s.block_cap = node.unsigned_integer("block_cap", kBlockSizeCap);
    require(s.block_cap >= 1, node.field("block_cap"), "must be >= 1");
  }
  node.done();
  return s;
}

EstimateSpec parse_estimate(Node node, const fs::path& base_dir) {
  EstimateSpec e;
  fs::path input = node.string("input");
  e.input = input.is_absolute() ? input : base_dir / input;
  e.pairs = parse_pairs(node, "pairs", true);
  e.k = node.integer("k", 5);
  require(e.k >= 2, node.field("k"), "must be >= 2");
  e.grid_m = node.integer("grid_m", 201);
  require(e.grid_m >= 3 && e.grid_m % 2 == 1, node.field("grid_m"), "must be odd and >= 3");
  e.correct = node.boolean("correct", true);
  e.md = parse_md(node);
  e.ml_scale = parse_ml_scale(node);
  node.done();
  return e;
}

std::optional<LimitLawQ::Branch> parse_branch(const std::string& s, const std::string& field) {
  if (s == "frechet_below_one") return LimitLawQ::Branch::FrechetBelowOne;
  if (s == "frechet_at_one" || s == "li") return LimitLawQ::Branch::FrechetAtOne;
  if (s == "frechet_above_one") return LimitLawQ::Branch::FrechetAboveOne;
  if (s == "gumbel") return LimitLawQ::Branch::GumbelN;
  throw ConfigError(field, "unknown branch '" + s +
                               "' (frechet_below_one, frechet_at_one|li, frechet_above_one, gumbel)");
}

LimitLawQ::Branch branch_for(TailOfN tail, double alpha) {
  if (tail == TailOfN::Gumbel) return LimitLawQ::Branch::GumbelN;
  if (alpha < 1.0) return LimitLawQ::Branch::FrechetBelowOne;
  if (alpha == 1.0) return LimitLawQ::Branch::FrechetAtOne;
  return LimitLawQ::Branch::FrechetAboveOne;
}

EvalSpec parse_eval(Node node) {
  EvalSpec e;
  {
    Node model = node.object("model");
    e.family = model.string("family");
    if (e.family == "logistic") {
      e.psi = model.number("psi");
      require(e.psi > 0.0 && e.psi <= 1.0, model.field("psi"), "must lie in (0, 1]");
    } else if (e.family == "extremal_t") {
      e.rho = model.number("rho");
      require(e.rho > -1.0 && e.rho < 1.0, model.field("rho"), "must lie in (-1, 1)");
      e.nu = model.number("upsilon");
      require(e.nu > 0.0, model.field("upsilon"), "must be positive");
    } else if (e.family != "independence") {
      throw ConfigError(model.field("family"), "must be logistic, extremal_t or independence");
    }
    model.done();
  }
  e.alphas = node.numbers("alphas", std::vector<double>{0.5});
  for (std::size_t i = 0; i < e.alphas.size(); ++i)
    require(e.alphas[i] > 0.0 && e.alphas[i] <= 1.0, node.field("alphas") + "[" + std::to_string(i) + "]",
            "must lie in (0, 1]");
  e.grid_m = node.integer("grid_m", 11);
  require(e.grid_m >= 2, node.field("grid_m"), "must be >= 2");
  if (node.has("q")) {
    Node q = node.object("q");
    e.q_alphas = q.numbers("alphas", e.q_alphas);
    const std::string tail = q.string("tail", "frechet");
    require(tail == "frechet" || tail == "gumbel", q.field("tail"), "must be \"frechet\" or \"gumbel\"");
    e.tail = tail == "gumbel" ? TailOfN::Gumbel : TailOfN::Frechet;
    for (std::size_t i = 0; i < e.q_alphas.size(); ++i)
      require(e.q_alphas[i] > 0.0, q.field("alphas") + "[" + std::to_string(i) + "]", "must be positive");
    if (q.has("branch")) {
      e.branch = parse_branch(q.string("branch"), q.field("branch"));
      for (std::size_t i = 0; i < e.q_alphas.size(); ++i) {
        if (branch_for(e.tail, e.q_alphas[i]) != *e.branch)
          throw ConfigError(q.field("alphas") + "[" + std::to_string(i) + "]",
                            std::string("alpha does not belong to the requested branch ") +
                                branch_name(*e.branch));
      }
    }
    q.done();
  }
  if (node.has("lambda_mn")) {
    e.lambda_mn = node.numbers("lambda_mn");
    for (std::size_t i = 0; i < e.lambda_mn.size(); ++i)
      require(e.lambda_mn[i] >= 0.0 && e.lambda_mn[i] <= 1.0,
              node.field("lambda_mn") + "[" + std::to_string(i) + "]", "must lie in [0, 1]");
  }
  if (node.has("tail_z")) {
    const json& z = node.raw("tail_z");
    require(z.is_array() && !z.empty(), node.field("tail_z"), "must be a nonempty list of points");
    for (std::size_t i = 0; i < z.size(); ++i) {
      const std::string f = node.field("tail_z") + "[" + std::to_string(i) + "]";
      require(z[i].is_array() && z[i].size() == 2, f, "must be a point [z_1, z_2]");
      std::vector<double> pt;
      for (std::size_t j = 0; j < 2; ++j) {
        require(z[i][j].is_number() && z[i][j].get<double>() > 0.0, f + "[" + std::to_string(j) + "]",
                "must be a positive number");
        pt.push_back(z[i][j].get<double>());
      }
      e.tail_z.push_back(pt);
    }
  }
  const int tn = node.integer("tail_n", 1000);
  require(tn >= 1, node.field("tail_n"), "must be >= 1");
  e.tail_n = tn;
  node.done();
  return e;
}

ExperimentConfig parse_experiment(Node node) {
  ExperimentConfig c;
  c.experiment = node.integer("experiment", 1);
  require(c.experiment == 1 || c.experiment == 2, node.field("experiment"), "must be 1 or 2");
  c.alphas = node.numbers("alpha", std::vector<double>{0.5});
  if (c.experiment == 1) {
    c.psis = node.numbers("psi");
  } else {
    c.rhos = node.numbers("rho");
    c.nus = node.numbers("upsilon", std::vector<double>{1.0});
    c.n_prime = node.integer("n_prime", 500);
    c.block_cap = node.unsigned_integer("block_cap", kBlockSizeCap);
  }
  c.ns = node.integers("n", std::vector<int>{50});
  c.replications = node.integer("replications", 200);
  c.pairs = parse_pairs(node, "pairs", false);
  c.k = node.integer("k", 5);
  c.grid_m = node.integer("grid_m", 201);
  c.correct = node.boolean("correct", true);
  c.md_normalizer = parse_md(node);
  c.ml_scale = parse_ml_scale(node);
  c.record_timing = node.boolean("record_timing", false);
  node.done();
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    // validate() names fields relative to the block
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    throw ConfigError(node.field(msg.substr(0, colon)),
                      colon == std::string::npos ? msg : msg.substr(colon + 2));
  }
  return c;
}

Config load_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path.string(), "cannot open config file");
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string(), std::string("invalid JSON: ") + e.what());
  }
  Config c;
  c.path = path;
  Node root(j, "");
  const std::uint64_t seed = root.unsigned_integer("seed", 1);
  c.seed = seed;
  c.jobs = root.integer("jobs", 1);
  require(c.jobs >= 1, "jobs", "must be >= 1");
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  if (root.has("sample")) c.sample = parse_sample(root.object("sample"));
  if (root.has("estimate")) c.estimate = parse_estimate(root.object("estimate"), base);
  if (root.has("eval")) c.eval = parse_eval(root.object("eval"));
  if (root.has("experiment")) c.experiment = parse_experiment(root.object("experiment"));
  if (root.has("figures")) {
    Node f = root.object("figures");
    if (f.has("results")) {
      fs::path r = f.string("results");
      c.figures.results = r.is_absolute() ? r : base / r;
    }
    f.done();
  }
  root.done();
  return c;
}

// --- subcommands ---------------------------------------------------------------------

MetaList base_meta(const std::string& cmd, const Config& c) {
  return {{"tool", "rnmax"}, {"build", build_describe()}, {"subcommand", cmd},
          {"seed", std::to_string(c.seed)}};
}

std::string pair_file_tag(const EstimatorPair& p) {
  return std::string(method_name(p.first)) + "_" + method_name(p.second);
}

int cmd_sample(const Config& c, const fs::path& out, std::ostream& log) {
  if (!c.sample) throw ConfigError("sample", "required block is missing");
  const SampleSpec& s = *c.sample;
  RngStream rng(c.seed, hash_combine(mix64(0x73616d706c65ULL), static_cast<std::uint64_t>(s.experiment)));
  PairedSample sample;
  MetaList meta = base_meta("sample", c);
  meta.emplace_back("experiment", std::to_string(s.experiment));
  meta.emplace_back("n", std::to_string(s.n));
  meta.emplace_back("alpha", format_double(s.alpha));
  if (s.experiment == 1) {
    sample = sample_experiment1(s.psi, s.alpha, s.n, rng, s.d);
    meta.emplace_back("d", std::to_string(s.d));
    meta.emplace_back("psi", format_double(s.psi));
  } else {
    Experiment2Options opt;
    opt.n_prime = s.n_prime;
    opt.cap = s.block_cap;
    Experiment2Sample s2 = sample_experiment2(s.rho, s.nu, s.alpha, s.n, opt, rng);
    sample = std::move(s2.sample);
    meta.emplace_back("d", "2");
    meta.emplace_back("rho", format_double(s.rho));
    meta.emplace_back("upsilon", format_double(s.nu));
    meta.emplace_back("n_prime", std::to_string(s.n_prime));
    meta.emplace_back("block_cap", std::to_string(s.block_cap));
    meta.emplace_back("cap_hits", std::to_string(s2.cap_hits));
  }
  const fs::path file = out / "sample.csv";
  write_paired_sample(file, sample);
  write_sidecar(out / "sample.csv.meta", meta);
  log << "wrote " << file.string() << " (" << sample.n() << " rows)\n";
  return kExitOk;
}

int cmd_estimate(const Config& c, const fs::path& out, std::ostream& log) {
  if (!c.estimate) throw ConfigError("estimate", "required block is missing");
  const EstimateSpec& e = *c.estimate;
  const PairedSample sample = read_paired_sample(e.input);
  if (sample.dim() != 2)
    throw EstimationFailure(EstimationFailure::Stage::Composite,
                            "composite estimator is implemented for d = 2 (input has d = " +
                                std::to_string(sample.dim()) + ")");
  for (const auto& pair : e.pairs) {
    CompositeConfig cc;
    cc.pickands = pair.first;
    cc.alpha = pair.second;
    cc.k = e.k;
    cc.grid_m = e.grid_m;
    cc.correct = e.correct;
    cc.md_normalizer = e.md;
    cc.ml_scale = e.ml_scale;
    const CurveEstimate est = composite_estimate(sample, cc);
    const fs::path file = out / ("curve_" + pair_file_tag(pair) + ".csv");
    write_curve_estimate(file, est);
    MetaList meta = base_meta("estimate", c);
    meta.emplace_back("input", e.input.filename().string());
    meta.emplace_back("n", std::to_string(sample.n()));
    meta.emplace_back("estimator_pair", est.pair_label());
    meta.emplace_back("k", std::to_string(e.k));
    meta.emplace_back("grid_m", std::to_string(e.grid_m));
    meta.emplace_back("corrected", e.correct ? "1" : "0");
    meta.emplace_back("md_normalizer", e.md == MdNormalizer::Mean ? "mean" : "sum");
    meta.emplace_back("ml_scale", e.ml_scale == MlScale::Profile ? "profile" : "unit");
    meta.emplace_back("alpha_raw", format_double(est.alpha_raw));
    meta.emplace_back("alpha_clamped", est.alpha_clamped ? "1" : "0");
    meta.emplace_back("envelope_clamps", std::to_string(est.envelope_clamps));
    write_sidecar(file.string() + ".meta", meta);
    log << est.pair_label() << ": alpha_hat=" << format_double(est.alpha_hat)
        << (est.alpha_clamped ? " (clamped)" : "") << " -> " << file.string() << '\n';
  }
  return kExitOk;
}

PickandsModel eval_model(const EvalSpec& e) {
  if (e.family == "logistic") return PickandsModel::logistic(e.psi);
  if (e.family == "extremal_t") return PickandsModel::extremal_t(e.rho, e.nu);
  return PickandsModel::independence(2);
}

int cmd_eval(const Config& c, const fs::path& out, std::ostream& log) {
  if (!c.eval) throw ConfigError("eval", "required block is missing");
  const EvalSpec& e = *c.eval;
  const PickandsModel model = eval_model(e);
  std::ostringstream os;
  os << "quantity,alpha,argument,value\n";
  auto row = [&](const std::string& q, const std::string& a, const std::string& arg, const std::string& v) {
    os << q << ',' << a << ',' << arg << ',' << v << '\n';
  };
  const double theta = extremal_coefficient(model);
  row("theta_G", "NA", model.describe(), format_double(theta));
  row("lambda_G", "NA", model.describe(), format_double(lambda_from_theta(theta)));
  for (double a : e.alphas) {
    const PickandsModel ta = PickandsModel::alpha_transform(model, a);
    const double th = extremal_coefficient(ta);
    row("theta_G_alpha", format_double(a), "", format_double(th));
    row("lambda_G_alpha", format_double(a), "", format_double(lambda_from_theta(th)));
  }
  const std::vector<GevMargin> unit(2, GevMargin{GevType::Frechet, 1.0, 0.0, 1.0});
  for (double a : e.q_alphas) {
    const LimitLawQ law(model, unit, e.tail, a);
    const MarginalPoint mp = matched_marginal_point(law);
    const std::string br = std::string("branch=") + branch_name(law.branch());
    row("theta_Q", format_double(a), br, format_double(theta_Q(law)));
    row("theta_Q_direct", format_double(a), br, format_double(neg_log_Q(law, mp.x, mp.y)));
  }
  for (double lmn : e.lambda_mn) {
    for (double a : e.alphas) {
      std::string v;
      if (a >= 1.0) continue;
      try {
        v = format_double(lambda_inverse_link(lmn, a));
      } catch (const RangeError& err) {
        v = "NA";
        log << "warning: lambda link out of range for lambda_MN=" << format_double(lmn)
            << ", alpha=" << format_double(a) << " (value " << format_double(err.value()) << ")\n";
      }
      row("lambda_X", format_double(a), "lambda_MN=" + format_double(lmn), v);
    }
  }
  for (const auto& z : e.tail_z) {
    Vector zz(2);
    zz << z[0], z[1];
    for (double a : e.alphas) {
      row("tail_prob", format_double(a),
          "z=" + format_double(z[0]) + ";" + format_double(z[1]) + " n=" + std::to_string(e.tail_n),
          format_double(tail_prob_approx(model, a, zz, e.tail_n)));
    }
  }
  write_text_file(out / "eval.csv", os.str());

  std::ostringstream cs;
  const Vector grid = edge_grid(e.grid_m);
  cs << "t,A";
  for (double a : e.alphas) cs << ",A_alpha_a" << format_double(a) << ",A_star_a" << format_double(a);
  cs << '\n';
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    const SimplexPoint t = SimplexPoint::on_edge(grid[k]);
    cs << format_double(grid[k]) << ',' << format_double(model(t));
    for (double a : e.alphas) {
      const PickandsModel ta = PickandsModel::alpha_transform(model, a);
      cs << ',' << format_double(ta(t)) << ',' << format_double(astar_from_base(model, a, t));
    }
    cs << '\n';
  }
  write_text_file(out / "eval_curves.csv", cs.str());

  MetaList meta = base_meta("eval", c);
  meta.emplace_back("model", model.describe());
  write_sidecar(out / "eval.csv.meta", meta);
  write_sidecar(out / "eval_curves.csv.meta", meta);
  log << "wrote " << (out / "eval.csv").string() << " and " << (out / "eval_curves.csv").string() << '\n';
  return kExitOk;
}

MetaList experiment_meta(const Config& c, const ExperimentConfig& x) {
  MetaList meta = base_meta("experiment", c);
  auto list = [](const auto& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ';';
      if constexpr (std::is_same_v<std::decay_t<decltype(v[i])>, double>)
        s += format_double(v[i]);
      else
        s += std::to_string(v[i]);
    }
    return s;
  };
  meta.emplace_back("experiment", std::to_string(x.experiment));
  meta.emplace_back("alpha", list(x.alphas));
  if (x.experiment == 1) {
    meta.emplace_back("psi", list(x.psis));
  } else {
    meta.emplace_back("rho", list(x.rhos));
    meta.emplace_back("upsilon", list(x.nus));
    meta.emplace_back("n_prime", std::to_string(x.n_prime));
    meta.emplace_back("block_cap", std::to_string(x.block_cap));
  }
  meta.emplace_back("n", list(x.ns));
  meta.emplace_back("replications", std::to_string(x.replications));
  std::string pairs;
  for (const auto& p : x.pairs) pairs += (pairs.empty() ? "" : ";") + pair_label(p.first, p.second);
  meta.emplace_back("pairs", pairs);
  meta.emplace_back("k", std::to_string(x.k));
  meta.emplace_back("grid_m", std::to_string(x.grid_m));
  meta.emplace_back("corrected", x.correct ? "1" : "0");
  meta.emplace_back("md_normalizer", x.md_normalizer == MdNormalizer::Mean ? "mean" : "sum");
  meta.emplace_back("ml_scale", x.ml_scale == MlScale::Profile ? "profile" : "unit");
  return meta;
}

void emit_figures(const std::vector<ResultRow>& rows, const fs::path& out, const MetaList& meta,
                  std::ostream& log) {
  for (const fs::path& p : write_figures(rows, out)) {
    write_sidecar(p.string() + ".meta", meta);
    log << "wrote " << p.string() << '\n';
  }
}

int cmd_experiment(const Config& c, const fs::path& out, std::ostream& log, std::ostream& err) {
  if (!c.experiment) throw ConfigError("experiment", "required block is missing");
  ExperimentConfig x = *c.experiment;
  x.seed = c.seed;
  x.jobs = c.jobs;

  std::ostringstream report;
  const auto start = std::chrono::steady_clock::now();
  int flagged = 0;
  auto progress = [&](const ComboResult& cr, std::size_t i, std::size_t total) {
    std::ostringstream line;
    line << "[" << (i + 1) << "/" << total << "] exp=" << cr.combo.experiment
         << " alpha=" << cr.combo.alpha << (cr.combo.experiment == 1 ? " psi=" : " rho=")
         << cr.combo.dependence;
    if (cr.combo.experiment == 2) line << " upsilon=" << cr.combo.nu;
    line << " n=" << cr.combo.n << " (" << std::llround(cr.wall_ms) << " ms)";
    log << line.str() << '\n';
    report << line.str() << '\n';
    if (cr.cap_hits) report << "  block-size cap hits: " << cr.cap_hits << '\n';
    for (const auto& pr : cr.pairs) {
      report << "  " << pair_label(pr.pair.first, pr.pair.second) << ": failures=" << pr.failures
             << " alpha_clamps=" << pr.clamps << " envelope_clamps=" << pr.envelope_clamps;
      if (pr.flagged) {
        report << " FLAGGED (>20% failures)";
        ++flagged;
        err << "warning: " << pair_label(pr.pair.first, pr.pair.second) << " failed in "
            << pr.failures << "/" << pr.replications << " replications\n";
      }
      report << '\n';
    }
  };
  const ExperimentResult result = run_experiment(x, progress);
  const double total_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  report << "total_ms=" << std::llround(total_ms) << " jobs=" << x.jobs << " flagged=" << flagged << '\n';

  const std::vector<ResultRow> rows = result_rows(result);
  const MetaList meta = experiment_meta(c, x);
  write_results(out / "results.csv", rows);
  write_sidecar(out / "results.csv.meta", meta);
  emit_figures(rows, out, meta, log);
  write_text_file(out / "run_report.txt", report.str());
  log << "wrote " << (out / "results.csv").string() << '\n';
  return kExitOk;
}

int cmd_figures(const Config& c, const fs::path& out, std::ostream& log) {
  const fs::path src = c.figures.results ? *c.figures.results : out / "results.csv";
  const std::vector<ResultRow> rows = read_results(src);
  MetaList meta = base_meta("figures", c);
  meta.emplace_back("results", src.filename().string());
  emit_figures(rows, out, meta, log);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Extremes of a random number of maxima: sampling, estimation and Monte Carlo sweeps"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  const char* names[] = {"sample", "estimate", "eval", "experiment", "figures"};
  const char* help[] = {"draw a paired sample", "composite estimates from a sample CSV",
                        "analytic quantities of a model", "Monte Carlo sweep",
                        "plot-data CSVs from results.csv"};
  for (int i = 0; i < 5; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  }

  std::vector<std::string> argv_store{"rnmax"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    Config config = load_config(config_path);
    if (seed) config.seed = *seed;
    if (jobs) config.jobs = *jobs;
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(dir, "cannot create output directory: " + ec.message());
    if (cmd == "sample") return cmd_sample(config, dir, out);
    if (cmd == "estimate") return cmd_estimate(config, dir, out);
    if (cmd == "eval") return cmd_eval(config, dir, out);
    if (cmd == "experiment") return cmd_experiment(config, dir, out, err);
    return cmd_figures(config, dir, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitParse;
  } catch (const EstimationFailure& e) {
    err << "estimation failure (" << e.stage_name() << "): " << e.what() << '\n';
    return kExitEstimation;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace rnmax
