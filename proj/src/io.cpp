#include "rnmax/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace rnmax {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

int parse_int(const std::string& s, const std::string& src, std::size_t line) {
  const double v = parse_double(s, src, line);
  if (v != std::floor(v) || std::abs(v) > 2e9) throw ParseError(src, line, "expected integer, got '" + s + "'");
  return static_cast<int>(v);
}

bool parse_bool(const std::string& s, const std::string& src, std::size_t line) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw ParseError(src, line, "expected boolean, got '" + s + "'");
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(path.parent_path(), "cannot create directory: " + ec.message());
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(path, "cannot open for writing");
  return os;
}

void finish(std::ofstream& os, const fs::path& path) {
  os.flush();
  if (!os) throw IoError(path, "write failed");
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(path, "cannot open for reading");
  return is;
}

// compact parameter label: 0.5 -> "0.5", 0.633 -> "0.633"
std::string short_num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(const std::string& raw, const std::string& source, std::size_t line) {
  const std::string s = trim(raw);
  if (s.empty()) throw ParseError(source, line, "empty numeric field");
  if (s == "nan" || s == "NA") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  // strtod rather than stod: subnormal values set ERANGE but are valid
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  const std::size_t used = static_cast<std::size_t>(end - s.c_str());
  if (used == 0 || std::isinf(v)) throw ParseError(source, line, "not a number: '" + s + "'");
  if (used != s.size()) throw ParseError(source, line, "not a number: '" + s + "'");
  return v;
}

// --- samples ------------------------------------------------------------------

void write_paired_sample(std::ostream& os, const PairedSample& s) {
  const int d = s.dim();
  for (int j = 0; j < d; ++j) os << "eta_" << (j + 1) << ',';
  os << "xi\n";
  for (int i = 0; i < s.n(); ++i) {
    for (int j = 0; j < d; ++j) os << format_double(s.eta(i, j)) << ',';
    os << format_double(s.xi[i]) << '\n';
  }
}

void write_paired_sample(const fs::path& path, const PairedSample& s) {
  auto os = open_out(path);
  write_paired_sample(os, s);
  finish(os, path);
}

PairedSample read_paired_sample(std::istream& is, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(is, line)) throw ParseError(source, 1, "empty file");
  ++lineno;
  const auto header = split_csv(line);
  const int cols = static_cast<int>(header.size());
  if (cols < 3) throw ParseError(source, 1, "header needs eta_1,...,eta_d,xi with d >= 2");
  for (int j = 0; j + 1 < cols; ++j) {
    if (trim(header[j]) != "eta_" + std::to_string(j + 1))
      throw ParseError(source, 1, "expected column 'eta_" + std::to_string(j + 1) + "', got '" +
                                      trim(header[j]) + "'");
  }
  if (trim(header.back()) != "xi") throw ParseError(source, 1, "missing xi column");
  const int d = cols - 1;

  std::vector<double> values;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (static_cast<int>(f.size()) != cols)
      throw ParseError(source, lineno, "expected " + std::to_string(cols) + " fields, got " +
                                           std::to_string(f.size()));
    for (int j = 0; j < cols; ++j) {
      const double v = parse_double(f[j], source, lineno);
      if (!std::isfinite(v)) throw ParseError(source, lineno, "non-finite value");
      if (j == d && !(v > 0.0)) throw ParseError(source, lineno, "xi must be positive");
      values.push_back(v);
    }
  }
  const Eigen::Index n = static_cast<Eigen::Index>(values.size() / cols);
  if (n < 2) throw ParseError(source, lineno, "need at least 2 data rows");
  PairedSample s;
  s.eta.resize(n, d);
  s.xi.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) s.eta(i, j) = values[i * cols + j];
    s.xi[i] = values[i * cols + d];
  }
  return s;
}

PairedSample read_paired_sample(const fs::path& path) {
  auto is = open_in(path);
  return read_paired_sample(is, path.string());
}

// --- curve estimates ------------------------------------------------------------

void write_curve_estimate(std::ostream& os, const CurveEstimate& c) {
  os << "t,A_alpha_hat,A_star_hat,A_hat,alpha_hat,estimator_pair,corrected,clamped\n";
  const std::string label = c.pair_label();
  for (Eigen::Index k = 0; k < c.grid.size(); ++k) {
    os << format_double(c.grid[k]) << ',' << format_double(c.a_alpha[k]) << ','
       << format_double(c.a_star[k]) << ',' << format_double(c.a_hat[k]) << ','
       << format_double(c.alpha_hat) << ',' << label << ',' << (c.corrected ? 1 : 0) << ','
       << (c.alpha_clamped ? 1 : 0) << '\n';
  }
}

void write_curve_estimate(const fs::path& path, const CurveEstimate& c) {
  auto os = open_out(path);
  write_curve_estimate(os, c);
  finish(os, path);
}

// --- results --------------------------------------------------------------------

std::vector<ResultRow> result_rows(const ExperimentResult& result) {
  std::vector<ResultRow> rows;
  for (const auto& cr : result.combos) {
    for (const auto& pr : cr.pairs) {
      ResultRow r;
      r.experiment = cr.combo.experiment;
      r.alpha = cr.combo.alpha;
      r.psi_or_rho = cr.combo.dependence;
      r.upsilon = cr.combo.experiment == 2 ? cr.combo.nu : std::numeric_limits<double>::quiet_NaN();
      r.n = cr.combo.n;
      r.estimator_pair = pair_label(pr.pair.first, pr.pair.second);
      r.corrected = result.config.correct;
      r.R = pr.replications;
      r.failures = pr.failures;
      r.clamps = pr.clamps;
      r.MISE = pr.mise.mise;
      r.ISB = pr.mise.isb;
      r.IV = pr.mise.iv;
      r.wall_ms = result.config.record_timing ? cr.wall_ms : 0.0;
      rows.push_back(r);
    }
  }
  return rows;
}

static const char* kResultsHeader =
    "experiment,alpha,psi_or_rho,upsilon,n,estimator_pair,corrected,R,failures,clamps,MISE,ISB,IV,"
    "wall_ms";

void write_results(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << kResultsHeader << '\n';
  for (const auto& r : rows) {
    os << r.experiment << ',' << format_double(r.alpha) << ',' << format_double(r.psi_or_rho) << ','
       << (std::isnan(r.upsilon) ? std::string("NA") : format_double(r.upsilon)) << ',' << r.n
       << ',' << r.estimator_pair << ',' << (r.corrected ? 1 : 0) << ',' << r.R << ','
       << r.failures << ',' << r.clamps << ',' << format_double(r.MISE) << ','
       << format_double(r.ISB) << ',' << format_double(r.IV) << ',' << format_double(r.wall_ms)
       << '\n';
  }
}

void write_results(const fs::path& path, const std::vector<ResultRow>& rows) {
  auto os = open_out(path);
  write_results(os, rows);
  finish(os, path);
}

std::vector<ResultRow> read_results(std::istream& is, const std::string& source) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError(source, 1, "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kResultsHeader) throw ParseError(source, 1, "unexpected results header");
  std::vector<ResultRow> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 14) throw ParseError(source, lineno, "expected 14 fields, got " + std::to_string(f.size()));
    ResultRow r;
    r.experiment = parse_int(f[0], source, lineno);
    r.alpha = parse_double(f[1], source, lineno);
    r.psi_or_rho = parse_double(f[2], source, lineno);
    r.upsilon = parse_double(f[3], source, lineno);
    r.n = parse_int(f[4], source, lineno);
    r.estimator_pair = trim(f[5]);
    r.corrected = parse_bool(trim(f[6]), source, lineno);
    r.R = parse_int(f[7], source, lineno);
    r.failures = parse_int(f[8], source, lineno);
    r.clamps = parse_int(f[9], source, lineno);
    r.MISE = parse_double(f[10], source, lineno);
    r.ISB = parse_double(f[11], source, lineno);
    r.IV = parse_double(f[12], source, lineno);
    r.wall_ms = parse_double(f[13], source, lineno);
    rows.push_back(r);
  }
  return rows;
}

std::vector<ResultRow> read_results(const fs::path& path) {
  auto is = open_in(path);
  return read_results(is, path.string());
}

// --- figures --------------------------------------------------------------------

namespace {

struct DepKey {
  double dep;
  double nu;
  bool operator<(const DepKey& o) const {
    if (dep != o.dep) return dep < o.dep;
    return nu < o.nu;
  }
};

std::string pickands_part(const std::string& pair) { return pair.substr(0, pair.find('+')); }
std::string alpha_part(const std::string& pair) {
  const auto p = pair.find('+');
  return p == std::string::npos ? std::string() : pair.substr(p + 1);
}

int pickands_order(const std::string& p) {
  if (p == "P") return 0;
  if (p == "CFG") return 1;
  if (p == "MD") return 2;
  return 3;
}

}  // namespace

std::vector<fs::path> write_figures(const std::vector<ResultRow>& rows, const fs::path& dir) {
  std::vector<fs::path> written;
  std::set<std::pair<int, int>> groups;  // (experiment, n)
  for (const auto& r : rows) groups.insert({r.experiment, r.n});

  for (const auto& [exp, n] : groups) {
    std::vector<const ResultRow*> sel;
    std::set<double> alphas;
    std::set<DepKey> deps;
    std::set<std::string> methods;
    for (const auto& r : rows) {
      if (r.experiment != exp || r.n != n) continue;
      sel.push_back(&r);
      alphas.insert(r.alpha);
      deps.insert({r.psi_or_rho, exp == 2 ? r.upsilon : 0.0});
      methods.insert(pickands_part(r.estimator_pair));
    }
    std::vector<std::string> ordered(methods.begin(), methods.end());
    std::stable_sort(ordered.begin(), ordered.end(), [](const std::string& a, const std::string& b) {
      return pickands_order(a) < pickands_order(b);
    });
    auto find = [&](const DepKey& k, double a, const std::string& pair) -> const ResultRow* {
      for (const ResultRow* r : sel) {
        const double nu = exp == 2 ? r->upsilon : 0.0;
        if (r->psi_or_rho == k.dep && nu == k.nu && r->alpha == a && r->estimator_pair == pair) return r;
      }
      return nullptr;
    };
    const std::string fig_main = exp == 1 ? "fig1" : "fig3";
    const std::string fig_ratio = exp == 1 ? "fig2" : "fig4";
    auto lead_header = [&]() {
      return exp == 1 ? std::string("psi") : std::string("rho,upsilon,theta");
    };
    auto lead_values = [&](const DepKey& k) {
      if (exp == 1) return format_double(k.dep);
      const double theta = extremal_coefficient(PickandsModel::extremal_t(k.dep, k.nu));
      return format_double(k.dep) + "," + format_double(k.nu) + "," + format_double(theta);
    };

    for (const char* am : {"GPWM", "ML"}) {
      bool any = false;
      for (const ResultRow* r : sel) any = any || alpha_part(r->estimator_pair) == am;
      if (!any) continue;
      std::ostringstream os;
      os << lead_header() << ",estimator";
      for (double a : alphas) {
        const std::string s = short_num(a);
        os << ",MISE_a" << s << ",ISB_a" << s << ",IV_a" << s;
      }
      os << '\n';
      for (const DepKey& k : deps) {
        for (const std::string& pm : ordered) {
          const std::string pair = pm + "+" + am;
          os << lead_values(k) << ',' << pair;
          for (double a : alphas) {
            const ResultRow* r = find(k, a, pair);
            if (r)
              os << ',' << format_double(r->MISE) << ',' << format_double(r->ISB) << ','
                 << format_double(r->IV);
            else
              os << ",NA,NA,NA";
          }
          os << '\n';
        }
      }
      std::string lower = am;
      std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
      const fs::path p = dir / (fig_main + "_" + lower + "_n" + std::to_string(n) + ".csv");
      write_text_file(p, os.str());
      written.push_back(p);
    }

    // GPWM / ML ratio
    std::ostringstream os;
    os << lead_header() << ",estimator";
    for (double a : alphas) os << ",ratio_a" << short_num(a);
    os << '\n';
    bool any_ratio = false;
    for (const DepKey& k : deps) {
      for (const std::string& pm : ordered) {
        os << lead_values(k) << ',' << pm;
        for (double a : alphas) {
          const ResultRow* g = find(k, a, pm + "+GPWM");
          const ResultRow* m = find(k, a, pm + "+ML");
          if (g && m) {
            os << ',' << format_double(g->MISE / m->MISE);
            any_ratio = true;
          } else {
            os << ",NA";
          }
        }
        os << '\n';
      }
    }
    if (any_ratio) {
      const fs::path p = dir / (fig_ratio + "_ratio_n" + std::to_string(n) + ".csv");
      write_text_file(p, os.str());
      written.push_back(p);
    }
  }
  return written;
}

// --- sidecars & text ------------------------------------------------------------

void write_sidecar(const fs::path& path, const MetaList& meta) {
  std::ostringstream os;
  for (const auto& [k, v] : meta) os << k << '=' << v << '\n';
  write_text_file(path, os.str());
}

MetaList read_sidecar(const fs::path& path) {
  std::istringstream is(read_text_file(path));
  MetaList out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(path.string(), lineno, "expected key=value");
    out.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  return out;
}

void write_text_file(const fs::path& path, const std::string& text) {
  auto os = open_out(path);
  os << text;
  finish(os, path);
}

std::string read_text_file(const fs::path& path) {
  auto is = open_in(path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace rnmax
