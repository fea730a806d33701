// Command-line front end: band | select | simulate.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "scband/band.hpp"
#include "scband/basis.hpp"
#include "scband/covariance.hpp"
#include "scband/error.hpp"
#include "scband/fit.hpp"
#include "scband/io.hpp"
#include "scband/parallel.hpp"
#include "scband/select.hpp"
#include "scband/simulate.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace scband;

namespace {

constexpr const char* kToolName = "scband";
constexpr const char* kToolVersion = "1.0.0";

struct DataOptions {
  std::string input;
  std::string x_col = "x";
  std::string y_col = "y";
  std::string id_col = "id";
  std::string domain;
};

struct ModelOptions {
  std::string basis = "bspline";
  int order = 4;
  std::optional<int> knots;
  bool penalize_dim = false;
};

struct BandOptions {
  double alpha = 0.05;
  int boot = 500;
  int grid = 1000;
  std::uint64_t seed = 20240101;
};

struct Options {
  DataOptions data;
  ModelOptions model;
  BandOptions band;
  BandOptions sim_band{0.05, 500, 1000, 1};
  std::string output_dir = ".";
  bool plot = false;
  unsigned threads = 1;

  // simulate only
  int setting = 1;
  int n = 100;
  std::string score_dist = "normal";
  std::string error_dist = "normal";
  bool hetero = false;
  int reps = 500;
  double sigma_eps = 0.1;
};

void add_data_flags(CLI::App& cmd, DataOptions& d) {
  cmd.add_option("--input", d.input, "Long-format CSV (one observation per row)")->required();
  cmd.add_option("--x-col", d.x_col, "Design-point column")->capture_default_str();
  cmd.add_option("--y-col", d.y_col, "Response column")->capture_default_str();
  cmd.add_option("--id-col", d.id_col, "Subject identifier column")->capture_default_str();
  cmd.add_option("--domain", d.domain, "Design domain override as lo,hi");
}

void add_model_flags(CLI::App& cmd, ModelOptions& m) {
  cmd.add_option("--basis", m.basis, "bspline | fourier | legendre")->capture_default_str();
  cmd.add_option("--order", m.order, "B-spline order p (4 = cubic)")->capture_default_str();
  cmd.add_option("--knots", m.knots, "Fixed basis size J (skips BIC selection)");
  cmd.add_flag("--penalize-dim", m.penalize_dim, "Penalize BIC with K = J + p instead of J");
}

void add_band_flags(CLI::App& cmd, BandOptions& b) {
  cmd.add_option("--alpha", b.alpha, "Significance level")->capture_default_str();
  cmd.add_option("--boot", b.boot, "Multiplier replications B")->capture_default_str();
  cmd.add_option("--grid", b.grid, "Band grid size M")->capture_default_str();
  cmd.add_option("--seed", b.seed, "Random seed")->capture_default_str();
}

BasisSpec family_for(const ModelOptions& m) {
  switch (parse_basis_kind(m.basis)) {
    case BasisKind::BSpline: return BasisSpec::bspline(1, m.order);
    case BasisKind::Fourier: return BasisSpec::fourier(1);
    case BasisKind::Legendre: return BasisSpec::legendre(1);
  }
  return BasisSpec::bspline(1, m.order);
}

std::optional<DomainMap> parse_domain(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const auto comma = text.find(',');
  if (comma == std::string::npos) fail(ErrorCode::Config, "domain: expected lo,hi");
  try {
    std::size_t a = 0, b = 0;
    const std::string lo_s = text.substr(0, comma), hi_s = text.substr(comma + 1);
    const double lo = std::stod(lo_s, &a), hi = std::stod(hi_s, &b);
    if (a != lo_s.size() || b != hi_s.size()) throw std::invalid_argument("trailing");
    return DomainMap(lo, hi);
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail(ErrorCode::Config, "domain: expected two numbers lo,hi, got '" + text + "'");
  }
}

IngestedData load(const DataOptions& d) {
  IngestOptions io;
  io.x_column = d.x_col;
  io.y_column = d.y_col;
  io.id_column = d.id_col;
  io.domain = parse_domain(d.domain);
  return ingest_csv(d.input, io);
}

json data_config(const DataOptions& d) {
  json j;
  j["input"] = d.input;
  j["x-col"] = d.x_col;
  j["y-col"] = d.y_col;
  j["id-col"] = d.id_col;
  if (!d.domain.empty()) j["domain"] = d.domain;
  return j;
}

void merge(json& into, const json& from) {
  for (auto it = from.begin(); it != from.end(); ++it) into[it.key()] = it.value();
}

json model_config(const ModelOptions& m) {
  json j;
  j["basis"] = m.basis;
  j["order"] = m.order;
  if (m.knots) j["knots"] = *m.knots;
  j["penalize-dim"] = m.penalize_dim;
  return j;
}

json band_config(const BandOptions& b) {
  json j;
  j["alpha"] = b.alpha;
  j["boot"] = b.boot;
  j["grid"] = b.grid;
  j["seed"] = b.seed;
  return j;
}

json manifest_header(const std::string& command, const json& config) {
  json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["command"] = command;
  j["config"] = config;
  return j;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::InvalidArgument, "cannot open '" + path.string() + "' for writing");
  return out;
}

fs::path prepare_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) fail(ErrorCode::InvalidArgument, "cannot create output directory '" + dir + "'");
  return p;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

json selection_json(const SelectionResult& sel) {
  json j;
  j["j_min"] = sel.j_min;
  j["j_max"] = sel.j_max;
  j["chosen"] = sel.chosen;
  json rows = json::array();
  for (const Candidate& c : sel.candidates) {
    json r;
    r["J"] = c.J;
    r["status"] = to_string(c.status);
    if (c.status == CandidateStatus::Ok)
      r["bic"] = c.bic;
    else
      r["bic"] = nullptr;
    rows.push_back(r);
  }
  j["candidates"] = rows;
  return j;
}

int run_band(const Options& o) {
  const IngestedData in = load(o.data);
  const BasisSpec family = family_for(o.model);
  const SelectOptions sel_opts{o.model.penalize_dim};

  std::optional<SelectionResult> selection;
  int J = 0;
  if (o.model.knots) {
    J = *o.model.knots;
  } else {
    selection = select_knots(in.data, family, sel_opts);
    J = selection->chosen;
  }
  const MeanFit fit = fit_mean(in.data, family.with_size(J));
  const CovarianceStructure cov = estimate_covariance(fit, in.data);
  BandConfig bc;
  bc.alpha = o.band.alpha;
  bc.replications = o.band.boot;
  bc.grid_size = o.band.grid;
  bc.seed = o.band.seed;
  bc.threads = o.threads;
  const BandResult band = build_band(fit, cov, bc, in.data);

  json config = data_config(o.data);
  merge(config, model_config(o.model));
  merge(config, band_config(o.band));
  config["plot"] = o.plot;
  json manifest = manifest_header("band", config);

  json results;
  results["n"] = in.data.n();
  results["total_obs"] = in.data.total_obs();
  results["mean_count"] = in.data.mean_count();
  results["domain"] = {in.domain.raw_min, in.domain.raw_max};
  results["basis"] = to_string(fit.spec.kind());
  results["J"] = J;
  if (fit.spec.kind() == BasisKind::BSpline)
    results["p"] = fit.spec.order();
  else
    results["p"] = nullptr;
  results["K"] = fit.dim();
  results["alpha"] = band.alpha;
  results["B"] = band.replications;
  results["M"] = static_cast<int>(band.grid.size());
  results["seed"] = band.seed;
  results["qhat"] = band.qhat;
  results["norm_sigma1"] = max_norm(cov.sigma1);
  results["norm_sigma2"] = max_norm(cov.sigma2);
  results["opnorm_sigma1"] = op_inf_norm(cov.sigma1);
  results["opnorm_sigma2"] = op_inf_norm(cov.sigma2);
  std::size_t undefined = 0;
  for (char d : band.defined) undefined += d ? 0 : 1;
  results["undefined_points"] = undefined;
  if (selection) results["selection"] = selection_json(*selection);
  manifest["results"] = results;

  const fs::path dir = prepare_dir(o.output_dir);
  const std::string line = manifest.dump();
  {
    auto out = open_output(dir / "band.csv");
    write_band_csv(out, band, in.domain, "manifest " + line);
  }
  {
    auto out = open_output(dir / "manifest.json");
    out << manifest.dump(2) << '\n';
  }
  if (o.plot) {
    std::string svg = render_band_svg(band, in.domain, &in,
                                      "Mean estimate with " + format_real(100.0 * (1.0 - band.alpha)) +
                                          "% simultaneous band");
    const auto first = svg.find('\n') + 1;
    svg.insert(first, "<desc>" + xml_escape(line) + "</desc>\n");
    auto out = open_output(dir / "band.svg");
    out << svg;
  }
  std::cout << "J = " << J << ", K = " << fit.dim() << ", Qhat = " << format_real(band.qhat)
            << "; wrote " << (dir / "band.csv").string() << '\n';
  return 0;
}

int run_select(const Options& o, bool output_requested) {
  const IngestedData in = load(o.data);
  const SelectionResult sel = select_knots(in.data, family_for(o.model), SelectOptions{o.model.penalize_dim});
  std::cout << "candidate range [" << sel.j_min << ", " << sel.j_max << "] for nNbar = " << in.data.total_obs()
            << '\n';
  std::cout << "J,bic,status\n";
  for (const Candidate& c : sel.candidates)
    std::cout << c.J << ',' << (c.status == CandidateStatus::Ok ? format_real(c.bic) : std::string("nan"))
              << ',' << to_string(c.status) << '\n';
  std::cout << "chosen J = " << sel.chosen << '\n';

  if (output_requested) {
    json config = data_config(o.data);
    merge(config, model_config(o.model));
    config.erase("knots");
    json manifest = manifest_header("select", config);
    manifest["results"] = selection_json(sel);
    auto out = open_output(prepare_dir(o.output_dir) / "selection.json");
    out << manifest.dump(2) << '\n';
  }
  return 0;
}

int run_simulate(const Options& o) {
  SimulationConfig cfg;
  cfg.setting = o.setting;
  cfg.n = o.n;
  cfg.score_dist = parse_distribution(o.score_dist);
  cfg.error_dist = parse_distribution(o.error_dist);
  cfg.heteroscedastic = o.hetero;
  cfg.sigma_eps = o.sigma_eps;
  cfg.reps = o.reps;
  cfg.band.alpha = o.sim_band.alpha;
  cfg.band.replications = o.sim_band.boot;
  cfg.band.grid_size = o.sim_band.grid;
  cfg.seed = o.sim_band.seed;
  cfg.basis = parse_basis_kind(o.model.basis);
  cfg.order = o.model.order;
  cfg.fixed_size = o.model.knots;
  cfg.select.penalize_dimension = o.model.penalize_dim;
  cfg.threads = o.threads;
  cfg.validate();
  count_support(cfg.setting, cfg.n);

  const SimulationReport report = run_coverage(cfg);

  json config;
  config["setting"] = o.setting;
  config["n"] = o.n;
  config["score-dist"] = o.score_dist;
  config["error-dist"] = o.error_dist;
  config["hetero"] = o.hetero;
  config["sigma-eps"] = o.sigma_eps;
  config["reps"] = o.reps;
  merge(config, model_config(o.model));
  merge(config, band_config(o.sim_band));
  json manifest = manifest_header("simulate", config);

  json results;
  results["coverage"] = report.coverage;
  results["successes"] = report.successes;
  results["no_feasible_knots"] = report.no_feasible;
  results["failures"] = report.failures;
  results["mean_norm_sigma1"] = report.mean_norm_sigma1;
  results["mean_norm_sigma2"] = report.mean_norm_sigma2;
  results["mean_opnorm_sigma1"] = report.mean_opnorm_sigma1;
  results["mean_opnorm_sigma2"] = report.mean_opnorm_sigma2;
  manifest["results"] = results;

  const fs::path dir = prepare_dir(o.output_dir);
  {
    auto out = open_output(dir / "replications.csv");
    out << "# manifest " << manifest.dump() << '\n';
    out << "rep,status,J,K,qhat,covered,norm_sigma1,norm_sigma2,opnorm_sigma1,opnorm_sigma2,message\n";
    for (const RepRecord& r : report.records)
      out << r.rep << ',' << to_string(r.status) << ',' << r.J << ',' << r.K << ',' << format_real(r.qhat)
          << ',' << (r.covered ? 1 : 0) << ',' << format_real(r.norm_sigma1) << ','
          << format_real(r.norm_sigma2) << ',' << format_real(r.opnorm_sigma1) << ','
          << format_real(r.opnorm_sigma2) << ',' << csv_quote(r.message) << '\n';
  }
  {
    auto out = open_output(dir / "summary.json");
    out << manifest.dump(2) << '\n';
  }
  std::cout << "coverage = " << format_real(report.coverage) << " over " << report.successes
            << " replications; wrote " << (dir / "summary.json").string() << '\n';
  return 0;
}

void print_error(std::string_view code, const std::string& message) {
  json j;
  j["error"] = code;
  j["message"] = message;
  std::cerr << j.dump() << '\n';
}

// Locates the value of --config in raw arguments.
std::optional<std::string> find_config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

bool given(const std::vector<std::string>& args, const std::string& flag) {
  for (const std::string& a : args)
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  return false;
}

// Appends every config entry that the command line does not already set.
std::vector<std::string> expand_config(const std::vector<std::string>& args, const std::string& path,
                                       const CLI::App& app) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Config, "config: cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::Config, std::string("config: invalid JSON: ") + e.what());
  }
  const json* cfg = &doc;
  if (doc.contains("config")) cfg = &doc["config"];
  if (!cfg->is_object()) fail(ErrorCode::Config, "config: expected an object of flag values");
  if (doc.contains("command") && args.size() > 1 && doc["command"] != args[1])
    fail(ErrorCode::Config, "config: manifest is for '" + doc["command"].get<std::string>() +
                                "', not '" + args[1] + "'");

  const CLI::App* sub = nullptr;
  if (args.size() > 1) {
    try {
      sub = app.get_subcommand(args[1]);
    } catch (const CLI::OptionNotFound&) {
      sub = nullptr;
    }
  }

  std::vector<std::string> out = args;
  for (auto it = cfg->begin(); it != cfg->end(); ++it) {
    const std::string flag = "--" + it.key();
    if (sub) {
      try {
        (void)sub->get_option(flag);
      } catch (const CLI::OptionNotFound&) {
        fail(ErrorCode::Config, "config: unknown field '" + it.key() + "'");
      }
    }
    if (given(args, flag)) continue;
    const json& v = it.value();
    if (v.is_boolean()) {
      if (v.get<bool>()) out.push_back(flag);
    } else if (v.is_string()) {
      out.push_back(flag);
      out.push_back(v.get<std::string>());
    } else if (v.is_number()) {
      out.push_back(flag);
      out.push_back(v.dump());
    } else if (!v.is_null()) {
      fail(ErrorCode::Config, "config: field '" + it.key() + "' must be a scalar");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Mean-function estimation and simultaneous confidence bands for functional data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);

  std::string config_path;
  auto add_common = [&](CLI::App& cmd) {
    cmd.add_option("--config", config_path, "JSON manifest whose config fills unset flags");
    cmd.add_option("--threads", o.threads, "Worker threads (results do not depend on it)")
        ->capture_default_str();
  };

  CLI::App* band = app.add_subcommand("band", "Fit the mean and build its simultaneous band");
  add_data_flags(*band, o.data);
  add_model_flags(*band, o.model);
  add_band_flags(*band, o.band);
  band->add_option("--output-dir", o.output_dir, "Directory for artifacts")->capture_default_str();
  band->add_flag("--plot", o.plot, "Also write band.svg");
  add_common(*band);

  CLI::App* select = app.add_subcommand("select", "Print the BIC table over candidate basis sizes");
  add_data_flags(*select, o.data);
  select->add_option("--basis", o.model.basis, "bspline | fourier | legendre")->capture_default_str();
  select->add_option("--order", o.model.order, "B-spline order p")->capture_default_str();
  select->add_flag("--penalize-dim", o.model.penalize_dim, "Penalize BIC with K = J + p instead of J");
  auto* select_out = select->add_option("--output-dir", o.output_dir, "Also write selection.json here");
  add_common(*select);

  CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo coverage campaign on synthetic data");
  sim->add_option("--setting", o.setting, "Sampling scheme 1 (sparse) .. 4 (dense)")->capture_default_str();
  sim->add_option("--n", o.n, "Subjects per dataset")->capture_default_str();
  sim->add_option("--score-dist", o.score_dist, "normal | uniform | laplace")->capture_default_str();
  sim->add_option("--error-dist", o.error_dist, "normal | uniform | laplace")->capture_default_str();
  sim->add_flag("--hetero", o.hetero, "Heteroscedastic measurement error");
  sim->add_option("--sigma-eps", o.sigma_eps, "Measurement error scale")->capture_default_str();
  sim->add_option("--reps", o.reps, "Monte Carlo replications")->capture_default_str();
  add_model_flags(*sim, o.model);
  add_band_flags(*sim, o.sim_band);
  sim->add_option("--output-dir", o.output_dir, "Directory for artifacts")->capture_default_str();
  add_common(*sim);

  std::vector<std::string> args(argv, argv + argc);
  try {
    if (const auto path = find_config_path(args)) args = expand_config(args, *path, app);
  } catch (const Error& e) {
    print_error(to_string(e.code()), e.what());
    return 1;
  }

  std::vector<char*> cargs;
  for (std::string& a : args) cargs.push_back(a.data());
  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("UsageError", e.what());
    return 2;
  }

  try {
    if (o.threads == 0) o.threads = default_threads();
    if (*band) return run_band(o);
    if (*select) return run_select(o, select_out->count() > 0);
    if (*sim) return run_simulate(o);
  } catch (const Error& e) {
    print_error(to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("InternalError", e.what());
    return 1;
  }
  return 0;
}
