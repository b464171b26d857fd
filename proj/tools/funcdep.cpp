// funcdep: wavelet HSIC independence tests for functional data.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "funcdep/connectome.hpp"
#include "funcdep/io.hpp"
#include "funcdep/pipeline.hpp"
#include "funcdep/report.hpp"
#include "funcdep/simulate.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace funcdep;

namespace {

struct CommonArgs {
  std::string filter = "d10";
  int coarse_scale = 1;
  std::optional<double> beta_x, beta_y, beta_max;
  std::size_t perms = 1999;
  std::uint64_t seed = 0;
  std::optional<unsigned> threads;
  std::string tie_rule = "conservative";
  bool resample = false;
  bool header = false;
  bool timing = false;
  std::string methods;
  double alpha = 0.05;
  double discovery_rate = 0.6;
  std::string out;
  std::string format = "json";
};

Error usage(const std::string& msg) { return Error(ErrorKind::UsageError, msg); }

void add_common(CLI::App* cmd, CommonArgs& a, bool with_beta, bool with_perms) {
  cmd->add_option("--filter", a.filter, "Wavelet filter")
      ->check(CLI::IsMember({"haar", "d2", "d4", "d10"}))
      ->capture_default_str();
  cmd->add_option("--coarse-scale", a.coarse_scale, "Coarse scale L")->capture_default_str();
  cmd->add_option("--beta-max", a.beta_max, "Upper bound for the selected beta");
  if (with_beta) {
    cmd->add_option("--beta-x", a.beta_x, "Fixed beta for X (skips selection)");
    cmd->add_option("--beta-y", a.beta_y, "Fixed beta for Y (skips selection)");
  }
  if (with_perms) {
    cmd->add_option("--perms", a.perms, "Permutations per test")->capture_default_str();
    cmd->add_option("--seed", a.seed, "Random seed")->capture_default_str();
    cmd->add_option("--tie-rule", a.tie_rule, "Tie handling")
        ->check(CLI::IsMember({"conservative", "random"}))
        ->capture_default_str();
    cmd->add_option("--methods", a.methods, "Comma-separated methods");
  }
  cmd->add_option("--threads", a.threads, "Worker threads (default: FUNCDEP_THREADS or all cores)");
  cmd->add_flag("--resample", a.resample, "Interpolate to the next lower power of two");
  cmd->add_flag("--header", a.header, "First CSV row is a header");
  cmd->add_option("--out", a.out, "Output file (default: stdout)");
  cmd->add_option("--format", a.format, "Output format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
}

unsigned thread_count(const CommonArgs& a) {
  if (a.threads) {
    if (*a.threads == 0) throw usage("--threads must be >= 1");
    return *a.threads;
  }
  return default_thread_count();
}

PipelineOptions pipeline_options(const CommonArgs& a) {
  PipelineOptions opt;
  opt.filter = *parse_filter(a.filter);
  if (a.coarse_scale < 0) throw usage("--coarse-scale must be >= 0");
  opt.coarse_scale = a.coarse_scale;
  if (a.beta_max && !(*a.beta_max >= 0.0)) throw usage("--beta-max must be >= 0");
  opt.beta_max = a.beta_max;
  if (a.perms < 1) throw usage("--perms must be >= 1");
  opt.permutations = a.perms;
  opt.tie_rule = *parse_tie_rule(a.tie_rule);
  opt.threads = thread_count(a);
  return opt;
}

std::vector<Method> parse_methods(const std::string& list, std::vector<Method> fallback) {
  if (list.empty()) return fallback;
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto m = parse_method(item);
    if (!m) throw usage("unknown method '" + item + "'");
    if (std::find(out.begin(), out.end(), *m) == out.end()) out.push_back(*m);
  }
  if (out.empty()) throw usage("--methods is empty");
  return out;
}

/// Loads a curve file and brings its grid to a power of two when allowed.
struct LoadedCurves {
  CurveMatrix values;
  std::optional<std::vector<double>> grid;
  std::optional<std::size_t> resampled_from;
};

LoadedCurves load_curves(const std::string& path, const CommonArgs& a) {
  CurveTable t = read_curve_csv(path, a.header ? HeaderMode::Present : HeaderMode::Auto);
  LoadedCurves out{std::move(t.values), std::move(t.grid), std::nullopt};
  if (out.grid) {
    if (out.grid->size() != static_cast<std::size_t>(out.values.cols()))
      throw Error(ErrorKind::ParseError, path + ": header width differs from data width");
    check_regular_grid(*out.grid, path);
  }
  const std::size_t m = static_cast<std::size_t>(out.values.cols());
  if (m < 2 || !std::has_single_bit(m)) {
    if (!a.resample)
      throw Error(ErrorKind::InvalidGrid, path + ": grid size " + std::to_string(m) +
                                              " is not a power of two (use --resample)");
    out.values = resample_linear(out.values, lower_power_of_two(m));
    out.resampled_from = m;
  }
  return out;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_) throw Error(ErrorKind::ParseError, path + ": cannot open for writing");
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

std::ostream& csv_number(std::ostream& os, double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return os << s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- test -----------------------------------------------------------------

int cmd_test(const std::string& x_path, const std::string& y_path, const CommonArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  PipelineOptions opt = pipeline_options(a);
  auto methods = parse_methods(a.methods, {Method::WavHsic});
  LoadedCurves x = load_curves(x_path, a), y = load_curves(y_path, a);
  if (x.grid && y.grid && *x.grid != *y.grid) throw Error(ErrorKind::InvalidGrid, "x and y grids differ");
  if (x.values.rows() != y.values.rows())
    throw Error(ErrorKind::DimensionMismatch, "x has " + std::to_string(x.values.rows()) + " subjects, y has " +
                                                  std::to_string(y.values.rows()));
  if (x.values.cols() != y.values.cols())
    throw Error(ErrorKind::DimensionMismatch, "x has " + std::to_string(x.values.cols()) +
                                                  " grid points, y has " + std::to_string(y.values.cols()));

  FamilyFit fx = fit_family(x.values, opt, a.beta_x);
  FamilyFit fy = fit_family(y.values, opt, a.beta_y);

  TestReport rep;
  rep.beta_x = fx.beta;
  rep.beta_y = fy.beta;
  rep.beta_x_fixed = fx.beta_fixed;
  rep.beta_y_fixed = fy.beta_fixed;
  rep.n = static_cast<std::uint64_t>(x.values.rows());
  rep.m = static_cast<std::uint64_t>(x.values.cols());
  rep.coarse_scale = opt.coarse_scale;
  rep.filter = a.filter;
  rep.permutations = opt.permutations;
  rep.seed = a.seed;
  rep.tie_rule = a.tie_rule;
  if (x.resampled_from) rep.resampled_from = *x.resampled_from;

  std::optional<CurveMatrix> xd, yd;
  for (Method m : methods) {
    const std::string name(method_name(m));
    rep.methods.push_back(name);
    if (m == Method::WavHsic) {
      auto r = wavhsic_test(fx, fy, opt, a.seed);
      rep.results[name] = {r.observed, r.p_value};
    } else {
      if (!xd) {
        xd = reconstruct_curves(fx, opt.filter);
        yd = reconstruct_curves(fy, opt.filter);
      }
      auto r = run_baseline(m, *xd, *yd, opt, a.seed);
      rep.results[name] = {r.statistic, r.p_value};
    }
  }
  if (a.timing) rep.wall_time_s = seconds_since(t0);

  Output out(a.out);
  if (a.format == "csv") {
    out.stream() << "method,statistic,p_value\n";
    for (const auto& name : rep.methods) {
      out.stream() << name << ',';
      csv_number(out.stream(), rep.results[name].statistic) << ',';
      csv_number(out.stream(), rep.results[name].p_value) << '\n';
    }
  } else {
    out.stream() << json(rep).dump(2) << '\n';
  }
  return 0;
}

// ---- denoise / select-beta ------------------------------------------------

int cmd_denoise(const std::string& path, const CommonArgs& a) {
  PipelineOptions opt = pipeline_options(a);
  LoadedCurves x = load_curves(path, a);
  const WaveletFilter filter = make_filter(opt.filter);
  const std::size_t n = static_cast<std::size_t>(x.values.rows()), m = static_cast<std::size_t>(x.values.cols());
  auto results = denoise_rows(std::span<const double>(x.values.data(), n * m), n, m, filter, opt.coarse_scale,
                              opt.threads);
  CurveMatrix curves(x.values.rows(), x.values.cols());
  for (std::size_t i = 0; i < n; ++i) {
    auto row = inverse_dwt(results[i].coeffs, filter);
    for (std::size_t l = 0; l < m; ++l) curves(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) = row[l];
  }
  Output out(a.out);
  if (a.format == "csv") {
    write_curve_csv(out.stream(), curves);
    return 0;
  }
  json j;
  j["n"] = n;
  j["m"] = m;
  j["filter"] = a.filter;
  j["coarse_scale"] = opt.coarse_scale;
  if (x.resampled_from) j["resampled_from"] = *x.resampled_from;
  json sd = json::array(), thr = json::array(), rows = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    sd.push_back(results[i].noise.delta_hat);
    thr.push_back(results[i].threshold);
    json row = json::array();
    for (std::size_t l = 0; l < m; ++l) row.push_back(curves(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)));
    rows.push_back(std::move(row));
  }
  j["noise_sd"] = std::move(sd);
  j["threshold"] = std::move(thr);
  j["curves"] = std::move(rows);
  out.stream() << j.dump() << '\n';
  return 0;
}

json selection_json(const BetaSelection& s) {
  json j;
  j["beta"] = s.beta;
  j["fallback_used"] = s.fallback_used;
  j["cutoff"] = s.profile.cutoff;
  j["levels"] = s.profile.levels;
  j["dvar_signal"] = s.profile.dvar_signal;
  j["dvar_residual"] = s.profile.dvar_residual;
  j["levels_used"] = s.fit.levels_used;
  j["slope"] = s.fit.slope;
  j["intercept"] = s.fit.intercept;
  return j;
}

int cmd_select_beta(const std::string& path, const CommonArgs& a) {
  PipelineOptions opt = pipeline_options(a);
  LoadedCurves x = load_curves(path, a);
  FamilyFit fit = fit_family(x.values, opt);
  Output out(a.out);
  if (a.format == "csv") {
    out.stream() << "level,dvar_signal,dvar_residual,used\n";
    const auto& p = fit.selection.profile;
    const auto& used = fit.selection.fit.levels_used;
    for (std::size_t i = 0; i < p.levels.size(); ++i) {
      out.stream() << p.levels[i] << ',';
      csv_number(out.stream(), p.dvar_signal[i]) << ',';
      csv_number(out.stream(), p.dvar_residual[i]) << ','
          << (std::find(used.begin(), used.end(), p.levels[i]) != used.end() ? 1 : 0) << '\n';
    }
    return 0;
  }
  json j = selection_json(fit.selection);
  j["beta_max"] = opt.beta_max.value_or(default_beta_max(make_filter(opt.filter)));
  j["n"] = x.values.rows();
  j["m"] = x.values.cols();
  j["filter"] = a.filter;
  j["coarse_scale"] = opt.coarse_scale;
  out.stream() << j.dump(2) << '\n';
  return 0;
}

// ---- connectome -----------------------------------------------------------

int cmd_connectome(const std::string& dir, const CommonArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  PipelineOptions opt = pipeline_options(a);
  if (!(a.discovery_rate >= 0.0 && a.discovery_rate <= 1.0)) throw usage("--discovery-rate must lie in [0, 1]");
  auto methods = parse_methods(a.methods, {Method::WavHsic});
  if (!fs::is_directory(dir)) throw Error(ErrorKind::ParseError, dir + ": not a directory");

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.size() < 2) throw Error(ErrorKind::InsufficientData, dir + ": need at least two channel CSV files");

  std::vector<std::string> labels;
  std::vector<CurveMatrix> data;
  for (const auto& f : files) {
    labels.push_back(f.stem().string());
    data.push_back(load_curves(f.string(), a).values);
    if (data.back().rows() != data.front().rows() || data.back().cols() != data.front().cols())
      throw Error(ErrorKind::ShapeMismatch,
                  f.filename().string() + " is " + std::to_string(data.back().rows()) + "x" +
                      std::to_string(data.back().cols()) + " but " + files.front().filename().string() + " is " +
                      std::to_string(data.front().rows()) + "x" + std::to_string(data.front().cols()));
  }

  const std::size_t channels = files.size();
  PipelineOptions inner = opt;
  inner.threads = 1;
  std::vector<FamilyFit> fits(channels);
  parallel_for(channels, opt.threads, [&](std::size_t c) { fits[c] = fit_family(data[c], inner, a.beta_x); });
  std::vector<CurveMatrix> denoised;
  bool need_curves = std::any_of(methods.begin(), methods.end(), [](Method m) { return m != Method::WavHsic; });
  if (need_curves)
    for (const auto& f : fits) denoised.push_back(reconstruct_curves(f, opt.filter));

  const auto pairs = channel_pairs(channels);
  Output out(a.out);
  json j;
  if (a.format == "csv") out.stream() << "channel_a,channel_b,method,statistic,p_value,edge\n";
  j["channels"] = labels;
  json betas = json::array();
  for (const auto& f : fits) betas.push_back(f.beta);
  j["beta"] = std::move(betas);
  j["discovery_rate"] = a.discovery_rate;
  j["permutations"] = opt.permutations;
  j["seed"] = a.seed;
  j["filter"] = a.filter;
  j["coarse_scale"] = opt.coarse_scale;
  j["tie_rule"] = a.tie_rule;
  json by_method = json::object();
  for (Method m : methods) {
    auto results = pairwise_tests(fits, denoised, m, opt, derive_key(a.seed, {static_cast<std::uint64_t>(m)}),
                                  opt.threads);
    auto mask = discovery_mask(results, a.discovery_rate);
    const std::string name(method_name(m));
    if (a.format == "csv") {
      for (std::size_t k = 0; k < results.size(); ++k) {
        out.stream() << labels[results[k].a] << ',' << labels[results[k].b] << ',' << name << ',';
        csv_number(out.stream(), results[k].statistic) << ',';
        csv_number(out.stream(), results[k].p_value) << ',' << (mask[k] ? 1 : 0) << '\n';
      }
      continue;
    }
    json p = json::array(), s = json::array(), e = json::array();
    for (std::size_t r = 0; r < channels; ++r) {
      p.push_back(json::array());
      s.push_back(json::array());
      e.push_back(json::array());
      for (std::size_t c = 0; c < channels; ++c) {
        if (r == c) {
          p.back().push_back(nullptr);
          s.back().push_back(nullptr);
          e.back().push_back(false);
          continue;
        }
        const std::size_t a_ = std::min(r, c), b_ = std::max(r, c);
        const std::size_t k = static_cast<std::size_t>(
            std::find_if(pairs.begin(), pairs.end(), [&](auto pr) { return pr.first == a_ && pr.second == b_; }) -
            pairs.begin());
        p.back().push_back(results[k].p_value);
        s.back().push_back(results[k].statistic);
        e.back().push_back(static_cast<bool>(mask[k]));
      }
    }
    json block;
    block["p_value"] = std::move(p);
    block["statistic"] = std::move(s);
    block["edges"] = std::move(e);
    block["edge_count"] = std::count(mask.begin(), mask.end(), true);
    by_method[name] = std::move(block);
  }
  if (a.format == "csv") return 0;
  j["methods"] = std::move(by_method);
  if (a.timing) j["wall_time_s"] = seconds_since(t0);
  out.stream() << j.dump() << '\n';
  return 0;
}

// ---- simulate -------------------------------------------------------------

struct SimArgs {
  std::vector<int> settings{1};
  std::vector<std::size_t> n{50};
  std::vector<std::size_t> m{64};
  std::vector<double> snr{4.0};
  std::size_t reps = 199;
  double rho = 0.6;
  std::string table;
};

json row_json(const ExperimentRow& row) {
  const SimConfig& c = row.config;
  json j;
  j["setting"] = static_cast<int>(c.setting);
  j["n"] = c.n;
  j["m"] = c.m;
  j["snr"] = c.snr;
  j["reps"] = c.reps;
  j["permutations"] = c.permutations;
  j["seed"] = c.seed;
  j["alpha"] = c.alpha;
  j["filter"] = filter_name(c.filter);
  j["coarse_scale"] = c.coarse_scale;
  json rates = json::object();
  for (Method m : kAllMethods)
    if (auto it = row.rejection_rate.find(m); it != row.rejection_rate.end()) rates[std::string(method_name(m))] = it->second;
  j["rejection_rate"] = std::move(rates);
  j["median_beta_x"] = row.median_beta_x;
  j["median_beta_y"] = row.median_beta_y;
  if (row.wall_time_s) j["wall_time_s"] = *row.wall_time_s;
  return j;
}

void write_table(std::ostream& os, const std::vector<ExperimentRow>& rows, const std::vector<Method>& methods) {
  os << "setting,n,m,snr";
  for (Method m : methods) os << ',' << method_name(m);
  os << ",median_beta_x,median_beta_y\n";
  for (const auto& row : rows) {
    os << static_cast<int>(row.config.setting) << ',' << row.config.n << ',' << row.config.m << ',';
    csv_number(os, row.config.snr);
    for (Method m : methods) csv_number(os << ',', row.rejection_rate.at(m));
    csv_number(os << ',', row.median_beta_x);
    csv_number(os << ',', row.median_beta_y) << '\n';
  }
}

int cmd_simulate(const SimArgs& s, const CommonArgs& a) {
  PipelineOptions opt = pipeline_options(a);
  if (!(a.alpha > 0.0 && a.alpha < 1.0)) throw usage("--alpha must lie in (0, 1)");
  if (s.reps < 1) throw usage("--reps must be >= 1");
  if (!(s.rho >= -1.0 && s.rho <= 1.0)) throw usage("--rho must lie in [-1, 1]");
  std::vector<Method> methods = parse_methods(a.methods, {Method::WavHsic, Method::Pearson, Method::Dnm,
                                                          Method::Gtemp, Method::DcovC, Method::FpcaDcov});
  const std::set<Method> method_set(methods.begin(), methods.end());
  std::vector<SimConfig> configs;
  for (int st : s.settings)
    for (std::size_t n : s.n)
      for (std::size_t m : s.m)
        for (double snr : s.snr) {
          if (st < 1 || st > 3) throw usage("--setting must be 1, 2 or 3");
          if (!(snr > 0.0)) throw usage("--snr must be > 0");
          if (m < kBasisSize || !std::has_single_bit(m)) throw usage("--m must be a power of two >= 16");
          if (n < 4) throw usage("--n must be >= 4");
          if (opt.coarse_scale > finest_level(m)) throw usage("--coarse-scale exceeds log2(m) - 1");
          SimConfig c;
          c.setting = static_cast<Setting>(st);
          c.n = n;
          c.m = m;
          c.snr = snr;
          c.seed = a.seed;
          c.reps = s.reps;
          c.permutations = opt.permutations;
          c.alpha = a.alpha;
          c.high_freq_rho = s.rho;
          c.filter = opt.filter;
          c.coarse_scale = opt.coarse_scale;
          configs.push_back(c);
        }

  Output out(a.out);
  std::vector<ExperimentRow> rows;
  for (const auto& c : configs) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentRow row = run_experiment(c, method_set, opt.threads);
    if (a.timing) row.wall_time_s = seconds_since(t0);
    if (a.format == "json") out.stream() << row_json(row).dump() << '\n' << std::flush;
    rows.push_back(std::move(row));
  }
  if (a.format == "csv") write_table(out.stream(), rows, methods);
  if (!s.table.empty()) {
    std::ofstream t(s.table, std::ios::binary);
    if (!t) throw Error(ErrorKind::ParseError, s.table + ": cannot open for writing");
    write_table(t, rows, methods);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wavelet HSIC independence tests for functional data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "funcdep 1.0.0");

  CommonArgs test_args, conn_args, den_args, sel_args, sim_args;
  std::string x_path, y_path, dir, den_path, sel_path;
  SimArgs sim;

  auto* test = app.add_subcommand("test", "Test independence of two curve families");
  test->add_option("x", x_path, "CSV of X curves")->required();
  test->add_option("y", y_path, "CSV of Y curves")->required();
  add_common(test, test_args, true, true);
  test->add_flag("--timing", test_args.timing, "Include wall-clock time in the report");

  auto* conn = app.add_subcommand("connectome", "All-pairs tests over a directory of channel CSVs");
  conn->add_option("dir", dir, "Directory of per-channel CSV files")->required();
  add_common(conn, conn_args, false, true);
  conn->add_option("--beta", conn_args.beta_x, "Fixed beta for every channel");
  conn->add_option("--discovery-rate", conn_args.discovery_rate, "Fraction of pairs kept as edges")
      ->capture_default_str();
  conn->add_flag("--timing", conn_args.timing, "Include wall-clock time in the output");

  auto* den = app.add_subcommand("denoise", "Wavelet soft-threshold denoising");
  den->add_option("input", den_path, "CSV of curves")->required();
  add_common(den, den_args, false, false);

  auto* sel = app.add_subcommand("select-beta", "Data-driven choice of beta for one family");
  sel->add_option("input", sel_path, "CSV of curves")->required();
  add_common(sel, sel_args, false, false);

  auto* simc = app.add_subcommand("simulate", "Rejection rates on simulated data");
  sim_args.perms = 199;
  add_common(simc, sim_args, false, true);
  simc->add_option("--setting", sim.settings, "Settings (1, 2, 3)")->delimiter(',')->capture_default_str();
  simc->add_option("--n", sim.n, "Subjects")->delimiter(',')->capture_default_str();
  simc->add_option("--m", sim.m, "Grid sizes")->delimiter(',')->capture_default_str();
  simc->add_option("--snr", sim.snr, "Signal-to-noise ratios")->delimiter(',')->capture_default_str();
  simc->add_option("--reps", sim.reps, "Replicates")->capture_default_str();
  simc->add_option("--rho", sim.rho, "High-frequency correlation in setting 2")->capture_default_str();
  simc->add_option("--alpha", sim_args.alpha, "Significance level")->capture_default_str();
  simc->add_option("--table", sim.table, "Also write a CSV table to this file");
  simc->add_flag("--timing", sim_args.timing, "Include wall-clock time per row");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*test) return cmd_test(x_path, y_path, test_args);
    if (*conn) return cmd_connectome(dir, conn_args);
    if (*den) return cmd_denoise(den_path, den_args);
    if (*sel) return cmd_select_beta(sel_path, sel_args);
    if (*simc) return cmd_simulate(sim, sim_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::UsageError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
