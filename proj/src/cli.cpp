#include "sphgrad/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "sphgrad/density.hpp"
#include "sphgrad/inference.hpp"
#include "sphgrad/io.hpp"
#include "sphgrad/sampler.hpp"
#include "sphgrad/verify.hpp"

namespace sphgrad::cli {

namespace {

struct FitArgs {
  std::string data;
  std::string model;
  std::string out;
  double tol = FitOptions{}.tolerance;
  int max_iter = FitOptions{}.max_iterations;
  double delta = FitOptions{}.delta;
};

struct SampleArgs {
  std::string model;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "xyz";
  double tol = SolverOptions{}.gradient_tol;
  int max_iter = SolverOptions{}.max_iterations;
};

struct GridArgs {
  std::string model;
  int resolution = 90;
  std::string out;
};

struct CheckArgs {
  std::vector<std::string> models;
  std::string suite = "all";
  std::uint64_t seed = 0;
  std::string out;
  int nodes = kDefaultMeshNodes;
  int scan = 200;
  int points = 20;
  int partners = 3;
};

struct AicArgs {
  std::vector<std::string> reports;
  std::string out;
};

Json point_json(const SpherePoint& x) {
  Json a = Json::array();
  for (int i = 0; i < x.ambient_dim(); ++i) a.push_back(x[i]);
  return a;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

int cmd_fit(const FitArgs& a, int threads, std::ostream& out, std::ostream& err) {
  const ModelFile file = load_model_file(a.model);
  file.model.check_shape();
  const auto data = load_points_csv(a.data);
  if (data.empty()) throw EmptyData();
  if (file.model.n != 2) throw DimensionError("the command-line tool works on S^2");
  FitOptions opts;
  opts.tolerance = a.tol;
  opts.max_iterations = a.max_iter;
  opts.delta = a.delta;
  opts.threads = threads;
  const FitResult fit = mle_fit(file.model, data, opts);
  emit(a.out, fit_report_json(fit, file.model, file.raw).dump(2) + "\n", out);
  if (!fit.converged) {
    err << "warning: fit did not converge after " << fit.iterations << " iterations (gap "
        << fit.gap << ")\n";
    return kNotConverged;
  }
  return kOk;
}

int cmd_sample(const SampleArgs& a, int threads, std::ostream& out) {
  const ModelFile file = load_model_file(a.model);
  file.validate();
  if (file.potential.n != 2) throw DimensionError("the command-line tool works on S^2");
  if (a.format != "xyz" && a.format != "lonlat") throw ParseError("--format must be xyz or lonlat");
  SolverOptions opts;
  opts.gradient_tol = a.tol;
  opts.max_iterations = a.max_iter;
  const auto points = sample_batch(file.potential, a.count, a.seed, opts, threads);
  std::ostringstream csv;
  write_points_csv(points, a.format == "xyz" ? PointFormat::xyz : PointFormat::lonlat, csv);
  emit(a.out, csv.str(), out);
  return kOk;
}

int cmd_density_grid(const GridArgs& a, int threads, std::ostream& out) {
  const ModelFile file = load_model_file(a.model);
  file.validate();
  const DensityGrid grid = density_grid(file.potential, a.resolution, threads);
  std::ostringstream csv;
  write_density_grid_csv(grid, csv);
  emit(a.out, csv.str(), out);
  return kOk;
}

// Away from anchors and their antipodes, where the factored form is checked.
bool clear_of_anchors(const PotentialSpec& spec, const SpherePoint& x) {
  for (const auto& c : spec.components) {
    const double s = (c.anchor.coords() - x.coords().dot(c.anchor.coords()) * x.coords()).norm();
    if (s <= 1e-3) return false;
  }
  return true;
}

Json run_c_convexity(const std::vector<ModelFile>& files, const CheckArgs& a, int threads,
                     bool& pass) {
  Json checks = Json::array();
  auto run_one = [&](const PotentialSpec& spec, const std::string& what) {
    const auto r = check_c_convexity(spec, a.nodes, kDiscretizationConstant, threads);
    pass = pass && r.pass;
    Json entry = {{"target", what},       {"pass", r.pass},         {"deviation", r.deviation},
                  {"threshold", r.threshold}, {"spacing", r.spacing}, {"nodes", r.nodes}};
    if (!r.pass) entry["spec"] = potential_to_json(spec);
    checks.push_back(entry);
  };
  for (std::size_t i = 0; i < files.size(); ++i) {
    run_one(files[i].potential, "model " + std::to_string(i));
  }
  for (std::size_t i = 0; i + 1 < files.size(); ++i) {
    run_one(blend(files[i].potential, files[i + 1].potential, 0.5),
            "midpoint of models " + std::to_string(i) + " and " + std::to_string(i + 1));
  }
  return checks;
}

Json run_jacobian(const std::vector<ModelFile>& files, const CheckArgs& a, bool& pass) {
  std::vector<std::pair<PotentialSpec, PotentialSpec>> pairs;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < files.size(); ++i) {
    for (std::size_t j = i + 1; j < files.size(); ++j) {
      pairs.emplace_back(files[i].potential, files[j].potential);
      names.push_back("models " + std::to_string(i) + "," + std::to_string(j));
    }
  }
  Rng partner_rng = derived_stream(a.seed, 1);
  for (std::size_t i = 0; i < files.size(); ++i) {
    for (int p = 0; p < a.partners; ++p) {
      pairs.emplace_back(files[i].potential, random_admissible_spec(partner_rng, files[i].potential.n));
      names.push_back("model " + std::to_string(i) + " + random partner " + std::to_string(p));
    }
  }
  const auto t_grid = uniform_t_grid(20);
  Json checks = Json::array();
  Rng point_rng = derived_stream(a.seed, 2);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& [s0, s1] = pairs[k];
    Json entry = {{"target", names[k]}};
    double min_margin = std::numeric_limits<double>::infinity();
    double min_ratio = min_margin;
    double max_sd = -min_margin;
    double max_mismatch = 0.0;
    double max_sigma_sd = -std::numeric_limits<double>::infinity();
    bool ok = true;
    Json violations = Json::array();
    for (int q = 0; q < a.points; ++q) {
      const SpherePoint x = uniform_sample(s0.n, point_rng);
      const auto r = check_jacobian_inequality(s0, s1, x, t_grid);
      const auto ls = check_log_sigma_concavity(s0, s1, x, t_grid);
      min_margin = std::min(min_margin, r.min_margin);
      min_ratio = std::min(min_ratio, r.min_ratio_margin);
      max_sd = std::max(max_sd, r.max_second_difference);
      max_sigma_sd = std::max(max_sigma_sd, ls.max_second_difference);
      bool here = r.pass && ls.pass;
      for (const auto* spec : {&s0, &s1}) {
        if (!clear_of_anchors(*spec, x)) continue;
        const auto f = check_factored_jacobian(*spec, x);
        max_mismatch = std::max(max_mismatch, f.relative_mismatch);
        here = here && f.pass;
      }
      if (!here) {
        violations.push_back({{"x", point_json(x)},
                              {"point_index", q},
                              {"min_margin", r.min_margin},
                              {"worst_t", r.worst_t},
                              {"spec0", potential_to_json(s0)},
                              {"spec1", potential_to_json(s1)}});
      }
      ok = ok && here;
    }
    entry["pass"] = ok;
    entry["min_margin"] = min_margin;
    entry["min_ratio_margin"] = min_ratio;
    entry["max_log_jacobian_second_difference"] = max_sd;
    entry["max_log_sigma_second_difference"] = max_sigma_sd;
    entry["max_factored_mismatch"] = max_mismatch;
    entry["points"] = a.points;
    if (!violations.empty()) entry["violations"] = violations;
    checks.push_back(entry);
    pass = pass && ok;
  }
  return checks;
}

Json run_sliding_mountain(const CheckArgs& a, bool& pass) {
  Rng rng = derived_stream(a.seed, 3);
  const auto t_grid = uniform_t_grid(20);
  double worst = std::numeric_limits<double>::infinity();
  Json violations = Json::array();
  int tested = 0;
  while (tested < a.scan) {
    const SpherePoint x = uniform_sample(2, rng);
    const SpherePoint z = uniform_sample(2, rng);
    const SpherePoint y0 = uniform_sample(2, rng);
    const SpherePoint y1 = uniform_sample(2, rng);
    if (geodesic_distance(y0, z).radians() > 3.1 || geodesic_distance(y1, z).radians() > 3.1) continue;
    const auto r = check_sliding_mountain(x, z, y0, y1, t_grid);
    worst = std::min(worst, r.min_second_difference);
    if (!r.pass) {
      violations.push_back({{"index", tested}, {"x", point_json(x)}, {"z", point_json(z)},
                            {"y0", point_json(y0)}, {"y1", point_json(y1)},
                            {"min_second_difference", r.min_second_difference}});
    }
    ++tested;
  }
  const bool ok = violations.empty();
  pass = pass && ok;
  Json entry = {{"target", "random quadruplets"}, {"pass", ok}, {"count", tested},
                {"min_second_difference", worst}};
  if (!ok) entry["violations"] = violations;
  return Json::array({entry});
}

int cmd_check(const CheckArgs& a, int threads, std::ostream& out, std::ostream& err) {
  static const std::vector<std::string> suites = {"c-convexity", "jacobian", "sliding-mountain", "all"};
  if (std::find(suites.begin(), suites.end(), a.suite) == suites.end()) {
    throw ParseError("--suite must be one of c-convexity, jacobian, sliding-mountain, all");
  }
  std::vector<ModelFile> files;
  for (const auto& path : a.models) {
    files.push_back(load_model_file(path));
    files.back().validate();
    if (files.back().potential.n != 2) throw DimensionError("checks run on S^2 only");
  }
  Json report = {{"seed", a.seed}, {"suite", a.suite}, {"models", a.models}};
  Json results = Json::object();
  bool pass = true;
  const bool all = a.suite == "all";
  if (all || a.suite == "c-convexity") results["c-convexity"] = run_c_convexity(files, a, threads, pass);
  if (all || a.suite == "jacobian") results["jacobian"] = run_jacobian(files, a, pass);
  if (all || a.suite == "sliding-mountain") results["sliding-mountain"] = run_sliding_mountain(a, pass);
  report["results"] = results;
  report["pass"] = pass;
  emit(a.out, report.dump(2) + "\n", out);
  if (!pass) {
    err << "check violation: see report\n";
    return kCheckViolation;
  }
  return kOk;
}

int cmd_aic(const AicArgs& a, std::ostream& out) {
  std::vector<FitResult> fits;
  for (const auto& path : a.reports) {
    fits.push_back(parse_fit_report(read_json_file(path)));
    if (fits.back().label.empty()) fits.back().label = path;
  }
  const auto order = compare_models(fits);
  Json ranking = Json::array();
  std::ostringstream table;
  table << std::left << std::setw(6) << "rank" << std::setw(24) << "model" << std::right
        << std::setw(14) << "aic" << std::setw(6) << "dim" << std::setw(14) << "loglik"
        << "  report\n";
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto& f = fits[order[r]];
    char aic_buf[32];
    char ll_buf[32];
    std::snprintf(aic_buf, sizeof aic_buf, "%.4f", f.aic);
    std::snprintf(ll_buf, sizeof ll_buf, "%.4f", f.loglik);
    table << std::left << std::setw(6) << r + 1 << std::setw(24) << f.label << std::right
          << std::setw(14) << aic_buf << std::setw(6) << f.dim << std::setw(14) << ll_buf << "  "
          << a.reports[order[r]] << "\n";
    ranking.push_back({{"rank", r + 1}, {"label", f.label}, {"aic", f.aic}, {"dim", f.dim},
                       {"loglik", f.loglik}, {"report", a.reports[order[r]]}});
  }
  out << table.str();
  const Json doc = {{"data_fingerprint", fits.front().data_fingerprint}, {"ranking", ranking}};
  if (!a.out.empty()) write_text_file(a.out, doc.dump(2) + "\n");
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spherical gradient model: sampling, density grids, fitting and checks"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = all cores)");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Maximum-likelihood fit of a model to data");
  fit_cmd->add_option("--data", fit.data, "Point CSV (x,y,z or lon_deg,lat_deg)")->required();
  fit_cmd->add_option("--model", fit.model, "Model spec JSON")->required();
  fit_cmd->add_option("--out", fit.out, "Fit report JSON (default: stdout)");
  fit_cmd->add_option("--tol", fit.tol, "Duality-gap tolerance");
  fit_cmd->add_option("--max-iter", fit.max_iter, "Iteration cap");
  fit_cmd->add_option("--delta", fit.delta, "Interior margin of the constraint set");

  SampleArgs smp;
  auto* sample_cmd = app.add_subcommand("sample", "Exact sampling from a model");
  sample_cmd->add_option("--model", smp.model, "Model spec JSON")->required();
  sample_cmd->add_option("-n,--count", smp.count, "Number of samples")->required();
  sample_cmd->add_option("--seed", smp.seed, "Random seed");
  sample_cmd->add_option("--out", smp.out, "Output CSV (default: stdout)");
  sample_cmd->add_option("--format", smp.format, "xyz or lonlat");
  sample_cmd->add_option("--tol", smp.tol, "Solver gradient tolerance");
  sample_cmd->add_option("--max-iter", smp.max_iter, "Solver iteration cap");

  GridArgs grid;
  auto* grid_cmd = app.add_subcommand("density-grid", "Density on a lon/lat grid");
  grid_cmd->add_option("--model", grid.model, "Model spec JSON")->required();
  grid_cmd->add_option("--resolution", grid.resolution, "Latitude intervals (lon gets twice as many)");
  grid_cmd->add_option("--out", grid.out, "Output CSV (default: stdout)");

  CheckArgs chk;
  auto* check_cmd = app.add_subcommand("check", "Numerical checks of c-convexity and Jacobian inequalities");
  check_cmd->add_option("--model", chk.models, "Model spec JSON (repeatable)");
  check_cmd->add_option("--suite", chk.suite, "c-convexity | jacobian | sliding-mountain | all");
  check_cmd->add_option("--seed", chk.seed, "Random seed");
  check_cmd->add_option("--out", chk.out, "Check report JSON (default: stdout)");
  check_cmd->add_option("--resolution", chk.nodes, "Mesh nodes for the c-transform check");
  check_cmd->add_option("--scan", chk.scan, "Random quadruplets for the sliding-mountain check");
  check_cmd->add_option("--points", chk.points, "Random points per potential pair");
  check_cmd->add_option("--partners", chk.partners, "Random partner potentials per model");

  AicArgs aic_args;
  auto* aic_cmd = app.add_subcommand("aic", "Rank fit reports by AIC");
  aic_cmd->add_option("reports", aic_args.reports, "Fit report JSON files")->required();
  aic_cmd->add_option("--out", aic_args.out, "Ranking JSON");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit, threads, out, err);
    if (*sample_cmd) return cmd_sample(smp, threads, out);
    if (*grid_cmd) return cmd_density_grid(grid, threads, out);
    if (*check_cmd) return cmd_check(chk, threads, out, err);
    if (*aic_cmd) return cmd_aic(aic_args, out);
  } catch (const SolverError& e) {
    err << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  } catch (const EmptyData& e) {
    err << "error: EmptyData: " << e.what() << "\n";
    return kInputError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}

}  // namespace sphgrad::cli
