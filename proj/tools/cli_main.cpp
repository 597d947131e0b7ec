// Batch front-end: identity verification, ellipticity audits, solves,
// decompositions, kernel and Korn-constant measurements. Exit codes:
// 0 pass/success, 1 mathematical FAIL, 2 usage error, 3 numeric/resource
// error. Reports are byte-stable for a fixed seed and version.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "dfc/json_io.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

void emit(const dfc::Json& report, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << dfc::dump_deterministic(report);
  } else {
    dfc::write_report(report, out_path);
  }
}

dfc::Json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw CLI::ValidationError("input", "cannot open file: " + path);
  dfc::Json j;
  is >> j;
  return j;
}

dfc::GridField sampled_rhs(const dfc::Json& problem, const dfc::FlatDomain& dom) {
  auto field = dfc::field_from_json(problem.at("rhs"));
  field.domain = dom;
  return dfc::sample(field, dom.grid);
}

int run_verify_identities(int d_max, std::uint64_t seed, int fields, int degree_cap,
                          const std::string& out) {
  auto rep = dfc::verify_identities(seed, 2, d_max, degree_cap, fields);
  auto j = dfc::identity_report_to_json(rep);
  j["seed"] = seed;
  emit(j, out);
  return rep.all_pass() ? kExitPass : kExitFail;
}

int run_check_ellipticity(int d, int k, int m, const std::string& set_name, int samples,
                          std::uint64_t seed, double threshold, const std::string& out) {
  std::vector<dfc::BoundarySet> sets;
  if (set_name == "all") {
    sets = {dfc::BoundarySet::TT, dfc::BoundarySet::NN, dfc::BoundarySet::NT,
            dfc::BoundarySet::TN};
    if (k == m) {
      sets.push_back(dfc::BoundarySet::STT);
      sets.push_back(dfc::BoundarySet::SNN);
    }
  } else if (set_name == "TT") {
    sets = {dfc::BoundarySet::TT};
  } else if (set_name == "NN") {
    sets = {dfc::BoundarySet::NN};
  } else if (set_name == "NT") {
    sets = {dfc::BoundarySet::NT};
  } else if (set_name == "TN") {
    sets = {dfc::BoundarySet::TN};
  } else if (set_name == "STT") {
    sets = {dfc::BoundarySet::STT};
  } else if (set_name == "SNN") {
    sets = {dfc::BoundarySet::SNN};
  } else {
    throw CLI::ValidationError("--set", "unknown boundary set: " + set_name);
  }
  dfc::Json reports = dfc::Json::array();
  bool all_pass = true;
  for (auto set : sets) {
    auto rep = dfc::check_regular_ellipticity(d, k, m, set, samples, seed, threshold);
    all_pass = all_pass && rep.pass;
    reports.push_back(dfc::ellipticity_report_to_json(rep));
  }
  dfc::Json j;
  j["schema"] = "1";
  j["seed"] = seed;
  j["pass"] = all_pass;
  j["reports"] = reports;
  emit(j, out);
  return all_pass ? kExitPass : kExitFail;
}

int run_solve(const std::string& problem_path, const std::string& out) {
  auto problem = load_json(problem_path);
  auto dom = dfc::domain_from_json(problem.at("domain"));
  int k = problem.at("k").get<int>();
  int m = problem.at("m").get<int>();
  auto family = dfc::family_from_string(problem.at("family").get<std::string>());
  auto ops = dfc::assemble(dom, k, m);
  auto chi = sampled_rhs(problem, dom);
  dfc::SolveOptions opts;
  opts.tol = problem.value("tol", 1e-8);
  opts.max_iterations = problem.value("max_iterations", 500);
  if (problem.contains("bc")) {
    auto bc_field = dfc::field_from_json(problem.at("bc"));
    bc_field.domain = dom;
    opts.bc = dfc::sample(bc_field, dom.grid);
  }
  auto res = dfc::solve(ops, family, chi, opts);
  auto j = dfc::solve_result_to_json(res);
  j["family"] = dfc::family_name(family);
  emit(j, out);
  return kExitPass;
}

int run_decompose(const std::string& problem_path, const std::string& out) {
  auto problem = load_json(problem_path);
  auto dom = dfc::domain_from_json(problem.at("domain"));
  auto psi = sampled_rhs(problem, dom);
  double tol = problem.value("tol", 1e-8);
  auto dec = dfc::decompose(dom, psi, tol);
  emit(dfc::decomposition_to_json(dec), out);
  return kExitPass;
}

int run_kernel(int d, int k, int m, const std::string& family_name, int grid, int grid2,
               const std::string& out) {
  auto family = dfc::family_from_string(family_name);
  auto dom = dfc::FlatDomain::unit_box(d, std::vector<int>(d, grid));
  auto ops = dfc::assemble(dom, k, m);
  auto info = dfc::kernel_dimension(ops, family);
  dfc::Json j;
  j["schema"] = "1";
  j["family"] = family_name;
  j["grid"] = grid;
  j["dim"] = info.dim;
  j["conclusive"] = info.conclusive;
  j["threshold"] = info.threshold;
  j["median_nonzero"] = info.median_nonzero;
  j["small_eigenvalues"] = info.small_eigenvalues;
  if (grid2 > 0) {
    auto dom2 = dfc::FlatDomain::unit_box(d, std::vector<int>(d, grid2));
    auto ops2 = dfc::assemble(dom2, k, m);
    auto info2 = dfc::kernel_dimension(ops2, family, true, info.threshold);
    j["grid_refined"] = grid2;
    j["dim_refined"] = info2.dim;
    j["stable"] = info.conclusive && info2.conclusive && info.dim == info2.dim;
  }
  emit(j, out);
  if (!info.conclusive) return kExitNumeric;
  return kExitPass;
}

int run_korn(int d, int k, int m, const std::string& family_name, int grid, int samples,
             std::uint64_t seed, const std::string& out) {
  auto family = dfc::family_from_string(family_name);
  auto dom = dfc::FlatDomain::unit_box(d, std::vector<int>(d, grid));
  auto ops = dfc::assemble(dom, k, m);
  auto res = dfc::korn_constant(ops, family, samples, seed);
  dfc::Json j;
  j["schema"] = "1";
  j["family"] = family_name;
  j["grid"] = grid;
  j["samples"] = res.samples;
  j["kernel_dim"] = res.kernel_dim;
  j["constant"] = res.constant;
  j["seed"] = seed;
  emit(j, out);
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"double-form calculus: identity verification, ellipticity audits, "
               "bilaplacian solves and decompositions"};
  app.require_subcommand(1);

  std::string out;
  app.add_option("--out", out, "report output path (stdout if omitted)");

  // verify-identities
  auto* vi = app.add_subcommand("verify-identities", "exact identity lattice check");
  int vi_d = 3, vi_fields = 20, vi_cap = 3;
  std::uint64_t vi_seed = 0;
  vi->add_option("--d", vi_d, "largest fiber dimension (runs d = 2..d)");
  vi->add_option("--seed", vi_seed, "PRNG seed")->required();
  vi->add_option("--fields", vi_fields, "random fields per identity and (k,m)");
  vi->add_option("--degree-cap", vi_cap, "polynomial degree cap");

  // check-ellipticity
  auto* ce = app.add_subcommand("check-ellipticity", "Lopatinskij-Shapiro audit");
  int ce_d = 3, ce_k = 1, ce_m = 1, ce_samples = 64;
  std::uint64_t ce_seed = 0;
  double ce_threshold = 1e-8;
  std::string ce_set = "all";
  ce->add_option("--d", ce_d)->required();
  ce->add_option("--k", ce_k)->required();
  ce->add_option("--m", ce_m)->required();
  ce->add_option("--set", ce_set, "TT|NN|NT|TN|STT|SNN|all");
  ce->add_option("--samples", ce_samples, "unit tangential covector samples");
  ce->add_option("--seed", ce_seed, "PRNG seed")->required();
  ce->add_option("--threshold", ce_threshold, "minimum singular value to PASS");

  // solve
  auto* sv = app.add_subcommand("solve", "constrained bilaplacian solve");
  std::string sv_problem;
  sv->add_option("problem", sv_problem, "problem JSON path")->required();

  // decompose
  auto* dc = app.add_subcommand("decompose", "five-way orthogonal decomposition");
  std::string dc_problem;
  dc->add_option("problem", dc_problem, "problem JSON path (rhs field is psi)")
      ->required();

  // kernel
  auto* kn = app.add_subcommand("kernel", "discrete biharmonic module dimension");
  int kn_d = 2, kn_k = 0, kn_m = 0, kn_grid = 24, kn_grid2 = 0;
  std::string kn_family = "NN";
  kn->add_option("--d", kn_d);
  kn->add_option("--k", kn_k);
  kn->add_option("--m", kn_m);
  kn->add_option("--family", kn_family, "TT|NN|NT|TN")->required();
  kn->add_option("--grid", kn_grid, "nodes per axis");
  kn->add_option("--grid2", kn_grid2, "refined grid for stability check");

  // korn
  auto* ko = app.add_subcommand("korn", "empirical Korn-type constant");
  int ko_d = 2, ko_k = 0, ko_m = 0, ko_grid = 24, ko_samples = 16;
  std::uint64_t ko_seed = 0;
  std::string ko_family = "TT";
  ko->add_option("--d", ko_d);
  ko->add_option("--k", ko_k);
  ko->add_option("--m", ko_m);
  ko->add_option("--family", ko_family, "TT|NN|NT|TN")->required();
  ko->add_option("--grid", ko_grid);
  ko->add_option("--samples", ko_samples);
  ko->add_option("--seed", ko_seed, "PRNG seed")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    if (code == 0) return kExitPass;  // --help
    std::fprintf(stderr, "usage error\n");
    return kExitUsage;
  }

  try {
    if (vi->parsed())
      return run_verify_identities(vi_d, vi_seed, vi_fields, vi_cap, out);
    if (ce->parsed())
      return run_check_ellipticity(ce_d, ce_k, ce_m, ce_set, ce_samples, ce_seed,
                                   ce_threshold, out);
    if (sv->parsed()) return run_solve(sv_problem, out);
    if (dc->parsed()) return run_decompose(dc_problem, out);
    if (kn->parsed()) return run_kernel(kn_d, kn_k, kn_m, kn_family, kn_grid, kn_grid2, out);
    if (ko->parsed())
      return run_korn(ko_d, ko_k, ko_m, ko_family, ko_grid, ko_samples, ko_seed, out);
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const dfc::ResourceError& e) {
    std::fprintf(stderr, "resource error: %s\n", e.what());
    return kExitNumeric;
  } catch (const dfc::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kExitNumeric;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "usage error: malformed input: %s\n", e.what());
    return kExitUsage;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  }
  std::fprintf(stderr, "usage error\n");
  return kExitUsage;
}
