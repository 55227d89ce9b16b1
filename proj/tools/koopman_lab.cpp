// koopman-lab: batch front end for the operator, generator, model and
// ergodicity checkers. Input is a JSON system description; output is a
// plain-text summary on stdout plus an optional machine-readable JSON
// report. Exit codes: 0 all checks passed, 1 a mathematical check failed
// (witness in the report), 2 input error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "koopman/acceptance.hpp"
#include "koopman/json_io.hpp"

using namespace koopman;

namespace {

struct CommandOutput {
  Report report = Report::object();
  int exit_code = 0;
  std::string table;  // human-readable summary
};

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string mode_str(const std::vector<int>& k) {
  std::string s = "(";
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(k[i]);
  }
  return s + ")";
}

RotationFlow build_rotation(const RotationSpec& spec) {
  return rotation_model(std::span<const double>(spec.alpha.data(), spec.alpha.size()),
                        spec.truncation);
}

// ---------------------------------------------------------------------------
// check-operator
// ---------------------------------------------------------------------------

CommandOutput cmd_check_operator(const SystemDescription& sys) {
  if (!sys.map && !sys.matrix)
    jsonio_detail::fail("$", "check-operator needs a map or matrix payload");

  MarkovOperator t = sys.map ? koopman_of_map(resolve_space(sys, sys.map->size()), *sys.map)
                             : MarkovOperator{*sys.matrix, resolve_space(sys, sys.matrix->dim())};

  CommandOutput out;
  OperatorVerdict v = classify_operator(t, sys.options.tol);
  out.report.set("command", "check-operator");
  out.report.set("tol", sys.options.tol);
  out.report.set("space", space_report(t.space));
  out.report.set("classification", operator_verdict_report(v));

  std::ostringstream tab;
  tab << "check-operator (n = " << t.dim() << ")\n"
      << "  positive            " << (v.positive ? "yes" : "no") << "\n"
      << "  row stochastic      " << (v.row_stochastic ? "yes" : "no") << "\n"
      << "  measure preserving  " << (v.measure_preserving ? "yes" : "no") << "\n"
      << "  lattice             " << (v.lattice ? "yes" : "no") << "\n"
      << "  multiplicative      " << (v.multiplicative ? "yes" : "no") << "\n";

  if (v.markov_lattice()) {
    MeasureAlgebraHomomorphism hom = extract_homomorphism(t, sys.options.tol);
    Report h = Report::object();
    h.set("atom_map", int_vector_report(hom.phi.atom_map));
    Report singletons = Report::array();
    for (std::size_t i = 0; i < t.dim(); ++i) {
      MeasureAlgebraSet image = hom.apply(MeasureAlgebraSet::singleton(t.dim(), i));
      Report atoms = Report::array();
      for (std::size_t x = 0; x < t.dim(); ++x)
        if (image.member[x]) atoms.push_back(static_cast<std::int64_t>(x));
      singletons.push_back(std::move(atoms));
    }
    h.set("singleton_preimages", std::move(singletons));
    out.report.set("homomorphism", std::move(h));

    SemiflowMap phi = map_from_operator(t, sys.options.tol);
    out.report.set("map", int_vector_report(phi.atom_map));

    IrreducibilityReport irr = irreducibility_check(t, sys.options.tol);
    Report erg = Report::object();
    try {
      auto sets = invariant_sets(phi);
      erg.set("invariant_set_count", sets.size());
      erg.set("ergodic", sets.size() == 2);
      tab << "  ergodic             " << (sets.size() == 2 ? "yes" : "no") << "\n";
    } catch (const Error& e) {
      if (e.code() != errc::budget_exceeded) throw;
      erg.set("invariant_set_count", nullptr);
      erg.set("ergodic", irr.irreducible);  // equivalent for Koopman operators
    }
    erg.set("irreducible", irr.irreducible);
    if (irr.witness_support) {
      Report wit = Report::array();
      for (std::size_t x = 0; x < irr.witness_support->size(); ++x)
        if (irr.witness_support->member[x]) wit.push_back(static_cast<std::int64_t>(x));
      erg.set("witness_ideal_support", std::move(wit));
    }
    out.report.set("ergodicity", std::move(erg));
  }

  out.report.set("pass", v.markov_lattice());
  out.exit_code = v.markov_lattice() ? 0 : 1;
  tab << "  verdict             " << (v.markov_lattice() ? "Markov lattice" : "FAILED") << "\n";
  out.table = tab.str();
  return out;
}

// ---------------------------------------------------------------------------
// check-generator
// ---------------------------------------------------------------------------

CommandOutput cmd_check_generator(const SystemDescription& sys) {
  CommandOutput out;
  out.report.set("command", "check-generator");
  out.report.set("tol", sys.options.tol);

  if (sys.generator) {
    GeneratorMatrix a{*sys.generator, resolve_space(sys, sys.generator->dim())};
    GeneratorVerdict v = classify_generator(a, sys.options.tol);
    out.report.set("space", space_report(a.space));
    out.report.set("generator_classification", generator_verdict_report(v));
    bool pass = v.kato.pass && v.derivation.pass == v.kato.pass;
    out.report.set("pass", pass);
    out.exit_code = pass ? 0 : 1;

    std::ostringstream tab;
    tab << "check-generator (n = " << a.dim() << ")\n"
        << "  q = A1 bounded      yes\n"
        << "  delta derivation    " << (v.derivation.pass ? "yes" : "no") << "\n"
        << "  A'mu = 0            " << (v.fixes_measure ? "yes" : "no") << "\n"
        << "  kato equality       " << (v.kato.pass ? "yes" : "no") << "\n"
        << "  markov generator    " << (v.markov_generator() ? "yes" : "no") << "\n"
        << "  verdict             " << (pass ? "lattice semigroup generator" : "FAILED") << "\n";
    out.table = tab.str();
    return out;
  }

  if (sys.rotation) {
    RotationFlow flow = build_rotation(*sys.rotation);
    AdditivityReport add = additivity_derivation_check(flow.model, flow.generator, sys.options.tol);
    BoundaryGroupReport grp = boundary_group_check(flow.model, flow.generator, sys.options.tol);
    out.report.set("modes", flow.model.mode_count());
    out.report.set("quantified_over", "pairs k, l with k, l, k+l inside the truncation window");
    out.report.set("additivity", additivity_report_json(add));
    out.report.set("boundary_group", boundary_group_report_json(grp));
    bool pass = add.pass && grp.pass;
    out.report.set("pass", pass);
    out.exit_code = pass ? 0 : 1;

    std::ostringstream tab;
    tab << "check-generator (rotation, " << flow.model.mode_count() << " modes)\n"
        << "  eigenvalue additivity  " << (add.pass ? "yes" : "no") << "\n"
        << "  boundary group         " << (grp.pass ? "yes" : "no") << "\n";
    out.table = tab.str();
    return out;
  }

  if (sys.perturbation && sys.perturbation->delta_matrix) {
    // generator given pre-decomposed as delta + q
    const auto& p = *sys.perturbation;
    std::size_t n = p.delta_matrix->dim();
    MeasurableFunction q = resolve_function(p.q_raw, n);
    ComplexMatrix full = *p.delta_matrix;
    for (std::size_t i = 0; i < n; ++i) full(i, i) += q[i];
    SystemDescription combined = sys;
    combined.perturbation.reset();
    combined.generator = std::move(full);
    return cmd_check_generator(combined);
  }

  jsonio_detail::fail("$", "check-generator needs a generator, rotation or delta+q payload");
}

// ---------------------------------------------------------------------------
// evolve
// ---------------------------------------------------------------------------

CommandOutput cmd_evolve(const SystemDescription& sys) {
  CommandOutput out;
  out.report.set("command", "evolve");
  Report results = Report::array();
  std::ostringstream tab;

  if (sys.rotation) {
    RotationFlow flow = build_rotation(*sys.rotation);
    FourierFunction f = resolve_fourier(sys.f_raw, flow.model, "f");
    for (double t : sys.options.t_grid) {
      FourierFunction g = evolve_spectral(flow.generator, t, f);
      Report e = Report::object();
      e.set("t", t);
      e.set("f", fourier_report(flow.model, g));
      results.push_back(std::move(e));
    }
    tab << "evolve (rotation, " << flow.model.mode_count() << " modes, "
        << sys.options.t_grid.size() << " times)\n";
  } else if (sys.generator) {
    GeneratorMatrix a{*sys.generator, resolve_space(sys, sys.generator->dim())};
    MeasurableFunction f = resolve_function(sys.f_raw, a.dim());
    for (double t : sys.options.t_grid) {
      Report e = Report::object();
      e.set("t", t);
      e.set("f", function_report(expm_evolve(a, t, f)));
      results.push_back(std::move(e));
    }
    tab << "evolve (generator, n = " << a.dim() << ", " << sys.options.t_grid.size()
        << " times)\n";
  } else if (sys.map || sys.matrix) {
    MarkovOperator t = sys.map ? koopman_of_map(resolve_space(sys, sys.map->size()), *sys.map)
                               : MarkovOperator{*sys.matrix, resolve_space(sys, sys.matrix->dim())};
    MeasurableFunction f = resolve_function(sys.f_raw, t.dim());
    for (double s : sys.options.t_grid) {
      MeasurableFunction g = f;
      for (int k = 0; k < static_cast<int>(s); ++k) g = t.apply(g);
      Report e = Report::object();
      e.set("t", s);
      e.set("f", function_report(g));
      results.push_back(std::move(e));
    }
    tab << "evolve (operator iterates, n = " << t.dim() << ")\n";
  } else {
    jsonio_detail::fail("$", "evolve needs a rotation, generator, map or matrix payload");
  }

  out.report.set("results", std::move(results));
  out.report.set("pass", true);
  out.table = tab.str();
  return out;
}

// ---------------------------------------------------------------------------
// perturb
// ---------------------------------------------------------------------------

CommandOutput cmd_perturb(const SystemDescription& sys) {
  if (!sys.perturbation)
    jsonio_detail::fail("$", "perturb needs a perturbation payload");
  const auto& p = *sys.perturbation;

  CommandOutput out;
  out.report.set("command", "perturb");
  out.report.set("quad_steps", static_cast<std::int64_t>(sys.options.quad_steps));
  PerturbationReport rep;

  if (p.delta_rotation) {
    RotationFlow flow = build_rotation(*p.delta_rotation);
    FourierFunction q = resolve_fourier(p.q_raw, flow.model, "perturbation.q");
    FourierFunction f = resolve_fourier(sys.f_raw, flow.model, "f");
    rep = verify_perturbation(flow.model, flow.generator, q, sys.options.t_grid, f,
                              sys.options.tol, sys.options.quad_steps, sys.options.oversample);
  } else {
    GeneratorMatrix delta{*p.delta_matrix, resolve_space(sys, p.delta_matrix->dim())};
    MeasurableFunction q(delta.dim());
    if (p.q_raw.is_null()) jsonio_detail::fail("perturbation.q", "missing");
    q = resolve_function(p.q_raw, delta.dim());
    MeasurableFunction f = resolve_function(sys.f_raw, delta.dim());
    rep = verify_perturbation(PerturbationSpec{delta, q}, sys.options.t_grid, f, sys.options.tol,
                              sys.options.quad_steps);
  }

  out.report.set("verification", perturbation_report_json(rep, sys.options.tol));
  out.report.set("pass", rep.pass);
  out.exit_code = rep.pass ? 0 : 1;

  std::ostringstream tab;
  tab << "perturb: closed formula vs matrix exponential\n";
  for (const auto& [t, res] : rep.per_t)
    tab << "  t = " << fmt_g(t) << "   residual = " << fmt_g(res) << "\n";
  tab << "  max residual " << fmt_g(rep.max_residual) << (rep.pass ? "  (pass)" : "  (FAIL)")
      << "\n";
  out.table = tab.str();
  return out;
}

// ---------------------------------------------------------------------------
// model
// ---------------------------------------------------------------------------

CommandOutput cmd_model(const SystemDescription& sys) {
  if (!sys.map && !sys.matrix)
    jsonio_detail::fail("$", "model needs a map or matrix payload");
  MarkovOperator t = sys.map ? koopman_of_map(resolve_space(sys, sys.map->size()), *sys.map)
                             : MarkovOperator{*sys.matrix, resolve_space(sys, sys.matrix->dim())};

  CommandOutput out;
  out.report.set("command", "model");
  try {
    TopologicalModel model = build_finite_model(t.space, t, sys.options.tol);
    ModelResiduals res = verify_model_isomorphism(model, t);
    out.report.set("model", model_report_json(model, res));
    out.report.set("pass", true);
    std::ostringstream tab;
    tab << "model: K has " << model.k_points.size() << " points, max residual "
        << fmt_g(res.max()) << "\n";
    out.table = tab.str();
  } catch (const Error& e) {
    if (e.code() != errc::not_markov_lattice) throw;
    out.report.set("error", Report::object()
                                .set("code", "NotMarkovLattice")
                                .set("classification",
                                     operator_verdict_report(classify_operator(t, sys.options.tol))));
    out.report.set("pass", false);
    out.exit_code = 1;
    out.table = "model: operator is not Markov lattice\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// ergodic-times
// ---------------------------------------------------------------------------

CommandOutput cmd_ergodic_times(const SystemDescription& sys) {
  if (!sys.rotation)
    jsonio_detail::fail("$", "ergodic-times needs a rotation payload");
  RotationFlow flow = build_rotation(*sys.rotation);
  SpectralReport rep =
      nonergodic_times(flow.model, sys.options.t_max, sys.options.max_denominator);
  BoundaryGroupReport grp = boundary_group_check(flow.model, flow.generator, sys.options.tol);

  CommandOutput out;
  out.report.set("command", "ergodic-times");
  Report alpha = Report::array();
  for (const auto& a : flow.model.frequencies()) alpha.push_back(a.value);
  out.report.set("alpha", std::move(alpha));
  Report alpha_exact = Report::array();
  for (const auto& a : flow.model.frequencies())
    alpha_exact.push_back(a.exact ? Report(a.exact->str()) : Report(nullptr));
  out.report.set("alpha_exact", std::move(alpha_exact));
  out.report.set("N", int_vector_report(flow.model.modes().half_widths()));
  out.report.set("quantified_over", "modes inside the truncation window");
  out.report.set("report", spectral_report_json(rep));
  out.report.set("boundary_group", boundary_group_report_json(grp));
  out.report.set("pass", grp.pass);
  out.exit_code = grp.pass ? 0 : 1;

  std::ostringstream tab;
  tab << "ergodic-times: flow fix dimension " << rep.flow_fix_dimension << " ("
      << (rep.flow_ergodic_within_truncation ? "ergodic" : "NOT ergodic")
      << " within truncation), " << rep.times.size() << " non-ergodic times in (0, "
      << fmt_g(rep.t_max) << "]\n";
  tab << "        t        dim fix(T(t))   mode\n";
  for (const auto& nt : rep.times) {
    char line[128];
    std::snprintf(line, sizeof(line), "  %12.9f   %8zu       %s", nt.t, nt.fix_dim,
                  mode_str(nt.mode).c_str());
    tab << line;
    if (nt.exact) tab << "   = " << nt.exact->str();
    tab << "\n";
  }
  out.table = tab.str();
  return out;
}

// ---------------------------------------------------------------------------
// suite
// ---------------------------------------------------------------------------

CommandOutput cmd_suite(std::uint64_t seed, std::size_t max_n) {
  AcceptanceConfig cfg;
  cfg.seed = seed;
  cfg.max_n = max_n;
  std::vector<CriterionResult> results = run_acceptance(cfg);

  CommandOutput out;
  out.report = acceptance_report_json(cfg, results);

  std::ostringstream tab;
  bool all = true;
  tab << "suite (seed " << seed << (max_n ? ", max_n " + std::to_string(max_n) : "") << ")\n";
  for (const auto& c : results) {
    all = all && c.pass;
    char line[160];
    std::snprintf(line, sizeof(line), "  [%s] %d. %-42s %s%s\n", c.pass ? "PASS" : "FAIL", c.id,
                  c.name.c_str(), c.detail.c_str(), c.partial ? " (partial)" : "");
    tab << line;
  }
  tab << (all ? "  all criteria passed\n" : "  SUITE FAILED\n");
  out.table = tab.str();
  out.exit_code = all ? 0 : 1;
  return out;
}

int emit(const CommandOutput& out, const std::string& json_path, bool quiet) {
  if (!quiet) std::cout << out.table;
  if (!json_path.empty()) {
    std::ofstream f(json_path, std::ios::binary);
    if (!f) {
      std::cerr << "error: cannot write " << json_path << "\n";
      return 2;
    }
    f << out.report.dump(2);
  }
  return out.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"koopman-lab: checkers for Markov lattice operators, their generators,\n"
               "topological models and rotation-flow ergodicity"};
  app.require_subcommand(1);

  std::string input_path, json_path;
  double tol_override = -1.0;
  bool quiet = false;
  std::uint64_t seed = 42;
  std::int64_t max_n = 0;

  auto add_io = [&](CLI::App* cmd, bool needs_input) {
    if (needs_input)
      cmd->add_option("input", input_path, "system description JSON file")->required();
    cmd->add_option("--json", json_path, "write the JSON report here");
    cmd->add_option("--tol", tol_override, "override options.tol");
    cmd->add_flag("--quiet", quiet, "suppress the stdout table");
  };

  CLI::App* c_op = app.add_subcommand("check-operator", "classify an operator");
  CLI::App* c_gen = app.add_subcommand("check-generator", "classify a generator");
  CLI::App* c_evolve = app.add_subcommand("evolve", "apply the semigroup to f");
  CLI::App* c_perturb = app.add_subcommand("perturb", "verify the perturbation formula");
  CLI::App* c_model = app.add_subcommand("model", "build the finite topological model");
  CLI::App* c_times = app.add_subcommand("ergodic-times", "enumerate non-ergodic times");
  CLI::App* c_suite = app.add_subcommand("suite", "run the acceptance criteria");

  for (CLI::App* cmd : {c_op, c_gen, c_evolve, c_perturb, c_model, c_times}) add_io(cmd, true);
  add_io(c_suite, false);
  c_suite->add_option("--seed", seed, "RNG seed for the randomized suites");
  c_suite->add_option("--max-n", max_n, "cap exhaustive populations at this atom count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (c_suite->parsed()) {
      if (max_n < 0 || (c_suite->count("--max-n") && max_n == 0)) {
        std::cerr << "error: --max-n must be >= 1\n";
        return 2;
      }
      return emit(cmd_suite(seed, static_cast<std::size_t>(max_n)), json_path, quiet);
    }

    std::ifstream file(input_path, std::ios::binary);
    if (!file) {
      std::cerr << "error: cannot read " << input_path << "\n";
      return 2;
    }
    json parsed;
    try {
      parsed = json::parse(file);
    } catch (const json::parse_error& e) {
      std::cerr << "error: malformed JSON in " << input_path << ": " << e.what() << "\n";
      return 2;
    }

    SystemDescription sys = parse_system(parsed);
    if (tol_override > 0.0) sys.options.tol = tol_override;

    CommandOutput out;
    if (c_op->parsed()) out = cmd_check_operator(sys);
    else if (c_gen->parsed()) out = cmd_check_generator(sys);
    else if (c_evolve->parsed()) out = cmd_evolve(sys);
    else if (c_perturb->parsed()) out = cmd_perturb(sys);
    else if (c_model->parsed()) out = cmd_model(sys);
    else out = cmd_ergodic_times(sys);
    return emit(out, json_path, quiet);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
