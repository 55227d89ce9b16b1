#ifndef KOOPMAN_JSON_IO_HPP
#define KOOPMAN_JSON_IO_HPP

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "koopman/ergodicity.hpp"
#include "koopman/markov_operators.hpp"
#include "koopman/measure_space.hpp"
#include "koopman/report.hpp"
#include "koopman/semigroup_engine.hpp"
#include "koopman/spectral_flow.hpp"
#include "koopman/topological_model.hpp"

namespace koopman {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// input schema
// ---------------------------------------------------------------------------

struct Options {
  double tol = 1e-9;
  int quad_steps = 256;
  std::vector<double> t_grid{0.25, 0.5, 1.0, 2.0};
  double t_max = 3.0;
  std::int64_t max_denominator = 1'000'000;
  int oversample = 4;
};

struct RotationSpec {
  std::vector<double> alpha;
  int truncation = 0;  // 0: use the per-dimension default
};

inline int default_truncation(std::size_t dims) {
  if (dims <= 1) return 32;
  if (dims == 2) return 8;
  return 3;
}

struct SystemDescription {
  std::optional<SemiflowMap> map;
  std::optional<ComplexMatrix> matrix;
  std::optional<ComplexMatrix> generator;
  struct PerturbationInput {
    std::optional<ComplexMatrix> delta_matrix;
    std::optional<RotationSpec> delta_rotation;
    json q_raw;
  };
  std::optional<PerturbationInput> perturbation;
  std::optional<RotationSpec> rotation;
  std::optional<std::vector<double>> weights;
  std::optional<std::vector<std::string>> labels;
  json f_raw;  // payload-dependent function description
  Options options;
};

namespace jsonio_detail {

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) {
  throw Error(errc::invalid_argument, path + ": " + msg);
}

inline double as_double(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

inline std::int64_t as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<std::int64_t>();
}

inline cx as_complex(const json& j, const std::string& path) {
  if (j.is_number()) return cx(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return cx(j[0].get<double>(), j[1].get<double>());
  fail(path, "expected a number or [re, im]");
}

inline ComplexMatrix as_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a nonempty array of rows");
  std::size_t n = j.size();
  ComplexMatrix m(n);
  for (std::size_t r = 0; r < n; ++r) {
    const json& row = j[r];
    std::string row_path = path + "[" + std::to_string(r) + "]";
    if (!row.is_array() || row.size() != n) fail(row_path, "expected a row of length " + std::to_string(n));
    for (std::size_t c = 0; c < n; ++c)
      m(r, c) = as_complex(row[c], row_path + "[" + std::to_string(c) + "]");
  }
  return m;
}

inline RotationSpec as_rotation(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  RotationSpec spec;
  if (!j.contains("alpha") || !j["alpha"].is_array() || j["alpha"].empty())
    fail(path + ".alpha", "expected a nonempty array of frequencies");
  for (std::size_t i = 0; i < j["alpha"].size(); ++i)
    spec.alpha.push_back(as_double(j["alpha"][i], path + ".alpha[" + std::to_string(i) + "]"));
  if (j.contains("N")) {
    spec.truncation = static_cast<int>(as_int(j["N"], path + ".N"));
    if (spec.truncation < 1) fail(path + ".N", "truncation must be >= 1");
  } else {
    spec.truncation = default_truncation(spec.alpha.size());
  }
  return spec;
}

}  // namespace jsonio_detail

inline SystemDescription parse_system(const json& j) {
  using jsonio_detail::fail;
  if (!j.is_object()) fail("$", "input must be a JSON object");

  SystemDescription sys;
  int payloads = 0;

  if (j.contains("map")) {
    ++payloads;
    const json& m = j["map"];
    if (!m.is_array() || m.empty()) fail("map", "expected a nonempty array of atom indices");
    SemiflowMap phi;
    for (std::size_t i = 0; i < m.size(); ++i) {
      std::int64_t v = jsonio_detail::as_int(m[i], "map[" + std::to_string(i) + "]");
      if (v < 0 || static_cast<std::size_t>(v) >= m.size())
        fail("map[" + std::to_string(i) + "]", "target out of range");
      phi.atom_map.push_back(static_cast<std::size_t>(v));
    }
    sys.map = std::move(phi);
  }
  if (j.contains("matrix")) {
    ++payloads;
    sys.matrix = jsonio_detail::as_matrix(j["matrix"], "matrix");
  }
  if (j.contains("generator")) {
    ++payloads;
    sys.generator = jsonio_detail::as_matrix(j["generator"], "generator");
  }
  if (j.contains("rotation")) {
    ++payloads;
    sys.rotation = jsonio_detail::as_rotation(j["rotation"], "rotation");
  }
  if (j.contains("perturbation")) {
    ++payloads;
    const json& p = j["perturbation"];
    if (!p.is_object()) fail("perturbation", "expected an object");
    if (!p.contains("delta")) fail("perturbation.delta", "missing");
    if (!p.contains("q")) fail("perturbation.q", "missing");
    SystemDescription::PerturbationInput input;
    const json& d = p["delta"];
    if (d.is_object() && d.contains("rotation"))
      input.delta_rotation = jsonio_detail::as_rotation(d["rotation"], "perturbation.delta.rotation");
    else
      input.delta_matrix = jsonio_detail::as_matrix(d, "perturbation.delta");
    input.q_raw = p["q"];
    sys.perturbation = std::move(input);
  }

  if (payloads != 1)
    fail("$", "exactly one of map, matrix, generator, rotation, perturbation is required");

  if (j.contains("space")) {
    const json& s = j["space"];
    if (!s.is_object()) fail("space", "expected an object");
    if (s.contains("weights")) {
      std::vector<double> w;
      if (!s["weights"].is_array()) fail("space.weights", "expected an array");
      for (std::size_t i = 0; i < s["weights"].size(); ++i)
        w.push_back(jsonio_detail::as_double(s["weights"][i],
                                             "space.weights[" + std::to_string(i) + "]"));
      sys.weights = std::move(w);
    }
    if (s.contains("labels")) {
      std::vector<std::string> ls;
      if (!s["labels"].is_array()) fail("space.labels", "expected an array");
      for (const auto& l : s["labels"]) {
        if (!l.is_string()) fail("space.labels", "expected strings");
        ls.push_back(l.get<std::string>());
      }
      sys.labels = std::move(ls);
    }
  }

  if (j.contains("f")) sys.f_raw = j["f"];

  // t_max may sit at the top level as a convenience
  if (j.contains("t_max")) {
    sys.options.t_max = jsonio_detail::as_double(j["t_max"], "t_max");
    if (!(sys.options.t_max > 0.0)) fail("t_max", "must be positive");
  }

  if (j.contains("options")) {
    const json& o = j["options"];
    if (!o.is_object()) fail("options", "expected an object");
    if (o.contains("tol")) {
      sys.options.tol = jsonio_detail::as_double(o["tol"], "options.tol");
      if (!(sys.options.tol > 0.0)) fail("options.tol", "must be positive");
    }
    if (o.contains("quad_steps")) {
      sys.options.quad_steps = static_cast<int>(jsonio_detail::as_int(o["quad_steps"], "options.quad_steps"));
      if (sys.options.quad_steps < 1) fail("options.quad_steps", "must be >= 1");
    }
    if (o.contains("t_grid")) {
      if (!o["t_grid"].is_array() || o["t_grid"].empty())
        fail("options.t_grid", "expected a nonempty array");
      sys.options.t_grid.clear();
      for (std::size_t i = 0; i < o["t_grid"].size(); ++i) {
        double t = jsonio_detail::as_double(o["t_grid"][i], "options.t_grid[" + std::to_string(i) + "]");
        if (t < 0.0) fail("options.t_grid[" + std::to_string(i) + "]", "times must be >= 0");
        sys.options.t_grid.push_back(t);
      }
    }
    if (o.contains("t_max")) {
      sys.options.t_max = jsonio_detail::as_double(o["t_max"], "options.t_max");
      if (!(sys.options.t_max > 0.0)) fail("options.t_max", "must be positive");
    }
    if (o.contains("max_denominator")) {
      sys.options.max_denominator = jsonio_detail::as_int(o["max_denominator"], "options.max_denominator");
      if (sys.options.max_denominator < 1) fail("options.max_denominator", "must be >= 1");
    }
    if (o.contains("oversample")) {
      sys.options.oversample = static_cast<int>(jsonio_detail::as_int(o["oversample"], "options.oversample"));
      if (sys.options.oversample < 2) fail("options.oversample", "must be >= 2");
    }
  }

  return sys;
}

// space for a payload of known size: explicit weights or uniform
inline FiniteProbabilitySpace resolve_space(const SystemDescription& sys, std::size_t n) {
  if (sys.weights) {
    if (sys.weights->size() != n)
      jsonio_detail::fail("space.weights", "length does not match the system size");
    return FiniteProbabilitySpace(*sys.weights,
                                  sys.labels ? *sys.labels : std::vector<std::string>{});
  }
  if (sys.labels) {
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    return FiniteProbabilitySpace(w, *sys.labels);
  }
  return FiniteProbabilitySpace::uniform(n);
}

// function over atoms: array of complex entries; defaults to the constant 1
inline MeasurableFunction resolve_function(const json& f_raw, std::size_t n) {
  if (f_raw.is_null()) return MeasurableFunction::one(n);
  if (!f_raw.is_array() || f_raw.size() != n)
    jsonio_detail::fail("f", "expected an array of " + std::to_string(n) + " entries");
  MeasurableFunction f(n);
  for (std::size_t i = 0; i < n; ++i)
    f[i] = jsonio_detail::as_complex(f_raw[i], "f[" + std::to_string(i) + "]");
  return f;
}

// Fourier payload: {"modes": [[[k...], re, im], ...]}; scalar k allowed for
// d = 1. Modes outside the window are rejected.
inline FourierFunction resolve_fourier(const json& raw, const SpectralFlowModel& model,
                                       const std::string& path) {
  if (raw.is_null()) return FourierFunction::one(model);
  if (!raw.is_object() || !raw.contains("modes") || !raw["modes"].is_array())
    jsonio_detail::fail(path, "expected {\"modes\": [[[k...], re, im], ...]}");
  FourierFunction f = FourierFunction::zero(model);
  const json& modes = raw["modes"];
  for (std::size_t i = 0; i < modes.size(); ++i) {
    std::string mp = path + ".modes[" + std::to_string(i) + "]";
    const json& triple = modes[i];
    if (!triple.is_array() || triple.size() != 3) jsonio_detail::fail(mp, "expected [k, re, im]");
    std::vector<int> k;
    if (triple[0].is_array()) {
      for (std::size_t d = 0; d < triple[0].size(); ++d)
        k.push_back(static_cast<int>(jsonio_detail::as_int(triple[0][d], mp + "[0]")));
    } else {
      k.push_back(static_cast<int>(jsonio_detail::as_int(triple[0], mp + "[0]")));
    }
    if (k.size() != model.modes().dims()) jsonio_detail::fail(mp, "mode arity mismatch");
    auto idx = model.modes().rank(k);
    if (!idx)
      throw Error(errc::q_support_too_wide, mp + ": mode outside the truncation window");
    f.coefficients[*idx] =
        cx(jsonio_detail::as_double(triple[1], mp + "[1]"), jsonio_detail::as_double(triple[2], mp + "[2]"));
  }
  return f;
}

// ---------------------------------------------------------------------------
// report serialization
// ---------------------------------------------------------------------------

inline Report space_report(const FiniteProbabilitySpace& s) {
  Report r = Report::object();
  r.set("weights", vector_report(s.weights()));
  Report labels = Report::array();
  for (const auto& l : s.labels()) labels.push_back(l);
  r.set("labels", std::move(labels));
  return r;
}

inline Report function_report(const MeasurableFunction& f) {
  return complex_vector_report(f.values);
}

inline Report fourier_report(const SpectralFlowModel& model, const FourierFunction& f) {
  Report modes = Report::array();
  for (std::size_t i = 0; i < f.coefficients.size(); ++i) {
    cx c = f.coefficients[i];
    if (c == cx(0.0, 0.0)) continue;  // sparse output
    Report triple = Report::array();
    triple.push_back(int_vector_report(model.modes().unrank(i)));
    triple.push_back(c.real());
    triple.push_back(c.imag());
    modes.push_back(std::move(triple));
  }
  Report r = Report::object();
  r.set("modes", std::move(modes));
  return r;
}

inline Report operator_verdict_report(const OperatorVerdict& v) {
  Report r = Report::object();
  r.set("positive", v.positive);
  r.set("row_stochastic", v.row_stochastic);
  r.set("measure_preserving", v.measure_preserving);
  r.set("lattice", v.lattice);
  r.set("multiplicative", v.multiplicative);
  r.set("markov", v.markov());
  r.set("markov_lattice", v.markov_lattice());

  Report witnesses = Report::object();
  if (v.positivity_witness) {
    Report w = Report::object();
    w.set("row", v.positivity_witness->row);
    w.set("col", v.positivity_witness->col);
    w.set("value", complex_report(v.positivity_witness->value));
    witnesses.set("positive", std::move(w));
  }
  if (v.row_sum_witness) {
    Report w = Report::object();
    w.set("row", v.row_sum_witness->row);
    w.set("sum", complex_report(v.row_sum_witness->sum));
    witnesses.set("row_stochastic", std::move(w));
  }
  if (v.measure_witness) {
    Report w = Report::object();
    w.set("col", v.measure_witness->col);
    w.set("deviation", v.measure_witness->deviation);
    witnesses.set("measure_preserving", std::move(w));
  }
  if (v.lattice_witness) {
    Report w = Report::object();
    w.set("f", function_report(v.lattice_witness->f));
    w.set("deviation", v.lattice_witness->deviation);
    witnesses.set("lattice", std::move(w));
  }
  if (v.multiplicative_witness) {
    Report w = Report::object();
    w.set("f", function_report(v.multiplicative_witness->f));
    w.set("g", function_report(v.multiplicative_witness->g));
    w.set("deviation", v.multiplicative_witness->deviation);
    witnesses.set("multiplicative", std::move(w));
  }
  r.set("witnesses", std::move(witnesses));
  return r;
}

inline Report derivation_report_json(const DerivationReport& d) {
  Report r = Report::object();
  r.set("pass", d.pass);
  if (!d.pass) {
    r.set("failed_check", d.failed_check);
    r.set("deviation", d.deviation);
    Report w = Report::object();
    w.set("i", d.i);
    w.set("j", d.j);
    if (d.witness) {
      w.set("f", function_report(d.witness->first));
      w.set("g", function_report(d.witness->second));
    }
    r.set("witness", std::move(w));
  }
  return r;
}

inline Report kato_report_json(const KatoReport& k) {
  Report r = Report::object();
  r.set("pass", k.pass);
  r.set("patterns_tested", k.patterns_tested);
  r.set("randoms_tested", k.randoms_tested);
  if (!k.pass) {
    r.set("deviation", k.deviation);
    if (k.witness) r.set("witness_f", function_report(*k.witness));
  }
  return r;
}

inline Report generator_verdict_report(const GeneratorVerdict& v) {
  Report r = Report::object();
  r.set("q", function_report(v.q));
  r.set("q_is_zero", v.q_is_zero);
  r.set("delta_derivation", derivation_report_json(v.derivation));
  Report measure = Report::object();
  measure.set("pass", v.fixes_measure);
  measure.set("deviation", v.measure_deviation);
  if (!v.fixes_measure) measure.set("witness_col", v.measure_witness_col);
  r.set("fixes_measure", std::move(measure));
  r.set("kato", kato_report_json(v.kato));
  r.set("markov_generator", v.markov_generator());
  r.set("lattice_generator", v.kato.pass);
  return r;
}

inline Report additivity_report_json(const AdditivityReport& a) {
  Report r = Report::object();
  r.set("pass", a.pass);
  r.set("max_deviation", a.deviation);
  if (!a.pass) {
    Report w = Report::object();
    w.set("k", int_vector_report(a.k));
    w.set("l", int_vector_report(a.l));
    r.set("witness", std::move(w));
  }
  return r;
}

inline Report boundary_group_report_json(const BoundaryGroupReport& b) {
  Report r = Report::object();
  r.set("pass", b.pass);
  if (!b.pass) {
    r.set("failed_check", b.failed_check);
    Report w = Report::object();
    w.set("k", int_vector_report(b.k));
    w.set("l", int_vector_report(b.l));
    r.set("witness", std::move(w));
    r.set("deviation", b.deviation);
  }
  return r;
}

inline Report spectral_report_json(const SpectralReport& rep) {
  Report r = Report::object();
  r.set("t_max", rep.t_max);
  r.set("approximate", rep.approximate);
  r.set("flow_fix_dimension", rep.flow_fix_dimension);
  r.set("flow_ergodic_within_truncation", rep.flow_ergodic_within_truncation);
  Report zero = Report::array();
  for (const auto& k : rep.zero_modes) zero.push_back(int_vector_report(k));
  r.set("zero_modes", std::move(zero));
  r.set("boundary_lambdas", vector_report(rep.boundary_lambdas));
  Report times = Report::array();
  for (const auto& nt : rep.times) {
    Report t = Report::object();
    t.set("t", nt.t);
    t.set("exact", nt.exact ? Report(nt.exact->str()) : Report(nullptr));
    t.set("fix_dim", nt.fix_dim);
    t.set("mode", int_vector_report(nt.mode));
    times.push_back(std::move(t));
  }
  r.set("times", std::move(times));
  r.set("count", rep.times.size());
  return r;
}

inline Report model_report_json(const TopologicalModel& model, const ModelResiduals& res) {
  Report r = Report::object();
  Report k = Report::array();
  for (const auto& p : model.k_points) k.push_back(p);
  r.set("K", std::move(k));
  r.set("psi", int_vector_report(model.psi.atom_map));
  r.set("nu", vector_report(model.nu));
  Report rr = Report::object();
  rr.set("unit", res.unit);
  rr.set("multiplicativity", res.multiplicativity);
  rr.set("intertwining", res.intertwining);
  rr.set("measure_transport", res.measure_transport);
  rr.set("invariance", res.invariance);
  rr.set("max", res.max());
  r.set("residuals", std::move(rr));
  return r;
}

inline Report perturbation_report_json(const PerturbationReport& rep, double tol) {
  Report r = Report::object();
  Report per_t = Report::array();
  for (const auto& [t, res] : rep.per_t) {
    Report e = Report::object();
    e.set("t", t);
    e.set("residual", res);
    per_t.push_back(std::move(e));
  }
  r.set("per_t", std::move(per_t));
  r.set("max_residual", rep.max_residual);
  r.set("tol", tol);
  r.set("pass", rep.pass);
  return r;
}

}  // namespace koopman

#endif
