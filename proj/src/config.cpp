#include "spdelab/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "spdelab/errors.hpp"

namespace spdelab {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
  if (!j.is_object()) {
    throw ConfigError("config: " + where + " must be an object");
  }
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (allowed.find(key) == allowed.end()) {
      throw ConfigError("config: unknown key '" + key + "' in " + where);
    }
  }
}

double get_number(const json& j, const std::string& key, double fallback,
                  const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) {
    throw ConfigError("config: " + where + "." + key + " must be a number");
  }
  return j[key].get<double>();
}

long get_integer(const json& j, const std::string& key, long fallback,
                 const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) {
    throw ConfigError("config: " + where + "." + key + " must be an integer");
  }
  return j[key].get<long>();
}

bool get_bool(const json& j, const std::string& key, bool fallback,
              const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) {
    throw ConfigError("config: " + where + "." + key + " must be a boolean");
  }
  return j[key].get<bool>();
}

std::string get_string(const json& j, const std::string& key,
                       const std::string& fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string()) {
    throw ConfigError("config: " + where + "." + key + " must be a string");
  }
  return j[key].get<std::string>();
}

std::vector<double> get_number_list(const json& j, const std::string& key,
                                    const std::string& where) {
  std::vector<double> out;
  if (!j.contains(key)) return out;
  if (!j[key].is_array()) {
    throw ConfigError("config: " + where + "." + key + " must be an array");
  }
  for (const auto& v : j[key]) {
    if (!v.is_number()) {
      throw ConfigError("config: " + where + "." + key +
                        " must contain numbers only");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

DecayLawConfig parse_decay(const json& j, const std::string& where) {
  reject_unknown_keys(j, {"kind", "scale", "exponent", "values"}, where);
  DecayLawConfig out;
  const std::string kind = get_string(j, "kind", "", where);
  if (kind == "power") {
    out.law = DecayLaw::power(get_number(j, "scale", 1.0, where),
                              get_number(j, "exponent", 2.0, where));
  } else if (kind == "explicit") {
    out.law = DecayLaw::explicit_list();
    out.explicit_values = get_number_list(j, "values", where);
    if (out.explicit_values.empty()) {
      throw ConfigError("config: " + where +
                        ".values must be a nonempty array for kind=explicit");
    }
  } else {
    throw ConfigError("config: " + where +
                      ".kind must be 'power' or 'explicit'");
  }
  return out;
}

ThetaStarSpec parse_theta_star(const json& j, const std::string& where) {
  reject_unknown_keys(
      j, {"preset", "smoothness", "cm_norm", "mode", "value", "values"}, where);
  ThetaStarSpec out;
  const std::string preset = get_string(j, "preset", "smooth", where);
  if (preset == "smooth") {
    out.kind = ThetaStarSpec::Kind::smooth;
    out.smoothness = get_number(j, "smoothness", 2.0, where);
    out.cm_norm = get_number(j, "cm_norm", 1.0, where);
  } else if (preset == "spike") {
    out.kind = ThetaStarSpec::Kind::spike;
    out.mode = static_cast<std::size_t>(get_integer(j, "mode", 1, where));
    out.value = get_number(j, "value", 1.0, where);
  } else if (preset == "list") {
    out.kind = ThetaStarSpec::Kind::list;
    out.values = get_number_list(j, "values", where);
    if (out.values.empty()) {
      throw ConfigError("config: " + where +
                        ".values must be nonempty for preset=list");
    }
  } else {
    throw ConfigError("config: " + where +
                      ".preset must be 'smooth', 'spike' or 'list'");
  }
  return out;
}

ScalarFnConfig parse_scalar_fn(const json& j, const std::string& where) {
  reject_unknown_keys(j, {"kind", "coef", "exponent", "r", "v"}, where);
  ScalarFnConfig out;
  const std::string kind = get_string(j, "kind", "power", where);
  if (kind == "power") {
    out.is_power = true;
    out.coef = get_number(j, "coef", 1.0, where);
    out.exponent = get_number(j, "exponent", 2.0, where);
  } else if (kind == "tabulated") {
    out.is_power = false;
    out.table_r = get_number_list(j, "r", where);
    out.table_v = get_number_list(j, "v", where);
  } else {
    throw ConfigError("config: " + where +
                      ".kind must be 'power' or 'tabulated'");
  }
  return out;
}

}  // namespace

SpectralVector ThetaStarSpec::build(const DiagonalOperator& q) const {
  const std::size_t dim = q.dim();
  switch (kind) {
    case Kind::smooth: {
      std::vector<double> c(dim);
      for (std::size_t m = 0; m < dim; ++m) {
        c[m] = std::pow(static_cast<double>(m + 1), -smoothness);
      }
      SpectralVector raw(std::move(c));
      const double norm = cameron_martin_norm(raw, q);
      if (!(norm > 0.0)) throw ConfigError("theta_star: degenerate preset");
      return SpectralVector::from_fn(
          dim, [&](std::size_t m) { return raw[m - 1] * cm_norm / norm; });
    }
    case Kind::spike: {
      if (mode < 1 || mode > dim) {
        throw ConfigError("theta_star: spike mode out of range");
      }
      std::vector<double> c(dim, 0.0);
      c[mode - 1] = value;
      return SpectralVector(std::move(c));
    }
    case Kind::list: {
      if (values.size() != dim) {
        throw ConfigError(
            "theta_star: list length must equal the truncation (" +
            std::to_string(dim) + ")");
      }
      return SpectralVector(values);
    }
  }
  throw ConfigError("theta_star: unreachable");
}

DiagonalOperator DecayLawConfig::build(std::size_t dim) const {
  if (law.kind == DecayLaw::Kind::power) {
    return DiagonalOperator::power(law.scale, law.exponent, dim);
  }
  if (explicit_values.size() != dim) {
    throw ConfigError("decay law: explicit list length (" +
                      std::to_string(explicit_values.size()) +
                      ") must equal the truncation (" + std::to_string(dim) +
                      ")");
  }
  return DiagonalOperator::explicit_list(explicit_values);
}

ModelInstance ModelConfig::build() const {
  const DiagonalOperator qo = q.build(truncation);
  const DiagonalOperator ao = a.build(truncation);
  const SpectralVector ts = theta_star.build(qo);
  return synthesize_data(qo, ao, ts, n, seed, zero_noise);
}

SimConfig SimSection::build(const ModelInstance& m,
                            std::uint64_t fallback_seed) const {
  SimConfig cfg = SimConfig::defaults_for(m, n_replicas,
                                          seed.value_or(fallback_seed));
  if (dt) cfg.dt = *dt;
  if (t_end) cfg.t_end = *t_end;
  cfg.scheme = scheme;
  if (!record_times.empty()) cfg.record_times = record_times;
  else cfg.record_times = {cfg.t_end};
  cfg.moment_ps = moment_ps;
  cfg.divergence_guard = divergence_guard;
  cfg.validate();
  return cfg;
}

ScalarFn ScalarFnConfig::build() const {
  if (is_power) return ScalarFn::power(coef, exponent);
  return ScalarFn::tabulated(table_r, table_v);
}

ExperimentConfig parse_config_text(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: JSON parse failure: ") + e.what());
  }
  reject_unknown_keys(j,
                      {"model", "sim", "certificate", "laplace", "sweep",
                       "audit", "output_dir", "seed"},
                      "top level");

  ExperimentConfig cfg;
  cfg.output_dir = get_string(j, "output_dir", "out", "top level");
  cfg.seed = static_cast<std::uint64_t>(
      get_integer(j, "seed", 1, "top level"));

  if (!j.contains("model")) throw ConfigError("config: missing 'model'");
  {
    const json& jm = j["model"];
    reject_unknown_keys(
        jm, {"truncation", "q", "a", "theta_star", "n", "seed", "zero_noise"},
        "model");
    cfg.model.truncation = static_cast<std::size_t>(
        get_integer(jm, "truncation", 256, "model"));
    if (cfg.model.truncation < 1) {
      throw ConfigError("config: model.truncation must be >= 1");
    }
    if (!jm.contains("q") || !jm.contains("a")) {
      throw ConfigError("config: model.q and model.a are required");
    }
    cfg.model.q = parse_decay(jm["q"], "model.q");
    cfg.model.a = parse_decay(jm["a"], "model.a");
    if (jm.contains("theta_star")) {
      cfg.model.theta_star = parse_theta_star(jm["theta_star"],
                                              "model.theta_star");
    }
    cfg.model.n = get_integer(jm, "n", 1000, "model");
    cfg.model.seed = static_cast<std::uint64_t>(
        get_integer(jm, "seed", 1, "model"));
    cfg.model.zero_noise = get_bool(jm, "zero_noise", false, "model");
  }

  if (j.contains("sim")) {
    const json& js = j["sim"];
    reject_unknown_keys(js,
                        {"dt", "t_end", "n_replicas", "scheme", "record_times",
                         "seed", "moment_ps", "divergence_guard"},
                        "sim");
    SimSection s;
    if (js.contains("dt")) s.dt = get_number(js, "dt", 0.0, "sim");
    if (js.contains("t_end")) s.t_end = get_number(js, "t_end", 0.0, "sim");
    s.n_replicas =
        static_cast<int>(get_integer(js, "n_replicas", 10000, "sim"));
    const std::string scheme = get_string(js, "scheme", "exact_ou", "sim");
    if (scheme == "exact_ou") {
      s.scheme = Scheme::exact_ou;
    } else if (scheme == "semi_implicit_euler") {
      s.scheme = Scheme::semi_implicit_euler;
    } else {
      throw ConfigError(
          "config: sim.scheme must be 'exact_ou' or 'semi_implicit_euler'");
    }
    s.record_times = get_number_list(js, "record_times", "sim");
    if (js.contains("seed")) {
      s.seed = static_cast<std::uint64_t>(get_integer(js, "seed", 0, "sim"));
    }
    if (js.contains("moment_ps")) {
      s.moment_ps.clear();
      for (double p : get_number_list(js, "moment_ps", "sim")) {
        s.moment_ps.push_back(static_cast<int>(p));
      }
    }
    s.divergence_guard = get_number(js, "divergence_guard", 1e8, "sim");
    cfg.sim = s;
  }

  if (j.contains("certificate")) {
    const json& jc = j["certificate"];
    reject_unknown_keys(jc,
                        {"kind", "c_universal", "delta", "validate",
                         "n_samples", "psi", "zeta", "eps", "z_max"},
                        "certificate");
    CertificateSection c;
    const std::string kind = get_string(jc, "kind", "strong", "certificate");
    if (kind == "strong") {
      c.kind = CertificateSection::Kind::strong;
    } else if (kind == "weak") {
      c.kind = CertificateSection::Kind::weak;
    } else {
      throw ConfigError("config: certificate.kind must be 'strong' or 'weak'");
    }
    c.c_universal = get_number(jc, "c_universal", 1.0, "certificate");
    c.delta = get_number(jc, "delta", 0.1, "certificate");
    c.validate = get_bool(jc, "validate", true, "certificate");
    c.n_samples =
        static_cast<int>(get_integer(jc, "n_samples", 10000, "certificate"));
    if (jc.contains("psi")) c.psi = parse_scalar_fn(jc["psi"], "certificate.psi");
    if (jc.contains("zeta")) {
      c.zeta = parse_scalar_fn(jc["zeta"], "certificate.zeta");
    } else {
      c.zeta = ScalarFnConfig{true, 1.0, 0.0, {}, {}};
    }
    if (jc.contains("eps")) c.eps = get_number(jc, "eps", 0.0, "certificate");
    c.z_max = get_number(jc, "z_max", 1e6, "certificate");
    cfg.certificate = c;
  }

  if (j.contains("laplace")) {
    const json& jl = j["laplace"];
    reject_unknown_keys(
        jl, {"alpha", "sigma", "c1", "c2", "delta", "hessian_source"},
        "laplace");
    LaplaceSection l;
    l.alpha = get_number(jl, "alpha", 0.5, "laplace");
    l.sigma = get_number(jl, "sigma", 1.0, "laplace");
    l.c1 = get_number(jl, "c1", 1.0, "laplace");
    l.c2 = get_number(jl, "c2", 1.0, "laplace");
    l.delta = get_number(jl, "delta", 0.1, "laplace");
    const std::string src =
        get_string(jl, "hessian_source", "empirical", "laplace");
    if (src == "empirical") {
      l.hessian_source = HessianSource::empirical;
    } else if (src == "population") {
      l.hessian_source = HessianSource::population;
    } else {
      throw ConfigError(
          "config: laplace.hessian_source must be 'empirical' or "
          "'population'");
    }
    cfg.laplace = l;
  }

  if (j.contains("sweep")) {
    const json& jw = j["sweep"];
    reject_unknown_keys(
        jw, {"parameter", "values", "delta", "n_samples", "c_universal"},
        "sweep");
    SweepSection w;
    w.parameter = get_string(jw, "parameter", "n", "sweep");
    if (w.parameter != "n" && w.parameter != "delta") {
      throw ConfigError("config: sweep.parameter must be 'n' or 'delta'");
    }
    w.values = get_number_list(jw, "values", "sweep");
    if (w.values.size() < 2) {
      throw ConfigError("config: sweep.values needs at least 2 points");
    }
    w.delta = get_number(jw, "delta", 0.1, "sweep");
    w.n_samples = static_cast<int>(get_integer(jw, "n_samples", 20000, "sweep"));
    w.c_universal = get_number(jw, "c_universal", 1.0, "sweep");
    cfg.sweep = w;
  }

  if (j.contains("audit")) {
    const json& ja = j["audit"];
    reject_unknown_keys(ja, {"n_pairs", "radius", "seed"}, "audit");
    AuditSection a;
    a.n_pairs = static_cast<int>(get_integer(ja, "n_pairs", 200, "audit"));
    a.radius = get_number(ja, "radius", 1.0, "audit");
    a.seed = static_cast<std::uint64_t>(get_integer(ja, "seed", 7, "audit"));
    cfg.audit = a;
  }

  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string config_digest(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: JSON parse failure: ") + e.what());
  }
  const std::string canonical = j.dump();  // object keys already sorted
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace spdelab
