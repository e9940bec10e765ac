#include "spdelab/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "spdelab/csvio.hpp"
#include "spdelab/errors.hpp"
#include "spdelab/quartic.hpp"

namespace spdelab {

namespace {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_manifest(const fs::path& dir, const std::string& subcommand,
                    const std::string& digest, std::uint64_t seed,
                    unsigned threads) {
  std::ofstream out(dir / "manifest.txt");
  out << "subcommand=" << subcommand << "\n";
  out << "config_digest=" << digest << "\n";
  out << "seed=" << seed << "\n";
  out << "threads=" << threads << "\n";
  // Excluded from byte comparisons.
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  out << "timestamp="
      << std::chrono::duration_cast<std::chrono::seconds>(now).count() << "\n";
}

std::string status_name(AuditEntry::Status s) {
  switch (s) {
    case AuditEntry::Status::pass: return "pass";
    case AuditEntry::Status::fail: return "fail";
    case AuditEntry::Status::vacuous: return "vacuous";
  }
  return "?";
}

void write_audit_csv(const fs::path& path, const AuditReport& rep) {
  CsvWriter csv(path.string(),
                {"condition", "status", "analytic", "sampled", "witness"});
  for (const auto& e : rep.entries) {
    csv.row({e.condition, status_name(e.status), csv_num(e.analytic),
             csv_num(e.sampled), e.witness});
  }
}

void write_moments_csv(const fs::path& path, const MomentTrace& trace) {
  CsvWriter csv(path.string(), {"time", "p", "estimate", "std_error"});
  for (const auto& [p, series] : trace.p_norms) {
    for (std::size_t i = 0; i < series.size(); ++i) {
      csv.row({csv_num(trace.times[i]), std::to_string(p),
               csv_num(series[i].value), csv_num(series[i].std_error)});
    }
  }
}

void write_per_mode_csv(const fs::path& path, const DistanceReport& rep) {
  CsvWriter csv(path.string(),
                {"mode", "mean", "variance", "exact_mean", "exact_variance",
                 "z_mean", "z_var"});
  for (std::size_t k = 0; k < rep.modes.size(); ++k) {
    const auto& r = rep.modes[k];
    csv.row({std::to_string(k + 1), csv_num(r.mean), csv_num(r.variance),
             csv_num(r.exact_mean), csv_num(r.exact_variance),
             csv_num(r.z_mean), csv_num(r.z_var)});
  }
}

// The empirical (1-delta) quantile of ||theta - theta*|| under the exact
// posterior.
double quantile_radius(const ModelInstance& model, double delta, int n_samples,
                       std::uint64_t seed) {
  std::vector<double> dist(static_cast<std::size_t>(n_samples));
  const GaussianSpec post = exact_posterior(model);
  for (int i = 0; i < n_samples; ++i) {
    const SpectralVector x =
        sample_gaussian(post, seed, static_cast<std::uint32_t>(i));
    double d2 = 0.0;
    for (std::size_t k = 0; k < model.dim(); ++k) {
      const double d = x[k] - model.theta_star[k];
      d2 += d * d;
    }
    dist[static_cast<std::size_t>(i)] = std::sqrt(d2);
  }
  std::sort(dist.begin(), dist.end());
  const auto idx = static_cast<std::size_t>(
      std::min<double>(std::ceil((1.0 - delta) * n_samples),
                       static_cast<double>(n_samples)) -
      1);
  return dist[idx];
}

Certificate build_strong_certificate(const ModelInstance& model,
                                     const CertificateSection& sec) {
  const ModelConstants mc = model_constants(model, sec.delta);
  StrongRateInputs in;
  in.tr_q = trace(model.q).value;
  in.q_opnorm = op_norm(model.q);
  in.mu = mc.mu;
  in.b = mc.b;
  in.eps1 = mc.eps1;
  in.eps2 = mc.eps2;
  in.n = model.n;
  in.delta = sec.delta;
  in.c_universal = sec.c_universal;
  return strong_radius(in);
}

Certificate build_weak_certificate(const ModelInstance& model,
                                   const CertificateSection& sec) {
  WeakRateInputs in;
  in.psi = sec.psi.build();
  in.zeta = sec.zeta.build();
  in.eps = sec.eps ? *sec.eps : model_constants(model, sec.delta).eps2;
  in.b = 1.0;
  in.tr_q = trace(model.q).value;
  in.q_opnorm = op_norm(model.q);
  in.n = model.n;
  in.delta = sec.delta;
  in.z_max = sec.z_max;
  return weak_fixed_point(in);
}

int cmd_simulate(const ExperimentConfig& cfg, const fs::path& out,
                 unsigned threads, std::ostream& log) {
  const ModelInstance model = cfg.model.build();
  const SimConfig sim = cfg.sim.value_or(SimSection{}).build(model, cfg.seed);
  const DistanceReport rep = stationary_check(model, sim, threads);
  if (rep.refused) {
    log << "stationarity check refused: assumption " << rep.failed_assumption
        << " failed\n";
    return 3;
  }
  write_moments_csv(out / "moments.csv", rep.trace);
  write_per_mode_csv(out / "per_mode.csv", rep);
  CsvWriter csv((out / "stationarity.csv").string(),
                {"max_abs_z", "pass", "n_replicas", "t_end"});
  csv.row({csv_num(rep.max_abs_z), rep.pass ? "true" : "false",
           std::to_string(sim.n_replicas), csv_num(sim.t_end)});
  log << "stationarity: max |z| = " << rep.max_abs_z
      << (rep.pass ? " (pass)" : " (fail)") << "\n";
  return 0;
}

int cmd_certify(const ExperimentConfig& cfg, const fs::path& out,
                unsigned threads, std::ostream& log) {
  const ModelInstance model = cfg.model.build();
  const CertificateSection sec = cfg.certificate.value_or(CertificateSection{});
  Certificate cert = sec.kind == CertificateSection::Kind::strong
                         ? build_strong_certificate(model, sec)
                         : build_weak_certificate(model, sec);
  if (sec.validate) {
    cert = validate_certificate(std::move(cert), model, sec.n_samples,
                                cfg.seed ^ 0x9e37, threads);
  }
  std::ofstream txt(out / "certificate.txt");
  txt << cert.canonical_text();
  CsvWriter csv((out / "certificate.csv").string(),
                {"kind", "radius", "delta", "valid", "tail_mass", "tail_se",
                 "validation_pass"});
  csv.row({cert.kind == Certificate::Kind::strong ? "strong" : "weak",
           csv_num(cert.radius), csv_num(cert.delta),
           cert.valid() ? "true" : "false",
           cert.empirical_validation ? csv_num(cert.empirical_validation->tail_mass)
                                     : "",
           cert.empirical_validation ? csv_num(cert.empirical_validation->se)
                                     : "",
           cert.empirical_validation
               ? (cert.empirical_validation->pass ? "true" : "false")
               : ""});
  log << "certificate radius = " << csv_num(cert.radius)
      << (cert.valid() ? " (valid)" : " (advisory: admissibility failed)")
      << "\n";
  if (cert.empirical_validation && !cert.empirical_validation->pass) {
    log << "empirical validation FAILED: tail mass "
        << cert.empirical_validation->tail_mass << " > delta " << cert.delta
        << "\n";
    return 4;
  }
  return 0;
}

int cmd_laplace(const ExperimentConfig& cfg, const fs::path& out,
                unsigned /*threads*/, std::ostream& log) {
  const ModelInstance model = cfg.model.build();
  const LaplaceSection sec = cfg.laplace.value_or(LaplaceSection{});
  const LaplacePair pair = make_laplace_pair(model, sec.hessian_source);
  const double kl = kl_commuting_gaussians(pair.posterior, pair.laplace);

  {
    CsvWriter csv((out / "laplace_modes.csv").string(),
                  {"mode", "posterior_mean", "posterior_var", "laplace_mean",
                   "laplace_var"});
    for (std::size_t k = 0; k < model.dim(); ++k) {
      csv.row({std::to_string(k + 1), csv_num(pair.posterior.mean()[k]),
               csv_num(pair.posterior.cov()[k]), csv_num(pair.laplace.mean()[k]),
               csv_num(pair.laplace.cov()[k])});
    }
  }

  const EquivalenceReport fh = feldman_hajek_check(model.q, model.a, model.n);
  {
    CsvWriter csv((out / "feldman_hajek.csv").string(),
                  {"fh1_partial_sum", "fh1_tail", "ratio_min", "ratio_max",
                   "sufficient_lo", "sufficient_hi", "verdict", "note"});
    const char* verdict =
        fh.verdict == EquivalenceReport::Verdict::equivalent ? "equivalent"
        : fh.verdict == EquivalenceReport::Verdict::singular ? "singular"
                                                             : "inconclusive";
    csv.row({csv_num(fh.fh1_partial_sum),
             fh.fh1_tail ? csv_num(*fh.fh1_tail) : "", csv_num(fh.ratio_min),
             csv_num(fh.ratio_max), csv_num(fh.sufficient_lo),
             csv_num(fh.sufficient_hi), verdict, fh.note});
  }

  // The linear model certifies a_smooth = eps1 = eps2 = 0 via the audit.
  const AuditReport bvm = bvm_audit(model, 128, 1.0, cfg.seed ^ 0xb7);
  write_audit_csv(out / "bvm_audit.csv", bvm);

  BoundInputs bi;
  bi.a_smooth = 0.0;
  bi.eps1_2 = 0.0;
  bi.eps2_2 = 0.0;
  bi.l2 = 0.0;
  bi.alpha = sec.alpha;
  bi.sigma = sec.sigma;
  double lambda_min = std::numeric_limits<double>::infinity();
  for (double lam : model.a.eigs()) lambda_min = std::min(lambda_min, lam);
  bi.lambda_min = lambda_min;
  bi.q_opnorm = op_norm(model.q);
  bi.tr_q = trace(model.q).value;
  bi.n = model.n;
  bi.delta = sec.delta;
  bi.c1 = sec.c1;
  bi.c2 = sec.c2;

  std::optional<BoundResult> h, k;
  if (lambda_min > 0.0) {
    h = h_bound(bi);
    k = k_bound(bi);
  }

  // Empirical (E.1) constant over replicated data sets, alongside the
  // configured sigma.
  const double map_q = calibrate_sigma(model.q, model.a, model.theta_star,
                                       model.n, sec.delta, 200,
                                       cfg.seed ^ 0xe1);
  const double sigma_cal =
      map_q * std::pow(static_cast<double>(model.n), sec.alpha);

  CsvWriter csv((out / "laplace_bounds.csv").string(),
                {"kl_posterior_laplace", "h_bound", "k_bound", "k_advisory_o1n",
                 "lambda_min", "alpha", "sigma", "map_error_quantile",
                 "sigma_calibrated"});
  csv.row({csv_num(kl), h ? csv_num(h->total) : "", k ? csv_num(k->total) : "",
           k && k->advisory_o1n ? csv_num(*k->advisory_o1n) : "",
           csv_num(lambda_min), csv_num(sec.alpha), csv_num(sec.sigma),
           csv_num(map_q), csv_num(sigma_cal)});

  // Canonical text mirror of the reports (sorted keys, 17 digits).
  {
    std::map<std::string, std::string> fields;
    fields["fh.partial_sum"] = csv_num(fh.fh1_partial_sum);
    if (fh.fh1_tail) fields["fh.tail_estimate"] = csv_num(*fh.fh1_tail);
    fields["fh.ratio_min"] = csv_num(fh.ratio_min);
    fields["fh.ratio_max"] = csv_num(fh.ratio_max);
    fields["fh.sufficient_lo"] = csv_num(fh.sufficient_lo);
    fields["fh.sufficient_hi"] = csv_num(fh.sufficient_hi);
    fields["fh.verdict"] =
        fh.verdict == EquivalenceReport::Verdict::equivalent ? "equivalent"
        : fh.verdict == EquivalenceReport::Verdict::singular ? "singular"
                                                             : "inconclusive";
    fields["kl.posterior_laplace"] = csv_num(kl);
    if (h) fields["bound.h"] = csv_num(h->total);
    if (k) {
      fields["bound.k"] = csv_num(k->total);
      fields["bound.k_advisory_o1n"] = csv_num(*k->advisory_o1n);
    }
    fields["inputs.alpha"] = csv_num(sec.alpha);
    fields["inputs.sigma"] = csv_num(sec.sigma);
    fields["inputs.sigma_calibrated"] = csv_num(sigma_cal);
    fields["inputs.lambda_min"] = csv_num(lambda_min);
    std::ofstream txt(out / "laplace_report.txt");
    for (const auto& [key, value] : fields) txt << key << ": " << value << "\n";
  }
  log << "KL(posterior || laplace) = " << csv_num(kl) << "\n";
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, const fs::path& out,
              unsigned /*threads*/, std::ostream& log) {
  if (!cfg.sweep) throw ConfigError("sweep: config section 'sweep' required");
  const SweepSection& sw = *cfg.sweep;

  std::vector<double> xs, radii, quantiles, kls;
  CsvWriter csv((out / "sweep.csv").string(),
                {sw.parameter, "radius", "quantile_radius", "kl"});
  for (double value : sw.values) {
    ModelConfig mc = cfg.model;
    double delta = sw.delta;
    if (sw.parameter == "n") {
      mc.n = static_cast<long>(value);
    } else {
      delta = value;
    }
    const ModelInstance model = mc.build();
    CertificateSection sec;
    sec.kind = CertificateSection::Kind::strong;
    sec.delta = delta;
    sec.c_universal = sw.c_universal;
    const Certificate cert = build_strong_certificate(model, sec);
    const double q =
        quantile_radius(model, delta, sw.n_samples, cfg.seed ^ 0x51);
    const LaplacePair pair = make_laplace_pair(model, HessianSource::empirical);
    const double kl = kl_commuting_gaussians(pair.posterior, pair.laplace);
    xs.push_back(value);
    radii.push_back(cert.radius);
    quantiles.push_back(q);
    kls.push_back(kl);
    csv.row({csv_num(value), csv_num(cert.radius), csv_num(q), csv_num(kl)});
  }

  const auto fit_or_nan = [](const std::vector<double>& x,
                             const std::vector<double>& y) {
    for (double v : y) {
      if (!(v > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    }
    return loglog_slope(x, y);
  };
  CsvWriter fit((out / "fit.csv").string(), {"column", "loglog_slope"});
  const double slope_radius = fit_or_nan(xs, radii);
  const double slope_quantile = fit_or_nan(xs, quantiles);
  fit.row({"radius", csv_num(slope_radius)});
  fit.row({"quantile_radius", csv_num(slope_quantile)});
  fit.row({"kl", csv_num(fit_or_nan(xs, kls))});
  log << "sweep over " << sw.parameter << ": radius slope = "
      << csv_num(slope_radius) << ", quantile slope = "
      << csv_num(slope_quantile) << "\n";
  return 0;
}

int cmd_audit(const ExperimentConfig& cfg, const fs::path& out,
              unsigned /*threads*/, std::ostream& log) {
  const ModelInstance model = cfg.model.build();
  const AuditSection sec = cfg.audit.value_or(AuditSection{});
  AuditReport rep =
      audit_assumptions(model, sec.n_pairs, sec.radius, sec.seed);
  const AuditReport bvm = bvm_audit(model, sec.n_pairs, sec.radius, sec.seed);
  rep.entries.insert(rep.entries.end(), bvm.entries.begin(),
                     bvm.entries.end());
  write_audit_csv(out / "audit.csv", rep);
  for (const auto& e : rep.entries) {
    log << e.condition << ": " << status_name(e.status) << "\n";
  }
  return rep.all_passed() ? 0 : 3;
}

}  // namespace

int run_subcommand(const std::string& subcommand,
                   const std::string& config_path, const RunOptions& opts,
                   std::ostream& log) {
  if (subcommand == "accept") {
    std::string out_dir;
    if (opts.out_override) out_dir = *opts.out_override;
    return run_acceptance(log, opts.threads, out_dir);
  }

  const std::string text = read_file(config_path);
  ExperimentConfig cfg = parse_config_text(text);
  if (opts.seed_override) {
    cfg.seed = *opts.seed_override;
    cfg.model.seed = *opts.seed_override;
  }
  const fs::path out =
      opts.out_override ? fs::path(*opts.out_override) : fs::path(cfg.output_dir);
  fs::create_directories(out);
  write_manifest(out, subcommand, config_digest(text), cfg.seed, opts.threads);

  if (subcommand == "simulate") {
    return cmd_simulate(cfg, out, opts.threads, log);
  }
  if (subcommand == "certify") {
    return cmd_certify(cfg, out, opts.threads, log);
  }
  if (subcommand == "laplace") {
    return cmd_laplace(cfg, out, opts.threads, log);
  }
  if (subcommand == "sweep") {
    return cmd_sweep(cfg, out, opts.threads, log);
  }
  if (subcommand == "audit") {
    return cmd_audit(cfg, out, opts.threads, log);
  }
  throw ConfigError("unknown subcommand '" + subcommand + "'");
}

}  // namespace spdelab
