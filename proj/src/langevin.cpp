#include "spdelab/langevin.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <limits>

#include "spdelab/errors.hpp"
#include "spdelab/parallel.hpp"

namespace spdelab {

namespace {

constexpr std::size_t kReplicaChunk = 256;

std::vector<std::size_t> snap_record_indices(const SimConfig& cfg,
                                             std::size_t n_steps) {
  std::vector<std::size_t> idx;
  if (cfg.record_times.empty()) {
    idx.push_back(n_steps);
    return idx;
  }
  for (double t : cfg.record_times) {
    const double k = std::round(t / cfg.dt);
    const auto s = static_cast<std::size_t>(
        std::min<double>(std::max(0.0, k), static_cast<double>(n_steps)));
    if (idx.empty() || s > idx.back()) idx.push_back(s);
  }
  if (idx.back() != n_steps) idx.push_back(n_steps);  // per-mode stats slot
  return idx;
}

struct ChunkAccumulator {
  // One row per record time: sums of ||theta - center||^p and their squares.
  std::vector<double> p_sum;
  std::vector<double> p_sum_sq;
  // Final-time per-mode sums for mean/variance.
  std::vector<double> mode_sum;
  std::vector<double> mode_sum_sq;
};

}  // namespace

DriftSpec DriftSpec::from_model(const ModelInstance& m) {
  DriftSpec d;
  const std::size_t dim = m.dim();
  std::vector<double> slope(dim), intercept(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    slope[k] = m.q[k] * m.a[k];
    intercept[k] = m.q[k] * m.data_coeffs[k];
  }
  d.lin_slope = slope;
  d.lin_intercept = intercept;
  d.linearity_tag = Linearity::linear;
  d.likelihood_grad_raw = [slope, intercept](std::span<const double> theta,
                                             std::span<double> out) {
    for (std::size_t k = 0; k < theta.size(); ++k) {
      out[k] = -slope[k] * theta[k] + intercept[k];
    }
  };
  d.prior_grad_raw = [](std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
  d.likelihood_grad = [raw = d.likelihood_grad_raw](const SpectralVector& t) {
    std::vector<double> out(t.dim());
    raw(t.coeffs(), out);
    return SpectralVector(std::move(out));
  };
  d.prior_grad = [](const SpectralVector& t) {
    return SpectralVector::zeros(t.dim());
  };
  return d;
}

DriftSpec DriftSpec::general(RawGradFn likelihood, RawGradFn prior,
                             std::size_t dim) {
  DriftSpec d;
  d.linearity_tag = Linearity::general;
  d.likelihood_grad_raw = std::move(likelihood);
  d.prior_grad_raw = std::move(prior);
  d.likelihood_grad = [raw = d.likelihood_grad_raw,
                       dim](const SpectralVector& t) {
    std::vector<double> out(dim);
    raw(t.coeffs(), out);
    return SpectralVector(std::move(out));
  };
  d.prior_grad = [raw = d.prior_grad_raw, dim](const SpectralVector& t) {
    std::vector<double> out(dim);
    raw(t.coeffs(), out);
    return SpectralVector(std::move(out));
  };
  return d;
}

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw Error("SimConfig: dt must be positive");
  if (!(t_end > 0.0)) throw Error("SimConfig: t_end must be positive");
  if (dt > t_end) throw Error("SimConfig: dt must not exceed t_end");
  if (n_replicas < 2) throw Error("SimConfig: need at least 2 replicas");
  double prev = 0.0;
  for (double t : record_times) {
    if (t < prev || t > t_end * (1.0 + 1e-12)) {
      throw Error("SimConfig: record_times must be sorted within [0, t_end]");
    }
    prev = t;
  }
  for (int p : moment_ps) {
    if (p < 2 || p % 2 != 0) {
      throw Error("SimConfig: moment orders must be even and >= 2");
    }
  }
  if (!(divergence_guard > 0.0)) {
    throw Error("SimConfig: divergence guard must be positive");
  }
}

SimConfig SimConfig::defaults_for(const ModelInstance& m, int n_replicas,
                                  std::uint64_t seed) {
  double rate_min = std::numeric_limits<double>::infinity();
  double rate_max = 0.0;
  const double inv_n = 1.0 / static_cast<double>(m.n);
  for (std::size_t k = 0; k < m.dim(); ++k) {
    const double rate = inv_n + m.q[k] * m.a[k];
    rate_min = std::min(rate_min, rate);
    rate_max = std::max(rate_max, rate);
  }
  SimConfig cfg;
  cfg.dt = 0.1 / rate_max;
  cfg.t_end = 10.0 / rate_min;
  cfg.n_replicas = n_replicas;
  cfg.scheme = Scheme::exact_ou;
  cfg.record_times = {cfg.t_end};
  cfg.seed = seed;
  return cfg;
}

MomentTrace simulate(const DriftSpec& drift, const DiagonalOperator& q, long n,
                     const SpectralVector& theta_init, const SimConfig& cfg,
                     unsigned threads, const SpectralVector* center,
                     const GaussianSpec* init_law) {
  cfg.validate();
  const std::size_t dim = q.dim();
  if (theta_init.dim() != dim) throw Error("simulate: dimension mismatch");
  if (cfg.scheme == Scheme::exact_ou &&
      drift.linearity_tag != DriftSpec::Linearity::linear) {
    throw Error("simulate: exact_ou requires a linear drift");
  }
  if (n < 1) throw Error("simulate: n must be >= 1");

  const auto n_steps =
      static_cast<std::size_t>(std::ceil(cfg.t_end / cfg.dt - 1e-12));
  const std::vector<std::size_t> record_steps = snap_record_indices(cfg, n_steps);
  const std::size_t n_records = record_steps.size();
  const std::vector<double>& cvec =
      center != nullptr ? center->coeffs() : theta_init.coeffs();
  const double inv_n = 1.0 / static_cast<double>(n);
  const std::size_t n_ps = cfg.moment_ps.size();

  // Per-mode transition coefficients.
  std::vector<double> ou_decay(dim), ou_mean(dim), ou_noise_sd(dim);
  std::vector<double> euler_noise_sd(dim);
  if (cfg.scheme == Scheme::exact_ou) {
    for (std::size_t k = 0; k < dim; ++k) {
      const double rate = inv_n + drift.lin_slope[k];
      const double stat_var = (q[k] * inv_n) / rate;
      ou_decay[k] = std::exp(-rate * cfg.dt);
      ou_mean[k] = drift.lin_intercept[k] / rate;
      ou_noise_sd[k] = std::sqrt(stat_var * (1.0 - ou_decay[k] * ou_decay[k]));
    }
  } else {
    for (std::size_t k = 0; k < dim; ++k) {
      euler_noise_sd[k] = std::sqrt(2.0 * q[k] * inv_n * cfg.dt);
    }
  }

  const std::size_t n_chunks =
      chunk_count(static_cast<std::size_t>(cfg.n_replicas), kReplicaChunk);
  std::vector<ChunkAccumulator> acc(n_chunks);
  for (auto& a : acc) {
    a.p_sum.assign(n_records * n_ps, 0.0);
    a.p_sum_sq.assign(n_records * n_ps, 0.0);
    a.mode_sum.assign(dim, 0.0);
    a.mode_sum_sq.assign(dim, 0.0);
  }

  // First divergence across all replicas, by lowest replica index.
  std::atomic<std::uint64_t> first_divergence{
      std::numeric_limits<std::uint64_t>::max()};

  parallel_chunks(
      static_cast<std::size_t>(cfg.n_replicas), kReplicaChunk, threads,
      [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        std::vector<double> state(dim), grad_lik(dim), grad_prior(dim);
        ChunkAccumulator& a = acc[chunk];
        for (std::size_t r = begin; r < end; ++r) {
          const auto replica = static_cast<std::uint32_t>(r);
          if (init_law != nullptr) {
            for (std::size_t k = 0; k < dim; ++k) {
              const double z =
                  rng::normal(cfg.seed, rng::Stream::init, replica,
                              static_cast<std::uint32_t>(k), 0);
              state[k] =
                  init_law->mean()[k] + std::sqrt(init_law->cov()[k]) * z;
            }
          } else {
            std::copy(theta_init.coeffs().begin(), theta_init.coeffs().end(),
                      state.begin());
          }

          std::size_t rec = 0;
          auto record = [&](std::size_t rec_index) {
            for (std::size_t pi = 0; pi < n_ps; ++pi) {
              double d2 = 0.0;
              for (std::size_t k = 0; k < dim; ++k) {
                const double d = state[k] - cvec[k];
                d2 += d * d;
              }
              const double v =
                  std::pow(d2, 0.5 * static_cast<double>(cfg.moment_ps[pi]));
              a.p_sum[rec_index * n_ps + pi] += v;
              a.p_sum_sq[rec_index * n_ps + pi] += v * v;
            }
          };
          if (record_steps[rec] == 0) record(rec++);

          for (std::size_t step = 1; step <= n_steps; ++step) {
            if (cfg.scheme == Scheme::exact_ou) {
              for (std::size_t k = 0; k < dim; ++k) {
                const double z = rng::normal(
                    cfg.seed, rng::Stream::dynamics, replica,
                    static_cast<std::uint32_t>(k),
                    static_cast<std::uint32_t>(step));
                state[k] = ou_mean[k] +
                           (state[k] - ou_mean[k]) * ou_decay[k] +
                           ou_noise_sd[k] * z;
              }
            } else {
              drift.likelihood_grad_raw(state, grad_lik);
              drift.prior_grad_raw(state, grad_prior);
              const double denom = 1.0 + cfg.dt * inv_n;
              for (std::size_t k = 0; k < dim; ++k) {
                const double z = rng::normal(
                    cfg.seed, rng::Stream::dynamics, replica,
                    static_cast<std::uint32_t>(k),
                    static_cast<std::uint32_t>(step));
                const double explicit_part =
                    grad_lik[k] - inv_n * grad_prior[k];
                state[k] = (state[k] + cfg.dt * explicit_part +
                            euler_noise_sd[k] * z) /
                           denom;
              }
            }

            double norm2 = 0.0;
            for (std::size_t k = 0; k < dim; ++k) norm2 += state[k] * state[k];
            if (!(norm2 <= cfg.divergence_guard * cfg.divergence_guard)) {
              const std::uint64_t tag =
                  (static_cast<std::uint64_t>(replica) << 32) |
                  static_cast<std::uint64_t>(step);
              std::uint64_t cur = first_divergence.load();
              while (tag < cur &&
                     !first_divergence.compare_exchange_weak(cur, tag)) {
              }
              return;  // chunk aborts; error raised after the join
            }

            while (rec < n_records && record_steps[rec] == step) record(rec++);
          }

          for (std::size_t k = 0; k < dim; ++k) {
            a.mode_sum[k] += state[k];
            a.mode_sum_sq[k] += state[k] * state[k];
          }
        }
      });

  if (first_divergence.load() != std::numeric_limits<std::uint64_t>::max()) {
    const std::uint64_t tag = first_divergence.load();
    const auto replica = static_cast<std::uint32_t>(tag >> 32);
    const auto step = static_cast<std::uint32_t>(tag & 0xFFFFFFFFu);
    throw SimulationDiverged(
        replica, step,
        "simulate: trajectory norm exceeded the divergence guard (replica " +
            std::to_string(replica) + ", step " + std::to_string(step) + ")");
  }

  // Deterministic reduction in chunk order.
  MomentTrace out;
  out.times.resize(n_records);
  for (std::size_t i = 0; i < n_records; ++i) {
    out.times[i] = static_cast<double>(record_steps[i]) * cfg.dt;
  }
  const double R = static_cast<double>(cfg.n_replicas);
  for (std::size_t pi = 0; pi < n_ps; ++pi) {
    auto& series = out.p_norms[cfg.moment_ps[pi]];
    series.resize(n_records);
    for (std::size_t i = 0; i < n_records; ++i) {
      double s = 0.0, s2 = 0.0;
      for (const auto& a : acc) {
        s += a.p_sum[i * n_ps + pi];
        s2 += a.p_sum_sq[i * n_ps + pi];
      }
      const double mean = s / R;
      const double var = std::max(0.0, (s2 - s * s / R) / (R - 1.0));
      series[i] = {mean, std::sqrt(var / R)};
    }
  }
  out.per_mode.resize(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    double s = 0.0, s2 = 0.0;
    for (const auto& a : acc) {
      s += a.mode_sum[k];
      s2 += a.mode_sum_sq[k];
    }
    const double mean = s / R;
    const double var = std::max(0.0, (s2 - s * s / R) / (R - 1.0));
    out.per_mode[k] = {mean, var};
  }
  return out;
}

DistanceReport stationary_check(const ModelInstance& model,
                                const SimConfig& cfg, unsigned threads) {
  DistanceReport rep;
  const AuditReport audit = audit_assumptions(model, 64, 1.0, cfg.seed ^ 0x5a);
  for (const char* name : {"A.1", "A.2", "B"}) {
    const AuditEntry* e = audit.find(name);
    if (e != nullptr && e->status == AuditEntry::Status::fail) {
      rep.refused = true;
      rep.failed_assumption = name;
      return rep;
    }
  }

  const DriftSpec drift = DriftSpec::from_model(model);
  rep.trace = simulate(drift, model.q, model.n, model.theta_star, cfg, threads,
                       &model.theta_star);
  const GaussianSpec post = exact_posterior(model);
  const double R = static_cast<double>(cfg.n_replicas);

  rep.max_abs_z = 0.0;
  rep.modes.resize(model.dim());
  for (std::size_t k = 0; k < model.dim(); ++k) {
    const auto& stat = rep.trace.per_mode[k];
    const double exact_mean = post.mean()[k];
    const double exact_var = post.cov()[k];
    const double z_mean =
        (stat.mean - exact_mean) / std::sqrt(exact_var / R);
    const double z_var = (stat.variance - exact_var) /
                         (exact_var * std::sqrt(2.0 / (R - 1.0)));
    rep.modes[k] = {stat.mean, stat.variance, exact_mean, exact_var,
                    z_mean,    z_var};
    rep.max_abs_z =
        std::max({rep.max_abs_z, std::abs(z_mean), std::abs(z_var)});
  }
  rep.pass = rep.max_abs_z < 4.0;
  return rep;
}

TailMass tail_mass_estimate(const ModelInstance& model, double radius,
                            int n_samples, SamplerKind sampler,
                            std::uint64_t seed, unsigned threads) {
  if (!(radius >= 0.0)) throw Error("tail_mass_estimate: radius must be >= 0");
  if (n_samples < 1) throw Error("tail_mass_estimate: need samples");

  const std::size_t dim = model.dim();
  const GaussianSpec post = exact_posterior(model);
  const std::size_t n_chunks =
      chunk_count(static_cast<std::size_t>(n_samples), kReplicaChunk);
  std::vector<std::uint64_t> outside(n_chunks, 0);

  TailMass out;
  if (sampler == SamplerKind::exact) {
    parallel_chunks(
        static_cast<std::size_t>(n_samples), kReplicaChunk, threads,
        [&](std::size_t chunk, std::size_t begin, std::size_t end) {
          for (std::size_t i = begin; i < end; ++i) {
            double d2 = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
              const double z =
                  rng::normal(seed, rng::Stream::sampler,
                              static_cast<std::uint32_t>(i),
                              static_cast<std::uint32_t>(k), 0);
              const double x = post.mean()[k] + std::sqrt(post.cov()[k]) * z;
              const double d = x - model.theta_star[k];
              d2 += d * d;
            }
            if (std::sqrt(d2) >= radius) ++outside[chunk];
          }
        });
  } else {
    SimConfig cfg = SimConfig::defaults_for(model, n_samples, seed);
    cfg.record_times = {cfg.t_end};
    SimConfig check_cfg = cfg;
    check_cfg.n_replicas = std::min(n_samples, 4000);
    check_cfg.seed = seed ^ 0xc3;
    const DistanceReport check = stationary_check(model, check_cfg, threads);
    if (check.refused || !check.pass) {
      out.warning =
          "langevin sampler not certified stationary (max |z| = " +
          std::to_string(check.max_abs_z) + ")";
    }
    // End states of the exact-OU chain at t_end, one replica per sample.
    const DriftSpec drift = DriftSpec::from_model(model);
    const auto n_steps =
        static_cast<std::size_t>(std::ceil(cfg.t_end / cfg.dt - 1e-12));
    const double inv_n = 1.0 / static_cast<double>(model.n);
    std::vector<double> decay(dim), mean(dim), noise_sd(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      const double rate = inv_n + drift.lin_slope[k];
      const double stat_var = (model.q[k] * inv_n) / rate;
      decay[k] = std::exp(-rate * cfg.dt);
      mean[k] = drift.lin_intercept[k] / rate;
      noise_sd[k] = std::sqrt(stat_var * (1.0 - decay[k] * decay[k]));
    }
    parallel_chunks(
        static_cast<std::size_t>(n_samples), kReplicaChunk, threads,
        [&](std::size_t chunk, std::size_t begin, std::size_t end) {
          std::vector<double> state(dim);
          for (std::size_t r = begin; r < end; ++r) {
            std::copy(model.theta_star.coeffs().begin(),
                      model.theta_star.coeffs().end(), state.begin());
            for (std::size_t step = 1; step <= n_steps; ++step) {
              for (std::size_t k = 0; k < dim; ++k) {
                const double z = rng::normal(
                    cfg.seed, rng::Stream::dynamics,
                    static_cast<std::uint32_t>(r),
                    static_cast<std::uint32_t>(k),
                    static_cast<std::uint32_t>(step));
                state[k] = mean[k] + (state[k] - mean[k]) * decay[k] +
                           noise_sd[k] * z;
              }
            }
            double d2 = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
              const double d = state[k] - model.theta_star[k];
              d2 += d * d;
            }
            if (std::sqrt(d2) >= radius) ++outside[chunk];
          }
        });
  }

  std::uint64_t total = 0;
  for (std::uint64_t c : outside) total += c;
  const double p = static_cast<double>(total) / static_cast<double>(n_samples);
  out.mass = p;
  out.se = std::sqrt(p * (1.0 - p) / static_cast<double>(n_samples));
  return out;
}

}  // namespace spdelab
