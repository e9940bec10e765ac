#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "spdelab/certificates.hpp"
#include "spdelab/config.hpp"
#include "spdelab/langevin.hpp"
#include "spdelab/laplace.hpp"
#include "spdelab/model.hpp"
#include "spdelab/quartic.hpp"
#include "spdelab/spectral.hpp"

namespace py = pybind11;
using namespace spdelab;

namespace {

DiagonalOperator make_power(double scale, double exponent, std::size_t dim) {
  return DiagonalOperator::power(scale, exponent, dim);
}

DiagonalOperator make_explicit(const std::vector<double>& eigs) {
  return DiagonalOperator::explicit_list(eigs);
}

}  // namespace

PYBIND11_MODULE(_spdelab, m) {
  m.doc() = "Langevin-SPDE posterior laboratory on a spectrally truncated "
            "Hilbert space";

  py::class_<SpectralVector>(m, "SpectralVector")
      .def(py::init<std::vector<double>>())
      .def_property_readonly("coeffs", &SpectralVector::coeffs)
      .def_property_readonly("dim", &SpectralVector::dim)
      .def("norm", &SpectralVector::norm)
      .def_static("zeros", &SpectralVector::zeros);

  py::class_<DiagonalOperator>(m, "DiagonalOperator")
      .def_static("power", &make_power, py::arg("scale"), py::arg("exponent"),
                  py::arg("dim"))
      .def_static("explicit_list", &make_explicit, py::arg("eigs"))
      .def_property_readonly("eigs", &DiagonalOperator::eigs)
      .def_property_readonly("dim", &DiagonalOperator::dim);

  py::class_<TraceResult>(m, "TraceResult")
      .def_readonly("value", &TraceResult::value)
      .def_readonly("tail_estimate", &TraceResult::tail_estimate);

  py::class_<GaussianSpec>(m, "GaussianSpec")
      .def(py::init<SpectralVector, DiagonalOperator>())
      .def_property_readonly("mean", &GaussianSpec::mean)
      .def_property_readonly("cov", &GaussianSpec::cov);

  py::enum_<rng::Stream>(m, "Stream")
      .value("dynamics", rng::Stream::dynamics)
      .value("init", rng::Stream::init)
      .value("data", rng::Stream::data)
      .value("sampler", rng::Stream::sampler)
      .value("audit", rng::Stream::audit)
      .value("fernique", rng::Stream::fernique);

  m.def("trace", &trace);
  m.def("op_norm", &op_norm);
  m.def("cameron_martin_norm", &cameron_martin_norm);
  m.def("sample_gaussian", &sample_gaussian, py::arg("spec"), py::arg("seed"),
        py::arg("replica") = 0, py::arg("stream") = rng::Stream::sampler);

  py::class_<FerniqueReport>(m, "FerniqueReport")
      .def_readonly("finite_estimate", &FerniqueReport::finite_estimate)
      .def_readonly("alpha_bound", &FerniqueReport::alpha_bound)
      .def_readonly("finite", &FerniqueReport::finite);
  m.def("fernique_check", &fernique_check, py::arg("spec"), py::arg("alpha"),
        py::arg("n_samples"), py::arg("seed"));

  py::enum_<Coercivity>(m, "Coercivity")
      .value("certified", Coercivity::certified)
      .value("truncated_only", Coercivity::truncated_only)
      .value("vanishing", Coercivity::vanishing);

  py::class_<ModelInstance>(m, "ModelInstance")
      .def_readonly("q", &ModelInstance::q)
      .def_readonly("a", &ModelInstance::a)
      .def_readonly("theta_star", &ModelInstance::theta_star)
      .def_readonly("n", &ModelInstance::n)
      .def_readonly("data_coeffs", &ModelInstance::data_coeffs)
      .def_readonly("qaq_trace", &ModelInstance::qaq_trace)
      .def_readonly("qaq_opnorm", &ModelInstance::qaq_opnorm)
      .def_readonly("coercivity", &ModelInstance::coercivity)
      .def_readonly("coercivity_constant", &ModelInstance::coercivity_constant);

  m.def("synthesize_data", &synthesize_data, py::arg("q"), py::arg("a"),
        py::arg("theta_star"), py::arg("n"), py::arg("noise_seed"),
        py::arg("zero_noise") = false);
  m.def("exact_posterior", &exact_posterior);
  m.def("compute_map", &compute_map);

  py::class_<LikelihoodEval>(m, "LikelihoodEval")
      .def_readonly("value", &LikelihoodEval::value)
      .def_readonly("gradient_precond", &LikelihoodEval::gradient_precond)
      .def_readonly("hessian_precond", &LikelihoodEval::hessian_precond);
  m.def("eval_empirical_loglik", &eval_empirical_loglik);

  py::class_<ModelConstants>(m, "ModelConstants")
      .def_readonly("l1", &ModelConstants::l1)
      .def_readonly("mu", &ModelConstants::mu)
      .def_readonly("b", &ModelConstants::b)
      .def_readonly("eps1", &ModelConstants::eps1)
      .def_readonly("eps2", &ModelConstants::eps2);
  m.def("model_constants", &model_constants);

  py::class_<AuditEntry> audit_entry(m, "AuditEntry");
  py::enum_<AuditEntry::Status>(audit_entry, "Status")
      .value("passed", AuditEntry::Status::pass)
      .value("failed", AuditEntry::Status::fail)
      .value("vacuous", AuditEntry::Status::vacuous);
  audit_entry.def_readonly("condition", &AuditEntry::condition)
      .def_readonly("status", &AuditEntry::status)
      .def_readonly("analytic", &AuditEntry::analytic)
      .def_readonly("sampled", &AuditEntry::sampled)
      .def_readonly("witness", &AuditEntry::witness);
  py::class_<AuditReport>(m, "AuditReport")
      .def_readonly("entries", &AuditReport::entries)
      .def("all_passed", &AuditReport::all_passed);
  m.def("audit_assumptions", &audit_assumptions);
  m.def("bvm_audit", &bvm_audit);

  py::enum_<Scheme>(m, "Scheme")
      .value("exact_ou", Scheme::exact_ou)
      .value("semi_implicit_euler", Scheme::semi_implicit_euler);

  py::class_<SimConfig>(m, "SimConfig")
      .def(py::init<>())
      .def_readwrite("dt", &SimConfig::dt)
      .def_readwrite("t_end", &SimConfig::t_end)
      .def_readwrite("n_replicas", &SimConfig::n_replicas)
      .def_readwrite("scheme", &SimConfig::scheme)
      .def_readwrite("record_times", &SimConfig::record_times)
      .def_readwrite("seed", &SimConfig::seed)
      .def_readwrite("moment_ps", &SimConfig::moment_ps)
      .def_readwrite("divergence_guard", &SimConfig::divergence_guard)
      .def_static("defaults_for", &SimConfig::defaults_for);

  py::class_<MomentTrace::Estimate>(m, "MomentEstimate")
      .def_readonly("value", &MomentTrace::Estimate::value)
      .def_readonly("std_error", &MomentTrace::Estimate::std_error);
  py::class_<MomentTrace::ModeStat>(m, "ModeStat")
      .def_readonly("mean", &MomentTrace::ModeStat::mean)
      .def_readonly("variance", &MomentTrace::ModeStat::variance);
  py::class_<MomentTrace>(m, "MomentTrace")
      .def_readonly("times", &MomentTrace::times)
      .def_readonly("p_norms", &MomentTrace::p_norms)
      .def_readonly("per_mode", &MomentTrace::per_mode);

  py::class_<DriftSpec>(m, "DriftSpec")
      .def_static("from_model", &DriftSpec::from_model);

  m.def(
      "simulate",
      [](const DriftSpec& drift, const DiagonalOperator& q, long n,
         const SpectralVector& init, const SimConfig& cfg, unsigned threads) {
        return simulate(drift, q, n, init, cfg, threads);
      },
      py::arg("drift"), py::arg("q"), py::arg("n"), py::arg("theta_init"),
      py::arg("cfg"), py::arg("threads") = 1);

  py::class_<DistanceReport::ModeRow>(m, "DistanceModeRow")
      .def_readonly("mean", &DistanceReport::ModeRow::mean)
      .def_readonly("variance", &DistanceReport::ModeRow::variance)
      .def_readonly("exact_mean", &DistanceReport::ModeRow::exact_mean)
      .def_readonly("exact_variance", &DistanceReport::ModeRow::exact_variance)
      .def_readonly("z_mean", &DistanceReport::ModeRow::z_mean)
      .def_readonly("z_var", &DistanceReport::ModeRow::z_var);
  py::class_<DistanceReport>(m, "DistanceReport")
      .def_readonly("refused", &DistanceReport::refused)
      .def_readonly("failed_assumption", &DistanceReport::failed_assumption)
      .def_readonly("max_abs_z", &DistanceReport::max_abs_z)
      .def_readonly("pass_", &DistanceReport::pass)
      .def_readonly("modes", &DistanceReport::modes);
  m.def("stationary_check", &stationary_check, py::arg("model"),
        py::arg("cfg"), py::arg("threads") = 1);

  py::enum_<SamplerKind>(m, "SamplerKind")
      .value("exact", SamplerKind::exact)
      .value("langevin", SamplerKind::langevin);
  py::class_<TailMass>(m, "TailMass")
      .def_readonly("mass", &TailMass::mass)
      .def_readonly("se", &TailMass::se)
      .def_readonly("warning", &TailMass::warning);
  m.def("tail_mass_estimate", &tail_mass_estimate, py::arg("model"),
        py::arg("radius"), py::arg("n_samples"), py::arg("sampler"),
        py::arg("seed"), py::arg("threads") = 1);

  py::class_<ScalarFn>(m, "ScalarFn")
      .def_static("power", &ScalarFn::power)
      .def_static("tabulated", &ScalarFn::tabulated)
      .def("__call__", &ScalarFn::operator());

  py::class_<StrongRateInputs>(m, "StrongRateInputs")
      .def(py::init<>())
      .def_readwrite("tr_q", &StrongRateInputs::tr_q)
      .def_readwrite("q_opnorm", &StrongRateInputs::q_opnorm)
      .def_readwrite("mu", &StrongRateInputs::mu)
      .def_readwrite("b", &StrongRateInputs::b)
      .def_readwrite("eps1", &StrongRateInputs::eps1)
      .def_readwrite("eps2", &StrongRateInputs::eps2)
      .def_readwrite("n", &StrongRateInputs::n)
      .def_readwrite("delta", &StrongRateInputs::delta)
      .def_readwrite("c_universal", &StrongRateInputs::c_universal);

  py::class_<WeakRateInputs>(m, "WeakRateInputs")
      .def(py::init<>())
      .def_readwrite("psi", &WeakRateInputs::psi)
      .def_readwrite("zeta", &WeakRateInputs::zeta)
      .def_readwrite("eps", &WeakRateInputs::eps)
      .def_readwrite("b", &WeakRateInputs::b)
      .def_readwrite("tr_q", &WeakRateInputs::tr_q)
      .def_readwrite("q_opnorm", &WeakRateInputs::q_opnorm)
      .def_readwrite("n", &WeakRateInputs::n)
      .def_readwrite("delta", &WeakRateInputs::delta)
      .def_readwrite("z_max", &WeakRateInputs::z_max);

  py::class_<EmpiricalValidation>(m, "EmpiricalValidation")
      .def_readonly("tail_mass", &EmpiricalValidation::tail_mass)
      .def_readonly("se", &EmpiricalValidation::se)
      .def_readonly("delta", &EmpiricalValidation::delta)
      .def_readonly("pass_", &EmpiricalValidation::pass);
  py::class_<Certificate> cert(m, "Certificate");
  py::enum_<Certificate::Kind>(cert, "Kind")
      .value("strong", Certificate::Kind::strong)
      .value("weak", Certificate::Kind::weak);
  cert.def_readonly("kind", &Certificate::kind)
      .def_readonly("radius", &Certificate::radius)
      .def_readonly("delta", &Certificate::delta)
      .def_readonly("inputs_digest", &Certificate::inputs_digest)
      .def_readonly("terms", &Certificate::terms)
      .def_readonly("empirical_validation", &Certificate::empirical_validation)
      .def("valid", &Certificate::valid)
      .def("canonical_text", &Certificate::canonical_text);

  m.def("strong_radius", &strong_radius);
  m.def("weak_fixed_point", &weak_fixed_point);
  py::class_<W3Report>(m, "W3Report")
      .def_readonly("pass_", &W3Report::pass)
      .def_readonly("worst_margin_ineq1", &W3Report::worst_margin_ineq1)
      .def_readonly("worst_margin_ineq2", &W3Report::worst_margin_ineq2)
      .def_readonly("worst_convexity", &W3Report::worst_convexity)
      .def_readonly("first_violation_r", &W3Report::first_violation_r);
  m.def("check_w3", &check_w3, py::arg("psi"), py::arg("zeta"),
        py::arg("r_min") = 1e-2, py::arg("r_max") = 1e2, py::arg("n_grid") = 60);
  m.def("validate_certificate", &validate_certificate, py::arg("cert"),
        py::arg("model"), py::arg("n_samples"), py::arg("seed"),
        py::arg("threads") = 1);

  m.def("laplace_covariance", &laplace_covariance);
  py::enum_<HessianSource>(m, "HessianSource")
      .value("population", HessianSource::population)
      .value("empirical", HessianSource::empirical);
  py::class_<LaplacePair>(m, "LaplacePair")
      .def_readonly("posterior", &LaplacePair::posterior)
      .def_readonly("laplace", &LaplacePair::laplace)
      .def_readonly("hessian_source", &LaplacePair::hessian_source);
  m.def("make_laplace_pair", &make_laplace_pair);

  py::class_<EquivalenceReport> eq(m, "EquivalenceReport");
  py::enum_<EquivalenceReport::Verdict>(eq, "Verdict")
      .value("equivalent", EquivalenceReport::Verdict::equivalent)
      .value("singular", EquivalenceReport::Verdict::singular)
      .value("inconclusive", EquivalenceReport::Verdict::inconclusive);
  eq.def_readonly("fh1_partial_sum", &EquivalenceReport::fh1_partial_sum)
      .def_readonly("fh1_tail", &EquivalenceReport::fh1_tail)
      .def_readonly("ratio_min", &EquivalenceReport::ratio_min)
      .def_readonly("ratio_max", &EquivalenceReport::ratio_max)
      .def_readonly("sufficient_lo", &EquivalenceReport::sufficient_lo)
      .def_readonly("sufficient_hi", &EquivalenceReport::sufficient_hi)
      .def_readonly("verdict", &EquivalenceReport::verdict)
      .def_readonly("note", &EquivalenceReport::note);
  m.def("feldman_hajek_check", &feldman_hajek_check);

  py::class_<ShiftReport>(m, "ShiftReport")
      .def_readonly("in_cm", &ShiftReport::in_cm)
      .def_readonly("norm", &ShiftReport::norm)
      .def_readonly("evidence", &ShiftReport::evidence);
  py::class_<DecayLaw>(m, "DecayLaw")
      .def_static("power", &DecayLaw::power);
  m.def("cameron_martin_shift_check", &cameron_martin_shift_check,
        py::arg("q"), py::arg("shift"),
        py::arg("shift_law") = std::optional<DecayLaw>());

  m.def("kl_commuting_gaussians", &kl_commuting_gaussians);

  py::class_<BoundInputs>(m, "BoundInputs")
      .def(py::init<>())
      .def_readwrite("a_smooth", &BoundInputs::a_smooth)
      .def_readwrite("eps1_2", &BoundInputs::eps1_2)
      .def_readwrite("eps2_2", &BoundInputs::eps2_2)
      .def_readwrite("l2", &BoundInputs::l2)
      .def_readwrite("alpha", &BoundInputs::alpha)
      .def_readwrite("sigma", &BoundInputs::sigma)
      .def_readwrite("lambda_min", &BoundInputs::lambda_min)
      .def_readwrite("q_opnorm", &BoundInputs::q_opnorm)
      .def_readwrite("tr_q", &BoundInputs::tr_q)
      .def_readwrite("n", &BoundInputs::n)
      .def_readwrite("delta", &BoundInputs::delta)
      .def_readwrite("c1", &BoundInputs::c1)
      .def_readwrite("c2", &BoundInputs::c2);
  py::class_<BoundResult>(m, "BoundResult")
      .def_readonly("total", &BoundResult::total)
      .def_readonly("term1", &BoundResult::term1)
      .def_readonly("term2", &BoundResult::term2)
      .def_readonly("advisory_o1n", &BoundResult::advisory_o1n);
  m.def("h_bound", &h_bound);
  m.def("k_bound", &k_bound);

  py::class_<QuarticPerturbation>(m, "QuarticPerturbation")
      .def(py::init<double, SpectralVector, std::vector<double>>())
      .def_readonly("kappa", &QuarticPerturbation::kappa);
  m.def("perturbed_map", &perturbed_map);
  m.def("perturbed_kl_vs_gaussian_quadrature",
        &perturbed_kl_vs_gaussian_quadrature);
}
