// runner.hpp — config-driven experiment commands behind the CLI
#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qtb/csv.hpp"
#include "qtb/decoherence.hpp"
#include "qtb/plot_svg.hpp"
#include "qtb/serialize.hpp"

namespace qtb {

// Enumerated exit codes; 1 is reserved for unexpected internal errors.
inline constexpr int exit_ok = 0;
inline constexpr int exit_internal = 1;
inline constexpr int exit_config = 2;
inline constexpr int exit_precondition = 3;
inline constexpr int exit_check = 4;

// A requested internal check did not hold; the run itself completed.
struct CheckFailure : std::runtime_error {
    explicit CheckFailure(const std::string& what) : std::runtime_error(what) {}
};

struct RunOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> format;    // csv | csv+plot
    std::optional<std::string> eps_mode;  // finite | limit
};

namespace detail {

// Everything a command needs after defaults are resolved. The echo object is
// the effective configuration minus filesystem paths, so reruns into another
// directory still produce identical file bytes.
struct RunContext {
    json config;
    json echo;
    std::uint64_t seed = 0;
    std::filesystem::path out;
    bool plot = false;
    std::optional<EpsilonMode> eps_override;
    std::string summary;  // accumulated report text, written at the end

    void line(const std::string& s) { summary += s + "\n"; }

    std::vector<std::string> header_comments() const {
        return {"config: " + echo.dump()};
    }

    void write_summary(const std::string& filename) const {
        std::string text = "# config: " + echo.dump() + "\n" + summary;
        write_file_atomic(out / filename, text);
    }
};

inline RunContext make_context(const std::string& command, const RunOptions& opt) {
    RunContext ctx;
    std::ifstream in(opt.config_path);
    if (!in) throw ConfigError("cannot open config file '" + opt.config_path + "'");
    try {
        ctx.config = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!ctx.config.is_object()) throw ConfigError("config root must be an object");

    ctx.seed = opt.seed ? *opt.seed : get_size_or(ctx.config, "seed", 0);
    const std::string fmt =
        opt.format ? *opt.format
                   : (ctx.config.contains("format") ? get_string(ctx.config, "format") : "csv");
    if (fmt != "csv" && fmt != "csv+plot")
        throw ConfigError("format must be \"csv\" or \"csv+plot\"");
    ctx.plot = fmt == "csv+plot";
    if (opt.eps_mode) ctx.eps_override = eps_mode_from_string(*opt.eps_mode);

    std::string out = opt.out_dir ? *opt.out_dir
                                  : (ctx.config.contains("out")
                                         ? get_string(ctx.config, "out")
                                         : std::string("."));
    ctx.out = out;
    std::error_code ec;
    std::filesystem::create_directories(ctx.out, ec);
    if (ec) throw ConfigError("cannot create output directory '" + out + "'");

    ctx.echo["command"] = command;
    ctx.echo["seed"] = ctx.seed;
    ctx.echo["format"] = fmt;
    return ctx;
}

inline std::vector<double> time_grid_from_json(const json& j) {
    if (j.is_array()) return as_double_vector(j, "times");
    if (!j.is_object()) throw ConfigError("field 'times' must be an array or {t_max, n}");
    const double t_max = get_double(j, "t_max");
    const std::size_t n = get_size(j, "n");
    if (n < 2) throw ConfigError("field 'times.n' must be >= 2");
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = t_max * double(i) / double(n - 1);
    return t;
}

inline std::string matrix_block(const std::string& name, const Matrix& m) {
    std::string s = name + ":\n";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        s += "  ";
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) s += "  ";
            s += format_complex(m(r, c));
        }
        s += "\n";
    }
    return s;
}

}  // namespace detail

// ---- decohere ----
//
// Diagonal-interaction decoherence trajectory for one off-diagonal pair.

inline int cmd_decohere(const RunOptions& opt) {
    detail::RunContext ctx = detail::make_context("decohere", opt);
    const json& cfg = ctx.config;

    const std::vector<double> es =
        detail::as_double_vector(detail::require_field(cfg, "system_energies"),
                                 "system_energies");
    std::vector<double> eb;
    if (cfg.contains("bath_energies"))
        eb = detail::as_double_vector(cfg["bath_energies"], "bath_energies");
    else
        eb.assign(detail::get_size(cfg, "n_bath"), 0.0);
    const double kt = cfg.contains("kT") ? temperature_from_json(cfg["kT"])
                                         : std::numeric_limits<double>::infinity();

    const json& jc = detail::require_field(cfg, "couplings");
    Eigen::MatrixXd couplings;
    json echo_couplings;
    if (jc.contains("matrix")) {
        couplings = real_matrix_from_json(jc["matrix"], "couplings.matrix");
        echo_couplings["matrix"] = real_matrix_to_json(couplings);
    } else {
        const std::string kind = detail::get_string(jc, "kind");
        CouplingKind ck;
        if (kind == "gaussian")
            ck = CouplingKind::gaussian;
        else if (kind == "uniform")
            ck = CouplingKind::uniform;
        else if (kind == "two_point")
            ck = CouplingKind::two_point;
        else
            throw ConfigError(
                "field 'couplings.kind' must be \"gaussian\", \"uniform\", or \"two_point\"");
        const double scale = detail::get_double(jc, "scale");
        couplings = generate_couplings(ck, Eigen::Index(es.size()), Eigen::Index(eb.size()),
                                       scale, ctx.seed);
        echo_couplings = {{"kind", kind}, {"scale", scale}};
    }

    Eigen::Index s = 0, q = 1;
    if (cfg.contains("pair")) {
        const json& jp = cfg["pair"];
        if (!jp.is_array() || jp.size() != 2)
            throw ConfigError("field 'pair' must be [s, q]");
        s = Eigen::Index(detail::as_double(jp[0], "pair"));
        q = Eigen::Index(detail::as_double(jp[1], "pair"));
    }

    RealVector esv(Eigen::Index(es.size()));
    for (std::size_t i = 0; i < es.size(); ++i) esv(Eigen::Index(i)) = es[i];
    const DiagonalInteractionSpec spec = DiagonalInteractionSpec::make(esv, eb, kt, couplings);

    const json& jt = detail::require_field(cfg, "times");
    const std::vector<double> times = detail::time_grid_from_json(jt);
    const double t_max = times.empty() ? 0.0 : times.back();
    const double burn = detail::get_double_or(cfg, "burn_in", -1.0);
    const RecurrenceScan scan = recurrence_scan(spec, s, q, t_max, times.size(), burn);

    ctx.echo["system_energies"] = es;
    ctx.echo["bath_energies"] = eb;
    ctx.echo["kT"] = temperature_to_json(kt);
    ctx.echo["couplings"] = echo_couplings;
    ctx.echo["pair"] = {s, q};
    ctx.echo["times"] = jt;
    ctx.echo["burn_in"] = scan.t_burn;

    CsvTable csv;
    csv.comments = ctx.header_comments();
    csv.header = "t,re_A,im_A,abs_A";
    double mean_abs = 0.0;
    std::vector<double> tv, av;
    for (const RecurrencePoint& p : scan.trajectory) {
        csv.add_row({p.t, p.a.real(), p.a.imag(), std::abs(p.a)});
        mean_abs += std::abs(p.a);
        tv.push_back(p.t);
        av.push_back(std::abs(p.a));
    }
    mean_abs /= double(scan.trajectory.size());
    csv.write(ctx.out / "trajectory.csv");
    if (ctx.plot)
        write_file_atomic(ctx.out / "trajectory.svg",
                          "<!-- config: " + ctx.echo.dump() + " -->\n" +
                              trajectory_plot_svg(tv, av));

    const double final_abs = std::abs(scan.trajectory.back().a);
    ctx.line("samples: " + std::to_string(scan.trajectory.size()));
    ctx.line("mean_abs_A: " + format_double(mean_abs));
    ctx.line("final_abs_A: " + format_double(final_abs));
    ctx.line("burn_in: " + format_double(scan.t_burn));
    ctx.line("recurrence_max_after_burn: " + format_double(scan.max_after_burn));
    ctx.line("recurrence_t_at_max: " + format_double(scan.t_at_max));

    std::optional<std::string> failure;
    if (cfg.contains("checks")) {
        const json& checks = cfg["checks"];
        if (checks.contains("abs_at_end_max")) {
            const double bound = detail::as_double(checks["abs_at_end_max"], "abs_at_end_max");
            const bool ok = final_abs <= bound;
            ctx.line(std::string("check abs_at_end_max: ") + (ok ? "pass" : "FAIL") + " (" +
                     format_double(final_abs) + " vs " + format_double(bound) + ")");
            if (!ok) failure = "final |A| = " + format_double(final_abs) + " exceeds " +
                               format_double(bound);
        }
    }
    ctx.write_summary("summary.txt");
    if (failure) throw CheckFailure(*failure);
    return exit_ok;
}

// ---- wwa ----
//
// Effective decay matrix for one decay spec, optional exact comparison and
// symmetry-difference report.

namespace detail {

inline void report_wwa_mode(RunContext& ctx, const ToyDecayModel& model, CsvTable& lambda_csv) {
    const DecayModelSpec& spec = model.spec;
    const EffectiveDecayModel eff = wwa_matrix(spec);

    ctx.line(std::string("eps_mode: ") + to_string(spec.epsilon_mode));
    ctx.line("epsilon_used: " + format_double(eff.epsilon_used));
    ctx.line("on_shell_window: " + format_double(eff.on_shell_window_used));
    std::string shell = "on_shell_finals:";
    for (std::size_t fidx : eff.on_shell) shell += " " + std::to_string(fidx);
    if (eff.on_shell.empty()) shell += " none";
    ctx.line(shell);
    if (eff.empty_on_shell_window)
        ctx.line("note: empty on-shell window, decay part vanishes");
    ctx.summary += matrix_block("Lambda", eff.lambda);
    ctx.summary += matrix_block("M", eff.mass);
    ctx.summary += matrix_block("Gamma", eff.decay);

    Eigen::SelfAdjointEigenSolver<Matrix> gs(eff.decay);
    std::string ev = "Gamma_eigenvalues:";
    for (Eigen::Index i = 0; i < gs.eigenvalues().size(); ++i)
        ev += " " + format_double(gs.eigenvalues()(i));
    ctx.line(ev);

    for (Eigen::Index r = 0; r < eff.lambda.rows(); ++r)
        for (Eigen::Index c = 0; c < eff.lambda.cols(); ++c)
            lambda_csv.add_row_raw(
                {std::string(to_string(spec.epsilon_mode)), std::to_string(r), std::to_string(c),
                 format_double(eff.lambda(r, c).real()), format_double(eff.lambda(r, c).imag()),
                 format_double(eff.mass(r, c).real()), format_double(eff.mass(r, c).imag()),
                 format_double(eff.decay(r, c).real()), format_double(eff.decay(r, c).imag())});
}

}  // namespace detail

inline int cmd_wwa(const RunOptions& opt) {
    detail::RunContext ctx = detail::make_context("wwa", opt);
    const json& cfg = ctx.config;

    EpsilonMode* mode_override = ctx.eps_override ? &*ctx.eps_override : nullptr;
    const ToyDecayModel model =
        decay_model_from_json(detail::require_field(cfg, "decay"), mode_override);
    const DecayModelSpec& spec = model.spec;
    const bool both_modes = cfg.contains("both_modes") && cfg["both_modes"].is_boolean() &&
                            cfg["both_modes"].get<bool>() && !ctx.eps_override;

    ctx.echo["decay"] = decay_spec_to_json(spec);
    ctx.echo["map"] = symmetry_map_to_json(model.map);
    ctx.echo["both_modes"] = both_modes;

    CsvTable lambda_csv;
    lambda_csv.comments = ctx.header_comments();
    lambda_csv.header =
        "eps_mode,row,col,re_lambda,im_lambda,re_mass,im_mass,re_gamma,im_gamma";
    detail::report_wwa_mode(ctx, model, lambda_csv);
    if (both_modes) {
        ToyDecayModel other = model;
        other.spec.epsilon_mode =
            spec.epsilon_mode == EpsilonMode::finite ? EpsilonMode::limit : EpsilonMode::finite;
        if (other.spec.epsilon_mode == EpsilonMode::finite && other.spec.epsilon <= 0.0)
            other.spec.epsilon = DecayModelSpec::grid_spacing(other.spec.final_energies) / 10.0;
        ctx.line("");
        detail::report_wwa_mode(ctx, other, lambda_csv);
    }
    lambda_csv.write(ctx.out / "lambda.csv");

    const EffectiveDecayModel eff = wwa_matrix(spec);

    // symmetry classification and Delta Lambda per conjugate pair
    const Matrix h = Matrix::Zero(Eigen::Index(spec.n_states()), Eigen::Index(spec.n_states()));
    const ClassificationReport rep = classify(spec, h, model.map);
    ctx.line("");
    ctx.line(std::string("classification: ") + to_string(rep.system_case));
    double max_delta = 0.0, max_offdiag_asym = 0.0;
    for (std::size_t k = 0; k < spec.n_initial; ++k) {
        const std::size_t kb = model.map.bar[k];
        if (kb <= k) continue;
        const DeltaLambda dl = delta_lambda_direct(spec, k, model.map);
        ctx.line("delta_lambda[" + std::to_string(k) + "," + std::to_string(kb) +
                 "]: " + format_complex(dl.value) + "  (dM " + format_double(dl.delta_m) +
                 ", dGamma " + format_double(dl.delta_gamma) + ")");
        max_delta = std::max(max_delta, std::abs(dl.value));
        max_offdiag_asym =
            std::max(max_offdiag_asym, std::abs(eff.lambda(Eigen::Index(k), Eigen::Index(kb)) -
                                                eff.lambda(Eigen::Index(kb), Eigen::Index(k))));
    }

    std::optional<std::string> failure;
    if (cfg.contains("checks")) {
        const json& checks = cfg["checks"];
        if (checks.contains("golden_rule_rel_tol")) {
            const json& dj = cfg["decay"];
            if (!dj.contains("builder") || detail::get_string(dj, "builder") != "golden_rule")
                throw ConfigError("check 'golden_rule_rel_tol' needs the golden_rule builder");
            const double g = detail::get_double(dj, "g");
            const double target = 2.0 * M_PI * g * g * spec.dos_weight;
            const double got = eff.decay(0, 0).real();
            const double rel = std::abs(got - target) / target;
            const double tol = detail::as_double(checks["golden_rule_rel_tol"],
                                                 "golden_rule_rel_tol");
            const bool ok = rel <= tol;
            ctx.line(std::string("check golden_rule: ") + (ok ? "pass" : "FAIL") + " (Gamma " +
                     format_double(got) + " vs 2 pi g^2 rho " + format_double(target) +
                     ", rel " + format_double(rel) + ")");
            if (!ok)
                failure = "Gamma deviates from the golden-rule value by " + format_double(rel);
        }
        if (checks.contains("delta_lambda_zero_tol")) {
            const double tol =
                detail::as_double(checks["delta_lambda_zero_tol"], "delta_lambda_zero_tol");
            const double scale = std::max(1e-300, max_abs(eff.lambda));
            const bool ok = max_delta <= tol * scale && max_offdiag_asym <= tol * scale;
            ctx.line(std::string("check delta_lambda_zero: ") + (ok ? "pass" : "FAIL") +
                     " (max |dLambda| " + format_double(max_delta) + ", max offdiag asymmetry " +
                     format_double(max_offdiag_asym) + ", bound " + format_double(tol * scale) +
                     ")");
            if (!ok) failure = "Delta Lambda is not zero within tolerance";
        }
    }

    // exact-evolution comparison
    if (cfg.contains("times")) {
        const std::vector<double> times = detail::time_grid_from_json(cfg["times"]);
        ctx.echo["times"] = cfg["times"];
        const WwaComparison cmp = wwa_vs_exact(spec, times);
        CsvTable surv;
        surv.comments = ctx.header_comments();
        surv.header = "t";
        for (const SurvivalCurve& c : cmp.curves)
            surv.header += ",exact_k" + std::to_string(c.initial) + ",wwa_k" +
                           std::to_string(c.initial);
        for (std::size_t i = 0; i < times.size(); ++i) {
            std::vector<std::string> row{format_double(times[i])};
            for (const SurvivalCurve& c : cmp.curves) {
                row.push_back(format_double(c.exact[i]));
                row.push_back(format_double(c.effective[i]));
            }
            surv.add_row_raw(std::move(row));
        }
        surv.write(ctx.out / "survival.csv");
        ctx.line("");
        for (const SurvivalCurve& c : cmp.curves) {
            double dev = 0.0;
            for (std::size_t i = 0; i < times.size(); ++i)
                dev = std::max(dev, std::abs(c.exact[i] - c.effective[i]));
            ctx.line("survival_k" + std::to_string(c.initial) + ": max deviation " +
                     format_double(dev) + ", fitted rate exact " +
                     format_double(c.fitted_rate_exact) + ", wwa " +
                     format_double(c.fitted_rate_effective));
        }
        if (cmp.propagator_fallback) ctx.line("note: propagator used the series fallback");
    }

    ctx.write_summary("report.txt");
    if (failure) throw CheckFailure(*failure);
    return exit_ok;
}

// ---- ensemble ----

inline int cmd_ensemble(const RunOptions& opt) {
    detail::RunContext ctx = detail::make_context("ensemble", opt);
    const json& cfg = ctx.config;

    EpsilonMode* mode_override = ctx.eps_override ? &*ctx.eps_override : nullptr;
    const ToyDecayModel model =
        decay_model_from_json(detail::require_field(cfg, "decay"), mode_override);
    const InteractionModel imodel =
        interaction_model_from_json(detail::require_field(cfg, "interaction"), model);
    const std::size_t n = detail::get_size(cfg, "n_samples");
    const std::size_t k_index = detail::get_size_or(cfg, "k_index", 0);
    const double cond_fraction = detail::get_double_or(cfg, "conditional_fraction", 0.1);

    ctx.echo["decay"] = decay_spec_to_json(model.spec);
    ctx.echo["interaction"] = interaction_model_to_json(imodel);
    ctx.echo["n_samples"] = n;
    ctx.echo["k_index"] = k_index;
    ctx.echo["conditional_fraction"] = cond_fraction;

    const ScatterResult r = run_ensemble(model.spec, imodel, n, ctx.seed, k_index);

    CsvTable csv;
    csv.comments = ctx.header_comments();
    csv.header = "sample_id,weight,dM,dGamma";
    for (const SamplePoint& s : r.samples)
        csv.add_row_raw({std::to_string(s.id), format_double(s.weight), format_double(s.dm),
                         format_double(s.dgamma)});
    csv.write(ctx.out / "scatter.csv");

    const double sd_m = std::sqrt(r.cov_mm), sd_g = std::sqrt(r.cov_gg);
    const double gamma_tol = cond_fraction * sd_g;
    const ConditionalSlice slice = conditional_slice(r, gamma_tol);

    ctx.line("samples: " + std::to_string(r.samples.size()) +
             ", rejected: " + std::to_string(r.rejected));
    ctx.line("mean: dM " + format_double(r.mean_dm) + ", dGamma " + format_double(r.mean_dgamma));
    ctx.line("cov: mm " + format_double(r.cov_mm) + ", mg " + format_double(r.cov_mg) + ", gg " +
             format_double(r.cov_gg));
    ctx.line("sd: dM " + format_double(sd_m) + ", dGamma " + format_double(sd_g));
    ctx.line("regression_slope_dM_vs_dGamma: " + format_double(r.regression_slope));
    for (const EllipseFit* e : {&r.ellipse65, &r.ellipse95}) {
        std::string s = "ellipse" + std::to_string(int(std::round(e->level * 100))) + ": ";
        if (e->degenerate)
            s += "degenerate";
        else
            s += "semi_major " + format_double(e->semi_major) + ", semi_minor " +
                 format_double(e->semi_minor) + ", angle " + format_double(e->angle);
        ctx.line(s);
    }
    ctx.line("conditional |dGamma| <= " + format_double(gamma_tol) + ": count " +
             std::to_string(slice.count) + (slice.sufficient ? "" : " (insufficient)") +
             ", sd_dM " + format_double(slice.sd_dm) + ", full sd_dM " + format_double(sd_m));

    if (ctx.plot)
        write_file_atomic(ctx.out / "scatter.svg", "<!-- config: " + ctx.echo.dump() + " -->\n" +
                                                       ensemble_plot_svg(r, gamma_tol));

    std::optional<std::string> failure;
    if (cfg.contains("checks")) {
        const json& checks = cfg["checks"];
        if (checks.contains("linearity")) {
            const json& jl = checks["linearity"];
            const double factor = detail::get_double_or(jl, "factor", 2.0);
            const double rel_tol = detail::get_double_or(jl, "rel_tol", 1e-10);
            if (imodel.kind == InteractionKind::explicit_blocks)
                throw ConfigError("check 'linearity' needs a sampled interaction model");
            InteractionModel scaled = imodel;
            scaled.scale *= factor;
            const ScatterResult r2 = run_ensemble(model.spec, scaled, n, ctx.seed, k_index);
            CsvTable csv2;
            csv2.comments = ctx.header_comments();
            csv2.comments.push_back("scale factor: " + format_double(factor));
            csv2.header = "sample_id,weight,dM,dGamma";
            double worst = 0.0;
            for (std::size_t i = 0; i < r2.samples.size(); ++i) {
                const SamplePoint& a = r.samples[i];
                const SamplePoint& b = r2.samples[i];
                csv2.add_row_raw({std::to_string(b.id), format_double(b.weight),
                                  format_double(b.dm), format_double(b.dgamma)});
                const double ref = std::max(std::abs(b.dm) + std::abs(b.dgamma), 1e-300);
                worst = std::max(worst, std::abs(b.dm - factor * a.dm) / ref);
                worst = std::max(worst, std::abs(b.dgamma - factor * a.dgamma) / ref);
            }
            csv2.write(ctx.out / "scatter_scaled.csv");
            const bool ok = worst <= rel_tol;
            ctx.line(std::string("check linearity: ") + (ok ? "pass" : "FAIL") +
                     " (max relative deviation " + format_double(worst) + " at factor " +
                     format_double(factor) + ")");
            if (!ok) failure = "sample-wise linearity violated: " + format_double(worst);
        }
        if (checks.contains("conditional_max_sd_ratio")) {
            const double bound = detail::as_double(checks["conditional_max_sd_ratio"],
                                                   "conditional_max_sd_ratio");
            const bool ok = slice.sufficient && sd_m > 0.0 && slice.sd_dm <= bound * sd_m;
            ctx.line(std::string("check conditional_sd: ") + (ok ? "pass" : "FAIL") + " (ratio " +
                     format_double(sd_m > 0.0 ? slice.sd_dm / sd_m : 0.0) + " vs bound " +
                     format_double(bound) + (slice.sufficient ? ")" : ", insufficient slice)"));
            if (!ok) failure = "conditional sd(dM) did not shrink below the requested ratio";
        }
    }

    ctx.write_summary("summary.txt");
    if (failure) throw CheckFailure(*failure);
    return exit_ok;
}

// ---- symmetry ----

inline int cmd_symmetry(const RunOptions& opt) {
    detail::RunContext ctx = detail::make_context("symmetry", opt);
    const json& cfg = ctx.config;

    EpsilonMode* mode_override = ctx.eps_override ? &*ctx.eps_override : nullptr;
    const ToyDecayModel model =
        decay_model_from_json(detail::require_field(cfg, "decay"), mode_override);
    const std::size_t n = model.spec.n_states();

    Matrix h = Matrix::Zero(Eigen::Index(n), Eigen::Index(n));
    if (cfg.contains("h")) {
        h = matrix_from_json(cfg["h"], "h");
    } else if (cfg.contains("interaction")) {
        const InteractionModel imodel = interaction_model_from_json(cfg["interaction"], model);
        std::mt19937_64 eng = substream(ctx.seed, 0);
        h = draw_interaction(model.spec, imodel, eng);
        ctx.echo["interaction"] = interaction_model_to_json(imodel);
    }

    ctx.echo["decay"] = decay_spec_to_json(model.spec);
    ctx.echo["map"] = symmetry_map_to_json(model.map);

    const ClassificationReport rep = classify(model.spec, h, model.map);
    ctx.line(std::string("classification: ") + to_string(rep.system_case));
    ctx.line(std::string("map_compatible: ") + (rep.map_compatible ? "yes" : "no"));
    ctx.line("cp_system_residual: " + format_double(rep.cp_system.residual));
    ctx.line("cpt_system_residual: " + format_double(rep.cpt_system.residual));
    ctx.line("cp_interaction_residual: " + format_double(rep.cp_interaction.residual));
    ctx.line(std::string("interaction_cp_ok: ") + (rep.interaction_assumption_ok ? "yes" : "no"));
    ctx.line(std::string("t_violating_interaction: ") +
             (rep.t_violation.t_violating ? "yes" : "no") + " (max |h - h^T| " +
             format_double(rep.t_violation.max_abs_delta) + ")");
    ctx.line(std::string("predicts_zero_delta_lambda: ") +
             (rep.predicts_zero_delta_lambda ? "yes" : "no"));
    ctx.line(std::string("predicts_symmetric_offdiagonal: ") +
             (rep.predicts_symmetric_offdiagonal ? "yes" : "no"));
    ctx.line(std::string("predicts_closed_form: ") + (rep.predicts_closed_form ? "yes" : "no"));

    std::optional<std::string> failure;
    if (cfg.contains("checks")) {
        const json& checks = cfg["checks"];
        if (checks.contains("expect")) {
            const std::string want = detail::get_string(checks, "expect");
            const std::string got = to_string(rep.system_case);
            std::string want_label;
            if (want == "cp_invariant")
                want_label = to_string(SystemSymmetryCase::cp_invariant);
            else if (want == "cp_violating_cpt_invariant")
                want_label = to_string(SystemSymmetryCase::cp_violating_cpt_invariant);
            else if (want == "unclassified")
                want_label = to_string(SystemSymmetryCase::unclassified);
            else
                throw ConfigError("check 'expect' must be cp_invariant, "
                                  "cp_violating_cpt_invariant, or unclassified");
            const bool ok = got == want_label;
            ctx.line(std::string("check expect: ") + (ok ? "pass" : "FAIL") + " (got \"" + got +
                     "\", want \"" + want_label + "\")");
            if (!ok) failure = "classification \"" + got + "\" != expected \"" + want_label + "\"";
        }
    }

    ctx.write_summary("report.txt");
    if (failure) throw CheckFailure(*failure);
    return exit_ok;
}

// ---- dispatch ----

inline int run_command(const std::string& command, const RunOptions& opt, std::ostream& err) {
    try {
        if (command == "decohere") return cmd_decohere(opt);
        if (command == "wwa") return cmd_wwa(opt);
        if (command == "ensemble") return cmd_ensemble(opt);
        if (command == "symmetry") return cmd_symmetry(opt);
        err << "unknown command '" << command << "'\n";
        return exit_config;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const CheckFailure& e) {
        err << "check failed: " << e.what() << "\n";
        return exit_check;
    } catch (const symmetry_error& e) {
        err << "precondition failure: " << e.what() << "\n";
        return exit_precondition;
    } catch (const std::logic_error& e) {
        err << "precondition failure: " << e.what() << "\n";
        return exit_precondition;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_internal;
    }
}

}  // namespace qtb
