#include "flowpress/experiment.hpp"

#include "flowpress/errors.hpp"
#include "flowpress/oracle.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace flowpress::cli {

using json = nlohmann::ordered_json;
using shift::CylinderTable;
using shift::PotentialSpec;

std::vector<double> sweep_grid(const SweepSpec& spec) {
    if (spec.spacing == "log") return log_grid(spec.s_min, spec.s_max, spec.points);
    std::vector<double> g(spec.points);
    for (std::size_t i = 0; i < spec.points; ++i)
        g[i] = spec.s_min + (spec.s_max - spec.s_min) * (double)i / (double)(spec.points - 1);
    return g;
}

ExperimentConfig preset(const std::string& name) {
    ExperimentConfig cfg;
    cfg.fits = {"tail", "blowup2", "blowup3", "ekp", "moments"};
    if (name == "firstmain") {
        cfg.beta = 1.4;
        cfg.gamma = 0.45;
    } else if (name == "secmain_a") {
        cfg.beta = 1.5;
        cfg.gamma = 0.9;
    } else if (name == "secmain_b") {
        cfg.beta = 1.5;
        cfg.gamma = 0.6;
    } else if (name == "gamma1") {
        cfg.beta = 1.5;
        cfg.gamma = 1.0;
        cfg.fits.push_back("counterexample");
    } else if (name == "lsv_demo") {
        cfg.model_type = "lsv";
        cfg.alpha = 0.75;
        cfg.gamma = 1.0;
        cfg.N = 2000;
        cfg.grid = 2048;
        cfg.sweep = {0.02, 0.1, 4, "log"};
        cfg.fits = {"tail"};
    } else {
        throw UnknownPreset("unknown preset '" + name + "'");
    }
    return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["schema"] = 1;
    json model;
    model["type"] = cfg.model_type;
    if (cfg.model_type == "lsv") model["alpha"] = cfg.alpha;
    if (cfg.model_type == "synthetic") model["beta"] = cfg.beta;
    model["gamma"] = cfg.gamma;
    model["C0"] = cfg.C0;
    model["C1"] = cfg.C1;
    model["N"] = cfg.N;
    if (cfg.model_type == "lsv") model["grid"] = cfg.grid;
    j["model"] = model;
    j["sweep"] = {{"s_min", cfg.sweep.s_min},
                  {"s_max", cfg.sweep.s_max},
                  {"points", cfg.sweep.points},
                  {"spacing", cfg.sweep.spacing}};
    j["fits"] = cfg.fits;
    j["output"] = {{"dir", cfg.out_dir}, {"formats", cfg.formats}};
    return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
    json j = json::parse(text);
    ExperimentConfig cfg;
    const auto& model = j.at("model");
    cfg.model_type = model.at("type").get<std::string>();
    if (model.contains("beta")) cfg.beta = model["beta"].get<double>();
    if (model.contains("alpha")) cfg.alpha = model["alpha"].get<double>();
    cfg.gamma = model.at("gamma").get<double>();
    cfg.C0 = model.at("C0").get<double>();
    cfg.C1 = model.at("C1").get<double>();
    cfg.N = model.at("N").get<std::int64_t>();
    if (model.contains("grid")) cfg.grid = model["grid"].get<std::size_t>();
    if (j.contains("sweep")) {
        const auto& sw = j["sweep"];
        cfg.sweep.s_min = sw.value("s_min", cfg.sweep.s_min);
        cfg.sweep.s_max = sw.value("s_max", cfg.sweep.s_max);
        cfg.sweep.points = sw.value("points", cfg.sweep.points);
        cfg.sweep.spacing = sw.value("spacing", cfg.sweep.spacing);
    }
    if (j.contains("fits")) cfg.fits = j["fits"].get<std::vector<std::string>>();
    if (j.contains("output")) {
        cfg.out_dir = j["output"].value("dir", cfg.out_dir);
        if (j["output"].contains("formats"))
            cfg.formats = j["output"]["formats"].get<std::vector<std::string>>();
    }
    return cfg;
}

void validate(const ExperimentConfig& cfg) {
    if (cfg.model_type != "synthetic" && cfg.model_type != "lsv")
        throw OutOfDomain("config: model.type must be synthetic or lsv");
    if (!(cfg.sweep.s_min > 0.0) || !(cfg.sweep.s_max > cfg.sweep.s_min))
        throw OutOfDomain("config: sweep window must satisfy 0 < s_min < s_max");
    if (cfg.sweep.s_max > oracle::kDelta0)
        throw OutOfDomain("config: s_max exceeds the series window delta0 = 0.25");
    if (cfg.sweep.points < 2 || cfg.sweep.points > 4096)
        throw OutOfDomain("config: sweep points in [2, 4096]");
    if (cfg.sweep.spacing != "log" && cfg.sweep.spacing != "linear")
        throw OutOfDomain("config: spacing must be log or linear");
    for (const auto& f : cfg.fits)
        if (f != "tail" && f != "blowup2" && f != "blowup3" && f != "ekp" && f != "moments" &&
            f != "counterexample")
            throw OutOfDomain("config: unknown fit '" + f + "'");
}

namespace {

json num(double value, double err) {
    return json{{"value", value}, {"err", err}};
}

std::string fmt_row(const char* fmt, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    return buf;
}

bool wants(const ExperimentConfig& cfg, const std::string& fit) {
    for (const auto& f : cfg.fits)
        if (f == fit) return true;
    return false;
}

bool wants_format(const ExperimentConfig& cfg, const std::string& f) {
    for (const auto& x : cfg.formats)
        if (x == f) return true;
    return false;
}

std::filesystem::path emit(std::vector<std::filesystem::path>& files,
                           const std::filesystem::path& dir, const std::string& name,
                           const std::string& content) {
    std::filesystem::path p = dir / name;
    std::ofstream os(p, std::ios::binary);
    os << content;
    files.push_back(p);
    return p;
}

RunResult run_synthetic(const ExperimentConfig& cfg) {
    RunResult result;
    CylinderTable table =
        CylinderTable::synthetic(cfg.beta, PotentialSpec{cfg.gamma, cfg.C0, cfg.C1}, cfg.N);

    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);

    emit(result.files, dir, "table.json", table.sidecar_json() + "\n");
    if (wants_format(cfg, "csv") && cfg.N <= 100'000) {
        std::ostringstream os;
        table.write_csv(os);
        emit(result.files, dir, "table.csv", os.str());
    }

    std::vector<double> grid = sweep_grid(cfg.sweep);
    auto points = pressure::sweep(table, grid, 3);

    json summary;
    summary["schema"] = 1;
    summary["model"] = json::parse(table.sidecar_json());
    summary["regime"] = shift::regime_name(table.regime().label);
    summary["claimed_rho"] = num(table.regime().claimed_rho, 0.0);
    summary["a0"] = num(table.a0(), 1e-15);
    summary["tau_star"] = num(table.tau_star(), 1e-15);
    summary["psibar_star"] = num(table.psibar_star(), 1e-15);

    HardInvariantReport& inv = result.invariants;
    inv.normalization_residual = table.normalization_residual();
    if (inv.normalization_residual >= 1e-12)
        inv.failures.push_back("normalization: |sum p + tail - 1| >= 1e-12");

    // Pressure CSV plus per-point Gibbs saturation.
    std::string csv = "s,u0,d1,d2,d3,a,hF,q,err_u0\n";
    double max_gibbs = 0.0;
    double min_dd = 1e300;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& pt = points[i];
        csv += fmt_row("%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", pt.s, pt.u0,
                       pt.d1, pt.d2, pt.d3, pt.a, pt.hF, pt.q, pt.err_u0);
        oracle::TiltedMeasure m(table, pt.u0, pt.s, 1);
        double gibbs = std::abs(
            (double)(m.entropy().value + m.mean_log_base().value +
                     (Real)pt.s * m.mean_psibar().value - (Real)pt.u0 * m.mean_tau().value));
        max_gibbs = std::max(max_gibbs, gibbs);
        if (i + 1 < points.size() && i > 0) {
            double dd = (points[i + 1].u0 - points[i].u0) / (points[i + 1].s - points[i].s) -
                        (points[i].u0 - points[i - 1].u0) / (points[i].s - points[i - 1].s);
            min_dd = std::min(min_dd, dd);
        }
    }
    inv.gibbs_max_residual = max_gibbs;
    if (max_gibbs >= 1e-10) inv.failures.push_back("gibbs saturation residual >= 1e-10");
    inv.convexity_min_second_difference = (points.size() > 2) ? min_dd : 0.0;
    if (points.size() > 2 && min_dd <= 0.0)
        inv.failures.push_back("pressure convexity: nonpositive second difference");
    if (wants_format(cfg, "csv")) emit(result.files, dir, "pressure.csv", csv);

    summary["invariants"]["normalization_residual"] = num(inv.normalization_residual, 1e-18);
    summary["invariants"]["gibbs_max_residual"] = num(inv.gibbs_max_residual, 1e-14);
    summary["invariants"]["convexity_min_second_difference"] =
        num(inv.convexity_min_second_difference, 1e-14);

    double max_err_u0 = 0.0;
    for (const auto& pt : points) max_err_u0 = std::max(max_err_u0, pt.err_u0);
    summary["error_budget"]["max_err_u0"] = num(max_err_u0, 0.0);

    if (wants(cfg, "tail")) {
        auto tf = shift::fit_tail_exponent(table, 10.0, 1e4);
        summary["tail_fit"]["beta_hat"] = num(tf.beta_hat, tf.stderr_slope);
        summary["tail_fit"]["beta"] = num(cfg.beta, 0.0);
        summary["tail_fit"]["max_residual"] = num(tf.max_residual, 0.0);
    }

    for (int order : {2, 3}) {
        std::string key = (order == 2) ? "blowup2" : "blowup3";
        if (!wants(cfg, key)) continue;
        auto bf = pressure::blowup_fit(table, grid, order);
        summary[key]["fitted_exponent"] = num(bf.fitted_exponent, bf.stderr_slope);
        summary[key]["claimed_exponent"] = num(bf.claimed_exponent, 0.0);
        summary[key]["oracle_exponent"] = num(bf.oracle_exponent, 0.0);
    }

    if (wants(cfg, "ekp")) {
        auto rep = ekp::ekp_fit(table, grid);
        summary["ekp"]["rho_fit"] = num(rep.rho_fit, rep.rho_ci);
        summary["ekp"]["rho_claimed"] = num(rep.rho_claimed, 0.0);
        summary["ekp"]["rho_oracle_candidate"] = num(rep.rho_oracle_candidate, 0.0);
        summary["ekp"]["oracle_candidate_applies"] = rep.oracle_candidate_applies;
        summary["ekp"]["prefactor_fit"] = num(rep.prefactor_fit, 0.0);
        summary["ekp"]["prefactor_sqrt2sigma"] = num(rep.prefactor_sqrt2sigma, 0.0);
        summary["ekp"]["envelope_C"] = num(rep.envelope_C, 0.0);
        summary["ekp"]["qq01_max_rel"] = num(rep.qq01_max_rel, 0.0);

        auto curve = ekp::build_curve(table, grid);
        std::string ccsv = "a,q,s\n";
        double max_dd = -1e300;
        double max_dual = 0.0;
        for (std::size_t i = 0; i < curve.samples.size(); ++i) {
            const auto& csm = curve.samples[i];
            ccsv += fmt_row("%.17g,%.17g,%.17g\n", csm.a, csm.q, csm.s);
            if (i > 0 && i + 1 < curve.samples.size()) {
                const auto& l = curve.samples[i - 1];
                const auto& r = curve.samples[i + 1];
                double dd = (r.q - csm.q) / (r.a - csm.a) - (csm.q - l.q) / (csm.a - l.a);
                max_dd = std::max(max_dd, dd);
            }
        }
        // Duality probes by explicit inversion at three interior samples.
        for (std::size_t i : {curve.samples.size() / 4, curve.samples.size() / 2,
                              curve.samples.size() - 2}) {
            const auto& csm = curve.samples[i];
            auto rp = ekp::restricted_pressure(table, csm.a);
            max_dual = std::max(max_dual, std::abs(rp.q - csm.q));
        }
        inv.duality_max_residual = max_dual;
        if (max_dual >= 1e-9) inv.failures.push_back("legendre duality residual >= 1e-9");
        inv.q_concavity_max_second_difference = max_dd;
        if (max_dd > 1e-9) inv.failures.push_back("q concavity: second difference > 1e-9");
        summary["invariants"]["duality_max_residual"] = num(max_dual, 1e-14);
        summary["invariants"]["q_concavity_max_second_difference"] = num(max_dd, 1e-14);
        if (wants_format(cfg, "csv")) emit(result.files, dir, "curve.csv", ccsv);
    }

    if (wants(cfg, "moments")) {
        auto mg = log_grid(1e-4, 1e-2, 12);
        json moments = json::array();
        for (auto kind : {oracle::MomentKind::TauGammaPlus1, oracle::MomentKind::Tau2Gamma}) {
            auto mf = oracle::moment_asymptotics_check(table, kind, mg);
            json mj;
            mj["kind"] = (kind == oracle::MomentKind::TauGammaPlus1) ? "tau_gamma_plus_1"
                                                                     : "tau_2gamma";
            mj["theoretical_exponent"] = num(mf.theoretical_exponent, 0.0);
            mj["log_law"] = mf.log_law;
            mj["raw_slope"] = num(mf.raw_slope, 0.0);
            mj["singular_slope"] = num(mf.singular_slope, 0.0);
            mj["max_rel_residual"] = num(mf.max_rel_residual, 0.0);
            moments.push_back(mj);
        }
        summary["moments"] = moments;
    }

    if (wants(cfg, "counterexample")) {
        if (!table.gamma_is_one())
            throw WrongRegime("counterexample requires the gamma = 1 regime");
        std::vector<std::int64_t> ks;
        for (std::int64_t k = 1; k <= 100; ++k) ks.push_back(k);
        for (std::int64_t k : {1000, 10000, 100000, 1000000, 10000000}) ks.push_back(k);
        double rho = table.regime().claimed_rho;
        auto ce = ekp::counterexample_table(table, ks, rho, 1.0);
        std::string ccsv = "k,int_psi,free_energy,violation\n";
        for (const auto& row : ce.rows)
            ccsv += fmt_row("%lld,%.17g,%.17g,%d\n", (long long)row.k, row.int_psi,
                            row.free_energy, row.violation ? 1 : 0);
        if (wants_format(cfg, "csv")) emit(result.files, dir, "counterexample.csv", ccsv);
        summary["counterexample"]["smallest_violating_k"] = ce.smallest_violating_k;
        summary["counterexample"]["rho"] = num(rho, 0.0);
        summary["counterexample"]["C"] = num(1.0, 0.0);
    }

    auto var = pressure::variance_report(table);
    summary["variance"]["sigma2_induced"] =
        var.induced_finite ? num(var.sigma2_induced, 1e-12) : json("infinite");
    summary["variance"]["sigma2_flow"] =
        var.flow_finite ? num(var.sigma2_flow, 1e-12) : json("infinite");
    summary["variance"]["sigma2_extrapolated"] = num(var.sigma2_extrapolated, 0.0);
    summary["variance"]["extrapolation_stable"] = var.extrapolation_stable;

    summary["hard_invariants_ok"] = inv.ok();
    summary["failures"] = inv.failures;
    result.summary_json = summary.dump(2) + "\n";
    if (wants_format(cfg, "json")) emit(result.files, dir, "summary.json", result.summary_json);
    return result;
}

RunResult run_lsv(const ExperimentConfig& cfg) {
    RunResult result;
    lsv::LsvModel model =
        lsv::LsvModel::build(cfg.alpha, cfg.N, cfg.grid, PotentialSpec{cfg.gamma, cfg.C0, cfg.C1});
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);

    json summary;
    summary["schema"] = 1;
    summary["model"] = {{"type", "lsv"}, {"alpha", cfg.alpha},   {"beta", model.beta()},
                        {"gamma", cfg.gamma}, {"C0", cfg.C0},    {"C1", cfg.C1},
                        {"N", cfg.N},         {"grid", cfg.grid}};

    auto sd = lsv::leading_eigen(model, 0.0, 0.0, 1e-10);
    double lam_err = sd.residual + sd.tail_error + sd.grid_error;
    summary["lambda00"] = num(sd.lambda, lam_err);
    HardInvariantReport& inv = result.invariants;
    if (std::abs(sd.lambda - 1.0) > 1e-3)
        inv.failures.push_back("lsv: lambda(0,0) deviates from 1 beyond 1e-3");

    auto cw = lsv::cylinder_weights(model);
    summary["tail_fit"]["beta_hat"] = num(cw.beta_hat, 0.0);
    summary["tail_fit"]["beta"] = num(model.beta(), 0.0);

    std::string lcsv = "n,z_n\n";
    for (std::int64_t n = 1; n <= model.branches(); ++n)
        lcsv += fmt_row("%lld,%.17g\n", (long long)n, model.z(n));
    std::string wcsv = "n,mu_n\n";
    for (std::int64_t n = 1; n <= model.branches(); ++n)
        wcsv += fmt_row("%lld,%.17g\n", (long long)n, cw.mu[(std::size_t)n - 1]);
    std::string ecsv = "y,v\n";
    for (std::size_t i = 0; i < model.grid_size(); ++i)
        ecsv += fmt_row("%.17g,%.17g\n", model.grid()[i], sd.right_eig[i]);
    if (wants_format(cfg, "csv")) {
        emit(result.files, dir, "ladder.csv", lcsv);
        emit(result.files, dir, "weights.csv", wcsv);
        emit(result.files, dir, "eigenfunction.csv", ecsv);
    }

    // Flow pressure on the sweep grid, with the series backend on the
    // measured weights as a cross-check.  The product reduction drops the
    // dynamical covariances; their operator-computed size joins the bar.
    CylinderTable cross = CylinderTable::from_weights(
        cw.mu, PotentialSpec{cfg.gamma, cfg.C0, cfg.C1}, shift::TailLaw{model.beta(), 1.0});
    double kappa = lsv::reduction_coefficient(model);
    summary["reduction_coefficient"] = num(kappa, 0.5 * kappa);
    std::string pcsv = "s,u0,err,u0_series,err_series,consistent\n";
    json sweep = json::array();
    for (double s : sweep_grid(cfg.sweep)) {
        auto lp = lsv::lsv_flow_pressure(model, s);
        auto op = pressure::flow_pressure(cross, s);
        double series_err = op.err_u0 + 1.5 * kappa * s * s;
        bool consistent = std::abs(lp.u0 - op.u0) <= lp.err + series_err;
        pcsv += fmt_row("%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", s, lp.u0, lp.err, op.u0, series_err,
                        consistent ? 1 : 0);
        json row;
        row["s"] = s;
        row["u0"] = num(lp.u0, lp.err);
        row["u0_series"] = num(op.u0, series_err);
        row["consistent"] = consistent;
        sweep.push_back(row);
        if (!consistent) inv.failures.push_back("lsv: cross-backend pressure mismatch");
    }
    summary["pressure"] = sweep;
    if (wants_format(cfg, "csv")) emit(result.files, dir, "pressure.csv", pcsv);

    summary["hard_invariants_ok"] = inv.ok();
    summary["failures"] = inv.failures;
    result.summary_json = summary.dump(2) + "\n";
    if (wants_format(cfg, "json")) emit(result.files, dir, "summary.json", result.summary_json);
    return result;
}

} // namespace

RunResult run(const ExperimentConfig& cfg) {
    validate(cfg);
    return (cfg.model_type == "lsv") ? run_lsv(cfg) : run_synthetic(cfg);
}

} // namespace flowpress::cli
