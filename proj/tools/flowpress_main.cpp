#include "flowpress/ekp.hpp"
#include "flowpress/errors.hpp"
#include "flowpress/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

using namespace flowpress;

struct CommonOpts {
    std::string preset_name;
    std::string config_file;
    std::string out_dir = ".";
};

cli::ExperimentConfig load_config(const CommonOpts& opts) {
    cli::ExperimentConfig cfg;
    if (!opts.config_file.empty()) {
        std::ifstream is(opts.config_file);
        if (!is) throw OutOfDomain("cannot open config file '" + opts.config_file + "'");
        std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
        cfg = cli::config_from_json(text);
    } else if (!opts.preset_name.empty()) {
        cfg = cli::preset(opts.preset_name);
    } else {
        throw OutOfDomain("either --preset or --config is required");
    }
    cfg.out_dir = opts.out_dir;
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--preset", opts.preset_name, "named parameter set");
    cmd->add_option("--config", opts.config_file, "config JSON file");
    cmd->add_option("--out", opts.out_dir, "output directory");
}

int finish_run(const cli::RunResult& result) {
    if (!result.invariants.ok()) {
        for (const auto& f : result.invariants.failures)
            std::cerr << "invariant failed: " << f << "\n";
        return 2;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"thermodynamic pressure laboratory for suspension flows"};
    app.require_subcommand(1);

    std::string preset_out = "-";
    std::string preset_name;
    auto* cmd_preset = app.add_subcommand("preset", "emit a named experiment config");
    cmd_preset->add_option("name", preset_name, "preset name")->required();
    cmd_preset->add_option("--out", preset_out, "output file, - for stdout");

    CommonOpts run_opts;
    auto* cmd_run = app.add_subcommand("run", "full sweep plus requested fits");
    add_common(cmd_run, run_opts);

    CommonOpts sweep_opts;
    auto* cmd_sweep = app.add_subcommand("pressure-sweep", "pressure curve only");
    add_common(cmd_sweep, sweep_opts);

    CommonOpts ekp_opts;
    auto* cmd_ekp = app.add_subcommand("ekp-fit", "restricted pressure and Holder fit");
    add_common(cmd_ekp, ekp_opts);

    CommonOpts ce_opts;
    auto* cmd_ce = app.add_subcommand("counterexample", "periodic-orbit envelope violations");
    add_common(cmd_ce, ce_opts);

    CommonOpts lb_opts;
    double lb_s = -0.01;
    auto* cmd_lb = app.add_subcommand("left-bound", "lower pressure bound for s < 0");
    add_common(cmd_lb, lb_opts);
    cmd_lb->add_option("--s", lb_s, "negative perturbation parameter");

    CommonOpts lsv_opts;
    auto* cmd_lsv = app.add_subcommand("lsv", "intermittent-map transfer-operator backend");
    add_common(cmd_lsv, lsv_opts);

    CommonOpts mom_opts;
    auto* cmd_mom = app.add_subcommand("moments", "Laplace-moment asymptotics fits");
    add_common(cmd_mom, mom_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_preset->parsed()) {
            auto cfg = cli::preset(preset_name);
            std::string text = cli::config_to_json(cfg);
            if (preset_out == "-") {
                std::cout << text;
            } else {
                std::ofstream os(preset_out, std::ios::binary);
                os << text;
            }
            return 0;
        }
        if (cmd_run->parsed()) return finish_run(cli::run(load_config(run_opts)));
        if (cmd_sweep->parsed()) {
            auto cfg = load_config(sweep_opts);
            cfg.fits.clear();
            return finish_run(cli::run(cfg));
        }
        if (cmd_ekp->parsed()) {
            auto cfg = load_config(ekp_opts);
            cfg.fits = {"ekp"};
            return finish_run(cli::run(cfg));
        }
        if (cmd_ce->parsed()) {
            auto cfg = load_config(ce_opts);
            cfg.fits = {"counterexample"};
            return finish_run(cli::run(cfg));
        }
        if (cmd_lb->parsed()) {
            auto cfg = load_config(lb_opts);
            cli::validate(cfg);
            auto table = shift::CylinderTable::synthetic(
                cfg.beta, shift::PotentialSpec{cfg.gamma, cfg.C0, cfg.C1}, cfg.N);
            auto lb = ekp::left_pressure_bound(table, lb_s);
            std::printf("{\"s\": %.17g, \"bound\": %.17g, \"left_slope_bound\": %.17g, "
                        "\"argmax_k\": %lld}\n",
                        lb_s, lb.bound, lb.left_slope_bound, (long long)lb.argmax_k);
            return 0;
        }
        if (cmd_lsv->parsed()) {
            auto cfg = load_config(lsv_opts);
            if (cfg.model_type != "lsv") throw OutOfDomain("lsv subcommand needs an lsv model");
            return finish_run(cli::run(cfg));
        }
        if (cmd_mom->parsed()) {
            auto cfg = load_config(mom_opts);
            cfg.fits = {"moments"};
            return finish_run(cli::run(cfg));
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
