#include "cdsid/commands.hpp"
#include "cdsid/scenario.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

namespace {

struct CommonOpts {
    std::string config;
    std::string out = "out";
    std::string modes;
    std::int64_t seed = -1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config, "scenario JSON file")->required();
    cmd->add_option("--out", opts.out, "output directory");
    cmd->add_option("--modes", opts.modes, "1-based mode or range, e.g. 7 or 3-10");
    cmd->add_option("--seed", opts.seed, "override the scenario seed");
}

cdsid::Scenario load(const CommonOpts& opts) {
    cdsid::Scenario s = cdsid::load_scenario(opts.config);
    if (opts.seed >= 0)
        s.seed = static_cast<std::uint64_t>(opts.seed);
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"closed-loop modal sensitivity identification for ill-conditioned "
                 "cross-directional systems"};
    app.require_subcommand(1);

    CommonOpts gen_sys, gen_dist, open_loop, bounds, identify, report;
    add_common(app.add_subcommand("gen-system", "write the response model files"), gen_sys);
    add_common(app.add_subcommand("gen-disturbance", "write disturbance and noise records"),
               gen_dist);
    add_common(app.add_subcommand("open-loop", "write per-mode open-loop spectral densities"),
               open_loop);
    add_common(app.add_subcommand("bounds", "write per-mode reference amplitude bounds"), bounds);
    add_common(app.add_subcommand("identify", "run the full identification pipeline"), identify);
    add_common(app.add_subcommand("report", "print a table from an identify run"), report);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("gen-system"))
            return cdsid::cmd_gen_system(load(gen_sys), gen_sys.out);
        if (app.got_subcommand("gen-disturbance"))
            return cdsid::cmd_gen_disturbance(load(gen_dist), gen_dist.out);
        if (app.got_subcommand("open-loop"))
            return cdsid::cmd_open_loop(load(open_loop), open_loop.out);
        if (app.got_subcommand("bounds"))
            return cdsid::cmd_bounds(load(bounds), bounds.out);
        if (app.got_subcommand("identify")) {
            cdsid::Scenario s = load(identify);
            const cdsid::ResponseModel probe = s.resolve_model();  // fail before any output
            auto subset = cdsid::parse_mode_range(identify.modes, probe.n_y);
            return cdsid::cmd_identify(s, identify.out, subset);
        }
        if (app.got_subcommand("report"))
            return cdsid::cmd_report(load(report), report.out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cdsid::kExitError;
    }
    return cdsid::kExitError;
}
