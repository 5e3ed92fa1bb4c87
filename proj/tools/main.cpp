#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cbsp/cli.hpp"
#include "cbsp/errors.hpp"
#include "cbsp/util.hpp"

namespace {

struct Overrides {
    std::string config;
    std::string topology;
    std::vector<std::string> scenarios;  // id=path
    std::string output_dir;
    std::string metric;
    std::string weighting;
    std::string booster_scaling;
    std::string partition;
    std::string critical_rule;
    std::vector<std::string> pool_include, pool_exclude;
    int n_stations = 0;
    int seeds = 0;
    int jobs = -1;
    double dt_wq_s = 0.0;
    double dt_hydraulic_s = -1.0;
    double booster_flow_m3s = 0.0;
};

// Every subcommand takes the same options; anything not given on the command
// line keeps the config file's (or built-in) value.
void add_options(CLI::App* cmd, Overrides& o) {
    cmd->add_option("-c,--config", o.config, "run configuration JSON file");
    cmd->add_option("--topology", o.topology, "network description (INP)");
    cmd->add_option("--scenario", o.scenarios,
                    "hydraulic scenario as id=tracefile; repeatable");
    cmd->add_option("--output-dir", o.output_dir, "directory for report files");
    cmd->add_option("--n-stations", o.n_stations, "booster stations to place per step");
    cmd->add_option("--metric", o.metric, "controllability metric: trace, logdet or both");
    cmd->add_option("--dt-wq-s", o.dt_wq_s, "water-quality step in seconds");
    cmd->add_option("--dt-hydraulic-s", o.dt_hydraulic_s,
                    "expected hydraulic step in seconds (0 = infer)");
    cmd->add_option("--pool-include", o.pool_include, "restrict candidates to these nodes");
    cmd->add_option("--pool-exclude", o.pool_exclude, "drop these nodes from the pool");
    cmd->add_option("--weighting", o.weighting, "set weighting flavor: sc, dimsrs or both");
    cmd->add_option("--critical-rule", o.critical_rule,
                    "extra critical cells: peak-demand or empty");
    cmd->add_option("--seeds", o.seeds, "random subsets per step in compare");
    cmd->add_option("--booster-scaling", o.booster_scaling,
                    "injection scaling: auto, fixed or unit");
    cmd->add_option("--booster-flow-m3s", o.booster_flow_m3s,
                    "injection flow for --booster-scaling fixed");
    cmd->add_option("--partition", o.partition, "district map JSON for zoned placement");
    cmd->add_option("--jobs", o.jobs, "worker threads (0 = one per core)");
}

cbsp::RunConfig resolve(const CLI::App* cmd, const Overrides& o) {
    cbsp::RunConfig cfg;
    if (!o.config.empty()) cfg = cbsp::load_run_config(o.config);
    if (cmd->count("--topology")) cfg.topology = o.topology;
    if (cmd->count("--scenario")) {
        cfg.scenarios.clear();
        for (const std::string& s : o.scenarios) {
            size_t eq = s.find('=');
            if (eq == std::string::npos || eq == 0 || eq + 1 == s.size())
                throw cbsp::ValidationError("--scenario expects id=tracefile, got '" + s + "'");
            cfg.scenarios.push_back({s.substr(0, eq), s.substr(eq + 1)});
        }
    }
    if (cmd->count("--output-dir")) cfg.output_dir = o.output_dir;
    if (cmd->count("--n-stations")) cfg.n_stations = o.n_stations;
    if (cmd->count("--metric")) cfg.metric = o.metric;
    if (cmd->count("--dt-wq-s")) cfg.dt_wq_s = o.dt_wq_s;
    if (cmd->count("--dt-hydraulic-s")) cfg.dt_hydraulic_s = o.dt_hydraulic_s;
    if (cmd->count("--pool-include")) cfg.pool_include = o.pool_include;
    if (cmd->count("--pool-exclude")) cfg.pool_exclude = o.pool_exclude;
    if (cmd->count("--weighting")) cfg.weighting = o.weighting;
    if (cmd->count("--critical-rule")) cfg.critical_rule = o.critical_rule;
    if (cmd->count("--seeds")) cfg.seeds = o.seeds;
    if (cmd->count("--booster-scaling")) cfg.booster_scaling = o.booster_scaling;
    if (cmd->count("--booster-flow-m3s")) cfg.booster_flow_m3s = o.booster_flow_m3s;
    if (cmd->count("--partition")) cfg.partition = o.partition;
    if (cmd->count("--jobs")) cfg.jobs = o.jobs;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("booster station placement by network controllability (") +
                 cbsp::kToolName + " " + cbsp::kToolVersion + ")"};
    app.require_subcommand(1);

    Overrides o;
    add_options(app.add_subcommand("validate",
                                   "check the topology, traces and model preconditions"),
                o);
    add_options(app.add_subcommand("place", "greedy station placement per hydraulic step"), o);
    add_options(app.add_subcommand("weigh", "aggregate placed sets into weighted candidates"),
                o);
    add_options(app.add_subcommand("compare", "greedy versus random and whole-pool baselines"),
                o);
    add_options(app.add_subcommand("backup", "replacement pick after a station failure"), o);
    add_options(app.add_subcommand("summary", "sizes, steps and balance digest as JSON"), o);

    CLI11_PARSE(app, argc, argv);
    const CLI::App* sub = app.get_subcommands().front();

    try {
        cbsp::RunConfig cfg = resolve(sub, o);
        return cbsp::run_command(sub->get_name(), cfg, std::cout, std::cerr);
    } catch (const cbsp::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const cbsp::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
