#include <segm/cli/commands.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace {

const std::map<std::string, std::string> kHelp = {
    {"input", "data CSV (header row, numeric cells)"},
    {"output", "primary output path (stdout when omitted)"},
    {"lambda", "fixed penalty level; omit to choose by cross-validation"},
    {"cv-folds", "cross-validation folds"},
    {"cv-grid", "lambda grid size"},
    {"cv-min-ratio", "smallest grid lambda relative to lambda_max"},
    {"lambda-rule", "shared or per-node cross-validated lambda"},
    {"penalty", "capped-l1, scad, mcp or lasso"},
    {"penalty-shape", "capped-l1 c, SCAD a or MCP gamma"},
    {"symmetrize", "and | or"},
    {"seed", "master seed"},
    {"threads", "worker threads (0 = all cores)"},
    {"kkt-tol", "stationarity tolerance of the inner solver"},
    {"max-stages", "cap on multi-stage relaxation stages"},
    {"edge", "edge j,k (index or column name); repeatable"},
    {"alpha", "significance level"},
    {"correction", "none, bonferroni or stability"},
    {"lambda-d", "Dantzig constraint level"},
    {"subsamples", "stability: number of half-samples"},
    {"keep", "stability: minimum selection count"},
    {"model", "gaussian, ising or mixed"},
    {"n", "sample size"},
    {"d", "dimension (gaussian)"},
    {"grid", "grid rows and columns (ising, mixed)"},
    {"mu", "signal strength; power takes a comma list or repeats"},
    {"random-signs", "random edge signs (ising, mixed)"},
    {"sign-seed", "seed of the random sign pattern"},
    {"burn-in", "Gibbs burn-in sweeps"},
    {"thin", "Gibbs sweeps between kept samples"},
    {"replicates", "Monte Carlo replicates per mu"},
};

struct Sub {
    CLI::App* app = nullptr;
    std::map<std::string, std::vector<std::string>> raw;
    std::string config;
    bool random_signs = false;
};

void add_subcommand(CLI::App& app, const std::string& name, const std::string& desc, Sub& sub) {
    sub.app = app.add_subcommand(name, desc);
    sub.app->add_option("--config", sub.config, "key = value settings file; flags take precedence");
    for (const auto& [key, def] : segm::cli::command_defaults(name)) {
        std::string help = kHelp.count(key) ? kHelp.at(key) : key;
        if (!def.empty()) help += " [" + def + "]";
        if (key == "random-signs") {
            sub.app->add_flag("--random-signs", sub.random_signs, help);
            continue;
        }
        auto* opt = sub.app->add_option("--" + key, sub.raw[key], help);
        if (key == "grid") opt->expected(2);
        else if (key == "edge" || key == "mu") opt->expected(1)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
        else opt->expected(1);
    }
}

std::map<std::string, std::string> collect(const Sub& sub) {
    std::map<std::string, std::string> flags;
    for (const auto& [key, vals] : sub.raw) {
        if (sub.app->count("--" + key) == 0) continue;
        std::string sep = key == "edge" ? ";" : ",";
        std::string joined;
        for (std::size_t i = 0; i < vals.size(); ++i) joined += (i ? sep : "") + vals[i];
        flags[key] = joined;
    }
    if (segm::cli::command_defaults(sub.app->get_name()).count("random-signs") && sub.app->count("--random-signs")) flags["random-signs"] = sub.random_signs ? "true" : "false";
    return flags;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pairwise pseudo-likelihood estimation and edge testing for semiparametric graphical models"};
    app.require_subcommand(1);
    Sub estimate, test, simulate, power;
    add_subcommand(app, "estimate", "estimate the graph node by node", estimate);
    add_subcommand(app, "test", "edge tests: single edges, all edges, Bonferroni or stability", test);
    add_subcommand(app, "simulate", "draw a dataset from a simulation design", simulate);
    add_subcommand(app, "power", "Monte Carlo rejection rates over a mu grid", power);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        for (Sub* s : {&estimate, &test, &simulate, &power}) {
            if (!s->app->parsed()) continue;
            auto cfg = segm::cli::resolve_config(s->app->get_name(), collect(*s), s->config);
            return segm::cli::run_command(cfg, std::cout);
        }
    } catch (const segm::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const segm::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const segm::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 2;
}
