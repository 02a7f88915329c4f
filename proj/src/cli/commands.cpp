#include <segm/cli/commands.hpp>
#include <segm/cli/csv.hpp>
#include <segm/parallel.hpp>
#include <segm/rng.hpp>

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace segm::cli {

using json = nlohmann::ordered_json;

namespace {

json config_echo(const RunConfig& cfg) {
    json c = json::object();
    for (const auto& [k, v] : cfg.values()) c[k] = v;
    return c;
}

json envelope(const RunConfig& cfg) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = cfg.command();
    j["config"] = config_echo(cfg);
    return j;
}

// Writes to --output or to `fallback` when it is unset.
void emit(const RunConfig& cfg, std::ostream& fallback, const std::string& text) {
    if (!cfg.has("output")) {
        fallback << text;
        return;
    }
    std::ofstream f(cfg.str("output"), std::ios::binary);
    if (!f) throw UsageError("cannot write output file '" + cfg.str("output") + "'");
    f << text;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot write output file '" + path + "'");
    f << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json vec_json(const Vector& v) {
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

unsigned threads_of(const RunConfig& cfg) {
    long t = cfg.integer("threads");
    require(t >= 0, "--threads must be nonnegative");
    return static_cast<unsigned>(t);
}

std::uint64_t seed_of(const RunConfig& cfg) {
    long s = cfg.integer("seed");
    require(s >= 0, "--seed must be nonnegative");
    return static_cast<std::uint64_t>(s);
}

Index node_index(const Dataset& data, const std::string& token) {
    const auto& names = data.column_names();
    for (std::size_t c = 0; c < names.size(); ++c)
        if (names[c] == token) return static_cast<Index>(c);
    long v = 0;
    std::istringstream in(token);
    if (!(in >> v) || !in.eof())
        throw UsageError("unknown node '" + token + "' (use a 0-based index or a column name)");
    if (v < 0 || v >= data.d())
        throw UsageError("node index " + token + " out of range for d = " + std::to_string(data.d()));
    return static_cast<Index>(v);
}

// "j,k" pairs separated by ';'.
std::vector<RowPair> parse_edges(const Dataset& data, const std::string& spec) {
    std::vector<RowPair> out;
    std::istringstream in(spec);
    std::string item;
    while (std::getline(in, item, ';')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        auto comma = item.find(',');
        if (comma == std::string::npos) throw UsageError("edge '" + item + "' must be written j,k");
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t"));
            s.erase(s.find_last_not_of(" \t") + 1);
            return s;
        };
        Index j = node_index(data, trim(item.substr(0, comma)));
        Index k = node_index(data, trim(item.substr(comma + 1)));
        if (j == k) throw UsageError("edge '" + item + "' joins a node to itself");
        out.emplace_back(std::min(j, k), std::max(j, k));
    }
    return out;
}

json edge_test_json(const Dataset& data, const EdgeTest& t) {
    json e;
    e["j"] = t.j;
    e["k"] = t.k;
    e["name_j"] = data.column_names()[static_cast<std::size_t>(t.j)];
    e["name_k"] = data.column_names()[static_cast<std::size_t>(t.k)];
    e["s_hat"] = t.s_hat;
    e["sigma_hat"] = t.sigma_hat;
    e["z"] = t.z;
    e["p_value"] = t.p_value;
    e["reject"] = t.reject;
    e["degenerate"] = t.degenerate;
    e["lambda_j"] = t.lambda_j;
    e["lambda_k"] = t.lambda_k;
    e["warnings"] = t.warnings;
    return e;
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Index r = 0; r < m.rows(); ++r) rows.push_back(vec_json(m.row(r).transpose()));
    return rows;
}

json cv_json(const CvResult& cv) {
    json c;
    c["lambda_grid"] = cv.lambda_grid;
    c["mean_losses"] = vec_json(cv.mean_losses);
    c["lambda_star"] = cv.lambda_star;
    c["star_index"] = cv.star_index;
    return c;
}

}  // namespace

Index ModelSpec::dim() const {
    switch (kind) {
        case Kind::Gaussian: return d;
        case Kind::Ising: return rows * cols;
        case Kind::Mixed: return 2 * rows * cols;
    }
    return 0;
}

Matrix ModelSpec::interactions() const {
    switch (kind) {
        case Kind::Gaussian: return gaussian_interactions(build_precision({d, mu}));
        case Kind::Ising: return ising_interactions({rows, cols, mu, random_signs, sign_seed});
        case Kind::Mixed: return mixed_interactions({rows, cols, mu, random_signs, sign_seed});
    }
    return {};
}

Dataset ModelSpec::sample(Index n, std::uint64_t seed) const {
    GibbsConfig g{burn_in, thin, seed};
    switch (kind) {
        case Kind::Gaussian: return sample_gaussian(build_precision({d, mu}), n, seed);
        case Kind::Ising: return sample_ising({rows, cols, mu, random_signs, sign_seed}, n, g);
        case Kind::Mixed: return sample_mixed({rows, cols, mu, random_signs, sign_seed}, n, g);
    }
    throw UsageError("unknown model");
}

std::string to_string(ModelSpec::Kind k) {
    switch (k) {
        case ModelSpec::Kind::Gaussian: return "gaussian";
        case ModelSpec::Kind::Ising: return "ising";
        case ModelSpec::Kind::Mixed: return "mixed";
    }
    return "gaussian";
}

ModelSpec::Kind parse_model(const std::string& s) {
    if (s == "gaussian") return ModelSpec::Kind::Gaussian;
    if (s == "ising") return ModelSpec::Kind::Ising;
    if (s == "mixed") return ModelSpec::Kind::Mixed;
    throw UsageError("unknown model '" + s + "' (expected gaussian, ising or mixed)");
}

SolverConfig solver_config(const RunConfig& cfg) {
    SolverConfig s;
    PenaltyFamily fam = parse_penalty_family(cfg.str("penalty"));
    s.penalty = PenaltySpec::make(fam, cfg.has("lambda") ? cfg.num("lambda") : 1.0);
    if (cfg.has("penalty-shape")) s.penalty.shape = cfg.num("penalty-shape");
    s.kkt_tol = cfg.num("kkt-tol");
    s.outer_max_stages = static_cast<int>(cfg.integer("max-stages"));
    s.validate();
    return s;
}

LambdaSelection lambda_selection(const RunConfig& cfg, LambdaSelection::Mode cv_mode) {
    LambdaSelection sel;
    sel.mode = cfg.has("lambda") ? LambdaSelection::Mode::Fixed : cv_mode;
    sel.cv.folds = static_cast<int>(cfg.integer("cv-folds"));
    sel.cv.grid_size = static_cast<int>(cfg.integer("cv-grid"));
    sel.cv.min_ratio = cfg.num("cv-min-ratio");
    sel.cv.seed = seed_of(cfg);
    require(sel.cv.folds >= 2, "--cv-folds must be at least 2");
    require(sel.cv.grid_size >= 1, "--cv-grid must be positive");
    require(sel.cv.min_ratio > 0 && sel.cv.min_ratio <= 1, "--cv-min-ratio must lie in (0, 1]");
    return sel;
}

EdgeTestConfig edge_test_config(const RunConfig& cfg) {
    EdgeTestConfig t;
    t.alpha = cfg.num("alpha");
    t.lambda_d = cfg.num("lambda-d");
    t.solver = solver_config(cfg);
    t.selection = lambda_selection(cfg, LambdaSelection::Mode::PerNodeCv);
    t.validate();
    return t;
}

ModelSpec model_spec(const RunConfig& cfg, std::optional<double> mu) {
    ModelSpec m;
    m.kind = parse_model(cfg.str("model"));
    m.mu = mu ? *mu : cfg.num("mu");
    m.random_signs = cfg.flag("random-signs");
    m.sign_seed = static_cast<std::uint64_t>(cfg.integer("sign-seed"));
    m.burn_in = static_cast<int>(cfg.integer("burn-in"));
    m.thin = static_cast<int>(cfg.integer("thin"));
    if (m.kind == ModelSpec::Kind::Gaussian) {
        m.d = cfg.integer("d");
    } else {
        auto [r, c] = cfg.int_pair("grid");
        require(r >= 1 && c >= 1, "--grid needs positive dimensions");
        m.rows = r;
        m.cols = c;
    }
    // Validates mu and the design (throws UsageError with the constraint).
    m.interactions();
    return m;
}

PowerTable run_power(const PowerSettings& s) {
    require(s.replicates >= 1, "--replicates must be positive");
    require(!s.mus.empty(), "power needs at least one mu");
    require(s.n >= 2, "--n must be at least 2");
    PowerTable table;
    std::vector<double> mus = s.mus;
    std::sort(mus.begin(), mus.end());
    const auto reps = static_cast<std::size_t>(s.replicates);
    for (double mu : mus) {
        ModelSpec model = s.model;
        model.mu = mu;
        model.interactions();
        require(s.j != s.k && s.j >= 0 && s.k >= 0 && s.j < model.dim() && s.k < model.dim(),
                "power edge out of range for the model");
        std::vector<ReplicateOutcome> out(reps);
        std::vector<std::string> errs(reps);
        parallel_for(reps, s.threads, [&](std::size_t r) {
            const std::uint64_t rep_seed = derive_seed(s.seed, r);
            try {
                Dataset data = model.sample(s.n, derive_seed(rep_seed, 1));
                EdgeTestConfig c = s.test;
                c.selection.cv.seed = derive_seed(rep_seed, 2);
                EdgeTest t = edge_test(data, s.j, s.k, c);
                out[r] = {t.reject, t.degenerate, false, t.p_value, t.z};
            } catch (const Error& e) {
                out[r].failed = true;
                errs[r] = "mu " + format_number(mu) + " replicate " + std::to_string(r) + ": " + e.what();
            }
        });
        PowerRow row;
        row.mu = mu;
        row.n = s.n;
        row.d = model.dim();
        row.model = to_string(model.kind);
        row.replicates = s.replicates;
        for (const auto& o : out) {
            row.rejections += o.reject;
            row.degenerate += o.degenerate;
            row.failures += o.failed;
        }
        const int denom = row.replicates - row.degenerate;
        row.rejection_rate = denom > 0 ? static_cast<double>(row.rejections) / denom : 0.0;
        row.monte_carlo_stderr =
            denom > 0 ? std::sqrt(row.rejection_rate * (1.0 - row.rejection_rate) / denom) : 0.0;
        table.rows.push_back(row);
        table.outcomes.push_back(std::move(out));
        for (auto& e : errs)
            if (!e.empty()) table.errors.push_back(std::move(e));
    }
    return table;
}

int cmd_estimate(const RunConfig& cfg, std::ostream& out) {
    require(cfg.has("input"), "--input is required for 'estimate'");
    Dataset data = load_csv(cfg.str("input"));
    SolverConfig solver = solver_config(cfg);
    const std::string rule_s = cfg.str("lambda-rule");
    LambdaSelection::Mode cv_mode;
    if (rule_s == "shared") cv_mode = LambdaSelection::Mode::SharedCv;
    else if (rule_s == "per-node") cv_mode = LambdaSelection::Mode::PerNodeCv;
    else throw UsageError("--lambda-rule must be shared or per-node, got '" + rule_s + "'");
    LambdaSelection sel = lambda_selection(cfg, cv_mode);
    Symmetrize sym = parse_symmetrize(cfg.str("symmetrize"));

    GraphEstimate g = estimate_graph(data, solver, sym, sel, threads_of(cfg));

    json j = envelope(cfg);
    json r;
    r["n"] = data.n();
    r["d"] = data.d();
    r["columns"] = data.column_names();
    r["penalty"] = {{"family", to_string(solver.penalty.family)}, {"shape", solver.penalty.shape}};
    r["symmetrize"] = to_string(sym);
    r["lambda_selection"] = sel.mode == LambdaSelection::Mode::Fixed ? "fixed" : rule_s + "-cv";
    json nodes = json::array();
    json warnings = json::array();
    for (const auto& ne : g.nodes) {
        json o;
        o["node"] = ne.node;
        o["name"] = data.column_names()[static_cast<std::size_t>(ne.node)];
        o["lambda"] = ne.lambda_used;
        o["stages"] = ne.stages_run;
        o["converged"] = ne.converged;
        o["objective_trace"] = ne.objective_trace;
        o["beta"] = vec_json(ne.beta_hat.beta);
        nodes.push_back(o);
        for (const auto& w : ne.warnings) warnings.push_back(w);
    }
    r["nodes"] = nodes;
    std::ostringstream csv;
    write_csv_row(csv, {"j", "k", "name_j", "name_k", "beta_jk", "beta_kj"});
    json edges = json::array();
    for (Index a = 0; a < data.d(); ++a) {
        for (Index b = a + 1; b < data.d(); ++b) {
            if (!g.adjacency(a, b)) continue;
            edges.push_back({a, b});
            write_csv_row(csv, {std::to_string(a), std::to_string(b), data.column_names()[static_cast<std::size_t>(a)],
                                data.column_names()[static_cast<std::size_t>(b)],
                                format_number(g.nodes[static_cast<std::size_t>(a)].beta_hat.beta[coord_of(a, b)]),
                                format_number(g.nodes[static_cast<std::size_t>(b)].beta_hat.beta[coord_of(b, a)])});
        }
    }
    r["edges"] = edges;
    json adj = json::array();
    for (Index a = 0; a < data.d(); ++a) {
        json row = json::array();
        for (Index b = 0; b < data.d(); ++b) row.push_back(static_cast<bool>(g.adjacency(a, b)));
        adj.push_back(row);
    }
    r["adjacency"] = adj;
    json cv = json::array();
    for (const auto& c : g.cv) cv.push_back(cv_json(c));
    r["cv"] = cv;
    r["warnings"] = warnings;
    j["result"] = r;
    emit(cfg, out, dump(j));
    if (cfg.has("output")) write_file(sibling_path(cfg.str("output"), ".edges.csv"), csv.str());
    return 0;
}

int cmd_test(const RunConfig& cfg, std::ostream& out) {
    require(cfg.has("input"), "--input is required for 'test'");
    Dataset data = load_csv(cfg.str("input"));
    EdgeTestConfig tc = edge_test_config(cfg);
    Correction corr = parse_correction(cfg.str("correction"));
    const unsigned threads = threads_of(cfg);
    const Index d = data.d();

    json j = envelope(cfg);
    json r;
    r["n"] = data.n();
    r["d"] = d;
    r["columns"] = data.column_names();
    r["method"] = to_string(corr);
    r["alpha"] = tc.alpha;

    if (cfg.has("edge")) {
        require(corr != Correction::Stability, "--edge cannot be combined with --correction stability");
        auto edges = parse_edges(data, cfg.str("edge"));
        require(!edges.empty(), "--edge lists no edges");
        const double threshold =
            corr == Correction::Bonferroni ? tc.alpha / static_cast<double>(d * (d - 1) / 2) : tc.alpha;
        std::set<Index> uniq;
        for (auto [a, b] : edges) {
            uniq.insert(a);
            uniq.insert(b);
        }
        std::vector<Index> nodes(uniq.begin(), uniq.end());
        json errors = json::array();
        std::vector<std::string> node_errors;
        auto fits = fit_nodes(data, nodes, tc, threads, &node_errors);
        for (auto& e : node_errors) errors.push_back(e);
        auto fit_of = [&](Index v) -> const NodeEstimate& {
            return fits[static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), v) - nodes.begin())];
        };
        json tests = json::array();
        for (auto [a, b] : edges) {
            if (fit_of(a).node < 0 || fit_of(b).node < 0) {
                errors.push_back("edge (" + std::to_string(a) + "," + std::to_string(b) + "): node estimate unavailable");
                continue;
            }
            try {
                EdgeTest t = edge_test_from_estimates(data, fit_of(a), fit_of(b), tc);
                t.reject = rejects(t, threshold);
                tests.push_back(edge_test_json(data, t));
            } catch (const Error& e) {
                errors.push_back(e.what());
            }
        }
        r["mode"] = "edges";
        r["threshold"] = threshold;
        r["tests"] = tests;
        r["errors"] = errors;
    } else {
        GraphResult g = corr == Correction::Stability
                            ? stability_select(data, tc, static_cast<int>(cfg.integer("subsamples")),
                                               static_cast<int>(cfg.integer("keep")), seed_of(cfg), threads)
                            : test_all_edges(data, tc, corr, threads);
        r["mode"] = "all";
        r["threshold"] = g.threshold;
        if (corr == Correction::Stability) {
            r["subsamples"] = g.n_subsamples;
            r["keep"] = g.keep_threshold;
            json counts = json::array();
            for (Index a = 0; a < d; ++a) {
                json row = json::array();
                for (Index b = 0; b < d; ++b) row.push_back(g.selection_counts(a, b));
                counts.push_back(row);
            }
            r["selection_counts"] = counts;
        } else {
            json tests = json::array();
            for (const auto& t : g.tests) tests.push_back(edge_test_json(data, t));
            r["tests"] = tests;
        }
        r["p_matrix"] = matrix_json(g.p_matrix);
        json edges = json::array();
        for (Index a = 0; a < d; ++a)
            for (Index b = a + 1; b < d; ++b)
                if (g.adjacency(a, b)) edges.push_back({a, b});
        r["edges"] = edges;
        r["errors"] = g.errors;
    }
    j["result"] = r;
    emit(cfg, out, dump(j));
    return 0;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
    ModelSpec model = model_spec(cfg, std::nullopt);
    const long n = cfg.integer("n");
    require(n >= 2, "--n must be at least 2");
    Dataset data = model.sample(n, seed_of(cfg));
    std::ostringstream csv;
    write_dataset(csv, data);
    emit(cfg, out, csv.str());

    if (cfg.has("output")) {
        const Matrix w = model.interactions();
        std::ostringstream truth;
        write_csv_row(truth, {"j", "k", "name_j", "name_k", "weight"});
        for (auto [a, b] : support_edges(w))
            write_csv_row(truth, {std::to_string(a), std::to_string(b), data.column_names()[static_cast<std::size_t>(a)],
                                  data.column_names()[static_cast<std::size_t>(b)], format_number(w(a, b))});
        write_file(sibling_path(cfg.str("output"), ".truth.csv"), truth.str());
        json meta = envelope(cfg);
        meta["result"] = {{"model", to_string(model.kind)}, {"n", n}, {"d", model.dim()},
                          {"edges", support_edges(w).size()}};
        // Settings the simulation designs leave open, recorded with every run.
        json model_meta = {{"edge_signs", model.random_signs ? "random" : "positive"}};
        if (model.random_signs) model_meta["sign_seed"] = model.sign_seed;
        if (model.kind != ModelSpec::Kind::Gaussian) {
            model_meta["binary_states"] = "{0,1}";
            model_meta["gibbs"] = {{"scan", "systematic"}, {"burn_in", model.burn_in}, {"thin", model.thin}};
        }
        if (model.kind == ModelSpec::Kind::Mixed) {
            model_meta["binary_nodes"] = model.rows * model.cols;
            model_meta["gaussian_conditional_variance"] = 1.0;
        }
        meta["result"]["model_settings"] = model_meta;
        write_file(sibling_path(cfg.str("output"), ".meta.json"), dump(meta));
    }
    return 0;
}

int cmd_power(const RunConfig& cfg, std::ostream& out) {
    PowerSettings s;
    s.mus = cfg.num_list("mu");
    require(!s.mus.empty(), "--mu needs at least one value");
    s.model = model_spec(cfg, *std::max_element(s.mus.begin(), s.mus.end()));
    for (double mu : s.mus) model_spec(cfg, mu);
    s.n = cfg.integer("n");
    s.replicates = static_cast<int>(cfg.integer("replicates"));
    auto [a, b] = cfg.int_pair("edge");
    s.j = std::min(a, b);
    s.k = std::max(a, b);
    s.test = edge_test_config(cfg);
    s.seed = seed_of(cfg);
    s.threads = threads_of(cfg);

    PowerTable t = run_power(s);
    std::ostringstream csv;
    write_csv_row(csv, {"mu", "n", "d", "model", "replicates", "rejection_rate", "monte_carlo_stderr", "rejections",
                        "degenerate", "failures"});
    for (const auto& r : t.rows)
        write_csv_row(csv, {format_number(r.mu), std::to_string(r.n), std::to_string(r.d), r.model,
                            std::to_string(r.replicates), format_number(r.rejection_rate),
                            format_number(r.monte_carlo_stderr), std::to_string(r.rejections),
                            std::to_string(r.degenerate), std::to_string(r.failures)});
    emit(cfg, out, csv.str());
    if (cfg.has("output")) {
        json meta = envelope(cfg);
        meta["result"] = {{"edge", {s.j, s.k}}, {"errors", t.errors}};
        write_file(sibling_path(cfg.str("output"), ".meta.json"), dump(meta));
    } else {
        for (const auto& e : t.errors) std::cerr << "warning: " << e << "\n";
    }
    return 0;
}

int run_command(const RunConfig& cfg, std::ostream& out) {
    const std::string& c = cfg.command();
    if (c == "estimate") return cmd_estimate(cfg, out);
    if (c == "test") return cmd_test(cfg, out);
    if (c == "simulate") return cmd_simulate(cfg, out);
    if (c == "power") return cmd_power(cfg, out);
    throw UsageError("unknown command '" + c + "'");
}

std::string sibling_path(const std::string& path, const std::string& suffix) {
    const auto slash = path.find_last_of('/');
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + suffix;
    return path.substr(0, dot) + suffix;
}

}  // namespace segm::cli
