// Command-line front end: synthetic data generation, birth-death and MH runs,
// exact posterior summaries and estimate-vs-exact error tables.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <edgebd/edgebd.hpp>

namespace fs = std::filesystem;
using namespace ebd;

namespace {

struct RunConfig {
    std::string command;
    std::string sampler = "bd";
    std::string data;
    bool no_header = false;
    bool labels = false;
    std::uint64_t seed = 1;
    std::size_t jumps = 100000;
    std::size_t steps = 2000000;
    double alpha = 1.0;
    std::string prior = "uniform";
    int max_parents = -1;
    double burn_in = 0.1;
    std::string holding = "expected";
    std::size_t chains = 1;
    std::string out = ".";
    std::string init;
    bool reversal = false;
    // generate
    std::string nodes = "fig1";
    std::string graph;
    std::size_t card = 4;
    std::size_t rows = 50;
    double concentration = 1.0;
    double edge_prob = 0.1;
    std::size_t max_indegree = 4;
    // exact / compare
    std::size_t top_k = 10;
    bool stationarity = false;
    std::string estimate;
    std::string exact;
};

json to_json(const RunConfig& c) {
    json j{{"command", c.command}, {"seed", c.seed}, {"generator", "mt19937_64"}, {"out", c.out}};
    if (c.command == "generate") {
        j.update({{"nodes", c.nodes}, {"graph", c.graph}, {"card", c.card}, {"rows", c.rows},
                  {"concentration", c.concentration}, {"edge_prob", c.edge_prob}, {"max_indegree", c.max_indegree}});
        return j;
    }
    j.update({{"data", c.data}, {"no_header", c.no_header}, {"alpha", c.alpha}, {"prior", c.prior},
              {"max_parents", c.max_parents}, {"labels", c.labels}});
    if (c.command == "run") {
        j.update({{"sampler", c.sampler}, {"jumps", c.jumps}, {"steps", c.steps}, {"burn_in", c.burn_in},
                  {"holding", c.holding}, {"chains", c.chains}, {"init", c.init}, {"reversal", c.reversal}});
    } else if (c.command == "exact") {
        j.update({{"top_k", c.top_k}, {"stationarity", c.stationarity}});
    } else if (c.command == "compare") {
        j.update({{"estimate", c.estimate}, {"exact", c.exact}});
    }
    return j;
}

/// Fills fields present in a JSON config file; command-line flags parsed later win.
void apply_config_file(const std::string& path, RunConfig& c) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    const json j = json::parse(in);
    auto take = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    take("sampler", c.sampler);
    take("data", c.data);
    take("no_header", c.no_header);
    take("seed", c.seed);
    take("jumps", c.jumps);
    take("steps", c.steps);
    take("alpha", c.alpha);
    take("prior", c.prior);
    take("max_parents", c.max_parents);
    take("burn_in", c.burn_in);
    take("holding", c.holding);
    take("chains", c.chains);
    take("out", c.out);
    take("init", c.init);
    take("reversal", c.reversal);
    take("labels", c.labels);
    take("nodes", c.nodes);
    take("graph", c.graph);
    take("card", c.card);
    take("rows", c.rows);
    take("concentration", c.concentration);
    take("edge_prob", c.edge_prob);
    take("max_indegree", c.max_indegree);
    take("top_k", c.top_k);
    take("stationarity", c.stationarity);
    take("estimate", c.estimate);
    take("exact", c.exact);
}

GraphPrior parse_prior(const std::string& text) {
    if (text == "uniform") return GraphPrior::uniform();
    if (text.rfind("edge:", 0) == 0) {
        std::size_t used = 0;
        const std::string num = text.substr(5);
        double beta = 0.0;
        try {
            beta = std::stod(num, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == num.size() && used > 0) return GraphPrior::edge_penalty(beta);
    }
    throw std::invalid_argument("--prior must be 'uniform' or 'edge:<beta>', got '" + text + "'");
}

ScoreOptions score_options(const RunConfig& c) {
    ScoreOptions o;
    o.alpha = c.alpha;
    o.prior = parse_prior(c.prior);
    if (c.max_parents >= 0) o.max_parents = static_cast<std::size_t>(c.max_parents);
    return o;
}

/// Files are rendered in memory, written as temporaries and renamed only once
/// every one of them has been written.
class OutputSet {
public:
    explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

    std::ostream& file(const std::string& name) {
        files_.push_back({name, std::make_unique<std::ostringstream>()});
        return *files_.back().second;
    }

    void commit() {
        std::vector<fs::path> temps;
        try {
            for (auto& [name, text] : files_) {
                const fs::path tmp = dir_ / (name + ".tmp");
                temps.push_back(tmp);
                std::ofstream out(tmp, std::ios::binary);
                out << text->str();
                if (!out.flush()) throw std::runtime_error("failed writing " + tmp.string());
            }
        } catch (...) {
            for (const auto& t : temps) fs::remove(t);
            throw;
        }
        for (std::size_t k = 0; k < files_.size(); ++k) fs::rename(temps[k], dir_ / files_[k].first);
    }

private:
    fs::path dir_;
    std::vector<std::pair<std::string, std::unique_ptr<std::ostringstream>>> files_;
};

fs::path prepare_out_dir(const std::string& out) {
    fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir)) throw std::runtime_error("output directory " + out + " cannot be created");
    const fs::path probe = dir / ".edgebd_write_probe";
    {
        std::ofstream p(probe);
        if (!p) throw std::runtime_error("output directory " + out + " is not writable");
    }
    fs::remove(probe);
    return dir;
}

void require_file(const std::string& path, const char* flag) {
    if (path.empty()) throw std::invalid_argument(std::string(flag) + " is required");
    if (!fs::is_regular_file(path)) throw std::invalid_argument(std::string(flag) + ": no such file " + path);
}

LabeledDataset load_dataset(const RunConfig& c) {
    require_file(c.data, "--data");
    return load_csv(c.data, !c.no_header);
}

Dag random_generator_dag(std::size_t n, double edge_prob, std::size_t max_indegree, std::mt19937_64& rng) {
    std::vector<node_t> order(n);
    for (std::size_t k = 0; k < n; ++k) order[k] = k;
    std::shuffle(order.begin(), order.end(), rng);
    std::bernoulli_distribution keep(edge_prob);
    Dag g(n);
    for (std::size_t b = 1; b < n; ++b) {
        for (std::size_t a = 0; a < b; ++a) {
            if (g.parent_count(order[b]) < max_indegree && keep(rng)) g.add_edge(order[a], order[b]);
        }
    }
    return g;
}

// ---- generate ----

int cmd_generate(const RunConfig& c) {
    const fs::path dir = prepare_out_dir(c.out);
    std::mt19937_64 rng(c.seed);
    Dag dag;
    if (c.nodes == "fig1") {
        dag = Dag(4, std::vector<Edge>{{0, 1}, {0, 2}, {1, 3}, {2, 3}});
    } else {
        std::size_t n = 0;
        try {
            n = std::stoul(c.nodes);
        } catch (const std::exception&) {
            throw std::invalid_argument("--nodes must be 'fig1' or a node count, got '" + c.nodes + "'");
        }
        if (n < 2) throw std::invalid_argument("--nodes needs at least 2 nodes");
        if (!c.graph.empty()) {
            require_file(c.graph, "--graph");
            std::ifstream in(c.graph);
            dag = read_edge_list(in, n);
        } else {
            dag = random_generator_dag(n, c.edge_prob, c.max_indegree, rng);
        }
    }
    if (c.card < 2) throw std::invalid_argument("--card must be at least 2");
    const auto net = random_cpts(dag, std::vector<std::size_t>(dag.size(), c.card), c.concentration, rng);
    const Dataset data = generate(net, c.rows, rng);

    const json config = to_json(c);
    OutputSet out(dir);
    auto& csv = out.file("data.csv");
    csv << "# config: " << config.dump() << '\n';
    write_csv(csv, data);
    json net_json = network_to_json(net);
    net_json["config"] = config;
    out.file("network.json") << net_json.dump(2) << '\n';
    out.commit();
    std::cout << "wrote " << data.n_rows() << " rows x " << data.n_vars() << " variables to " << (dir / "data.csv").string()
              << '\n';
    return 0;
}

// ---- run ----

struct ChainResult {
    ChainTrace trace;
    EdgeProbEstimate estimate;
    std::size_t rate_updates = 0;
    std::size_t max_rate_updates = 0;
    std::size_t accepted = 0;
    std::string error;
};

ChainResult run_chain(const RunConfig& c, const Dataset& data, const Dag& initial, std::uint64_t seed) {
    ChainResult r;
    try {
        const ScoreModel model(data, score_options(c));
        std::mt19937_64 rng(seed);
        if (c.sampler == "bd") {
            BirthDeathSampler s(initial, model, c.holding == "sampled" ? HoldingMode::sampled : HoldingMode::expected);
            r.trace = s.run(c.jumps, rng, seed);
            r.rate_updates = s.total_rate_updates();
            r.max_rate_updates = s.max_rate_updates();
        } else {
            MhChain chain(initial, model, {.allow_reversal = c.reversal});
            r.trace = chain.run(c.steps, rng, seed);
            r.accepted = chain.accepted();
        }
        r.estimate = edge_probabilities(r.trace, c.burn_in);
    } catch (const std::exception& e) {
        r.error = e.what();
    }
    return r;
}

int cmd_run(const RunConfig& c) {
    if (c.sampler != "bd" && c.sampler != "mh") throw std::invalid_argument("sampler must be bd or mh");
    if (c.holding != "expected" && c.holding != "sampled") {
        throw std::invalid_argument("--holding must be expected or sampled");
    }
    if (c.chains == 0) throw std::invalid_argument("--chains must be at least 1");
    if ((c.sampler == "bd" ? c.jumps : c.steps) == 0) throw std::invalid_argument("need at least one jump/step");
    if (!(c.burn_in >= 0.0 && c.burn_in < 1.0)) throw std::invalid_argument("--burn-in must lie in [0, 1)");
    if (!c.init.empty()) require_file(c.init, "--init");
    (void)score_options(c);
    const LabeledDataset labeled = load_dataset(c);
    const fs::path dir = prepare_out_dir(c.out);
    const Dataset& data = labeled.data;
    if (data.n_vars() < 2) throw std::invalid_argument("dataset needs at least two variables");

    Dag initial(data.n_vars());
    if (!c.init.empty()) {
        std::ifstream in(c.init);
        initial = read_edge_list(in, data.n_vars());
    }

    std::vector<ChainResult> results(c.chains);
    {
        std::vector<std::jthread> workers;
        for (std::size_t k = 0; k < c.chains; ++k) {
            workers.emplace_back([&, k] { results[k] = run_chain(c, data, initial, c.seed + k); });
        }
    }
    for (const auto& r : results) {
        if (!r.error.empty()) throw std::runtime_error(r.error);
    }

    const json config = to_json(c);
    OutputSet out(dir);
    if (c.labels) out.file("labels.json") << labels_to_json(labeled).dump(2) << '\n';
    std::vector<EdgeProbEstimate> estimates;
    std::optional<std::pair<Dag, double>> best;
    for (std::size_t k = 0; k < c.chains; ++k) {
        const auto& r = results[k];
        const std::string suffix = c.chains == 1 ? "" : "_c" + std::to_string(k);
        write_trace_csv(out.file("trace" + suffix + ".csv"), r.trace, config);
        write_score_series_csv(out.file("score_series" + suffix + ".csv"), r.trace, config);
        if (c.chains > 1) write_matrix_csv(out.file("edge_probs" + suffix + ".csv"), r.estimate.probabilities, data.names(), config);
        estimates.push_back(r.estimate);
        auto b = best_graph(r.trace);
        if (!best || b.second > best->second) best = std::move(b);
    }
    const EdgeProbEstimate pooled = pool_estimates(estimates);
    write_matrix_csv(out.file("edge_probs.csv"), pooled.probabilities, data.names(), config);

    json best_json{{"graph", dag_to_json(best->first)}, {"log_score", best->second}, {"config", config}};
    {
        const ScoreModel model(data, score_options(c));
        if (data.n_rows() > 0) best_json["aic"] = model.aic(best->first);
    }
    out.file("best_graph.json") << best_json.dump(2) << '\n';
    out.commit();

    for (std::size_t k = 0; k < c.chains; ++k) {
        const auto& r = results[k];
        const auto& last = r.trace.records.back();
        std::cout << "chain " << k << " seed " << c.seed + k << ": " << r.trace.records.size()
                  << (c.sampler == "bd" ? " jumps" : " steps") << ", final log score " << format_double(last.log_score)
                  << ", final AIC " << format_double(last.aic);
        if (c.sampler == "bd") {
            std::cout << ", rate updates/jump " << format_double(double(r.rate_updates) / double(r.trace.records.size()));
        } else {
            std::cout << ", acceptance " << format_double(double(r.accepted) / double(r.trace.records.size()));
        }
        std::cout << '\n';
    }
    std::cout << "best log score " << format_double(best->second) << "; outputs in " << dir.string() << '\n';
    return 0;
}

// ---- exact ----

int cmd_exact(const RunConfig& c) {
    (void)score_options(c);
    const LabeledDataset labeled = load_dataset(c);
    const Dataset& data = labeled.data;
    if (data.n_vars() > max_enumeration_nodes) {
        throw std::invalid_argument("exact enumeration supports at most " + std::to_string(max_enumeration_nodes) +
                                    " variables; dataset has " + std::to_string(data.n_vars()));
    }
    if (c.stationarity && data.n_vars() > 4) {
        throw std::invalid_argument("--stationarity supports at most 4 variables");
    }
    const fs::path dir = prepare_out_dir(c.out);
    const ScoreModel model(data, score_options(c));
    const ExactPosterior post = exact_posterior(model);
    const auto marginals = exact_edge_marginals(post);
    const json config = to_json(c);

    OutputSet out(dir);
    if (c.labels) out.file("labels.json") << labels_to_json(labeled).dump(2) << '\n';
    write_matrix_csv(out.file("exact_marginals.csv"), marginals, data.names(), config);
    json top = json::array();
    for (std::size_t k : post.top(c.top_k)) {
        top.push_back({{"graph", dag_to_json(post.dags[k])},
                       {"log_score", post.log_weights[k]},
                       {"probability", post.probability(k)}});
    }
    json summary{{"n_dags", post.size()}, {"log_z", post.log_z}, {"top", top}, {"config", config}};
    if (c.stationarity) summary["stationarity_residual"] = generator_stationarity_check(post, model);
    out.file("top_graphs.json") << summary.dump(2) << '\n';
    out.commit();

    std::cout << post.size() << " DAGs enumerated; log Z = " << format_double(post.log_z) << '\n';
    if (c.stationarity) {
        std::cout << "stationarity residual " << format_double(summary["stationarity_residual"].get<double>()) << '\n';
    }
    return 0;
}

// ---- compare ----

NamedMatrix read_matrix_file(const std::string& path, const char* flag) {
    require_file(path, flag);
    std::ifstream in(path);
    return read_matrix_csv(in);
}

int cmd_compare(const RunConfig& c) {
    const NamedMatrix estimate = read_matrix_file(c.estimate, "--estimate");
    NamedMatrix exact;
    if (!c.exact.empty()) {
        exact = read_matrix_file(c.exact, "--exact");
    } else {
        (void)score_options(c);
        const LabeledDataset labeled = load_dataset(c);
        if (labeled.data.n_vars() > max_enumeration_nodes) {
            throw std::invalid_argument("exact enumeration supports at most 5 variables");
        }
        const ScoreModel model(labeled.data, score_options(c));
        exact = {labeled.data.names(), exact_edge_marginals(exact_posterior(model))};
    }
    const fs::path dir = prepare_out_dir(c.out);
    const auto table = error_table(estimate.values, exact.values);

    OutputSet out(dir);
    write_matrix_csv(out.file("error_table.csv"), table, estimate.names, to_json(c));
    out.commit();

    // Two-decimal layout for reading at a glance.
    std::cout << "Node";
    for (const auto& n : estimate.names) std::cout << " | " << n;
    std::cout << '\n';
    for (std::size_t i = 0; i < table.size(); ++i) {
        std::cout << estimate.names[i];
        for (std::size_t j = 0; j < table.size(); ++j) {
            if (std::isnan(table(i, j))) {
                std::cout << " | --";
            } else {
                char buf[16];
                std::snprintf(buf, sizeof buf, "%.2f", table(i, j));
                std::cout << " | " << (buf[0] == '0' ? buf + 1 : buf);
            }
        }
        std::cout << '\n';
    }
    std::cout << "max |error| " << format_double(max_abs_error(table)) << ", mean |error| "
              << format_double(mean_abs_error(table)) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    std::string config_path;
    for (int k = 1; k + 1 < argc; ++k) {
        if (std::string(argv[k]) == "--config") config_path = argv[k + 1];
    }
    try {
        if (!config_path.empty()) apply_config_file(config_path, cfg);
    } catch (const std::exception& e) {
        std::cerr << "edgebd: error: " << e.what() << '\n';
        return 1;
    }

    CLI::App app{"Edge birth-and-death sampling of Bayesian network structures"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--config", config_path, "JSON file with default option values (flags win)");

    auto add_score_flags = [&](CLI::App* sub) {
        sub->add_option("--data", cfg.data, "categorical CSV dataset");
        sub->add_flag("--no-header", cfg.no_header, "the CSV has no header row");
        sub->add_option("--alpha", cfg.alpha, "Dirichlet hyperparameter per cell")->capture_default_str();
        sub->add_option("--prior", cfg.prior, "graph prior: uniform | edge:<beta>")->capture_default_str();
        sub->add_option("--max-parents", cfg.max_parents, "parent-set cap (-1 = none)")->capture_default_str();
    };
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", cfg.seed, "64-bit seed")->capture_default_str();
        sub->add_option("--out", cfg.out, "output directory")->capture_default_str();
    };

    auto* gen = app.add_subcommand("generate", "sample a synthetic dataset from a DAG with random CPTs");
    add_common(gen);
    gen->add_option("--nodes", cfg.nodes, "'fig1' (the four-node diamond) or a node count")->capture_default_str();
    gen->add_option("--graph", cfg.graph, "edge-list file for the generating DAG (with a node count)");
    gen->add_option("--card", cfg.card, "states per variable")->capture_default_str();
    gen->add_option("--rows", cfg.rows, "observations")->capture_default_str();
    gen->add_option("--concentration", cfg.concentration, "symmetric Dirichlet concentration of CPT rows")
        ->capture_default_str();
    gen->add_option("--edge-prob", cfg.edge_prob, "edge probability of a random generating DAG")->capture_default_str();
    gen->add_option("--max-indegree", cfg.max_indegree, "in-degree cap of a random generating DAG")
        ->capture_default_str();

    auto* run = app.add_subcommand("run", "run the birth-death (bd) or Metropolis-Hastings (mh) sampler");
    add_common(run);
    add_score_flags(run);
    run->add_flag("--labels", cfg.labels, "also write labels.json (state label -> code per variable)");
    run->add_option("sampler", cfg.sampler, "bd | mh")->check(CLI::IsMember({"bd", "mh"}));
    run->add_option("--jumps", cfg.jumps, "birth-death jumps")->capture_default_str();
    run->add_option("--steps", cfg.steps, "MH steps")->capture_default_str();
    run->add_option("--burn-in", cfg.burn_in, "fraction of records discarded")->capture_default_str();
    run->add_option("--holding", cfg.holding, "expected | sampled")->capture_default_str();
    run->add_option("--chains", cfg.chains, "independent chains run concurrently")->capture_default_str();
    run->add_option("--init", cfg.init, "edge-list file with the initial DAG (default empty)");
    run->add_flag("--reversal", cfg.reversal, "MH: include edge reversals in the neighbourhood");

    auto* exact = app.add_subcommand("exact", "enumerate all DAGs and compute the exact posterior (N <= 5)");
    add_common(exact);
    add_score_flags(exact);
    exact->add_flag("--labels", cfg.labels, "also write labels.json (state label -> code per variable)");
    exact->add_option("--top-k", cfg.top_k, "graphs listed in top_graphs.json")->capture_default_str();
    exact->add_flag("--stationarity", cfg.stationarity, "check the birth-death generator against the posterior");

    auto* compare = app.add_subcommand("compare", "error table between estimated and exact edge probabilities");
    add_common(compare);
    add_score_flags(compare);
    compare->add_option("--estimate", cfg.estimate, "edge_probs.csv from a run")->required();
    compare->add_option("--exact", cfg.exact, "exact_marginals.csv (default: computed from --data)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (gen->parsed()) {
            cfg.command = "generate";
            return cmd_generate(cfg);
        }
        if (run->parsed()) {
            cfg.command = "run";
            return cmd_run(cfg);
        }
        if (exact->parsed()) {
            cfg.command = "exact";
            return cmd_exact(cfg);
        }
        cfg.command = "compare";
        return cmd_compare(cfg);
    } catch (const std::exception& e) {
        std::cerr << "edgebd: error: " << e.what() << '\n';
        return 1;
    }
}
