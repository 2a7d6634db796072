#include "fedni/harness.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <chrono>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "fedni/errors.hpp"
#include "fedni/graphcons.hpp"

namespace fedni {

using ordered_json = nlohmann::ordered_json;

Mode mode_from_name(const std::string& name) {
    if (name == "fedni") return Mode::fedni;
    if (name == "fedgcn") return Mode::fedgcn;
    if (name == "localgcn") return Mode::localgcn;
    if (name == "centralgcn") return Mode::centralgcn;
    if (name == "random_inpaint") return Mode::random_inpaint;
    throw config_error("unknown mode: " + name);
}

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::fedni: return "fedni";
        case Mode::fedgcn: return "fedgcn";
        case Mode::localgcn: return "localgcn";
        case Mode::centralgcn: return "centralgcn";
        case Mode::random_inpaint: return "random_inpaint";
    }
    return "?";
}

namespace {
bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw config_error("expected boolean, got '" + v + "'");
}
} // namespace

void ExperimentConfig::set_key(const std::string& key, const std::string& value) {
    try {
        if (key == "mode") mode = mode_from_name(value);
        else if (key == "inpaint_fl") inpaint_fl = inpaint_fl_from_name(value);
        else if (key == "masking") {
            if (value == "bfs") masking = MaskingMode::bfs;
            else if (value == "random") masking = MaskingMode::random;
            else throw config_error("unknown masking mode: " + value);
        }
        else if (key == "use_discriminator") use_discriminator = parse_bool(value);
        else if (key == "use_edge_prediction") use_edge_prediction = parse_bool(value);
        else if (key == "alpha") alpha = std::stod(value);
        else if (key == "beta") beta = std::stod(value);
        else if (key == "k") k = std::stoul(value);
        else if (key == "k_prime") k_prime = std::stoul(value);
        else if (key == "gamma") gamma = std::stod(value);
        else if (key == "sigma") sigma = std::stod(value);
        else if (key == "n_max") n_max = std::stod(value);
        else if (key == "clients") clients = std::stoul(value);
        else if (key == "epochs") epochs = std::stoul(value);
        else if (key == "rounds_phase1") rounds_phase1 = std::stoul(value);
        else if (key == "rounds_phase2") rounds_phase2 = std::stoul(value);
        else if (key == "lr") lr = std::stod(value);
        else if (key == "sigma_dp") sigma_dp = std::stod(value);
        else if (key == "mask_target") mask_target = std::stod(value);
        else if (key == "disc_interval") disc_interval = std::stoul(value);
        else if (key == "folds") folds = std::stoul(value);
        else if (key == "repeats") repeats = std::stoul(value);
        else if (key == "local_epochs") local_epochs = std::stoul(value);
        else if (key == "seed") seed = std::stoull(value);
        else if (key == "remerge_each_round") remerge_each_round = parse_bool(value);
        else if (key == "byte_transport") byte_transport = parse_bool(value);
        else throw config_error("unknown config key '" + key + "'");
    } catch (const std::invalid_argument&) {
        throw config_error("bad value '" + value + "' for config key '" + key + "'");
    } catch (const std::out_of_range&) {
        throw config_error("value out of range for config key '" + key + "'");
    }
    explicit_keys.insert(key);
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string key, eq, value;
        if (!(ls >> key)) continue;
        if (!(ls >> eq >> value) || eq != "=")
            throw config_error("config: expected 'key = value' at line " + std::to_string(lineno));
        cfg.set_key(key, value);
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void ExperimentConfig::validate() const {
    static const std::set<std::string> inpaint_only = {
        "inpaint_fl", "masking", "use_discriminator", "use_edge_prediction", "alpha", "beta",
        "rounds_phase1", "disc_interval", "remerge_each_round"};
    static const std::set<std::string> merge_keys = {"k_prime", "n_max", "mask_target"};

    const bool inpaint_mode = mode == Mode::fedni;
    const bool merge_mode = mode == Mode::fedni || mode == Mode::random_inpaint;
    for (const auto& key : explicit_keys) {
        if (!inpaint_mode && inpaint_only.count(key))
            throw config_error("config key '" + key + "' is not valid with mode " + mode_name(mode));
        if (!merge_mode && merge_keys.count(key))
            throw config_error("config key '" + key + "' is not valid with mode " + mode_name(mode));
    }
    if (folds < 2) throw config_error("config: folds must be >= 2");
    if (repeats < 1) throw config_error("config: repeats must be >= 1");
    if (clients < 1) throw config_error("config: clients must be >= 1");
    if (epochs < 1 || local_epochs < 1) throw config_error("config: epochs must be >= 1");
    if (lr <= 0) throw config_error("config: lr must be > 0");
    if (sigma_dp < 0) throw config_error("config: sigma_dp must be >= 0");
    if (!(mask_target > 0.0 && mask_target < 0.5))
        throw config_error("config: mask_target must be in (0, 0.5)");
    if (n_max <= 0) throw config_error("config: n_max must be > 0");
    if (alpha < 0 || beta < 0) throw config_error("config: alpha/beta must be >= 0");
}

std::map<std::string, std::string> ExperimentConfig::to_key_values() const {
    auto fmt = [](double v) {
        std::ostringstream os;
        os << v;
        return os.str();
    };
    std::map<std::string, std::string> kv;
    kv["mode"] = mode_name(mode);
    kv["inpaint_fl"] = inpaint_fl_name(inpaint_fl);
    kv["masking"] = masking == MaskingMode::bfs ? "bfs" : "random";
    kv["use_discriminator"] = use_discriminator ? "true" : "false";
    kv["use_edge_prediction"] = use_edge_prediction ? "true" : "false";
    kv["alpha"] = fmt(alpha);
    kv["beta"] = fmt(beta);
    kv["k"] = std::to_string(k);
    kv["k_prime"] = std::to_string(k_prime);
    kv["gamma"] = fmt(gamma);
    kv["sigma"] = fmt(sigma);
    kv["n_max"] = fmt(n_max);
    kv["clients"] = std::to_string(clients);
    kv["epochs"] = std::to_string(epochs);
    kv["rounds_phase1"] = std::to_string(rounds_phase1);
    kv["rounds_phase2"] = std::to_string(rounds_phase2);
    kv["lr"] = fmt(lr);
    kv["sigma_dp"] = fmt(sigma_dp);
    kv["mask_target"] = fmt(mask_target);
    kv["disc_interval"] = std::to_string(disc_interval);
    kv["folds"] = std::to_string(folds);
    kv["repeats"] = std::to_string(repeats);
    kv["local_epochs"] = std::to_string(local_epochs);
    kv["seed"] = std::to_string(seed);
    kv["remerge_each_round"] = remerge_each_round ? "true" : "false";
    kv["byte_transport"] = byte_transport ? "true" : "false";
    return kv;
}

FusedGraph random_merge(const PopulationGraph& g, std::size_t k_prime, Rng& rng) {
    FusedGraph fused;
    fused.n_real = g.n();
    // volume matched to what the trained generator typically emits: a
    // uniform {0, 1, 2} count per real node (one generated node per real
    // node on average)
    std::vector<std::size_t> parents;
    for (std::size_t i = 0; i < g.n(); ++i) {
        const std::size_t c = rng.uniform_index(3);
        for (std::size_t s = 0; s < c; ++s) parents.push_back(i);
    }
    const std::size_t n_gen = parents.size();
    if (n_gen == 0) {
        fused.graph = g;
        fused.nothing_generated = true;
        return fused;
    }
    const std::size_t n_total = g.n() + n_gen;
    PopulationGraph out;
    out.X = Matrix(n_total, g.feature_dim());
    for (std::size_t i = 0; i < g.n(); ++i)
        for (std::size_t j = 0; j < g.feature_dim(); ++j) out.X(i, j) = g.X(i, j);
    for (std::size_t s = 0; s < n_gen; ++s)
        for (std::size_t j = 0; j < g.feature_dim(); ++j) out.X(g.n() + s, j) = rng.normal();

    out.U.fields = g.U.fields;
    out.U.values = Matrix(n_total, g.U.n_fields());
    for (std::size_t i = 0; i < g.n(); ++i)
        for (std::size_t q = 0; q < g.U.n_fields(); ++q) out.U.values(i, q) = g.U.values(i, q);
    for (std::size_t s = 0; s < n_gen; ++s) {
        const std::size_t src = rng.uniform_index(g.n());
        for (std::size_t q = 0; q < g.U.n_fields(); ++q)
            out.U.values(g.n() + s, q) = g.U.values(src, q);
    }

    Matrix gen_h = g.pca.project([&] {
        Matrix gx(n_gen, g.feature_dim());
        for (std::size_t s = 0; s < n_gen; ++s)
            for (std::size_t j = 0; j < g.feature_dim(); ++j) gx(s, j) = out.X(g.n() + s, j);
        return gx;
    }());
    out.H = Matrix(n_total, g.H.cols());
    for (std::size_t i = 0; i < g.n(); ++i)
        for (std::size_t j = 0; j < g.H.cols(); ++j) out.H(i, j) = g.H(i, j);
    for (std::size_t s = 0; s < n_gen; ++s)
        for (std::size_t j = 0; j < g.H.cols(); ++j) out.H(g.n() + s, j) = gen_h(s, j);

    out.y = g.y;
    out.labeled_mask = g.labeled_mask;
    out.provenance = g.provenance;
    out.y.resize(n_total, -1);
    out.labeled_mask.resize(n_total, 0);
    out.provenance.resize(n_total, kNodeGenerated);

    out.A = Matrix(n_total, n_total);
    for (std::size_t i = 0; i < g.n(); ++i)
        for (std::size_t j = 0; j < g.n(); ++j) out.A(i, j) = g.A(i, j);
    fused.parent_of = parents;
    for (std::size_t s = 0; s < n_gen; ++s) {
        const std::size_t gi = g.n() + s;
        out.A(gi, parents[s]) = 1.0;
        for (std::size_t e = 1; e < k_prime; ++e)
            out.A(gi, rng.uniform_index(g.n())) = 1.0;
    }
    for (std::size_t i = 0; i < n_total; ++i)
        for (std::size_t j = i + 1; j < n_total; ++j) {
            const double w = std::max(out.A(i, j), out.A(j, i));
            out.A(i, j) = w;
            out.A(j, i) = w;
        }
    for (std::size_t s = 0; s < n_gen; ++s) out.A(g.n() + s, g.n() + s) += 1.0;

    out.pca = g.pca;
    out.params = g.params;
    out.sigma_used = g.sigma_used;
    out.a_norm = normalized_adjacency(out.A);
    fused.graph = std::move(out);
    return fused;
}

namespace {

double now_ms() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

/// Per-client fold assignment over labeled real nodes: fold_of[i] in
/// [0, folds), or -1 for unlabeled nodes.
std::vector<int> assign_folds(const PopulationGraph& g, std::size_t folds, Rng rng) {
    std::vector<std::size_t> labeled;
    for (std::size_t i = 0; i < g.n(); ++i)
        if (g.labeled_mask[i] && g.provenance[i] == kNodeReal) labeled.push_back(i);
    rng.shuffle(labeled);
    std::vector<int> fold_of(g.n(), -1);
    for (std::size_t pos = 0; pos < labeled.size(); ++pos)
        fold_of[labeled[pos]] = int(pos % folds);
    return fold_of;
}

std::vector<std::uint8_t> fold_mask(const std::vector<int>& fold_of, std::size_t fold, bool invert) {
    std::vector<std::uint8_t> m(fold_of.size(), 0);
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
        if (fold_of[i] < 0) continue;
        const bool in_fold = fold_of[i] == int(fold);
        m[i] = (invert ? !in_fold : in_fold) ? 1 : 0;
    }
    return m;
}

/// Pools (class-1 score, label) pairs over test nodes of several graphs,
/// each evaluated with its own classifier state.
MetricsReport pooled_eval(const std::vector<const PopulationGraph*>& graphs,
                          std::vector<ClassifierState*> clfs,
                          const std::vector<std::vector<std::uint8_t>>& test_masks) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (std::size_t c = 0; c < graphs.size(); ++c) {
        const PopulationGraph& g = *graphs[c];
        Matrix probs = classifier_probs(g, *clfs[c]);
        for (std::size_t i = 0; i < g.n(); ++i) {
            if (!test_masks[c][i]) continue;
            if (!g.labeled_mask[i] || g.provenance[i] != kNodeReal) continue;
            scores.push_back(probs(i, 1));
            labels.push_back(g.y[i]);
        }
    }
    return evaluate_metrics_pooled(scores, labels);
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const PopulationGraph& dataset) {
    config.validate();
    const double t_start = now_ms();
    ExperimentResult result;
    result.config = config;

    PopulationGraph base = dataset;
    base.params.k = config.k;
    base.params.gamma = config.gamma;
    base.params.sigma = config.sigma;

    const std::size_t m = config.mode == Mode::centralgcn ? 1 : config.clients;
    Rng master(config.seed);

    for (std::size_t rep = 0; rep < config.repeats; ++rep) {
        const std::string rep_tag = "rep" + std::to_string(rep);
        auto clients = partition_clients(base, m, master.derive(rep_tag + "/partition").seed());

        // fold assignment per client
        std::vector<std::vector<int>> fold_of;
        for (std::size_t c = 0; c < m; ++c)
            fold_of.push_back(assign_folds(clients[c], config.folds,
                                           master.derive(rep_tag + "/folds/" + std::to_string(c))));

        // phase 1 + graph merge, once per repeat (self-supervised, fold-blind)
        std::vector<PopulationGraph> working;
        if (config.mode == Mode::fedni) {
            std::vector<InpaintClient> p1;
            p1.reserve(m);
            for (std::size_t c = 0; c < m; ++c) {
                GeneratorConfig gcfg;
                gcfg.d_in = clients[c].feature_dim();
                GeneratorState gen(gcfg, clients[c].U.fields,
                                   master.derive(rep_tag + "/gen/" + std::to_string(c)).seed());
                gen.fit_pheno_normalization(clients[c].U);
                DiscriminatorState disc(gcfg.d_in,
                                        master.derive(rep_tag + "/disc/" + std::to_string(c)).seed());
                p1.push_back(InpaintClient{c, clients[c], std::move(gen), std::move(disc),
                                           master.derive(rep_tag + "/p1train/" + std::to_string(c)),
                                           master.derive(rep_tag + "/p1dp/" + std::to_string(c)), 0});
            }
            Phase1Config p1cfg;
            p1cfg.rounds = config.rounds_phase1;
            p1cfg.epochs = config.epochs;
            p1cfg.sigma_dp = config.sigma_dp;
            p1cfg.fl_mode = config.inpaint_fl;
            p1cfg.train.alpha = config.alpha;
            p1cfg.train.beta = config.beta;
            p1cfg.train.lr = config.lr;
            p1cfg.train.n_max = config.n_max;
            p1cfg.train.mask_target = config.mask_target;
            p1cfg.train.disc_interval = config.disc_interval;
            p1cfg.train.use_discriminator = config.use_discriminator;
            p1cfg.train.random_masking = config.masking == MaskingMode::random;

            Transport transport(config.byte_transport);
            MergeConfig mcfg;
            mcfg.n_max = config.n_max;
            mcfg.k_prime = config.k_prime;
            mcfg.use_edge_prediction = config.use_edge_prediction;

            std::vector<RoundLog> p1_logs;
            if (!config.remerge_each_round) {
                p1_logs = run_phase1(p1, p1cfg, transport);
            } else {
                // experimental: retrain each round on the freshly fused graphs
                Phase1Config one_round = p1cfg;
                one_round.rounds = 1;
                for (std::size_t r = 0; r < config.rounds_phase1; ++r) {
                    auto logs = run_phase1(p1, one_round, transport);
                    logs[0].round = r;
                    p1_logs.push_back(logs[0]);
                    for (std::size_t c = 0; c < m; ++c) {
                        Rng merge_rng = master.derive(rep_tag + "/remerge/" + std::to_string(r) + "/" +
                                                      std::to_string(c));
                        p1[c].graph = graph_merge(clients[c], p1[c].gen, mcfg, merge_rng).graph;
                    }
                }
            }
            result.phase1_logs.push_back(std::move(p1_logs));

            for (std::size_t c = 0; c < m; ++c) {
                Rng merge_rng = master.derive(rep_tag + "/merge/" + std::to_string(c));
                working.push_back(graph_merge(clients[c], p1[c].gen, mcfg, merge_rng).graph);
            }
        } else if (config.mode == Mode::random_inpaint) {
            for (std::size_t c = 0; c < m; ++c) {
                Rng merge_rng = master.derive(rep_tag + "/rmerge/" + std::to_string(c));
                working.push_back(
                    random_merge(clients[c], config.k_prime, merge_rng).graph);
            }
        } else {
            working = clients;
        }

        for (std::size_t fold = 0; fold < config.folds; ++fold) {
            const std::string cell_tag = rep_tag + "/f" + std::to_string(fold);
            std::vector<std::vector<std::uint8_t>> train_masks, test_masks;
            for (std::size_t c = 0; c < m; ++c) {
                // masks are indexed over the working graph (fused graphs put
                // generated nodes after the real ones, which fold_of covers)
                std::vector<int> padded = fold_of[c];
                padded.resize(working[c].n(), -1);
                train_masks.push_back(fold_mask(padded, fold, /*invert=*/true));
                test_masks.push_back(fold_mask(padded, fold, /*invert=*/false));
            }

            std::vector<ClassifierState> clfs;
            clfs.reserve(m);
            for (std::size_t c = 0; c < m; ++c)
                clfs.emplace_back(working[c].feature_dim(),
                                  master.derive(cell_tag + "/clf/" + std::to_string(c)).seed());

            std::vector<RoundLog> p2_logs;
            if (config.mode == Mode::localgcn || config.mode == Mode::centralgcn) {
                for (std::size_t c = 0; c < m; ++c)
                    for (std::size_t e = 0; e < config.local_epochs; ++e)
                        train_classifier_epoch(working[c], clfs[c], train_masks[c], config.lr);
            } else {
                std::vector<ClassifierClient> p2;
                p2.reserve(m);
                for (std::size_t c = 0; c < m; ++c)
                    p2.push_back(ClassifierClient{c, &working[c], std::move(clfs[c]), train_masks[c],
                                                  master.derive(cell_tag + "/p2dp/" + std::to_string(c))});
                Phase2Config p2cfg;
                p2cfg.rounds = config.rounds_phase2;
                p2cfg.epochs = config.epochs;
                p2cfg.lr = config.lr;
                p2cfg.sigma_dp = config.sigma_dp;
                Transport transport(config.byte_transport);
                p2_logs = run_phase2(p2, p2cfg, transport);
                clfs.clear();
                for (auto& c : p2) clfs.push_back(std::move(c.clf));
            }

            std::vector<const PopulationGraph*> graph_ptrs;
            std::vector<ClassifierState*> clf_ptrs;
            for (std::size_t c = 0; c < m; ++c) {
                graph_ptrs.push_back(&working[c]);
                clf_ptrs.push_back(&clfs[c]);
            }
            CellResult cell;
            cell.repeat = rep;
            cell.fold = fold;
            cell.metrics = pooled_eval(graph_ptrs, clf_ptrs, test_masks);
            result.cells.push_back(cell);
            result.phase2_logs.push_back(std::move(p2_logs));
        }
    }

    std::vector<MetricsReport> reports;
    for (const auto& c : result.cells) reports.push_back(c.metrics);
    result.summary = summarize_metrics(reports);
    result.total_wall_ms = now_ms() - t_start;
    return result;
}

namespace {
ordered_json metrics_to_json(const MetricsReport& m) {
    ordered_json j;
    j["accuracy"] = m.accuracy;
    if (m.auc)
        j["auc"] = *m.auc;
    else
        j["auc"] = nullptr;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    j["n_test"] = m.n_test;
    return j;
}

ordered_json summary_to_json(const MetricsSummary& s) {
    ordered_json j;
    j["accuracy"] = {{"mean", s.mean_accuracy}, {"std", s.std_accuracy}};
    j["auc"] = {{"mean", s.mean_auc}, {"std", s.std_auc}};
    j["precision"] = {{"mean", s.mean_precision}, {"std", s.std_precision}};
    j["recall"] = {{"mean", s.mean_recall}, {"std", s.std_recall}};
    j["f1"] = {{"mean", s.mean_f1}, {"std", s.std_f1}};
    j["n_cells"] = s.n_cells;
    j["auc_excluded_cells"] = s.auc_excluded;
    return j;
}

ordered_json result_to_json(const ExperimentResult& r) {
    ordered_json j;
    ordered_json cfg;
    for (const auto& [k, v] : r.config.to_key_values()) cfg[k] = v;
    j["config"] = cfg;
    j["summary"] = summary_to_json(r.summary);
    ordered_json cells = ordered_json::array();
    for (const auto& c : r.cells) {
        ordered_json cj;
        cj["repeat"] = c.repeat;
        cj["fold"] = c.fold;
        cj["metrics"] = metrics_to_json(c.metrics);
        cells.push_back(cj);
    }
    j["cells"] = cells;
    ordered_json p1 = ordered_json::array();
    for (const auto& logs : r.phase1_logs) {
        ordered_json series = ordered_json::array();
        for (const auto& log : logs) series.push_back(log.server_loss);
        p1.push_back(series);
    }
    j["phase1_server_loss"] = p1;
    ordered_json p2 = ordered_json::array();
    for (const auto& logs : r.phase2_logs) {
        ordered_json series = ordered_json::array();
        for (const auto& log : logs) series.push_back(log.server_loss);
        p2.push_back(series);
    }
    j["phase2_server_loss"] = p2;
    return j;
}
} // namespace

std::string render_report_json(const ExperimentResult& result) {
    return result_to_json(result).dump(2) + "\n";
}

std::string render_report_csv(const ExperimentResult& result) {
    std::ostringstream os;
    os << "repeat,fold,accuracy,auc,precision,recall,f1,n_test\n";
    os.precision(17);
    for (const auto& c : result.cells) {
        os << c.repeat << ',' << c.fold << ',' << c.metrics.accuracy << ',';
        if (c.metrics.auc)
            os << *c.metrics.auc;
        os << ',' << c.metrics.precision << ',' << c.metrics.recall << ',' << c.metrics.f1 << ','
           << c.metrics.n_test << '\n';
    }
    const auto& s = result.summary;
    os << "mean,," << s.mean_accuracy << ',' << s.mean_auc << ',' << s.mean_precision << ','
       << s.mean_recall << ',' << s.mean_f1 << ",\n";
    os << "std,," << s.std_accuracy << ',' << s.std_auc << ',' << s.std_precision << ','
       << s.std_recall << ',' << s.std_f1 << ",\n";
    return os.str();
}

std::string render_timings_json(const ExperimentResult& result) {
    ordered_json j;
    j["total_wall_ms"] = result.total_wall_ms;
    ordered_json p1 = ordered_json::array();
    for (const auto& logs : result.phase1_logs) {
        double ms = 0;
        for (const auto& log : logs) ms += log.wall_ms;
        p1.push_back(ms);
    }
    j["phase1_wall_ms"] = p1;
    ordered_json p2 = ordered_json::array();
    for (const auto& logs : result.phase2_logs) {
        double ms = 0;
        for (const auto& log : logs) ms += log.wall_ms;
        p2.push_back(ms);
    }
    j["phase2_wall_ms"] = p2;
    return j.dump(2) + "\n";
}

TTestResult two_sample_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2) throw config_error("t-test: need >= 2 samples per group");
    const double n1 = double(a.size()), n2 = double(b.size());
    double m1 = 0, m2 = 0;
    for (double v : a) m1 += v;
    for (double v : b) m2 += v;
    m1 /= n1;
    m2 /= n2;
    double s1 = 0, s2 = 0;
    for (double v : a) s1 += (v - m1) * (v - m1);
    for (double v : b) s2 += (v - m2) * (v - m2);
    s1 /= (n1 - 1);
    s2 /= (n2 - 1);

    TTestResult r;
    r.df = n1 + n2 - 2;
    const double sp2 = ((n1 - 1) * s1 + (n2 - 1) * s2) / r.df;
    const double denom = std::sqrt(sp2 * (1.0 / n1 + 1.0 / n2));
    if (denom == 0.0) {
        r.t = 0.0;
        r.p = m1 == m2 ? 1.0 : 0.0;
        return r;
    }
    r.t = (m1 - m2) / denom;
    boost::math::students_t dist(r.df);
    r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
    return r;
}

AblationResult run_ablation(const std::vector<AblationVariant>& variants,
                            const PopulationGraph& dataset) {
    if (variants.size() < 2) throw config_error("run_ablation: need >= 2 configurations");
    AblationResult out;
    for (const auto& v : variants) {
        out.names.push_back(v.name);
        out.results.push_back(run_experiment(v.config, dataset));
    }

    auto metric_series = [](const ExperimentResult& r, const std::string& metric) {
        std::vector<double> xs;
        for (const auto& c : r.cells) {
            if (metric == "accuracy") xs.push_back(c.metrics.accuracy);
            else if (metric == "precision") xs.push_back(c.metrics.precision);
            else if (metric == "recall") xs.push_back(c.metrics.recall);
            else if (metric == "f1") xs.push_back(c.metrics.f1);
            else if (metric == "auc" && c.metrics.auc) xs.push_back(*c.metrics.auc);
        }
        return xs;
    };

    static const std::vector<std::string> metrics = {"accuracy", "auc", "precision", "recall", "f1"};
    for (std::size_t i = 0; i < variants.size(); ++i)
        for (std::size_t j = i + 1; j < variants.size(); ++j) {
            AblationPair pair;
            pair.a = out.names[i];
            pair.b = out.names[j];
            for (const auto& metric : metrics) {
                const auto xs = metric_series(out.results[i], metric);
                const auto ys = metric_series(out.results[j], metric);
                if (xs.size() >= 2 && ys.size() >= 2)
                    pair.per_metric[metric] = two_sample_t_test(xs, ys);
            }
            out.pairs.push_back(std::move(pair));
        }
    return out;
}

std::vector<AblationVariant> parse_ablation_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("ablation matrix: cannot open " + path);
    std::vector<AblationVariant> variants;
    std::string line, current;
    std::map<std::string, std::string> pending;
    auto flush = [&]() {
        if (current.empty()) return;
        AblationVariant v;
        v.name = current;
        for (const auto& [k, val] : pending) v.config.set_key(k, val);
        v.config.validate();
        variants.push_back(std::move(v));
        pending.clear();
    };
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;
        if (tok.front() == '[') {
            if (tok.back() != ']' || tok.size() < 3)
                throw config_error("ablation matrix: bad section header at line " + std::to_string(lineno));
            flush();
            current = tok.substr(1, tok.size() - 2);
        } else {
            if (current.empty())
                throw config_error("ablation matrix: key before any [section] at line " + std::to_string(lineno));
            std::string eq, value;
            if (!(ls >> eq >> value) || eq != "=")
                throw config_error("ablation matrix: expected 'key = value' at line " + std::to_string(lineno));
            pending[tok] = value;
        }
    }
    flush();
    return variants;
}

std::string render_ablation_json(const AblationResult& result) {
    ordered_json j;
    ordered_json variants = ordered_json::array();
    for (std::size_t i = 0; i < result.names.size(); ++i) {
        ordered_json v;
        v["name"] = result.names[i];
        ordered_json cfg;
        for (const auto& [k, val] : result.results[i].config.to_key_values()) cfg[k] = val;
        v["config"] = cfg;
        v["summary"] = summary_to_json(result.results[i].summary);
        variants.push_back(v);
    }
    j["variants"] = variants;
    ordered_json pairs = ordered_json::array();
    for (const auto& p : result.pairs) {
        ordered_json pj;
        pj["a"] = p.a;
        pj["b"] = p.b;
        ordered_json tests;
        for (const auto& [metric, t] : p.per_metric) {
            tests[metric] = {{"t", t.t}, {"df", t.df}, {"p", t.p}};
        }
        pj["t_tests"] = tests;
        pairs.push_back(pj);
    }
    j["pairs"] = pairs;
    return j.dump(2) + "\n";
}

} // namespace fedni
