// okgllm: knowledge-graph-enhanced SST forecasting pipeline CLI.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "okgllm/errors.hpp"
#include "okgllm/graph.hpp"
#include "okgllm/metrics.hpp"
#include "okgllm/sst_data.hpp"
#include "okgllm/trainer.hpp"
#include "okgllm/transe.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace okgllm;

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> horizon;
    std::optional<std::string> variant;
    std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required) {
    auto* c = cmd->add_option("--config", f.config_path, "experiment config JSON");
    if (config_required) c->required();
    cmd->add_option("--seed", f.seed, "override the config seed");
    cmd->add_option("--horizon", f.horizon, "forecast horizon")
        ->check(CLI::IsMember({8, 16, 32}));
    cmd->add_option("--variant", f.variant,
                    "full | no_ts_encoding | no_kg_encoding | no_alignment");
    cmd->add_option("--out", f.out, "output path");
}

ExperimentConfig load_config(const CommonFlags& f) {
    ExperimentConfig cfg = ExperimentConfig::from_json_file(f.config_path);
    if (f.seed) cfg.seed = *f.seed;
    if (f.horizon) cfg.horizon = *f.horizon;
    if (f.variant) cfg.variant = variant_from_string(*f.variant);
    cfg.validate();
    return cfg;
}

std::unique_ptr<KnowledgeGraph> load_graph(const ExperimentConfig& cfg) {
    if (cfg.variant == Variant::no_kg_encoding) return nullptr;
    if (cfg.entity_file.empty() || cfg.relation_file.empty() || cfg.triple_file.empty())
        throw ConfigError("config must set entity_file/relation_file/triple_file");
    return std::make_unique<KnowledgeGraph>(
        load_triples(cfg.entity_file, cfg.relation_file, cfg.triple_file));
}

EmbeddingTable obtain_table(const ExperimentConfig& cfg, const KnowledgeGraph& g) {
    if (!cfg.embedding_table_path.empty())
        return EmbeddingTable::load(cfg.embedding_table_path);
    std::cerr << "note: no embedding_table_path set; pretraining a table in-process\n";
    TransEConfig tc;
    tc.d = cfg.d;
    tc.seed = cfg.seed;
    tc.epochs = 50;
    return pretrain(g, tc).table;
}

void write_text(const std::string& path, const std::string& body) {
    if (path.empty()) return;
    if (auto parent = fs::path(path).parent_path(); !parent.empty())
        fs::create_directories(parent);
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << body;
}

json stats_json(const GraphStats& s) {
    json j;
    j["entities"] = s.entities;
    j["triples"] = s.triples;
    for (auto kind : {EntityKind::Region, EntityKind::Current, EntityKind::Monsoon,
                      EntityKind::Ocean, EntityKind::Sea})
        j["per_kind"][to_string(kind)] = s.count(kind);
    return j;
}

int cmd_build_kg(const std::string& entities, const std::string& relations,
                 const std::string& triples, const std::string& boundaries,
                 const std::string& map_relation, const std::string& out) {
    KnowledgeGraph g = load_triples(entities, relations, triples);
    if (!boundaries.empty()) {
        if (map_relation.empty())
            throw ConfigError("--boundaries requires --map-relation");
        BoundaryTable table = load_boundaries(boundaries);
        std::vector<Entity> regions;
        for (const auto& e : g.entities())
            if (e.kind == EntityKind::Region) regions.push_back(e);
        std::set<Triple> mapped =
            build_region_mapping(regions, table, g.relation(map_relation), g);
        std::vector<Triple> all = g.triples();
        all.insert(all.end(), mapped.begin(), mapped.end());
        g = KnowledgeGraph(g.entities(), g.relations(), std::move(all));
    }
    if (!out.empty()) {
        fs::create_directories(out);
        save_graph(g, out + "/entities.tsv", out + "/relations.tsv",
                   out + "/triples.tsv");
    }
    json j = stats_json(g.stats());
    j["duplicates_collapsed"] = g.duplicates_collapsed();
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_pretrain_kge(const std::string& entities, const std::string& relations,
                     const std::string& triples, const TransEConfig& tc,
                     const std::string& out) {
    KnowledgeGraph g = load_triples(entities, relations, triples);
    PretrainResult result = pretrain(g, tc);
    if (out.empty()) throw ConfigError("pretrain-kge requires --out");
    result.table.save(out);
    json j;
    j["epochs"] = result.epoch_mean_loss.size();
    j["final_mean_loss"] = result.epoch_mean_loss.empty()
                               ? 0.0
                               : result.epoch_mean_loss.back();
    j["negative_fallback_warnings"] = result.negative_fallback_warnings;
    j["checksum"] = result.table.checksum();
    j["out"] = out;
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_train(const CommonFlags& f) {
    ExperimentConfig cfg = load_config(f);
    SSTMatrix data = ingest_sst(cfg.sst_path, cfg.min_coverage);
    std::unique_ptr<KnowledgeGraph> graph = load_graph(cfg);
    std::optional<EmbeddingTable> table;
    if (graph) table = obtain_table(cfg, *graph);

    TrainResult result = train_model(cfg, graph.get(),
                                     table ? &*table : nullptr, data);
    std::string out = f.out.empty() ? "okgllm_checkpoint.bin" : f.out;
    if (auto parent = fs::path(out).parent_path(); !parent.empty())
        fs::create_directories(parent);
    result.checkpoint.save(out);

    json j;
    j["checkpoint"] = out;
    j["epochs_run"] = result.epochs_run;
    j["best_epoch"] = result.best_epoch;
    j["best_val_loss"] = result.checkpoint.best_val_loss;
    j["early_stopped"] = result.early_stopped;
    j["train_loss_curve"] = result.train_loss_curve;
    j["val_loss_curve"] = result.val_loss_curve;
    j["lr_curve"] = result.lr_curve;
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_evaluate(const std::string& ckpt_path, const std::string& out,
                 const std::string& grid_path) {
    Checkpoint ckpt = Checkpoint::load(ckpt_path);
    const ExperimentConfig& cfg = ckpt.config;
    SSTMatrix data = ingest_sst(cfg.sst_path, cfg.min_coverage);
    std::unique_ptr<KnowledgeGraph> graph = load_graph(cfg);
    auto model = model_from_checkpoint(ckpt, graph.get(), data);

    ChronoSplit split = chrono_split(data, cfg.train_ratio, cfg.val_ratio,
                                     cfg.test_ratio, cfg.lookback + cfg.horizon);
    EvalResult result = evaluate_model(*model, split.test);
    std::string body = metrics_to_json(result, split.test.region_ids);
    write_text(out, body);
    if (!grid_path.empty()) write_mae_grid(result, split.test, grid_path);
    std::cout << body << '\n';
    return 0;
}

int cmd_ablate(const CommonFlags& f) {
    ExperimentConfig cfg = load_config(f);
    SSTMatrix data = ingest_sst(cfg.sst_path, cfg.min_coverage);
    std::unique_ptr<KnowledgeGraph> graph = load_graph(cfg);
    std::optional<EmbeddingTable> table;
    if (graph) table = obtain_table(cfg, *graph);

    TrainResult result = train_model(cfg, graph.get(),
                                     table ? &*table : nullptr, data);
    auto model = model_from_checkpoint(result.checkpoint, graph.get(), data);
    ChronoSplit split = chrono_split(data, cfg.train_ratio, cfg.val_ratio,
                                     cfg.test_ratio, cfg.lookback + cfg.horizon);
    EvalResult eval = evaluate_model(*model, split.test);
    std::string body = metrics_to_json(eval, split.test.region_ids);
    write_text(f.out, body);
    std::cout << body << '\n';
    return 0;
}

int cmd_baseline(const CommonFlags& f, const std::string& method) {
    ExperimentConfig cfg = load_config(f);
    SSTMatrix data = ingest_sst(cfg.sst_path, cfg.min_coverage);
    ChronoSplit split = chrono_split(data, cfg.train_ratio, cfg.val_ratio,
                                     cfg.test_ratio, cfg.lookback + cfg.horizon);
    EvalResult result =
        method == "persistence"
            ? persistence_baseline(split.test, cfg.lookback, cfg.horizon)
            : linear_baseline(split.test, cfg.lookback, cfg.horizon);
    std::string body = metrics_to_json(result, split.test.region_ids);
    write_text(f.out, body);
    std::cout << body << '\n';
    return 0;
}

// One row per region: id, ocean label, current label(s), mean-pooled aligned
// embedding of the final training window.
int cmd_export_embeddings(const std::string& ckpt_path, const std::string& out) {
    Checkpoint ckpt = Checkpoint::load(ckpt_path);
    const ExperimentConfig& cfg = ckpt.config;
    SSTMatrix data = ingest_sst(cfg.sst_path, cfg.min_coverage);
    std::unique_ptr<KnowledgeGraph> graph = load_graph(cfg);
    auto model = model_from_checkpoint(ckpt, graph.get(), data);
    ChronoSplit split = chrono_split(data, cfg.train_ratio, cfg.val_ratio,
                                     cfg.test_ratio, cfg.lookback + cfg.horizon);

    auto neighbors_of_kind = [&](const std::string& id, EntityKind kind) {
        std::set<std::string> found;
        if (!graph) return found;
        for (std::size_t idx : graph->incident(id)) {
            const Triple& t = graph->triples()[idx];
            const std::string& other = t.head == id ? t.tail : t.head;
            if (graph->entity(other).kind == kind) found.insert(other);
        }
        return found;
    };
    auto labels_of = [&](const std::string& region, EntityKind kind) {
        std::set<std::string> found = neighbors_of_kind(region, kind);
        if (found.empty() && kind == EntityKind::Ocean) {
            // Regions usually reach their ocean through a sea.
            for (const auto& sea : neighbors_of_kind(region, EntityKind::Sea))
                found.merge(neighbors_of_kind(sea, EntityKind::Ocean));
        }
        std::string joined;
        for (const auto& id : found) {
            if (!joined.empty()) joined += ',';
            joined += id;
        }
        return joined;
    };

    std::ostringstream body;
    body.precision(10);
    Eigen::Index start = split.train.steps() - cfg.lookback;
    for (Eigen::Index i = 0; i < split.train.regions(); ++i) {
        Eigen::VectorXd window =
            split.train.values.row(i).segment(start, cfg.lookback);
        Eigen::VectorXd v = model->aligned_embedding(i, window);
        const std::string& id = split.train.region_ids[static_cast<std::size_t>(i)];
        body << id << '\t' << labels_of(id, EntityKind::Ocean) << '\t'
             << labels_of(id, EntityKind::Current);
        for (Eigen::Index k = 0; k < v.size(); ++k) body << '\t' << v(k);
        body << '\n';
    }
    if (out.empty()) throw ConfigError("export-embeddings requires --out");
    write_text(out, body.str());
    std::cout << "wrote " << split.train.regions() << " rows to " << out << '\n';
    return 0;
}

int cmd_make_synthetic(SyntheticConfig sc, bool fullsize, const std::string& out) {
    if (out.empty()) throw ConfigError("make-synthetic requires --out");
    fs::create_directories(out);
    SyntheticDataset ds =
        fullsize ? make_synthetic_fullsize(sc.seed, sc.timesteps) : make_synthetic(sc);
    save_sst(ds.data, out + "/sst.txt");
    save_graph(ds.graph, out + "/entities.tsv", out + "/relations.tsv",
               out + "/triples.tsv");

    ExperimentConfig cfg;
    cfg.sst_path = out + "/sst.txt";
    cfg.entity_file = out + "/entities.tsv";
    cfg.relation_file = out + "/relations.tsv";
    cfg.triple_file = out + "/triples.tsv";
    write_text(out + "/config.json", cfg.to_json());

    json j = stats_json(ds.graph.stats());
    j["declared"] = stats_json(ds.declared_counts);
    j["regions"] = ds.data.regions();
    j["timesteps"] = ds.data.steps();
    j["config"] = out + "/config.json";
    std::cout << j.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"OKG-enhanced sea-surface-temperature forecasting pipeline"};
    app.require_subcommand(1);

    // build-kg
    std::string kg_entities, kg_relations, kg_triples, kg_boundaries, kg_map_rel;
    std::string kg_out;
    auto* build_kg = app.add_subcommand("build-kg", "load, validate and save an OKG");
    build_kg->add_option("--entities", kg_entities)->required();
    build_kg->add_option("--relations", kg_relations)->required();
    build_kg->add_option("--triples", kg_triples)->required();
    build_kg->add_option("--boundaries", kg_boundaries, "boundary-box table");
    build_kg->add_option("--map-relation", kg_map_rel,
                         "relation id for region->area mapping triples");
    build_kg->add_option("--out", kg_out, "directory for the saved graph");

    // pretrain-kge
    std::string pe_entities, pe_relations, pe_triples, pe_out;
    TransEConfig tc;
    auto* pre = app.add_subcommand("pretrain-kge", "pretrain translational embeddings");
    pre->add_option("--entities", pe_entities)->required();
    pre->add_option("--relations", pe_relations)->required();
    pre->add_option("--triples", pe_triples)->required();
    pre->add_option("--dim", tc.d);
    pre->add_option("--gamma", tc.gamma);
    pre->add_option("--norm", tc.p)->check(CLI::IsMember({1, 2}));
    pre->add_option("--negatives", tc.negatives_per_positive);
    pre->add_option("--epochs", tc.epochs);
    pre->add_option("--lr", tc.learning_rate);
    pre->add_option("--batch-size", tc.batch_size);
    pre->add_option("--seed", tc.seed);
    pre->add_option("--out", pe_out, "embedding table path")->required();

    // train / ablate / baseline / evaluate / export-embeddings
    CommonFlags train_f, ablate_f, baseline_f;
    auto* train_cmd = app.add_subcommand("train", "train and checkpoint a model");
    add_common(train_cmd, train_f, true);

    auto* ablate_cmd = app.add_subcommand("ablate", "train one variant and evaluate");
    add_common(ablate_cmd, ablate_f, true);
    ablate_cmd->get_option("--variant")->required();

    std::string baseline_method = "persistence";
    auto* baseline_cmd = app.add_subcommand("baseline", "naive baseline metrics");
    add_common(baseline_cmd, baseline_f, true);
    baseline_cmd->add_option("--method", baseline_method)
        ->check(CLI::IsMember({"persistence", "linear"}));

    std::string eval_ckpt, eval_out, eval_grid;
    auto* eval_cmd = app.add_subcommand("evaluate", "test-segment metrics");
    eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
    eval_cmd->add_option("--out", eval_out, "metrics JSON path");
    eval_cmd->add_option("--grid", eval_grid, "(lat lon mae) grid path");

    std::string exp_ckpt, exp_out;
    auto* exp_cmd = app.add_subcommand("export-embeddings",
                                       "aligned region embeddings as TSV");
    exp_cmd->add_option("--checkpoint", exp_ckpt)->required();
    exp_cmd->add_option("--out", exp_out)->required();

    // make-synthetic
    SyntheticConfig sc;
    bool fullsize = false;
    std::string syn_out;
    auto* syn = app.add_subcommand("make-synthetic",
                                   "KG-correlated synthetic dataset + graph");
    syn->add_option("--regions", sc.regions);
    syn->add_option("--currents", sc.currents);
    syn->add_option("--seas", sc.seas);
    syn->add_option("--oceans", sc.oceans);
    syn->add_option("--monsoons", sc.monsoons);
    syn->add_option("--timesteps", sc.timesteps);
    syn->add_option("--noise", sc.noise);
    syn->add_option("--seed", sc.seed);
    syn->add_flag("--full-size", fullsize, "full-size curated-graph stand-in");
    syn->add_option("--out", syn_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (build_kg->parsed())
            return cmd_build_kg(kg_entities, kg_relations, kg_triples, kg_boundaries,
                                kg_map_rel, kg_out);
        if (pre->parsed())
            return cmd_pretrain_kge(pe_entities, pe_relations, pe_triples, tc, pe_out);
        if (train_cmd->parsed()) return cmd_train(train_f);
        if (ablate_cmd->parsed()) return cmd_ablate(ablate_f);
        if (baseline_cmd->parsed()) return cmd_baseline(baseline_f, baseline_method);
        if (eval_cmd->parsed()) return cmd_evaluate(eval_ckpt, eval_out, eval_grid);
        if (exp_cmd->parsed()) return cmd_export_embeddings(exp_ckpt, exp_out);
        if (syn->parsed()) return cmd_make_synthetic(sc, fullsize, syn_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
