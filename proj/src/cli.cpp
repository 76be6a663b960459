#include "imbl/cli.hpp"

#include "imbl/csnca.hpp"
#include "imbl/data_fetch.hpp"
#include "imbl/io.hpp"
#include "imbl/svg.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace imbl {
namespace cli {

namespace fs = std::filesystem;
using nlohmann::json;
using pipeline::PipelineConfig;

namespace {

// ---- config parsing ------------------------------------------------------

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& ctx) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.contains(key)) {
            throw std::runtime_error("config: unknown key '" + ctx + key + "'");
        }
    }
}

double num_field(const json& obj, const char* key, double dflt, const std::string& ctx) {
    if (!obj.contains(key)) return dflt;
    if (!obj[key].is_number()) {
        throw std::runtime_error("config: " + ctx + key + " must be a number");
    }
    return obj[key].get<double>();
}

std::size_t count_field(const json& obj, const char* key, std::size_t dflt,
                        const std::string& ctx) {
    if (!obj.contains(key)) return dflt;
    if (!obj[key].is_number_unsigned()) {
        throw std::runtime_error("config: " + ctx + key + " must be a non-negative integer");
    }
    return obj[key].get<std::size_t>();
}

std::string string_field(const json& obj, const char* key, const std::string& dflt,
                         const std::string& ctx) {
    if (!obj.contains(key)) return dflt;
    if (!obj[key].is_string()) {
        throw std::runtime_error("config: " + ctx + key + " must be a string");
    }
    return obj[key].get<std::string>();
}

} // namespace

RunConfig parse_run_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("config: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw std::runtime_error("config: top level must be an object");
    check_keys(doc,
               {"schema_version", "bef", "csnca", "gss", "train", "threshold", "folds", "seeds",
                "methods", "datasets"},
               "");
    if (doc.contains("schema_version") && doc["schema_version"] != 1) {
        throw std::runtime_error("config: unsupported schema_version");
    }

    RunConfig cfg;
    auto& p = cfg.pipeline;

    if (doc.contains("bef")) {
        const json& b = doc["bef"];
        check_keys(b, {"k_heads", "ir_prime"}, "bef.");
        p.bef.k_heads = count_field(b, "k_heads", p.bef.k_heads, "bef.");
        p.bef.ir_prime = num_field(b, "ir_prime", p.bef.ir_prime, "bef.");
    }
    if (doc.contains("csnca")) {
        const json& c = doc["csnca"];
        check_keys(c, {"target_dim", "class_weight", "delta", "learning_rate", "max_iters", "init"},
                   "csnca.");
        p.csnca.target_dim = count_field(c, "target_dim", p.csnca.target_dim, "csnca.");
        p.csnca.class_weight = num_field(c, "class_weight", p.csnca.class_weight, "csnca.");
        p.csnca.delta = num_field(c, "delta", p.csnca.delta, "csnca.");
        p.csnca.learning_rate = num_field(c, "learning_rate", p.csnca.learning_rate, "csnca.");
        p.csnca.max_iters = count_field(c, "max_iters", p.csnca.max_iters, "csnca.");
        const std::string init = string_field(c, "init", "pca", "csnca.");
        if (init == "pca") p.csnca.init = csnca::Config::Init::Pca;
        else if (init == "random") p.csnca.init = csnca::Config::Init::Random;
        else throw std::runtime_error("config: csnca.init must be 'pca' or 'random'");
    }
    if (doc.contains("gss")) {
        const json& g = doc["gss"];
        check_keys(g, {"k", "sigma", "p_delta", "max_rounds"}, "gss.");
        p.gss.k = count_field(g, "k", p.gss.k, "gss.");
        p.gss.sigma = num_field(g, "sigma", p.gss.sigma, "gss.");
        p.gss.p_delta = num_field(g, "p_delta", p.gss.p_delta, "gss.");
        p.gss.max_rounds = count_field(g, "max_rounds", p.gss.max_rounds, "gss.");
    }
    if (doc.contains("train")) {
        const json& t = doc["train"];
        check_keys(t, {"epochs", "learning_rate", "batch_size"}, "train.");
        p.train.epochs = count_field(t, "epochs", p.train.epochs, "train.");
        p.train.learning_rate = num_field(t, "learning_rate", p.train.learning_rate, "train.");
        p.train.batch_size = count_field(t, "batch_size", p.train.batch_size, "train.");
    }
    p.threshold = num_field(doc, "threshold", p.threshold, "");
    p.folds = count_field(doc, "folds", p.folds, "");
    if (doc.contains("seeds")) {
        if (!doc["seeds"].is_array() || doc["seeds"].empty()) {
            throw std::runtime_error("config: seeds must be a non-empty list");
        }
        p.seeds.clear();
        for (const auto& s : doc["seeds"]) {
            if (!s.is_number_unsigned()) {
                throw std::runtime_error("config: seeds must be non-negative integers");
            }
            p.seeds.push_back(s.get<std::uint64_t>());
        }
    }
    if (doc.contains("methods")) {
        if (!doc["methods"].is_array() || doc["methods"].empty()) {
            throw std::runtime_error("config: methods must be a non-empty list");
        }
        cfg.methods.clear();
        for (const auto& m : doc["methods"]) cfg.methods.push_back(m.get<std::string>());
    }
    if (doc.contains("datasets")) {
        if (!doc["datasets"].is_array() || doc["datasets"].empty()) {
            throw std::runtime_error("config: datasets must be a non-empty list");
        }
        for (const auto& d : doc["datasets"]) {
            const std::string type = string_field(d, "type", "", "datasets[].");
            if (type == "synthetic") {
                check_keys(d, {"type", "dims", "negatives", "ir", "seed", "name"}, "datasets[].");
                SyntheticSpec s;
                s.gen.dims = count_field(d, "dims", 20, "datasets[].");
                s.gen.n_negative = count_field(d, "negatives", 1000, "datasets[].");
                s.gen.imbalance_ratio = num_field(d, "ir", 10.0, "datasets[].");
                s.seed = count_field(d, "seed", 7, "datasets[].");
                s.name = string_field(d, "name", "", "datasets[].");
                cfg.datasets.push_back(s);
            } else if (type == "csv") {
                check_keys(d, {"type", "path", "label_column", "name"}, "datasets[].");
                CsvSpec s;
                s.path = string_field(d, "path", "", "datasets[].");
                if (s.path.empty()) throw std::runtime_error("config: datasets[].path is required");
                s.label_column = string_field(d, "label_column", "label", "datasets[].");
                s.name = string_field(d, "name", "", "datasets[].");
                cfg.datasets.push_back(s);
            } else {
                throw std::runtime_error("config: datasets[].type must be 'synthetic' or 'csv'");
            }
        }
    }

    cfg.pipeline.validate();
    for (const auto& m : cfg.methods) {
        if (m != pipeline::kMethodMain && m != pipeline::kMethodSmoteNn &&
            m != pipeline::kMethodRusNn) {
            throw std::runtime_error("config: unknown method '" + m + "'");
        }
    }
    return cfg;
}

std::string resolved_config_json(const RunConfig& cfg) {
    const auto& p = cfg.pipeline;
    json doc;
    doc["schema_version"] = 1;
    doc["bef"] = {{"k_heads", p.bef.k_heads}, {"ir_prime", p.bef.ir_prime}};
    doc["csnca"] = {{"target_dim", p.csnca.target_dim},
                    {"class_weight", p.csnca.class_weight},
                    {"delta", p.csnca.delta},
                    {"learning_rate", p.csnca.learning_rate},
                    {"max_iters", p.csnca.max_iters},
                    {"init", p.csnca.init == csnca::Config::Init::Pca ? "pca" : "random"}};
    doc["gss"] = {{"k", p.gss.k},
                  {"sigma", p.gss.sigma},
                  {"p_delta", p.gss.p_delta},
                  {"max_rounds", p.gss.max_rounds}};
    doc["train"] = {{"epochs", p.train.epochs},
                    {"learning_rate", p.train.learning_rate},
                    {"batch_size", p.train.batch_size}};
    doc["threshold"] = p.threshold;
    doc["folds"] = p.folds;
    doc["seeds"] = p.seeds;
    doc["methods"] = cfg.methods;
    doc["datasets"] = json::array();
    for (const auto& d : cfg.datasets) {
        if (std::holds_alternative<SyntheticSpec>(d)) {
            const auto& s = std::get<SyntheticSpec>(d);
            doc["datasets"].push_back({{"type", "synthetic"},
                                       {"dims", s.gen.dims},
                                       {"negatives", s.gen.n_negative},
                                       {"ir", s.gen.imbalance_ratio},
                                       {"seed", s.seed},
                                       {"name", s.name}});
        } else {
            const auto& s = std::get<CsvSpec>(d);
            doc["datasets"].push_back({{"type", "csv"},
                                       {"path", s.path.string()},
                                       {"label_column", s.label_column},
                                       {"name", s.name}});
        }
    }
    return doc.dump(2) + "\n";
}

std::vector<Dataset> materialize_datasets(const RunConfig& cfg) {
    if (cfg.datasets.empty()) throw std::runtime_error("config: datasets must be a non-empty list");
    std::vector<Dataset> out;
    for (const auto& spec : cfg.datasets) {
        if (std::holds_alternative<SyntheticSpec>(spec)) {
            const auto& s = std::get<SyntheticSpec>(spec);
            RandomStream stream(s.seed);
            Dataset ds = generate_synthetic(s.gen, stream);
            if (!s.name.empty()) ds.name = s.name;
            out.push_back(std::move(ds));
        } else {
            const auto& s = std::get<CsvSpec>(spec);
            Dataset ds = load_csv(s.path, s.label_column);
            if (!s.name.empty()) ds.name = s.name;
            out.push_back(std::move(ds));
        }
    }
    return out;
}

// ---- report serialization ------------------------------------------------

namespace {

json cell_to_json(const pipeline::CellResult& c) {
    return {{"dataset", c.dataset}, {"method", c.method},         {"fold", c.fold},
            {"seed", c.seed},       {"tp", c.cm.tp},              {"fn", c.cm.fn},
            {"fp", c.cm.fp},        {"tn", c.cm.tn},              {"f_measure", c.metrics.f_measure},
            {"g_mean", c.metrics.g_mean}, {"f_plus_g", c.metrics.f_plus_g}};
}

json rank_to_json(const RankTable& t) {
    json out;
    for (std::size_t i = 0; i < t.methods.size(); ++i) out[t.methods[i]] = t.mean_rank[i];
    return out;
}

} // namespace

std::string report_to_json(const pipeline::ExperimentReport& report,
                           const std::string& resolved_config) {
    json doc;
    doc["schema_version"] = 1;
    doc["config"] = json::parse(resolved_config);
    doc["datasets"] = report.datasets;
    doc["methods"] = report.methods;
    doc["folds"] = report.folds;
    doc["seeds"] = report.seeds;
    doc["cells"] = json::array();
    for (const auto& c : report.cells) doc["cells"].push_back(cell_to_json(c));
    doc["aggregates"] = json::object();
    for (const auto& [ds, by_method] : report.aggregates) {
        for (const auto& [method, a] : by_method) {
            doc["aggregates"][ds][method] = {
                {"mean_f_measure", a.mean_f}, {"std_f_measure", a.std_f},
                {"mean_g_mean", a.mean_g},    {"std_g_mean", a.std_g},
                {"mean_f_plus_g", a.mean_fg}, {"std_f_plus_g", a.std_fg},
                {"cells", a.cells}};
        }
    }
    doc["mean_ranks"] = {{"f_measure", rank_to_json(report.rank_f)},
                         {"g_mean", rank_to_json(report.rank_g)},
                         {"f_plus_g", rank_to_json(report.rank_fg)}};
    return doc.dump(2) + "\n";
}

std::string report_to_csv(const pipeline::ExperimentReport& report) {
    std::ostringstream out;
    out << "dataset,method,fold,seed,tp,fn,fp,tn,f_measure,g_mean,f_plus_g\n";
    char buf[40];
    for (const auto& c : report.cells) {
        out << c.dataset << ',' << c.method << ',' << c.fold << ',' << c.seed << ',' << c.cm.tp
            << ',' << c.cm.fn << ',' << c.cm.fp << ',' << c.cm.tn;
        for (const double v : {c.metrics.f_measure, c.metrics.g_mean, c.metrics.f_plus_g}) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << ',' << buf;
        }
        out << '\n';
    }
    return out.str();
}

// ---- subcommand helpers ----------------------------------------------------

namespace {

// trailing "_ir<number>" in a dataset name, e.g. syn_d100_n1000_ir50
bool parse_ir_suffix(const std::string& name, std::string& prefix, double& ir) {
    const auto pos = name.rfind("_ir");
    if (pos == std::string::npos) return false;
    const std::string tail = name.substr(pos + 3);
    if (tail.empty()) return false;
    char* end = nullptr;
    ir = std::strtod(tail.c_str(), &end);
    if (end == nullptr || *end != '\0' || !(ir > 0)) return false;
    prefix = name.substr(0, pos);
    return true;
}

struct IrChartData {
    Vector irs;
    std::vector<svg::LineSeries> series;
};

// mean metric per (method, ir) for datasets sharing one prefix
IrChartData ir_chart(const pipeline::ExperimentReport& report, const std::string& prefix,
                     const std::string& metric) {
    std::map<double, std::string> ir_to_dataset;
    for (const auto& ds : report.datasets) {
        std::string p;
        double ir = 0.0;
        if (parse_ir_suffix(ds, p, ir) && p == prefix) ir_to_dataset[ir] = ds;
    }
    if (ir_to_dataset.size() < 2) {
        throw std::runtime_error("plot: need at least two '" + prefix +
                                 "_ir*' datasets for a trend chart");
    }
    IrChartData data;
    for (const auto& [ir, ds] : ir_to_dataset) data.irs.push_back(ir);
    for (const auto& method : report.methods) {
        svg::LineSeries s;
        s.label = method;
        for (const auto& [ir, ds] : ir_to_dataset) {
            const auto& a = report.aggregates.at(ds).at(method);
            s.y.push_back(metric == "f_measure" ? a.mean_f
                          : metric == "g_mean"  ? a.mean_g
                                                : a.mean_fg);
        }
        data.series.push_back(std::move(s));
    }
    return data;
}

void emit_ir_charts(const pipeline::ExperimentReport& report, const fs::path& out_dir) {
    std::set<std::string> prefixes;
    for (const auto& ds : report.datasets) {
        std::string p;
        double ir = 0.0;
        if (parse_ir_suffix(ds, p, ir)) prefixes.insert(p);
    }
    for (const auto& prefix : prefixes) {
        std::map<double, int> irs;
        for (const auto& ds : report.datasets) {
            std::string p;
            double ir = 0.0;
            if (parse_ir_suffix(ds, p, ir) && p == prefix) irs[ir] = 1;
        }
        if (irs.size() < 2) continue;
        for (const char* metric : {"f_measure", "g_mean", "f_plus_g"}) {
            const IrChartData data = ir_chart(report, prefix, metric);
            const std::string chart = svg::lines(data.irs, data.series, "imbalance ratio", metric,
                                                 prefix + ": " + metric + " vs IR");
            write_file_atomic(out_dir / (prefix + "_" + metric + "_vs_ir.svg"), chart);
        }
    }
}

json metrics_json(const pipeline::EvalResult& r) {
    return {{"tp", r.cm.tp},
            {"fn", r.cm.fn},
            {"fp", r.cm.fp},
            {"tn", r.cm.tn},
            {"f_measure", r.metrics.f_measure},
            {"g_mean", r.metrics.g_mean},
            {"f_plus_g", r.metrics.f_plus_g}};
}

RunConfig load_config_or_default(const std::string& path) {
    if (path.empty()) return RunConfig{};
    return parse_run_config(read_file(path));
}

// ---- subcommands -----------------------------------------------------------

int cmd_gen_data(std::size_t dims, std::size_t negatives, double ir, std::uint64_t seed,
                 std::string name, std::string out) {
    RandomStream stream(seed);
    Dataset ds = generate_synthetic({.dims = dims, .n_negative = negatives, .imbalance_ratio = ir},
                                    stream);
    if (!name.empty()) ds.name = name;
    if (out.empty()) out = ds.name + ".csv";
    write_file_atomic(out, to_csv(ds));
    std::cout << "wrote " << out << " (" << ds.negatives() << " negative / " << ds.positives()
              << " positive, " << ds.dim() << " features)\n";
    return 0;
}

int cmd_fetch(const std::string& dataset, const std::string& manifest_path) {
    std::vector<data_fetch::ManifestEntry> manifest;
    if (!manifest_path.empty()) {
        manifest = data_fetch::load_manifest(manifest_path);
    } else if (fs::exists("manifest.json")) {
        manifest = data_fetch::load_manifest("manifest.json");
    } else {
        manifest = data_fetch::builtin_manifest();
    }
    const auto it = std::find_if(manifest.begin(), manifest.end(),
                                 [&](const auto& e) { return e.dataset == dataset; });
    if (it == manifest.end()) {
        throw std::runtime_error("fetch: dataset '" + dataset + "' not in manifest");
    }
    const auto paths = data_fetch::fetch(*it, data_dir() / "raw");
    for (const auto& p : paths) std::cout << "cached " << p.string() << '\n';
    return 0;
}

int cmd_prep(const std::string& dataset, double ir, std::uint64_t seed, std::string out) {
    const auto recipe = data_fetch::default_recipe(dataset);
    const Dataset ds = data_fetch::prep(dataset, data_dir() / "raw", ir, seed, recipe);
    if (out.empty()) out = ds.name + ".csv";
    write_file_atomic(out, to_csv(ds));
    std::cout << "wrote " << out << " (" << ds.negatives() << " negative / " << ds.positives()
              << " positive, " << ds.dim() << " features)\n";
    return 0;
}

int cmd_resample(const std::string& in, const std::string& label_column,
                 const std::string& config_path, long long dims_flag, std::uint64_t seed,
                 const std::string& out) {
    RunConfig cfg = load_config_or_default(config_path);
    const Dataset raw = load_csv(in, label_column);
    const Dataset scaled = apply_scaler(fit_scaler(raw), raw);

    std::size_t dims = dims_flag >= 0 ? static_cast<std::size_t>(dims_flag)
                                      : cfg.pipeline.csnca.target_dim;
    Dataset reduced = scaled;
    if (dims > 0 && dims < scaled.dim()) {
        csnca::Config cc = cfg.pipeline.csnca;
        cc.target_dim = dims;
        cc.seed = derive_seed(seed, 0xca);
        reduced = csnca::project(csnca::fit(scaled, cc).projection, scaled);
    }
    RandomStream stream(derive_seed(seed, 0x65));
    const auto result = oversample::gss_oversample(reduced, cfg.pipeline.gss, stream);
    if (result.zero_retention) {
        std::cerr << "warning: no synthetic sample survived the retention threshold\n";
    }
    write_file_atomic(out, oversample::to_soft_csv(result.data));
    write_file_atomic(fs::path(out).replace_extension(".config.json"),
                      resolved_config_json(cfg));
    const json run{{"command", "resample"}, {"input", in},   {"label_column", label_column},
                   {"dims", dims},          {"seed", seed}};
    write_file_atomic(fs::path(out).replace_extension(".run.json"), run.dump(2) + "\n");
    std::cout << "wrote " << out << " (" << result.data.size() << " rows, " << result.retained
              << " synthetic retained of " << result.generated << " generated in "
              << result.rounds << " rounds)\n";
    return 0;
}

int cmd_train(const std::string& in, const std::string& label_column,
              const std::string& config_path, std::uint64_t seed, const std::string& out_dir) {
    RunConfig cfg = load_config_or_default(config_path);
    const Dataset ds = load_csv(in, label_column);
    RandomStream stream(seed);
    const pipeline::TrainedPipeline tp = pipeline::fit(ds, cfg.pipeline, stream);
    fs::create_directories(out_dir);
    pipeline::save_pipeline(tp, out_dir);
    write_file_atomic(fs::path(out_dir) / "projection.csv",
                      csnca::projection_to_csv(tp.projection));
    write_file_atomic(fs::path(out_dir) / "resolved-config.json", resolved_config_json(cfg));
    const json run{{"command", "train"}, {"input", in}, {"label_column", label_column},
                   {"seed", seed}};
    write_file_atomic(fs::path(out_dir) / "run.json", run.dump(2) + "\n");
    const auto self = pipeline::evaluate(tp, ds);
    std::cout << "model written to " << out_dir << "; training-set metrics "
              << metrics_json(self).dump() << '\n';
    return 0;
}

int cmd_eval(const std::string& model_dir, const std::string& in,
             const std::string& label_column) {
    const pipeline::TrainedPipeline tp = pipeline::load_pipeline(model_dir);
    const Dataset ds = load_csv(in, label_column);
    const auto r = pipeline::evaluate(tp, ds);
    std::cout << metrics_json(r).dump(2) << '\n';
    return 0;
}

int cmd_bench(const std::string& config_path, const std::string& out_dir, bool plots) {
    const RunConfig cfg = parse_run_config(read_file(config_path));
    pipeline::ExperimentSpec spec;
    spec.datasets = materialize_datasets(cfg);
    spec.methods = cfg.methods;
    spec.folds = cfg.pipeline.folds;
    spec.seeds = cfg.pipeline.seeds;

    const pipeline::ExperimentReport report = pipeline::run_experiment(spec, cfg.pipeline);

    fs::create_directories(out_dir);
    const std::string resolved = resolved_config_json(cfg);
    write_file_atomic(fs::path(out_dir) / "resolved-config.json", resolved);
    write_file_atomic(fs::path(out_dir) / "results.json", report_to_json(report, resolved));
    write_file_atomic(fs::path(out_dir) / "results.csv", report_to_csv(report));
    if (plots) emit_ir_charts(report, out_dir);

    std::cout << "mean ranks (lower is better):\n";
    for (std::size_t i = 0; i < report.methods.size(); ++i) {
        std::printf("  %-14s F=%.3f  G=%.3f  F+G=%.3f\n", report.methods[i].c_str(),
                    report.rank_f.mean_rank[i], report.rank_g.mean_rank[i],
                    report.rank_fg.mean_rank[i]);
    }
    std::cout << "results written to " << out_dir << '\n';
    return 0;
}

int cmd_plot_scatter(const std::string& in, const std::string& out) {
    const std::string text = read_file(in);
    std::istringstream stream(text);
    std::string header;
    if (!std::getline(stream, header)) throw std::runtime_error("plot: empty input " + in);

    Matrix xy;
    std::vector<int> cls;
    std::vector<bool> synthetic;
    if (header.find("origin") != std::string::npos) {
        // soft-label layout: f1,f2,p_neg,p_pos,origin
        std::vector<std::array<double, 3>> rows;
        std::vector<bool> syn;
        std::string line;
        std::size_t lineno = 1;
        while (std::getline(stream, line)) {
            ++lineno;
            if (line.empty() || line == "\r") continue;
            std::stringstream ss(line);
            std::string cell;
            std::vector<std::string> cells;
            while (std::getline(ss, cell, ',')) cells.push_back(cell);
            if (cells.size() != 5) {
                throw std::runtime_error("plot: expected 2-D soft-label rows in " + in +
                                         " (line " + std::to_string(lineno) + ")");
            }
            rows.push_back({std::stod(cells[0]), std::stod(cells[1]), std::stod(cells[3])});
            syn.push_back(cells[4] == "synthetic");
        }
        if (rows.empty()) throw std::runtime_error("plot: no rows in " + in);
        xy = Matrix(rows.size(), 2);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            xy(i, 0) = rows[i][0];
            xy(i, 1) = rows[i][1];
            cls.push_back(rows[i][2] >= 0.5 ? 1 : 0);
        }
        synthetic = std::move(syn);
    } else {
        const Dataset ds = load_csv(in);
        if (ds.dim() != 2) {
            throw std::runtime_error("plot: scatter needs exactly 2 feature columns, got " +
                                     std::to_string(ds.dim()));
        }
        xy = ds.features;
        cls = ds.labels;
        synthetic.assign(ds.size(), false);
    }
    write_file_atomic(out, svg::scatter(xy, cls, synthetic, fs::path(in).stem().string()));
    std::cout << "wrote " << out << '\n';
    return 0;
}

int cmd_plot_lines(const std::string& results_csv, const std::string& metric,
                   const std::string& prefix_flag, const std::string& out) {
    if (metric != "f_measure" && metric != "g_mean" && metric != "f_plus_g") {
        throw std::runtime_error("plot: metric must be f_measure, g_mean or f_plus_g");
    }
    std::istringstream in(read_file(results_csv));
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("plot: empty " + results_csv);
    const std::size_t metric_col = metric == "f_measure" ? 8 : metric == "g_mean" ? 9 : 10;

    // (prefix, ir, method) -> running mean
    std::map<std::string, std::map<double, std::map<std::string, std::pair<double, int>>>> acc;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 11) throw std::runtime_error("plot: malformed results row: " + line);
        std::string prefix;
        double ir = 0.0;
        if (!parse_ir_suffix(cells[0], prefix, ir)) continue;
        auto& slot = acc[prefix][ir][cells[1]];
        slot.first += std::stod(cells[metric_col]);
        slot.second += 1;
    }
    if (acc.empty()) {
        throw std::runtime_error("plot: no dataset in " + results_csv +
                                 " carries an '_ir<value>' suffix");
    }
    const std::string prefix = prefix_flag.empty() ? acc.begin()->first : prefix_flag;
    if (!acc.contains(prefix)) throw std::runtime_error("plot: no datasets with prefix " + prefix);
    const auto& by_ir = acc.at(prefix);
    if (by_ir.size() < 2) throw std::runtime_error("plot: need at least two IR levels");

    Vector irs;
    for (const auto& [ir, rest] : by_ir) irs.push_back(ir);
    std::set<std::string> methods;
    for (const auto& [ir, rest] : by_ir) {
        for (const auto& [m, v] : rest) methods.insert(m);
    }
    std::vector<svg::LineSeries> series;
    for (const auto& m : methods) {
        svg::LineSeries s;
        s.label = m;
        for (const auto& [ir, rest] : by_ir) {
            const auto it = rest.find(m);
            if (it == rest.end()) {
                throw std::runtime_error("plot: method " + m + " missing at ir " +
                                         std::to_string(ir));
            }
            s.y.push_back(it->second.first / it->second.second);
        }
        series.push_back(std::move(s));
    }
    write_file_atomic(out, svg::lines(irs, series, "imbalance ratio", metric,
                                      prefix + ": " + metric + " vs IR"));
    std::cout << "wrote " << out << '\n';
    return 0;
}

} // namespace

int dispatch(int argc, const char* const* argv) {
    CLI::App app{"oversampling and ensemble toolkit for imbalanced classification"};
    app.require_subcommand(1);
    int rc = 0;

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic two-cluster dataset CSV");
    std::size_t gd_dims = 20, gd_neg = 1000;
    double gd_ir = 10.0;
    std::uint64_t gd_seed = 7;
    std::string gd_name, gd_out;
    gen->add_option("--dims", gd_dims, "feature count")->capture_default_str();
    gen->add_option("--negatives", gd_neg, "negative sample count")->capture_default_str();
    gen->add_option("--ir", gd_ir, "imbalance ratio")->capture_default_str();
    gen->add_option("--seed", gd_seed, "generator seed")->capture_default_str();
    gen->add_option("--name", gd_name, "dataset name (default derived from parameters)");
    gen->add_option("--out", gd_out, "output CSV path (default <name>.csv)");
    gen->callback([&]() { rc = cmd_gen_data(gd_dims, gd_neg, gd_ir, gd_seed, gd_name, gd_out); });

    // fetch
    auto* fetch = app.add_subcommand("fetch", "download and cache a raw dataset");
    std::string f_name, f_manifest;
    fetch->add_option("dataset", f_name, "abalone | covertype | gisette")->required();
    fetch->add_option("--manifest", f_manifest, "manifest JSON (default ./manifest.json)");
    fetch->callback([&]() { rc = cmd_fetch(f_name, f_manifest); });

    // prep
    auto* prep = app.add_subcommand("prep", "turn cached raw files into a benchmark CSV");
    std::string p_name, p_out;
    double p_ir = 10.0;
    std::uint64_t p_seed = 7;
    prep->add_option("dataset", p_name, "abalone | covertype | gisette")->required();
    prep->add_option("--ir", p_ir, "target imbalance ratio")->capture_default_str();
    prep->add_option("--seed", p_seed, "subsampling seed")->capture_default_str();
    prep->add_option("--out", p_out, "output CSV path");
    prep->callback([&]() { rc = cmd_prep(p_name, p_ir, p_seed, p_out); });

    // resample
    auto* res = app.add_subcommand("resample",
                                   "reduce, oversample and soft-label a dataset (graph relabeling)");
    std::string r_in, r_label = "label", r_cfg, r_out;
    long long r_dims = -1;
    std::uint64_t r_seed = 1;
    res->add_option("--in", r_in, "input dataset CSV")->required();
    res->add_option("--label-column", r_label, "label column name")->capture_default_str();
    res->add_option("--config", r_cfg, "config JSON");
    res->add_option("--dims", r_dims, "reduced dimensionality (0 = keep original space)");
    res->add_option("--seed", r_seed, "stream seed")->capture_default_str();
    res->add_option("--out", r_out, "output soft-label CSV")->required();
    res->callback([&]() { rc = cmd_resample(r_in, r_label, r_cfg, r_dims, r_seed, r_out); });

    // train
    auto* train = app.add_subcommand("train", "fit the full pipeline on a dataset CSV");
    std::string t_in, t_label = "label", t_cfg, t_out;
    std::uint64_t t_seed = 1;
    train->add_option("--in", t_in, "training CSV")->required();
    train->add_option("--label-column", t_label, "label column name")->capture_default_str();
    train->add_option("--config", t_cfg, "config JSON");
    train->add_option("--seed", t_seed, "master seed")->capture_default_str();
    train->add_option("--out-dir", t_out, "model output directory")->required();
    train->callback([&]() { rc = cmd_train(t_in, t_label, t_cfg, t_seed, t_out); });

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a trained model on a dataset CSV");
    std::string e_model, e_in, e_label = "label";
    ev->add_option("--model-dir", e_model, "directory written by train")->required();
    ev->add_option("--in", e_in, "evaluation CSV")->required();
    ev->add_option("--label-column", e_label, "label column name")->capture_default_str();
    ev->callback([&]() { rc = cmd_eval(e_model, e_in, e_label); });

    // bench
    auto* bench = app.add_subcommand("bench", "run the cross-validated method comparison");
    std::string b_cfg, b_out = "bench-out";
    bool b_plot = false;
    bench->add_option("--config", b_cfg, "config JSON")->required();
    bench->add_option("--out-dir", b_out, "output directory")->capture_default_str();
    bench->add_flag("--plot", b_plot, "emit metric-vs-IR SVG charts");
    bench->callback([&]() { rc = cmd_bench(b_cfg, b_out, b_plot); });

    // plot
    auto* plot = app.add_subcommand("plot", "render a scatter or metric-vs-IR chart as SVG");
    std::string pl_kind = "scatter", pl_in, pl_results, pl_metric = "g_mean", pl_prefix, pl_out;
    plot->add_option("--kind", pl_kind, "scatter | lines")->capture_default_str();
    plot->add_option("--in", pl_in, "dataset or soft-label CSV (scatter)");
    plot->add_option("--results", pl_results, "results.csv from bench (lines)");
    plot->add_option("--metric", pl_metric, "f_measure | g_mean | f_plus_g")->capture_default_str();
    plot->add_option("--prefix", pl_prefix, "dataset name prefix to chart (lines)");
    plot->add_option("--out", pl_out, "output SVG path")->required();
    plot->callback([&]() {
        if (pl_kind == "scatter") {
            if (pl_in.empty()) throw std::runtime_error("plot: --in is required for scatter");
            rc = cmd_plot_scatter(pl_in, pl_out);
        } else if (pl_kind == "lines") {
            if (pl_results.empty()) throw std::runtime_error("plot: --results is required for lines");
            rc = cmd_plot_lines(pl_results, pl_metric, pl_prefix, pl_out);
        } else {
            throw std::runtime_error("plot: --kind must be scatter or lines");
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return rc;
}

int dispatch(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("imbal");
    for (const auto& a : args) argv.push_back(a.c_str());
    return dispatch(static_cast<int>(argv.size()), argv.data());
}

} // namespace cli
} // namespace imbl
