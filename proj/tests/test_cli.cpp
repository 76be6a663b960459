#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <zlib.h>

#include "imbl/cli.hpp"
#include "imbl/data_fetch.hpp"
#include "imbl/io.hpp"

using namespace imbl;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
    std::size_t count = 0, pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

std::string gzip_compress(const std::string& text) {
    z_stream strm{};
    REQUIRE(deflateInit2(&strm, Z_BEST_SPEED, Z_DEFLATED, 16 + MAX_WBITS, 8,
                         Z_DEFAULT_STRATEGY) == Z_OK);
    std::string out(text.size() + 128, '\0');
    strm.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(text.data()));
    strm.avail_in = static_cast<uInt>(text.size());
    strm.next_out = reinterpret_cast<Bytef*>(out.data());
    strm.avail_out = static_cast<uInt>(out.size());
    REQUIRE(deflate(&strm, Z_FINISH) == Z_STREAM_END);
    out.resize(strm.total_out);
    deflateEnd(&strm);
    return out;
}

const char* kTinyBench = R"({
  "bef": {"k_heads": 2, "ir_prime": 1.0},
  "csnca": {"target_dim": 2, "max_iters": 10},
  "train": {"epochs": 20},
  "folds": 2,
  "seeds": [1],
  "methods": ["rus_nn"],
  "datasets": [{"type": "synthetic", "dims": 3, "negatives": 30, "ir": 3, "seed": 4, "name": "tiny_ir3"}]
})";

} // namespace

TEST_CASE("bench fixture run succeeds and writes outputs") {
    const fs::path dir = fresh_dir("imbl_cli_bench");
    write_file_atomic(dir / "cfg.json", kTinyBench);
    const int rc = cli::dispatch({"bench", "--config", (dir / "cfg.json").string(), "--out-dir",
                                  (dir / "out").string()});
    CHECK(rc == 0);
    CHECK(fs::exists(dir / "out" / "results.json"));
    CHECK(fs::exists(dir / "out" / "results.csv"));
    CHECK(fs::exists(dir / "out" / "resolved-config.json"));

    // the echoed config names every default explicitly
    const std::string resolved = read_file(dir / "out" / "resolved-config.json");
    for (const char* key : {"k_heads", "ir_prime", "target_dim", "learning_rate", "p_delta",
                            "batch_size", "threshold", "seeds", "methods"}) {
        CHECK(resolved.find(key) != std::string::npos);
    }

    const std::string csv = read_file(dir / "out" / "results.csv");
    CHECK(csv.rfind("dataset,method,fold,seed,tp,fn,fp,tn,f_measure,g_mean,f_plus_g\n", 0) == 0);
    CHECK(count_occurrences(csv, "\n") == 3); // header + 2 cells
}

TEST_CASE("identical bench runs produce byte-identical results") {
    const fs::path dir = fresh_dir("imbl_cli_det");
    write_file_atomic(dir / "cfg.json", kTinyBench);
    REQUIRE(cli::dispatch({"bench", "--config", (dir / "cfg.json").string(), "--out-dir",
                           (dir / "a").string()}) == 0);
    REQUIRE(cli::dispatch({"bench", "--config", (dir / "cfg.json").string(), "--out-dir",
                           (dir / "b").string()}) == 0);
    CHECK(read_file(dir / "a" / "results.json") == read_file(dir / "b" / "results.json"));
    CHECK(read_file(dir / "a" / "results.csv") == read_file(dir / "b" / "results.csv"));
}

TEST_CASE("usage errors exit 2, config validation errors exit 1") {
    CHECK(cli::dispatch({"--frobnicate"}) == 2);
    CHECK(cli::dispatch({"no-such-command"}) == 2);
    CHECK(cli::dispatch({"bench"}) == 2); // missing required --config

    const fs::path dir = fresh_dir("imbl_cli_badcfg");
    write_file_atomic(dir / "bad.json", R"({"bef": {"k_heads": 0}})");
    CHECK(cli::dispatch({"bench", "--config", (dir / "bad.json").string(), "--out-dir",
                         (dir / "out").string()}) == 1);
    write_file_atomic(dir / "unknown.json", R"({"mystery_knob": 3})");
    CHECK(cli::dispatch({"bench", "--config", (dir / "unknown.json").string(), "--out-dir",
                         (dir / "out").string()}) == 1);
}

TEST_CASE("config parser reports the offending field") {
    CHECK_THROWS_WITH_AS(cli::parse_run_config(R"({"bef": {"k_heads": 0}})"),
                         doctest::Contains("k_heads"), std::exception);
    CHECK_THROWS_WITH_AS(cli::parse_run_config(R"({"mystery": 1})"),
                         doctest::Contains("mystery"), std::exception);
    CHECK_THROWS_WITH_AS(cli::parse_run_config(R"({"gss": {"p_delta": 2.0}})"),
                         doctest::Contains("p_delta"), std::exception);
    CHECK_THROWS_WITH_AS(cli::parse_run_config("not json"), doctest::Contains("JSON"),
                         std::exception);
    const cli::RunConfig defaults = cli::parse_run_config("{}");
    CHECK(defaults.pipeline.bef.k_heads == 5);
    CHECK(defaults.pipeline.train.epochs == 200);
}

TEST_CASE("gen-data writes a loadable csv with exact counts") {
    const fs::path dir = fresh_dir("imbl_cli_gen");
    const fs::path out = dir / "toy.csv";
    CHECK(cli::dispatch({"gen-data", "--dims", "4", "--negatives", "50", "--ir", "5", "--seed",
                         "9", "--out", out.string()}) == 0);
    const Dataset ds = load_csv(out);
    CHECK(ds.negatives() == 50);
    CHECK(ds.positives() == 10);
    CHECK(ds.dim() == 4);
}

TEST_CASE("resample emits the soft-label csv layout") {
    const fs::path dir = fresh_dir("imbl_cli_resample");
    const fs::path data = dir / "in.csv";
    REQUIRE(cli::dispatch({"gen-data", "--dims", "4", "--negatives", "24", "--ir", "2", "--seed",
                           "5", "--out", data.string()}) == 0);
    const fs::path out = dir / "soft.csv";
    CHECK(cli::dispatch({"resample", "--in", data.string(), "--dims", "2", "--out",
                         out.string()}) == 0);
    std::ifstream in(out);
    std::string header;
    std::getline(in, header);
    CHECK(header == "f1,f2,p_neg,p_pos,origin");
    CHECK(fs::exists(dir / "soft.config.json"));
}

TEST_CASE("train and eval round-trip through the model directory") {
    const fs::path dir = fresh_dir("imbl_cli_train");
    const fs::path data = dir / "train.csv";
    REQUIRE(cli::dispatch({"gen-data", "--dims", "5", "--negatives", "40", "--ir", "4", "--seed",
                           "6", "--out", data.string()}) == 0);
    write_file_atomic(dir / "cfg.json",
                      R"({"bef": {"k_heads": 2, "ir_prime": 1.0},
                          "csnca": {"target_dim": 2, "max_iters": 10},
                          "train": {"epochs": 30}})");
    CHECK(cli::dispatch({"train", "--in", data.string(), "--config", (dir / "cfg.json").string(),
                         "--out-dir", (dir / "model").string()}) == 0);
    CHECK(fs::exists(dir / "model" / "pipeline.txt"));
    CHECK(fs::exists(dir / "model" / "projection.csv"));
    CHECK(fs::exists(dir / "model" / "resolved-config.json"));
    CHECK(cli::dispatch({"eval", "--model-dir", (dir / "model").string(), "--in",
                         data.string()}) == 0);
}

TEST_CASE("scatter plot contains one circle per real point") {
    const fs::path dir = fresh_dir("imbl_cli_scatter");
    const fs::path data = dir / "pts.csv";
    REQUIRE(cli::dispatch({"gen-data", "--dims", "2", "--negatives", "80", "--ir", "4", "--seed",
                           "3", "--out", data.string()}) == 0);
    const fs::path out = dir / "pts.svg";
    CHECK(cli::dispatch({"plot", "--kind", "scatter", "--in", data.string(), "--out",
                         out.string()}) == 0);
    const std::string svg_text = read_file(out);
    CHECK(count_occurrences(svg_text, "<circle") == 100); // 80 negatives + 20 positives
    CHECK(count_occurrences(svg_text, "class=\"pt synthetic\"") == 0);
}

TEST_CASE("scatter plot distinguishes synthetic rows") {
    const fs::path dir = fresh_dir("imbl_cli_scatter_soft");
    write_file_atomic(dir / "soft.csv",
                      "f1,f2,p_neg,p_pos,origin\n"
                      "0,0,1,0,real\n"
                      "1,1,0,1,real\n"
                      "0.5,0.5,0.3,0.7,synthetic\n");
    const fs::path out = dir / "soft.svg";
    CHECK(cli::dispatch({"plot", "--kind", "scatter", "--in", (dir / "soft.csv").string(),
                         "--out", out.string()}) == 0);
    const std::string svg_text = read_file(out);
    CHECK(count_occurrences(svg_text, "<circle") == 2);
    CHECK(count_occurrences(svg_text, "class=\"pt synthetic\"") == 1);
}

TEST_CASE("metric-vs-ir chart carries one tick per imbalance level") {
    const fs::path dir = fresh_dir("imbl_cli_lines");
    std::string csv = "dataset,method,fold,seed,tp,fn,fp,tn,f_measure,g_mean,f_plus_g\n";
    for (const char* ir : {"10", "30", "50", "100"}) {
        csv += std::string("cov_ir") + ir + ",rus_nn,0,1,5,5,5,85,0.5,0.6,1.1\n";
        csv += std::string("cov_ir") + ir + ",smote_nn,0,1,5,5,5,85,0.4,0.5,0.9\n";
    }
    write_file_atomic(dir / "results.csv", csv);
    const fs::path out = dir / "chart.svg";
    CHECK(cli::dispatch({"plot", "--kind", "lines", "--results", (dir / "results.csv").string(),
                         "--metric", "g_mean", "--out", out.string()}) == 0);
    const std::string svg_text = read_file(out);
    CHECK(count_occurrences(svg_text, "class=\"xtick\"") == 4);
    CHECK(count_occurrences(svg_text, "<polyline") == 2);
    CHECK(cli::dispatch({"plot", "--kind", "lines", "--results", (dir / "results.csv").string(),
                         "--metric", "nope", "--out", out.string()}) == 1);
}

TEST_CASE("fetch is idempotent on a warm cache and detects corruption") {
    const fs::path dir = fresh_dir("imbl_cli_fetch");
    setenv("IMB_DATA_DIR", dir.c_str(), 1);
    fs::create_directories(dir / "raw");
    write_file_atomic(dir / "raw" / "mini.data", "1,2,3\n");
    write_file_atomic(dir / "manifest.json",
                      R"({"mini": [{"name": "mini.data", "url": "http://127.0.0.1:1/mini.data"}]})");

    // warm cache: no network needed, checksum recorded
    CHECK(cli::dispatch({"fetch", "mini", "--manifest", (dir / "manifest.json").string()}) == 0);
    CHECK(fs::exists(dir / "raw" / "mini.data.sha256"));
    CHECK(cli::dispatch({"fetch", "mini", "--manifest", (dir / "manifest.json").string()}) == 0);

    // corrupt the cached file: the recorded checksum must catch it
    write_file_atomic(dir / "raw" / "mini.data", "9,9,9\n");
    CHECK(cli::dispatch({"fetch", "mini", "--manifest", (dir / "manifest.json").string()}) == 1);

    CHECK(cli::dispatch({"fetch", "unknown-ds", "--manifest",
                         (dir / "manifest.json").string()}) == 1);
    unsetenv("IMB_DATA_DIR");
}

TEST_CASE("sha256 matches the FIPS test vectors") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("prep recipes pin the published negative counts") {
    CHECK(data_fetch::default_recipe("abalone").negative_count == 2000);
    CHECK(data_fetch::default_recipe("covertype").negative_count == 5000);
    CHECK(data_fetch::default_recipe("gisette").negative_count == 3500);
    CHECK(data_fetch::default_recipe("gisette").pca_dims == 100);
    CHECK_THROWS_AS(data_fetch::default_recipe("mnist"), std::invalid_argument);
}

TEST_CASE("abalone recipe: one-hot sex, age split, exact counts") {
    const fs::path dir = fresh_dir("imbl_prep_abalone");
    std::string raw;
    // 6 young (rings <= 9, negative) and 4 old (positive)
    for (int i = 0; i < 6; ++i) {
        raw += "M,0.4,0.3,0.1,0.5,0.2,0.1,0.15," + std::to_string(5 + i) + "\n";
    }
    for (int i = 0; i < 4; ++i) {
        raw += "F,0.6,0.5,0.2,0.9,0.4,0.2,0.25," + std::to_string(11 + i) + "\n";
    }
    write_file_atomic(dir / "abalone.data", raw);
    const data_fetch::PrepRecipe recipe{.negative_count = 4, .pca_dims = 0};
    const Dataset ds = data_fetch::prep("abalone", dir, 2.0, 1, recipe);
    CHECK(ds.negatives() == 4);
    CHECK(ds.positives() == 2);
    CHECK(ds.dim() == 10); // 3 one-hot + 7 measurements
    CHECK(ds.name == "abalone_ir2");
    // sex one-hot: first three features sum to 1 on every row
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(ds.features(i, 0) + ds.features(i, 1) + ds.features(i, 2) == 1.0);
    }
}

TEST_CASE("covertype recipe reads gzip, keeps classes 1 and 2 only") {
    const fs::path dir = fresh_dir("imbl_prep_cov");
    std::string raw;
    const auto row = [](int cover) {
        std::string r;
        for (int c = 0; c < 54; ++c) r += std::to_string(c % 7) + ",";
        return r + std::to_string(cover) + "\n";
    };
    for (int i = 0; i < 5; ++i) raw += row(1); // negatives
    for (int i = 0; i < 3; ++i) raw += row(2); // positives
    raw += row(3);                             // dropped
    write_file_atomic(dir / "covtype.data.gz", gzip_compress(raw));
    const data_fetch::PrepRecipe recipe{.negative_count = 4, .pca_dims = 0};
    const Dataset ds = data_fetch::prep("covertype", dir, 2.0, 2, recipe);
    CHECK(ds.negatives() == 4);
    CHECK(ds.positives() == 2);
    CHECK(ds.dim() == 54);
}

TEST_CASE("gisette recipe merges train and valid splits and reduces dimensionality") {
    const fs::path dir = fresh_dir("imbl_prep_gis");
    RandomStream s(3);
    std::string train_data, train_labels, valid_data, valid_labels;
    const auto row = [&](int label, std::string& data, std::string& labels) {
        for (int c = 0; c < 6; ++c) {
            data += std::to_string(static_cast<int>(s.uniform(0, 999))) + (c == 5 ? "" : " ");
        }
        data += "\n";
        labels += (label == 1 ? "1" : "-1");
        labels += "\n";
    };
    for (int i = 0; i < 4; ++i) row(0, train_data, train_labels); // negatives (-1)
    for (int i = 0; i < 3; ++i) row(1, train_data, train_labels);
    for (int i = 0; i < 2; ++i) row(0, valid_data, valid_labels);
    for (int i = 0; i < 1; ++i) row(1, valid_data, valid_labels);
    write_file_atomic(dir / "gisette_train.data", train_data);
    write_file_atomic(dir / "gisette_train.labels", train_labels);
    write_file_atomic(dir / "gisette_valid.data", valid_data);
    write_file_atomic(dir / "gisette_valid.labels", valid_labels);

    const data_fetch::PrepRecipe recipe{.negative_count = 6, .pca_dims = 3};
    const Dataset ds = data_fetch::prep("gisette", dir, 3.0, 3, recipe);
    CHECK(ds.negatives() == 6); // 4 train + 2 valid
    CHECK(ds.positives() == 2); // round(6/3)
    CHECK(ds.dim() == 3);       // reduced
}

TEST_CASE("prep propagates infeasible recipes as errors") {
    const fs::path dir = fresh_dir("imbl_prep_bad");
    write_file_atomic(dir / "abalone.data", "M,0.4,0.3,0.1,0.5,0.2,0.1,0.15,5\n");
    const data_fetch::PrepRecipe recipe{.negative_count = 5, .pca_dims = 0};
    CHECK_THROWS_WITH_AS(data_fetch::prep("abalone", dir, 2.0, 1, recipe),
                         doctest::Contains("class 0"), std::runtime_error);
    CHECK_THROWS_AS(data_fetch::prep("covertype", dir, 2.0, 1, recipe), std::runtime_error);
}

TEST_CASE("builtin manifest covers the three benchmark datasets") {
    const auto manifest = data_fetch::builtin_manifest();
    REQUIRE(manifest.size() == 3);
    CHECK(manifest[0].dataset == "abalone");
    CHECK(manifest[1].dataset == "covertype");
    CHECK(manifest[2].dataset == "gisette");
    for (const auto& entry : manifest) {
        for (const auto& f : entry.files) {
            CHECK(f.url.rfind("https://", 0) == 0);
        }
    }
}

TEST_CASE("shipped configs parse and validate") {
    for (const char* name : {"tiny.json", "desk-ir50.json", "synthetic-suite.json"}) {
        const fs::path path = fs::path(IMBL_SOURCE_DIR) / "configs" / name;
        REQUIRE(fs::exists(path));
        const cli::RunConfig cfg = cli::parse_run_config(read_file(path));
        CHECK(!cfg.datasets.empty());
        CHECK(!cfg.methods.empty());
    }
    const auto manifest =
        data_fetch::load_manifest(fs::path(IMBL_SOURCE_DIR) / "manifest.json");
    CHECK(manifest.size() == 3);
}
