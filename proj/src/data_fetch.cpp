#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "imbl/data_fetch.hpp"
#include "imbl/io.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace imbl {
namespace data_fetch {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<ManifestEntry> builtin_manifest() {
    const std::string uci = "https://archive.ics.uci.edu/ml/machine-learning-databases";
    std::vector<ManifestEntry> m;
    m.push_back({"abalone", {{"abalone.data", uci + "/abalone/abalone.data", std::nullopt}}});
    m.push_back({"covertype", {{"covtype.data.gz", uci + "/covtype/covtype.data.gz", std::nullopt}}});
    m.push_back({"gisette",
                 {{"gisette_train.data", uci + "/gisette/GISETTE/gisette_train.data", std::nullopt},
                  {"gisette_train.labels", uci + "/gisette/GISETTE/gisette_train.labels",
                   std::nullopt},
                  {"gisette_valid.data", uci + "/gisette/GISETTE/gisette_valid.data", std::nullopt},
                  {"gisette_valid.labels", uci + "/gisette/gisette_valid.labels", std::nullopt}}});
    return m;
}

std::vector<ManifestEntry> load_manifest(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw std::runtime_error("manifest: cannot parse " + path.string() + ": " + e.what());
    }
    if (!doc.is_object()) throw std::runtime_error("manifest: top level must be an object");
    std::vector<ManifestEntry> out;
    for (const auto& [dataset, files] : doc.items()) {
        ManifestEntry entry;
        entry.dataset = dataset;
        if (!files.is_array()) throw std::runtime_error("manifest: '" + dataset + "' must be a list");
        for (const auto& f : files) {
            ManifestFile mf;
            mf.name = f.at("name").get<std::string>();
            mf.url = f.at("url").get<std::string>();
            if (f.contains("sha256") && !f["sha256"].is_null()) {
                mf.sha256 = f["sha256"].get<std::string>();
            }
            entry.files.push_back(std::move(mf));
        }
        out.push_back(std::move(entry));
    }
    return out;
}

void verify_or_record_checksum(const fs::path& file, const std::optional<std::string>& pinned) {
    const std::string digest = sha256_hex(read_file(file));
    const fs::path sidecar = file.string() + ".sha256";
    std::string expected;
    if (pinned.has_value()) {
        expected = *pinned;
    } else if (fs::exists(sidecar)) {
        expected = read_file(sidecar);
        while (!expected.empty() && (expected.back() == '\n' || expected.back() == '\r')) {
            expected.pop_back();
        }
    }
    if (!expected.empty() && expected != digest) {
        throw std::runtime_error("checksum mismatch for " + file.string() + " (expected " +
                                 expected + ", got " + digest +
                                 "); delete the cached file and re-fetch");
    }
    if (expected.empty() || !fs::exists(sidecar)) write_file_atomic(sidecar, digest + "\n");
}

namespace {

std::string download(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw std::runtime_error("fetch: bad url " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string base = path_start == std::string::npos ? url : url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(base);
    client.set_follow_location(true);
    client.set_connection_timeout(30);
    client.set_read_timeout(120);
    const httplib::Result res = client.Get(path);
    if (!res) {
        throw std::runtime_error("fetch: download failed for " + url + " (" +
                                 httplib::to_string(res.error()) + ")");
    }
    if (res->status != 200) {
        throw std::runtime_error("fetch: " + url + " returned HTTP " +
                                 std::to_string(res->status));
    }
    return res->body;
}

} // namespace

std::vector<fs::path> fetch(const ManifestEntry& entry, const fs::path& raw_dir) {
    fs::create_directories(raw_dir);
    std::vector<fs::path> paths;
    for (const auto& file : entry.files) {
        const fs::path target = raw_dir / file.name;
        if (!fs::exists(target)) {
            write_file_atomic(target, download(file.url));
        }
        verify_or_record_checksum(target, file.sha256);
        paths.push_back(target);
    }
    return paths;
}

PrepRecipe default_recipe(const std::string& dataset) {
    if (dataset == "abalone") return {.negative_count = 2000, .pca_dims = 0};
    if (dataset == "covertype") return {.negative_count = 5000, .pca_dims = 0};
    if (dataset == "gisette") return {.negative_count = 3500, .pca_dims = 100};
    throw std::invalid_argument("prep: unknown dataset '" + dataset +
                                "' (expected abalone, covertype or gisette)");
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double to_double(const std::string& s, const std::string& context) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw std::runtime_error("prep: non-numeric value '" + s + "' in " + context);
    }
    return v;
}

Dataset parse_abalone(const fs::path& raw_dir) {
    const std::string text = read_file(raw_dir / "abalone.data");
    std::istringstream in(text);
    std::string line;
    std::vector<double> values;
    std::vector<int> labels;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto cells = split(line, ',');
        if (cells.size() != 9) {
            throw std::runtime_error("prep: abalone row with " + std::to_string(cells.size()) +
                                     " fields");
        }
        // one-hot sex, then the seven body measurements
        const std::string& sex = cells[0];
        values.push_back(sex == "M" ? 1.0 : 0.0);
        values.push_back(sex == "F" ? 1.0 : 0.0);
        values.push_back(sex == "I" ? 1.0 : 0.0);
        for (std::size_t i = 1; i <= 7; ++i) values.push_back(to_double(cells[i], "abalone"));
        const int rings = static_cast<int>(to_double(cells[8], "abalone rings"));
        // young shells form the majority class
        labels.push_back(rings <= 9 ? 0 : 1);
        ++n;
    }
    if (n == 0) throw std::runtime_error("prep: abalone.data is empty");
    Matrix f(n, 10);
    f.values() = std::move(values);
    return Dataset(std::move(f), std::move(labels), "abalone");
}

Dataset parse_covertype(const fs::path& raw_dir) {
    fs::path file = raw_dir / "covtype.data";
    if (!fs::exists(file)) file = raw_dir / "covtype.data.gz";
    if (!fs::exists(file)) throw std::runtime_error("prep: covtype raw file missing; run fetch");
    const std::string text = read_maybe_gzip(file);
    std::istringstream in(text);
    std::string line;
    std::vector<double> values;
    std::vector<int> labels;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        const auto cells = split(line, ',');
        if (cells.size() != 55) {
            throw std::runtime_error("prep: covertype row with " + std::to_string(cells.size()) +
                                     " fields");
        }
        const int cover = static_cast<int>(to_double(cells[54], "covertype class"));
        if (cover != 1 && cover != 2) continue; // Spruce-Fir vs Lodgepole Pine only
        for (std::size_t i = 0; i < 54; ++i) values.push_back(to_double(cells[i], "covertype"));
        labels.push_back(cover == 1 ? 0 : 1);
        ++n;
    }
    if (n == 0) throw std::runtime_error("prep: covertype has no class 1/2 rows");
    Matrix f(n, 54);
    f.values() = std::move(values);
    return Dataset(std::move(f), std::move(labels), "covertype");
}

Dataset parse_gisette(const fs::path& raw_dir) {
    std::vector<double> values;
    std::vector<int> labels;
    std::size_t n = 0, dims = 0;
    for (const char* part : {"train", "valid"}) {
        const fs::path data = raw_dir / (std::string("gisette_") + part + ".data");
        const fs::path lab = raw_dir / (std::string("gisette_") + part + ".labels");
        if (!fs::exists(data) || !fs::exists(lab)) {
            if (std::string(part) == "train") {
                throw std::runtime_error("prep: gisette train files missing; run fetch");
            }
            continue;
        }
        std::istringstream din(read_file(data)), lin(read_file(lab));
        std::string dline, lline;
        while (std::getline(din, dline)) {
            if (dline.empty() || dline == "\r") continue;
            if (!std::getline(lin, lline)) {
                throw std::runtime_error("prep: gisette labels shorter than data");
            }
            std::istringstream row(dline);
            double v = 0.0;
            std::size_t count = 0;
            while (row >> v) {
                values.push_back(v);
                ++count;
            }
            if (dims == 0) dims = count;
            if (count != dims) throw std::runtime_error("prep: ragged gisette data row");
            std::istringstream ls(lline);
            int y = 0;
            if (!(ls >> y) || (y != 1 && y != -1)) {
                throw std::runtime_error("prep: bad gisette label '" + lline + "'");
            }
            labels.push_back(y == -1 ? 0 : 1);
            ++n;
        }
    }
    if (n == 0) throw std::runtime_error("prep: gisette raw data is empty");
    Matrix f(n, dims);
    f.values() = std::move(values);
    return Dataset(std::move(f), std::move(labels), "gisette");
}

// uniform class subsample preserving row order
Dataset subsample_class(const Dataset& ds, int label, std::size_t target, RandomStream& stream) {
    const auto members = ds.indices_of(label);
    if (members.size() < target) {
        throw std::runtime_error("prep: class " + std::to_string(label) + " has only " +
                                 std::to_string(members.size()) + " rows, recipe needs " +
                                 std::to_string(target));
    }
    if (members.size() == target) return ds;
    const auto chosen = stream.sample_without_replacement(members.size(), target);
    std::vector<bool> keep(ds.size(), false);
    for (std::size_t i = 0; i < ds.size(); ++i) keep[i] = ds.labels[i] != label;
    for (std::size_t c : chosen) keep[members[c]] = true;
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (keep[i]) rows.push_back(i);
    }
    return ds.select(rows, ds.name);
}

} // namespace

Dataset prep(const std::string& dataset, const fs::path& raw_dir, double ir, std::uint64_t seed,
             const PrepRecipe& recipe) {
    if (!(ir > 1.0)) throw std::invalid_argument("prep: imbalance ratio must be > 1");
    Dataset full = dataset == "abalone"     ? parse_abalone(raw_dir)
                   : dataset == "covertype" ? parse_covertype(raw_dir)
                   : dataset == "gisette"   ? parse_gisette(raw_dir)
                                            : throw std::invalid_argument(
                                                  "prep: unknown dataset '" + dataset + "'");

    if (recipe.pca_dims > 0 && recipe.pca_dims < full.dim()) {
        const Dataset scaled = apply_scaler(fit_scaler(full), full);
        full = pca_reduce(scaled, recipe.pca_dims).first;
    }

    RandomStream neg_stream(derive_seed(seed, 0x4e5));
    Dataset trimmed = subsample_class(full, 0, recipe.negative_count, neg_stream);

    const auto target_pos =
        static_cast<std::size_t>(std::llround(static_cast<double>(recipe.negative_count) / ir));
    if (target_pos < 2) throw std::invalid_argument("prep: ratio leaves fewer than 2 positives");
    RandomStream pos_stream(derive_seed(seed, 0x905));
    Dataset out = subsample_class(trimmed, 1, target_pos, pos_stream);

    std::ostringstream name;
    name << dataset << "_ir" << (ir == std::floor(ir) ? static_cast<long long>(ir) : ir);
    out.name = name.str();
    return out;
}

} // namespace data_fetch
} // namespace imbl
