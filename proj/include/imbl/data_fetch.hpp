#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "imbl/dataset.hpp"

namespace imbl {
namespace data_fetch {

/// One downloadable raw file. A null checksum is recorded on first fetch
/// (trust-on-first-use) and enforced afterwards, so cache corruption and
/// upstream drift surface as errors instead of silently changing results.
struct ManifestFile {
    std::string name;
    std::string url;
    std::optional<std::string> sha256;
};

struct ManifestEntry {
    std::string dataset;
    std::vector<ManifestFile> files;
};

/// Built-in pinned manifest (abalone, covertype, gisette).
std::vector<ManifestEntry> builtin_manifest();

/// Loads a manifest JSON file; schema { dataset: [ {name, url, sha256?} ] }.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

/// Ensures every raw file of `dataset` is cached under raw_dir, downloading
/// on cache miss and verifying checksums. Returns the cached paths.
std::vector<std::filesystem::path> fetch(const ManifestEntry& entry,
                                         const std::filesystem::path& raw_dir);

/// Verifies a cached file against its recorded checksum (if any); records
/// the checksum when absent.
void verify_or_record_checksum(const std::filesystem::path& file,
                               const std::optional<std::string>& pinned);

/// Preprocessing recipe knobs. Defaults carry the pinned negative-class
/// sizes; tests shrink them to run on miniature raw files.
struct PrepRecipe {
    std::size_t negative_count = 0;
    std::size_t pca_dims = 0; // 0 = keep the raw feature space
};

PrepRecipe default_recipe(const std::string& dataset);

/// Applies the named recipe to the cached raw files: encode features, pick
/// the class split, subsample negatives to the pinned count and positives
/// to the requested imbalance ratio.
Dataset prep(const std::string& dataset, const std::filesystem::path& raw_dir, double ir,
             std::uint64_t seed, const PrepRecipe& recipe);

} // namespace data_fetch
} // namespace imbl
