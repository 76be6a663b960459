#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "imbl/pipeline.hpp"

namespace imbl {
namespace cli {

struct SyntheticSpec {
    GenSpec gen;
    std::uint64_t seed = 7;
    std::string name; // empty = generator default
};

struct CsvSpec {
    std::filesystem::path path;
    std::string label_column = "label";
    std::string name; // empty = file stem
};

using DatasetSpec = std::variant<SyntheticSpec, CsvSpec>;

/// Fully-resolved run configuration: pipeline knobs plus the dataset and
/// method lists a bench run sweeps over.
struct RunConfig {
    pipeline::PipelineConfig pipeline;
    std::vector<DatasetSpec> datasets;
    std::vector<std::string> methods = {pipeline::kMethodMain, pipeline::kMethodSmoteNn,
                                        pipeline::kMethodRusNn};
};

/// Parses and validates a config document. Unknown keys and out-of-domain
/// values are errors naming the field. The file may omit any field; the
/// result always carries explicit values for all of them.
RunConfig parse_run_config(const std::string& json_text);

/// The fully-resolved configuration echoed back as JSON (defaults included).
std::string resolved_config_json(const RunConfig& cfg);

std::vector<Dataset> materialize_datasets(const RunConfig& cfg);

std::string report_to_json(const pipeline::ExperimentReport& report,
                           const std::string& resolved_config);
std::string report_to_csv(const pipeline::ExperimentReport& report);

/// Command-line entry point. Returns 0 on success, 1 on runtime errors,
/// 2 on usage errors.
int dispatch(int argc, const char* const* argv);
int dispatch(const std::vector<std::string>& args);

} // namespace cli
} // namespace imbl
