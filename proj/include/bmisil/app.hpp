#pragma once

#include "bmisil/augment.hpp"
#include "bmisil/dataset.hpp"
#include "bmisil/error.hpp"
#include "bmisil/eval.hpp"
#include "bmisil/silhouette.hpp"
#include "bmisil/synth.hpp"
#include "bmisil/train.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

// Workflow behind the `bmi-sil` executable. Each cmd_* returns a process exit
// code: 0 ok, 1 usage, 2 I/O, 3 partial batch failure, 4 training divergence,
// 5 degenerate evaluation.
namespace bmisil::app {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kIo = 2,
    kPartialBatch = 3,
    kDiverged = 4,
    kDegenerateEval = 5,
};

int exit_code_for(ErrorCode code);

/// Every tunable of the workflow. Defaults are the module defaults.
struct RunConfig {
    std::uint64_t seed = 0;
    nn::TrainConfig train;
    dataset::SplitSpec split;
    silhouette::ExtractParams extract;
    silhouette::StandardizeParams standardize;
    synth::SynthDatasetSpec synth;
    /// Epoch budget for each candidate during search.
    int search_epochs = 40;
    int basinhop_iterations = 10;

    /// Copies `seed` into the sub-configs that carry one.
    void propagate_seed();
    void validate() const;
};

/// Overlays a JSON document (schema in README) onto `cfg`. Throws
/// InvalidArgument on unknown keys or wrong types.
void apply_json_config(RunConfig& cfg, const std::string& json_text);
void apply_json_config_file(RunConfig& cfg, const std::string& path);

/// Seeds derived from the global seed for the split and weight init.
std::uint64_t split_seed(std::uint64_t seed);
std::uint64_t init_seed(std::uint64_t seed);

// synth --------------------------------------------------------------------

struct SynthResult {
    synth::SynthDataset data;
    std::string manifest_path;
};

/// Writes images plus `manifest.csv` (path,bmi) into out_dir.
SynthResult run_synth(const RunConfig& cfg, const std::string& out_dir);
int cmd_synth(const RunConfig& cfg, const std::string& out_dir, std::ostream& log);

// silhouette ---------------------------------------------------------------

int cmd_silhouette(const RunConfig& cfg, const std::string& manifest, const std::string& out_dir,
                   std::ostream& log);

// train --------------------------------------------------------------------

struct PreparedData {
    dataset::Split<dataset::ParticipantRecord> records;
    std::vector<dataset::LabeledSample> train;
    std::vector<dataset::LabeledSample> val;
    std::vector<dataset::LabeledSample> test;
    dataset::NormMeta norm;
};

/// Loads the manifest, splits with the configured seed and normalises every
/// subset using the training range.
PreparedData prepare_data(const RunConfig& cfg, const std::string& manifest);

struct TrainOutputs {
    std::string model_path;
    std::string history_path;
    /// When set, train.csv / val.csv / test.csv manifests are written here.
    std::optional<std::string> split_dir;
};

std::string history_csv(const nn::History& history);

nn::TrainResult run_train(const RunConfig& cfg, const std::string& manifest, const TrainOutputs& out,
                          std::ostream& log);
int cmd_train(const RunConfig& cfg, const std::string& manifest, const TrainOutputs& out, std::ostream& log);

// eval ---------------------------------------------------------------------

eval::EvalReport run_eval(const std::string& model_path, const std::string& manifest, const std::string& csv_out,
                          const std::string& svg_out);
int cmd_eval(const std::string& model_path, const std::string& manifest, const std::string& csv_out,
             const std::string& svg_out, std::ostream& log);

// search -------------------------------------------------------------------

enum class SearchMode { Grid, BasinHop };

struct SearchOptions {
    SearchMode mode = SearchMode::Grid;
    std::vector<double> learning_rates{0.02};
    std::vector<double> decays{1e-4};
    augment::AugmentBounds bounds;
};

int cmd_search(const RunConfig& cfg, const std::string& manifest, const SearchOptions& opts, std::ostream& log);

}  // namespace bmisil::app
