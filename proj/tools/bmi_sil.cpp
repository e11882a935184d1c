// bmi-sil: synthesize silhouettes, extract and standardize them, train the
// BMI regressor, evaluate it, and search hyperparameters.

#include "bmisil/app.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

using bmisil::app::RunConfig;

// Flags are parsed into optionals so that a --config file can supply values
// that explicit flags then override.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> lr, decay, rotation, shift;
    std::optional<int> batch_size, max_epochs, patience;
    bool no_hflip = false;
    std::optional<double> train_frac, val_frac, test_frac;
    std::optional<int> threshold, min_thickness, connectivity, se;
    bool subject_lighter = false;
    std::optional<int> standard_width, pad_margin;
    std::optional<int> n;
    std::optional<double> noise_sd;
    bool photo = false;
    bool floor_line = false;
    std::optional<int> search_epochs, bh_iterations;

    void apply(RunConfig& c) const {
        if (seed) c.seed = *seed;
        if (lr) c.train.learning_rate = *lr;
        if (decay) c.train.decay = *decay;
        if (rotation) c.train.augment.rotation_deg = *rotation;
        if (shift) c.train.augment.width_shift_frac = *shift;
        if (no_hflip) c.train.augment.hflip = false;
        if (batch_size) c.train.batch_size = *batch_size;
        if (max_epochs) c.train.max_epochs = *max_epochs;
        if (patience) c.train.patience = *patience;
        if (train_frac) c.split.train_fraction = *train_frac;
        if (val_frac) c.split.val_fraction = *val_frac;
        if (test_frac) c.split.test_fraction = *test_frac;
        if (threshold) c.extract.fixed_threshold = *threshold;
        if (min_thickness) c.extract.min_thickness = *min_thickness;
        if (connectivity) {
            c.extract.connectivity =
                *connectivity == 4 ? bmisil::imgops::Connectivity::Four : bmisil::imgops::Connectivity::Eight;
        }
        if (se) c.extract.opening_se_w = c.extract.opening_se_h = *se;
        if (subject_lighter) c.extract.subject_darker = false;
        if (standard_width) c.standardize.standard_width = *standard_width;
        if (pad_margin) c.standardize.pad_margin = *pad_margin;
        if (n) c.synth.n = *n;
        if (noise_sd) c.synth.noise_sd = *noise_sd;
        if (photo) c.synth.photo_mode = true;
        if (floor_line) c.synth.floor_line = true;
        if (search_epochs) c.search_epochs = *search_epochs;
        if (bh_iterations) c.basinhop_iterations = *bh_iterations;
    }
};

void add_train_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--lr", o.lr, "Adam learning rate (default 0.02)");
    cmd->add_option("--decay", o.decay, "Learning-rate decay per step (default 1e-4)");
    cmd->add_option("--batch-size", o.batch_size, "Minibatch size (default 16)");
    cmd->add_option("--max-epochs", o.max_epochs, "Epoch limit (default 2000)");
    cmd->add_option("--patience", o.patience, "Early-stopping patience in epochs (default 50)");
    cmd->add_option("--augment-rotation", o.rotation, "Max rotation in degrees (default 2)");
    cmd->add_option("--augment-shift", o.shift, "Max width shift fraction (default 0.02)");
    cmd->add_flag("--no-hflip", o.no_hflip, "Disable horizontal flips");
    cmd->add_option("--train-frac", o.train_frac, "Training fraction (default 0.5)");
    cmd->add_option("--val-frac", o.val_frac, "Validation fraction (default 0.25)");
    cmd->add_option("--test-frac", o.test_frac, "Test fraction (default 0.25)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BMI regression from binary body silhouettes", "bmi-sil"};
    app.require_subcommand(1);
    app.fallthrough();

    Overrides o;
    std::string config_path;
    app.add_option("--seed", o.seed, "Global seed")->capture_default_str();
    app.add_option("--config", config_path, "JSON config; explicit flags take precedence");

    std::string out_dir;
    auto* synth = app.add_subcommand("synth", "Generate a labelled synthetic silhouette dataset");
    synth->add_option("--n", o.n, "Number of samples (default 161)");
    synth->add_option("--out", out_dir, "Output directory")->required();
    synth->add_option("--noise-sd", o.noise_sd, "Label noise in kg/m^2 (default 0.5)");
    synth->add_flag("--photo", o.photo, "Emit RGB pseudo-photographs instead of masks");
    synth->add_flag("--floor-line", o.floor_line, "Add a 1-px floor marking to pseudo-photographs");

    std::string manifest;
    auto* sil = app.add_subcommand("silhouette", "Extract and standardize silhouettes from photographs");
    sil->add_option("--manifest", manifest, "CSV manifest with a 'path' column")->required();
    sil->add_option("--out", out_dir, "Output directory")->required();
    sil->add_option("--threshold", o.threshold, "Fixed threshold (default: Otsu)");
    sil->add_flag("--subject-lighter", o.subject_lighter, "Subject is lighter than the background");
    sil->add_option("--opening-se", o.se, "Odd square structuring element size (default 3)");
    sil->add_option("--min-thickness", o.min_thickness, "Minimum interior L1 depth kept (default 2)");
    sil->add_option("--connectivity", o.connectivity, "4 or 8 (default 8)")->check(CLI::IsMember({4, 8}));
    sil->add_option("--standard-width", o.standard_width, "Intermediate width (default 256)");
    sil->add_option("--pad-margin", o.pad_margin, "Padding before final resize (default 8)");

    std::string model_out, history_out, split_dir;
    auto* train = app.add_subcommand("train", "Train the CNN regressor on labelled silhouettes");
    train->add_option("--manifest", manifest, "CSV manifest (path,bmi or path,mass_kg,height_m)")->required();
    train->add_option("--model-out", model_out, "Model file to write")->required();
    train->add_option("--history-out", history_out, "History CSV (default: <model-out>.history.csv)");
    train->add_option("--split-out", split_dir, "Directory for train/val/test manifests");
    add_train_flags(train, o);

    std::string model_path, csv_out, svg_out;
    auto* ev = app.add_subcommand("eval", "Evaluate a model on a labelled manifest");
    ev->add_option("--model", model_path, "Model file")->required();
    ev->add_option("--manifest", manifest, "Labelled manifest")->required();
    ev->add_option("--csv-out", csv_out, "Scatter CSV path")->required();
    ev->add_option("--svg-out", svg_out, "Scatter SVG path")->required();

    std::string mode = "grid";
    bmisil::app::SearchOptions search_opts;
    std::vector<double> lr_grid, decay_grid;
    auto* search = app.add_subcommand("search", "Grid search over lr x decay, or basin hopping over augmentation");
    search->add_option("--manifest", manifest, "Labelled manifest")->required();
    search->add_option("--mode", mode, "grid or basinhop")->check(CLI::IsMember({"grid", "basinhop"}));
    search->add_option("--lr-grid", lr_grid, "Learning rates")->delimiter(',');
    search->add_option("--decay-grid", decay_grid, "Decay values")->delimiter(',');
    search->add_option("--search-epochs", o.search_epochs, "Epoch budget per candidate (default 40)");
    search->add_option("--iterations", o.bh_iterations, "Basin-hopping iterations (default 10)");
    search->add_option("--rotation-max", search_opts.bounds.rotation_high, "Upper rotation bound (default 10)");
    search->add_option("--shift-max", search_opts.bounds.shift_high, "Upper shift bound (default 0.1)");
    add_train_flags(search, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : bmisil::app::kUsage;
    }

    RunConfig cfg;
    try {
        if (!config_path.empty()) bmisil::app::apply_json_config_file(cfg, config_path);
        o.apply(cfg);
        cfg.propagate_seed();
        cfg.validate();
    } catch (const bmisil::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code() == bmisil::ErrorCode::IoError ? bmisil::app::kIo : bmisil::app::kUsage;
    }

    if (*synth) return bmisil::app::cmd_synth(cfg, out_dir, std::cout);
    if (*sil) return bmisil::app::cmd_silhouette(cfg, manifest, out_dir, std::cout);
    if (*train) {
        bmisil::app::TrainOutputs outs{model_out, history_out.empty() ? model_out + ".history.csv" : history_out,
                                       split_dir.empty() ? std::nullopt : std::optional<std::string>(split_dir)};
        return bmisil::app::cmd_train(cfg, manifest, outs, std::cout);
    }
    if (*ev) return bmisil::app::cmd_eval(model_path, manifest, csv_out, svg_out, std::cout);
    if (*search) {
        search_opts.mode = mode == "basinhop" ? bmisil::app::SearchMode::BasinHop : bmisil::app::SearchMode::Grid;
        if (!lr_grid.empty()) search_opts.learning_rates = lr_grid;
        if (!decay_grid.empty()) search_opts.decays = decay_grid;
        return bmisil::app::cmd_search(cfg, manifest, search_opts, std::cout);
    }
    return bmisil::app::kUsage;
}
