#include "bmisil/app.hpp"

#include "bmisil/optimize.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace bmisil::app {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::IoError:
        case ErrorCode::ManifestParseError:
        case ErrorCode::ModelFormat:
        case ErrorCode::UnsupportedMagic:
        case ErrorCode::MaxvalNot255:
        case ErrorCode::TruncatedData:
            return kIo;
        case ErrorCode::DivergedLoss:
            return kDiverged;
        case ErrorCode::ZeroVariance:
            return kDegenerateEval;
        case ErrorCode::InvalidArgument:
        case ErrorCode::AngleOutOfRange:
        case ErrorCode::ShiftOutOfRange:
        case ErrorCode::EvenStructuringElement:
        case ErrorCode::BoundsInverted:
        case ErrorCode::EmptyGrid:
            return kUsage;
        default:
            return kIo;
    }
}

void RunConfig::propagate_seed() {
    train.seed = seed;
    split.seed = split_seed(seed);
    synth.seed = seed;
}

void RunConfig::validate() const {
    train.validate();
    split.validate();
    extract.validate();
    standardize.validate();
    synth.validate();
    if (search_epochs < 1) fail(ErrorCode::InvalidArgument, "search_epochs must be >= 1");
    if (basinhop_iterations < 1) fail(ErrorCode::InvalidArgument, "basinhop_iterations must be >= 1");
}

std::uint64_t split_seed(std::uint64_t seed) { return Rng::derive(seed, 0x5011); }
std::uint64_t init_seed(std::uint64_t seed) { return Rng::derive(seed, 0x1417); }

namespace {

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(ErrorCode::InvalidArgument, std::string("config key '") + key + "': " + e.what());
    }
}

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) fail(ErrorCode::InvalidArgument, "config section '" + where + "' must be an object");
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) fail(ErrorCode::InvalidArgument, "unknown config key '" + where + "." + key + "'");
    }
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void apply_json_config(RunConfig& cfg, const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        fail(ErrorCode::InvalidArgument, std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(doc, {"seed", "train", "augment", "split", "extract", "standardize", "synth", "search"}, "");
    read_field(doc, "seed", cfg.seed);
    if (doc.contains("train")) {
        const auto& t = doc["train"];
        reject_unknown(t, {"learning_rate", "decay", "beta1", "beta2", "epsilon", "batch_size", "max_epochs",
                           "patience", "min_delta"},
                       "train");
        read_field(t, "learning_rate", cfg.train.learning_rate);
        read_field(t, "decay", cfg.train.decay);
        read_field(t, "beta1", cfg.train.beta1);
        read_field(t, "beta2", cfg.train.beta2);
        read_field(t, "epsilon", cfg.train.epsilon);
        read_field(t, "batch_size", cfg.train.batch_size);
        read_field(t, "max_epochs", cfg.train.max_epochs);
        read_field(t, "patience", cfg.train.patience);
        read_field(t, "min_delta", cfg.train.min_delta);
    }
    if (doc.contains("augment")) {
        const auto& a = doc["augment"];
        reject_unknown(a, {"rotation_deg", "width_shift_frac", "hflip"}, "augment");
        read_field(a, "rotation_deg", cfg.train.augment.rotation_deg);
        read_field(a, "width_shift_frac", cfg.train.augment.width_shift_frac);
        read_field(a, "hflip", cfg.train.augment.hflip);
    }
    if (doc.contains("split")) {
        const auto& s = doc["split"];
        reject_unknown(s, {"train", "val", "test"}, "split");
        read_field(s, "train", cfg.split.train_fraction);
        read_field(s, "val", cfg.split.val_fraction);
        read_field(s, "test", cfg.split.test_fraction);
    }
    if (doc.contains("extract")) {
        const auto& e = doc["extract"];
        reject_unknown(e, {"threshold", "subject_darker", "opening_se", "min_thickness", "connectivity"}, "extract");
        if (e.contains("threshold")) {
            if (e["threshold"].is_null()) {
                cfg.extract.fixed_threshold.reset();
            } else {
                int t = 0;
                read_field(e, "threshold", t);
                cfg.extract.fixed_threshold = t;
            }
        }
        read_field(e, "subject_darker", cfg.extract.subject_darker);
        if (e.contains("opening_se")) {
            std::vector<int> se;
            read_field(e, "opening_se", se);
            if (se.size() != 2) fail(ErrorCode::InvalidArgument, "extract.opening_se must be [w, h]");
            cfg.extract.opening_se_w = se[0];
            cfg.extract.opening_se_h = se[1];
        }
        read_field(e, "min_thickness", cfg.extract.min_thickness);
        if (e.contains("connectivity")) {
            int c = 8;
            read_field(e, "connectivity", c);
            if (c != 4 && c != 8) fail(ErrorCode::InvalidArgument, "extract.connectivity must be 4 or 8");
            cfg.extract.connectivity = c == 4 ? imgops::Connectivity::Four : imgops::Connectivity::Eight;
        }
    }
    if (doc.contains("standardize")) {
        const auto& s = doc["standardize"];
        reject_unknown(s, {"standard_width", "pad_margin"}, "standardize");
        read_field(s, "standard_width", cfg.standardize.standard_width);
        read_field(s, "pad_margin", cfg.standardize.pad_margin);
    }
    if (doc.contains("synth")) {
        const auto& s = doc["synth"];
        reject_unknown(s, {"n", "bmi_min", "bmi_max", "noise_sd", "photo", "floor_line"}, "synth");
        read_field(s, "n", cfg.synth.n);
        read_field(s, "bmi_min", cfg.synth.bmi_min);
        read_field(s, "bmi_max", cfg.synth.bmi_max);
        read_field(s, "noise_sd", cfg.synth.noise_sd);
        read_field(s, "photo", cfg.synth.photo_mode);
        read_field(s, "floor_line", cfg.synth.floor_line);
    }
    if (doc.contains("search")) {
        const auto& s = doc["search"];
        reject_unknown(s, {"epochs", "basinhop_iterations"}, "search");
        read_field(s, "epochs", cfg.search_epochs);
        read_field(s, "basinhop_iterations", cfg.basinhop_iterations);
    }
}

void apply_json_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    apply_json_config(cfg, ss.str());
}

// synth --------------------------------------------------------------------

SynthResult run_synth(const RunConfig& cfg, const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) fail(ErrorCode::IoError, "cannot create directory " + out_dir);
    synth::SynthDatasetSpec spec = cfg.synth;
    spec.seed = cfg.seed;
    SynthResult res{synth::generate_dataset(spec), (fs::path(out_dir) / "manifest.csv").string()};
    for (std::size_t i = 0; i < res.data.images.size(); ++i) {
        raster::save_pnm(res.data.images[i], (fs::path(out_dir) / res.data.records[i].image_path).string());
    }
    dataset::save_manifest(res.manifest_path, res.data.records);
    return res;
}

int cmd_synth(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
    try {
        cfg.validate();
        const auto res = run_synth(cfg, out_dir);
        log << "synth: wrote " << res.data.images.size() << " images and " << res.manifest_path << '\n';
        return kOk;
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    }
}

// silhouette ---------------------------------------------------------------

int cmd_silhouette(const RunConfig& cfg, const std::string& manifest, const std::string& out_dir,
                   std::ostream& log) {
    try {
        cfg.validate();
        if (!fs::exists(manifest)) fail(ErrorCode::IoError, "manifest not found: " + manifest);
        const auto report = silhouette::process_batch(manifest, out_dir, cfg.extract, cfg.standardize);
        for (const auto& f : report.failures) log << "failed: " << f.path << ": " << f.reason << '\n';
        log << "silhouette: ok=" << report.ok << " failed=" << report.failed << '\n';
        return report.failed > 0 ? kPartialBatch : kOk;
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    }
}

// train --------------------------------------------------------------------

PreparedData prepare_data(const RunConfig& cfg, const std::string& manifest) {
    PreparedData d;
    const auto records = dataset::load_manifest(manifest);
    d.records = dataset::split(records, cfg.split);
    d.train = dataset::load_samples(d.records.train);
    d.val = dataset::load_samples(d.records.val);
    d.test = dataset::load_samples(d.records.test);
    d.norm = dataset::normalize_targets(d.train);
    dataset::apply_normalization(d.val, d.norm);
    dataset::apply_normalization(d.test, d.norm);
    return d;
}

std::string history_csv(const nn::History& history) {
    std::string out = "epoch,train_loss,val_loss,effective_lr\n";
    for (const auto& r : history) {
        out += std::to_string(r.epoch) + "," + num(r.train_loss) + "," + num(r.val_loss) + "," +
               num(r.effective_lr) + "\n";
    }
    return out;
}

namespace {

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path);
    out << text;
    if (!out) fail(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace

nn::TrainResult run_train(const RunConfig& cfg, const std::string& manifest, const TrainOutputs& out,
                          std::ostream& log) {
    cfg.validate();
    const PreparedData d = prepare_data(cfg, manifest);
    if (out.split_dir) {
        std::error_code ec;
        fs::create_directories(*out.split_dir, ec);
        if (ec) fail(ErrorCode::IoError, "cannot create " + *out.split_dir);
        dataset::save_manifest((fs::path(*out.split_dir) / "train.csv").string(), d.records.train);
        dataset::save_manifest((fs::path(*out.split_dir) / "val.csv").string(), d.records.val);
        dataset::save_manifest((fs::path(*out.split_dir) / "test.csv").string(), d.records.test);
    }
    log << "train: " << d.train.size() << " train / " << d.val.size() << " val / " << d.test.size()
        << " test, bmi range [" << d.norm.bmi_min << ", " << d.norm.bmi_max << "]\n";

    nn::Model model = nn::build_default_model(init_seed(cfg.seed));
    model.norm = d.norm;
    nn::TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    auto result = nn::train(std::move(model), d.train, d.val, tc, [&log](const nn::EpochRecord& r) {
        if (r.epoch % 25 == 0) {
            log << "epoch " << r.epoch << " train_loss=" << r.train_loss << " val_loss=" << r.val_loss << '\n';
        }
    });
    log << "train: stopped after " << result.history.size() << " epochs, best epoch " << result.best_epoch
        << " val_loss=" << result.best_val_loss << '\n';
    result.model.save(out.model_path);
    write_text(out.history_path, history_csv(result.history));
    return result;
}

int cmd_train(const RunConfig& cfg, const std::string& manifest, const TrainOutputs& out, std::ostream& log) {
    try {
        run_train(cfg, manifest, out, log);
        return kOk;
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    }
}

// eval ---------------------------------------------------------------------

eval::EvalReport run_eval(const std::string& model_path, const std::string& manifest, const std::string& csv_out,
                          const std::string& svg_out) {
    const nn::Model model = nn::Model::load(model_path);
    const auto records = dataset::load_manifest(manifest);
    const auto samples = dataset::load_samples(records);
    std::vector<raster::RasterImage> images;
    std::vector<double> actual;
    for (const auto& s : samples) {
        images.push_back(s.image);
        actual.push_back(s.bmi);
    }
    const auto pred_norm = nn::predict(model, images);
    std::vector<double> predicted;
    for (double p : pred_norm) predicted.push_back(dataset::denormalize(p, model.norm));
    const auto report = eval::build_report(actual, predicted);
    eval::emit_scatter(report, csv_out, svg_out);
    return report;
}

int cmd_eval(const std::string& model_path, const std::string& manifest, const std::string& csv_out,
             const std::string& svg_out, std::ostream& log) {
    try {
        const auto rep = run_eval(model_path, manifest, csv_out, svg_out);
        char buf[160];
        std::snprintf(buf, sizeof buf, "n=%zu r=%.4f slope=%.4f intercept=%.4f r2=%.4f mae=%.4f rmse=%.4f",
                      rep.pairs.size(), rep.pearson_r, rep.fit.slope, rep.fit.intercept, rep.fit.r_squared,
                      rep.mae, rep.rmse);
        log << "eval: " << buf << '\n';
        log << eval::summary_line(rep) << '\n';
        return kOk;
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    }
}

// search -------------------------------------------------------------------

int cmd_search(const RunConfig& cfg, const std::string& manifest, const SearchOptions& opts, std::ostream& log) {
    try {
        cfg.validate();
        const PreparedData d = prepare_data(cfg, manifest);
        nn::TrainConfig short_cfg = cfg.train;
        short_cfg.seed = cfg.seed;
        short_cfg.max_epochs = cfg.search_epochs;

        if (opts.mode == SearchMode::Grid) {
            const auto res = nn::grid_search(opts.learning_rates, opts.decays, d.train, d.val, short_cfg,
                                             init_seed(cfg.seed), d.norm);
            log << "learning_rate,decay,val_loss,best\n";
            for (std::size_t i = 0; i < res.table.size(); ++i) {
                const auto& row = res.table[i];
                log << num(row.learning_rate) << ',' << num(row.decay) << ','
                    << (row.diverged ? std::string("diverged") : num(row.val_loss)) << ','
                    << (i == res.best_index ? "*" : "") << '\n';
            }
            log << "best: learning_rate=" << num(res.best.learning_rate) << " decay=" << num(res.best.decay)
                << '\n';
            return kOk;
        }

        opt::BasinHoppingConfig bh;
        bh.n_iterations = cfg.basinhop_iterations;
        bh.seed = cfg.seed;
        bh.local.max_evals = 6;
        int evals = 0;
        log << "rotation_deg,width_shift_frac,val_loss\n";
        const auto res = augment::optimize_augmentation(
            [&](const augment::AugmentParams& p) {
                nn::TrainConfig tc = short_cfg;
                tc.augment = p;
                nn::Model m = nn::build_default_model(init_seed(cfg.seed));
                m.norm = d.norm;
                const double v = nn::train(std::move(m), d.train, d.val, tc).best_val_loss;
                ++evals;
                log << num(p.rotation_deg) << ',' << num(p.width_shift_frac) << ',' << num(v) << '\n';
                return v;
            },
            opts.bounds, bh, cfg.train.augment.hflip);
        log << "best: rotation_deg=" << num(res.params.rotation_deg)
            << " width_shift_frac=" << num(res.params.width_shift_frac) << " val_loss=" << num(res.value)
            << " evaluations=" << evals << '\n';
        return kOk;
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    }
}

}  // namespace bmisil::app
