#include "bmisil/app.hpp"
#include "bmisil/error.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace bmisil;
using namespace bmisil::app;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no exception";
    return ErrorCode::IoError;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::path(::testing::TempDir()) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t line_count(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

RunConfig small_config(int n, std::uint64_t seed) {
    RunConfig cfg;
    cfg.seed = seed;
    cfg.synth.n = n;
    cfg.train.max_epochs = 2;
    cfg.search_epochs = 2;
    cfg.propagate_seed();
    return cfg;
}

/// Runs the CLI with `args`, returning its exit status; output goes to `log`.
int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(BMISIL_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST(Config, JsonOverlay) {
    RunConfig cfg;
    apply_json_config(cfg, R"({"seed": 9, "train": {"learning_rate": 0.01, "patience": 7},
                               "augment": {"rotation_deg": 3, "hflip": false},
                               "split": {"train": 0.6, "val": 0.2, "test": 0.2},
                               "extract": {"threshold": 120, "opening_se": [5, 3], "connectivity": 4},
                               "synth": {"n": 12, "photo": true}, "search": {"epochs": 5}})");
    EXPECT_EQ(cfg.seed, 9u);
    EXPECT_EQ(cfg.train.learning_rate, 0.01);
    EXPECT_EQ(cfg.train.patience, 7);
    EXPECT_EQ(cfg.train.decay, 1e-4);
    EXPECT_EQ(cfg.train.augment.rotation_deg, 3.0);
    EXPECT_FALSE(cfg.train.augment.hflip);
    EXPECT_EQ(cfg.split.train_fraction, 0.6);
    EXPECT_EQ(cfg.extract.fixed_threshold, 120);
    EXPECT_EQ(cfg.extract.opening_se_w, 5);
    EXPECT_EQ(cfg.extract.opening_se_h, 3);
    EXPECT_EQ(cfg.extract.connectivity, imgops::Connectivity::Four);
    EXPECT_EQ(cfg.synth.n, 12);
    EXPECT_TRUE(cfg.synth.photo_mode);
    EXPECT_EQ(cfg.search_epochs, 5);
    apply_json_config(cfg, R"({"extract": {"threshold": null}})");
    EXPECT_FALSE(cfg.extract.fixed_threshold.has_value());
}

TEST(Config, Rejections) {
    RunConfig cfg;
    EXPECT_EQ(code_of([&] { apply_json_config(cfg, R"({"train": {"lr": 0.1}})"); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([&] { apply_json_config(cfg, R"({"bogus": 1})"); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([&] { apply_json_config(cfg, R"({"train": {"patience": "ten"}})"); }),
              ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([&] { apply_json_config(cfg, "{not json"); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([&] { apply_json_config(cfg, R"({"extract": {"connectivity": 6}})"); }),
              ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([&] { apply_json_config(cfg, R"({"train": 3})"); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([&] { apply_json_config_file(cfg, "/nonexistent/c.json"); }), ErrorCode::IoError);
}

TEST(Config, SeedPropagation) {
    RunConfig cfg;
    cfg.seed = 7;
    cfg.propagate_seed();
    EXPECT_EQ(cfg.train.seed, 7u);
    EXPECT_EQ(cfg.synth.seed, 7u);
    EXPECT_EQ(cfg.split.seed, split_seed(7));
    EXPECT_NE(split_seed(7), init_seed(7));
    EXPECT_NE(split_seed(7), split_seed(8));
}

TEST(ExitCodes, Mapping) {
    EXPECT_EQ(exit_code_for(ErrorCode::IoError), kIo);
    EXPECT_EQ(exit_code_for(ErrorCode::ManifestParseError), kIo);
    EXPECT_EQ(exit_code_for(ErrorCode::DivergedLoss), kDiverged);
    EXPECT_EQ(exit_code_for(ErrorCode::ZeroVariance), kDegenerateEval);
    EXPECT_EQ(exit_code_for(ErrorCode::InvalidArgument), kUsage);
}

TEST(Workflow, SynthWritesImagesAndManifest) {
    const auto dir = fresh_dir("wf_synth");
    std::ostringstream log;
    ASSERT_EQ(cmd_synth(small_config(5, 1), dir.string(), log), kOk);
    const auto recs = dataset::load_manifest((dir / "manifest.csv").string());
    ASSERT_EQ(recs.size(), 5u);
    for (const auto& r : recs) EXPECT_TRUE(fs::exists(r.image_path)) << r.image_path;
    EXPECT_EQ(slurp(dir / "manifest.csv").rfind("path,bmi\nsynth_000.pgm,", 0), 0u);
}

TEST(Workflow, SynthZeroSamples) {
    const auto dir = fresh_dir("wf_synth0");
    std::ostringstream log;
    EXPECT_EQ(cmd_synth(small_config(0, 1), dir.string(), log), kOk);
    EXPECT_EQ(slurp(dir / "manifest.csv"), "path,bmi\n");
}

TEST(Workflow, UnwritableOutputIsIoError) {
    const auto dir = fresh_dir("wf_unwritable");
    std::ofstream(dir / "file") << "x";
    std::ostringstream log;
    EXPECT_EQ(cmd_synth(small_config(2, 1), (dir / "file" / "sub").string(), log), kIo);
}

TEST(Workflow, TrainEvalRoundTrip) {
    const auto dir = fresh_dir("wf_train");
    std::ostringstream log;
    const RunConfig cfg = small_config(24, 3);
    ASSERT_EQ(cmd_synth(cfg, (dir / "data").string(), log), kOk);
    const TrainOutputs outs{(dir / "m.bin").string(), (dir / "h.csv").string(), (dir / "splits").string()};
    ASSERT_EQ(cmd_train(cfg, (dir / "data" / "manifest.csv").string(), outs, log), kOk) << log.str();
    const auto hist = slurp(dir / "h.csv");
    EXPECT_EQ(hist.rfind("epoch,train_loss,val_loss,effective_lr\n1,", 0), 0u);
    EXPECT_EQ(line_count(hist), 3u);
    for (const char* f : {"train.csv", "val.csv", "test.csv"}) EXPECT_TRUE(fs::exists(dir / "splits" / f));
    EXPECT_EQ(dataset::load_manifest((dir / "splits" / "test.csv").string()).size(), 6u);

    const auto model = nn::Model::load((dir / "m.bin").string());
    EXPECT_EQ(model.train_seed, 3u);
    EXPECT_EQ(model.init_seed, init_seed(3));
    EXPECT_LT(model.norm.bmi_min, model.norm.bmi_max);

    ASSERT_EQ(cmd_eval((dir / "m.bin").string(), (dir / "splits" / "test.csv").string(), (dir / "s.csv").string(),
                       (dir / "s.svg").string(), log),
              kOk)
        << log.str();
    EXPECT_EQ(line_count(slurp(dir / "s.csv")), 7u);
    EXPECT_NE(slurp(dir / "s.svg").find("<svg"), std::string::npos);
}

TEST(Workflow, TrainingIsReproducible) {
    const auto dir = fresh_dir("wf_repro");
    std::ostringstream log;
    const RunConfig cfg = small_config(16, 4);
    ASSERT_EQ(cmd_synth(cfg, (dir / "data").string(), log), kOk);
    const auto manifest = (dir / "data" / "manifest.csv").string();
    for (const char* tag : {"a", "b"}) {
        const TrainOutputs outs{(dir / (std::string(tag) + ".bin")).string(), (dir / (std::string(tag) + ".csv")).string(), {}};
        ASSERT_EQ(cmd_train(cfg, manifest, outs, log), kOk);
    }
    EXPECT_EQ(slurp(dir / "a.bin"), slurp(dir / "b.bin"));
    EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
}

TEST(Workflow, TrainFailures) {
    const auto dir = fresh_dir("wf_trainfail");
    std::ostringstream log;
    RunConfig cfg = small_config(16, 5);
    ASSERT_EQ(cmd_synth(cfg, (dir / "data").string(), log), kOk);
    const TrainOutputs outs{(dir / "m.bin").string(), (dir / "h.csv").string(), {}};
    EXPECT_EQ(cmd_train(cfg, (dir / "missing.csv").string(), outs, log), kIo);
    cfg.train.learning_rate = 100.0;
    EXPECT_EQ(cmd_train(cfg, (dir / "data" / "manifest.csv").string(), outs, log), kDiverged);
    cfg.train.learning_rate = -1.0;
    EXPECT_EQ(code_of([&] { run_train(cfg, (dir / "data" / "manifest.csv").string(), outs, log); }),
              ErrorCode::InvalidArgument);
}

TEST(Workflow, ConstantPredictionsAreDegenerate) {
    const auto dir = fresh_dir("wf_const");
    std::ostringstream log;
    ASSERT_EQ(cmd_synth(small_config(6, 6), (dir / "data").string(), log), kOk);
    nn::Model m = nn::build_default_model(1);
    m.norm = {16, 40};
    for (auto& l : m.layers) {
        if (l.kind == nn::LayerKind::Dense) l.weight.fill(0.0);
    }
    m.save((dir / "m.bin").string());
    EXPECT_EQ(cmd_eval((dir / "m.bin").string(), (dir / "data" / "manifest.csv").string(), (dir / "s.csv").string(),
                       (dir / "s.svg").string(), log),
              kDegenerateEval);
    EXPECT_EQ(cmd_eval((dir / "nope.bin").string(), (dir / "data" / "manifest.csv").string(),
                       (dir / "s.csv").string(), (dir / "s.svg").string(), log),
              kIo);
}

TEST(Workflow, SilhouettePartialBatch) {
    const auto dir = fresh_dir("wf_sil");
    std::ostringstream log;
    RunConfig cfg = small_config(3, 7);
    cfg.synth.photo_mode = true;
    ASSERT_EQ(cmd_synth(cfg, (dir / "photos").string(), log), kOk);
    EXPECT_EQ(cmd_silhouette(cfg, (dir / "photos" / "manifest.csv").string(), (dir / "sil").string(), log), kOk);
    EXPECT_EQ(dataset::load_manifest((dir / "sil" / "manifest.csv").string()).size(), 3u);
    std::ofstream(dir / "photos" / "manifest.csv", std::ios::app) << "gone.ppm,22\n";
    EXPECT_EQ(cmd_silhouette(cfg, (dir / "photos" / "manifest.csv").string(), (dir / "sil2").string(), log),
              kPartialBatch);
    EXPECT_EQ(cmd_silhouette(cfg, (dir / "none.csv").string(), (dir / "sil3").string(), log), kIo);
}

TEST(Workflow, GridSearchTable) {
    const auto dir = fresh_dir("wf_grid");
    std::ostringstream log;
    const RunConfig cfg = small_config(16, 8);
    ASSERT_EQ(cmd_synth(cfg, (dir / "data").string(), log), kOk);
    std::ostringstream out;
    SearchOptions opts;
    opts.learning_rates = {0.001, 0.02};
    opts.decays = {0.0, 1e-4};
    ASSERT_EQ(cmd_search(cfg, (dir / "data" / "manifest.csv").string(), opts, out), kOk) << out.str();
    const std::string text = out.str();
    const auto start = text.find("learning_rate,decay,val_loss,best\n");
    ASSERT_NE(start, std::string::npos);
    const auto end = text.find("best: ");
    const std::string table = text.substr(start, end - start);
    EXPECT_EQ(line_count(table), 5u);
    EXPECT_EQ(std::count(table.begin(), table.end(), '*'), 1);

    std::ostringstream one;
    opts.learning_rates = {0.02};
    opts.decays = {1e-4};
    ASSERT_EQ(cmd_search(cfg, (dir / "data" / "manifest.csv").string(), opts, one), kOk);
    EXPECT_NE(one.str().find("best: learning_rate=0.02 decay=0.0001"), std::string::npos) << one.str();
}

TEST(Workflow, BasinHopSearchStaysInBounds) {
    const auto dir = fresh_dir("wf_bh");
    std::ostringstream log;
    RunConfig cfg = small_config(16, 9);
    cfg.basinhop_iterations = 2;
    cfg.search_epochs = 1;
    ASSERT_EQ(cmd_synth(cfg, (dir / "data").string(), log), kOk);
    std::ostringstream out;
    SearchOptions opts;
    opts.mode = SearchMode::BasinHop;
    ASSERT_EQ(cmd_search(cfg, (dir / "data" / "manifest.csv").string(), opts, out), kOk) << out.str();
    const std::string text = out.str();
    const auto pos = text.find("best: rotation_deg=");
    ASSERT_NE(pos, std::string::npos);
    double rot = -1, shift = -1;
    ASSERT_EQ(std::sscanf(text.c_str() + pos, "best: rotation_deg=%lf width_shift_frac=%lf", &rot, &shift), 2);
    EXPECT_GE(rot, opts.bounds.rotation_low);
    EXPECT_LE(rot, opts.bounds.rotation_high);
    EXPECT_GE(shift, opts.bounds.shift_low);
    EXPECT_LE(shift, opts.bounds.shift_high);
}

TEST(Cli, UsageErrors) {
    const auto dir = fresh_dir("cli_usage");
    const auto log = dir / "log.txt";
    EXPECT_EQ(run_cli("", log), kUsage);
    EXPECT_EQ(run_cli("synth", log), kUsage);
    EXPECT_EQ(run_cli("frobnicate", log), kUsage);
    EXPECT_EQ(run_cli("synth --out " + dir.string() + " --bogus", log), kUsage);
    EXPECT_EQ(run_cli("train --manifest m.csv --model-out m.bin --lr abc", log), kUsage);
    EXPECT_EQ(run_cli("--help", log), kOk);
    EXPECT_NE(slurp(log).find("synth"), std::string::npos);
    EXPECT_EQ(run_cli("train --help", log), kOk);
    EXPECT_NE(slurp(log).find("--model-out"), std::string::npos);
}

TEST(Cli, ConfigMergesUnderFlags) {
    const auto dir = fresh_dir("cli_config");
    const auto log = dir / "log.txt";
    std::ofstream(dir / "c.json") << R"({"seed": 3, "synth": {"n": 5}})";
    ASSERT_EQ(run_cli("--config " + (dir / "c.json").string() + " synth --out " + (dir / "a").string(), log), kOk);
    EXPECT_EQ(dataset::load_manifest((dir / "a" / "manifest.csv").string()).size(), 5u);
    ASSERT_EQ(run_cli("synth --config " + (dir / "c.json").string() + " --n 2 --out " + (dir / "b").string(), log),
              kOk);
    EXPECT_EQ(dataset::load_manifest((dir / "b" / "manifest.csv").string()).size(), 2u);
    // The seed from the config and the same seed given as a flag produce the same data.
    ASSERT_EQ(run_cli("synth --seed 3 --n 2 --out " + (dir / "c").string(), log), kOk);
    EXPECT_EQ(slurp(dir / "b" / "manifest.csv"), slurp(dir / "c" / "manifest.csv"));
    EXPECT_EQ(slurp(dir / "b" / "synth_001.pgm"), slurp(dir / "c" / "synth_001.pgm"));

    std::ofstream(dir / "bad.json") << R"({"train": {"lr": 0.1}})";
    EXPECT_EQ(run_cli("--config " + (dir / "bad.json").string() + " synth --out " + (dir / "d").string(), log), kUsage);
    EXPECT_EQ(run_cli("--config " + (dir / "none.json").string() + " synth --out " + (dir / "d").string(), log), kIo);
}

TEST(Cli, ExitCodesEndToEnd) {
    const auto dir = fresh_dir("cli_exit");
    const auto log = dir / "log.txt";
    ASSERT_EQ(run_cli("synth --n 0 --out " + (dir / "empty").string(), log), kOk);
    EXPECT_EQ(slurp(dir / "empty" / "manifest.csv"), "path,bmi\n");
    EXPECT_EQ(run_cli("train --manifest " + (dir / "missing.csv").string() + " --model-out " + (dir / "m.bin").string(), log),
              kIo);
    ASSERT_EQ(run_cli("synth --n 16 --seed 2 --out " + (dir / "d").string(), log), kOk);
    const std::string manifest = (dir / "d" / "manifest.csv").string();
    EXPECT_EQ(run_cli("train --manifest " + manifest + " --model-out " + (dir / "m.bin").string() + " --lr 100", log),
              kDiverged);
    ASSERT_EQ(run_cli("train --manifest " + manifest + " --model-out " + (dir / "m.bin").string() + " --max-epochs 1", log),
              kOk);
    EXPECT_TRUE(fs::exists(dir / "m.bin.history.csv"));
    EXPECT_EQ(run_cli("eval --model " + (dir / "m.bin").string() + " --manifest " + manifest + " --csv-out " +
                          (dir / "s.csv").string() + " --svg-out " + (dir / "s.svg").string(),
                      log),
              kOk);
    EXPECT_NE(slurp(log).find("r="), std::string::npos);
    EXPECT_EQ(run_cli("search --mode nope --manifest " + manifest, log), kUsage);
}
