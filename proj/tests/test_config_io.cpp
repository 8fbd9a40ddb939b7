#include "dalbt/config_io.hpp"

#include "dalbt/error.hpp"

#include "doctest.h"

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

using namespace dalbt;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    static fs::path dir = [] {
        fs::path p = fs::temp_directory_path() / "dalbt_config_tests";
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

// Message text of the ConfigError a config raises; fails the test if it
// parses cleanly.
std::string rejection(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    FAIL("config was accepted: " << text);
    return {};
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

} // namespace

TEST_CASE("the empty object is a complete valid config") {
    const ExperimentConfig cfg = parse_config_text("{}");
    CHECK(cfg.dataset.kind == "synth_blobs");
    CHECK(cfg.weights.gamma == 0.001);   // joint-loss mixing default
    CHECK(cfg.weights.lambda_bt == 0.005);
    CHECK(cfg.loop.strategy == Strategy::weibull_max);
    CHECK(cfg.loop.stages == 1);
    CHECK(cfg.split.initial_labeled == 10);
    CHECK(cfg.augment.crop_scale_range[0] == 1.0); // blobs are 1x1xdim
    CHECK(cfg.augment.crop_scale_range[1] == 1.0);
    CHECK_FALSE(cfg.loop.ood_reject_threshold.has_value());
    CHECK(cfg.seeds == std::vector<std::uint64_t>{1});
}

TEST_CASE("explicit values land in the right fields") {
    const ExperimentConfig cfg = parse_config_text(R"({
        "dataset": {"kind": "synth_blobs", "num_classes": 4, "dim": 6, "per_class": 50},
        "ood": {"kind": "synth_noise", "count": 30, "seed": 77},
        "split": {"initial_labeled": 12, "val_size": 20, "test_size": 40},
        "arch": {"latent_dim": 8, "encoder_hidden": [24], "projector_hidden": [16],
                 "projector_dim": 8},
        "loss": {"gamma": 0.01, "lambda_bt": 0.02, "center_embeddings": true},
        "train": {"learning_rate": 0.005, "batch_size": 8, "epochs": 3,
                  "optimizer": "sgd", "select_best_on_val": true},
        "weibull": {"eta": 15, "min_class_samples": 4},
        "loop": {"stages": 5, "budget": 7, "strategy": "min_confidence",
                 "exclude_rejected": true, "ood_reject_threshold": 0.25},
        "seeds": [3, 4, 5]
    })");
    CHECK(cfg.dataset.num_classes == 4);
    CHECK(cfg.ood.kind == "synth_noise");
    CHECK(cfg.ood.count == 30);
    CHECK(cfg.ood.seed == 77);
    CHECK(cfg.split.val_size == 20);
    CHECK(cfg.arch.encoder_hidden == std::vector<int>{24});
    CHECK(cfg.weights.gamma == 0.01);
    CHECK(cfg.train.center_embeddings); // parsed from the loss block
    CHECK(cfg.train.optimizer == OptimizerKind::sgd);
    CHECK(cfg.train.select_best_on_val);
    CHECK(cfg.weibull.eta == 15);
    CHECK(cfg.loop.strategy == Strategy::min_confidence);
    CHECK(cfg.loop.exclude_rejected);
    REQUIRE(cfg.loop.ood_reject_threshold.has_value());
    CHECK(*cfg.loop.ood_reject_threshold == 0.25);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{3, 4, 5});
}

TEST_CASE("unknown keys are rejected with their full path") {
    CHECK(contains(rejection(R"({"dataset": {"kinx": "synth_blobs"}})"), "dataset.kinx"));
    CHECK(contains(rejection(R"({"trainx": {}})"), "trainx"));
    CHECK(contains(rejection(R"({"loop": {"budgets": 3}})"), "loop.budgets"));
    // center_embeddings is configured where the loss form is chosen
    CHECK(contains(rejection(R"({"train": {"center_embeddings": true}})"),
                   "train.center_embeddings"));
}

TEST_CASE("type errors name the offending path") {
    CHECK(contains(rejection(R"({"train": {"learning_rate": "fast"}})"),
                   "train.learning_rate"));
    CHECK(contains(rejection(R"({"train": {"optimizer": "rmsprop"}})"), "train.optimizer"));
    CHECK(contains(rejection(R"({"augment": {"crop_scale_range": [0.3, 0.6, 1.0]}})"),
                   "augment.crop_scale_range"));
    CHECK(contains(rejection(R"({"seeds": [-1]})"), "seeds"));
    CHECK(contains(rejection(R"({"dataset": {"seed": -5}})"), "dataset.seed"));
    CHECK(contains(rejection(R"({"loop": {"ood_reject_threshold": "high"}})"),
                   "loop.ood_reject_threshold"));
    CHECK(contains(rejection("[1, 2]"), "expected a JSON object"));
    CHECK(contains(rejection("{"), "not valid JSON"));
}

TEST_CASE("semantic validation runs on the parsed result") {
    CHECK(contains(rejection(R"({"train": {"batch_size": 1}})"), "cross-correlation"));
    CHECK(contains(rejection(R"({"loop": {"strategy": "entropy"}})"), "entropy"));
    CHECK(contains(rejection(R"({"loop": {"ood_reject_threshold": 1.5}})"),
                   "ood_reject_threshold"));
    CHECK(contains(rejection(R"({"dataset": {"kind": "mnist"}})"), "mnist"));
    CHECK(contains(rejection(R"({"seeds": []})"), "seeds"));
}

TEST_CASE("a zero projector dim means the identity projector") {
    // the default projector_hidden is dropped when nothing was given...
    const ExperimentConfig cfg = parse_config_text(R"({"arch": {"projector_dim": 0}})");
    CHECK(cfg.arch.projector_dim == 0);
    CHECK(cfg.arch.projector_hidden.empty());
    // ...but an explicit hidden width contradicts the identity projector
    CHECK(contains(
        rejection(R"({"arch": {"projector_dim": 0, "projector_hidden": [32]}})"),
        "projector_hidden"));
}

TEST_CASE("null clears the optional ood threshold") {
    const ExperimentConfig cfg =
        parse_config_text(R"({"loop": {"ood_reject_threshold": null}})");
    CHECK_FALSE(cfg.loop.ood_reject_threshold.has_value());
}

TEST_CASE("dump and parse are inverse on the resolved snapshot") {
    ExperimentConfig cfg = parse_config_text(R"({
        "dataset": {"kind": "synth_digits", "train_count": 200, "test_count": 50},
        "split": {"test_size": 0},
        "augment": {"crop_scale_range": [0.6, 1.0], "flip_prob": 0.5},
        "loop": {"strategy": "random", "ood_reject_threshold": 0.9},
        "seeds": [9]
    })");
    const std::string snapshot = dump_config(cfg);
    const ExperimentConfig back = parse_config_text(snapshot);
    CHECK(dump_config(back) == snapshot);
    CHECK(back.dataset.train_count == 200);
    CHECK(back.augment.flip_prob == 0.5);
    REQUIRE(back.loop.ood_reject_threshold.has_value());
    CHECK(*back.loop.ood_reject_threshold == 0.9);
}

TEST_CASE("the config hash ignores formatting but not values") {
    const std::string a = R"({"loop": {"budget": 3, "stages": 2}, "seeds": [1, 2]})";
    const std::string b = "{\n  \"seeds\": [1, 2],\n  \"loop\": {\"stages\": 2, \"budget\": 3}\n}";
    const std::string c = R"({"loop": {"budget": 4, "stages": 2}, "seeds": [1, 2]})";
    CHECK(config_hash_hex(parse_config_text(a)) == config_hash_hex(parse_config_text(b)));
    CHECK(config_hash_hex(parse_config_text(a)) != config_hash_hex(parse_config_text(c)));

    const std::string h = config_hash_hex(parse_config_text(a));
    REQUIRE(h.size() == 16);
    for (char ch : h) CHECK(std::isxdigit(static_cast<unsigned char>(ch)));
}

TEST_CASE("fnv1a64 matches the published test vectors") {
    CHECK(fnv1a64("") == 14695981039346656037ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("run ids are a UTC timestamp plus the config hash") {
    const ExperimentConfig cfg = parse_config_text("{}");
    const std::string id = make_run_id(cfg);
    REQUIRE(id.size() == 33); // YYYYMMDDTHHMMSSZ-16hex
    CHECK(id[8] == 'T');
    CHECK(id[15] == 'Z');
    CHECK(id[16] == '-');
    CHECK(id.substr(0, 2) == "20");
    CHECK(id.substr(17) == config_hash_hex(cfg));
}

TEST_CASE("config files parse with the path in any error") {
    const fs::path good = scratch_dir() / "good.json";
    {
        std::ofstream out(good);
        out << R"({"loop": {"budget": 2}})";
    }
    CHECK(parse_config_file(good.string()).loop.budget == 2);

    const fs::path bad = scratch_dir() / "bad.json";
    {
        std::ofstream out(bad);
        out << R"({"loop": {"budget": 0}})";
    }
    try {
        parse_config_file(bad.string());
        FAIL("invalid config file was accepted");
    } catch (const ConfigError& e) {
        CHECK(contains(e.what(), "bad.json"));
        CHECK(contains(e.what(), "budget"));
    }
    CHECK_THROWS_AS(parse_config_file((scratch_dir() / "absent.json").string()), IoError);
}

TEST_CASE("manifests serialize every seed outcome") {
    const ExperimentConfig cfg = parse_config_text("{}");
    RunManifest m;
    m.run_id = "20240101T000000Z-deadbeefdeadbeef";
    m.config_hash = config_hash_hex(cfg);
    m.config_json = dump_config(cfg);
    m.seeds.push_back({1, "runs/metrics_seed1.jsonl", 4, ""});
    m.seeds.push_back({2, "runs/metrics_seed2.jsonl", 0, "stage 0: boom"});
    m.partial = true;

    const std::string text = manifest_to_json(m);
    CHECK(contains(text, "\"artifact_version\": 1"));
    CHECK(contains(text, m.run_id));
    CHECK(contains(text, m.config_hash));
    CHECK(contains(text, "metrics_seed2.jsonl"));
    CHECK(contains(text, "stage 0: boom"));
    CHECK(contains(text, "\"partial\": true"));

    const fs::path path = scratch_dir() / "manifest.json";
    write_manifest(m, path.string());
    std::ifstream in(path);
    const std::string on_disk{std::istreambuf_iterator<char>(in),
                              std::istreambuf_iterator<char>()};
    CHECK(on_disk == text);
}
