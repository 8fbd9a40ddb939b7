#include "dalbt/config_io.hpp"

#include "dalbt/error.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

namespace dalbt {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

// View over one JSON object that records which keys were consumed; finish()
// turns every leftover into an unknown-key error with its full path.
class ObjView {
public:
    ObjView(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) bad(path_.empty() ? "config" : path_, "expected a JSON object");
    }

    bool has(const char* key) const { return j_.contains(key); }

    std::string sub(const char* key) const {
        return path_.empty() ? std::string(key) : path_ + "." + key;
    }

    // Returns the child value and marks the key consumed; nullptr if absent.
    const json* take(const char* key) {
        auto it = j_.find(key);
        if (it == j_.end()) return nullptr;
        seen_.insert(it.key());
        return &*it;
    }

    void get(const char* key, bool& out) {
        if (const json* v = take(key)) {
            if (!v->is_boolean()) bad(sub(key), "expected true or false");
            out = v->get<bool>();
        }
    }
    void get(const char* key, int& out) {
        if (const json* v = take(key)) {
            if (!v->is_number_integer()) bad(sub(key), "expected an integer");
            out = v->get<int>();
        }
    }
    void get(const char* key, double& out) {
        if (const json* v = take(key)) {
            if (!v->is_number()) bad(sub(key), "expected a number");
            out = v->get<double>();
        }
    }
    void get(const char* key, std::uint64_t& out) {
        if (const json* v = take(key)) {
            if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() &&
                                            v->get<std::int64_t>() < 0))
                bad(sub(key), "expected a nonnegative integer");
            out = v->get<std::uint64_t>();
        }
    }
    void get(const char* key, std::string& out) {
        if (const json* v = take(key)) {
            if (!v->is_string()) bad(sub(key), "expected a string");
            out = v->get<std::string>();
        }
    }
    void get(const char* key, std::vector<int>& out) {
        if (const json* v = take(key)) {
            if (!v->is_array()) bad(sub(key), "expected an array of integers");
            out.clear();
            for (const json& e : *v) {
                if (!e.is_number_integer()) bad(sub(key), "expected an array of integers");
                out.push_back(e.get<int>());
            }
        }
    }
    void get(const char* key, std::vector<std::string>& out) {
        if (const json* v = take(key)) {
            if (!v->is_array()) bad(sub(key), "expected an array of strings");
            out.clear();
            for (const json& e : *v) {
                if (!e.is_string()) bad(sub(key), "expected an array of strings");
                out.push_back(e.get<std::string>());
            }
        }
    }
    void get(const char* key, std::vector<std::uint64_t>& out) {
        if (const json* v = take(key)) {
            if (!v->is_array()) bad(sub(key), "expected an array of nonnegative integers");
            out.clear();
            for (const json& e : *v) {
                if (!e.is_number_integer() ||
                    (!e.is_number_unsigned() && e.get<std::int64_t>() < 0))
                    bad(sub(key), "expected an array of nonnegative integers");
                out.push_back(e.get<std::uint64_t>());
            }
        }
    }
    template <std::size_t N>
    void get(const char* key, std::array<double, N>& out) {
        if (const json* v = take(key)) {
            if (!v->is_array() || v->size() != N)
                bad(sub(key), "expected an array of " + std::to_string(N) + " numbers");
            for (std::size_t i = 0; i < N; ++i) {
                if (!(*v)[i].is_number())
                    bad(sub(key), "expected an array of " + std::to_string(N) + " numbers");
                out[i] = (*v)[i].get<double>();
            }
        }
    }
    void get(const char* key, std::optional<double>& out) {
        if (const json* v = take(key)) {
            if (v->is_null()) {
                out.reset();
            } else if (v->is_number()) {
                out = v->get<double>();
            } else {
                bad(sub(key), "expected a number or null");
            }
        }
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) bad(sub(it.key().c_str()), "unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void parse_dataset(const json& j, DatasetSpec& ds) {
    ObjView v(j, "dataset");
    v.get("kind", ds.kind);
    v.get("seed", ds.seed);
    if (ds.kind == "synth_blobs") {
        v.get("num_classes", ds.num_classes);
        v.get("dim", ds.dim);
        v.get("per_class", ds.per_class);
        v.get("noise_sigma", ds.noise_sigma);
    } else if (ds.kind == "synth_digits") {
        v.get("train_count", ds.train_count);
        v.get("test_count", ds.test_count);
    } else if (ds.kind == "idx") {
        v.get("train_images", ds.train_images);
        v.get("train_labels", ds.train_labels);
        v.get("test_images", ds.test_images);
        v.get("test_labels", ds.test_labels);
    } else if (ds.kind == "cifar10") {
        v.get("train_files", ds.train_files);
        v.get("test_file", ds.test_file);
    }
    // validate() first so an unknown kind is reported as such rather than
    // as a pile of unknown keys.
    ds.validate();
    v.finish();
}

void parse_ood(const json& j, OodSpec& ood) {
    ObjView v(j, "ood");
    v.get("kind", ood.kind);
    v.get("count", ood.count);
    v.get("seed", ood.seed);
    if (ood.kind == "synth_blobs") {
        v.get("num_classes", ood.num_classes);
        v.get("noise_sigma", ood.noise_sigma);
    } else if (ood.kind == "idx") {
        v.get("images", ood.images);
        v.get("labels", ood.labels);
    }
    ood.validate();
    v.finish();
}

void parse_split(const json& j, SplitConfig& sp) {
    ObjView v(j, "split");
    v.get("initial_labeled", sp.initial_labeled);
    v.get("val_size", sp.val_size);
    v.get("test_size", sp.test_size);
    v.get("stratified", sp.stratified);
    v.finish();
}

void parse_arch(const json& j, ArchSpec& arch) {
    ObjView v(j, "arch");
    v.get("latent_dim", arch.latent_dim);
    v.get("encoder_hidden", arch.encoder_hidden);
    v.get("conv_channels", arch.conv_channels);
    bool hidden_given = v.has("projector_hidden");
    v.get("projector_hidden", arch.projector_hidden);
    v.get("projector_dim", arch.projector_dim);
    // The identity projector has no layers; drop the default hidden width
    // unless the user insisted on one (then validation rejects the combo).
    if (arch.projector_dim == 0 && !hidden_given) arch.projector_hidden.clear();
    v.finish();
}

void parse_loss(const json& j, ExperimentConfig& cfg) {
    ObjView v(j, "loss");
    v.get("gamma", cfg.weights.gamma);
    v.get("lambda_bt", cfg.weights.lambda_bt);
    v.get("center_embeddings", cfg.train.center_embeddings);
    v.finish();
}

void parse_train(const json& j, TrainConfig& tc) {
    ObjView v(j, "train");
    v.get("learning_rate", tc.learning_rate);
    v.get("weight_decay", tc.weight_decay);
    v.get("batch_size", tc.batch_size);
    v.get("epochs", tc.epochs);
    std::string opt = tc.optimizer == OptimizerKind::adam ? "adam" : "sgd";
    v.get("optimizer", opt);
    if (opt == "adam")
        tc.optimizer = OptimizerKind::adam;
    else if (opt == "sgd")
        tc.optimizer = OptimizerKind::sgd;
    else
        bad("train.optimizer", "expected 'adam' or 'sgd'");
    v.get("adam_beta1", tc.adam_beta1);
    v.get("adam_beta2", tc.adam_beta2);
    v.get("adam_eps", tc.adam_eps);
    v.get("reinit_per_stage", tc.reinit_per_stage);
    v.get("select_best_on_val", tc.select_best_on_val);
    v.finish();
}

void parse_augment(const json& j, AugmentationConfig& a) {
    ObjView v(j, "augment");
    v.get("crop_scale_range", a.crop_scale_range);
    v.get("flip_prob", a.flip_prob);
    v.get("jitter_strengths", a.jitter_strengths);
    v.get("jitter_prob", a.jitter_prob);
    v.get("grayscale_prob", a.grayscale_prob);
    v.get("blur_prob", a.blur_prob);
    v.get("blur_sigma_range", a.blur_sigma_range);
    v.get("solarize_prob_view1", a.solarize_prob_view1);
    v.get("solarize_prob_view2", a.solarize_prob_view2);
    v.get("solarize_threshold", a.solarize_threshold);
    v.finish();
}

void parse_weibull(const json& j, WeibullFitConfig& w) {
    ObjView v(j, "weibull");
    v.get("eta", w.eta);
    v.get("min_class_samples", w.min_class_samples);
    v.get("max_iterations", w.max_iterations);
    v.get("tolerance", w.tolerance);
    v.finish();
}

void parse_loop(const json& j, LoopConfig& lp) {
    ObjView v(j, "loop");
    v.get("stages", lp.stages);
    v.get("budget", lp.budget);
    std::string strat = to_string(lp.strategy);
    v.get("strategy", strat);
    lp.strategy = strategy_from_string(strat);
    v.get("labeled_cap_fraction", lp.labeled_cap_fraction);
    v.get("exclude_rejected", lp.exclude_rejected);
    v.get("ood_reject_threshold", lp.ood_reject_threshold);
    v.finish();
}

} // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    ExperimentConfig cfg;
    ObjView top(j, "");
    if (const json* v = top.take("dataset")) parse_dataset(*v, cfg.dataset);
    if (const json* v = top.take("ood")) parse_ood(*v, cfg.ood);
    if (const json* v = top.take("split")) parse_split(*v, cfg.split);
    if (const json* v = top.take("arch")) parse_arch(*v, cfg.arch);
    if (const json* v = top.take("loss")) parse_loss(*v, cfg);
    if (const json* v = top.take("train")) parse_train(*v, cfg.train);
    if (const json* v = top.take("augment")) parse_augment(*v, cfg.augment);
    if (const json* v = top.take("weibull")) parse_weibull(*v, cfg.weibull);
    if (const json* v = top.take("loop")) parse_loop(*v, cfg.loop);
    top.get("seeds", cfg.seeds);
    top.finish();

    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config_text(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string dump_config(const ExperimentConfig& cfg) {
    json j; // std::map-backed: keys come out sorted, i.e. canonical

    json ds;
    ds["kind"] = cfg.dataset.kind;
    ds["seed"] = cfg.dataset.seed;
    if (cfg.dataset.kind == "synth_blobs") {
        ds["num_classes"] = cfg.dataset.num_classes;
        ds["dim"] = cfg.dataset.dim;
        ds["per_class"] = cfg.dataset.per_class;
        ds["noise_sigma"] = cfg.dataset.noise_sigma;
    } else if (cfg.dataset.kind == "synth_digits") {
        ds["train_count"] = cfg.dataset.train_count;
        ds["test_count"] = cfg.dataset.test_count;
    } else if (cfg.dataset.kind == "idx") {
        ds["train_images"] = cfg.dataset.train_images;
        ds["train_labels"] = cfg.dataset.train_labels;
        ds["test_images"] = cfg.dataset.test_images;
        ds["test_labels"] = cfg.dataset.test_labels;
    } else if (cfg.dataset.kind == "cifar10") {
        ds["train_files"] = cfg.dataset.train_files;
        ds["test_file"] = cfg.dataset.test_file;
    }
    j["dataset"] = std::move(ds);

    json ood;
    ood["kind"] = cfg.ood.kind;
    ood["count"] = cfg.ood.count;
    ood["seed"] = cfg.ood.seed;
    if (cfg.ood.kind == "synth_blobs") {
        ood["num_classes"] = cfg.ood.num_classes;
        ood["noise_sigma"] = cfg.ood.noise_sigma;
    } else if (cfg.ood.kind == "idx") {
        ood["images"] = cfg.ood.images;
        ood["labels"] = cfg.ood.labels;
    }
    j["ood"] = std::move(ood);

    j["split"] = {{"initial_labeled", cfg.split.initial_labeled},
                  {"val_size", cfg.split.val_size},
                  {"test_size", cfg.split.test_size},
                  {"stratified", cfg.split.stratified}};

    j["arch"] = {{"latent_dim", cfg.arch.latent_dim},
                 {"encoder_hidden", cfg.arch.encoder_hidden},
                 {"conv_channels", cfg.arch.conv_channels},
                 {"projector_hidden", cfg.arch.projector_hidden},
                 {"projector_dim", cfg.arch.projector_dim}};

    j["loss"] = {{"gamma", cfg.weights.gamma},
                 {"lambda_bt", cfg.weights.lambda_bt},
                 {"center_embeddings", cfg.train.center_embeddings}};

    j["train"] = {{"learning_rate", cfg.train.learning_rate},
                  {"weight_decay", cfg.train.weight_decay},
                  {"batch_size", cfg.train.batch_size},
                  {"epochs", cfg.train.epochs},
                  {"optimizer", cfg.train.optimizer == OptimizerKind::adam ? "adam" : "sgd"},
                  {"adam_beta1", cfg.train.adam_beta1},
                  {"adam_beta2", cfg.train.adam_beta2},
                  {"adam_eps", cfg.train.adam_eps},
                  {"reinit_per_stage", cfg.train.reinit_per_stage},
                  {"select_best_on_val", cfg.train.select_best_on_val}};

    j["augment"] = {{"crop_scale_range", cfg.augment.crop_scale_range},
                    {"flip_prob", cfg.augment.flip_prob},
                    {"jitter_strengths", cfg.augment.jitter_strengths},
                    {"jitter_prob", cfg.augment.jitter_prob},
                    {"grayscale_prob", cfg.augment.grayscale_prob},
                    {"blur_prob", cfg.augment.blur_prob},
                    {"blur_sigma_range", cfg.augment.blur_sigma_range},
                    {"solarize_prob_view1", cfg.augment.solarize_prob_view1},
                    {"solarize_prob_view2", cfg.augment.solarize_prob_view2},
                    {"solarize_threshold", cfg.augment.solarize_threshold}};

    j["weibull"] = {{"eta", cfg.weibull.eta},
                    {"min_class_samples", cfg.weibull.min_class_samples},
                    {"max_iterations", cfg.weibull.max_iterations},
                    {"tolerance", cfg.weibull.tolerance}};

    json lp;
    lp["stages"] = cfg.loop.stages;
    lp["budget"] = cfg.loop.budget;
    lp["strategy"] = to_string(cfg.loop.strategy);
    lp["labeled_cap_fraction"] = cfg.loop.labeled_cap_fraction;
    lp["exclude_rejected"] = cfg.loop.exclude_rejected;
    lp["ood_reject_threshold"] =
        cfg.loop.ood_reject_threshold ? json(*cfg.loop.ood_reject_threshold) : json(nullptr);
    j["loop"] = std::move(lp);

    j["seeds"] = cfg.seeds;
    return j.dump(2) + "\n";
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string config_hash_hex(const ExperimentConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(dump_config(cfg))));
    return buf;
}

std::string make_run_id(const ExperimentConfig& cfg) {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char ts[32];
    std::strftime(ts, sizeof ts, "%Y%m%dT%H%M%SZ", &tm);
    return std::string(ts) + "-" + config_hash_hex(cfg);
}

std::string manifest_to_json(const RunManifest& m) {
    json j;
    j["artifact_version"] = m.artifact_version;
    j["run_id"] = m.run_id;
    j["config_hash"] = m.config_hash;
    try {
        j["config"] = json::parse(m.config_json);
    } catch (const json::exception&) {
        j["config"] = m.config_json; // shouldn't happen; keep the raw text
    }
    j["partial"] = m.partial;
    json seeds = json::array();
    for (const SeedOutput& s : m.seeds) {
        json e;
        e["seed"] = s.seed;
        e["metrics_path"] = s.metrics_path;
        e["stages"] = s.stages;
        e["error"] = s.error;
        seeds.push_back(std::move(e));
    }
    j["seeds"] = std::move(seeds);
    return j.dump(2) + "\n";
}

void write_manifest(const RunManifest& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open manifest file " + path + " for writing");
    out << manifest_to_json(m);
    out.flush();
    if (!out) throw IoError("write to manifest file " + path + " failed");
}

} // namespace dalbt
