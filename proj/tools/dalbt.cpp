#include "dalbt/checkpoint.hpp"
#include "dalbt/config_io.hpp"
#include "dalbt/error.hpp"
#include "dalbt/metrics_io.hpp"
#include "dalbt/rng.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace dalbt;

namespace {

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::optional<std::uint64_t>& seed_override) {
    ExperimentConfig cfg = parse_config_file(config_path);
    if (seed_override) cfg.seeds = {*seed_override};

    fs::create_directories(out_dir);
    std::string run_id = make_run_id(cfg);
    std::string resolved = dump_config(cfg);
    {
        std::ofstream out(fs::path(out_dir) / "config.json");
        if (!out) throw IoError("cannot write resolved config into " + out_dir);
        out << resolved;
    }

    // One metrics file per seed, opened on first record so a seed that dies
    // before stage 0 leaves no empty file behind.
    std::map<std::uint64_t, std::unique_ptr<MetricsWriter>> writers;
    auto path_for = [&](std::uint64_t seed) {
        return (fs::path(out_dir) / ("metrics_seed_" + std::to_string(seed) + ".jsonl")).string();
    };
    MetricsSink sink = [&](const StageMetrics& m) {
        auto& w = writers[m.seed];
        if (!w) w = std::make_unique<MetricsWriter>(path_for(m.seed));
        w->write(m);
    };

    std::vector<SeedRun> runs = run_experiment(cfg, run_id, sink);

    RunManifest manifest;
    manifest.run_id = run_id;
    manifest.config_hash = config_hash_hex(cfg);
    manifest.config_json = resolved;
    bool failed = false;
    for (const SeedRun& r : runs) {
        SeedOutput s;
        s.seed = r.seed;
        s.metrics_path = writers.count(r.seed) ? path_for(r.seed) : "";
        s.stages = static_cast<int>(r.stages.size());
        s.error = r.error;
        if (!r.error.empty()) failed = true;
        manifest.seeds.push_back(std::move(s));
    }
    manifest.partial = failed;
    write_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());

    for (const SeedRun& r : runs) {
        if (!r.error.empty()) {
            std::cout << "seed " << r.seed << ": FAILED after " << r.stages.size()
                      << " stage(s): " << r.error << "\n";
        } else {
            double final_acc = r.stages.empty() ? 0.0 : r.stages.back().test_accuracy;
            std::cout << "seed " << r.seed << ": " << r.stages.size()
                      << " stage(s), final test accuracy " << final_acc << "\n";
        }
    }
    std::cout << "run " << run_id << " -> " << out_dir << (failed ? " (partial)" : "") << "\n";
    return failed ? 1 : 0;
}

int cmd_export_curves(const std::vector<std::string>& run_dirs, const std::string& out_csv) {
    std::vector<StageMetrics> records;
    for (const std::string& dir : run_dirs) {
        if (!fs::is_directory(dir)) throw IoError(dir + " is not a run directory");
        std::vector<std::string> files;
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_regular_file() && e.path().extension() == ".jsonl")
                files.push_back(e.path().string());
        std::sort(files.begin(), files.end());
        for (const std::string& f : files) {
            auto part = load_metrics_file(f);
            records.insert(records.end(), part.begin(), part.end());
        }
    }
    if (records.empty()) throw UsageError("no metrics records found under the given directories");

    std::ofstream out(out_csv);
    if (!out) throw IoError("cannot open " + out_csv + " for writing");
    out << export_curves_csv(records);
    out.flush();
    if (!out) throw IoError("write to " + out_csv + " failed");
    std::cout << "wrote " << out_csv << " from " << records.size() << " stage records\n";
    return 0;
}

// Builds a dense toy model and random batch, then runs the exact-vs-central-
// difference comparison over every parameter.
int cmd_gradcheck(const std::vector<int>& dims) {
    if (dims.size() != 5)
        throw UsageError("--dims wants 5 integers: input latent projector classes batch");
    int input = dims[0], latent = dims[1], proj = dims[2], classes = dims[3], batch = dims[4];
    if (input < 1 || latent < 1 || proj < 0 || classes < 2 || batch < 2)
        throw UsageError("gradcheck dims out of range (batch >= 2, classes >= 2)");

    ArchSpec arch;
    arch.input_h = 1;
    arch.input_w = 1;
    arch.input_c = input;
    arch.num_classes = classes;
    arch.latent_dim = latent;
    arch.projector_hidden.clear();
    arch.projector_dim = proj;
    Network net(arch, 7);

    Rng rng(99);
    auto make_batch = [&](std::uint64_t stream) {
        Rng r = rng.derive(stream);
        std::vector<Image> imgs;
        imgs.reserve(static_cast<std::size_t>(batch));
        for (int b = 0; b < batch; ++b) {
            Image im(1, 1, input);
            for (double& p : im.v) p = r.uniform();
            imgs.push_back(std::move(im));
        }
        return imgs;
    };
    std::vector<Image> x = make_batch(1), v1 = make_batch(2), v2 = make_batch(3);
    std::vector<const Image*> xp, v1p, v2p;
    std::vector<int> labels;
    for (int b = 0; b < batch; ++b) {
        xp.push_back(&x[static_cast<std::size_t>(b)]);
        v1p.push_back(&v1[static_cast<std::size_t>(b)]);
        v2p.push_back(&v2[static_cast<std::size_t>(b)]);
        labels.push_back(b % classes);
    }

    LossWeights weights; // gamma 0.001, lambda 0.005
    double worst = grad_check(net, xp, labels, v1p, v2p, weights, 1e-5);
    std::printf("max relative gradient error: %.3e over %zu parameters\n", worst,
                net.params().size());
    return worst < 1e-4 ? 0 : 1;
}

int cmd_fit_weibull(const std::string& input, int eta) {
    std::ifstream in(input);
    if (!in) throw IoError("cannot open " + input);
    std::vector<double> distances;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            std::size_t pos = 0;
            double v = std::stod(line, &pos);
            while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
            if (pos != line.size()) throw std::invalid_argument("trailing text");
            distances.push_back(v);
        } catch (const std::exception&) {
            if (lineno == 1) continue; // header row
            throw FormatError(input + ":" + std::to_string(lineno) +
                              ": expected one number per line");
        }
    }

    WeibullFitConfig cfg;
    cfg.eta = eta;
    WeibullModel model = fit_weibull(std::move(distances), cfg);
    std::printf("tau=%.17g lambda=%.17g kappa=%.17g\n", model.tau, model.lambda_scale,
                model.kappa);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pool-based active learning with joint Barlow Twins training and "
                 "Weibull open-set acquisition"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed_override;
    auto* run = app.add_subcommand("run", "execute an experiment config");
    run->add_option("--config", config_path, "experiment config JSON")->required();
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--seed-override", seed_override, "replace the config's seed list");

    std::vector<std::string> run_dirs;
    std::string out_csv;
    auto* exp = app.add_subcommand("export-curves", "aggregate run metrics into a CSV");
    exp->add_option("--runs", run_dirs, "run directories")->required()->expected(-1);
    exp->add_option("--out", out_csv, "output CSV path")->required();

    std::vector<int> dims = {8, 6, 4, 3, 5};
    auto* gc = app.add_subcommand("gradcheck", "finite-difference check of the joint loss");
    gc->add_option("--dims", dims, "input latent projector classes batch")->expected(5);

    std::string weibull_input;
    int eta = 20;
    auto* fw = app.add_subcommand("fit-weibull", "fit a Weibull tail to a column of distances");
    fw->add_option("--input", weibull_input, "CSV with one distance per line")->required();
    fw->add_option("--eta", eta, "tail size");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir, seed_override);
        if (exp->parsed()) return cmd_export_curves(run_dirs, out_csv);
        if (gc->parsed()) return cmd_gradcheck(dims);
        if (fw->parsed()) return cmd_fit_weibull(weibull_input, eta);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
