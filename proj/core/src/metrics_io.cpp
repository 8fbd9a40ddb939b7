#include "dalbt/metrics_io.hpp"

#include "dalbt/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <utility>

namespace dalbt {
namespace {

using nlohmann::json;

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string quote(const std::string& s) {
    return json(s).dump(); // handles escaping
}

std::string build_line(const StageMetrics& m, const std::string& run_id, const std::string& wall) {
    std::ostringstream os;
    os << "{\"schema_version\":" << m.schema_version;
    os << ",\"run_id\":" << quote(run_id);
    os << ",\"seed\":" << m.seed;
    os << ",\"stage\":" << m.stage;
    os << ",\"strategy\":" << quote(m.strategy);
    os << ",\"labeled_size\":" << m.labeled_size;
    os << ",\"unlabeled_size\":" << m.unlabeled_size;
    os << ",\"test_accuracy\":" << fmt_double(m.test_accuracy);
    if (m.val_accuracy) os << ",\"val_accuracy\":" << fmt_double(*m.val_accuracy);
    os << ",\"selected_count\":" << m.selected_count;
    os << ",\"ood_selected_count\":" << m.ood_selected_count;
    os << ",\"ood_rejected_count\":" << m.ood_rejected_count;
    os << ",\"in_dist_precision\":" << fmt_double(m.in_dist_precision);
    os << ",\"ce_term\":" << fmt_double(m.ce_term);
    os << ",\"bt_invariance\":" << fmt_double(m.bt_invariance);
    os << ",\"bt_redundancy\":" << fmt_double(m.bt_redundancy);
    os << ",\"wall_time_s\":" << wall;
    os << ",\"weibull_fallback\":" << (m.weibull_fallback ? "true" : "false");
    os << "}";
    return os.str();
}

} // namespace

std::string metrics_to_json(const StageMetrics& m) {
    return build_line(m, m.run_id, fmt_double(m.wall_time_s));
}

std::string masked_metrics_line(const StageMetrics& m) {
    return build_line(m, "<run_id>", "0");
}

StageMetrics metrics_from_json(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad metrics line: ") + e.what());
    }
    if (!j.is_object()) throw FormatError("metrics line is not a JSON object");

    static const char* kKnown[] = {
        "schema_version", "run_id",         "seed",
        "stage",          "strategy",       "labeled_size",
        "unlabeled_size", "test_accuracy",  "val_accuracy",
        "selected_count", "ood_selected_count", "ood_rejected_count",
        "in_dist_precision", "ce_term",     "bt_invariance",
        "bt_redundancy",  "wall_time_s",    "weibull_fallback"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : kKnown)
            if (it.key() == k) { known = true; break; }
        if (!known) throw FormatError("unknown metrics field '" + it.key() + "'");
    }

    auto need = [&](const char* k) -> const json& {
        auto it = j.find(k);
        if (it == j.end()) throw FormatError(std::string("metrics line missing field '") + k + "'");
        return *it;
    };

    StageMetrics m;
    try {
        m.schema_version = need("schema_version").get<int>();
        m.run_id = need("run_id").get<std::string>();
        m.seed = need("seed").get<std::uint64_t>();
        m.stage = need("stage").get<int>();
        m.strategy = need("strategy").get<std::string>();
        m.labeled_size = need("labeled_size").get<int>();
        m.unlabeled_size = need("unlabeled_size").get<int>();
        m.test_accuracy = need("test_accuracy").get<double>();
        if (auto it = j.find("val_accuracy"); it != j.end()) m.val_accuracy = it->get<double>();
        m.selected_count = need("selected_count").get<int>();
        m.ood_selected_count = need("ood_selected_count").get<int>();
        m.ood_rejected_count = need("ood_rejected_count").get<int>();
        m.in_dist_precision = need("in_dist_precision").get<double>();
        m.ce_term = need("ce_term").get<double>();
        m.bt_invariance = need("bt_invariance").get<double>();
        m.bt_redundancy = need("bt_redundancy").get<double>();
        m.wall_time_s = need("wall_time_s").get<double>();
        m.weibull_fallback = need("weibull_fallback").get<bool>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("metrics field has the wrong type: ") + e.what());
    }
    return m;
}

std::vector<StageMetrics> load_metrics_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open metrics file " + path);
    std::vector<StageMetrics> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(metrics_from_json(line));
        } catch (const Error& e) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

MetricsWriter::MetricsWriter(const std::string& path) : path_(path), out_(path, std::ios::app) {
    if (!out_) throw IoError("cannot open metrics file " + path + " for writing");
}

void MetricsWriter::write(const StageMetrics& m) {
    out_ << metrics_to_json(m) << '\n';
    out_.flush();
    if (!out_) throw IoError("write to metrics file " + path_ + " failed");
}

std::string export_curves_csv(const std::vector<StageMetrics>& records) {
    struct Acc {
        std::vector<double> accs;
        double labeled_sum = 0.0;
    };
    std::map<std::pair<std::string, int>, Acc> groups;
    for (const StageMetrics& m : records) {
        Acc& a = groups[{m.strategy, m.stage}];
        a.accs.push_back(m.test_accuracy);
        a.labeled_sum += m.labeled_size;
    }

    std::ostringstream os;
    os << "stage,labeled_size,mean_acc,std_acc,strategy\n";
    for (const auto& [key, a] : groups) {
        double n = static_cast<double>(a.accs.size());
        double mean = 0.0;
        for (double v : a.accs) mean += v;
        mean /= n;
        double var = 0.0;
        if (a.accs.size() > 1) {
            for (double v : a.accs) var += (v - mean) * (v - mean);
            var /= (n - 1.0);
        }
        os << key.second << ',' << fmt_double(a.labeled_sum / n) << ',' << fmt_double(mean) << ','
           << fmt_double(std::sqrt(var)) << ',' << key.first << '\n';
    }
    return os.str();
}

} // namespace dalbt
