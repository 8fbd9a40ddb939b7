#include "dalbt/weibull_openset.hpp"

#include "dalbt/error.hpp"
#include "dalbt/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace dalbt {

void WeibullFitConfig::validate() const {
    if (eta < 2) throw ConfigError("weibull: eta must be >= 2");
    if (min_class_samples < 1) throw ConfigError("weibull: min_class_samples must be >= 1");
    if (max_iterations < 1) throw ConfigError("weibull: max_iterations must be >= 1");
    if (!(tolerance > 0.0)) throw ConfigError("weibull: tolerance must be > 0");
}

std::vector<Matrix> collect_correct_latents(const Network& net,
                                            const std::vector<const Sample*>& labeled) {
    std::vector<Matrix> per_class(static_cast<std::size_t>(net.num_classes()));
    if (labeled.empty()) return per_class;

    std::vector<const Image*> xs(labeled.size());
    for (std::size_t i = 0; i < labeled.size(); ++i) {
        if (!labeled[i]->label)
            throw ConsistencyError("collect_correct_latents: sample " +
                                   std::to_string(labeled[i]->id) + " has no label");
        xs[i] = &labeled[i]->pixels;
    }
    const Matrix z = net.encode(xs);
    const Matrix logits = net.classify_logits(z);

    // Count first so each class matrix is allocated once.
    std::vector<int> counts(per_class.size(), 0);
    std::vector<int> pred(labeled.size());
    for (int b = 0; b < logits.rows; ++b) {
        int best = 0;
        for (int k = 1; k < logits.cols; ++k)
            if (logits(b, k) > logits(b, best)) best = k;
        pred[static_cast<std::size_t>(b)] = best;
        if (best == *labeled[static_cast<std::size_t>(b)]->label) ++counts[best];
    }
    for (std::size_t c = 0; c < per_class.size(); ++c)
        per_class[c] = Matrix(counts[c], net.latent_dim());

    std::vector<int> filled(per_class.size(), 0);
    for (int b = 0; b < z.rows; ++b) {
        const int truth = *labeled[static_cast<std::size_t>(b)]->label;
        if (pred[static_cast<std::size_t>(b)] != truth) continue;
        per_class[static_cast<std::size_t>(truth)].set_row(filled[truth]++, z.row(b));
    }
    return per_class;
}

ClassCluster build_cluster(int class_id, const Matrix& latents) {
    if (latents.rows < 1)
        throw UsageError("build_cluster: class " + std::to_string(class_id) +
                         " has no latents");
    ClassCluster cluster;
    cluster.class_id = class_id;
    cluster.mean.assign(static_cast<std::size_t>(latents.cols), 0.0);
    for (int r = 0; r < latents.rows; ++r)
        for (int c = 0; c < latents.cols; ++c) cluster.mean[static_cast<std::size_t>(c)] += latents(r, c);
    for (auto& m : cluster.mean) m /= latents.rows;

    cluster.distances.resize(static_cast<std::size_t>(latents.rows));
    for (int r = 0; r < latents.rows; ++r) {
        double sq = 0.0;
        for (int c = 0; c < latents.cols; ++c) {
            const double diff = latents(r, c) - cluster.mean[static_cast<std::size_t>(c)];
            sq += diff * diff;
        }
        cluster.distances[static_cast<std::size_t>(r)] = std::sqrt(sq);
    }
    std::sort(cluster.distances.begin(), cluster.distances.end());
    return cluster;
}

namespace {

// Shape-equation residual and derivative on scale-normalized tail values
// u_i = x_i / max(x), which leaves g unchanged but keeps u^kappa bounded.
struct ShapeEquation {
    const std::vector<double>& u;   // in (0, 1]
    const std::vector<double>& lnu; // ln(u), <= 0
    double mean_lnu;

    // g(k) = sum u^k ln u / sum u^k - 1/k - mean(ln u); strictly increasing.
    double g(double k, double* dg = nullptr) const {
        double b = 0.0, a = 0.0, a2 = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double p = std::pow(u[i], k);
            b += p;
            a += p * lnu[i];
            a2 += p * lnu[i] * lnu[i];
        }
        if (dg) *dg = (a2 * b - a * a) / (b * b) + 1.0 / (k * k);
        return a / b - 1.0 / k - mean_lnu;
    }
};

} // namespace

WeibullModel fit_weibull(std::vector<double> distances, const WeibullFitConfig& cfg) {
    cfg.validate();
    if (distances.size() < 2)
        throw DegenerateFitError("weibull fit: need at least 2 distances, got " +
                                 std::to_string(distances.size()));

    // Tail = the eta largest values.
    const std::size_t tail_n = std::min<std::size_t>(static_cast<std::size_t>(cfg.eta),
                                                     distances.size());
    std::nth_element(distances.begin(), distances.end() - static_cast<std::ptrdiff_t>(tail_n),
                     distances.end());
    std::vector<double> tail(distances.end() - static_cast<std::ptrdiff_t>(tail_n),
                             distances.end());

    const double tail_min = *std::min_element(tail.begin(), tail.end());
    if (!(tail_min >= 0.0) || !std::isfinite(tail_min))
        throw NumericError("weibull fit: distances must be finite and nonnegative");
    const double tau = 0.99 * tail_min;

    std::vector<double> x;
    x.reserve(tail.size());
    for (double d : tail)
        if (d - tau > 0.0) x.push_back(d - tau);
    if (x.size() < 2)
        throw DegenerateFitError("weibull fit: fewer than 2 positive tail values after shift");

    const double xmax = *std::max_element(x.begin(), x.end());
    const double xmin = *std::min_element(x.begin(), x.end());
    if (xmax - xmin <= 1e-12 * xmax)
        throw DegenerateFitError("weibull fit: tail has zero variance");

    std::vector<double> u(x.size()), lnu(x.size());
    double mean_lnu = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        u[i] = x[i] / xmax;
        lnu[i] = std::log(u[i]);
        mean_lnu += lnu[i];
    }
    mean_lnu /= static_cast<double>(x.size());
    const ShapeEquation eq{u, lnu, mean_lnu};

    double lo = 0.01, hi = 100.0;
    double glo = eq.g(lo), ghi = eq.g(hi);
    if (glo > 0.0 || ghi < 0.0)
        throw DegenerateFitError("weibull fit: no shape in [0.01, 100] solves the "
                                 "likelihood equation");

    double k = std::clamp(1.0, lo, hi);
    bool converged = false;
    for (int it = 0; it < cfg.max_iterations; ++it) {
        double dg = 0.0;
        const double gk = eq.g(k, &dg);
        if (std::abs(gk) < cfg.tolerance) {
            converged = true;
            break;
        }
        if (gk < 0.0)
            lo = k;
        else
            hi = k;
        double next = dg > 0.0 ? k - gk / dg : lo;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi); // Newton left the bracket
        k = next;
    }
    if (!converged)
        throw NumericError("weibull fit: shape solve did not converge in " +
                           std::to_string(cfg.max_iterations) + " iterations");

    double mean_uk = 0.0;
    for (double ui : u) mean_uk += std::pow(ui, k);
    mean_uk /= static_cast<double>(u.size());

    WeibullModel model;
    model.tau = tau;
    model.kappa = k;
    model.lambda_scale = xmax * std::pow(mean_uk, 1.0 / k);
    return model;
}

double weibull_cdf(const WeibullModel& model, double d) {
    const double shifted = std::max(d - model.tau, 0.0);
    if (shifted == 0.0) return 0.0;
    return 1.0 - std::exp(-std::pow(shifted / model.lambda_scale, model.kappa));
}

OpenSetModel fit_openset_model(const Network& net, const std::vector<const Sample*>& labeled,
                               const WeibullFitConfig& cfg) {
    cfg.validate();
    const std::vector<Matrix> latents = collect_correct_latents(net, labeled);

    std::vector<ClassCluster> clusters;
    std::vector<double> pooled;
    for (std::size_t c = 0; c < latents.size(); ++c) {
        if (latents[c].rows < 1) continue;
        clusters.push_back(build_cluster(static_cast<int>(c), latents[c]));
        pooled.insert(pooled.end(), clusters.back().distances.begin(),
                      clusters.back().distances.end());
    }

    // Pooled fallback over every correct latent's distance to its own class
    // mean; fitted lazily since most stages never need it.
    bool pooled_tried = false, pooled_ok = false;
    WeibullModel pooled_model;
    const auto pooled_fit = [&]() {
        if (!pooled_tried) {
            pooled_tried = true;
            try {
                pooled_model = fit_weibull(pooled, cfg);
                pooled_ok = true;
            } catch (const DegenerateFitError&) {
                pooled_ok = false;
            }
        }
        return pooled_ok;
    };

    OpenSetModel model;
    for (const ClassCluster& cluster : clusters) {
        ClassModel cm;
        cm.class_id = cluster.class_id;
        cm.mean = cluster.mean;
        cm.support = static_cast<int>(cluster.distances.size());
        bool fitted = false;
        if (cm.support >= cfg.min_class_samples) {
            try {
                cm.weibull = fit_weibull(cluster.distances, cfg);
                fitted = true;
            } catch (const DegenerateFitError&) {
                fitted = false;
            }
        }
        if (!fitted) {
            if (!pooled_fit()) continue; // nothing usable for this class
            cm.weibull = pooled_model;
            cm.pooled_fit = true;
            model.used_fallback = true;
        }
        model.classes.push_back(std::move(cm));
    }
    return model;
}

double outlier_score(const OpenSetModel& model, std::span<const double> z) {
    if (model.classes.empty())
        throw StrategyUnavailableError("outlier scoring: no fitted class models");
    double best = 1.0;
    for (const ClassModel& cm : model.classes) {
        if (cm.mean.size() != z.size())
            throw UsageError("outlier scoring: latent size " + std::to_string(z.size()) +
                             " does not match model dimension " +
                             std::to_string(cm.mean.size()));
        double sq = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double diff = z[i] - cm.mean[i];
            sq += diff * diff;
        }
        best = std::min(best, weibull_cdf(cm.weibull, std::sqrt(sq)));
    }
    return best;
}

std::vector<double> score_outliers(const Network& net, const OpenSetModel& model,
                                   const std::vector<const Sample*>& samples) {
    if (model.classes.empty())
        throw StrategyUnavailableError("outlier scoring: no fitted class models");
    std::vector<const Image*> xs(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) xs[i] = &samples[i]->pixels;
    const Matrix z = net.encode(xs);
    std::vector<double> scores(samples.size(), 0.0);
    parallel_for(samples.size(), [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b)
            scores[b] = outlier_score(model, z.row(static_cast<int>(b)));
    });
    return scores;
}

std::string model_records(const OpenSetModel& model) {
    std::ostringstream out;
    out.precision(17);
    for (const ClassModel& cm : model.classes)
        out << cm.class_id << ' ' << cm.weibull.tau << ' ' << cm.weibull.lambda_scale << ' '
            << cm.weibull.kappa << ' ' << cm.support << ' ' << (cm.pooled_fit ? 1 : 0)
            << '\n';
    return out.str();
}

} // namespace dalbt
