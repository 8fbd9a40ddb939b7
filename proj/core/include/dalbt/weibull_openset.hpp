#pragma once

#include "dalbt/matrix.hpp"
#include "dalbt/network.hpp"
#include "dalbt/sample.hpp"

#include <span>
#include <string>
#include <vector>

namespace dalbt {

struct ClassCluster {
    int class_id = -1;
    std::vector<double> mean;       // coordinate-wise average of the latents
    std::vector<double> distances;  // Euclidean norms to the mean, ascending
};

// Three-parameter Weibull over distances: CDF(d) = 1 - exp(-((d-tau)/lambda)^kappa)
// with the shifted distance clamped at 0, so CDF(d) = 0 for d <= tau.
struct WeibullModel {
    double tau = 0.0;
    double lambda_scale = 1.0;
    double kappa = 1.0;
};

struct WeibullFitConfig {
    int eta = 20;              // tail size; effectively min(eta, available)
    int min_class_samples = 5; // below this a class uses the pooled fallback fit
    int max_iterations = 200;
    double tolerance = 1e-10;  // on the shape-equation residual |g(kappa)|

    void validate() const;
};

// Latents of correctly classified labeled samples, grouped by true class.
// Element c is a |S_c| x d matrix (zero rows when no sample of class c was
// classified correctly).
std::vector<Matrix> collect_correct_latents(const Network& net,
                                            const std::vector<const Sample*>& labeled);

ClassCluster build_cluster(int class_id, const Matrix& latents);

/* Maximum-likelihood Weibull fit on the eta largest distances.
 *
 * tau = 0.99 * min(tail); values are shifted by tau and any non-positive
 * leftovers dropped. The shape kappa solves
 *   g(k) = sum x^k ln x / sum x^k - 1/k - mean(ln x) = 0
 * (g is strictly increasing, so a bracketed Newton iteration on
 * kappa in [0.01, 100] finds the unique root), then
 * lambda = (mean(x^kappa))^(1/kappa).
 *
 * Throws DegenerateFitError when the tail carries no usable information
 * (fewer than 2 positive values, zero variance, or no root in the bracket)
 * and NumericError when the iteration budget runs out.
 */
WeibullModel fit_weibull(std::vector<double> distances, const WeibullFitConfig& cfg);

double weibull_cdf(const WeibullModel& model, double d);

struct ClassModel {
    int class_id = -1;
    std::vector<double> mean;
    WeibullModel weibull;
    int support = 0;           // correct latents behind this class
    bool pooled_fit = false;   // weibull came from the global fallback fit
};

struct OpenSetModel {
    std::vector<ClassModel> classes;
    bool used_fallback = false; // any class resorted to the pooled fit
};

/* Per-class models over the trained encoder's latent space.
 *
 * Classes with at least min_class_samples correct latents get their own
 * tail fit; smaller (but nonempty) classes keep their mean and borrow a
 * single Weibull fitted on all correct-latent distances pooled. Classes
 * whose fit degenerates borrow the pooled fit the same way. The result can
 * legitimately be empty (no correct samples at all); scoring then throws
 * StrategyUnavailableError.
 */
OpenSetModel fit_openset_model(const Network& net, const std::vector<const Sample*>& labeled,
                               const WeibullFitConfig& cfg);

// min over classes of weibull_cdf(class model, |z - class mean|): a sample
// counts as an outlier only if even its best-fitting cluster rejects it.
double outlier_score(const OpenSetModel& model, std::span<const double> z);

// Scores for a batch of samples under a frozen model (encode + outlier_score).
std::vector<double> score_outliers(const Network& net, const OpenSetModel& model,
                                   const std::vector<const Sample*>& samples);

// One line per class: "class_id tau lambda kappa support pooled".
std::string model_records(const OpenSetModel& model);

} // namespace dalbt
