#pragma once

#include "dalbt/matrix.hpp"

#include <vector>

namespace dalbt {

/* Cross-correlation of paired embedding batches and the losses built on it.
 *
 * C_ij = sum_b Z1[b,i] * Z2[b,j] / (|Z1[:,i]| * |Z2[:,j]|)
 *
 * Column norms are floored at eps so dead (all-zero) units produce a zero row
 * instead of NaN; for any column with norm >= eps the value is the exact
 * cosine form above, so C(Z, Z) has a unit diagonal.
 */
struct CrossCorrelationOptions {
    bool center = false; // subtract per-column batch means first
    double eps = 1e-12;  // floor applied to each column norm
};

Matrix cross_correlation(const Matrix& z1, const Matrix& z2,
                         const CrossCorrelationOptions& opts = {});

// invariance = sum_i (1 - C_ii)^2, redundancy = sum_{i != j} C_ij^2 (raw,
// unweighted), total = invariance + lambda * redundancy.
struct BtBreakdown {
    double invariance = 0.0;
    double redundancy = 0.0;
    double total = 0.0;
};

BtBreakdown barlow_twins_loss(const Matrix& c, double lambda_bt);

// Mean negative log-likelihood over the batch, evaluated from raw logits via
// log-sum-exp.
double classifier_loss(const Matrix& logits, const std::vector<int>& labels);

struct LossWeights {
    double lambda_bt = 0.005; // redundancy weight inside the SSL loss
    double gamma = 0.001;     // weight of the SSL loss in the joint objective

    void validate() const;
};

struct JointLossResult {
    double total = 0.0;
    double ce_term = 0.0;
    double bt_invariance = 0.0;
    double bt_redundancy = 0.0;
};

// classifier_loss + gamma * barlow_twins_loss. When gamma == 0 the
// cross-correlation argument is ignored and may be empty.
JointLossResult joint_loss(const Matrix& logits, const std::vector<int>& labels,
                           const Matrix& c, const LossWeights& weights);

// Row-wise stable softmax; used by evaluation and confidence-based sampling.
Matrix softmax_rows(const Matrix& logits);

// d(mean NLL)/d(logits): (softmax - onehot) / B.
Matrix softmax_ce_grad(const Matrix& logits, const std::vector<int>& labels);

// dL_BT/dC: diagonal -2(1 - C_ii), off-diagonal 2 * lambda * C_ij.
Matrix barlow_twins_grad_wrt_c(const Matrix& c, double lambda_bt);

struct EmbeddingGrads {
    Matrix dz1;
    Matrix dz2;
};

// Chains an upstream dL/dC back onto both embedding batches, including the
// normalization (and optional centering) inside cross_correlation.
EmbeddingGrads cross_correlation_backward(const Matrix& z1, const Matrix& z2,
                                          const Matrix& dc,
                                          const CrossCorrelationOptions& opts = {});

} // namespace dalbt
