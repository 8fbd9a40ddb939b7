#include "dalbt/losses.hpp"

#include "dalbt/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dalbt {

namespace {

void check_pair_shape(const Matrix& z1, const Matrix& z2) {
    if (z1.rows != z2.rows || z1.cols != z2.cols)
        throw UsageError("cross_correlation: embedding batches must share a shape, got " +
                         std::to_string(z1.rows) + "x" + std::to_string(z1.cols) + " vs " +
                         std::to_string(z2.rows) + "x" + std::to_string(z2.cols));
    if (z1.rows < 2)
        throw UsageError("cross_correlation: batch of " + std::to_string(z1.rows) +
                         " is degenerate, need at least 2 samples");
}

Matrix centered(const Matrix& z) {
    Matrix out = z;
    for (int j = 0; j < z.cols; ++j) {
        double mean = 0.0;
        for (int b = 0; b < z.rows; ++b) mean += z(b, j);
        mean /= z.rows;
        for (int b = 0; b < z.rows; ++b) out(b, j) -= mean;
    }
    return out;
}

// Raw column norms plus the eps-floored version used as denominator.
void column_norms(const Matrix& z, double eps, std::vector<double>& raw,
                  std::vector<double>& floored) {
    raw.assign(static_cast<std::size_t>(z.cols), 0.0);
    floored.assign(static_cast<std::size_t>(z.cols), 0.0);
    for (int b = 0; b < z.rows; ++b)
        for (int j = 0; j < z.cols; ++j) raw[j] += z(b, j) * z(b, j);
    for (int j = 0; j < z.cols; ++j) {
        raw[j] = std::sqrt(raw[j]);
        floored[j] = std::max(raw[j], eps);
    }
}

} // namespace

Matrix cross_correlation(const Matrix& z1, const Matrix& z2,
                         const CrossCorrelationOptions& opts) {
    check_pair_shape(z1, z2);
    Matrix ac, bc;
    if (opts.center) {
        ac = centered(z1);
        bc = centered(z2);
    }
    const Matrix& a = opts.center ? ac : z1;
    const Matrix& b = opts.center ? bc : z2;

    std::vector<double> raw1, n1, raw2, n2;
    column_norms(a, opts.eps, raw1, n1);
    column_norms(b, opts.eps, raw2, n2);

    Matrix c(z1.cols, z1.cols, 0.0);
    for (int r = 0; r < z1.rows; ++r)
        for (int i = 0; i < z1.cols; ++i) {
            const double zi = a(r, i);
            if (zi == 0.0) continue;
            for (int j = 0; j < z1.cols; ++j) c(i, j) += zi * b(r, j);
        }
    for (int i = 0; i < c.rows; ++i)
        for (int j = 0; j < c.cols; ++j) c(i, j) /= n1[i] * n2[j];
    return c;
}

BtBreakdown barlow_twins_loss(const Matrix& c, double lambda_bt) {
    if (c.rows != c.cols)
        throw UsageError("barlow_twins_loss: cross-correlation matrix must be square");
    BtBreakdown out;
    for (int i = 0; i < c.rows; ++i) {
        const double di = 1.0 - c(i, i);
        out.invariance += di * di;
        for (int j = 0; j < c.cols; ++j)
            if (j != i) out.redundancy += c(i, j) * c(i, j);
    }
    out.total = out.invariance + lambda_bt * out.redundancy;
    return out;
}

namespace {

double log_sum_exp(std::span<const double> row) {
    double m = row[0];
    for (double v : row) m = std::max(m, v);
    double s = 0.0;
    for (double v : row) s += std::exp(v - m);
    return m + std::log(s);
}

void check_labels(const Matrix& logits, const std::vector<int>& labels) {
    if (logits.rows < 1 || logits.cols < 1)
        throw UsageError("classifier_loss: empty logits batch");
    if (static_cast<int>(labels.size()) != logits.rows)
        throw UsageError("classifier_loss: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(logits.rows) + " rows");
    for (int y : labels)
        if (y < 0 || y >= logits.cols)
            throw ConsistencyError("classifier_loss: label " + std::to_string(y) +
                                   " outside [0, " + std::to_string(logits.cols) + ")");
}

} // namespace

double classifier_loss(const Matrix& logits, const std::vector<int>& labels) {
    check_labels(logits, labels);
    double total = 0.0;
    for (int b = 0; b < logits.rows; ++b)
        total += log_sum_exp(logits.row(b)) - logits(b, labels[b]);
    return total / logits.rows;
}

void LossWeights::validate() const {
    if (!(std::isfinite(lambda_bt) && lambda_bt > 0.0))
        throw ConfigError("loss weights: lambda_bt must be finite and > 0");
    if (!(std::isfinite(gamma) && gamma >= 0.0))
        throw ConfigError("loss weights: gamma must be finite and >= 0");
}

JointLossResult joint_loss(const Matrix& logits, const std::vector<int>& labels,
                           const Matrix& c, const LossWeights& weights) {
    weights.validate();
    JointLossResult out;
    out.ce_term = classifier_loss(logits, labels);
    out.total = out.ce_term;
    if (weights.gamma > 0.0) {
        const BtBreakdown bt = barlow_twins_loss(c, weights.lambda_bt);
        out.bt_invariance = bt.invariance;
        out.bt_redundancy = bt.redundancy;
        out.total += weights.gamma * bt.total;
    }
    return out;
}

Matrix softmax_rows(const Matrix& logits) {
    if (logits.rows < 1 || logits.cols < 1)
        throw UsageError("softmax_rows: empty logits batch");
    Matrix out(logits.rows, logits.cols);
    for (int b = 0; b < logits.rows; ++b) {
        const double lse = log_sum_exp(logits.row(b));
        for (int k = 0; k < logits.cols; ++k) out(b, k) = std::exp(logits(b, k) - lse);
    }
    return out;
}

Matrix softmax_ce_grad(const Matrix& logits, const std::vector<int>& labels) {
    check_labels(logits, labels);
    Matrix grad = softmax_rows(logits);
    const double inv_b = 1.0 / logits.rows;
    for (int b = 0; b < logits.rows; ++b) {
        grad(b, labels[b]) -= 1.0;
        for (int k = 0; k < logits.cols; ++k) grad(b, k) *= inv_b;
    }
    return grad;
}

Matrix barlow_twins_grad_wrt_c(const Matrix& c, double lambda_bt) {
    if (c.rows != c.cols)
        throw UsageError("barlow_twins_grad_wrt_c: matrix must be square");
    Matrix dc(c.rows, c.cols);
    for (int i = 0; i < c.rows; ++i)
        for (int j = 0; j < c.cols; ++j)
            dc(i, j) = i == j ? -2.0 * (1.0 - c(i, i)) : 2.0 * lambda_bt * c(i, j);
    return dc;
}

EmbeddingGrads cross_correlation_backward(const Matrix& z1, const Matrix& z2,
                                          const Matrix& dc,
                                          const CrossCorrelationOptions& opts) {
    check_pair_shape(z1, z2);
    if (dc.rows != z1.cols || dc.cols != z1.cols)
        throw UsageError("cross_correlation_backward: dC must be d x d");

    Matrix zc1 = opts.center ? centered(z1) : z1;
    Matrix zc2 = opts.center ? centered(z2) : z2;

    std::vector<double> raw1, n1, raw2, n2;
    column_norms(zc1, opts.eps, raw1, n1);
    column_norms(zc2, opts.eps, raw2, n2);
    const Matrix c = cross_correlation(z1, z2, opts);

    // For n_i = max(|u_i|, eps), m_j likewise:
    //   dZ1[b,i] = (1/n_i) * sum_j dC_ij Z2[b,j]/m_j
    //            - (Z1[b,i] / (n_i |u_i|)) * sum_j dC_ij C_ij   (0 if |u_i| <= eps)
    // and symmetrically for dZ2 with the transposed contraction.
    std::vector<double> row_dot(static_cast<std::size_t>(dc.rows), 0.0);
    std::vector<double> col_dot(static_cast<std::size_t>(dc.cols), 0.0);
    for (int i = 0; i < dc.rows; ++i)
        for (int j = 0; j < dc.cols; ++j) {
            const double p = dc(i, j) * c(i, j);
            row_dot[i] += p;
            col_dot[j] += p;
        }

    EmbeddingGrads out;
    out.dz1 = Matrix(z1.rows, z1.cols, 0.0);
    out.dz2 = Matrix(z2.rows, z2.cols, 0.0);
    for (int b = 0; b < z1.rows; ++b) {
        for (int i = 0; i < z1.cols; ++i) {
            double acc = 0.0;
            for (int j = 0; j < z1.cols; ++j) acc += dc(i, j) * zc2(b, j) / n2[j];
            double g = acc / n1[i];
            if (raw1[i] > opts.eps) g -= zc1(b, i) * row_dot[i] / (n1[i] * raw1[i]);
            out.dz1(b, i) = g;
        }
        for (int j = 0; j < z1.cols; ++j) {
            double acc = 0.0;
            for (int i = 0; i < z1.cols; ++i) acc += dc(i, j) * zc1(b, i) / n1[i];
            double g = acc / n2[j];
            if (raw2[j] > opts.eps) g -= zc2(b, j) * col_dot[j] / (n2[j] * raw2[j]);
            out.dz2(b, j) = g;
        }
    }

    if (opts.center) {
        // Chain through the column-mean subtraction: dZ = dZc - colmean(dZc).
        for (Matrix* m : {&out.dz1, &out.dz2})
            for (int j = 0; j < m->cols; ++j) {
                double mean = 0.0;
                for (int b = 0; b < m->rows; ++b) mean += (*m)(b, j);
                mean /= m->rows;
                for (int b = 0; b < m->rows; ++b) (*m)(b, j) -= mean;
            }
    }
    return out;
}

} // namespace dalbt
