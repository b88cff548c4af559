#pragma once

#include "ndno/pointcloud.hpp"

namespace ndno::ot {

struct SinkhornOptions {
    double epsilon = 0.0;        // absolute regularization; 0 -> eps_scale * mean(cost)
    double eps_scale = 0.01;     // used when epsilon == 0
    int max_iters = 500;
    double tol = 1e-6;           // L1 marginal violation
};

struct TransportResult {
    Mat plan;            // |S| x |T|, nonnegative
    double cost_value = 0.0;  // <plan, cost>
    int iters_used = 0;
    bool converged = false;
    double epsilon = 0.0;     // the absolute epsilon actually used
};

// C[i][j] = |a_i - b_j|^2
Mat pairwise_cost(const PointMat& a, const PointMat& b);

// Log-domain Sinkhorn-Knopp for uniform marginals. Non-convergence inside
// max_iters is reported through the flag, never thrown; NaN anywhere is a
// NumericError.
TransportResult sinkhorn(const Mat& cost, const SinkhornOptions& opts);
TransportResult sinkhorn_distance(const PointMat& a, const PointMat& b,
                                  const SinkhornOptions& opts = {});

// Exact uniform OT between equal-size clouds (|A| = |B| <= 10): assignment
// cost / |A|, via O(n^3) augmenting-path matching.
double exact_ot_bruteforce(const PointMat& a, const PointMat& b);

// Test oracle: exhaustive permutation minimum (n <= 8).
double exact_ot_enumeration(const PointMat& a, const PointMat& b);

// Min-cost perfect matching value of a square cost matrix.
double assignment_cost(const Mat& cost);

}  // namespace ndno::ot
