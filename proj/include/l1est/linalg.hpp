#pragma once

#include <algorithm>
#include <vector>

#include <Eigen/Dense>

namespace l1est {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

namespace linalg {

/// Numerical rank: singular values above rel_tol * sigma_max.
inline int numerical_rank(const Mat& a, double rel_tol = 1e-8)
{
    if (a.rows() == 0 || a.cols() == 0) return 0;
    Eigen::JacobiSVD<Mat> svd(a);
    const Vec& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > rel_tol * s(0)) ++r;
    }
    return r;
}

/// Orthonormal basis of ker(a), one vector per column.
inline Mat kernel_basis(const Mat& a, double rel_tol = 1e-10)
{
    const Eigen::Index q = a.cols();
    if (a.rows() == 0) return Mat::Identity(q, q);
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
    const Vec& s = svd.singularValues();
    const double scale = std::max(1.0, s.size() > 0 ? s(0) : 0.0);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > rel_tol * scale) ++r;
    }
    return svd.matrixV().rightCols(q - r);
}

inline Mat block_diag(const Mat& block, int copies)
{
    Mat out = Mat::Zero(block.rows() * copies, block.cols() * copies);
    for (int c = 0; c < copies; ++c) {
        out.block(c * block.rows(), c * block.cols(), block.rows(), block.cols()) = block;
    }
    return out;
}

inline Mat block_diag(const std::vector<Mat>& blocks)
{
    Eigen::Index rows = 0, cols = 0;
    for (const auto& b : blocks) {
        rows += b.rows();
        cols += b.cols();
    }
    Mat out = Mat::Zero(rows, cols);
    Eigen::Index r = 0, c = 0;
    for (const auto& b : blocks) {
        out.block(r, c, b.rows(), b.cols()) = b;
        r += b.rows();
        c += b.cols();
    }
    return out;
}

inline Mat kron(const Mat& a, const Mat& b)
{
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

inline double soft_threshold(double x, double level)
{
    if (x > level) return x - level;
    if (x < -level) return x + level;
    return 0.0;
}

} // namespace linalg
} // namespace l1est
