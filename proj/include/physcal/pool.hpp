#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace physcal {

// Finite discretization of the design space: argmax candidates, integration
// nodes and safe-region masks all index into it.
struct CandidatePool {
    std::uint64_t id = 0;
    Eigen::MatrixXd points;  // D x m

    Eigen::Index size() const { return points.cols(); }
    Eigen::Index dim() const { return points.rows(); }
};

}  // namespace physcal
