#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace drivemon {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Read-only argument views; bind dense matrices and column blocks alike
// without copying.
using MatrixRef = Eigen::Ref<const Matrix>;
using VectorRef = Eigen::Ref<const Vector>;

enum class Label : std::uint8_t { healthy = 0, anomalous = 1 };

// One training/evaluation sample: a normalized feature window paired with a
// normalized scalar target. The label is carried for evaluation only and is
// never visible to any training path.
struct Sample {
    Vector x;
    double y = 0.0;
    std::int64_t t = 0;  // arrival index
    Label label = Label::healthy;
};

}  // namespace drivemon
